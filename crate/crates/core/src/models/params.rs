use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ModelName, ModelSpec};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Model(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[S]> {
        // chunks_exact(0) panics; zero-width rows still count
        (0..self.rows).map(move |i| self.row(i))
    }
}

/// Parameter tensor families. Each is stored as a matrix whose rows are
/// indexed by entity, by relation, or (for the ER-MLP weights) by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    EntityEmbeddings,
    RelationEmbeddings,
    /// TransH hyperplane normals, one per relation.
    NormalVectors,
    /// TransR `relation_dim × entity_dim` projections, flattened row-major.
    ProjectionMatrices,
    /// TransD entity projection vectors.
    EntityProjections,
    /// TransD relation projection vectors.
    RelationProjections,
    /// SE head-side `d × d` matrices, flattened row-major.
    HeadProjections,
    /// SE tail-side `d × d` matrices, flattened row-major.
    TailProjections,
    /// RESCAL `d × d` relation matrices, flattened row-major.
    RelationMatrices,
    /// ER-MLP hidden layer, `hidden_dim` rows of length `2·d + relation_dim`.
    HiddenWeights,
    /// ER-MLP hidden bias, one row of length `hidden_dim`.
    HiddenBias,
    /// ER-MLP output weights, one row of length `hidden_dim`.
    OutputWeights,
}

/// What a family's row index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowIndex {
    Entity,
    Relation,
    Position,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::EntityEmbeddings,
        Family::RelationEmbeddings,
        Family::NormalVectors,
        Family::ProjectionMatrices,
        Family::EntityProjections,
        Family::RelationProjections,
        Family::HeadProjections,
        Family::TailProjections,
        Family::RelationMatrices,
        Family::HiddenWeights,
        Family::HiddenBias,
        Family::OutputWeights,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::EntityEmbeddings => "entity_embeddings",
            Family::RelationEmbeddings => "relation_embeddings",
            Family::NormalVectors => "normal_vectors",
            Family::ProjectionMatrices => "projection_matrices",
            Family::EntityProjections => "entity_projections",
            Family::RelationProjections => "relation_projections",
            Family::HeadProjections => "head_projections",
            Family::TailProjections => "tail_projections",
            Family::RelationMatrices => "relation_matrices",
            Family::HiddenWeights => "hidden_weights",
            Family::HiddenBias => "hidden_bias",
            Family::OutputWeights => "output_weights",
        }
    }

    /// Stable one-byte tag used by the binary model format.
    pub fn tag(self) -> u8 {
        Family::ALL.iter().position(|&f| f == self).unwrap() as u8
    }

    pub fn from_tag(tag: u8) -> Option<Family> {
        Family::ALL.get(tag as usize).copied()
    }

    pub fn row_index(self) -> RowIndex {
        match self {
            Family::EntityEmbeddings | Family::EntityProjections => RowIndex::Entity,
            Family::HiddenWeights | Family::HiddenBias | Family::OutputWeights => {
                RowIndex::Position
            }
            _ => RowIndex::Relation,
        }
    }
}

/// `(family, rows, cols)` for every tensor a model owns, in init order.
pub(crate) fn layout(
    spec: &ModelSpec,
    num_entities: usize,
    num_relations: usize,
) -> Vec<(Family, usize, usize)> {
    let (d, k, h) = (spec.entity_dim, spec.relation_dim, spec.hidden_dim);
    let (ne, nr) = (num_entities, num_relations);
    let ent = (Family::EntityEmbeddings, ne, d);
    let rel = (Family::RelationEmbeddings, nr, k);
    match spec.name {
        ModelName::TransE | ModelName::DistMult => vec![ent, rel],
        ModelName::TransH => vec![ent, rel, (Family::NormalVectors, nr, d)],
        ModelName::TransR => vec![ent, rel, (Family::ProjectionMatrices, nr, k * d)],
        ModelName::TransD => vec![
            ent,
            rel,
            (Family::EntityProjections, ne, d),
            (Family::RelationProjections, nr, k),
        ],
        ModelName::Um => vec![ent],
        ModelName::Se => vec![
            ent,
            (Family::HeadProjections, nr, d * d),
            (Family::TailProjections, nr, d * d),
        ],
        ModelName::Rescal => vec![ent, (Family::RelationMatrices, nr, d * d)],
        ModelName::ErMlp => vec![
            ent,
            rel,
            (Family::HiddenWeights, h, 2 * d + k),
            (Family::HiddenBias, 1, h),
            (Family::OutputWeights, 1, h),
        ],
    }
}

/// All trainable tensors of one model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    spec: ModelSpec,
    num_entities: usize,
    num_relations: usize,
    tensors: BTreeMap<Family, Matrix<S>>,
}

impl<S: Scalar> ModelParams<S> {
    /// Assembles parameters, checking that the tensor set matches the model layout.
    pub fn from_tensors(
        spec: ModelSpec,
        num_entities: usize,
        num_relations: usize,
        tensors: BTreeMap<Family, Matrix<S>>,
    ) -> Result<Self> {
        let expected = layout(&spec, num_entities, num_relations);
        if tensors.len() != expected.len() {
            return Err(Error::Model(format!(
                "{} expects {} tensors, got {}",
                spec.name,
                expected.len(),
                tensors.len()
            )));
        }
        for (family, rows, cols) in expected {
            let m = tensors.get(&family).ok_or_else(|| {
                Error::Model(format!("{} is missing tensor {}", spec.name, family.as_str()))
            })?;
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::Model(format!(
                    "tensor {} has shape {}x{}, expected {rows}x{cols}",
                    family.as_str(),
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(ModelParams {
            spec,
            num_entities,
            num_relations,
            tensors,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn tensor(&self, family: Family) -> Option<&Matrix<S>> {
        self.tensors.get(&family)
    }

    pub fn tensor_mut(&mut self, family: Family) -> Option<&mut Matrix<S>> {
        self.tensors.get_mut(&family)
    }

    pub fn tensors(&self) -> impl Iterator<Item = (Family, &Matrix<S>)> {
        self.tensors.iter().map(|(&f, m)| (f, m))
    }

    /// Internal accessor for families guaranteed by the layout.
    pub(crate) fn t(&self, family: Family) -> &Matrix<S> {
        &self.tensors[&family]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors
            .values()
            .all(|m| m.as_slice().iter().all(|x| x.is_finite()))
    }

    pub(crate) fn sgd_step(&mut self, grad: &super::Gradient<S>, learning_rate: S) {
        for (key, g) in grad.iter() {
            let row = self
                .tensors
                .get_mut(&key.family)
                .expect("gradient family belongs to model")
                .row_mut(key.row);
            for (p, &gi) in row.iter_mut().zip(g) {
                *p -= learning_rate * gi;
            }
        }
    }
}

/// Initialization knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitOptions {
    /// Scale of the `[−0.1, 0.1]` noise added to identity-initialized matrices.
    pub matrix_noise: f64,
}

impl Default for InitOptions {
    fn default() -> Self {
        InitOptions { matrix_noise: 1.0 }
    }
}

/// Seeded initialization with the default options.
pub fn init_params<S: Scalar>(
    spec: ModelSpec,
    num_entities: usize,
    num_relations: usize,
    seed: u64,
) -> Result<ModelParams<S>> {
    init_params_with(spec, num_entities, num_relations, seed, InitOptions::default())
}

/// Seeded initialization.
///
/// * embedding and projection-vector rows: `U[−6/√n, 6/√n]`, `n` the row length
/// * relation embeddings and TransH normals: additionally L2-normalized
/// * TransR / SE / RESCAL matrices: identity plus `U[−0.1, 0.1] · matrix_noise`
/// * ER-MLP weights and bias: `U[−1/√fan_in, 1/√fan_in]`
pub fn init_params_with<S: Scalar>(
    spec: ModelSpec,
    num_entities: usize,
    num_relations: usize,
    seed: u64,
    options: InitOptions,
) -> Result<ModelParams<S>> {
    if num_entities == 0 || num_relations == 0 {
        return Err(Error::Model(format!(
            "need at least one entity and one relation, got {num_entities} and {num_relations}"
        )));
    }
    if spec.entity_dim == 0 || spec.relation_dim == 0 || spec.hidden_dim == 0 {
        return Err(Error::Model("dimensions must be positive".into()));
    }
    let mut rng = rng::stream(seed, Stream::Init);
    let mut uniform = |bound: f64| -> S {
        if bound == 0.0 {
            S::zero()
        } else {
            S::lit(rng.random_range(-bound..=bound))
        }
    };

    let mut tensors = BTreeMap::new();
    for (family, rows, cols) in layout(&spec, num_entities, num_relations) {
        let mut m = Matrix::zeros(rows, cols);
        match family {
            Family::ProjectionMatrices
            | Family::HeadProjections
            | Family::TailProjections
            | Family::RelationMatrices => {
                let (out_dim, in_dim) = match family {
                    Family::ProjectionMatrices => (spec.relation_dim, spec.entity_dim),
                    _ => (spec.entity_dim, spec.entity_dim),
                };
                for r in 0..rows {
                    let row = m.row_mut(r);
                    for i in 0..out_dim {
                        for j in 0..in_dim {
                            let eye = if i == j { S::one() } else { S::zero() };
                            row[i * in_dim + j] = eye + uniform(0.1 * options.matrix_noise);
                        }
                    }
                }
            }
            Family::HiddenWeights | Family::HiddenBias => {
                let bound = 1.0 / ((2 * spec.entity_dim + spec.relation_dim) as f64).sqrt();
                m.as_mut_slice().iter_mut().for_each(|x| *x = uniform(bound));
            }
            Family::OutputWeights => {
                let bound = 1.0 / (spec.hidden_dim as f64).sqrt();
                m.as_mut_slice().iter_mut().for_each(|x| *x = uniform(bound));
            }
            _ => {
                let bound = 6.0 / (cols as f64).sqrt();
                m.as_mut_slice().iter_mut().for_each(|x| *x = uniform(bound));
                if matches!(family, Family::RelationEmbeddings | Family::NormalVectors) {
                    for r in 0..rows {
                        super::constraints::normalize(m.row_mut(r));
                    }
                }
            }
        }
        tensors.insert(family, m);
    }
    ModelParams::from_tensors(spec, num_entities, num_relations, tensors)
}
