//! Forward scores and their analytic gradients.
//!
//! Each model has one routine that computes the score and, when given an
//! upstream derivative `∂L/∂f`, accumulates `∂L/∂f · ∂f/∂θ` into a sparse
//! gradient. Scoring and differentiation therefore share one code path per
//! model; the finite-difference tests check them against each other.

use super::gradient::Gradient;
use super::params::{Family, ModelParams};
use super::{LossFn, ModelName, Norm};
use crate::error::{Error, Result};
use crate::kg::{check_range, TripleIds};
use crate::scalar::{dot, l2_norm, sigmoid, signum0, Scalar};
use crate::training::{bce_loss, margin_loss};

type Back<'a, S> = Option<(S, &'a mut Gradient<S>)>;

/// Distance `‖v‖_p` and its derivative with respect to `v` (zero where the
/// norm is not differentiable).
fn distance<S: Scalar>(v: &[S], norm: Norm) -> (S, Vec<S>) {
    match norm {
        Norm::L1 => (
            v.iter().map(|x| x.abs()).sum(),
            v.iter().map(|&x| signum0(x)).collect(),
        ),
        Norm::L2 => {
            let n = l2_norm(v);
            let g = if n > S::zero() {
                v.iter().map(|&x| x / n).collect()
            } else {
                vec![S::zero(); v.len()]
            };
            (n, g)
        }
    }
}

/// `M x` for row-major `M` with `rows × cols`.
fn matvec<S: Scalar>(m: &[S], rows: usize, cols: usize, x: &[S]) -> Vec<S> {
    (0..rows).map(|i| dot(&m[i * cols..(i + 1) * cols], x)).collect()
}

/// `Mᵀ y` for row-major `M` with `rows × cols`.
fn matvec_t<S: Scalar>(m: &[S], rows: usize, cols: usize, y: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); cols];
    for i in 0..rows {
        let yi = y[i];
        for (o, &mij) in out.iter_mut().zip(&m[i * cols..(i + 1) * cols]) {
            *o += mij * yi;
        }
    }
    out
}

/// Row-major outer product `a bᵀ`, scaled.
fn outer<S: Scalar>(a: &[S], b: &[S], scale: S) -> Vec<S> {
    a.iter()
        .flat_map(|&ai| b.iter().map(move |&bj| scale * ai * bj))
        .collect()
}

fn scaled<S: Scalar>(v: &[S], s: S) -> Vec<S> {
    v.iter().map(|&x| x * s).collect()
}

impl<S: Scalar> ModelParams<S> {
    pub fn check_triple(&self, t: TripleIds) -> Result<()> {
        check_range("entity", t.head, self.num_entities())?;
        check_range("relation", t.relation, self.num_relations())?;
        check_range("entity", t.tail, self.num_entities())
    }

    /// Plausibility of `t` (higher is more plausible).
    pub fn score(&self, t: TripleIds) -> Result<S> {
        self.check_triple(t)?;
        Ok(self.forward(t, None))
    }

    pub(crate) fn score_unchecked(&self, t: TripleIds) -> S {
        self.forward(t, None)
    }

    /// Adds `upstream · ∂f(t)/∂θ` to `grad` and returns `f(t)`.
    pub(crate) fn backprop(&self, t: TripleIds, upstream: S, grad: &mut Gradient<S>) -> S {
        self.forward(t, Some((upstream, grad)))
    }

    fn forward(&self, t: TripleIds, back: Back<'_, S>) -> S {
        match self.spec().name {
            ModelName::TransE => self.trans_e(t, back),
            ModelName::Um => self.um(t, back),
            ModelName::Se => self.se(t, back),
            ModelName::TransH => self.trans_h(t, back),
            ModelName::TransR => self.trans_r(t, back),
            ModelName::TransD => self.trans_d(t, back),
            ModelName::Rescal => self.rescal(t, back),
            ModelName::DistMult => self.dist_mult(t, back),
            ModelName::ErMlp => self.er_mlp(t, back),
        }
    }

    fn trans_e(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let e = self.t(Family::EntityEmbeddings);
        let (h, r, tl) = (
            e.row(t.head),
            self.t(Family::RelationEmbeddings).row(t.relation),
            e.row(t.tail),
        );
        let v: Vec<S> = (0..h.len()).map(|i| h[i] + r[i] - tl[i]).collect();
        let (dist, dd) = distance(&v, self.spec().norm);
        if let Some((up, g)) = back {
            g.add_scaled(Family::EntityEmbeddings, t.head, &dd, -up);
            g.add_scaled(Family::RelationEmbeddings, t.relation, &dd, -up);
            g.add_scaled(Family::EntityEmbeddings, t.tail, &dd, up);
        }
        -dist
    }

    fn um(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let e = self.t(Family::EntityEmbeddings);
        let v: Vec<S> = e.row(t.head).iter().zip(e.row(t.tail)).map(|(&a, &b)| a - b).collect();
        if let Some((up, g)) = back {
            let two = S::lit(2.0);
            g.add_scaled(Family::EntityEmbeddings, t.head, &v, -two * up);
            g.add_scaled(Family::EntityEmbeddings, t.tail, &v, two * up);
        }
        -dot(&v, &v)
    }

    fn se(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let d = self.spec().entity_dim;
        let e = self.t(Family::EntityEmbeddings);
        let (h, tl) = (e.row(t.head), e.row(t.tail));
        let m1 = self.t(Family::HeadProjections).row(t.relation);
        let m2 = self.t(Family::TailProjections).row(t.relation);
        let a = matvec(m1, d, d, h);
        let b = matvec(m2, d, d, tl);
        let v: Vec<S> = a.iter().zip(&b).map(|(&x, &y)| x - y).collect();
        let (dist, dd) = distance(&v, self.spec().norm);
        if let Some((up, g)) = back {
            // ∂f/∂v = −dd
            let gv = scaled(&dd, -up);
            g.add_scaled(Family::HeadProjections, t.relation, &outer(&gv, h, S::one()), S::one());
            g.add_scaled(Family::EntityEmbeddings, t.head, &matvec_t(m1, d, d, &gv), S::one());
            g.add_scaled(Family::TailProjections, t.relation, &outer(&gv, tl, S::one()), -S::one());
            g.add_scaled(Family::EntityEmbeddings, t.tail, &matvec_t(m2, d, d, &gv), -S::one());
        }
        -dist
    }

    fn trans_h(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let e = self.t(Family::EntityEmbeddings);
        let w = self.t(Family::NormalVectors).row(t.relation);
        let dr = self.t(Family::RelationEmbeddings).row(t.relation);
        let v: Vec<S> = e.row(t.head).iter().zip(e.row(t.tail)).map(|(&a, &b)| a - b).collect();
        let wv = dot(w, &v);
        let u: Vec<S> = (0..v.len()).map(|i| v[i] - wv * w[i] + dr[i]).collect();
        if let Some((up, gr)) = back {
            let g = scaled(&u, S::lit(-2.0) * up);
            let wg = dot(w, &g);
            let gh: Vec<S> = (0..g.len()).map(|i| g[i] - wg * w[i]).collect();
            let gw: Vec<S> = (0..g.len()).map(|i| -(wv * g[i] + wg * v[i])).collect();
            gr.add_scaled(Family::RelationEmbeddings, t.relation, &g, S::one());
            gr.add_scaled(Family::EntityEmbeddings, t.head, &gh, S::one());
            gr.add_scaled(Family::EntityEmbeddings, t.tail, &gh, -S::one());
            gr.add_scaled(Family::NormalVectors, t.relation, &gw, S::one());
        }
        -dot(&u, &u)
    }

    fn trans_r(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let (d, k) = (self.spec().entity_dim, self.spec().relation_dim);
        let e = self.t(Family::EntityEmbeddings);
        let m = self.t(Family::ProjectionMatrices).row(t.relation);
        let r = self.t(Family::RelationEmbeddings).row(t.relation);
        let v: Vec<S> = e.row(t.head).iter().zip(e.row(t.tail)).map(|(&a, &b)| a - b).collect();
        let mut u = matvec(m, k, d, &v);
        u.iter_mut().zip(r).for_each(|(ui, &ri)| *ui += ri);
        if let Some((up, gr)) = back {
            let g = scaled(&u, S::lit(-2.0) * up);
            let mtg = matvec_t(m, k, d, &g);
            gr.add_scaled(Family::RelationEmbeddings, t.relation, &g, S::one());
            gr.add_scaled(Family::ProjectionMatrices, t.relation, &outer(&g, &v, S::one()), S::one());
            gr.add_scaled(Family::EntityEmbeddings, t.head, &mtg, S::one());
            gr.add_scaled(Family::EntityEmbeddings, t.tail, &mtg, -S::one());
        }
        -dot(&u, &u)
    }

    fn trans_d(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let (d, k) = (self.spec().entity_dim, self.spec().relation_dim);
        let shared = d.min(k);
        let e = self.t(Family::EntityEmbeddings);
        let ep = self.t(Family::EntityProjections);
        let (h, tl) = (e.row(t.head), e.row(t.tail));
        let (hp, tp) = (ep.row(t.head), ep.row(t.tail));
        let r = self.t(Family::RelationEmbeddings).row(t.relation);
        let rp = self.t(Family::RelationProjections).row(t.relation);
        let (sh, st) = (dot(hp, h), dot(tp, tl));
        // u = I(h − t) + r_p (h_pᵀh − t_pᵀt) + r, with I the k×d rectangular identity
        let u: Vec<S> = (0..k)
            .map(|i| {
                let id = if i < shared { h[i] - tl[i] } else { S::zero() };
                id + rp[i] * (sh - st) + r[i]
            })
            .collect();
        if let Some((up, gr)) = back {
            let g = scaled(&u, S::lit(-2.0) * up);
            let sigma = dot(rp, &g);
            let it_g: Vec<S> = (0..d).map(|j| if j < shared { g[j] } else { S::zero() }).collect();
            let gh: Vec<S> = (0..d).map(|j| it_g[j] + sigma * hp[j]).collect();
            let gt: Vec<S> = (0..d).map(|j| -it_g[j] - sigma * tp[j]).collect();
            gr.add_scaled(Family::RelationEmbeddings, t.relation, &g, S::one());
            gr.add_scaled(Family::RelationProjections, t.relation, &g, sh - st);
            gr.add_scaled(Family::EntityEmbeddings, t.head, &gh, S::one());
            gr.add_scaled(Family::EntityEmbeddings, t.tail, &gt, S::one());
            gr.add_scaled(Family::EntityProjections, t.head, h, sigma);
            gr.add_scaled(Family::EntityProjections, t.tail, tl, -sigma);
        }
        -dot(&u, &u)
    }

    fn rescal(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let d = self.spec().entity_dim;
        let e = self.t(Family::EntityEmbeddings);
        let (h, tl) = (e.row(t.head), e.row(t.tail));
        let w = self.t(Family::RelationMatrices).row(t.relation);
        let wt = matvec(w, d, d, tl);
        if let Some((up, g)) = back {
            g.add_scaled(Family::EntityEmbeddings, t.head, &wt, up);
            g.add_scaled(Family::EntityEmbeddings, t.tail, &matvec_t(w, d, d, h), up);
            g.add_scaled(Family::RelationMatrices, t.relation, &outer(h, tl, up), S::one());
        }
        dot(h, &wt)
    }

    fn dist_mult(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let e = self.t(Family::EntityEmbeddings);
        let (h, tl) = (e.row(t.head), e.row(t.tail));
        let r = self.t(Family::RelationEmbeddings).row(t.relation);
        if let Some((up, g)) = back {
            let n = h.len();
            let gh: Vec<S> = (0..n).map(|i| r[i] * tl[i]).collect();
            let grel: Vec<S> = (0..n).map(|i| h[i] * tl[i]).collect();
            let gt: Vec<S> = (0..n).map(|i| h[i] * r[i]).collect();
            g.add_scaled(Family::EntityEmbeddings, t.head, &gh, up);
            g.add_scaled(Family::RelationEmbeddings, t.relation, &grel, up);
            g.add_scaled(Family::EntityEmbeddings, t.tail, &gt, up);
        }
        (0..h.len()).map(|i| h[i] * r[i] * tl[i]).sum()
    }

    fn er_mlp(&self, t: TripleIds, back: Back<'_, S>) -> S {
        let (d, k) = (self.spec().entity_dim, self.spec().relation_dim);
        let hidden = self.t(Family::HiddenWeights);
        let bias = self.t(Family::HiddenBias).row(0);
        let out = self.t(Family::OutputWeights).row(0);
        let e = self.t(Family::EntityEmbeddings);
        let x: Vec<S> = e
            .row(t.head)
            .iter()
            .chain(self.t(Family::RelationEmbeddings).row(t.relation))
            .chain(e.row(t.tail))
            .copied()
            .collect();
        let width = x.len();
        let act: Vec<S> = (0..hidden.rows())
            .map(|j| (dot(hidden.row(j), &x) + bias[j]).tanh())
            .collect();
        if let Some((up, g)) = back {
            let delta: Vec<S> = act
                .iter()
                .zip(out)
                .map(|(&a, &w)| up * w * (S::one() - a * a))
                .collect();
            g.add_scaled(Family::OutputWeights, 0, &act, up);
            g.add_scaled(Family::HiddenBias, 0, &delta, S::one());
            for (j, &dj) in delta.iter().enumerate() {
                g.add_scaled(Family::HiddenWeights, j, &x, dj);
            }
            let gx = matvec_t(hidden.as_slice(), hidden.rows(), width, &delta);
            g.add_scaled(Family::EntityEmbeddings, t.head, &gx[..d], S::one());
            g.add_scaled(Family::RelationEmbeddings, t.relation, &gx[d..d + k], S::one());
            g.add_scaled(Family::EntityEmbeddings, t.tail, &gx[d + k..], S::one());
        }
        dot(out, &act)
    }

    /// Loss of one (positive, negative) pair.
    pub fn pair_loss(&self, pos: TripleIds, neg: TripleIds, loss: LossFn<S>) -> Result<S> {
        self.check_triple(pos)?;
        self.check_triple(neg)?;
        let (fp, fneg) = (self.score_unchecked(pos), self.score_unchecked(neg));
        Ok(match loss {
            LossFn::MarginRanking { margin } => margin_loss(fp, fneg, margin),
            LossFn::BinaryCrossEntropy => bce_loss(fp, true) + bce_loss(fneg, false),
        })
    }

    /// Gradient of the pair loss with respect to the rows `pos` and `neg`
    /// touch. Empty when the margin is satisfied.
    pub fn grad_loss(&self, pos: TripleIds, neg: TripleIds, loss: LossFn<S>) -> Result<Gradient<S>> {
        self.check_triple(pos)?;
        self.check_triple(neg)?;
        let mut g = Gradient::new();
        self.accumulate_pair(pos, neg, loss, &mut g);
        Ok(g)
    }

    /// Accumulates the pair gradient into `grad` and returns the pair loss.
    fn accumulate_pair(
        &self,
        pos: TripleIds,
        neg: TripleIds,
        loss: LossFn<S>,
        grad: &mut Gradient<S>,
    ) -> S {
        match loss {
            LossFn::MarginRanking { margin } => {
                let (fp, fneg) = (self.score_unchecked(pos), self.score_unchecked(neg));
                let l = margin_loss(fp, fneg, margin);
                if l > S::zero() {
                    self.backprop(pos, -S::one(), grad);
                    self.backprop(neg, S::one(), grad);
                }
                l
            }
            LossFn::BinaryCrossEntropy => {
                let (fp, fneg) = (self.score_unchecked(pos), self.score_unchecked(neg));
                // d/df softplus(−f) = σ(f) − 1 ; d/df softplus(f) = σ(f)
                self.backprop(pos, sigmoid(fp) - S::one(), grad);
                self.backprop(neg, sigmoid(fneg), grad);
                bce_loss(fp, true) + bce_loss(fneg, false)
            }
        }
    }

    pub(crate) fn batch_loss_and_grad(
        &self,
        positives: &[TripleIds],
        negatives: &[TripleIds],
        loss: LossFn<S>,
    ) -> Result<(S, Gradient<S>)> {
        if positives.len() != negatives.len() {
            return Err(Error::Model(format!(
                "{} positives but {} negatives",
                positives.len(),
                negatives.len()
            )));
        }
        let mut grad = Gradient::new();
        if positives.is_empty() {
            return Ok((S::zero(), grad));
        }
        let mut total = S::zero();
        for (&p, &n) in positives.iter().zip(negatives) {
            self.check_triple(p)?;
            self.check_triple(n)?;
            total += self.accumulate_pair(p, n, loss, &mut grad);
        }
        let inv = S::one() / S::lit(positives.len() as f64);
        grad.scale(inv);
        Ok((total * inv, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{init_params, Matrix, ModelSpec};
    use std::collections::BTreeMap;

    fn params(spec: ModelSpec, ne: usize, nr: usize, tensors: Vec<(Family, Vec<f64>)>) -> ModelParams<f64> {
        let layout = crate::models::params::layout(&spec, ne, nr);
        let mut map = BTreeMap::new();
        for (family, data) in tensors {
            let (_, rows, cols) = layout.iter().find(|l| l.0 == family).copied().unwrap();
            map.insert(family, Matrix::from_vec(rows, cols, data).unwrap());
        }
        ModelParams::from_tensors(spec, ne, nr, map).unwrap()
    }

    const T: TripleIds = TripleIds::new(0, 0, 1);

    #[test]
    fn trans_e_exact_translation_scores_zero() {
        let spec = ModelSpec::new(ModelName::TransE, 2, 2, 2, Norm::L1);
        let p = params(
            spec,
            2,
            1,
            vec![
                (Family::EntityEmbeddings, vec![1.0, 0.0, 1.0, 1.0]),
                (Family::RelationEmbeddings, vec![0.0, 1.0]),
            ],
        );
        assert_eq!(p.score(T).unwrap(), 0.0);
        // the reverse direction is strictly less plausible
        assert!(p.score(TripleIds::new(1, 0, 0)).unwrap() < 0.0);
    }

    #[test]
    fn dist_mult_all_ones() {
        let p = params(
            ModelSpec::simple(ModelName::DistMult, 2),
            2,
            1,
            vec![
                (Family::EntityEmbeddings, vec![1.0; 4]),
                (Family::RelationEmbeddings, vec![1.0; 2]),
            ],
        );
        assert_eq!(p.score(T).unwrap(), 2.0);
    }

    #[test]
    fn rescal_identity_is_dot_product() {
        let p = params(
            ModelSpec::simple(ModelName::Rescal, 3),
            2,
            1,
            vec![
                (Family::EntityEmbeddings, vec![1.0, 2.0, 3.0, -1.0, 0.5, 2.0]),
                (Family::RelationMatrices, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            ],
        );
        assert_eq!(p.score(T).unwrap(), -1.0 + 1.0 + 6.0);
    }

    #[test]
    fn out_of_range_ids_error() {
        let p: ModelParams<f64> = init_params(ModelSpec::simple(ModelName::TransE, 3), 3, 2, 0).unwrap();
        assert!(p.score(TripleIds::new(3, 0, 0)).is_err());
        assert!(p.score(TripleIds::new(0, 2, 0)).is_err());
        assert!(p.score(TripleIds::new(0, 0, 7)).is_err());
    }

    /// TransE with the squared L2 distance, written out directly.
    fn trans_e_l2_sq(e: &[f64], r: &[f64], d: usize, t: TripleIds) -> f64 {
        -(0..d)
            .map(|i| {
                let v = e[t.head * d + i] + r[t.relation * d + i] - e[t.tail * d + i];
                v * v
            })
            .sum::<f64>()
    }

    #[test]
    fn trans_d_zero_projections_match_trans_e_l2_squared() {
        let d = 4;
        let base: ModelParams<f64> = init_params(ModelSpec::simple(ModelName::TransD, d), 5, 3, 11).unwrap();
        let mut p = base.clone();
        p.tensor_mut(Family::EntityProjections).unwrap().as_mut_slice().fill(0.0);
        p.tensor_mut(Family::RelationProjections).unwrap().as_mut_slice().fill(0.0);
        let e = p.tensor(Family::EntityEmbeddings).unwrap().as_slice().to_vec();
        let r = p.tensor(Family::RelationEmbeddings).unwrap().as_slice().to_vec();
        for h in 0..5 {
            for rel in 0..3 {
                for tl in 0..5 {
                    let t = TripleIds::new(h, rel, tl);
                    assert!((p.score(t).unwrap() - trans_e_l2_sq(&e, &r, d, t)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn trans_h_zero_normal_matches_trans_e_l2_squared() {
        let d = 4;
        let mut p: ModelParams<f64> = init_params(ModelSpec::simple(ModelName::TransH, d), 5, 3, 12).unwrap();
        p.tensor_mut(Family::NormalVectors).unwrap().as_mut_slice().fill(0.0);
        let e = p.tensor(Family::EntityEmbeddings).unwrap().as_slice().to_vec();
        let r = p.tensor(Family::RelationEmbeddings).unwrap().as_slice().to_vec();
        for h in 0..5 {
            for tl in 0..5 {
                let t = TripleIds::new(h, 1, tl);
                assert!((p.score(t).unwrap() - trans_e_l2_sq(&e, &r, d, t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distance_models_never_positive() {
        for name in [ModelName::TransE, ModelName::Um, ModelName::Se, ModelName::TransH, ModelName::TransR, ModelName::TransD] {
            for norm in [Norm::L1, Norm::L2] {
                let spec = ModelSpec::new(name, 4, 3, 4, norm);
                let p: ModelParams<f64> = init_params(spec, 5, 3, 3).unwrap();
                for h in 0..5 {
                    for r in 0..3 {
                        for tl in 0..5 {
                            assert!(p.score(TripleIds::new(h, r, tl)).unwrap() <= 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn um_self_loop_scores_zero() {
        let p: ModelParams<f64> = init_params(ModelSpec::simple(ModelName::Um, 4), 3, 1, 3).unwrap();
        assert_eq!(p.score(TripleIds::new(2, 0, 2)).unwrap(), 0.0);
    }

    #[test]
    fn inactive_margin_gives_empty_gradient() {
        let spec = ModelSpec::new(ModelName::TransE, 2, 2, 2, Norm::L1);
        let p = params(
            spec,
            3,
            1,
            vec![
                (Family::EntityEmbeddings, vec![1.0, 0.0, 1.0, 1.0, 9.0, 9.0]),
                (Family::RelationEmbeddings, vec![0.0, 1.0]),
            ],
        );
        // f_pos = 0, f_neg = −(|1-9| + |1-9|) = −16; margin 1 satisfied
        let g = p
            .grad_loss(T, TripleIds::new(0, 0, 2), LossFn::MarginRanking { margin: 1.0 })
            .unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn dist_mult_bce_gradient_symbolic() {
        // f = Σ h_i r_i t_i ; BCE label 1: ∂L/∂h_i = (σ(f) − 1) r_i t_i
        let p = params(
            ModelSpec::simple(ModelName::DistMult, 2),
            3,
            1,
            vec![
                (Family::EntityEmbeddings, vec![0.3, -0.7, 1.1, 0.4, 0.0, 0.0]),
                (Family::RelationEmbeddings, vec![0.5, 2.0]),
            ],
        );
        let f: f64 = 0.3 * 0.5 * 1.1 + -0.7 * 2.0 * 0.4;
        let s = 1.0 / (1.0 + (-f).exp());
        // negative (2,0,2) has score 0 and zero embedding; it contributes nothing to row 0
        let g = p
            .grad_loss(T, TripleIds::new(2, 0, 2), LossFn::BinaryCrossEntropy)
            .unwrap();
        let gh = g.get(Family::EntityEmbeddings, 0).unwrap();
        assert!((gh[0] - (s - 1.0) * 0.5 * 1.1).abs() < 1e-15);
        assert!((gh[1] - (s - 1.0) * 2.0 * 0.4).abs() < 1e-15);
        // untouched entity rows are absent
        assert!(g.get(Family::EntityEmbeddings, 1).is_some());
        assert_eq!(g.len(), 4);
    }

    #[test]
    fn batch_gradient_is_mean_of_pairs() {
        let p: ModelParams<f64> = init_params(ModelSpec::simple(ModelName::DistMult, 3), 4, 2, 8).unwrap();
        let pos = [TripleIds::new(0, 0, 1), TripleIds::new(2, 1, 3)];
        let neg = [TripleIds::new(3, 0, 1), TripleIds::new(2, 1, 0)];
        let loss = LossFn::BinaryCrossEntropy;
        let (l, g) = p.batch_loss_and_grad(&pos, &neg, loss).unwrap();
        let mut expected = p.grad_loss(pos[0], neg[0], loss).unwrap();
        expected.merge(&p.grad_loss(pos[1], neg[1], loss).unwrap());
        expected.scale(0.5);
        let el = (p.pair_loss(pos[0], neg[0], loss).unwrap() + p.pair_loss(pos[1], neg[1], loss).unwrap()) / 2.0;
        assert!((l - el).abs() < 1e-15);
        for ((ka, va), (kb, vb)) in g.iter().zip(expected.iter()) {
            assert_eq!(ka, kb);
            for (a, b) in va.iter().zip(vb) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
