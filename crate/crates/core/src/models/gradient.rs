use std::collections::BTreeMap;

use super::params::Family;
use crate::scalar::Scalar;

/// Identifies one row of one parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamKey {
    pub family: Family,
    pub row: usize,
}

/// Sparse gradient: only rows touched by the triples involved are present.
///
/// Rows are kept in key order so reductions and updates run in a fixed
/// order regardless of how the gradient was assembled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradient<S> {
    rows: BTreeMap<ParamKey, Vec<S>>,
}

impl<S: Scalar> Gradient<S> {
    pub fn new() -> Self {
        Gradient {
            rows: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, family: Family, row: usize) -> Option<&[S]> {
        self.rows.get(&ParamKey { family, row }).map(Vec::as_slice)
    }

    /// Mutable accumulator for a row of width `width`, zero-initialised.
    pub fn row_mut(&mut self, family: Family, row: usize, width: usize) -> &mut [S] {
        let r = self
            .rows
            .entry(ParamKey { family, row })
            .or_insert_with(|| vec![S::zero(); width]);
        debug_assert_eq!(r.len(), width);
        r
    }

    /// `row += scale · values`
    pub fn add_scaled(&mut self, family: Family, row: usize, values: &[S], scale: S) {
        let acc = self.row_mut(family, row, values.len());
        for (a, &v) in acc.iter_mut().zip(values) {
            *a += scale * v;
        }
    }

    /// Adds `other` into `self`, row by row.
    pub fn merge(&mut self, other: &Gradient<S>) {
        for (k, v) in &other.rows {
            self.add_scaled(k.family, k.row, v, S::one());
        }
    }

    pub fn scale(&mut self, factor: S) {
        for v in self.rows.values_mut() {
            for x in v.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParamKey, &[S])> {
        self.rows.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn is_finite(&self) -> bool {
        self.rows.values().flatten().all(|x| x.is_finite())
    }
}
