//! Rank-based link prediction metrics (mean rank, hits@k; raw and filtered).
//!
//! For a test triple and a side, every entity is substituted on that side
//! and all candidates are scored. The rank of the true triple is
//!
//! ```text
//! rank = 1 + #{candidates scoring strictly higher} + ½ · #{other candidates scoring equal}
//! ```
//!
//! i.e. the mean of the optimistic and pessimistic rank. A model that gives
//! every candidate the same score therefore lands in the middle, not at 1.
//! The filtered rank is computed the same way after dropping candidates that
//! are known true triples; the true triple itself is never dropped. Head and
//! tail ranks of all test triples are pooled into one list before averaging.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::TripleIds;
use crate::models::KgeModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Head,
    Tail,
}

impl Side {
    fn substitute(self, t: TripleIds, entity: usize) -> TripleIds {
        match self {
            Side::Head => TripleIds { head: entity, ..t },
            Side::Tail => TripleIds { tail: entity, ..t },
        }
    }

    fn entity(self, t: TripleIds) -> usize {
        match self {
            Side::Head => t.head,
            Side::Tail => t.tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub triple: TripleIds,
    pub side: Side,
    pub raw_rank: f64,
    pub filtered_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub mean_rank_raw: f64,
    pub mean_rank_filtered: f64,
    pub hits_at_k_raw: BTreeMap<usize, f64>,
    pub hits_at_k_filtered: BTreeMap<usize, f64>,
    pub per_triple_ranks: Vec<RankEntry>,
}

impl RankMetrics {
    /// Aggregates per-side ranks. `entries` must be non-empty.
    pub fn from_entries(entries: Vec<RankEntry>, ks: &[usize]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Format("no ranks to aggregate".into()));
        }
        let n = entries.len() as f64;
        let mean = |f: fn(&RankEntry) -> f64| entries.iter().map(f).sum::<f64>() / n;
        let hits = |f: fn(&RankEntry) -> f64| -> BTreeMap<usize, f64> {
            ks.iter()
                .map(|&k| {
                    let c = entries.iter().filter(|e| f(e) <= k as f64).count();
                    (k, c as f64 / n)
                })
                .collect()
        };
        Ok(RankMetrics {
            mean_rank_raw: mean(|e| e.raw_rank),
            mean_rank_filtered: mean(|e| e.filtered_rank),
            hits_at_k_raw: hits(|e| e.raw_rank),
            hits_at_k_filtered: hits(|e| e.filtered_rank),
            per_triple_ranks: entries,
        })
    }

    pub fn hits_at(&self, k: usize, filtered: bool) -> Option<f64> {
        if filtered {
            self.hits_at_k_filtered.get(&k).copied()
        } else {
            self.hits_at_k_raw.get(&k).copied()
        }
    }
}

/// Raw and filtered rank of `triple` among all substitutions on `side`.
pub fn rank_one<S: Scalar, M: KgeModel<S> + ?Sized>(
    model: &M,
    triple: TripleIds,
    side: Side,
    filter: &HashSet<TripleIds>,
) -> Result<(f64, f64)> {
    let n = model.num_entities();
    let candidates: Vec<TripleIds> = (0..n).map(|e| side.substitute(triple, e)).collect();
    let scores = model.score_batch(&candidates)?;
    let target = side.entity(triple);
    let true_score = *scores.get(target).ok_or(Error::IdOutOfRange {
        kind: "entity",
        id: target,
        count: n,
    })?;
    let (mut raw_hi, mut raw_eq, mut filt_hi, mut filt_eq) = (0usize, 0usize, 0usize, 0usize);
    for (e, (&s, c)) in scores.iter().zip(&candidates).enumerate() {
        if e == target {
            continue;
        }
        let (hi, eq) = (s > true_score, s == true_score);
        raw_hi += hi as usize;
        raw_eq += eq as usize;
        if !filter.contains(c) {
            filt_hi += hi as usize;
            filt_eq += eq as usize;
        }
    }
    let rank = |hi: usize, eq: usize| 1.0 + hi as f64 + 0.5 * eq as f64;
    Ok((rank(raw_hi, raw_eq), rank(filt_hi, filt_eq)))
}

/// Ranks both sides of every test triple.
///
/// `known` is the filter set: all triples known to be true (train and test,
/// plus validation when there is one). Runs in parallel over test triples;
/// entries keep test order, head before tail.
pub fn evaluate<S: Scalar, M: KgeModel<S> + ?Sized>(
    model: &M,
    test: &[TripleIds],
    known: &HashSet<TripleIds>,
    ks: &[usize],
) -> Result<RankMetrics> {
    if test.is_empty() {
        return Err(Error::Format("empty test set".into()));
    }
    let per_triple: Vec<[RankEntry; 2]> = test
        .par_iter()
        .map(|&t| {
            let entry = |side| -> Result<RankEntry> {
                let (raw_rank, filtered_rank) = rank_one(model, t, side, known)?;
                Ok(RankEntry {
                    triple: t,
                    side,
                    raw_rank,
                    filtered_rank,
                })
            };
            Ok([entry(Side::Head)?, entry(Side::Tail)?])
        })
        .collect::<Result<_>>()?;
    RankMetrics::from_entries(per_triple.into_iter().flatten().collect(), ks)
}

/// Union of triple lists as a filter set.
pub fn known_set<'a, I>(parts: I) -> HashSet<TripleIds>
where
    I: IntoIterator<Item = &'a [TripleIds]>,
{
    parts.into_iter().flatten().copied().collect()
}
