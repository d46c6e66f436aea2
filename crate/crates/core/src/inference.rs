//! Scoring supplied triples and ranking every permutation of chosen
//! entities and relations.
//!
//! Prediction files are TSV, one candidate per line, most plausible first:
//!
//! ```text
//! head<TAB>relation<TAB>tail<TAB>score
//! ```
//!
//! Scores use six significant digits in C `%g` style (`0.5`, `-3.14159`,
//! `1.5e-07`). Equal scores are ordered by (head, relation, tail) id.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::kg::{Triple, TripleIds, Vocab};
use crate::models::KgeModel;
use crate::scalar::Scalar;

const SCORE_CHUNK: usize = 4096;

/// Scores `triples`, positionally aligned. Out-of-range ids are reported
/// with their position.
pub fn predict<S: Scalar, M: KgeModel<S> + ?Sized>(model: &M, triples: &[TripleIds]) -> Result<Vec<S>> {
    model.score_batch(triples)
}

/// Every `(h, r, t)` over the given sets in lexicographic id order, minus
/// `exclude` and, if requested, minus all `h == t` triples.
pub fn enumerate_candidates(
    entities: &BTreeSet<usize>,
    relations: &BTreeSet<usize>,
    exclude: &HashSet<TripleIds>,
    exclude_reflexive: bool,
) -> Vec<TripleIds> {
    let mut out = Vec::new();
    for &h in entities {
        for &r in relations {
            for &t in entities {
                if exclude_reflexive && h == t {
                    continue;
                }
                let c = TripleIds::new(h, r, t);
                if !exclude.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

fn by_score_desc<S: Scalar>(a: &(TripleIds, S), b: &(TripleIds, S)) -> Ordering {
    // NaN sorts last; +0 and −0 compare equal
    let key = |s: S| {
        let v = s.widen();
        if v.is_nan() {
            (1u8, 0.0)
        } else {
            (0u8, -v + 0.0)
        }
    };
    let (ka, kb) = (key(a.1), key(b.1));
    ka.0.cmp(&kb.0)
        .then(ka.1.partial_cmp(&kb.1).unwrap_or(Ordering::Equal))
        .then(a.0.cmp(&b.0))
}

/// Scores candidates in parallel and sorts them by descending score, ties by
/// id order.
pub fn rank_candidates<S: Scalar, M: KgeModel<S> + ?Sized>(
    model: &M,
    candidates: &[TripleIds],
) -> Result<Vec<(TripleIds, S)>> {
    let scores: Vec<Vec<S>> = candidates
        .par_chunks(SCORE_CHUNK)
        .enumerate()
        .map(|(i, chunk)| {
            model.score_batch(chunk).map_err(|e| match e {
                Error::AtPosition { position, source } => Error::AtPosition {
                    position: position + i * SCORE_CHUNK,
                    source,
                },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let mut ranked: Vec<(TripleIds, S)> = candidates
        .iter()
        .copied()
        .zip(scores.into_iter().flatten())
        .collect();
    ranked.sort_by(by_score_desc);
    Ok(ranked)
}

/// Six significant digits, `%g` style.
pub fn format_score(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    }
}

/// Maps ranked id triples back to labels.
pub fn decode_ranked<S: Scalar>(
    entities: &Vocab,
    relations: &Vocab,
    ranked: &[(TripleIds, S)],
) -> Result<Vec<(Triple, f64)>> {
    let label = |v: &Vocab, id: usize, kind: &'static str| {
        v.label(id).map(str::to_string).ok_or(Error::IdOutOfRange {
            kind,
            id,
            count: v.len(),
        })
    };
    ranked
        .iter()
        .map(|&(t, s)| {
            Ok((
                Triple {
                    head: label(entities, t.head, "entity")?,
                    relation: label(relations, t.relation, "relation")?,
                    tail: label(entities, t.tail, "entity")?,
                },
                s.widen(),
            ))
        })
        .collect()
}

pub fn render_predictions(ranked: &[(Triple, f64)]) -> String {
    let mut s = String::new();
    for (t, score) in ranked {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            t.head,
            t.relation,
            t.tail,
            format_score(*score)
        ));
    }
    s
}

/// Writes the prediction TSV atomically.
pub fn write_predictions(path: &Path, ranked: &[(Triple, f64)]) -> Result<()> {
    write_atomic(path, render_predictions(ranked).as_bytes())
}

/// Reads a label list: one label per line, blank lines and `#` comments
/// skipped.
pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    let text = crate::ingest::read_text(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Resolves labels to ids, failing on the first unknown label.
pub fn resolve_labels(vocab: &Vocab, labels: &[String], kind: &'static str) -> Result<BTreeSet<usize>> {
    labels
        .iter()
        .map(|l| {
            vocab.id(l).ok_or_else(|| Error::UnknownLabel {
                kind,
                label: l.clone(),
            })
        })
        .collect()
}
