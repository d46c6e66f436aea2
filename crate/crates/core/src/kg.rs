//! Triples, label dictionaries and deterministic train/test splitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// A labelled fact `(head, relation, tail)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    pub fn new(
        head: impl Into<String>,
        relation: impl Into<String>,
        tail: impl Into<String>,
    ) -> Result<Self> {
        let t = Triple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        };
        for (name, v) in [("head", &t.head), ("relation", &t.relation), ("tail", &t.tail)] {
            if v.is_empty() {
                return Err(Error::InvalidTriple(format!("empty {name} label")));
            }
        }
        Ok(t)
    }
}

/// Integer-indexed triple. Ordering is lexicographic on `(head, relation, tail)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct TripleIds {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl TripleIds {
    pub const fn new(head: usize, relation: usize, tail: usize) -> Self {
        TripleIds {
            head,
            relation,
            tail,
        }
    }
}

/// Bijective label ↔ id dictionary with ids `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a dictionary from labels, numbering them in sorted order.
    pub fn from_labels<I, L>(labels: I) -> Self
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let mut sorted: Vec<String> = labels.into_iter().map(Into::into).collect();
        sorted.sort();
        sorted.dedup();
        let index = sorted
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Vocab {
            labels: sorted,
            index,
        }
    }

    /// Rebuilds a dictionary from an explicit `label → id` map.
    pub fn from_map(map: &BTreeMap<String, usize>) -> Result<Self> {
        let mut labels = vec![None; map.len()];
        for (label, &id) in map {
            match labels.get_mut(id) {
                Some(slot @ None) => *slot = Some(label.clone()),
                _ => {
                    return Err(Error::Format(format!(
                        "id {id} of label {label:?} is duplicated or outside 0..{}",
                        map.len()
                    )))
                }
            }
        }
        let labels: Vec<String> = labels.into_iter().map(Option::unwrap).collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(Vocab { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `label → id`, sorted by label.
    pub fn to_map(&self) -> BTreeMap<String, usize> {
        self.index.iter().map(|(l, &i)| (l.clone(), i)).collect()
    }
}

/// A knowledge graph in indexed form.
///
/// Dictionaries are shared between a graph and the views produced by
/// [`split`], so ids mean the same thing on both sides of a split.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedKG {
    entities: Arc<Vocab>,
    relations: Arc<Vocab>,
    triples: Vec<TripleIds>,
}

impl IndexedKG {
    /// Assembles a graph from existing dictionaries, checking ids and duplicates.
    pub fn from_parts(
        entities: Arc<Vocab>,
        relations: Arc<Vocab>,
        triples: Vec<TripleIds>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(triples.len());
        for t in &triples {
            check_range("entity", t.head, entities.len())?;
            check_range("relation", t.relation, relations.len())?;
            check_range("entity", t.tail, entities.len())?;
            if !seen.insert(*t) {
                return Err(Error::InvalidTriple(format!("duplicate triple {t:?}")));
            }
        }
        Ok(IndexedKG {
            entities,
            relations,
            triples,
        })
    }

    /// A view over the same dictionaries holding a different triple list.
    pub fn view(&self, triples: Vec<TripleIds>) -> Self {
        IndexedKG {
            entities: Arc::clone(&self.entities),
            relations: Arc::clone(&self.relations),
            triples,
        }
    }

    pub fn entities(&self) -> &Arc<Vocab> {
        &self.entities
    }

    pub fn relations(&self) -> &Arc<Vocab> {
        &self.relations
    }

    pub fn triples(&self) -> &[TripleIds] {
        &self.triples
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Maps a labelled triple to ids, failing on unknown labels.
    pub fn encode(&self, t: &Triple) -> Result<TripleIds> {
        let ent = |l: &str| {
            self.entities.id(l).ok_or_else(|| Error::UnknownLabel {
                kind: "entity",
                label: l.to_string(),
            })
        };
        let rel = self
            .relations
            .id(&t.relation)
            .ok_or_else(|| Error::UnknownLabel {
                kind: "relation",
                label: t.relation.clone(),
            })?;
        Ok(TripleIds::new(ent(&t.head)?, rel, ent(&t.tail)?))
    }

    pub fn decode(&self, t: TripleIds) -> Result<Triple> {
        let ent = |id| {
            self.entities
                .label(id)
                .map(str::to_string)
                .ok_or(Error::IdOutOfRange {
                    kind: "entity",
                    id,
                    count: self.entities.len(),
                })
        };
        let relation = self
            .relations
            .label(t.relation)
            .ok_or(Error::IdOutOfRange {
                kind: "relation",
                id: t.relation,
                count: self.relations.len(),
            })?
            .to_string();
        Ok(Triple {
            head: ent(t.head)?,
            relation,
            tail: ent(t.tail)?,
        })
    }
}

pub(crate) fn check_range(kind: &'static str, id: usize, count: usize) -> Result<()> {
    if id < count {
        Ok(())
    } else {
        Err(Error::IdOutOfRange { kind, id, count })
    }
}

/// Indexes a labelled triple list.
///
/// Entity and relation labels are numbered in lexicographic order, duplicates
/// are dropped, and the resulting id triples are sorted, so the output does
/// not depend on input order.
pub fn build_index(triples: &[Triple]) -> Result<IndexedKG> {
    if triples.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let entities = Vocab::from_labels(
        triples
            .iter()
            .flat_map(|t| [t.head.as_str(), t.tail.as_str()]),
    );
    let relations = Vocab::from_labels(triples.iter().map(|t| t.relation.as_str()));

    let mut ids: Vec<TripleIds> = triples
        .iter()
        .map(|t| {
            TripleIds::new(
                entities.id(&t.head).unwrap(),
                relations.id(&t.relation).unwrap(),
                entities.id(&t.tail).unwrap(),
            )
        })
        .collect();
    ids.sort_unstable();
    ids.dedup();
    let dropped = triples.len() - ids.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} duplicate triple(s)");
    }
    Ok(IndexedKG {
        entities: Arc::new(entities),
        relations: Arc::new(relations),
        triples: ids,
    })
}

/// Seeded train/test split with coverage repair.
///
/// Triples are shuffled, the first `round(ratio · n)` go to train, and any
/// test triple mentioning an entity or relation unseen in train is moved to
/// train (scanning test in shuffled order).
pub fn split(kg: &IndexedKG, ratio: f64, seed: u64) -> Result<(IndexedKG, IndexedKG)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let n = kg.triples.len();
    if n < 2 {
        return Err(Error::DegenerateSplit(format!(
            "need at least 2 triples, got {n}"
        )));
    }
    let mut shuffled = kg.triples.clone();
    shuffled.shuffle(&mut rng::stream(seed, Stream::Split));

    let n_train = ((ratio * n as f64).round() as usize).min(n);
    let mut train: Vec<TripleIds> = shuffled[..n_train].to_vec();
    let mut seen_entities = vec![false; kg.num_entities()];
    let mut seen_relations = vec![false; kg.num_relations()];
    for t in &train {
        seen_entities[t.head] = true;
        seen_entities[t.tail] = true;
        seen_relations[t.relation] = true;
    }
    let mut test = Vec::with_capacity(n - n_train);
    let mut moved = 0usize;
    for &t in &shuffled[n_train..] {
        if seen_entities[t.head] && seen_entities[t.tail] && seen_relations[t.relation] {
            test.push(t);
        } else {
            seen_entities[t.head] = true;
            seen_entities[t.tail] = true;
            seen_relations[t.relation] = true;
            train.push(t);
            moved += 1;
        }
    }
    if moved > 0 {
        log::info!("coverage repair moved {moved} test triple(s) into train");
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "{} train / {} test triples after coverage repair",
            train.len(),
            test.len()
        )));
    }
    Ok((kg.view(train), kg.view(test)))
}
