//! Seeded synthetic knowledge graph with planted structure.
//!
//! 40 entities fall into 4 latent groups of 10, laid out as the cells of a
//! 2×2 grid:
//!
//! ```text
//!   g2  g3
//!   g0  g1
//! ```
//!
//! Four relations move between neighbouring cells: `right` (g0→g1, g2→g3),
//! `up` (g0→g2, g1→g3), `left` and `down` (their inverses). Each relation
//! has 200 admissible (head, tail) pairs; 100 of them are drawn without
//! replacement, giving 400 triples. Group membership alone determines which
//! tails are plausible, so a translational model can recover the grid:
//! `up + right` and `right + up` land in the same cell.
//!
//! Entity labels are `g<group>_e<index>` (e.g. `g1_e07`), relation labels
//! are the direction names.

use rand::seq::index;

use crate::kg::Triple;
use crate::rng::{self, Stream};

pub const NUM_GROUPS: usize = 4;
pub const GROUP_SIZE: usize = 10;
pub const NUM_ENTITIES: usize = NUM_GROUPS * GROUP_SIZE;
pub const TRIPLES_PER_RELATION: usize = 100;
pub const RELATIONS: [&str; 4] = ["right", "up", "left", "down"];

/// (head group, tail group) moves of each relation in [`RELATIONS`] order.
const MOVES: [[(usize, usize); 2]; 4] = [
    [(0, 1), (2, 3)],
    [(0, 2), (1, 3)],
    [(1, 0), (3, 2)],
    [(2, 0), (3, 1)],
];

pub fn entity_label(group: usize, index: usize) -> String {
    format!("g{group}_e{index:02}")
}

/// Latent group of a label produced by [`entity_label`].
pub fn group_of(label: &str) -> Option<usize> {
    let g = label.strip_prefix('g')?.split('_').next()?.parse().ok()?;
    (g < NUM_GROUPS).then_some(g)
}

/// Generates the grid KG. Same seed, same triples.
pub fn grid_kg(seed: u64) -> Vec<Triple> {
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let per_move = GROUP_SIZE * GROUP_SIZE;
    let mut out = Vec::with_capacity(RELATIONS.len() * TRIPLES_PER_RELATION);
    for (relation, moves) in RELATIONS.iter().zip(MOVES) {
        let mut picked = index::sample(&mut rng, 2 * per_move, TRIPLES_PER_RELATION).into_vec();
        picked.sort_unstable();
        for p in picked {
            let (hg, tg) = moves[p / per_move];
            let cell = p % per_move;
            out.push(Triple {
                head: entity_label(hg, cell / GROUP_SIZE),
                relation: relation.to_string(),
                tail: entity_label(tg, cell % GROUP_SIZE),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::build_index;
    use std::collections::HashSet;

    #[test]
    fn shape() {
        let triples = grid_kg(7);
        assert_eq!(triples.len(), 400);
        let unique: HashSet<_> = triples.iter().collect();
        assert_eq!(unique.len(), 400);
        let kg = build_index(&triples).unwrap();
        assert_eq!(kg.num_relations(), 4);
        assert!(kg.num_entities() <= NUM_ENTITIES);
    }

    #[test]
    fn planted_moves() {
        for t in grid_kg(3) {
            let (h, tl) = (group_of(&t.head).unwrap(), group_of(&t.tail).unwrap());
            let r = RELATIONS.iter().position(|r| *r == t.relation).unwrap();
            assert!(MOVES[r].contains(&(h, tl)), "{t:?}");
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(grid_kg(11), grid_kg(11));
        assert_ne!(grid_kg(11), grid_kg(12));
    }

    #[test]
    fn group_parse() {
        assert_eq!(group_of(&entity_label(3, 9)), Some(3));
        assert_eq!(group_of("g4_e00"), None);
        assert_eq!(group_of("x"), None);
    }
}
