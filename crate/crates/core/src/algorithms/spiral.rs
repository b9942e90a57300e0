//! The hexagonal spiral: the canonical target ordering of lattice nodes
//! outward from a seed, and shape comparison up to lattice symmetry.

use crate::lattice::NodeCoord;
use std::collections::BTreeSet;

/// The first `n` nodes of the counter-clockwise hexagonal spiral from the
/// origin. Consecutive positions are lattice-adjacent and ring `r` completes
/// at index `3r(r+1)`.
pub fn spiral_positions(n: usize) -> Vec<NodeCoord> {
    let mut out = Vec::with_capacity(n);
    out.push(NodeCoord::ORIGIN);
    let mut r = 0i32;
    'outer: while out.len() < n {
        r += 1;
        let (start, runs): (NodeCoord, Vec<(u8, i32)>) = if r == 1 {
            (
                NodeCoord::new(1, 0),
                vec![(2, 1), (3, 1), (4, 1), (5, 1), (0, 1)],
            )
        } else {
            (
                NodeCoord::new(r, 1 - r),
                vec![(1, r - 1), (2, r), (3, r), (4, r), (5, r), (0, r)],
            )
        };
        let mut cur = start;
        out.push(cur);
        if out.len() == n {
            break;
        }
        for (dir, len) in runs {
            for _ in 0..len {
                cur = cur.step(dir);
                out.push(cur);
                if out.len() == n {
                    break 'outer;
                }
            }
        }
    }
    out
}

fn rotate_ccw(v: NodeCoord) -> NodeCoord {
    NodeCoord::new(-v.r, v.q + v.r)
}

fn reflect(v: NodeCoord) -> NodeCoord {
    NodeCoord::new(v.q + v.r, -v.r)
}

/// Canonical form of a node set under the 12 lattice symmetries and
/// translation: the lexicographically smallest sorted coordinate list.
pub fn canonical_shape(nodes: &BTreeSet<NodeCoord>) -> Vec<NodeCoord> {
    let mut best: Option<Vec<NodeCoord>> = None;
    let mut current: Vec<NodeCoord> = nodes.iter().copied().collect();
    for flip in 0..2 {
        if flip == 1 {
            current = current.iter().map(|&v| reflect(v)).collect();
        }
        for _ in 0..6 {
            current = current.iter().map(|&v| rotate_ccw(v)).collect();
            let min_q = current.iter().map(|v| v.q).min().unwrap_or(0);
            let min_r = current.iter().map(|v| v.r).min().unwrap_or(0);
            let mut norm: Vec<NodeCoord> = current
                .iter()
                .map(|v| NodeCoord::new(v.q - min_q, v.r - min_r))
                .collect();
            norm.sort();
            if best.as_ref().is_none_or(|b| norm < *b) {
                best = Some(norm);
            }
        }
    }
    best.unwrap_or_default()
}

pub fn shapes_equal_up_to_symmetry(a: &BTreeSet<NodeCoord>, b: &BTreeSet<NodeCoord>) -> bool {
    a.len() == b.len() && canonical_shape(a) == canonical_shape(b)
}
