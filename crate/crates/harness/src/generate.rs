//! Initial-configuration generators: connected, all-contracted systems with
//! seeded random orientations. The blob generator grows by BFS from the
//! origin; its hole-free variant only attaches nodes whose occupied
//! neighbors form a single contiguous arc, which preserves simple
//! connectivity, mirroring the erosion condition in reverse.

use amoebot_core::algorithms::hexagon::{ROLE, SEED};
use amoebot_core::algorithms::spiral_positions;
use amoebot_core::config::{AmoebotId, AmoebotRecord};
use amoebot_core::energy::extend_for_energy;
use amoebot_core::lattice::{NodeCoord, Orientation};
use amoebot_core::value::{intern, Value};
use amoebot_core::{AlgorithmSpec, SystemConfiguration};
use anyhow::{bail, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Blob,
    BlobHoleFree,
    Line,
    Hexagon,
}

impl Shape {
    pub fn parse(s: &str) -> Option<Shape> {
        match s {
            "blob" => Some(Shape::Blob),
            "blob-hole-free" => Some(Shape::BlobHoleFree),
            "line" => Some(Shape::Line),
            "hexagon" => Some(Shape::Hexagon),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Blob => "blob",
            Shape::BlobHoleFree => "blob-hole-free",
            Shape::Line => "line",
            Shape::Hexagon => "hexagon",
        }
    }
}

fn arc_attachable(occupied: &BTreeSet<NodeCoord>, v: NodeCoord) -> bool {
    let mask: Vec<bool> = v.neighbors().iter().map(|w| occupied.contains(w)).collect();
    let count = mask.iter().filter(|&&b| b).count();
    if !(1..=5).contains(&count) {
        return false;
    }
    (0..6).filter(|&i| !mask[i] && mask[(i + 1) % 6]).count() == 1
}

fn blob_nodes(n: usize, seed: u64, hole_free: bool) -> Vec<NodeCoord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut occupied = BTreeSet::from([NodeCoord::ORIGIN]);
    let mut order = vec![NodeCoord::ORIGIN];
    let mut frontier: BTreeSet<NodeCoord> = NodeCoord::ORIGIN.neighbors().into_iter().collect();
    while occupied.len() < n {
        let mut candidates: Vec<NodeCoord> = frontier
            .iter()
            .copied()
            .filter(|&v| !hole_free || arc_attachable(&occupied, v))
            .collect();
        candidates.sort();
        let v = *candidates
            .choose(&mut rng)
            .expect("growth can always continue");
        occupied.insert(v);
        order.push(v);
        frontier.remove(&v);
        for w in v.neighbors() {
            if !occupied.contains(&w) {
                frontier.insert(w);
            }
        }
    }
    order
}

fn nodes_for(shape: Shape, n: usize, seed: u64) -> Vec<NodeCoord> {
    match shape {
        Shape::Line => (0..n as i32).map(|i| NodeCoord::new(i, 0)).collect(),
        Shape::Hexagon => spiral_positions(n),
        Shape::Blob => blob_nodes(n, seed, false),
        Shape::BlobHoleFree => blob_nodes(n, seed, true),
    }
}

/// Bounded face scan of the occupied-node complement: any finite complement
/// component is a hole.
pub fn has_hole(cfg: &SystemConfiguration) -> bool {
    let occupied: BTreeSet<NodeCoord> = cfg.occupied_nodes().collect();
    if occupied.is_empty() {
        return false;
    }
    let min_q = occupied.iter().map(|v| v.q).min().unwrap() - 1;
    let max_q = occupied.iter().map(|v| v.q).max().unwrap() + 1;
    let min_r = occupied.iter().map(|v| v.r).min().unwrap() - 1;
    let max_r = occupied.iter().map(|v| v.r).max().unwrap() + 1;
    let inside = |v: NodeCoord| v.q >= min_q && v.q <= max_q && v.r >= min_r && v.r <= max_r;

    // flood the outside from a corner of the bounding box
    let start = NodeCoord::new(min_q, min_r);
    let mut reach = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for w in v.neighbors() {
            if inside(w) && !occupied.contains(&w) && reach.insert(w) {
                queue.push_back(w);
            }
        }
    }
    for q in min_q..=max_q {
        for r in min_r..=max_r {
            let v = NodeCoord::new(q, r);
            if !occupied.contains(&v) && !reach.contains(&v) {
                return true;
            }
        }
    }
    false
}

/// Connected, all-contracted initial configuration with orientations sampled
/// uniformly at random per amoebot. Amoebot 0 occupies the origin.
pub fn generate_initial(shape: Shape, n: usize, seed: u64) -> Result<SystemConfiguration> {
    if n == 0 {
        bail!("system size must be at least 1");
    }
    let nodes = nodes_for(shape, n, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: BTreeMap<AmoebotId, AmoebotRecord> = nodes
        .into_iter()
        .enumerate()
        .map(|(i, node)| {
            let o = Orientation::new(rng.gen_range(0..6), if rng.gen_bool(0.5) { 1 } else { -1 });
            (AmoebotId(i as u32), AmoebotRecord::contracted(node, o))
        })
        .collect();
    let cfg = SystemConfiguration::from_records(records)?;
    debug_assert!(cfg.is_connected());
    Ok(cfg)
}

/// Applies an algorithm's variable schema to every amoebot.
pub fn init_schema(cfg: &mut SystemConfiguration, alg: &AlgorithmSpec) {
    for id in cfg.ids().collect::<Vec<_>>() {
        let mut public = std::mem::take(&mut cfg.record_mut_pub(id).public);
        alg.init_public(&mut public);
        cfg.record_mut_pub(id).public = public;
    }
}

/// Marks the origin amoebot as the hexagon-formation seed.
pub fn mark_seed(cfg: &mut SystemConfiguration) {
    cfg.record_mut_pub(AmoebotId(0))
        .public
        .insert(ROLE, Value::Sym(intern(SEED)));
}

/// Designated sources for the energy extension: the origin amoebot plus, for
/// multi-source experiments, the next `count - 1` ids.
pub fn default_sources(count: usize) -> Vec<AmoebotId> {
    (0..count as u32).map(AmoebotId).collect()
}

/// Extends a workload configuration for an energy-constrained run.
pub fn energize(cfg: &mut SystemConfiguration, sources: usize) {
    extend_for_energy(cfg, &default_sources(sources.max(1)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_collinear_and_connected() {
        let cfg = generate_initial(Shape::Line, 5, 1).unwrap();
        assert_eq!(cfg.len(), 5);
        assert!(cfg.is_connected());
        assert!(cfg.occupied_nodes().all(|v| v.r == 0));
    }

    #[test]
    fn hexagon_matches_spiral_oracle() {
        let cfg = generate_initial(Shape::Hexagon, 91, 7).unwrap();
        let got: BTreeSet<_> = cfg.occupied_nodes().collect();
        let want: BTreeSet<_> = spiral_positions(91).into_iter().collect();
        assert_eq!(got, want);
        assert!(cfg.is_connected());
    }

    #[test]
    fn blobs_connected_and_hole_free_when_requested() {
        for seed in 0..8 {
            let cfg = generate_initial(Shape::BlobHoleFree, 50, seed).unwrap();
            assert!(cfg.is_connected());
            assert!(!has_hole(&cfg), "seed {seed} grew a hole");
            let plain = generate_initial(Shape::Blob, 50, seed).unwrap();
            assert!(plain.is_connected());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_initial(Shape::Blob, 40, 11).unwrap();
        let b = generate_initial(Shape::Blob, 40, 11).unwrap();
        assert_eq!(a.digest(), b.digest());
    }
}
