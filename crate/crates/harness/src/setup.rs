//! Workload assembly: geometry, variable schemas, seed/source designation,
//! and the energy / expansion-robust transforms, kept consistent so a
//! constrained run and its original-algorithm replay share one geometry.

use crate::generate::{self, Shape};
use amoebot_core::algorithms::{hexagon_formation_spec, leader_election_spec};
use amoebot_core::energy::{transform, DemandFunction};
use amoebot_core::robust::transform_expansion_robust;
use amoebot_core::{fixtures, AlgorithmSpec, SystemConfiguration};
use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workload {
    LeaderElection,
    HexagonFormation,
    /// No base actions: the energy transform yields a framework-only system
    /// whose runs are pure energy runs.
    FrameworkOnly,
}

impl Workload {
    pub fn parse(s: &str) -> Option<Workload> {
        match s {
            "leader-election" => Some(Workload::LeaderElection),
            "hexagon-formation" => Some(Workload::HexagonFormation),
            "framework-only" => Some(Workload::FrameworkOnly),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Workload::LeaderElection => "leader-election",
            Workload::HexagonFormation => "hexagon-formation",
            Workload::FrameworkOnly => "framework-only",
        }
    }

    pub fn spec(&self) -> AlgorithmSpec {
        match self {
            Workload::LeaderElection => leader_election_spec(),
            Workload::HexagonFormation => hexagon_formation_spec(),
            Workload::FrameworkOnly => fixtures::empty_algorithm(),
        }
    }

    /// The shape family the workload's preconditions ask for.
    pub fn default_shape(&self) -> Shape {
        match self {
            Workload::LeaderElection => Shape::BlobHoleFree,
            Workload::HexagonFormation => Shape::Blob,
            Workload::FrameworkOnly => Shape::Blob,
        }
    }
}

/// An energy-agnostic workload instance.
pub fn plain(
    workload: Workload,
    shape: Shape,
    n: usize,
    seed: u64,
) -> Result<(AlgorithmSpec, SystemConfiguration)> {
    if workload == Workload::LeaderElection && matches!(shape, Shape::Blob) {
        bail!("leader election requires a hole-free input shape");
    }
    let alg = workload.spec();
    let mut cfg = generate::generate_initial(shape, n, seed)?;
    generate::init_schema(&mut cfg, &alg);
    if workload == Workload::HexagonFormation {
        generate::mark_seed(&mut cfg);
    }
    Ok((alg, cfg))
}

/// An energy-constrained instance plus the matching original instance for
/// replay checks. Both share geometry and orientations.
pub struct EnergySetup {
    pub constrained: AlgorithmSpec,
    pub cfg0_constrained: SystemConfiguration,
    pub original: AlgorithmSpec,
    pub cfg0_original: SystemConfiguration,
    pub kappa: u32,
}

pub fn energy(
    workload: Workload,
    shape: Shape,
    n: usize,
    seed: u64,
    kappa: u32,
    demand: u32,
    sources: usize,
) -> Result<EnergySetup> {
    let (original, cfg0_original) = plain(workload, shape, n, seed)?;
    let delta = DemandFunction::uniform(kappa, demand);
    let constrained = transform(&original, &delta)?;
    let mut cfg0_constrained = cfg0_original.clone();
    generate::energize(&mut cfg0_constrained, sources);
    Ok(EnergySetup {
        constrained,
        cfg0_constrained,
        original,
        cfg0_original,
        kappa,
    })
}

/// The expansion-robust variant of an energy-constrained instance. The
/// initial configuration is unchanged: expand flags start cleared.
pub fn robust_energy(setup: &EnergySetup) -> Result<(AlgorithmSpec, SystemConfiguration)> {
    let robust = transform_expansion_robust(&setup.constrained)?;
    Ok((robust, setup.cfg0_constrained.clone()))
}
