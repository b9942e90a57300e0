//! Dynamic convention checking along executed traces: validity (enabled
//! actions execute successfully in isolation), phase structure, and
//! connectivity of every reached configuration.

use crate::algorithm::AlgorithmSpec;
use crate::config::{AmoebotId, SystemConfiguration};
use crate::executor::execute_action;
use crate::scheduler::enabled_actions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConventionViolation {
    /// Convention 2: movement not last / more than one movement.
    PhaseStructure { detail: String },
    /// Convention 1: an enabled action failed when executed in isolation.
    Validity {
        action: String,
        actor: AmoebotId,
        detail: String,
        activation: u64,
    },
    /// Convention 3: a reached configuration is disconnected.
    Connectivity { activation: u64 },
}

impl fmt::Display for ConventionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConventionViolation::PhaseStructure { detail } => {
                write!(f, "phase structure: {detail}")
            }
            ConventionViolation::Validity { action, actor, detail, activation } => write!(
                f,
                "validity: `{action}` enabled for {actor:?} failed at activation {activation}: {detail}"
            ),
            ConventionViolation::Connectivity { activation } => {
                write!(f, "connectivity lost after activation {activation}")
            }
        }
    }
}

#[derive(Debug)]
pub struct ConventionReport {
    pub violations: Vec<ConventionViolation>,
    pub activations: u64,
    pub terminated: bool,
}

impl ConventionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_VIOLATIONS: usize = 64;

/// Runs the algorithm under a seeded unfair schedule for up to `budget`
/// activations. At every reached configuration, each enabled (amoebot,
/// action) pair is executed in isolation on a scratch copy to check validity,
/// and connectivity is asserted.
pub fn check_conventions(
    alg: &AlgorithmSpec,
    cfg0: &SystemConfiguration,
    budget: u64,
    seed: u64,
) -> ConventionReport {
    let mut report = ConventionReport {
        violations: Vec::new(),
        activations: 0,
        terminated: false,
    };

    if let Err(e) = alg.validate() {
        report.violations.push(ConventionViolation::PhaseStructure {
            detail: e.to_string(),
        });
        return report;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = cfg0.clone();
    if !cfg.is_connected() {
        report
            .violations
            .push(ConventionViolation::Connectivity { activation: 0 });
    }

    loop {
        let enabled: Vec<(AmoebotId, usize)> = cfg
            .ids()
            .collect::<Vec<_>>()
            .into_iter()
            .flat_map(|id| {
                enabled_actions(&cfg, id, alg)
                    .into_iter()
                    .map(move |i| (id, i))
            })
            .collect();
        if enabled.is_empty() {
            report.terminated = true;
            break;
        }

        // Validity in isolation for every enabled pair.
        for &(id, idx) in &enabled {
            if let Err(e) = execute_action(&cfg, id, &alg.actions[idx]) {
                report.violations.push(ConventionViolation::Validity {
                    action: alg.actions[idx].label.clone(),
                    actor: id,
                    detail: e.to_string(),
                    activation: report.activations,
                });
                if report.violations.len() >= MAX_VIOLATIONS {
                    return report;
                }
            }
        }

        let (id, idx) = enabled[rng.gen_range(0..enabled.len())];
        match execute_action(&cfg, id, &alg.actions[idx]) {
            Ok((next, _)) => cfg = next,
            Err(_) => {
                // Already recorded as a validity violation; skip the pair by
                // advancing past it to avoid looping forever.
                report.activations += 1;
                if report.activations >= budget {
                    break;
                }
                continue;
            }
        }
        report.activations += 1;

        if !cfg.is_connected() {
            report.violations.push(ConventionViolation::Connectivity {
                activation: report.activations,
            });
            if report.violations.len() >= MAX_VIOLATIONS {
                return report;
            }
        }
        if report.activations >= budget {
            break;
        }
    }
    report
}
