//! Equivalence replay: projects a trace of an energy-constrained algorithm
//! onto the original algorithm and checks per-step congruence of positions
//! and original-algorithm variables, plus terminality of the projected
//! execution when the trace terminated.

use crate::algorithm::AlgorithmSpec;
use crate::config::SystemConfiguration;
use crate::energy::{EBAT, ENERGY_ACTION, PARENT, STATE};
use crate::executor::apply_action;
use crate::robust::FLAG_RESET;
use crate::scheduler::enabled_actions;
use crate::trace::Trace;
use thiserror::Error;

/// The framework variables dropped by the congruence projection.
pub const ENERGY_VARS: [&str; 3] = [STATE, PARENT, EBAT];

pub fn project_energy(cfg: &SystemConfiguration) -> SystemConfiguration {
    cfg.projected(&ENERGY_VARS, true)
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("trace does not start at the given configuration")]
    InitialMismatch,
    #[error("step {step}: unknown action `{label}`")]
    UnknownAction { step: usize, label: String },
    #[error("step {step}: recorded digest does not match replayed configuration")]
    DigestMismatch { step: usize },
    #[error("step {step}: `{label}` not executable during replay: {detail}")]
    NotExecutable {
        step: usize,
        label: String,
        detail: String,
    },
    #[error("step {step}: projected configuration diverged from the original-algorithm execution")]
    Divergence { step: usize },
    #[error("final configuration digest does not match the trace")]
    FinalMismatch,
    #[error("trace terminated but the replayed original execution still has `{label}` enabled")]
    NotTerminal { label: String },
}

/// Replays a trace of the transformed algorithm from `cfg0_constrained`,
/// extracts its subsequence of original-action executions, replays those
/// under the original algorithm from `cfg0`, and asserts congruence after
/// every original-action step. If the trace terminated, also asserts that
/// the replayed original execution is terminal.
pub fn replay_equivalence(
    trace: &Trace,
    constrained: &AlgorithmSpec,
    cfg0_constrained: &SystemConfiguration,
    original: &AlgorithmSpec,
    cfg0: &SystemConfiguration,
) -> Result<(), ReplayError> {
    if trace.initial_digest != cfg0_constrained.digest() {
        return Err(ReplayError::InitialMismatch);
    }
    let mut constrained_cfg = cfg0_constrained.clone();
    let mut original_cfg = cfg0.clone();

    for (step, rec) in trace.records.iter().enumerate() {
        if let Some(pre) = &rec.pre_digest {
            if *pre != constrained_cfg.digest() {
                return Err(ReplayError::DigestMismatch { step });
            }
        }
        let (_, action) =
            constrained
                .action(&rec.action)
                .ok_or_else(|| ReplayError::UnknownAction {
                    step,
                    label: rec.action.clone(),
                })?;
        apply_action(&mut constrained_cfg, rec.actor, action).map_err(|e| {
            ReplayError::NotExecutable {
                step,
                label: rec.action.clone(),
                detail: e.to_string(),
            }
        })?;
        if let Some(post) = &rec.post_digest {
            if *post != constrained_cfg.digest() {
                return Err(ReplayError::DigestMismatch { step });
            }
        }

        let is_framework = rec.action == ENERGY_ACTION || rec.action == FLAG_RESET;
        if !is_framework && !rec.undone {
            let (_, base_action) =
                original
                    .action(&rec.action)
                    .ok_or_else(|| ReplayError::UnknownAction {
                        step,
                        label: rec.action.clone(),
                    })?;
            apply_action(&mut original_cfg, rec.actor, base_action).map_err(|e| {
                ReplayError::NotExecutable {
                    step,
                    label: rec.action.clone(),
                    detail: format!("original-algorithm replay: {e}"),
                }
            })?;
            if project_energy(&constrained_cfg) != original_cfg.projected(&[], true) {
                return Err(ReplayError::Divergence { step });
            }
        }
    }

    if trace.final_digest != constrained_cfg.digest() {
        return Err(ReplayError::FinalMismatch);
    }

    if trace.terminated {
        for id in original_cfg.ids().collect::<Vec<_>>() {
            let enabled = enabled_actions(&original_cfg, id, original);
            if let Some(&idx) = enabled.first() {
                return Err(ReplayError::NotTerminal {
                    label: original.actions[idx].label.clone(),
                });
            }
        }
    }
    Ok(())
}
