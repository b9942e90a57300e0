//! Exhaustive execution enumeration for small systems: a DFS over every
//! (enabled amoebot, enabled action) choice, collecting the set of terminal
//! configurations. The oracle behind the equivalence set-inclusion check.

use crate::algorithm::AlgorithmSpec;
use crate::config::{AmoebotId, SystemConfiguration};
use crate::executor::execute_action;
use crate::scheduler::enabled_actions;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("state-space limit of {limit} configurations exceeded")]
    LimitExceeded { limit: usize },
    #[error("enabled action `{label}` failed during enumeration: {detail}")]
    InvalidAction { label: String, detail: String },
}

#[derive(Debug)]
pub struct Enumeration {
    /// Terminal configurations keyed by digest.
    pub terminals: BTreeMap<String, SystemConfiguration>,
    /// Distinct configurations visited.
    pub visited: usize,
}

impl Enumeration {
    pub fn terminal_digests(&self) -> BTreeSet<String> {
        self.terminals.keys().cloned().collect()
    }
}

/// Explores all sequential schedules, treating both the adversary's amoebot
/// choice and the action choice as branch points.
pub fn enumerate_all_executions(
    alg: &AlgorithmSpec,
    cfg0: &SystemConfiguration,
    limit: usize,
) -> Result<Enumeration, EnumError> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut terminals: BTreeMap<String, SystemConfiguration> = BTreeMap::new();
    let mut stack: Vec<SystemConfiguration> = vec![cfg0.clone()];
    seen.insert(cfg0.digest());

    while let Some(cfg) = stack.pop() {
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
            terminals.insert(cfg.digest(), cfg);
            continue;
        }
        for (id, idx) in enabled {
            let (next, _) = execute_action(&cfg, id, &alg.actions[idx]).map_err(|e| {
                EnumError::InvalidAction {
                    label: alg.actions[idx].label.clone(),
                    detail: e.to_string(),
                }
            })?;
            let digest = next.digest();
            if seen.insert(digest) {
                if seen.len() > limit {
                    return Err(EnumError::LimitExceeded { limit });
                }
                stack.push(next);
            }
        }
    }
    Ok(Enumeration {
        terminals,
        visited: seen.len(),
    })
}
