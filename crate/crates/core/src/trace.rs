//! Versioned activation traces. Replaying a trace from its initial
//! configuration reproduces every recorded digest.

use crate::config::AmoebotId;
use crate::executor::EnergyEvent;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ActivationRecord {
    pub actor: AmoebotId,
    pub action: String,
    /// For the energy-distribution action: block predicates satisfied when
    /// the actor was activated (g-support).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energy_events: Vec<EnergyEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_digest: Option<String>,
    #[serde(default)]
    pub moved: bool,
    /// The action hit a failing Expand and was undone (expansion-robust runs).
    #[serde(default)]
    pub undone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub version: u32,
    pub algorithm: String,
    pub policy: String,
    pub seed: u64,
    pub initial_digest: String,
    pub records: Vec<ActivationRecord>,
    /// Number of records after which each round completed, in order.
    pub round_boundaries: Vec<usize>,
    pub terminated: bool,
    pub final_digest: String,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Trace, TraceError> {
        let t: Trace = serde_json::from_str(s).map_err(TraceError::Parse)?;
        if t.version != TRACE_VERSION {
            return Err(TraceError::Version(t.version));
        }
        Ok(t)
    }
}

/// Completed rounds in a trace: round `i` completes once every amoebot that
/// was enabled at its start has executed an action or been observed disabled.
pub fn round_count(trace: &Trace) -> usize {
    trace.round_boundaries.len()
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("unsupported trace version {0}")]
    Version(u32),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_json_round_trip_and_version_gate() {
        let t = Trace {
            version: TRACE_VERSION,
            algorithm: "a".into(),
            policy: "uniform-random".into(),
            seed: 7,
            initial_digest: "aa".into(),
            records: vec![ActivationRecord {
                actor: AmoebotId(3),
                action: "x".into(),
                support: vec!["HarvestEnergy".into()],
                energy_events: vec![EnergyEvent::Harvest { who: AmoebotId(3) }],
                pre_digest: None,
                post_digest: Some("bb".into()),
                moved: false,
                undone: false,
            }],
            round_boundaries: vec![1],
            terminated: true,
            final_digest: "bb".into(),
        };
        let back = Trace::from_json(&t.to_json()).unwrap();
        assert_eq!(back.records, t.records);
        assert_eq!(round_count(&back), 1);

        let mut bad = t;
        bad.version = 99;
        assert!(matches!(
            Trace::from_json(&bad.to_json()),
            Err(TraceError::Version(99))
        ));
    }
}
