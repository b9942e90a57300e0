//! Guarded actions: `<label> : <guard> -> <operations>`. An algorithm is an
//! ordered set of actions plus a variable schema with initial values.

use crate::executor::{OpCtx, OpError};
use crate::value::Value;
use crate::view::View;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type GuardFn = Arc<dyn Fn(&View) -> bool + Send + Sync>;
pub type ComputeFn = Arc<dyn Fn(&mut OpCtx) -> Result<(), OpError> + Send + Sync>;

/// One step of an action script. Compute steps perform Connected/Read/Write
/// operations and private computation; the Move step performs the movement
/// the compute phase decided on (a no-op when none was decided).
#[derive(Clone)]
pub enum Step {
    Compute(ComputeFn),
    Move,
}

impl fmt::Debug for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Compute(_) => write!(f, "Compute"),
            Step::Move => write!(f, "Move"),
        }
    }
}

/// Which neighbors an action observes: the full neighborhood, or only the
/// established neighborhood (used by expansion-robust variants).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    #[default]
    Full,
    Established,
}

/// What to do when an Expand operation fails mid-action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpandFailure {
    /// Surface the failure; for conforming algorithms this is a validity
    /// (Convention 1) violation.
    #[default]
    Error,
    /// Restore the configuration and memories to their pre-action values and
    /// report the action as an undone no-op.
    UndoAction,
}

#[derive(Clone)]
pub struct ActionSpec {
    pub label: String,
    pub guard: GuardFn,
    pub steps: Vec<Step>,
    pub scope: Scope,
    pub expand_failure: ExpandFailure,
}

impl fmt::Debug for ActionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionSpec")
            .field("label", &self.label)
            .field("steps", &self.steps)
            .field("scope", &self.scope)
            .finish()
    }
}

impl ActionSpec {
    pub fn new(label: impl Into<String>, guard: GuardFn, steps: Vec<Step>) -> Self {
        ActionSpec {
            label: label.into(),
            guard,
            steps,
            scope: Scope::Full,
            expand_failure: ExpandFailure::Error,
        }
    }

    /// An action with a compute phase only.
    pub fn stationary(label: impl Into<String>, guard: GuardFn, compute: ComputeFn) -> Self {
        Self::new(label, guard, vec![Step::Compute(compute)])
    }

    /// An action whose compute phase may decide on a movement, executed last.
    pub fn with_move(label: impl Into<String>, guard: GuardFn, compute: ComputeFn) -> Self {
        Self::new(label, guard, vec![Step::Compute(compute), Step::Move])
    }

    pub fn has_move_phase(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, Step::Move))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgorithmError {
    #[error("duplicate action label `{0}`")]
    DuplicateLabel(String),
    #[error(
        "action `{0}` violates the phase structure: movement must be the single last operation"
    )]
    PhaseStructure(String),
    #[error("variable `{0}` collides with a framework-reserved name")]
    ReservedVariable(String),
    #[error("demand for action `{0}` is {1}, outside 1..=capacity ({2})")]
    DemandOutOfRange(String, u32, u32),
}

#[derive(Clone, Debug)]
pub struct AlgorithmSpec {
    pub name: String,
    pub actions: Vec<ActionSpec>,
    /// Variable schema: every amoebot starts with these public variables.
    pub schema: Vec<(String, Value)>,
}

impl AlgorithmSpec {
    pub fn new(
        name: impl Into<String>,
        actions: Vec<ActionSpec>,
        schema: Vec<(String, Value)>,
    ) -> Self {
        AlgorithmSpec {
            name: name.into(),
            actions,
            schema,
        }
    }

    pub fn action(&self, label: &str) -> Option<(usize, &ActionSpec)> {
        self.actions
            .iter()
            .enumerate()
            .find(|(_, a)| a.label == label)
    }

    /// Load-time checks: unique labels and the phase-structure convention
    /// (at most one movement operation, executed last). The operation set has
    /// no lock operations, so that part of the convention holds by
    /// construction.
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.actions {
            if !seen.insert(a.label.as_str()) {
                return Err(AlgorithmError::DuplicateLabel(a.label.clone()));
            }
            let moves = a
                .steps
                .iter()
                .enumerate()
                .filter(|(_, s)| matches!(s, Step::Move))
                .collect::<Vec<_>>();
            match moves.as_slice() {
                [] => {}
                [(i, _)] if *i == a.steps.len() - 1 => {}
                _ => return Err(AlgorithmError::PhaseStructure(a.label.clone())),
            }
        }
        Ok(())
    }

    /// Applies the schema to an amoebot's public memory, keeping any
    /// variables a generator already assigned.
    pub fn init_public(&self, public: &mut crate::value::Memory) {
        for (name, value) in &self.schema {
            if !public.contains(name) {
                public.insert_named(name, *value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn never(_: &View) -> bool {
        false
    }

    fn nop(_: &mut OpCtx) -> Result<(), OpError> {
        Ok(())
    }

    #[test]
    fn movement_not_last_rejected_at_load() {
        let bad = AlgorithmSpec::new(
            "bad",
            vec![ActionSpec::new(
                "a",
                Arc::new(never),
                vec![Step::Move, Step::Compute(Arc::new(nop))],
            )],
            vec![],
        );
        assert_eq!(
            bad.validate(),
            Err(AlgorithmError::PhaseStructure("a".into()))
        );

        let two_moves = AlgorithmSpec::new(
            "bad2",
            vec![ActionSpec::new(
                "a",
                Arc::new(never),
                vec![Step::Compute(Arc::new(nop)), Step::Move, Step::Move],
            )],
            vec![],
        );
        assert!(two_moves.validate().is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let dup = AlgorithmSpec::new(
            "dup",
            vec![
                ActionSpec::stationary("a", Arc::new(never), Arc::new(nop)),
                ActionSpec::stationary("a", Arc::new(never), Arc::new(nop)),
            ],
            vec![],
        );
        assert_eq!(
            dup.validate(),
            Err(AlgorithmError::DuplicateLabel("a".into()))
        );
    }
}
