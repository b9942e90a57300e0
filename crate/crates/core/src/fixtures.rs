//! Small test algorithms: a framework-only workload, a one-shot stationary
//! toy, a nonterminating ticker, and an adversarial fixture that disconnects
//! the system (a deliberate Convention 3 violator).

use crate::algorithm::{ActionSpec, AlgorithmSpec};
use crate::executor::{KeepEnd, MoveOp, OpCtx, OpError};
use crate::lattice::PortLabel;
use crate::value::Value;
use crate::view::View;
use std::sync::Arc;

/// No actions at all: under the energy transform only the framework action
/// remains, which forces pure energy runs.
pub fn empty_algorithm() -> AlgorithmSpec {
    AlgorithmSpec::new("empty", vec![], vec![])
}

/// Every amoebot flips its `x` from 0 to 1 exactly once, then quiesces.
pub fn mark_once() -> AlgorithmSpec {
    let guard = Arc::new(|v: &View| v.peek_int(None, "x") == Some(0));
    let ops = Arc::new(|ctx: &mut OpCtx| ctx.write(None, "x", Value::Int(1)));
    AlgorithmSpec::new(
        "mark-once",
        vec![ActionSpec::stationary("mark", guard, ops)],
        vec![("x".into(), Value::Int(0))],
    )
}

/// Always enabled; toggles `x` forever. Useful for round-accounting tests and
/// budget-exhaustion paths.
pub fn ticker() -> AlgorithmSpec {
    let guard = Arc::new(|_: &View| true);
    let ops = Arc::new(|ctx: &mut OpCtx| {
        let x = ctx.peek_int(None, "x").unwrap_or(0);
        ctx.write(None, "x", Value::Int(1 - x))
    });
    AlgorithmSpec::new(
        "ticker",
        vec![ActionSpec::stationary("tick", guard, ops)],
        vec![("x".into(), Value::Int(0))],
    )
}

fn sole_connected_port(v: &View) -> Option<PortLabel> {
    let mut found = None;
    for p in v.ports() {
        if v.connected(p).ok()? {
            if found.is_some() {
                return None;
            }
            found = Some(p);
        }
    }
    found
}

/// Adversarial fixture: an amoebot with a single neighbor expands directly
/// away from it and then contracts into the far node, disconnecting the
/// system. Violates Convention 3 by design.
pub fn disconnecting() -> AlgorithmSpec {
    let expand_guard = Arc::new(|v: &View| {
        if v.is_expanded() {
            return false;
        }
        match sole_connected_port(v) {
            Some(p) => {
                let away = PortLabel((p.0 + 3) % 6);
                v.connected(away) == Ok(false)
            }
            None => false,
        }
    });
    let expand_ops = Arc::new(|ctx: &mut OpCtx| {
        let p = sole_connected_port(&ctx.view()).ok_or(OpError::Disconnected(0))?;
        ctx.set_move(MoveOp::Expand(PortLabel((p.0 + 3) % 6)))
    });

    let contract_guard = Arc::new(|v: &View| v.is_expanded());
    let contract_ops = Arc::new(|ctx: &mut OpCtx| ctx.set_move(MoveOp::Contract(KeepEnd::Head)));

    AlgorithmSpec::new(
        "disconnecting-fixture",
        vec![
            ActionSpec::with_move("flee-expand", expand_guard, expand_ops),
            ActionSpec::with_move("flee-contract", contract_guard, contract_ops),
        ],
        vec![],
    )
}
