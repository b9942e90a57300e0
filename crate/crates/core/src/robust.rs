//! Expansion-robust variants: per-port expand flags, the established
//! neighborhood, the wrapping transform, and the expansion-correspondence
//! checker.

use crate::algorithm::{ActionSpec, AlgorithmError, AlgorithmSpec, ExpandFailure, Scope, Step};
use crate::config::{AmoebotId, SystemConfiguration};
use crate::energy::{children, ENERGY_ACTION, IDLE, PRUNING, STATE};
use crate::executor::{apply_action, MoveKind, OpCtx, OpError};
use crate::lattice::{
    expanded_port_layout, label_to_direction, Edge, NodeCoord, Orientation, PortLabel,
};
use crate::trace::Trace;
use crate::view::View;
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

/// Label of the prepended flag-reset action.
pub const FLAG_RESET: &str = "flag-reset";

/// Port edges of a shape, independent of any configuration.
fn port_edge_set(head: NodeCoord, tail: Option<NodeCoord>, o: Orientation) -> BTreeSet<Edge> {
    match tail {
        None => (0..6u8)
            .map(|l| {
                let d = label_to_direction(o, PortLabel(l)).unwrap();
                Edge::new(head, head.step(d))
            })
            .collect(),
        Some(t) => expanded_port_layout(head, t, o)
            .expect("legal expanded shape")
            .into_iter()
            .map(|(anchor, d)| Edge::new(anchor, anchor.step(d)))
            .collect(),
    }
}

/// The established neighborhood of an amoebot: neighbors with at least one
/// cleared expand flag on a port facing it.
pub fn established_neighborhood(cfg: &SystemConfiguration, id: AmoebotId) -> BTreeSet<AmoebotId> {
    let view = View::new(cfg, id, Scope::Full);
    let mut out = BTreeSet::new();
    for (_, nb) in view.connected_ports() {
        if view.is_established(nb) {
            out.insert(nb);
        }
    }
    out
}

/// All amoebots adjacent to `id`.
pub fn neighborhood(cfg: &SystemConfiguration, id: AmoebotId) -> BTreeSet<AmoebotId> {
    View::new(cfg, id, Scope::Full)
        .connected_ports()
        .map(|(_, nb)| nb)
        .collect()
}

fn flag_reset_action() -> ActionSpec {
    let guard = Arc::new(|v: &View| v.has_own_flag());
    let ops = Arc::new(|ctx: &mut OpCtx| {
        ctx.clear_one_own_flag();
        Ok(())
    });
    ActionSpec::stationary(FLAG_RESET, guard, ops)
}

fn reset_preamble(ctx: &mut OpCtx) -> Result<(), OpError> {
    ctx.clear_own_flags();
    let mut seen = BTreeSet::new();
    for (_, nb) in ctx.connected_ports() {
        if seen.insert(nb) {
            ctx.clear_flags_of(nb);
        }
    }
    Ok(())
}

fn new_edges(
    before: (NodeCoord, Option<NodeCoord>),
    after: (NodeCoord, Option<NodeCoord>),
    o: Orientation,
) -> Vec<Edge> {
    let old = port_edge_set(before.0, before.1, o);
    port_edge_set(after.0, after.1, o)
        .into_iter()
        .filter(|e| !old.contains(e))
        .collect()
}

fn flag_postlude(ctx: &mut OpCtx) -> Result<(), OpError> {
    let Some(mv) = ctx.report.move_rec.clone() else {
        return Ok(());
    };
    // A handover participant that the energy prelude just made idle or
    // pruning keeps cleared flags: its forest role was reset in the same
    // action, and neighbors must keep seeing it to re-adopt it. Raising
    // flags here would create hidden idle/pruning neighbors, which the
    // established-neighbor property rules out.
    let reset_by_prelude = |ctx: &OpCtx, who: AmoebotId| {
        matches!(
            ctx.config().record(who).public.get(STATE).and_then(crate::value::Value::as_sym),
            Some(s) if s == IDLE || s == PRUNING
        )
    };
    let set_new_flags =
        |ctx: &mut OpCtx, who: AmoebotId, before, after, exclude: Option<AmoebotId>| {
            if reset_by_prelude(ctx, who) {
                return;
            }
            let o = ctx.config().record(who).orientation;
            for edge in new_edges(before, after, o) {
                let facing_excluded = exclude
                    .and_then(|x| ctx.config().occupant(edge.to).map(|(id, _)| id == x))
                    .unwrap_or(false);
                if !facing_excluded {
                    ctx.set_flag_by_id(who, edge);
                }
            }
        };
    match mv.kind {
        MoveKind::Expand => {
            set_new_flags(ctx, mv.actor, mv.actor_before, mv.actor_after, None);
        }
        MoveKind::Push | MoveKind::Pull => {
            let partner = mv.partner.expect("handover has a partner");
            set_new_flags(
                ctx,
                mv.actor,
                mv.actor_before,
                mv.actor_after,
                Some(partner),
            );
            set_new_flags(
                ctx,
                partner,
                mv.partner_before.unwrap(),
                mv.partner_after.unwrap(),
                Some(mv.actor),
            );
        }
        MoveKind::Contract => {}
    }
    Ok(())
}

/// Builds the expansion-robust variant: a flag-reset action plus each input
/// action wrapped to observe only its established neighborhood, reset flags
/// first, raise flags on ports revealed by its movement, and absorb a failed
/// Expand as an undone no-op.
pub fn transform_expansion_robust(a: &AlgorithmSpec) -> Result<AlgorithmSpec, AlgorithmError> {
    a.validate()?;
    let mut actions = vec![flag_reset_action()];
    for action in &a.actions {
        if action.label == FLAG_RESET {
            return Err(AlgorithmError::DuplicateLabel(action.label.clone()));
        }
        let mut steps: Vec<Step> = vec![Step::Compute(Arc::new(reset_preamble))];
        steps.extend(action.steps.iter().cloned());
        if action.has_move_phase() {
            steps.push(Step::Compute(Arc::new(flag_postlude)));
        }
        actions.push(ActionSpec {
            label: action.label.clone(),
            guard: action.guard.clone(),
            steps,
            scope: Scope::Established,
            expand_failure: ExpandFailure::UndoAction,
        });
    }
    Ok(AlgorithmSpec::new(
        format!("{}+robust", a.name),
        actions,
        a.schema.clone(),
    ))
}

#[derive(Debug, Error)]
pub enum CorrespondenceError {
    #[error("trace does not start at the given configuration")]
    InitialMismatch,
    #[error("step {step}: unknown action `{label}`")]
    UnknownAction { step: usize, label: String },
    #[error("step {step}: `{label}` enabled under the established neighborhood but `{label}` disabled under the full neighborhood")]
    EnabledMismatch { step: usize, label: String },
    #[error("step {step}: executing `{label}` under established vs full neighborhoods diverged (modulo flags)")]
    ExecutionDivergence { step: usize, label: String },
    #[error("step {step}: replay failed: {detail}")]
    ReplayFailed { step: usize, detail: String },
    #[error("step {step}: {kind} neighbor {neighbor:?} of {amoebot:?} is not established")]
    EstablishedProperty {
        step: usize,
        kind: &'static str,
        amoebot: AmoebotId,
        neighbor: AmoebotId,
    },
    #[error("{count} consecutive flag-reset executions exceed the churn bound {bound}")]
    FlagChurn { count: usize, bound: usize },
}

/// Established-neighbor property of energy-constrained robust runs: idle,
/// pruning, and child neighbors are always established.
pub fn check_established_property(
    cfg: &SystemConfiguration,
    step: usize,
) -> Result<(), CorrespondenceError> {
    for (id, _) in cfg.amoebots() {
        let view = View::new(cfg, id, Scope::Full);
        let established = established_neighborhood(cfg, id);
        let kids: BTreeSet<AmoebotId> = children(&view).into_iter().map(|(_, c)| c).collect();
        for (p, nb) in view.connected_ports() {
            let state = view.peek_sym(Some(p), STATE);
            let kind = if state == Some(IDLE) {
                Some("idle")
            } else if state == Some(PRUNING) {
                Some("pruning")
            } else if kids.contains(&nb) {
                Some("child")
            } else {
                None
            };
            if let Some(kind) = kind {
                if !established.contains(&nb) {
                    return Err(CorrespondenceError::EstablishedProperty {
                        step,
                        kind,
                        amoebot: id,
                        neighbor: nb,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Walks a sequential trace of the robust variant and asserts
/// expansion-correspondence per step: (1) any enabled wrapped action has its
/// base action enabled under the full neighborhood; (2) executing both from
/// the same configuration yields identical results modulo expand flags. For
/// energy-constrained bases, additionally asserts the established-neighbor
/// property at every step, and always enforces the finite flag-reset churn
/// bound.
pub fn check_expansion_correspondence(
    base: &AlgorithmSpec,
    robust: &AlgorithmSpec,
    cfg0: &SystemConfiguration,
    trace: &Trace,
) -> Result<(), CorrespondenceError> {
    if trace.initial_digest != cfg0.digest() {
        return Err(CorrespondenceError::InitialMismatch);
    }
    let energy_base = base.action(ENERGY_ACTION).is_some();
    let churn_bound = 10 * cfg0.len().max(1);
    let mut cfg = cfg0.clone();
    let mut churn = 0usize;

    for (step, rec) in trace.records.iter().enumerate() {
        if energy_base {
            check_established_property(&cfg, step)?;
        }
        let (_, wrapped) =
            robust
                .action(&rec.action)
                .ok_or_else(|| CorrespondenceError::UnknownAction {
                    step,
                    label: rec.action.clone(),
                })?;

        if rec.action == FLAG_RESET {
            churn += 1;
            if churn > churn_bound {
                return Err(CorrespondenceError::FlagChurn {
                    count: churn,
                    bound: churn_bound,
                });
            }
        } else {
            churn = 0;
            let (_, base_action) =
                base.action(&rec.action)
                    .ok_or_else(|| CorrespondenceError::UnknownAction {
                        step,
                        label: rec.action.clone(),
                    })?;

            // (1) enabled w.r.t. the established neighborhood implies enabled
            // w.r.t. the full neighborhood.
            let full_view = View::new(&cfg, rec.actor, Scope::Full);
            if !(base_action.guard)(&full_view) {
                return Err(CorrespondenceError::EnabledMismatch {
                    step,
                    label: rec.action.clone(),
                });
            }

            // (2) the two executions agree modulo flags.
            let mut via_robust = cfg.clone();
            apply_action(&mut via_robust, rec.actor, wrapped).map_err(|e| {
                CorrespondenceError::ReplayFailed {
                    step,
                    detail: e.to_string(),
                }
            })?;
            let mut via_base = cfg.clone();
            apply_action(&mut via_base, rec.actor, base_action).map_err(|e| {
                CorrespondenceError::ReplayFailed {
                    step,
                    detail: format!("full-neighborhood execution: {e}"),
                }
            })?;
            if via_robust.projected(&[], true) != via_base.projected(&[], true) {
                return Err(CorrespondenceError::ExecutionDivergence {
                    step,
                    label: rec.action.clone(),
                });
            }
        }

        apply_action(&mut cfg, rec.actor, wrapped).map_err(|e| {
            CorrespondenceError::ReplayFailed {
                step,
                detail: e.to_string(),
            }
        })?;
    }
    if energy_base {
        check_established_property(&cfg, trace.records.len())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AmoebotRecord;
    use crate::executor::{KeepEnd, MoveOp};
    use crate::lattice::NodeCoord;
    use crate::value::Value;

    fn pair() -> SystemConfiguration {
        SystemConfiguration::from_records([
            (
                AmoebotId(0),
                AmoebotRecord::contracted(NodeCoord::new(0, 0), Orientation::IDENTITY),
            ),
            (
                AmoebotId(1),
                AmoebotRecord::contracted(NodeCoord::new(1, 0), Orientation::new(2, -1)),
            ),
        ])
        .unwrap()
    }

    fn expander() -> AlgorithmSpec {
        // Expand once into local direction 1 if empty, then stop.
        let guard = Arc::new(|v: &View| {
            !v.is_expanded()
                && v.peek_int(None, "done") == Some(0)
                && v.connected(PortLabel(1)) == Ok(false)
        });
        let ops = Arc::new(|ctx: &mut OpCtx| {
            ctx.write(None, "done", Value::Int(1))?;
            ctx.set_move(MoveOp::Expand(PortLabel(1)))
        });
        AlgorithmSpec::new(
            "expander",
            vec![ActionSpec::with_move("grow", guard, ops)],
            vec![("done".into(), Value::Int(0))],
        )
    }

    fn init(cfg: &mut SystemConfiguration, alg: &AlgorithmSpec) {
        let ids: Vec<_> = cfg.ids().collect();
        for id in ids {
            let mut public = std::mem::take(&mut cfg.record_mut_pub(id).public);
            alg.init_public(&mut public);
            cfg.record_mut_pub(id).public = public;
        }
    }

    #[test]
    fn no_flags_means_full_neighborhood() {
        let cfg = pair();
        assert_eq!(
            established_neighborhood(&cfg, AmoebotId(0)),
            neighborhood(&cfg, AmoebotId(0))
        );
    }

    #[test]
    fn fresh_expansion_flags_all_new_ports_and_hides_the_expander() {
        let alg = transform_expansion_robust(&expander()).unwrap();
        let mut cfg = pair();
        init(&mut cfg, &alg);
        let (_, grow) = alg.action("grow").unwrap();
        apply_action(&mut cfg, AmoebotId(1), grow).unwrap();

        let rec = cfg.record(AmoebotId(1));
        assert!(rec.is_expanded());
        assert_eq!(rec.flags.len(), 5, "five new ports flagged");
        // Amoebot 1 expanded away from 0, so its flags face elsewhere; it
        // stays established for 0 through the original shared edge.
        assert!(established_neighborhood(&cfg, AmoebotId(0)).contains(&AmoebotId(1)));

        // A fresh expansion next to a third amoebot is unestablished for it.
        let mut cfg3 = pair();
        let head1 = cfg3.record(AmoebotId(1)).head;
        let o = Orientation::new(2, -1);
        let target = head1.step(label_to_direction(o, PortLabel(1)).unwrap());
        // place the third amoebot adjacent to the expansion target
        let third = target.step(0);
        cfg3.insert(
            AmoebotId(2),
            AmoebotRecord::contracted(third, Orientation::IDENTITY),
        )
        .unwrap();
        init(&mut cfg3, &alg);
        apply_action(&mut cfg3, AmoebotId(1), grow).unwrap();
        assert!(
            !established_neighborhood(&cfg3, AmoebotId(2)).contains(&AmoebotId(1)),
            "newly revealed ports must hide the expander"
        );
    }

    #[test]
    fn failed_expand_restores_pre_action_state() {
        let alg = transform_expansion_robust(&expander()).unwrap();
        let mut cfg = pair();
        // Amoebot 0 expands into 1's node? No: block 1's target instead.
        let o = Orientation::new(2, -1);
        let head1 = cfg.record(AmoebotId(1)).head;
        let target = head1.step(label_to_direction(o, PortLabel(1)).unwrap());
        cfg.insert(
            AmoebotId(2),
            AmoebotRecord::contracted(target, Orientation::IDENTITY),
        )
        .unwrap();
        init(&mut cfg, &alg);
        // Raise a flag on 2 facing 1 so 1 does not see the blocker.
        let e = Edge::new(target, head1);
        cfg.record_mut_pub(AmoebotId(2)).flags.insert(e);
        let before = cfg.clone();
        let (_, grow) = alg.action("grow").unwrap();
        let report = apply_action(&mut cfg, AmoebotId(1), grow).unwrap();
        assert!(report.expand_undone);
        assert_eq!(cfg, before, "failed expand must restore pre-action values");
    }

    #[test]
    fn flag_reset_clears_one_flag_at_a_time() {
        let alg = transform_expansion_robust(&expander()).unwrap();
        let mut cfg = pair();
        init(&mut cfg, &alg);
        let (_, grow) = alg.action("grow").unwrap();
        apply_action(&mut cfg, AmoebotId(1), grow).unwrap();
        let flags_before = cfg.record(AmoebotId(1)).flags.len();
        assert!(flags_before > 0);
        let (_, reset) = alg.action(FLAG_RESET).unwrap();
        apply_action(&mut cfg, AmoebotId(1), reset).unwrap();
        assert_eq!(cfg.record(AmoebotId(1)).flags.len(), flags_before - 1);
    }

    #[test]
    fn non_corresponding_guard_is_detected() {
        use crate::trace::{ActivationRecord, Trace, TRACE_VERSION};
        // `claim` fires when a particular adjacent node looks empty. Under
        // the established neighborhood a fresh expansion is invisible, so the
        // wrapped guard can hold while the full-neighborhood guard does not:
        // exactly the expansion-correspondence failure the checker reports.
        let grow_guard = Arc::new(|v: &View| {
            !v.is_expanded()
                && v.peek_int(None, "mover") == Some(1)
                && v.peek_int(None, "done") == Some(0)
                && v.connected(PortLabel(3)) == Ok(false)
        });
        let grow_ops = Arc::new(|ctx: &mut OpCtx| {
            ctx.write(None, "done", Value::Int(1))?;
            ctx.set_move(MoveOp::Expand(PortLabel(3)))
        });
        let claim_guard = Arc::new(|v: &View| {
            v.peek_int(None, "mover") == Some(0)
                && v.peek_int(None, "x") == Some(0)
                && v.connected(PortLabel(1)) == Ok(false)
        });
        let claim_ops = Arc::new(|ctx: &mut OpCtx| ctx.write(None, "x", Value::Int(1)));
        let base = AlgorithmSpec::new(
            "watcher",
            vec![
                ActionSpec::with_move("grow", grow_guard, grow_ops),
                ActionSpec::stationary("claim", claim_guard, claim_ops),
            ],
            vec![
                ("mover".into(), Value::Int(0)),
                ("done".into(), Value::Int(0)),
                ("x".into(), Value::Int(0)),
            ],
        );
        let robust = transform_expansion_robust(&base).unwrap();

        // The mover starts out of amoebot 0's neighborhood at (1,1) and
        // expands along global direction 3 into (0,1), entering it freshly.
        let mut cfg = SystemConfiguration::from_records([
            (
                AmoebotId(0),
                AmoebotRecord::contracted(NodeCoord::new(0, 0), Orientation::IDENTITY),
            ),
            (
                AmoebotId(1),
                AmoebotRecord::contracted(NodeCoord::new(1, 1), Orientation::IDENTITY),
            ),
        ])
        .unwrap();
        init(&mut cfg, &robust);
        cfg.record_mut_pub(AmoebotId(1))
            .public
            .insert(crate::value::intern("mover"), Value::Int(1));
        let mut cfg1 = cfg;
        let cfg0 = cfg1.clone();
        let (_, grow) = robust.action("grow").unwrap();
        apply_action(&mut cfg1, AmoebotId(1), grow).unwrap();
        let (_, claim) = robust.action("claim").unwrap();
        apply_action(&mut cfg1, AmoebotId(0), claim).expect("claim fires under N^E");

        let mk = |actor: u32, action: &str| ActivationRecord {
            actor: AmoebotId(actor),
            action: action.into(),
            support: vec![],
            energy_events: vec![],
            pre_digest: None,
            post_digest: None,
            moved: action == "grow",
            undone: false,
        };
        let trace = Trace {
            version: TRACE_VERSION,
            algorithm: robust.name.clone(),
            policy: "manual".into(),
            seed: 0,
            initial_digest: cfg0.digest(),
            records: vec![mk(1, "grow"), mk(0, "claim")],
            round_boundaries: vec![],
            terminated: false,
            final_digest: cfg1.digest(),
        };
        let err = check_expansion_correspondence(&base, &robust, &cfg0, &trace).unwrap_err();
        assert!(
            matches!(err, CorrespondenceError::EnabledMismatch { step: 1, .. }),
            "expected an enabled-mismatch at the claim step, got {err:?}"
        );
    }

    #[test]
    fn pull_handover_flags_exclude_ports_facing_the_partner() {
        // 0 expanded pulling contracted 1.
        let mut cfg = pair();
        cfg.record_mut_pub(AmoebotId(0)).tail = Some(NodeCoord::new(0, 1));
        let cfg = SystemConfiguration::from_records(
            cfg.amoebots()
                .map(|(id, r)| (id, r.clone()))
                .collect::<Vec<_>>(),
        )
        .unwrap();

        let guard = Arc::new(|v: &View| v.is_expanded());
        let ops = Arc::new(|ctx: &mut OpCtx| {
            // pull the contracted neighbor across the port facing (1,0)
            for p in ctx.ports() {
                if ctx.edge_via(p).map(|e| e.to) == Ok(NodeCoord::new(1, 0)) {
                    return ctx.set_move(MoveOp::Pull(p));
                }
            }
            ctx.set_move(MoveOp::Contract(KeepEnd::Head))
        });
        let base = AlgorithmSpec::new(
            "puller",
            vec![ActionSpec::with_move("pull", guard, ops)],
            vec![],
        );
        let alg = transform_expansion_robust(&base).unwrap();
        let mut cfg = cfg;
        init(&mut cfg, &alg);
        let (_, pull) = alg.action("pull").unwrap();
        apply_action(&mut cfg, AmoebotId(0), pull).unwrap();

        let puller = cfg.record(AmoebotId(0));
        let pulled = cfg.record(AmoebotId(1));
        assert!(!puller.is_expanded());
        assert!(pulled.is_expanded());
        for e in &puller.flags {
            assert!(
                !pulled.occupies(e.to),
                "flags facing the partner are not raised"
            );
        }
        for e in &pulled.flags {
            assert!(!puller.occupies(e.to));
        }
        assert!(
            !pulled.flags.is_empty(),
            "the pulled amoebot reveals new ports"
        );
    }
}
