//! Action execution: the Connected/Read/Write/Expand/Contract/Push/Pull
//! operation set, run as compute phase then move phase against a
//! configuration. Failures roll the configuration back to its pre-action
//! value, which also implements the undo required by expansion-robust
//! variants.

use crate::algorithm::{ActionSpec, ExpandFailure, Scope, Step};
use crate::config::{AmoebotId, AmoebotRecord, NodeRole, SystemConfiguration, MAX_PUBLIC_VARS};
use crate::lattice::{Edge, NodeCoord, PortLabel};
use crate::value::Value;
use crate::view::View;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OpError {
    #[error("invalid port label {0}")]
    InvalidPort(u8),
    #[error("no neighbor connected via port {0}")]
    Disconnected(u8),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("public memory limit exceeded")]
    MemoryLimit,
    #[error("expand: already expanded")]
    AlreadyExpanded,
    #[error("contract: not expanded")]
    NotExpanded,
    #[error("expand target occupied")]
    ExpandTargetOccupied,
    #[error("push requires a contracted amoebot and an expanded neighbor")]
    BadPush,
    #[error("pull requires an expanded amoebot and a contracted neighbor")]
    BadPull,
    #[error("more than one movement operation in a single action")]
    MultipleMoves,
    #[error("type mismatch for variable `{0}`")]
    TypeMismatch(&'static str),
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("guard of `{label}` is false; execution refused")]
    Refused { label: String },
    #[error("operation failed while executing `{label}`: {source}")]
    OpFailed {
        label: String,
        #[source]
        source: OpError,
    },
}

/// Movement decided during a compute phase and performed last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOp {
    Expand(PortLabel),
    Contract(KeepEnd),
    Push(PortLabel),
    Pull(PortLabel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeepEnd {
    Head,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    Expand,
    Contract,
    Push,
    Pull,
}

/// Geometry of a performed movement, enough to recompute both participants'
/// port sets before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveRecord {
    pub kind: MoveKind,
    pub actor: AmoebotId,
    pub actor_before: (NodeCoord, Option<NodeCoord>),
    pub actor_after: (NodeCoord, Option<NodeCoord>),
    pub partner: Option<AmoebotId>,
    pub partner_before: Option<(NodeCoord, Option<NodeCoord>)>,
    pub partner_after: Option<(NodeCoord, Option<NodeCoord>)>,
}

/// Battery movements observed during an activation; the raw material for the
/// conservation ledger and the recharge oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyEvent {
    Harvest { who: AmoebotId },
    Transfer { from: AmoebotId, to: AmoebotId },
    Spend { who: AmoebotId, amount: u32 },
}

/// Everything one action execution did.
#[derive(Debug, Clone, Default)]
pub struct ExecReport {
    pub label: String,
    pub actor: Option<AmoebotId>,
    /// Amoebots whose public memory or flags were written.
    pub touched: Vec<AmoebotId>,
    /// Individual writes as (target, variable); flags record as `"#flag"`.
    pub writes: Vec<(AmoebotId, &'static str)>,
    pub move_rec: Option<MoveRecord>,
    pub energy_events: Vec<EnergyEvent>,
    /// For the energy-distribution action: predicates satisfied on entry.
    pub support: Vec<&'static str>,
    /// The action ran into a failing Expand and was undone.
    pub expand_undone: bool,
}

impl ExecReport {
    fn new(actor: AmoebotId, label: &str) -> Self {
        ExecReport {
            label: label.to_owned(),
            actor: Some(actor),
            ..Default::default()
        }
    }

    fn touch(&mut self, id: AmoebotId) {
        if !self.touched.contains(&id) {
            self.touched.push(id);
        }
    }

    fn note_write(&mut self, id: AmoebotId, var: &'static str) {
        self.touch(id);
        if !self.writes.contains(&(id, var)) {
            self.writes.push((id, var));
        }
    }
}

enum JournalEntry {
    Record(AmoebotId, AmoebotRecord),
    Occupancy(NodeCoord, Option<(AmoebotId, NodeRole)>),
}

#[derive(Default)]
struct Journal {
    entries: Vec<JournalEntry>,
    backed: Vec<AmoebotId>,
}

impl Journal {
    fn backup_record(&mut self, cfg: &SystemConfiguration, id: AmoebotId) {
        if !self.backed.contains(&id) {
            self.backed.push(id);
            self.entries
                .push(JournalEntry::Record(id, cfg.record(id).clone()));
        }
    }

    fn note_occupancy(&mut self, cfg: &SystemConfiguration, node: NodeCoord) {
        self.entries
            .push(JournalEntry::Occupancy(node, cfg.occupant(node)));
    }

    fn rollback(self, cfg: &mut SystemConfiguration) {
        for entry in self.entries.into_iter().rev() {
            match entry {
                JournalEntry::Record(id, rec) => cfg.restore_record(id, rec),
                JournalEntry::Occupancy(node, old) => cfg.set_occupancy(node, old),
            }
        }
    }
}

impl SystemConfiguration {
    pub(crate) fn restore_record(&mut self, id: AmoebotId, rec: AmoebotRecord) {
        *self.record_mut(id) = rec;
    }
}

/// Mutable operation context handed to compute phases. Read-side methods
/// mirror [`View`]; writes are journaled so a failing action leaves no trace.
pub struct OpCtx<'a> {
    cfg: &'a mut SystemConfiguration,
    actor: AmoebotId,
    scope: Scope,
    journal: Journal,
    pub(crate) report: ExecReport,
    pending_move: Option<MoveOp>,
}

macro_rules! delegate_view {
    ($($(#[$meta:meta])* fn $name:ident($($arg:ident : $ty:ty),*) -> $ret:ty;)*) => {
        $(
            $(#[$meta])*
            pub fn $name(&self, $($arg: $ty),*) -> $ret {
                self.view().$name($($arg),*)
            }
        )*
    };
}

impl<'a> OpCtx<'a> {
    pub fn view(&self) -> View<'_> {
        View::new(self.cfg, self.actor, self.scope)
    }

    delegate_view! {
        fn is_expanded() -> bool;
        fn port_count() -> u8;
        fn edge_via(p: PortLabel) -> Result<Edge, OpError>;
        fn connected(p: PortLabel) -> Result<bool, OpError>;
        fn read(p: Option<PortLabel>, var: &str) -> Result<Value, OpError>;
        fn peek(p: Option<PortLabel>, var: &str) -> Option<Value>;
        fn peek_sym(p: Option<PortLabel>, var: &str) -> Option<&'static str>;
        fn peek_int(p: Option<PortLabel>, var: &str) -> Option<i32>;
        fn port_local_dir(p: PortLabel) -> Result<u8, OpError>;
        fn local_dir_port(d: u8) -> Result<PortLabel, OpError>;
        fn rel_chirality(p: PortLabel) -> Result<i8, OpError>;
        fn translate_dir_from(p: PortLabel, their_dir: u8) -> Result<u8, OpError>;
        fn neighbor_dir_points_at_me(p: PortLabel, var: &str) -> Result<bool, OpError>;
        fn neighbor_node_kind(p: PortLabel) -> Result<crate::view::NodeKind, OpError>;
    }

    pub fn ports(&self) -> Vec<PortLabel> {
        self.view().ports().collect()
    }

    pub(crate) fn connected_ports(&self) -> Vec<(PortLabel, AmoebotId)> {
        self.view().connected_ports().collect()
    }

    pub(crate) fn actor_id(&self) -> AmoebotId {
        self.actor
    }

    pub(crate) fn neighbor_lowest_port_facing_me(&self, p: PortLabel) -> Result<Edge, OpError> {
        self.view().neighbor_lowest_port_facing_me(p)
    }

    fn target_id(&self, p: Option<PortLabel>) -> Result<AmoebotId, OpError> {
        match p {
            None => Ok(self.actor),
            Some(p) => self
                .view()
                .occupant_across(p)?
                .filter(|&id| self.view().in_scope(id))
                .ok_or(OpError::Disconnected(p.0)),
        }
    }

    /// Updates the addressed public memory; visible to all subsequent reads
    /// in the same sequential execution.
    pub fn write(
        &mut self,
        p: Option<PortLabel>,
        var: &'static str,
        value: Value,
    ) -> Result<(), OpError> {
        let id = self.target_id(p)?;
        self.journal.backup_record(self.cfg, id);
        let rec = self.cfg.record_mut(id);
        if !rec.public.contains(var) && rec.public.len() >= MAX_PUBLIC_VARS {
            return Err(OpError::MemoryLimit);
        }
        rec.public.insert(var, value);
        self.report.note_write(id, var);
        Ok(())
    }

    /// Private scratch memory, cleared between activations.
    pub fn private_get(&self, var: &str) -> Option<Value> {
        self.cfg.record(self.actor).private.get(var)
    }

    pub fn private_set(&mut self, var: &'static str, value: Value) {
        self.journal.backup_record(self.cfg, self.actor);
        self.cfg.record_mut(self.actor).private.insert(var, value);
    }

    /// Schedules the movement operation; the move phase executes it last.
    pub fn set_move(&mut self, m: MoveOp) -> Result<(), OpError> {
        if self.pending_move.is_some() {
            return Err(OpError::MultipleMoves);
        }
        self.pending_move = Some(m);
        Ok(())
    }

    pub fn pending_move(&self) -> Option<MoveOp> {
        self.pending_move
    }

    pub(crate) fn note_event(&mut self, ev: EnergyEvent) {
        self.report.energy_events.push(ev);
    }

    pub(crate) fn note_support(&mut self, preds: Vec<&'static str>) {
        self.report.support = preds;
    }

    pub(crate) fn clear_own_flags(&mut self) {
        self.clear_flags_of(self.actor);
    }

    pub(crate) fn clear_flags_of(&mut self, id: AmoebotId) {
        self.journal.backup_record(self.cfg, id);
        let rec = self.cfg.record_mut(id);
        if !rec.flags.is_empty() {
            rec.flags.clear();
            self.report.note_write(id, "#flag");
        }
    }

    /// Clears the lowest-ordered set flag of the actor; true when one existed.
    pub(crate) fn clear_one_own_flag(&mut self) -> bool {
        let first = self.cfg.record(self.actor).flags.iter().next().copied();
        match first {
            Some(edge) => {
                self.journal.backup_record(self.cfg, self.actor);
                self.cfg.record_mut(self.actor).flags.remove(&edge);
                self.report.note_write(self.actor, "#flag");
                true
            }
            None => false,
        }
    }

    pub(crate) fn set_flag_by_id(&mut self, id: AmoebotId, edge: Edge) {
        self.journal.backup_record(self.cfg, id);
        self.cfg.record_mut(id).flags.insert(edge);
        self.report.note_write(id, "#flag");
    }

    pub(crate) fn config(&self) -> &SystemConfiguration {
        self.cfg
    }

    fn perform_move(&mut self, m: MoveOp) -> Result<(), OpError> {
        let actor = self.actor;
        let rec = self.cfg.record(actor).clone();
        let before = (rec.head, rec.tail);
        match m {
            MoveOp::Expand(p) => {
                if rec.is_expanded() {
                    return Err(OpError::AlreadyExpanded);
                }
                let edge = rec.port_edge(p).ok_or(OpError::InvalidPort(p.0))?;
                let target = edge.to;
                if self.cfg.is_occupied(target) {
                    return Err(OpError::ExpandTargetOccupied);
                }
                self.journal.backup_record(self.cfg, actor);
                self.journal.note_occupancy(self.cfg, target);
                self.journal.note_occupancy(self.cfg, rec.head);
                let r = self.cfg.record_mut(actor);
                r.tail = Some(r.head);
                r.head = target;
                self.cfg
                    .set_occupancy(target, Some((actor, NodeRole::Head)));
                self.cfg
                    .set_occupancy(before.0, Some((actor, NodeRole::Tail)));
                self.finish_move(MoveKind::Expand, before, None);
            }
            MoveOp::Contract(keep) => {
                let tail = rec.tail.ok_or(OpError::NotExpanded)?;
                let (kept, vacated) = match keep {
                    KeepEnd::Head => (rec.head, tail),
                    KeepEnd::Tail => (tail, rec.head),
                };
                self.journal.backup_record(self.cfg, actor);
                self.journal.note_occupancy(self.cfg, kept);
                self.journal.note_occupancy(self.cfg, vacated);
                let r = self.cfg.record_mut(actor);
                r.head = kept;
                r.tail = None;
                self.cfg.set_occupancy(vacated, None);
                self.cfg.set_occupancy(kept, Some((actor, NodeRole::Head)));
                self.finish_move(MoveKind::Contract, before, None);
            }
            MoveOp::Push(p) => {
                if rec.is_expanded() {
                    return Err(OpError::BadPush);
                }
                let edge = rec.port_edge(p).ok_or(OpError::InvalidPort(p.0))?;
                let target = edge.to;
                let (partner, _) = self
                    .cfg
                    .occupant(target)
                    .ok_or(OpError::Disconnected(p.0))?;
                let prec = self.cfg.record(partner).clone();
                let ptail = prec.tail.ok_or(OpError::BadPush)?;
                let p_before = (prec.head, prec.tail);
                let p_kept = if target == prec.head {
                    ptail
                } else {
                    prec.head
                };
                self.journal.backup_record(self.cfg, actor);
                self.journal.backup_record(self.cfg, partner);
                self.journal.note_occupancy(self.cfg, target);
                self.journal.note_occupancy(self.cfg, rec.head);
                self.journal.note_occupancy(self.cfg, p_kept);
                let r = self.cfg.record_mut(actor);
                r.tail = Some(r.head);
                r.head = target;
                let q = self.cfg.record_mut(partner);
                q.head = p_kept;
                q.tail = None;
                self.cfg
                    .set_occupancy(target, Some((actor, NodeRole::Head)));
                self.cfg
                    .set_occupancy(before.0, Some((actor, NodeRole::Tail)));
                self.cfg
                    .set_occupancy(p_kept, Some((partner, NodeRole::Head)));
                self.finish_move(MoveKind::Push, before, Some((partner, p_before)));
            }
            MoveOp::Pull(p) => {
                let tail = rec.tail.ok_or(OpError::BadPull)?;
                let edge = rec.port_edge(p).ok_or(OpError::InvalidPort(p.0))?;
                let vacated = edge.from;
                let (partner, _) = self
                    .cfg
                    .occupant(edge.to)
                    .ok_or(OpError::Disconnected(p.0))?;
                let prec = self.cfg.record(partner).clone();
                if prec.is_expanded() {
                    return Err(OpError::BadPull);
                }
                let p_before = (prec.head, prec.tail);
                let kept = if vacated == rec.head { tail } else { rec.head };
                self.journal.backup_record(self.cfg, actor);
                self.journal.backup_record(self.cfg, partner);
                self.journal.note_occupancy(self.cfg, vacated);
                self.journal.note_occupancy(self.cfg, kept);
                self.journal.note_occupancy(self.cfg, prec.head);
                let r = self.cfg.record_mut(actor);
                r.head = kept;
                r.tail = None;
                let q = self.cfg.record_mut(partner);
                q.tail = Some(q.head);
                q.head = vacated;
                self.cfg.set_occupancy(kept, Some((actor, NodeRole::Head)));
                self.cfg
                    .set_occupancy(vacated, Some((partner, NodeRole::Head)));
                self.cfg
                    .set_occupancy(p_before.0, Some((partner, NodeRole::Tail)));
                self.finish_move(MoveKind::Pull, before, Some((partner, p_before)));
            }
        }
        Ok(())
    }

    fn finish_move(
        &mut self,
        kind: MoveKind,
        actor_before: (NodeCoord, Option<NodeCoord>),
        partner: Option<(AmoebotId, (NodeCoord, Option<NodeCoord>))>,
    ) {
        let actor_rec = self.cfg.record(self.actor);
        let partner_after = partner.map(|(id, _)| {
            let r = self.cfg.record(id);
            (r.head, r.tail)
        });
        self.report.move_rec = Some(MoveRecord {
            kind,
            actor: self.actor,
            actor_before,
            actor_after: (actor_rec.head, actor_rec.tail),
            partner: partner.map(|(id, _)| id),
            partner_before: partner.map(|(_, b)| b),
            partner_after,
        });
    }
}

/// Executes one enabled action in place. On any operation failure the
/// configuration is rolled back to its pre-action value and the error is
/// surfaced; an Expand failure is instead absorbed as an undone no-op when
/// the action says so.
pub fn apply_action(
    cfg: &mut SystemConfiguration,
    actor: AmoebotId,
    action: &ActionSpec,
) -> Result<ExecReport, ExecError> {
    let view = View::new(cfg, actor, action.scope);
    if !(action.guard)(&view) {
        return Err(ExecError::Refused {
            label: action.label.clone(),
        });
    }

    let mut ctx = OpCtx {
        cfg,
        actor,
        scope: action.scope,
        journal: Journal::default(),
        report: ExecReport::new(actor, &action.label),
        pending_move: None,
    };

    let mut moved = false;
    for step in &action.steps {
        let result = match step {
            Step::Compute(f) => f(&mut ctx),
            Step::Move => {
                if moved {
                    Err(OpError::MultipleMoves)
                } else {
                    moved = true;
                    match ctx.pending_move.take() {
                        Some(m) => ctx.perform_move(m),
                        None => Ok(()),
                    }
                }
            }
        };
        if let Err(err) = result {
            let OpCtx {
                journal,
                mut report,
                ..
            } = ctx;
            if err == OpError::ExpandTargetOccupied
                && action.expand_failure == ExpandFailure::UndoAction
            {
                journal.rollback(cfg);
                report.touched.clear();
                report.writes.clear();
                report.move_rec = None;
                report.energy_events.clear();
                report.expand_undone = true;
                cfg.record_mut(actor).private.clear();
                return Ok(report);
            }
            journal.rollback(cfg);
            cfg.record_mut(actor).private.clear();
            return Err(ExecError::OpFailed {
                label: action.label.clone(),
                source: err,
            });
        }
    }

    let report = ctx.report;
    cfg.record_mut(actor).private.clear();
    Ok(report)
}

/// Pure form: runs the action against a copy and returns the new
/// configuration with the execution report.
pub fn execute_action(
    cfg: &SystemConfiguration,
    actor: AmoebotId,
    action: &ActionSpec,
) -> Result<(SystemConfiguration, ExecReport), ExecError> {
    let mut next = cfg.clone();
    let report = apply_action(&mut next, actor, action)?;
    Ok((next, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::AlgorithmSpec;
    use crate::lattice::Orientation;
    use crate::view::View;
    use std::sync::Arc;

    fn at(q: i32, r: i32) -> NodeCoord {
        NodeCoord::new(q, r)
    }

    fn cfg_of(nodes: &[(i32, i32)]) -> SystemConfiguration {
        SystemConfiguration::from_records(nodes.iter().enumerate().map(|(i, &(q, r))| {
            (
                AmoebotId(i as u32),
                crate::config::AmoebotRecord::contracted(at(q, r), Orientation::IDENTITY),
            )
        }))
        .unwrap()
    }

    /// An action whose compute phase is driven by a closure chosen per test.
    fn action(ops: ComputeFn) -> ActionSpec {
        ActionSpec::with_move("t", Arc::new(|_: &View| true), ops)
    }

    type ComputeFn = Arc<dyn Fn(&mut OpCtx) -> Result<(), OpError> + Send + Sync>;

    fn run_op(
        cfg: &mut SystemConfiguration,
        actor: u32,
        ops: impl Fn(&mut OpCtx) -> Result<(), OpError> + Send + Sync + 'static,
    ) -> Result<ExecReport, ExecError> {
        apply_action(cfg, AmoebotId(actor), &action(Arc::new(ops)))
    }

    #[test]
    fn connected_reports_occupied_ports_only() {
        let mut cfg = cfg_of(&[(0, 0)]);
        run_op(&mut cfg, 0, |ctx| {
            for p in ctx.ports() {
                assert_eq!(ctx.connected(p), Ok(false), "isolated amoebot");
            }
            Ok(())
        })
        .unwrap();

        let mut cfg = cfg_of(&[(0, 0), (1, 0)]);
        run_op(&mut cfg, 0, |ctx| {
            assert_eq!(ctx.connected(PortLabel(0)), Ok(true), "facing port");
            assert_eq!(ctx.connected(PortLabel(3)), Ok(false));
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn expanded_neighbor_connects_on_two_ports() {
        // contracted at origin; expanded neighbor over (1,0)-(0,1) touches it
        // on two distinct ports
        let mut cfg = cfg_of(&[(0, 0), (1, 0)]);
        run_op(&mut cfg, 1, |ctx| {
            ctx.set_move(MoveOp::Expand(PortLabel(2)))
        })
        .unwrap();
        assert!(cfg.record(AmoebotId(1)).is_expanded());
        let v = View::new(&cfg, AmoebotId(0), crate::algorithm::Scope::Full);
        let facing: Vec<_> = v.connected_ports().collect();
        assert_eq!(facing.len(), 2);
        assert!(facing.iter().all(|&(_, id)| id == AmoebotId(1)));
    }

    #[test]
    fn write_then_read_coherent_and_neighbor_increment() {
        let mut cfg = cfg_of(&[(0, 0), (1, 0)]);
        run_op(&mut cfg, 0, |ctx| {
            ctx.write(None, "x", Value::Int(3))?;
            assert_eq!(ctx.read(None, "x")?, Value::Int(3));
            // Write(p, e_bat, Read(p, e_bat) + 1)
            ctx.write(Some(PortLabel(0)), "e_bat", Value::Int(0))?;
            let b = ctx.read(Some(PortLabel(0)), "e_bat")?.as_int().unwrap();
            ctx.write(Some(PortLabel(0)), "e_bat", Value::Int(b + 1))
        })
        .unwrap();
        assert_eq!(
            cfg.record(AmoebotId(1)).public.get("e_bat"),
            Some(Value::Int(1)),
            "neighbor battery incremented by exactly 1"
        );
    }

    #[test]
    fn read_on_disconnected_port_errors() {
        let mut cfg = cfg_of(&[(0, 0)]);
        let err = run_op(&mut cfg, 0, |ctx| {
            ctx.read(Some(PortLabel(2)), "x").map(|_| ())
        })
        .unwrap_err();
        assert!(matches!(
            err,
            ExecError::OpFailed {
                source: OpError::Disconnected(2),
                ..
            }
        ));
    }

    #[test]
    fn expand_gains_a_node_and_ten_ports() {
        let mut cfg = cfg_of(&[(0, 0)]);
        let before: Vec<_> = cfg.occupied_nodes().collect();
        run_op(&mut cfg, 0, |ctx| {
            ctx.set_move(MoveOp::Expand(PortLabel(2)))
        })
        .unwrap();
        let rec = cfg.record(AmoebotId(0));
        assert_eq!(rec.port_count(), 10);
        assert_eq!(cfg.occupied_nodes().count(), before.len() + 1);
        cfg.check_legal().unwrap();

        // already expanded
        let err = run_op(&mut cfg, 0, |ctx| {
            ctx.set_move(MoveOp::Expand(PortLabel(0)))
        })
        .unwrap_err();
        assert!(matches!(
            err,
            ExecError::OpFailed {
                source: OpError::AlreadyExpanded,
                ..
            }
        ));
    }

    #[test]
    fn expand_into_occupied_node_fails_cleanly() {
        let mut cfg = cfg_of(&[(0, 0), (1, 0)]);
        let before = cfg.clone();
        let err = run_op(&mut cfg, 0, |ctx| {
            ctx.write(None, "x", Value::Int(9))?;
            ctx.set_move(MoveOp::Expand(PortLabel(0)))
        })
        .unwrap_err();
        assert!(matches!(
            err,
            ExecError::OpFailed {
                source: OpError::ExpandTargetOccupied,
                ..
            }
        ));
        assert_eq!(cfg, before, "failed action rolls back its writes");
    }

    #[test]
    fn contract_frees_the_vacated_node_and_keeps_memory() {
        let mut cfg = cfg_of(&[(0, 0)]);
        run_op(&mut cfg, 0, |ctx| {
            ctx.write(None, "keep", Value::Int(7))?;
            ctx.set_move(MoveOp::Expand(PortLabel(0)))
        })
        .unwrap();
        run_op(&mut cfg, 0, |ctx| {
            ctx.set_move(MoveOp::Contract(KeepEnd::Head))
        })
        .unwrap();
        let rec = cfg.record(AmoebotId(0));
        assert!(!rec.is_expanded());
        assert_eq!(rec.head, at(1, 0), "kept the head");
        assert!(!cfg.is_occupied(at(0, 0)));
        assert_eq!(rec.public.get("keep"), Some(Value::Int(7)));
        cfg.check_legal().unwrap();

        let err = run_op(&mut cfg, 0, |ctx| {
            ctx.set_move(MoveOp::Contract(KeepEnd::Head))
        })
        .unwrap_err();
        assert!(matches!(
            err,
            ExecError::OpFailed {
                source: OpError::NotExpanded,
                ..
            }
        ));
    }

    #[test]
    fn push_handover_conserves_occupied_nodes() {
        let mut cfg = cfg_of(&[(0, 0), (1, 0)]);
        run_op(&mut cfg, 1, |ctx| {
            ctx.set_move(MoveOp::Expand(PortLabel(0)))
        })
        .unwrap();
        let nodes_before: std::collections::BTreeSet<_> = cfg.occupied_nodes().collect();
        // 0 pushes the expanded neighbor across port 0
        run_op(&mut cfg, 0, |ctx| ctx.set_move(MoveOp::Push(PortLabel(0)))).unwrap();
        let nodes_after: std::collections::BTreeSet<_> = cfg.occupied_nodes().collect();
        assert_eq!(nodes_before, nodes_after, "handover conserves occupancy");
        assert!(cfg.record(AmoebotId(0)).is_expanded());
        assert!(!cfg.record(AmoebotId(1)).is_expanded());
        cfg.check_legal().unwrap();
    }

    #[test]
    fn pull_leaves_puller_contracted_and_pulled_expanded() {
        let mut cfg = cfg_of(&[(0, 0), (1, 0)]);
        run_op(&mut cfg, 0, |ctx| {
            ctx.set_move(MoveOp::Expand(PortLabel(2)))
        })
        .unwrap();
        // puller contracted afterward, pulled expanded
        run_op(&mut cfg, 0, |ctx| {
            let p = ctx
                .ports()
                .into_iter()
                .find(|&p| ctx.edge_via(p).map(|e| e.to) == Ok(at(1, 0)))
                .unwrap();
            ctx.set_move(MoveOp::Pull(p))
        })
        .unwrap();
        assert!(!cfg.record(AmoebotId(0)).is_expanded());
        assert!(cfg.record(AmoebotId(1)).is_expanded());
        assert_eq!(
            cfg.record(AmoebotId(1)).head,
            at(0, 0),
            "expanded into the vacated node"
        );
        cfg.check_legal().unwrap();
    }

    #[test]
    fn push_of_contracted_neighbor_errors() {
        let mut cfg = cfg_of(&[(0, 0), (1, 0)]);
        let err = run_op(&mut cfg, 0, |ctx| ctx.set_move(MoveOp::Push(PortLabel(0)))).unwrap_err();
        assert!(matches!(
            err,
            ExecError::OpFailed {
                source: OpError::BadPush,
                ..
            }
        ));
    }

    #[test]
    fn guard_false_is_refused_and_empty_move_phase_keeps_occupancy() {
        let mut cfg = cfg_of(&[(0, 0)]);
        let refused = ActionSpec::stationary(
            "never",
            Arc::new(|_: &View| false),
            Arc::new(|_: &mut OpCtx| Ok(())),
        );
        assert!(matches!(
            apply_action(&mut cfg, AmoebotId(0), &refused),
            Err(ExecError::Refused { .. })
        ));

        let before: Vec<_> = cfg.occupied_nodes().collect();
        run_op(&mut cfg, 0, |ctx| ctx.write(None, "x", Value::Int(1))).unwrap();
        let after: Vec<_> = cfg.occupied_nodes().collect();
        assert_eq!(before, after, "no move phase, no occupancy change");
    }

    #[test]
    fn second_move_in_one_action_rejected() {
        let mut cfg = cfg_of(&[(0, 0)]);
        let err = run_op(&mut cfg, 0, |ctx| {
            ctx.set_move(MoveOp::Expand(PortLabel(0)))?;
            ctx.set_move(MoveOp::Expand(PortLabel(1)))
        })
        .unwrap_err();
        assert!(matches!(
            err,
            ExecError::OpFailed {
                source: OpError::MultipleMoves,
                ..
            }
        ));
    }

    #[test]
    fn random_walk_preserves_legality_and_port_counts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut cfg = cfg_of(&[(0, 0), (1, 0), (0, 1), (-1, 1)]);
        let _ = AlgorithmSpec::new("walk", vec![], vec![]);
        for _ in 0..400 {
            let ids: Vec<AmoebotId> = cfg.ids().collect();
            let id = ids[rng.gen_range(0..ids.len())];
            let expanded = cfg.record(id).is_expanded();
            let port = PortLabel(rng.gen_range(0..cfg.record(id).port_count()));
            let mv = match rng.gen_range(0..4) {
                0 => MoveOp::Expand(port),
                1 => MoveOp::Contract(if rng.gen_bool(0.5) {
                    KeepEnd::Head
                } else {
                    KeepEnd::Tail
                }),
                2 => MoveOp::Push(port),
                _ => MoveOp::Pull(port),
            };
            let _ = run_op(&mut cfg, id.0, move |ctx| ctx.set_move(mv));
            cfg.check_legal().expect("legality after every operation");
            let expect = if cfg.record(id).is_expanded() { 10 } else { 6 };
            assert_eq!(cfg.record(id).port_count(), expect);
            let _ = expanded;
        }
    }
}
