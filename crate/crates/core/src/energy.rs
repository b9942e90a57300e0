//! The energy distribution framework: transforms an energy-compatible
//! algorithm and a demand function into an energy-constrained algorithm that
//! additionally self-organizes a spanning forest rooted at source amoebots
//! and moves energy along it.

use crate::algorithm::{ActionSpec, AlgorithmError, AlgorithmSpec, ComputeFn, GuardFn, Step};
use crate::config::{AmoebotId, SystemConfiguration};
use crate::executor::{EnergyEvent, MoveOp, OpCtx, OpError};
use crate::lattice::PortLabel;
use crate::value::Value;
use crate::view::View;
use std::collections::BTreeMap;
use std::sync::Arc;

pub const STATE: &str = "state";
pub const PARENT: &str = "parent";
pub const EBAT: &str = "e_bat";

pub const SOURCE: &str = "source";
pub const IDLE: &str = "idle";
pub const ACTIVE: &str = "active";
pub const ASKING: &str = "asking";
pub const GROWING: &str = "growing";
pub const PRUNING: &str = "pruning";

/// Label of the appended framework action.
pub const ENERGY_ACTION: &str = "energy-distribution";

/// Names of the five blocks, in execution order.
pub const BLOCKS: [&str; 5] = [
    "GetPruned",
    "AskGrowth",
    "GrowForest",
    "HarvestEnergy",
    "ShareEnergy",
];

/// Battery capacity and demand defaults used by the shipped experiments.
pub const DEFAULT_CAPACITY: u32 = 10;
pub const DEFAULT_DEMAND: u32 = 5;

/// Per-action energy costs, each in `1..=capacity`.
#[derive(Debug, Clone)]
pub struct DemandFunction {
    capacity: u32,
    per_action: BTreeMap<String, u32>,
    uniform: Option<u32>,
}

impl DemandFunction {
    /// The same demand for every action.
    pub fn uniform(capacity: u32, demand: u32) -> Self {
        DemandFunction {
            capacity,
            per_action: BTreeMap::new(),
            uniform: Some(demand),
        }
    }

    pub fn per_action(capacity: u32, demands: impl IntoIterator<Item = (String, u32)>) -> Self {
        DemandFunction {
            capacity,
            per_action: demands.into_iter().collect(),
            uniform: None,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn demand(&self, action: &str) -> Option<u32> {
        self.per_action.get(action).copied().or(self.uniform)
    }
}

/// Snapshot of one amoebot's framework variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyVars {
    pub state: &'static str,
    pub parent: Option<crate::lattice::Edge>,
    pub e_bat: u32,
}

pub fn energy_vars(cfg: &SystemConfiguration, id: AmoebotId) -> Option<EnergyVars> {
    let rec = cfg.get(id)?;
    let state = rec.public.get(STATE)?.as_sym()?;
    let parent = match rec.public.get(PARENT)? {
        Value::Edge(e) => Some(e),
        Value::None => None,
        _ => return None,
    };
    let e_bat = rec.public.get(EBAT)?.as_int()? as u32;
    Some(EnergyVars {
        state,
        parent,
        e_bat,
    })
}

/// Extends a configuration for the energy-constrained run: every amoebot gets
/// `state` (source for the designated ids, idle otherwise), a null parent and
/// an empty battery.
pub fn extend_for_energy(cfg: &mut SystemConfiguration, sources: &[AmoebotId]) {
    let ids: Vec<AmoebotId> = cfg.ids().collect();
    for id in ids {
        let state = if sources.contains(&id) { SOURCE } else { IDLE };
        let rec = cfg.record_mut_pub(id);
        rec.public
            .insert(STATE, Value::Sym(crate::value::intern(state)));
        rec.public.insert(PARENT, Value::None);
        rec.public.insert(EBAT, Value::Int(0));
    }
}

fn state_of(v: &View, p: Option<PortLabel>) -> Option<&'static str> {
    v.peek_sym(p, STATE)
}

fn battery_of(v: &View, p: Option<PortLabel>) -> Option<i32> {
    v.peek_int(p, EBAT)
}

/// Ports whose connected neighbor's parent pointer resolves to the actor.
/// An expanded child adjacent on several ports appears once per port.
pub fn children(v: &View) -> Vec<(PortLabel, AmoebotId)> {
    let me = v.config().record(v.actor_id());
    let mut out = Vec::new();
    for (p, id) in v.connected_ports() {
        let rec = v.config().record(id);
        if let Some(Value::Edge(e)) = rec.public.get(PARENT) {
            if me.occupies(e.to) {
                out.push((p, id));
            }
        }
    }
    out
}

/// Everything the block predicates need from the neighborhood, collected in
/// a single pass over the connected ports.
struct NeighborSurvey {
    has_idle: bool,
    has_asking_child: bool,
    has_hungry_child: bool,
}

fn survey(v: &View, kappa: u32) -> NeighborSurvey {
    let me = v.config().record(v.actor_id());
    let mut s = NeighborSurvey {
        has_idle: false,
        has_asking_child: false,
        has_hungry_child: false,
    };
    for (_, id) in v.connected_ports() {
        let rec = v.config().record(id);
        let state = rec.public.get(STATE).and_then(Value::as_sym);
        if state == Some(IDLE) {
            s.has_idle = true;
        }
        let is_child = matches!(rec.public.get(PARENT), Some(Value::Edge(e)) if me.occupies(e.to));
        if is_child {
            if state == Some(ASKING) {
                s.has_asking_child = true;
            }
            if rec
                .public
                .get(EBAT)
                .and_then(Value::as_int)
                .is_some_and(|b| b < kappa as i32)
            {
                s.has_hungry_child = true;
            }
        }
    }
    s
}

/// Block predicates as a bitmask over [`BLOCKS`], allocation-free for guard
/// evaluation.
pub fn energy_support_mask(v: &View, kappa: u32) -> u8 {
    let mut mask = 0u8;
    let st = state_of(v, None);
    let bat = battery_of(v, None).unwrap_or(0);
    // the survey is only needed when some block could depend on it
    let st_is = |x: &str| st == Some(x);
    let needs_survey = st_is(ACTIVE)
        || st_is(SOURCE)
        || st_is(GROWING)
        || (bat >= 1 && st.is_some_and(|x| x != IDLE && x != PRUNING));
    let s = if needs_survey {
        survey(v, kappa)
    } else {
        NeighborSurvey {
            has_idle: false,
            has_asking_child: false,
            has_hungry_child: false,
        }
    };
    let growth_demand = s.has_idle || s.has_asking_child;
    if st_is(PRUNING) {
        mask |= 1 << 0;
    }
    if st_is(ACTIVE) && growth_demand {
        mask |= 1 << 1;
    }
    if st_is(GROWING) || (st_is(SOURCE) && growth_demand) {
        mask |= 1 << 2;
    }
    if st_is(SOURCE) && bat < kappa as i32 {
        mask |= 1 << 3;
    }
    if st.is_some_and(|x| x != IDLE && x != PRUNING) && bat >= 1 && s.has_hungry_child {
        mask |= 1 << 4;
    }
    mask
}

/// Evaluates the five block predicates; the result is the supporting subset
/// for this activation and the action is enabled iff it is non-empty.
pub fn energy_support(v: &View, kappa: u32) -> Vec<&'static str> {
    let mask = energy_support_mask(v, kappa);
    BLOCKS
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, b)| *b)
        .collect()
}

fn write_state(ctx: &mut OpCtx, p: Option<PortLabel>, state: &'static str) -> Result<(), OpError> {
    ctx.write(p, STATE, Value::Sym(state))
}

/// The Prune helper: children become pruning with null parents; a non-source
/// executor becomes idle.
fn prune(ctx: &mut OpCtx) -> Result<(), OpError> {
    let kids: Vec<PortLabel> = children(&ctx.view()).into_iter().map(|(p, _)| p).collect();
    for p in kids {
        if ctx.peek_sym(Some(p), STATE) != Some(SOURCE) {
            write_state(ctx, Some(p), PRUNING)?;
        }
        ctx.write(Some(p), PARENT, Value::None)?;
    }
    if ctx.peek_sym(None, STATE) != Some(SOURCE) {
        write_state(ctx, None, IDLE)?;
    }
    Ok(())
}

/// The five blocks, each re-evaluating its predicate against the current
/// (possibly block-modified) state inside one activation.
fn energy_distribution_ops(ctx: &mut OpCtx, kappa: u32) -> Result<(), OpError> {
    let support = energy_support(&ctx.view(), kappa);
    ctx.note_support(support);

    // GetPruned
    if ctx.peek_sym(None, STATE) == Some(PRUNING) {
        prune(ctx)?;
    }

    // AskGrowth
    {
        let v = ctx.view();
        let s = survey(&v, kappa);
        if state_of(&v, None) == Some(ACTIVE) && (s.has_idle || s.has_asking_child) {
            write_state(ctx, None, ASKING)?;
        }
    }

    // GrowForest
    {
        let v = ctx.view();
        let s = survey(&v, kappa);
        let st = state_of(&v, None);
        let fires =
            st == Some(GROWING) || (st == Some(SOURCE) && (s.has_idle || s.has_asking_child));
        if fires {
            for p in ctx.ports() {
                if ctx.connected(p)? && ctx.peek_sym(Some(p), STATE) == Some(IDLE) {
                    let facing = ctx.neighbor_lowest_port_facing_me(p)?;
                    ctx.write(Some(p), PARENT, Value::Edge(facing))?;
                    write_state(ctx, Some(p), ACTIVE)?;
                }
            }
            let asking_kids: Vec<PortLabel> = children(&ctx.view())
                .into_iter()
                .filter(|&(p, _)| ctx.peek_sym(Some(p), STATE) == Some(ASKING))
                .map(|(p, _)| p)
                .collect();
            for p in asking_kids {
                write_state(ctx, Some(p), GROWING)?;
            }
            if ctx.peek_sym(None, STATE) == Some(GROWING) {
                write_state(ctx, None, ACTIVE)?;
            }
        }
    }

    // HarvestEnergy
    if ctx.peek_sym(None, STATE) == Some(SOURCE) {
        let bat = ctx.peek_int(None, EBAT).unwrap_or(0);
        if bat < kappa as i32 {
            ctx.write(None, EBAT, Value::Int(bat + 1))?;
            ctx.note_event(EnergyEvent::Harvest {
                who: ctx.actor_id(),
            });
        }
    }

    // ShareEnergy
    {
        let v = ctx.view();
        let st = state_of(&v, None);
        let bat = battery_of(&v, None).unwrap_or(0);
        if st.is_some_and(|s| s != IDLE && s != PRUNING) && bat >= 1 {
            let recipient = children(&v)
                .into_iter()
                .find(|&(p, _)| battery_of(&v, Some(p)).is_some_and(|b| b < kappa as i32));
            if let Some((p, id)) = recipient {
                let child_bat = ctx.peek_int(Some(p), EBAT).unwrap_or(0);
                ctx.write(None, EBAT, Value::Int(bat - 1))?;
                ctx.write(Some(p), EBAT, Value::Int(child_bat + 1))?;
                ctx.note_event(EnergyEvent::Transfer {
                    from: ctx.actor_id(),
                    to: id,
                });
            }
        }
    }

    Ok(())
}

/// The appended framework action.
pub fn energy_distribution_action(kappa: u32) -> ActionSpec {
    let guard: GuardFn = Arc::new(move |v: &View| energy_support_mask(v, kappa) != 0);
    let ops: ComputeFn = Arc::new(move |ctx: &mut OpCtx| energy_distribution_ops(ctx, kappa));
    ActionSpec::stationary(ENERGY_ACTION, guard, ops)
}

/// `forall B in N(A) u {A}: B.state not in {idle, pruning}` from the
/// transformed guards. A missing state variable counts as not ready.
fn forest_ready(v: &View) -> bool {
    let ok = |s: Option<&'static str>| s.is_some_and(|s| s != IDLE && s != PRUNING);
    if !ok(state_of(v, None)) {
        return false;
    }
    v.connected_ports().all(|(_, id)| {
        ok(v.config()
            .record(id)
            .public
            .get(STATE)
            .and_then(Value::as_sym))
    })
}

/// The prune prelude inserted before a movement: Contract and Pull prune the
/// mover immediately; Push marks both participants pruning. Expansion keeps
/// the mover's original node, so incident parent edges stay valid and no
/// pruning is needed. Source amoebots never change state.
fn prune_prelude(ctx: &mut OpCtx) -> Result<(), OpError> {
    match ctx.pending_move() {
        Some(MoveOp::Contract(_)) | Some(MoveOp::Pull(_)) => {
            ctx.write(None, PARENT, Value::None)?;
            prune(ctx)?;
        }
        Some(MoveOp::Push(p)) => {
            ctx.write(None, PARENT, Value::None)?;
            ctx.write(Some(p), PARENT, Value::None)?;
            if ctx.peek_sym(None, STATE) != Some(SOURCE) {
                write_state(ctx, None, PRUNING)?;
            }
            if ctx.peek_sym(Some(p), STATE) != Some(SOURCE) {
                write_state(ctx, Some(p), PRUNING)?;
            }
        }
        Some(MoveOp::Expand(_)) | None => {}
    }
    Ok(())
}

/// Builds the energy-constrained version of an algorithm: each action gains
/// the battery and forest-readiness guard conditions, spends its demand
/// first, and prunes around movements; the energy-distribution action is
/// appended last.
pub fn transform(
    a: &AlgorithmSpec,
    delta: &DemandFunction,
) -> Result<AlgorithmSpec, AlgorithmError> {
    a.validate()?;
    for (name, _) in &a.schema {
        if name == STATE || name == PARENT || name == EBAT {
            return Err(AlgorithmError::ReservedVariable(name.clone()));
        }
    }
    let kappa = delta.capacity();
    let mut actions = Vec::with_capacity(a.actions.len() + 1);
    for action in &a.actions {
        if action.label == ENERGY_ACTION {
            return Err(AlgorithmError::DuplicateLabel(action.label.clone()));
        }
        let demand = delta
            .demand(&action.label)
            .ok_or_else(|| AlgorithmError::DemandOutOfRange(action.label.clone(), 0, kappa))?;
        if demand < 1 || demand > kappa {
            return Err(AlgorithmError::DemandOutOfRange(
                action.label.clone(),
                demand,
                kappa,
            ));
        }

        let base_guard = action.guard.clone();
        let guard: GuardFn = Arc::new(move |v: &View| {
            base_guard(v)
                && battery_of(v, None).is_some_and(|b| b >= demand as i32)
                && forest_ready(v)
        });

        let spend: ComputeFn = Arc::new(move |ctx: &mut OpCtx| {
            let bat = ctx
                .read(None, EBAT)?
                .as_int()
                .ok_or(OpError::TypeMismatch(EBAT))?;
            ctx.write(None, EBAT, Value::Int(bat - demand as i32))?;
            ctx.note_event(EnergyEvent::Spend {
                who: ctx.actor_id(),
                amount: demand,
            });
            Ok(())
        });

        let mut steps: Vec<Step> = vec![Step::Compute(spend)];
        let mut move_seen = false;
        for step in &action.steps {
            match step {
                Step::Compute(f) => steps.push(Step::Compute(f.clone())),
                Step::Move => {
                    move_seen = true;
                    steps.push(Step::Compute(Arc::new(prune_prelude)));
                    steps.push(Step::Move);
                }
            }
        }
        let _ = move_seen;

        actions.push(ActionSpec {
            label: action.label.clone(),
            guard,
            steps,
            scope: action.scope,
            expand_failure: action.expand_failure,
        });
    }
    actions.push(energy_distribution_action(kappa));

    let mut schema = a.schema.clone();
    schema.push((STATE.into(), Value::Sym(crate::value::intern(IDLE))));
    schema.push((PARENT.into(), Value::None));
    schema.push((EBAT.into(), Value::Int(0)));

    Ok(AlgorithmSpec::new(
        format!("{}+energy", a.name),
        actions,
        schema,
    ))
}
