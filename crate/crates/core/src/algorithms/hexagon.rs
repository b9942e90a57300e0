//! Hexagon formation: a seed fixes the spiral origin and retires; idle
//! amoebots join a spanning forest behind moving roots; roots traverse the
//! retired structure's boundary with the seed's handedness and retire on the
//! next spiral position; followers advance through handovers with their
//! forest parents. The terminal configuration is the n-node hexagonal spiral.
//!
//! Handedness travels through the structure: every retired amoebot stores
//! `spin`, its local representation of the seed's rotation sense, which a
//! neighbor converts through the pairwise-known relative chirality.

use crate::algorithm::{ActionSpec, AlgorithmSpec};
use crate::executor::{KeepEnd, MoveOp, OpCtx, OpError};
use crate::lattice::PortLabel;
use crate::value::{intern, Value};
use crate::view::{NodeKind, View};
use std::sync::Arc;

pub const ROLE: &str = "role";
pub const SEED: &str = "seed";
pub const IDLE: &str = "idle";
pub const FOLLOWER: &str = "follower";
pub const ROOT: &str = "root";
pub const RETIRED: &str = "retired";

/// Construction direction: local direction label of the next spiral position
/// (retired amoebots only).
pub const CDIR: &str = "cdir";
/// Seed-handedness as seen from the owner's frame: +1 or -1.
pub const SPIN: &str = "spin";
/// Follower parent link, kept as a directed lattice edge.
pub const PDIR: &str = "pdir";

fn role(v: &View, p: Option<PortLabel>) -> Option<&'static str> {
    v.peek_sym(p, ROLE)
}

fn has_neighbor_with_role(v: &View, want: &[&str]) -> bool {
    v.ports()
        .any(|p| v.connected(p) == Ok(true) && role(v, Some(p)).is_some_and(|r| want.contains(&r)))
}

/// Retired-neighbor occupancy over the local directions of a contracted
/// amoebot.
fn retired_mask(v: &View) -> [bool; 6] {
    let mut mask = [false; 6];
    for d in 0..6u8 {
        let p = PortLabel(d);
        if v.connected(p) == Ok(true) && role(v, Some(p)) == Some(RETIRED) {
            mask[d as usize] = true;
        }
    }
    mask
}

fn step_dir(d: u8, by: i8) -> u8 {
    (d as i32 + by as i32).rem_euclid(6) as u8
}

/// The tip port: a retired neighbor whose construction direction points at
/// this (contracted) amoebot's node.
fn tip_port(v: &View) -> Option<PortLabel> {
    (0..6u8).map(PortLabel).find(|&p| {
        v.connected(p) == Ok(true)
            && role(v, Some(p)) == Some(RETIRED)
            && v.neighbor_dir_points_at_me(p, CDIR) == Ok(true)
    })
}

/// Converts a retired neighbor's spin into the observer's frame.
fn spin_via(v: &View, p: PortLabel) -> Option<i8> {
    let s = v.peek_int(Some(p), SPIN)?;
    let rel = v.rel_chirality(p).ok()?;
    Some((s as i8) * rel)
}

fn spin_from_any_retired(v: &View) -> Option<i8> {
    (0..6u8).map(PortLabel).find_map(|p| {
        (v.connected(p) == Ok(true) && role(v, Some(p)) == Some(RETIRED))
            .then(|| spin_via(v, p))
            .flatten()
    })
}

/// Walks from `from` against the spiral sense while retired neighbors
/// continue; the first free direction past that end is where the spiral (or
/// a traversing root) goes next.
fn past_cw_end(mask: &[bool; 6], from: u8, spin: i8) -> u8 {
    let mut d = from;
    for _ in 0..6 {
        let next = step_dir(d, -spin);
        if !mask[next as usize] {
            return next;
        }
        d = next;
    }
    from
}

/// Movement target directions for a traversing root: one candidate per
/// maximal retired run, scanning all of them keeps the rule total even in
/// transient non-contiguous arrangements.
fn root_step_dirs(v: &View) -> Vec<u8> {
    let Some(spin) = spin_from_any_retired(v) else {
        return Vec::new();
    };
    let mask = retired_mask(v);
    (0..6u8)
        .filter(|&d| mask[d as usize] && !mask[step_dir(d, -spin) as usize])
        .map(|d| step_dir(d, -spin))
        .collect()
}

fn retire_condition(v: &View) -> bool {
    !v.is_expanded() && role(v, None) == Some(ROOT) && tip_port(v).is_some()
}

fn set_role(ctx: &mut OpCtx, to: &'static str) -> Result<(), OpError> {
    ctx.write(None, ROLE, Value::Sym(intern(to)))
}

/// A follower neighbor (of any shape) whose parent edge targets `node`.
fn follower_targets_node(v: &View, node: crate::lattice::NodeCoord) -> bool {
    v.ports().any(|p| {
        if v.connected(p) != Ok(true) || role(v, Some(p)) != Some(FOLLOWER) {
            return false;
        }
        matches!(v.peek(Some(p), PDIR), Some(Value::Edge(e)) if e.to == node)
    })
}

/// Builds the Hexagon-Formation algorithm spec. The initial configuration
/// must be connected, all contracted, with exactly one amoebot whose role is
/// `seed`.
pub fn hexagon_formation_spec() -> AlgorithmSpec {
    // seed-retire: the seed fixes the spiral origin and handedness.
    let seed_guard = Arc::new(|v: &View| role(v, None) == Some(SEED));
    let seed_ops = Arc::new(|ctx: &mut OpCtx| {
        set_role(ctx, RETIRED)?;
        ctx.write(None, CDIR, Value::Dir(0))?;
        ctx.write(None, SPIN, Value::Int(1))
    });

    // retire: a contracted root standing on the next spiral position joins
    // the structure and computes its own construction direction.
    let retire_guard = Arc::new(retire_condition);
    let retire_ops = Arc::new(|ctx: &mut OpCtx| {
        let v = ctx.view();
        let tip = tip_port(&v).ok_or(OpError::Disconnected(0))?;
        let spin = spin_via(&v, tip).ok_or(OpError::TypeMismatch(SPIN))?;
        let mask = retired_mask(&v);
        let tip_dir = v.port_local_dir(tip)?;
        let cdir = past_cw_end(&mask, tip_dir, spin);
        set_role(ctx, RETIRED)?;
        ctx.write(None, CDIR, Value::Dir(cdir))?;
        ctx.write(None, SPIN, Value::Int(spin as i32))?;
        ctx.write(None, PDIR, Value::None)
    });

    // idle-to-root: structure-adjacent idle amoebots turn into roots.
    let itr_guard =
        Arc::new(|v: &View| role(v, None) == Some(IDLE) && has_neighbor_with_role(v, &[RETIRED]));
    let itr_ops = Arc::new(|ctx: &mut OpCtx| set_role(ctx, ROOT));

    // follower-to-root: a contracted follower touching the structure stops
    // following and starts traversing.
    let ftr_guard = Arc::new(|v: &View| {
        role(v, None) == Some(FOLLOWER) && !v.is_expanded() && has_neighbor_with_role(v, &[RETIRED])
    });
    let ftr_ops = Arc::new(|ctx: &mut OpCtx| {
        set_role(ctx, ROOT)?;
        ctx.write(None, PDIR, Value::None)
    });

    // idle-to-follower: join the forest behind a root or another follower.
    let itf_guard = Arc::new(|v: &View| {
        role(v, None) == Some(IDLE) && has_neighbor_with_role(v, &[ROOT, FOLLOWER])
    });
    let itf_ops = Arc::new(|ctx: &mut OpCtx| {
        let v = ctx.view();
        let p = v
            .ports()
            .find(|&p| {
                v.connected(p) == Ok(true)
                    && role(&v, Some(p)).is_some_and(|r| r == ROOT || r == FOLLOWER)
            })
            .ok_or(OpError::Disconnected(0))?;
        let edge = ctx.edge_via(p)?;
        set_role(ctx, FOLLOWER)?;
        ctx.write(None, PDIR, Value::Edge(edge))
    });

    // root-pull: an expanded root hands its rear node over to a follower
    // child waiting behind it.
    let root_pull_guard = Arc::new(|v: &View| {
        role(v, None) == Some(ROOT) && v.is_expanded() && pullable_child(v).is_some()
    });
    let root_pull_ops = Arc::new(pull_child_ops);

    // root-contract: finish a traversal step once nobody depends on the rear
    // node.
    let root_contract_guard =
        Arc::new(|v: &View| role(v, None) == Some(ROOT) && v.is_expanded() && may_contract(v));
    let root_contract_ops =
        Arc::new(|ctx: &mut OpCtx| ctx.set_move(MoveOp::Contract(KeepEnd::Head)));

    // root-step: walk the structure boundary with the seed's handedness.
    let root_step_guard = Arc::new(|v: &View| {
        role(v, None) == Some(ROOT)
            && !v.is_expanded()
            && !retire_condition(v)
            && root_step_port(v).is_some()
    });
    let root_step_ops = Arc::new(|ctx: &mut OpCtx| {
        let p = root_step_port(&ctx.view()).ok_or(OpError::Disconnected(0))?;
        ctx.set_move(MoveOp::Expand(p))
    });

    // follower-push: advance into the parent's rear node, forcing the parent
    // to finish its own step.
    let push_guard = Arc::new(|v: &View| {
        role(v, None) == Some(FOLLOWER) && !v.is_expanded() && push_port(v).is_some()
    });
    let push_ops = Arc::new(|ctx: &mut OpCtx| {
        let p = push_port(&ctx.view()).ok_or(OpError::Disconnected(0))?;
        let (their_head, _) = ctx.view().neighbor_nodes(p)?;
        let edge = ctx.edge_via(p)?;
        ctx.write(
            None,
            PDIR,
            Value::Edge(crate::lattice::Edge::new(edge.to, their_head)),
        )?;
        ctx.set_move(MoveOp::Push(p))
    });

    // follower-pull / follower-contract: same rear-node handling as roots.
    let f_pull_guard = Arc::new(|v: &View| {
        role(v, None) == Some(FOLLOWER) && v.is_expanded() && pullable_child(v).is_some()
    });
    let f_pull_ops = Arc::new(pull_child_ops);
    let f_contract_guard =
        Arc::new(|v: &View| role(v, None) == Some(FOLLOWER) && v.is_expanded() && may_contract(v));
    let f_contract_ops = Arc::new(|ctx: &mut OpCtx| ctx.set_move(MoveOp::Contract(KeepEnd::Head)));

    AlgorithmSpec::new(
        "hexagon-formation",
        vec![
            ActionSpec::stationary("seed-retire", seed_guard, seed_ops),
            ActionSpec::stationary("retire", retire_guard, retire_ops),
            ActionSpec::stationary("idle-to-root", itr_guard, itr_ops),
            ActionSpec::stationary("follower-to-root", ftr_guard, ftr_ops),
            ActionSpec::stationary("idle-to-follower", itf_guard, itf_ops),
            ActionSpec::with_move("root-pull", root_pull_guard, root_pull_ops),
            ActionSpec::with_move("root-contract", root_contract_guard, root_contract_ops),
            ActionSpec::with_move("root-step", root_step_guard, root_step_ops),
            ActionSpec::with_move("follower-push", push_guard, push_ops),
            ActionSpec::with_move("follower-pull", f_pull_guard, f_pull_ops),
            ActionSpec::with_move("follower-contract", f_contract_guard, f_contract_ops),
        ],
        vec![
            (ROLE.into(), Value::Sym(intern(IDLE))),
            (CDIR.into(), Value::None),
            (SPIN.into(), Value::None),
            (PDIR.into(), Value::None),
        ],
    )
}

/// Port of a contracted follower child whose parent edge targets the actor's
/// tail node; the port is anchored at the tail so pulling vacates it.
fn pullable_child(v: &View) -> Option<PortLabel> {
    let tail = tail_node(v)?;
    v.ports().find(|&p| {
        let Ok(edge) = v.edge_via(p) else {
            return false;
        };
        if edge.from != tail || v.connected(p) != Ok(true) {
            return false;
        }
        if role(v, Some(p)) != Some(FOLLOWER) {
            return false;
        }
        if v.neighbor_node_kind(p) != Ok(NodeKind::Contracted) {
            return false;
        }
        matches!(v.peek(Some(p), PDIR), Some(Value::Edge(e)) if e.to == tail)
    })
}

fn pull_child_ops(ctx: &mut OpCtx) -> Result<(), OpError> {
    let v = ctx.view();
    let p = pullable_child(&v).ok_or(OpError::Disconnected(0))?;
    let tail = tail_node(&v).ok_or(OpError::NotExpanded)?;
    let head = head_node(&v);
    ctx.write(
        Some(p),
        PDIR,
        Value::Edge(crate::lattice::Edge::new(tail, head)),
    )?;
    ctx.set_move(MoveOp::Pull(p))
}

/// An expanded root/follower may plainly contract only when no follower
/// depends on its rear node and no idle neighbor might rely on it for
/// connectivity.
fn may_contract(v: &View) -> bool {
    let Some(tail) = tail_node(v) else {
        return false;
    };
    !follower_targets_node(v, tail) && !has_neighbor_with_role(v, &[IDLE])
}

fn root_step_port(v: &View) -> Option<PortLabel> {
    for d in root_step_dirs(v) {
        let p = PortLabel(d);
        if v.node_occupied(p) == Ok(false) {
            return Some(p);
        }
    }
    None
}

/// Port of a contracted follower whose parent edge targets the tail node of
/// an expanded root/follower parent: the handover entry point.
fn push_port(v: &View) -> Option<PortLabel> {
    let Some(Value::Edge(e)) = v.peek(None, PDIR) else {
        return None;
    };
    let p = v
        .ports()
        .find(|&p| v.edge_via(p).map(|pe| pe.to) == Ok(e.to))?;
    if v.connected(p) != Ok(true) {
        return None;
    }
    if v.neighbor_node_kind(p) != Ok(NodeKind::Tail) {
        return None;
    }
    role(v, Some(p))
        .is_some_and(|r| r == ROOT || r == FOLLOWER)
        .then_some(p)
}

fn head_node(v: &View) -> crate::lattice::NodeCoord {
    v.config().record(v.actor_id()).head
}

fn tail_node(v: &View) -> Option<crate::lattice::NodeCoord> {
    v.config().record(v.actor_id()).tail
}
