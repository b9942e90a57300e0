//! Leader election by erosion for hole-free, connected systems of contracted
//! amoebots. Candidates erode from the boundary whenever doing so can neither
//! disconnect the remaining set nor open a hole; the last candidate declares
//! itself leader. Stationary: no move phases.

use crate::algorithm::{ActionSpec, AlgorithmSpec};
use crate::executor::{OpCtx, OpError};
use crate::lattice::PortLabel;
use crate::value::{intern, Value};
use crate::view::View;
use std::sync::Arc;

pub const PHASE: &str = "phase";
pub const NULL_CANDIDATE: &str = "null-candidate";
pub const CANDIDATE: &str = "candidate";
pub const ERODED: &str = "eroded";
pub const LEADER: &str = "leader";

fn phase(v: &View, p: Option<PortLabel>) -> Option<&'static str> {
    v.peek_sym(p, PHASE)
}

/// Occupancy pattern of the six neighbor nodes by non-eroded amoebots.
fn remaining_mask(v: &View) -> [bool; 6] {
    let mut mask = [false; 6];
    for d in 0..6u8 {
        let p = PortLabel(d);
        if v.connected(p) == Ok(true) {
            mask[d as usize] = phase(v, Some(p)).is_some_and(|s| s != ERODED);
        }
    }
    mask
}

/// The locally checkable erosion condition on the triangular lattice: the
/// non-eroded neighbors form a single contiguous arc of length 1..=5. Removal
/// of such a node keeps the remaining set connected and hole-free.
fn erodable(mask: &[bool; 6]) -> bool {
    let count = mask.iter().filter(|&&b| b).count();
    if !(1..=5).contains(&count) {
        return false;
    }
    let rises = (0..6).filter(|&i| !mask[i] && mask[(i + 1) % 6]).count();
    rises == 1
}

/// Builds the Leader-Election-by-Erosion algorithm spec.
pub fn leader_election_spec() -> AlgorithmSpec {
    let declare_guard = Arc::new(|v: &View| phase(v, None) == Some(NULL_CANDIDATE));
    let declare_ops = Arc::new(|ctx: &mut OpCtx| set_phase(ctx, CANDIDATE));

    let leader_guard = Arc::new(|v: &View| {
        phase(v, None) == Some(CANDIDATE) && remaining_mask(v).iter().all(|&b| !b)
    });
    let leader_ops = Arc::new(|ctx: &mut OpCtx| set_phase(ctx, LEADER));

    let erode_guard =
        Arc::new(|v: &View| phase(v, None) == Some(CANDIDATE) && erodable(&remaining_mask(v)));
    let erode_ops = Arc::new(|ctx: &mut OpCtx| set_phase(ctx, ERODED));

    AlgorithmSpec::new(
        "leader-election-by-erosion",
        vec![
            ActionSpec::stationary("declare", declare_guard, declare_ops),
            ActionSpec::stationary("declare-leader", leader_guard, leader_ops),
            ActionSpec::stationary("erode", erode_guard, erode_ops),
        ],
        vec![(PHASE.into(), Value::Sym(intern(NULL_CANDIDATE)))],
    )
}

fn set_phase(ctx: &mut OpCtx, to: &'static str) -> Result<(), OpError> {
    ctx.write(None, PHASE, Value::Sym(intern(to)))
}
