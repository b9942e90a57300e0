//! Cross-module checks: equivalence replay on pure energy runs, flag
//! clearing through a neighbor's action, and invariant enforcement on a
//! deliberately corrupted configuration history.

use amoebot_core::config::{AmoebotId, AmoebotRecord};
use amoebot_core::energy::{extend_for_energy, transform, DemandFunction};
use amoebot_core::executor::apply_action;
use amoebot_core::lattice::{NodeCoord, Orientation, PortLabel};
use amoebot_core::replay::{project_energy, replay_equivalence};
use amoebot_core::robust::{established_neighborhood, transform_expansion_robust, FLAG_RESET};
use amoebot_core::scheduler::{run, RunOptions, SchedulerPolicy};
use amoebot_core::value::Value;
use amoebot_core::view::View;
use amoebot_core::{fixtures, OpCtx, SystemConfiguration};
use std::sync::Arc;

fn line(n: usize) -> SystemConfiguration {
    SystemConfiguration::from_records((0..n).map(|i| {
        (
            AmoebotId(i as u32),
            AmoebotRecord::contracted(NodeCoord::new(i as i32, 0), Orientation::IDENTITY),
        )
    }))
    .unwrap()
}

fn init(cfg: &mut SystemConfiguration, alg: &amoebot_core::AlgorithmSpec) {
    for id in cfg.ids().collect::<Vec<_>>() {
        let mut public = std::mem::take(&mut cfg.record_mut_pub(id).public);
        alg.init_public(&mut public);
        cfg.record_mut_pub(id).public = public;
    }
}

#[test]
fn pure_energy_run_replays_to_the_empty_execution() {
    // The framework-only workload records a trace whose original-action
    // subsequence is empty; the replayed original execution is the empty
    // execution and the projection stays congruent to C0.
    let base = fixtures::empty_algorithm();
    let constrained = transform(&base, &DemandFunction::uniform(4, 1)).unwrap();
    let mut cfg0_base = line(4);
    init(&mut cfg0_base, &base);
    let mut cfg0_c = cfg0_base.clone();
    init(&mut cfg0_c, &constrained);
    extend_for_energy(&mut cfg0_c, &[AmoebotId(0)]);

    let out = run(
        &constrained,
        &cfg0_c,
        SchedulerPolicy::uniform(),
        11,
        &RunOptions::default(),
    )
    .unwrap();
    assert!(out.terminated);
    replay_equivalence(&out.trace, &constrained, &cfg0_c, &base, &cfg0_base).unwrap();
    assert_eq!(
        project_energy(&out.final_config),
        cfg0_base.projected(&[], true)
    );
}

#[test]
fn tampered_trace_fails_replay() {
    let base = fixtures::mark_once();
    let constrained = transform(&base, &DemandFunction::uniform(4, 1)).unwrap();
    let mut cfg0_base = line(2);
    init(&mut cfg0_base, &base);
    let mut cfg0_c = cfg0_base.clone();
    init(&mut cfg0_c, &constrained);
    extend_for_energy(&mut cfg0_c, &[AmoebotId(0)]);

    let out = run(
        &constrained,
        &cfg0_c,
        SchedulerPolicy::uniform(),
        2,
        &RunOptions::default(),
    )
    .unwrap();
    let mut tampered = out.trace.clone();
    // drop the final record: the recorded final digest no longer matches
    tampered.records.pop();
    assert!(replay_equivalence(&tampered, &constrained, &cfg0_c, &base, &cfg0_base).is_err());
}

#[test]
fn neighbor_action_reestablishes_a_fresh_expander() {
    // After an expansion every new port is flagged; once the neighbor it
    // hides from executes any action, the flags toward it are reset.
    let grow_guard = Arc::new(|v: &View| !v.is_expanded() && v.peek_int(None, "m") == Some(1));
    let grow_ops = Arc::new(|ctx: &mut OpCtx| {
        ctx.write(None, "m", Value::Int(0))?;
        ctx.set_move(amoebot_core::MoveOp::Expand(PortLabel(3)))
    });
    let poke_guard = Arc::new(|v: &View| v.peek_int(None, "m") == Some(2));
    let poke_ops = Arc::new(|ctx: &mut OpCtx| ctx.write(None, "m", Value::Int(0)));
    let base = amoebot_core::AlgorithmSpec::new(
        "poke",
        vec![
            amoebot_core::ActionSpec::with_move("grow", grow_guard, grow_ops),
            amoebot_core::ActionSpec::stationary("poke", poke_guard, poke_ops),
        ],
        vec![("m".into(), Value::Int(0))],
    );
    let robust = transform_expansion_robust(&base).unwrap();
    assert_eq!(robust.actions[0].label, FLAG_RESET);

    // mover at (1,1) expands into (0,1), freshly adjacent to the observer
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
        .insert(amoebot_core::value::intern("m"), Value::Int(1));
    let (_, grow) = robust.action("grow").unwrap();
    apply_action(&mut cfg, AmoebotId(1), grow).unwrap();
    assert!(
        !established_neighborhood(&cfg, AmoebotId(0)).contains(&AmoebotId(1)),
        "fresh expansion hides the mover"
    );

    // the observer executes any action: its preamble resets the established
    // neighbors' flags only, so the hidden mover stays hidden...
    cfg.record_mut_pub(AmoebotId(0))
        .public
        .insert(amoebot_core::value::intern("m"), Value::Int(2));
    let (_, poke) = robust.action("poke").unwrap();
    apply_action(&mut cfg, AmoebotId(0), poke).unwrap();
    assert!(!established_neighborhood(&cfg, AmoebotId(0)).contains(&AmoebotId(1)));

    // ...until the mover's own next action clears its flags.
    let (_, reset) = robust.action(FLAG_RESET).unwrap();
    while cfg.record(AmoebotId(1)).has_flags() {
        apply_action(&mut cfg, AmoebotId(1), reset).unwrap();
    }
    assert!(established_neighborhood(&cfg, AmoebotId(0)).contains(&AmoebotId(1)));
}
