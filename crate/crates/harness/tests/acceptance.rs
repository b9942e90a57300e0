//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured numbers (run with `--nocapture` to see them). Frozen
//! constants were fitted once on calibration runs and are asserted as-is.

use amoebot_core::algorithms::leader::{LEADER, PHASE};
use amoebot_core::algorithms::spiral::{shapes_equal_up_to_symmetry, spiral_positions};
use amoebot_core::config::{AmoebotId, AmoebotRecord};
use amoebot_core::conventions::{check_conventions, ConventionViolation};
use amoebot_core::energy::{transform, DemandFunction, ACTIVE, EBAT, PARENT, SOURCE, STATE};
use amoebot_core::enumerate::enumerate_all_executions;
use amoebot_core::invariants::{stable_set, total_battery, EnergyMonitor};
use amoebot_core::lattice::{Edge, NodeCoord, Orientation};
use amoebot_core::recharge::{check_dominance, greedy_parallel_recharge};
use amoebot_core::replay::{project_energy, replay_equivalence};
use amoebot_core::robust::check_expansion_correspondence;
use amoebot_core::scheduler::{run, run_observed, RunOptions, Scheduler, SchedulerPolicy};
use amoebot_core::value::{intern, Value};
use amoebot_core::{fixtures, AlgorithmSpec, SystemConfiguration};
use amoebot_harness::fit::loglog_slope;
use amoebot_harness::generate::{generate_initial, init_schema, Shape};
use amoebot_harness::runcfg::ExperimentConfig;
use amoebot_harness::setup::{energy, plain, robust_energy, Workload};
use amoebot_harness::sweep::{mean_rounds, sweep, write_csv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::Instant;

// Constants fitted once on calibration runs and frozen. Measured worst cases:
// leader election 0.82 n^3 at n = 5, hexagon 0.59 n^4 at n = 5, stable trees
// 0.11 n^2 at n = 10, recharge 6.6 n at n = 10.
const C_LEADER_N3: f64 = 2.5;
const C_HEXAGON_N4: f64 = 2.0;
const C1_STABLE_N2: f64 = 0.5;
const C2_RECHARGE_N: f64 = 12.0;

fn pass(criterion: u32, name: &str, details: String) {
    println!("ACCEPTANCE {criterion} {name}: PASS ({details})");
}

/// A rooted path of `k` amoebots already organized as a stable tree
/// (`A_1` the source, parents chained toward it), batteries empty: the
/// precondition of the dominance lemma.
fn stable_path(
    k: usize,
    kappa: u32,
    seed: u64,
) -> (AlgorithmSpec, SystemConfiguration, Vec<AmoebotId>) {
    let alg = transform(
        &fixtures::empty_algorithm(),
        &DemandFunction::uniform(kappa, 1),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = SystemConfiguration::new();
    for i in 0..k {
        let o = Orientation::new(rng.gen_range(0..6), if rng.gen_bool(0.5) { 1 } else { -1 });
        cfg.insert(
            AmoebotId(i as u32),
            AmoebotRecord::contracted(NodeCoord::new(i as i32, 0), o),
        )
        .unwrap();
    }
    let ids: Vec<AmoebotId> = cfg.ids().collect();
    for (i, &id) in ids.iter().enumerate() {
        let rec = cfg.record_mut_pub(id);
        let state = if i == 0 { SOURCE } else { ACTIVE };
        rec.public.insert(STATE, Value::Sym(intern(state)));
        rec.public.insert(EBAT, Value::Int(0));
        let parent = if i == 0 {
            Value::None
        } else {
            Value::Edge(Edge::new(
                NodeCoord::new(i as i32, 0),
                NodeCoord::new(i as i32 - 1, 0),
            ))
        };
        rec.public.insert(PARENT, parent);
    }
    (alg, cfg, ids)
}

fn count_leaders(cfg: &SystemConfiguration) -> usize {
    cfg.amoebots()
        .filter(|(_, r)| r.public.get(PHASE).and_then(Value::as_sym) == Some(LEADER))
        .count()
}

fn is_spiral(cfg: &SystemConfiguration, n: usize) -> bool {
    let got: BTreeSet<_> = cfg.occupied_nodes().collect();
    let want: BTreeSet<_> = spiral_positions(n).into_iter().collect();
    shapes_equal_up_to_symmetry(&got, &want)
}

#[test]
fn acceptance_1_parallel_recharge_oracle_exact() {
    let t = Instant::now();
    for k in 1..=50usize {
        for kappa in 1..=10u32 {
            assert_eq!(
                greedy_parallel_recharge(k, kappa),
                k as u32 * kappa,
                "k={k} kappa={kappa}"
            );
        }
    }
    let elapsed = t.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "oracle too slow: {elapsed:?}");
    pass(
        1,
        "parallel-recharge-oracle",
        format!("500 cases exact in {elapsed:?}"),
    );
}

#[test]
fn acceptance_2_dominance_on_seeded_recharge_traces() {
    let t = Instant::now();
    let policies = SchedulerPolicy::all_shipped();
    let mut checked = 0u32;
    for i in 0..1000u64 {
        let k = 2 + (i % 7) as usize; // 2..=8
        let kappa = 1 + ((i / 7) % 5) as u32; // 1..=5
        let policy = policies[(i % policies.len() as u64) as usize];
        let (alg, cfg0, path) = stable_path(k, kappa, i);
        let mut monitor = EnergyMonitor::new(kappa, &cfg0).unwrap();
        let out = run_observed(&alg, &cfg0, policy, i, &RunOptions::default(), &mut monitor)
            .unwrap_or_else(|e| panic!("trace {i} (k={k} kappa={kappa}): {e}"));
        assert!(out.terminated, "trace {i} did not terminate");
        check_dominance(&out.trace, &path, kappa)
            .unwrap_or_else(|e| panic!("trace {i} (k={k} kappa={kappa}): {e}"));
        checked += 1;
    }
    pass(
        2,
        "dominance",
        format!("{checked} traces, zero violations, {:?}", t.elapsed()),
    );
}

#[test]
fn acceptance_3_equivalence_exhaustive() {
    let t = Instant::now();
    let kappa = 2;
    let demand = 1;
    let mut total_constrained = 0usize;

    // toy stationary workload
    for n in 1..=3usize {
        let base = fixtures::mark_once();
        let constrained = transform(&base, &DemandFunction::uniform(kappa, demand)).unwrap();
        let mut cfg0 = generate_initial(Shape::Line, n, n as u64).unwrap();
        init_schema(&mut cfg0, &base);
        let mut cfg0_c = cfg0.clone();
        init_schema(&mut cfg0_c, &constrained);
        amoebot_core::energy::extend_for_energy(&mut cfg0_c, &[AmoebotId(0)]);

        let c_enum = enumerate_all_executions(&constrained, &cfg0_c, 5_000_000).unwrap();
        let b_enum = enumerate_all_executions(&base, &cfg0, 1_000_000).unwrap();
        let base_digests = b_enum.terminal_digests();
        for cfg in c_enum.terminals.values() {
            let projected = project_energy(cfg).digest();
            assert!(
                base_digests.contains(&projected),
                "mark-once n={n}: constrained terminal not reachable by the original"
            );
        }
        total_constrained += c_enum.terminals.len();
    }

    // leader election
    for n in 1..=3usize {
        let s = energy(
            Workload::LeaderElection,
            Shape::Line,
            n,
            1,
            kappa,
            demand,
            1,
        )
        .unwrap();
        let c_enum =
            enumerate_all_executions(&s.constrained, &s.cfg0_constrained, 5_000_000).unwrap();
        let b_enum = enumerate_all_executions(&s.original, &s.cfg0_original, 1_000_000).unwrap();
        let base_digests = b_enum.terminal_digests();
        for cfg in c_enum.terminals.values() {
            let projected = project_energy(cfg).digest();
            assert!(
                base_digests.contains(&projected),
                "leader election n={n}: constrained terminal not reachable by the original"
            );
            assert_eq!(
                count_leaders(cfg),
                1,
                "leader election n={n}: terminal without unique leader"
            );
        }
        total_constrained += c_enum.terminals.len();
    }

    let elapsed = t.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "exhaustive check too slow: {elapsed:?}"
    );
    pass(
        3,
        "equivalence-exhaustive",
        format!("projected terminal sets included, {total_constrained} terminals, {elapsed:?}"),
    );
}

#[test]
fn acceptance_4_equivalence_randomized() {
    let t = Instant::now();
    let policies = SchedulerPolicy::all_shipped();
    let sizes = [10usize, 25, 50];
    for workload in [Workload::LeaderElection, Workload::HexagonFormation] {
        let mut done = 0;
        'outer: for seed in 0..17u64 {
            for &n in &sizes {
                for &policy in &policies {
                    if done == 200 {
                        break 'outer;
                    }
                    let run_seed = seed * 1000 + n as u64;
                    let s =
                        energy(workload, workload.default_shape(), n, run_seed, 10, 5, 1).unwrap();
                    let mut monitor = EnergyMonitor::new(s.kappa, &s.cfg0_constrained).unwrap();
                    let out = run_observed(
                        &s.constrained,
                        &s.cfg0_constrained,
                        policy,
                        run_seed,
                        &RunOptions::default(),
                        &mut monitor,
                    )
                    .unwrap_or_else(|e| panic!("{workload:?} n={n} {}: {e}", policy.name()));
                    assert!(
                        out.terminated,
                        "{workload:?} n={n} {} did not terminate",
                        policy.name()
                    );
                    replay_equivalence(
                        &out.trace,
                        &s.constrained,
                        &s.cfg0_constrained,
                        &s.original,
                        &s.cfg0_original,
                    )
                    .unwrap_or_else(|e| {
                        panic!("{workload:?} n={n} {} seed={run_seed}: {e}", policy.name())
                    });
                    done += 1;
                }
            }
        }
        assert_eq!(done, 200, "{workload:?}: expected 200 replayed traces");
    }
    pass(
        4,
        "equivalence-randomized",
        format!("2 x 200 traces replayed, {:?}", t.elapsed()),
    );
}

#[test]
fn acceptance_5_invariant_suite() {
    // Criteria 2, 4 and 8 already attach the per-step monitor to every trace
    // they produce; this batch re-runs a representative mix with the full
    // (stride 1) monitor and asserts the invariants and the exact
    // conservation ledger once more.
    let t = Instant::now();
    let mut traces = 0u32;
    for i in 0..60u64 {
        let k = 2 + (i % 7) as usize;
        let kappa = 1 + (i % 5) as u32;
        let (alg, cfg0, _) = stable_path(k, kappa, i);
        let mut monitor = EnergyMonitor::new(kappa, &cfg0).unwrap();
        let out = run_observed(
            &alg,
            &cfg0,
            SchedulerPolicy::all_shipped()[(i % 4) as usize],
            i,
            &RunOptions::default(),
            &mut monitor,
        )
        .unwrap();
        assert!(out.terminated);
        assert_eq!(
            total_battery(&out.final_config).unwrap(),
            k as u64 * kappa as u64,
            "terminated recharge must fill every battery"
        );
        traces += 1;
    }
    for (i, workload) in [Workload::LeaderElection, Workload::HexagonFormation]
        .into_iter()
        .cycle()
        .take(40)
        .enumerate()
    {
        let n = [10usize, 25, 50][i % 3];
        let seed = i as u64;
        let s = energy(workload, workload.default_shape(), n, seed, 10, 5, 1).unwrap();
        let mut monitor = EnergyMonitor::new(s.kappa, &s.cfg0_constrained).unwrap();
        let out = run_observed(
            &s.constrained,
            &s.cfg0_constrained,
            SchedulerPolicy::all_shipped()[i % 4],
            seed,
            &RunOptions::default(),
            &mut monitor,
        )
        .unwrap_or_else(|e| panic!("{workload:?} n={n}: {e}"));
        assert!(out.terminated);
        traces += 1;
    }
    pass(
        5,
        "invariant-suite",
        format!(
            "{traces} fully monitored traces, zero violations, {:?}",
            t.elapsed()
        ),
    );
}

#[test]
fn acceptance_6_workload_correctness() {
    let t = Instant::now();
    let mut runs = 0;
    for &policy in &SchedulerPolicy::all_shipped() {
        for &n in &[10usize, 25, 50] {
            for seed in 0..5u64 {
                let s = energy(
                    Workload::LeaderElection,
                    Shape::BlobHoleFree,
                    n,
                    seed,
                    10,
                    5,
                    1,
                )
                .unwrap();
                let out = run(
                    &s.constrained,
                    &s.cfg0_constrained,
                    policy,
                    seed,
                    &RunOptions::default(),
                )
                .unwrap();
                assert!(out.terminated);
                assert_eq!(
                    count_leaders(&out.final_config),
                    1,
                    "leader election n={n} seed={seed} {}",
                    policy.name()
                );

                let s = energy(Workload::HexagonFormation, Shape::Blob, n, seed, 10, 5, 1).unwrap();
                let out = run(
                    &s.constrained,
                    &s.cfg0_constrained,
                    policy,
                    seed,
                    &RunOptions::default(),
                )
                .unwrap();
                assert!(out.terminated);
                assert!(
                    is_spiral(&out.final_config, n),
                    "hexagon n={n} seed={seed} {}: terminal shape is not the spiral",
                    policy.name()
                );
                runs += 2;
            }
        }
    }
    pass(
        6,
        "workload-correctness",
        format!("{runs} terminated runs checked, {:?}", t.elapsed()),
    );
}

#[test]
fn acceptance_7_termination_and_overhead() {
    let t = Instant::now();
    let out_dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let ns: Vec<usize> = (1..=50).map(|k| 5 * k).collect();

    let mut details = Vec::new();
    for (workload, exponent, c_bound, slope_bound, csv_name) in [
        (
            Workload::LeaderElection,
            3,
            C_LEADER_N3,
            1.5,
            "leader_energy_sweep.csv",
        ),
        (
            Workload::HexagonFormation,
            4,
            C_HEXAGON_N4,
            2.0,
            "hexagon_energy_sweep.csv",
        ),
    ] {
        let cfg = ExperimentConfig {
            workload,
            ns: ns.clone(),
            trials: 25,
            ..Default::default()
        };
        let rows = sweep(&cfg);
        write_csv(&rows, &out_dir.join(csv_name)).unwrap();
        assert_eq!(rows.len(), 50 * 25);
        for r in &rows {
            assert!(
                r.terminated,
                "{workload:?} n={} trial={} exhausted its budget",
                r.n, r.trial
            );
            assert_eq!(
                r.terminal, "ok",
                "{workload:?} n={} trial={}: {}",
                r.n, r.trial, r.terminal
            );
            assert_eq!(
                r.invariants, "ok",
                "{workload:?} n={} trial={}: {}",
                r.n, r.trial, r.invariants
            );
            let bound = c_bound * (r.n as f64).powi(exponent);
            assert!(
                (r.rounds as f64) <= bound,
                "{workload:?} n={}: {} rounds exceeds {bound:.0}",
                r.n,
                r.rounds
            );
        }
        let points: Vec<(f64, f64)> = mean_rounds(&rows)
            .into_iter()
            .filter(|(n, _)| *n >= 50.0)
            .collect();
        let slope = loglog_slope(&points);
        assert!(
            slope <= slope_bound,
            "{workload:?}: fitted slope {slope:.3} above the {slope_bound} band"
        );
        details.push(format!(
            "{}: slope {slope:.2}",
            csv_name.trim_end_matches("_energy_sweep.csv")
        ));
    }
    let elapsed = t.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1800.0,
        "sweep exceeded the 30 minute budget: {elapsed:?}"
    );
    pass(
        7,
        "termination-and-overhead",
        format!("2500 cells, {}, {:?}", details.join(", "), elapsed),
    );
}

#[test]
fn acceptance_8_energy_run_phase_bounds() {
    let t = Instant::now();
    let kappa = 10u32;
    let mut measured = Vec::new();
    for &n in &[10usize, 25, 50, 100, 200, 250] {
        for seed in 0..3u64 {
            let s = energy(Workload::FrameworkOnly, Shape::Blob, n, seed, kappa, 5, 1).unwrap();
            let options = RunOptions::default().counters_only();
            let mut engine = Scheduler::new(&s.constrained, &s.cfg0_constrained, &options);
            let mut monitor = EnergyMonitor::new(kappa, &s.cfg0_constrained)
                .unwrap()
                .with_stride(if n > 100 { 16 } else { 1 });
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 97 + 5);
            let policy = SchedulerPolicy::uniform();
            let mut stable_round = None;
            let mut full_round = None;
            let full_target = n as u64 * kappa as u64;
            while let Some((id, a)) = engine.select(policy, &mut rng) {
                let before = engine.rounds();
                let report = engine.step(id, a).unwrap();
                amoebot_core::scheduler::StepObserver::on_step(&mut monitor, &engine.cfg, &report)
                    .unwrap_or_else(|e| panic!("n={n} seed={seed}: {e}"));
                if engine.rounds() > before {
                    if stable_round.is_none() && stable_set(&engine.cfg).unwrap().len() == n {
                        stable_round = Some(engine.rounds());
                    }
                    if full_round.is_none() && total_battery(&engine.cfg).unwrap() == full_target {
                        full_round = Some(engine.rounds());
                    }
                }
            }
            let stable = stable_round.expect("all amoebots join stable trees") as f64;
            let full = full_round.expect("all batteries fill") as f64;
            let stable_bound = C1_STABLE_N2 * (n * n) as f64;
            let recharge_bound = C2_RECHARGE_N * n as f64;
            assert!(
                stable <= stable_bound,
                "n={n} seed={seed}: stable trees took {stable} rounds > {stable_bound}"
            );
            assert!(
                full - stable <= recharge_bound,
                "n={n} seed={seed}: recharge took {} rounds > {recharge_bound}",
                full - stable
            );
            measured.push((n, stable, full - stable));
        }
    }
    let worst_c1 = measured
        .iter()
        .map(|(n, s, _)| s / (n * n) as f64)
        .fold(0.0f64, f64::max);
    let worst_c2 = measured
        .iter()
        .map(|(n, _, r)| r / *n as f64)
        .fold(0.0f64, f64::max);
    pass(
        8,
        "energy-run-phase-bounds",
        format!(
            "stable <= {worst_c1:.3} n^2 (bound {C1_STABLE_N2}), recharge <= {worst_c2:.2} n (bound {C2_RECHARGE_N}), {:?}",
            t.elapsed()
        ),
    );
}

#[test]
fn acceptance_9_expansion_correspondence() {
    let t = Instant::now();
    let policies = SchedulerPolicy::all_shipped();
    for workload in [Workload::LeaderElection, Workload::HexagonFormation] {
        let mut done = 0;
        'outer: for seed in 0..13u64 {
            for &n in &[10usize, 25] {
                for &policy in &policies {
                    if done == 100 {
                        break 'outer;
                    }
                    let s =
                        energy(workload, workload.default_shape(), n, seed + 31, 10, 5, 1).unwrap();
                    let (robust, cfg0) = robust_energy(&s).unwrap();
                    let out = run(&robust, &cfg0, policy, seed, &RunOptions::default())
                        .unwrap_or_else(|e| panic!("{workload:?} n={n}: {e}"));
                    assert!(
                        out.terminated,
                        "{workload:?} n={n} seed={seed} did not terminate"
                    );
                    check_expansion_correspondence(&s.constrained, &robust, &cfg0, &out.trace)
                        .unwrap_or_else(|e| {
                            panic!("{workload:?} n={n} {} seed={seed}: {e}", policy.name())
                        });
                    done += 1;
                }
            }
        }
        assert_eq!(done, 100, "{workload:?}: expected 100 checked traces");
    }
    pass(
        9,
        "expansion-correspondence",
        format!(
            "2 x 100 sequential traces, established-neighbor property at every step, {:?}",
            t.elapsed()
        ),
    );
}

#[test]
fn acceptance_10_convention_checker() {
    let t = Instant::now();
    let (le, le_cfg) = plain(Workload::LeaderElection, Shape::BlobHoleFree, 91, 4).unwrap();
    let report = check_conventions(&le, &le_cfg, 10_000, 7);
    assert!(
        report.is_clean(),
        "leader election: {:?}",
        report.violations
    );
    assert!(report.terminated);

    let (hf, hf_cfg) = plain(Workload::HexagonFormation, Shape::Blob, 40, 4).unwrap();
    let report = check_conventions(&hf, &hf_cfg, 30_000, 7);
    assert!(
        report.is_clean(),
        "hexagon formation: {:?}",
        report.violations
    );
    assert!(report.terminated);

    // negative control
    let fixture = fixtures::disconnecting();
    let cfg = SystemConfiguration::from_records([
        (
            AmoebotId(0),
            AmoebotRecord::contracted(NodeCoord::new(0, 0), Orientation::IDENTITY),
        ),
        (
            AmoebotId(1),
            AmoebotRecord::contracted(NodeCoord::new(1, 0), Orientation::IDENTITY),
        ),
    ])
    .unwrap();
    let report = check_conventions(&fixture, &cfg, 100, 3);
    assert!(
        report
            .violations
            .iter()
            .any(|v| matches!(v, ConventionViolation::Connectivity { .. })),
        "the disconnecting fixture must be flagged"
    );
    pass(
        10,
        "convention-checker",
        format!(
            "both workloads clean, negative control flagged, {:?}",
            t.elapsed()
        ),
    );
}
