//! Calibration for the frozen acceptance constants: per-size round maxima
//! for both energy-constrained workloads, log-log slopes, and the
//! framework-only phase bounds (rounds to all-stable, rounds to all-full).

use amoebot_core::invariants::{stable_set, total_battery};
use amoebot_core::scheduler::{RunOptions, Scheduler, SchedulerPolicy};
use amoebot_harness::fit::loglog_slope;
use amoebot_harness::runcfg::ExperimentConfig;
use amoebot_harness::setup::{energy, Workload};
use amoebot_harness::sweep::{mean_rounds, sweep};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    for workload in [Workload::LeaderElection, Workload::HexagonFormation] {
        let cfg = ExperimentConfig {
            workload,
            ns: (1..=10).map(|k| k * 25).collect(),
            trials: 5,
            ..Default::default()
        };
        let rows = sweep(&cfg);
        let exponent = match workload {
            Workload::LeaderElection => 3,
            _ => 4,
        };
        let mut worst_c = 0f64;
        for r in &rows {
            assert!(
                r.terminal == "ok",
                "{workload:?} n={} trial={}: {}",
                r.n,
                r.trial,
                r.terminal
            );
            let c = r.rounds as f64 / (r.n as f64).powi(exponent);
            worst_c = worst_c.max(c);
        }
        let pts = mean_rounds(&rows);
        let slope_all = loglog_slope(&pts);
        let big: Vec<_> = pts.iter().copied().filter(|(n, _)| *n >= 50.0).collect();
        let slope_big = loglog_slope(&big);
        println!(
            "{:?}: worst rounds/n^{exponent} = {worst_c:.3e}, slope(all) = {slope_all:.3}, slope(n>=50) = {slope_big:.3} [{:?}]",
            workload,
            t0.elapsed()
        );
        for (n, m) in &pts {
            println!("   n={n:>5} mean_rounds={m:.0}");
        }
    }

    // framework-only phase bounds
    println!("phase bounds (framework-only, kappa=10):");
    for &n in &[10usize, 25, 50, 100, 200, 250] {
        for seed in 0..3u64 {
            let s = energy(
                Workload::FrameworkOnly,
                amoebot_harness::generate::Shape::Blob,
                n,
                seed,
                10,
                5,
                1,
            )
            .unwrap();
            let options = RunOptions::default().counters_only();
            let mut engine = Scheduler::new(&s.constrained, &s.cfg0_constrained, &options);
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 77 + 1);
            let policy = SchedulerPolicy::uniform();
            let mut stable_round = None;
            let mut full_round = None;
            let full_target = (n as u64) * 10;
            while let Some((id, a)) = engine.select(policy, &mut rng) {
                let before_rounds = engine.rounds();
                engine.step(id, a).unwrap();
                if engine.rounds() > before_rounds {
                    if stable_round.is_none() && stable_set(&engine.cfg).unwrap().len() == n {
                        stable_round = Some(engine.rounds());
                    }
                    if full_round.is_none() && total_battery(&engine.cfg).unwrap() == full_target {
                        full_round = Some(engine.rounds());
                    }
                }
                let _ = rng.gen::<u32>();
            }
            let stable = stable_round.unwrap_or(engine.rounds());
            let full = full_round.unwrap_or(engine.rounds());
            println!(
                "   n={n:>4} seed={seed}: stable at round {stable} (c1 = {:.4}), full at round {full} (+{} over stable, c2 = {:.3})",
                stable as f64 / (n * n) as f64,
                full - stable,
                (full - stable) as f64 / n as f64,
            );
        }
    }
    println!("total {:?}", t0.elapsed());
}
