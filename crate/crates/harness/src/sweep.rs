//! Parameter sweeps: independent (n, trial) cells run in parallel, assembled
//! into CSV rows in deterministic (n, trial) order. Every row carries the
//! run's terminal-check outcome and invariant-suite verdict; per-cell
//! failures are recorded and the sweep continues.

use crate::runcfg::ExperimentConfig;
use crate::setup::{self, Workload};
use amoebot_core::algorithms::leader::{LEADER, PHASE};
use amoebot_core::algorithms::spiral::{shapes_equal_up_to_symmetry, spiral_positions};
use amoebot_core::invariants::EnergyMonitor;
use amoebot_core::scheduler::{run_observed, NoopObserver, RunOptions, SchedulerPolicy};
use amoebot_core::value::Value;
use amoebot_core::SystemConfiguration;
use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub rounds: usize,
    pub activations: u64,
    pub terminated: bool,
    /// "ok" or a description of the terminal-state defect.
    pub terminal: String,
    /// "ok", "skipped" (plain runs), or the first invariant violation.
    pub invariants: String,
}

fn terminal_check(workload: Workload, cfg: &SystemConfiguration, n: usize) -> Result<()> {
    match workload {
        Workload::LeaderElection => {
            let leaders = cfg
                .amoebots()
                .filter(|(_, r)| r.public.get(PHASE).and_then(Value::as_sym) == Some(LEADER))
                .count();
            (leaders == 1)
                .then_some(())
                .ok_or_else(|| anyhow!("{leaders} leaders in the terminal configuration"))
        }
        Workload::HexagonFormation => {
            let got: BTreeSet<_> = cfg.occupied_nodes().collect();
            let want: BTreeSet<_> = spiral_positions(n).into_iter().collect();
            shapes_equal_up_to_symmetry(&got, &want)
                .then_some(())
                .ok_or_else(|| anyhow!("terminal shape is not the {n}-node spiral"))
        }
        Workload::FrameworkOnly => Ok(()),
    }
}

pub fn run_cell(cfg: &ExperimentConfig, n: usize, trial: usize) -> SweepRow {
    let seed = cfg.cell_seed(n, trial);
    let policy = SchedulerPolicy::by_name(&cfg.policy).unwrap_or(SchedulerPolicy::uniform());
    let options = RunOptions::default()
        .with_budget(cfg.budget)
        .counters_only();

    let mut row = SweepRow {
        n,
        trial,
        seed,
        rounds: 0,
        activations: 0,
        terminated: false,
        terminal: "ok".into(),
        invariants: "ok".into(),
    };

    let outcome = if cfg.energy {
        match setup::energy(
            cfg.workload,
            cfg.shape(),
            n,
            seed,
            cfg.kappa,
            cfg.demand,
            cfg.sources,
        ) {
            Ok(s) => {
                // Sampled configuration-wide scans keep big sweep cells cheap;
                // event-level invariants still check every activation.
                let stride = if n > 64 { 64 } else { 1 };
                let mut monitor = match EnergyMonitor::new(s.kappa, &s.cfg0_constrained) {
                    Ok(m) => m.with_stride(stride),
                    Err(e) => {
                        row.invariants = e;
                        return row;
                    }
                };
                let (alg, cfg0) = if cfg.robust {
                    match setup::robust_energy(&s) {
                        Ok(pair) => pair,
                        Err(e) => {
                            row.terminal = format!("setup: {e}");
                            return row;
                        }
                    }
                } else {
                    (s.constrained, s.cfg0_constrained)
                };
                run_observed(&alg, &cfg0, policy, seed, &options, &mut monitor)
                    .map_err(|e| (e, true))
            }
            Err(e) => {
                row.terminal = format!("setup: {e}");
                return row;
            }
        }
    } else {
        match setup::plain(cfg.workload, cfg.shape(), n, seed) {
            Ok((alg, cfg0)) => run_observed(&alg, &cfg0, policy, seed, &options, &mut NoopObserver)
                .map_err(|e| (e, false)),
            Err(e) => {
                row.terminal = format!("setup: {e}");
                return row;
            }
        }
    };

    match outcome {
        Ok(out) => {
            row.rounds = out.rounds;
            row.activations = out.activations;
            row.terminated = out.terminated;
            if !out.terminated {
                row.terminal = "budget exhausted".into();
            } else if let Err(e) = terminal_check(cfg.workload, &out.final_config, n) {
                row.terminal = e.to_string();
            }
        }
        Err((e, _energy)) => {
            row.invariants = e.to_string();
            row.terminal = "aborted".into();
        }
    }
    if !cfg.energy && row.invariants == "ok" {
        row.invariants = "skipped".into();
    }
    row
}

/// Runs all (n, trial) cells. Cells are independent and parallel; the result
/// order is deterministic.
pub fn sweep(cfg: &ExperimentConfig) -> Vec<SweepRow> {
    let cells: Vec<(usize, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(n, t)| run_cell(cfg, n, t))
        .collect();
    rows.sort_by_key(|r| (r.n, r.trial));
    rows
}

pub fn any_failure(rows: &[SweepRow]) -> bool {
    rows.iter()
        .any(|r| r.terminal != "ok" || (r.invariants != "ok" && r.invariants != "skipped"))
}

pub const CSV_HEADER: [&str; 8] = [
    "n",
    "trial",
    "seed",
    "rounds",
    "activations",
    "terminated",
    "terminal",
    "invariants",
];

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.rounds.to_string(),
            r.activations.to_string(),
            r.terminated.to_string(),
            r.terminal.clone(),
            r.invariants.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean rounds per n, for scaling fits.
pub fn mean_rounds(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut by_n: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for r in rows {
        let e = by_n.entry(r.n).or_insert((0.0, 0));
        e.0 += r.rounds as f64;
        e.1 += 1;
    }
    by_n.into_iter()
        .map(|(n, (sum, count))| (n as f64, sum / count as f64))
        .collect()
}
