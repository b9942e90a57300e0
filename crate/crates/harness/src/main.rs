//! Command-line experiment runner: single traces with optional SVG frames,
//! parameter sweeps to CSV, verification suites over trace files, and the
//! standalone oracles. Exits nonzero unless every requested check passes.

use amoebot_core::enumerate::enumerate_all_executions;
use amoebot_core::recharge::greedy_parallel_recharge;
use amoebot_core::scheduler::{run, RunOptions, SchedulerPolicy};
use amoebot_core::trace::Trace;
use amoebot_core::SystemConfiguration;
use amoebot_harness::generate::Shape;
use amoebot_harness::render::{render_svg, RenderStyle};
use amoebot_harness::runcfg::ExperimentConfig;
use amoebot_harness::setup::{self, Workload};
use amoebot_harness::sweep::{any_failure, sweep, write_csv};
use amoebot_harness::verify::verify_trace;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "amoebot", about = "Amoebot energy-distribution simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workload: Option<String>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    kappa: Option<u32>,
    #[arg(long)]
    demand: Option<u32>,
    #[arg(long)]
    sources: Option<usize>,
    /// Run the plain energy-agnostic workload instead of the transform.
    #[arg(long)]
    plain: bool,
    /// Additionally apply the expansion-robust transform.
    #[arg(long)]
    robust: bool,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Output directory (falls back to $AMOEBOT_OUT, then the cwd).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trace; optionally dump the trace, snapshots and SVG frames.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 25)]
        n: usize,
        /// Write the recorded trace to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write the initial configuration snapshot to this file.
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
        /// Render an SVG of the terminal configuration.
        #[arg(long)]
        svg_out: Option<PathBuf>,
        /// Dump an SVG frame into the output directory every N completed
        /// rounds.
        #[arg(long)]
        svg_every: Option<usize>,
        /// Record full per-activation digests in the trace.
        #[arg(long)]
        digests: bool,
    },
    /// Run all (n, trial) cells and write a CSV of rounds and verdicts.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated sizes, or start:end:step.
        #[arg(long)]
        ns: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a trace file and run every applicable verification suite.
    Verify {
        /// Trace JSON written by `run --trace-out`.
        #[arg(long)]
        trace: PathBuf,
        /// Initial-configuration snapshot written by `run --snapshot-out`.
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value_t = amoebot_core::energy::DEFAULT_CAPACITY)]
        kappa: u32,
        #[arg(long, default_value_t = amoebot_core::energy::DEFAULT_DEMAND)]
        demand: u32,
    },
    /// Standalone oracles: the parallel recharge schedule and exhaustive
    /// execution enumeration.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Parallel rounds to recharge a rooted path from empty to full.
    Recharge {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        kappa: u32,
    },
    /// Exhaustively enumerate terminal configurations of a small system.
    Enumerate {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2_000_000)]
        limit: usize,
    },
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str(&text).context("malformed config file")?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(w) = &common.workload {
        cfg.workload = Workload::parse(w).with_context(|| format!("unknown workload `{w}`"))?;
    }
    if let Some(s) = &common.shape {
        cfg.shape = Some(Shape::parse(s).with_context(|| format!("unknown shape `{s}`"))?);
    }
    if let Some(k) = common.kappa {
        cfg.kappa = k;
    }
    if let Some(d) = common.demand {
        cfg.demand = d;
    }
    if let Some(s) = common.sources {
        cfg.sources = s;
    }
    if common.plain {
        cfg.energy = false;
    }
    if common.robust {
        cfg.robust = true;
    }
    if let Some(p) = &common.policy {
        if SchedulerPolicy::by_name(p).is_none() {
            bail!("unknown policy `{p}`");
        }
        cfg.policy = p.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(b) = common.budget {
        cfg.budget = b;
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = Some(d.clone());
    }
    Ok(cfg)
}

fn parse_ns(spec: &str) -> Result<Vec<usize>> {
    if spec.contains(':') {
        let parts: Vec<usize> = spec
            .split(':')
            .map(|p| p.parse().context("bad size range"))
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [start, end, step] if *step > 0 => Ok((*start..=*end).step_by(*step).collect()),
            _ => bail!("size range must be start:end:step"),
        }
    } else {
        spec.split(',')
            .map(|p| p.trim().parse().context("bad size list"))
            .collect()
    }
}

fn cmd_run(
    common: CommonOpts,
    n: usize,
    trace_out: Option<PathBuf>,
    snapshot_out: Option<PathBuf>,
    svg_out: Option<PathBuf>,
    svg_every: Option<usize>,
    digests: bool,
) -> Result<()> {
    let cfg = load_config(&common)?;
    let policy = SchedulerPolicy::by_name(&cfg.policy).expect("validated");
    let mut options = RunOptions::default().with_budget(cfg.budget);
    if digests {
        options = options.with_digests();
    }

    let (alg, cfg0) = if cfg.energy {
        let s = setup::energy(
            cfg.workload,
            cfg.shape(),
            n,
            cfg.seed,
            cfg.kappa,
            cfg.demand,
            cfg.sources,
        )?;
        if cfg.robust {
            setup::robust_energy(&s)?
        } else {
            (s.constrained, s.cfg0_constrained)
        }
    } else {
        setup::plain(cfg.workload, cfg.shape(), n, cfg.seed)?
    };

    if let Some(path) = &snapshot_out {
        fs::write(path, cfg0.to_snapshot_string())?;
    }
    let out = match svg_every {
        Some(every) => run_with_frames(&alg, &cfg0, policy, &cfg, every, n)?,
        None => run(&alg, &cfg0, policy, cfg.seed, &options)?,
    };
    println!(
        "algorithm={} n={n} policy={} seed={} activations={} rounds={} terminated={}",
        alg.name,
        policy.name(),
        cfg.seed,
        out.activations,
        out.rounds,
        out.terminated
    );
    if let Some(path) = &trace_out {
        fs::write(path, out.trace.to_json())?;
    }
    if let Some(path) = &svg_out {
        let style = RenderStyle {
            kappa: cfg.kappa,
            ..Default::default()
        };
        fs::write(path, render_svg(&out.final_config, &style))?;
    }
    if !out.terminated {
        bail!("activation budget exhausted before quiescence");
    }
    Ok(())
}

/// Drives the scheduler manually so an SVG frame can be dumped every
/// `every` completed rounds.
fn run_with_frames(
    alg: &amoebot_core::AlgorithmSpec,
    cfg0: &SystemConfiguration,
    policy: SchedulerPolicy,
    cfg: &ExperimentConfig,
    every: usize,
    n: usize,
) -> Result<amoebot_core::scheduler::RunOutcome> {
    use amoebot_core::scheduler::Scheduler;
    use rand::SeedableRng;
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    let style = RenderStyle {
        kappa: cfg.kappa,
        ..Default::default()
    };
    let options = RunOptions::default().with_budget(cfg.budget);
    let initial_digest = cfg0.digest();
    let mut engine = Scheduler::new(alg, cfg0, &options);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let every = every.max(1);
    let mut next_frame = 0usize;
    let frame_name = |round: usize| dir.join(format!("frame_{}_n{n}_r{round:06}.svg", alg.name));
    fs::write(frame_name(0), render_svg(cfg0, &style))?;
    let terminated;
    loop {
        let Some((id, action)) = engine.select(policy, &mut rng) else {
            terminated = true;
            break;
        };
        engine.step(id, action)?;
        if engine.rounds() >= next_frame + every {
            next_frame = engine.rounds();
            fs::write(frame_name(next_frame), render_svg(&engine.cfg, &style))?;
        }
        if engine.activations() >= options.budget {
            terminated = engine.is_quiescent();
            break;
        }
    }
    let out = engine.into_outcome(policy.name(), cfg.seed, initial_digest, terminated);
    fs::write(
        frame_name(out.rounds + 1),
        render_svg(&out.final_config, &style),
    )?;
    Ok(out)
}

fn cmd_sweep(
    common: CommonOpts,
    ns: Option<String>,
    trials: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = load_config(&common)?;
    if let Some(spec) = &ns {
        cfg.ns = parse_ns(spec)?;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let rows = sweep(&cfg);
    let path = out.unwrap_or_else(|| cfg.out_dir().join("sweep.csv"));
    write_csv(&rows, &path)?;
    let failures = rows
        .iter()
        .filter(|r| r.terminal != "ok" || (r.invariants != "ok" && r.invariants != "skipped"))
        .count();
    println!(
        "sweep: {} cells -> {} ({} failures)",
        rows.len(),
        path.display(),
        failures
    );
    if any_failure(&rows) {
        bail!("sweep recorded failures");
    }
    Ok(())
}

fn cmd_verify(trace: PathBuf, snapshot: PathBuf, kappa: u32, demand: u32) -> Result<()> {
    let trace = Trace::from_json(&fs::read_to_string(&trace)?)?;
    let cfg0 = SystemConfiguration::from_snapshot_str(&fs::read_to_string(&snapshot)?)?;
    let report = verify_trace(&trace, &cfg0, kappa, demand)?;
    for (name, result) in &report.checks {
        match result {
            Ok(()) => println!("{name}: pass"),
            Err(e) => println!("{name}: FAIL ({e})"),
        }
    }
    if !report.all_passed() {
        bail!("verification failed");
    }
    Ok(())
}

fn cmd_oracle(which: OracleCommand) -> Result<()> {
    match which {
        OracleCommand::Recharge { k, kappa } => {
            let rounds = greedy_parallel_recharge(k, kappa);
            println!("greedy parallel recharge: k={k} kappa={kappa} rounds={rounds}");
            Ok(())
        }
        OracleCommand::Enumerate { common, n, limit } => {
            let cfg = load_config(&common)?;
            let (alg, cfg0) = if cfg.energy {
                let s = setup::energy(
                    cfg.workload,
                    cfg.shape(),
                    n,
                    cfg.seed,
                    cfg.kappa,
                    cfg.demand,
                    cfg.sources,
                )?;
                (s.constrained, s.cfg0_constrained)
            } else {
                setup::plain(cfg.workload, cfg.shape(), n, cfg.seed)?
            };
            let res = enumerate_all_executions(&alg, &cfg0, limit)?;
            println!(
                "enumeration: algorithm={} n={n} visited={} terminals={}",
                alg.name,
                res.visited,
                res.terminals.len()
            );
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            common,
            n,
            trace_out,
            snapshot_out,
            svg_out,
            svg_every,
            digests,
        } => cmd_run(
            common,
            n,
            trace_out,
            snapshot_out,
            svg_out,
            svg_every,
            digests,
        ),
        Command::Sweep {
            common,
            ns,
            trials,
            out,
        } => cmd_sweep(common, ns, trials, out),
        Command::Verify {
            trace,
            snapshot,
            kappa,
            demand,
        } => cmd_verify(trace, snapshot, kappa, demand),
        Command::Oracle { which } => cmd_oracle(which),
    }
}
