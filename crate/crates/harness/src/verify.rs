//! Verification suites over recorded traces: digest-faithful replay, the
//! energy invariant suite, equivalence replay against the original
//! algorithm, and expansion-correspondence for robust traces.

use amoebot_core::algorithms::{hexagon_formation_spec, leader_election_spec};
use amoebot_core::energy::{transform, DemandFunction};
use amoebot_core::executor::apply_action;
use amoebot_core::invariants::EnergyMonitor;
use amoebot_core::replay::{project_energy, replay_equivalence};
use amoebot_core::robust::{check_expansion_correspondence, transform_expansion_robust};
use amoebot_core::scheduler::StepObserver;
use amoebot_core::trace::Trace;
use amoebot_core::{fixtures, AlgorithmSpec, SystemConfiguration};
use anyhow::{anyhow, bail, Result};

#[derive(Debug)]
pub struct VerifyReport {
    pub checks: Vec<(String, Result<(), String>)>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|(_, r)| r.is_ok())
    }
}

/// Parses an algorithm name recorded in a trace into its base workload and
/// applied transforms.
fn reconstruct(name: &str, kappa: u32, demand: u32) -> Result<ReconstructedAlgorithms> {
    let robust = name.ends_with("+robust");
    let name = name.strip_suffix("+robust").unwrap_or(name);
    let energy = name.ends_with("+energy");
    let base_name = name.strip_suffix("+energy").unwrap_or(name);
    let base = match base_name {
        "leader-election-by-erosion" => leader_election_spec(),
        "hexagon-formation" => hexagon_formation_spec(),
        "empty" => fixtures::empty_algorithm(),
        "mark-once" => fixtures::mark_once(),
        other => bail!("unknown base algorithm `{other}` in trace"),
    };
    let constrained = if energy {
        Some(transform(&base, &DemandFunction::uniform(kappa, demand))?)
    } else {
        None
    };
    let executed = {
        let pre = constrained.as_ref().unwrap_or(&base);
        if robust {
            transform_expansion_robust(pre)?
        } else {
            pre.clone()
        }
    };
    Ok(ReconstructedAlgorithms {
        base,
        constrained,
        executed,
        energy,
        robust,
    })
}

pub struct ReconstructedAlgorithms {
    pub base: AlgorithmSpec,
    pub constrained: Option<AlgorithmSpec>,
    pub executed: AlgorithmSpec,
    pub energy: bool,
    pub robust: bool,
}

fn replay_with_monitor(
    alg: &AlgorithmSpec,
    cfg0: &SystemConfiguration,
    trace: &Trace,
    mut monitor: Option<&mut EnergyMonitor>,
) -> Result<(), String> {
    if trace.initial_digest != cfg0.digest() {
        return Err("trace does not start at the given snapshot".into());
    }
    let mut cfg = cfg0.clone();
    for (step, rec) in trace.records.iter().enumerate() {
        let (_, action) = alg
            .action(&rec.action)
            .ok_or_else(|| format!("step {step}: unknown action `{}`", rec.action))?;
        if let Some(pre) = &rec.pre_digest {
            if *pre != cfg.digest() {
                return Err(format!("step {step}: pre-digest mismatch"));
            }
        }
        let report =
            apply_action(&mut cfg, rec.actor, action).map_err(|e| format!("step {step}: {e}"))?;
        if let Some(post) = &rec.post_digest {
            if *post != cfg.digest() {
                return Err(format!("step {step}: post-digest mismatch"));
            }
        }
        if let Some(m) = monitor.as_deref_mut() {
            m.on_step(&cfg, &report)
                .map_err(|e| format!("step {step}: {e}"))?;
        }
    }
    if trace.final_digest != cfg.digest() {
        return Err("final digest mismatch".into());
    }
    Ok(())
}

/// Runs every applicable verification suite for a recorded trace against its
/// initial snapshot.
pub fn verify_trace(
    trace: &Trace,
    cfg0: &SystemConfiguration,
    kappa: u32,
    demand: u32,
) -> Result<VerifyReport> {
    let algs = reconstruct(&trace.algorithm, kappa, demand)?;
    let mut checks: Vec<(String, Result<(), String>)> = Vec::new();

    let mut monitor = if algs.energy {
        Some(EnergyMonitor::new(kappa, cfg0).map_err(|e| anyhow!(e))?)
    } else {
        None
    };
    checks.push((
        "replay-digests-and-invariants".into(),
        replay_with_monitor(&algs.executed, cfg0, trace, monitor.as_mut()),
    ));

    if algs.energy && !algs.robust {
        let constrained = algs
            .constrained
            .as_ref()
            .expect("energy implies constrained");
        let cfg0_base = project_energy(cfg0);
        checks.push((
            "equivalence-replay".into(),
            replay_equivalence(trace, constrained, cfg0, &algs.base, &cfg0_base)
                .map_err(|e| e.to_string()),
        ));
    }

    if algs.robust {
        let pre = algs.constrained.as_ref().unwrap_or(&algs.base);
        checks.push((
            "expansion-correspondence".into(),
            check_expansion_correspondence(pre, &algs.executed, cfg0, trace)
                .map_err(|e| e.to_string()),
        ));
    }

    Ok(VerifyReport { checks })
}
