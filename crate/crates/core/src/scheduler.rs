//! The unfair sequential adversary: activation policies, round accounting per
//! the enabled-set definition, termination detection and trace recording.
//! One run is strictly sequential; independent runs share no mutable state.

use crate::algorithm::AlgorithmSpec;
use crate::config::{AmoebotId, SystemConfiguration};
use crate::energy::{ENERGY_ACTION, SOURCE, STATE};
use crate::executor::{apply_action, ExecError, ExecReport};
use crate::lattice::NodeCoord;
use crate::trace::{ActivationRecord, Trace, TRACE_VERSION};
use crate::view::View;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// How the adversary scores enabled amoebots. All policies are unfair: any
/// enabled amoebot may be chosen, none must be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Uniformly random among enabled amoebots.
    UniformRandom,
    /// Prefer amoebots far (in occupied-graph hops) from source amoebots.
    StarveTheSource,
    /// Prefer amoebots whose next action would move.
    ThrashTheForest,
}

/// Policy plus the action-order variant: by default the lowest enabled action
/// index runs (the framework action is ordered last), flipped ordering
/// prefers the framework action whenever it is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerPolicy {
    pub kind: PolicyKind,
    pub framework_first: bool,
}

impl SchedulerPolicy {
    pub fn uniform() -> Self {
        SchedulerPolicy {
            kind: PolicyKind::UniformRandom,
            framework_first: false,
        }
    }

    pub fn starve_the_source() -> Self {
        SchedulerPolicy {
            kind: PolicyKind::StarveTheSource,
            framework_first: false,
        }
    }

    pub fn thrash_the_forest() -> Self {
        SchedulerPolicy {
            kind: PolicyKind::ThrashTheForest,
            framework_first: false,
        }
    }

    /// The shipped adversary policies.
    pub fn all_shipped() -> Vec<SchedulerPolicy> {
        vec![
            Self::uniform(),
            Self::starve_the_source(),
            Self::thrash_the_forest(),
            SchedulerPolicy {
                kind: PolicyKind::UniformRandom,
                framework_first: true,
            },
        ]
    }

    pub fn name(&self) -> String {
        let base = match self.kind {
            PolicyKind::UniformRandom => "uniform-random",
            PolicyKind::StarveTheSource => "starve-the-source",
            PolicyKind::ThrashTheForest => "thrash-the-forest",
        };
        if self.framework_first {
            format!("{base}+framework-first")
        } else {
            base.to_owned()
        }
    }

    pub fn by_name(name: &str) -> Option<SchedulerPolicy> {
        let (base, flipped) = match name.strip_suffix("+framework-first") {
            Some(b) => (b, true),
            None => (name, false),
        };
        let kind = match base {
            "uniform-random" => PolicyKind::UniformRandom,
            "starve-the-source" => PolicyKind::StarveTheSource,
            "thrash-the-forest" => PolicyKind::ThrashTheForest,
            _ => return None,
        };
        Some(SchedulerPolicy {
            kind,
            framework_first: flipped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DigestMode {
    Off,
    Full,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Hard activation budget; exceeding it is a test failure for algorithms
    /// proven terminating.
    pub budget: u64,
    pub digest_mode: DigestMode,
    /// Record per-activation history. Large sweeps disable this and keep only
    /// the counters.
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            budget: 10_000_000,
            digest_mode: DigestMode::Off,
            record_trace: true,
        }
    }
}

impl RunOptions {
    pub fn with_digests(mut self) -> Self {
        self.digest_mode = DigestMode::Full;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn counters_only(mut self) -> Self {
        self.record_trace = false;
        self
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trace: Trace,
    pub final_config: SystemConfiguration,
    pub terminated: bool,
    pub activations: u64,
    pub rounds: usize,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("validity violation: enabled action failed: {0}")]
    InvalidAction(#[source] ExecError),
    #[error("observer rejected activation {step}: {message}")]
    Observer { step: u64, message: String },
}

/// Per-activation hook for invariant monitors.
pub trait StepObserver {
    fn on_step(&mut self, cfg: &SystemConfiguration, report: &ExecReport) -> Result<(), String>;
}

pub struct NoopObserver;

impl StepObserver for NoopObserver {
    fn on_step(&mut self, _: &SystemConfiguration, _: &ExecReport) -> Result<(), String> {
        Ok(())
    }
}

/// Enabled action indices for one amoebot, in action order.
pub fn enabled_actions(
    cfg: &SystemConfiguration,
    id: AmoebotId,
    alg: &AlgorithmSpec,
) -> Vec<usize> {
    let mask = enabled_mask(cfg, id, alg);
    (0..alg.actions.len())
        .filter(|i| mask & (1 << i) != 0)
        .collect()
}

/// Enabled actions as a bitmask over the action list.
pub fn enabled_mask(cfg: &SystemConfiguration, id: AmoebotId, alg: &AlgorithmSpec) -> u64 {
    debug_assert!(alg.actions.len() <= 64);
    let mut mask = 0u64;
    for (i, a) in alg.actions.iter().enumerate() {
        if (a.guard)(&View::new(cfg, id, a.scope)) {
            mask |= 1 << i;
        }
    }
    mask
}

pub struct Scheduler<'a> {
    alg: &'a AlgorithmSpec,
    pub cfg: SystemConfiguration,
    enabled: BTreeMap<AmoebotId, u64>,
    energy_action_idx: Option<usize>,
    pending: BTreeSet<AmoebotId>,
    round_boundaries: Vec<usize>,
    activations: u64,
    records: Vec<ActivationRecord>,
    record_trace: bool,
    digest_mode: DigestMode,
    dist_to_source: Option<BTreeMap<AmoebotId, u32>>,
}

impl<'a> Scheduler<'a> {
    pub fn new(alg: &'a AlgorithmSpec, cfg0: &SystemConfiguration, options: &RunOptions) -> Self {
        let cfg = cfg0.clone();
        let enabled: BTreeMap<AmoebotId, u64> = cfg
            .ids()
            .filter_map(|id| {
                let mask = enabled_mask(&cfg, id, alg);
                (mask != 0).then_some((id, mask))
            })
            .collect();
        let energy_action_idx = alg.actions.iter().position(|a| a.label == ENERGY_ACTION);
        let pending = enabled.keys().copied().collect();
        Scheduler {
            alg,
            cfg,
            enabled,
            energy_action_idx,
            pending,
            round_boundaries: Vec::new(),
            activations: 0,
            records: Vec::new(),
            record_trace: options.record_trace,
            digest_mode: options.digest_mode,
            dist_to_source: None,
        }
    }

    pub fn enabled_ids(&self) -> Vec<AmoebotId> {
        self.enabled.keys().copied().collect()
    }

    pub fn is_quiescent(&self) -> bool {
        self.enabled.is_empty()
    }

    pub fn activations(&self) -> u64 {
        self.activations
    }

    pub fn rounds(&self) -> usize {
        self.round_boundaries.len()
    }

    fn distances(&mut self) -> &BTreeMap<AmoebotId, u32> {
        if self.dist_to_source.is_none() {
            let mut dist_nodes: BTreeMap<NodeCoord, u32> = BTreeMap::new();
            let mut queue = VecDeque::new();
            for (id, rec) in self.cfg.amoebots() {
                let is_source = rec.public.get(STATE).and_then(|v| v.as_sym()) == Some(SOURCE);
                if is_source {
                    for node in rec.nodes() {
                        dist_nodes.insert(node, 0);
                        queue.push_back(node);
                    }
                    let _ = id;
                }
            }
            while let Some(v) = queue.pop_front() {
                let d = dist_nodes[&v];
                for w in v.neighbors() {
                    if self.cfg.is_occupied(w) && !dist_nodes.contains_key(&w) {
                        dist_nodes.insert(w, d + 1);
                        queue.push_back(w);
                    }
                }
            }
            let per_amoebot = self
                .cfg
                .amoebots()
                .map(|(id, rec)| {
                    let d = rec
                        .nodes()
                        .filter_map(|n| dist_nodes.get(&n).copied())
                        .min()
                        .unwrap_or(0);
                    (id, d)
                })
                .collect();
            self.dist_to_source = Some(per_amoebot);
        }
        self.dist_to_source.as_ref().unwrap()
    }

    fn choose_action(&self, id: AmoebotId, framework_first: bool) -> usize {
        let mask = self.enabled[&id];
        if framework_first {
            if let Some(i) = self.energy_action_idx {
                if mask & (1 << i) != 0 {
                    return i;
                }
            }
        }
        mask.trailing_zeros() as usize
    }

    /// Selects the next (amoebot, action) per policy. Only enabled amoebots
    /// are ever eligible.
    pub fn select(
        &mut self,
        policy: SchedulerPolicy,
        rng: &mut ChaCha8Rng,
    ) -> Option<(AmoebotId, usize)> {
        if self.enabled.is_empty() {
            return None;
        }
        let id = match policy.kind {
            PolicyKind::UniformRandom => {
                let k = rng.gen_range(0..self.enabled.len());
                *self.enabled.keys().nth(k).unwrap()
            }
            PolicyKind::StarveTheSource => {
                let ids: Vec<AmoebotId> = self.enabled.keys().copied().collect();
                let dist = self.distances();
                ids.iter()
                    .copied()
                    .max_by_key(|id| (dist.get(id).copied().unwrap_or(0), u32::MAX - id.0))
                    .unwrap()
            }
            PolicyKind::ThrashTheForest => {
                let ids: Vec<AmoebotId> = self.enabled.keys().copied().collect();
                let movers: Vec<AmoebotId> = ids
                    .iter()
                    .copied()
                    .filter(|&id| {
                        let i = self.choose_action(id, policy.framework_first);
                        self.alg.actions[i].has_move_phase()
                    })
                    .collect();
                let pool = if movers.is_empty() { &ids } else { &movers };
                *pool.choose(rng).unwrap()
            }
        };
        Some((id, self.choose_action(id, policy.framework_first)))
    }

    /// Executes one chosen activation, updating enabled-set and round
    /// bookkeeping. The action must be enabled.
    pub fn step(&mut self, id: AmoebotId, action_idx: usize) -> Result<ExecReport, RunError> {
        debug_assert!(self
            .enabled
            .get(&id)
            .is_some_and(|m| m & (1 << action_idx) != 0));
        let action = &self.alg.actions[action_idx];
        let pre_digest = match self.digest_mode {
            DigestMode::Full => Some(self.cfg.digest()),
            DigestMode::Off => None,
        };
        let report = apply_action(&mut self.cfg, id, action).map_err(RunError::InvalidAction)?;
        self.activations += 1;

        if report.move_rec.is_some() {
            self.dist_to_source = None;
        }

        // Re-evaluate enabledness where it can have changed. Guards observe
        // a neighbor's state, parent and flags, but batteries are read only
        // through the share predicate, i.e. by the battery owner's parent; a
        // battery-only write therefore affects just the writer and the
        // occupant of its parent edge. Everything else fans out to the full
        // neighborhoods of the written amoebots and both movement
        // participants.
        let mut nodes: BTreeSet<NodeCoord> = BTreeSet::new();
        let mut seed_ids: Vec<AmoebotId> = Vec::new();
        let mut direct_ids: Vec<AmoebotId> = vec![id];
        for &(wid, var) in &report.writes {
            if var == crate::energy::EBAT {
                direct_ids.push(wid);
                let parent_edge = self
                    .cfg
                    .get(wid)
                    .and_then(|r| r.public.get(crate::energy::PARENT))
                    .and_then(|v| v.as_edge());
                if let Some(e) = parent_edge {
                    if let Some((pid, _)) = self.cfg.occupant(e.to) {
                        direct_ids.push(pid);
                    }
                }
            } else {
                seed_ids.push(wid);
            }
        }
        if let Some(mv) = &report.move_rec {
            if let Some(p) = mv.partner {
                seed_ids.push(p);
            }
            let shapes = [
                Some(mv.actor_before),
                Some(mv.actor_after),
                mv.partner_before,
                mv.partner_after,
            ];
            for (head, tail) in shapes.into_iter().flatten() {
                nodes.insert(head);
                if let Some(t) = tail {
                    nodes.insert(t);
                }
            }
        }
        for sid in &seed_ids {
            if let Some(rec) = self.cfg.get(*sid) {
                for n in rec.nodes() {
                    nodes.insert(n);
                }
            }
        }
        let mut candidates: BTreeSet<AmoebotId> = seed_ids.into_iter().collect();
        candidates.extend(direct_ids);
        for n in &nodes {
            for w in std::iter::once(*n).chain(n.neighbors()) {
                if let Some((oid, _)) = self.cfg.occupant(w) {
                    candidates.insert(oid);
                }
            }
        }
        for cand in candidates {
            let mask = enabled_mask(&self.cfg, cand, self.alg);
            if mask == 0 {
                self.enabled.remove(&cand);
                self.pending.remove(&cand);
            } else {
                self.enabled.insert(cand, mask);
            }
        }
        self.pending.remove(&id);

        if self.pending.is_empty() {
            self.round_boundaries.push(self.activations as usize);
            self.pending = self.enabled.keys().copied().collect();
        }

        if self.record_trace {
            let post_digest = match self.digest_mode {
                DigestMode::Full => Some(self.cfg.digest()),
                DigestMode::Off => None,
            };
            self.records.push(ActivationRecord {
                actor: id,
                action: action.label.clone(),
                support: report.support.iter().map(|s| (*s).to_owned()).collect(),
                energy_events: report.energy_events.clone(),
                pre_digest,
                post_digest,
                moved: report.move_rec.is_some(),
                undone: report.expand_undone,
            });
        }
        Ok(report)
    }

    pub fn into_outcome(
        self,
        policy_name: String,
        seed: u64,
        initial_digest: String,
        terminated: bool,
    ) -> RunOutcome {
        let rounds = self.round_boundaries.len();
        let final_digest = self.cfg.digest();
        RunOutcome {
            trace: Trace {
                version: TRACE_VERSION,
                algorithm: self.alg.name.clone(),
                policy: policy_name,
                seed,
                initial_digest,
                records: self.records,
                round_boundaries: self.round_boundaries,
                terminated,
                final_digest,
            },
            final_config: self.cfg,
            terminated,
            activations: self.activations,
            rounds,
        }
    }
}

/// Runs an algorithm to quiescence or budget exhaustion under a policy.
/// `(algorithm, cfg0, policy, seed)` fully determines the outcome.
pub fn run(
    alg: &AlgorithmSpec,
    cfg0: &SystemConfiguration,
    policy: SchedulerPolicy,
    seed: u64,
    options: &RunOptions,
) -> Result<RunOutcome, RunError> {
    run_observed(alg, cfg0, policy, seed, options, &mut NoopObserver)
}

pub fn run_observed(
    alg: &AlgorithmSpec,
    cfg0: &SystemConfiguration,
    policy: SchedulerPolicy,
    seed: u64,
    options: &RunOptions,
    observer: &mut dyn StepObserver,
) -> Result<RunOutcome, RunError> {
    let initial_digest = cfg0.digest();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut engine = Scheduler::new(alg, cfg0, options);
    let terminated;
    loop {
        let Some((id, action_idx)) = engine.select(policy, &mut rng) else {
            terminated = true;
            break;
        };
        let report = engine.step(id, action_idx)?;
        observer
            .on_step(&engine.cfg, &report)
            .map_err(|message| RunError::Observer {
                step: engine.activations,
                message,
            })?;
        if engine.activations >= options.budget {
            terminated = engine.is_quiescent();
            break;
        }
    }
    Ok(engine.into_outcome(policy.name(), seed, initial_digest, terminated))
}
