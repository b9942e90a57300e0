//! Step-by-step invariant checking for energy-constrained runs: energy-run
//! invariants (nothing spent, nobody moves, stable-tree parents frozen),
//! reachable-configuration invariants (connectivity, sources persist,
//! battery bounds), the conservation ledger, and forest sanity.

use crate::config::{AmoebotId, SystemConfiguration};
use crate::energy::{energy_vars, EnergyVars, ACTIVE, ASKING, ENERGY_ACTION, GROWING, SOURCE};
use crate::executor::{EnergyEvent, ExecReport};
use crate::lattice::Edge;
use crate::scheduler::StepObserver;
use std::collections::{BTreeMap, BTreeSet};

/// Resolves every amoebot's parent edge to the amoebot currently occupying
/// its target node. Errors on dangling edges.
pub fn parent_map(
    cfg: &SystemConfiguration,
) -> Result<BTreeMap<AmoebotId, Option<AmoebotId>>, String> {
    let mut out = BTreeMap::new();
    for (id, _) in cfg.amoebots() {
        let vars =
            energy_vars(cfg, id).ok_or_else(|| format!("{id:?}: missing energy variables"))?;
        let parent = match vars.parent {
            None => None,
            Some(edge) => match cfg.occupant(edge.to) {
                Some((pid, _)) => Some(pid),
                None => return Err(format!("{id:?}: dangling parent edge {edge:?}")),
            },
        };
        out.insert(id, parent);
    }
    Ok(out)
}

/// Amoebots whose parent chain reaches a source: the members of stable trees.
pub fn stable_set(cfg: &SystemConfiguration) -> Result<BTreeSet<AmoebotId>, String> {
    let parents = parent_map(cfg)?;
    let mut status: BTreeMap<AmoebotId, Option<bool>> = BTreeMap::new();
    for (id, _) in cfg.amoebots() {
        let mut chain = Vec::new();
        let mut cur = id;
        let stable = loop {
            if let Some(&Some(s)) = status.get(&cur) {
                break s;
            }
            if chain.contains(&cur) {
                break false; // cycle: certainly not rooted at a source
            }
            chain.push(cur);
            let vars = energy_vars(cfg, cur).ok_or("missing energy variables")?;
            if vars.state == SOURCE {
                break true;
            }
            match parents[&cur] {
                Some(p)
                    if vars.state == ACTIVE || vars.state == ASKING || vars.state == GROWING =>
                {
                    cur = p;
                }
                _ => break false,
            }
        };
        for c in chain {
            status.insert(c, Some(stable));
        }
    }
    Ok(status
        .into_iter()
        .filter_map(|(id, s)| (s == Some(true)).then_some(id))
        .collect())
}

/// Forest sanity: parent links only on active/asking/growing non-sources, no
/// dangling edges, and the parent relation is acyclic.
pub fn check_forest(cfg: &SystemConfiguration) -> Result<(), String> {
    let parents = parent_map(cfg)?;
    for (id, _) in cfg.amoebots() {
        let vars = energy_vars(cfg, id).ok_or("missing energy variables")?;
        if vars.parent.is_some() {
            let linkable = vars.state == ACTIVE || vars.state == ASKING || vars.state == GROWING;
            if !linkable {
                return Err(format!("{id:?}: parent link in state {}", vars.state));
            }
        }
    }
    // cycle detection over the parent relation
    let mut color: BTreeMap<AmoebotId, u8> = BTreeMap::new();
    for (start, _) in cfg.amoebots() {
        if color.get(&start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            match color.get(&cur).copied().unwrap_or(0) {
                1 => return Err(format!("parent cycle through {cur:?}")),
                2 => break,
                _ => {}
            }
            color.insert(cur, 1);
            path.push(cur);
            let Some(p) = parents[&cur] else { break };
            cur = p;
        }
        for p in path {
            color.insert(p, 2);
        }
    }
    Ok(())
}

pub fn total_battery(cfg: &SystemConfiguration) -> Result<u64, String> {
    let mut total = 0u64;
    for (id, _) in cfg.amoebots() {
        let vars =
            energy_vars(cfg, id).ok_or_else(|| format!("{id:?}: missing energy variables"))?;
        total += vars.e_bat as u64;
    }
    Ok(total)
}

/// Per-activation invariant monitor for energy-constrained runs. Attach as a
/// [`StepObserver`]; any violation aborts the run with a description.
///
/// Event-level checks (single transfer per activation, no spend or movement
/// inside energy runs) run on every step. Configuration-wide scans (battery
/// bounds, conservation, connectivity, forest shape, stable-tree parent
/// freeze) run every `stride`-th step; the default stride of 1 checks every
/// step, large sweeps sample.
pub struct EnergyMonitor {
    kappa: u32,
    stride: u64,
    harvested: u64,
    spent: u64,
    initial_total: u64,
    in_energy_run: bool,
    have_snapshot: bool,
    prev_total: u64,
    prev_stable: BTreeSet<AmoebotId>,
    prev_parents: BTreeMap<AmoebotId, Option<Edge>>,
    prune_counts: BTreeMap<AmoebotId, u64>,
    /// Most GetPruned-supported executions by one amoebot in one energy run.
    pub max_prunes_in_run: u64,
    pub steps_checked: u64,
}

impl EnergyMonitor {
    pub fn new(kappa: u32, cfg0: &SystemConfiguration) -> Result<Self, String> {
        let initial_total = total_battery(cfg0)?;
        Ok(EnergyMonitor {
            kappa,
            stride: 1,
            harvested: 0,
            spent: 0,
            initial_total,
            in_energy_run: false,
            have_snapshot: false,
            prev_total: initial_total,
            prev_stable: BTreeSet::new(),
            prev_parents: BTreeMap::new(),
            prune_counts: BTreeMap::new(),
            max_prunes_in_run: 0,
            steps_checked: 0,
        })
    }

    /// Sample the configuration-wide scans every `stride` steps.
    pub fn with_stride(mut self, stride: u64) -> Self {
        self.stride = stride.max(1);
        self
    }

    fn snapshot_parents(cfg: &SystemConfiguration) -> BTreeMap<AmoebotId, Option<Edge>> {
        cfg.amoebots()
            .map(|(id, _)| (id, energy_vars(cfg, id).and_then(|v| v.parent)))
            .collect()
    }

    fn check(&mut self, cfg: &SystemConfiguration, report: &ExecReport) -> Result<(), String> {
        self.steps_checked += 1;
        let is_energy_step = report.label == ENERGY_ACTION;
        let sampled = self.steps_checked.is_multiple_of(self.stride);

        // Event bookkeeping and the single-transfer rule.
        let mut harvests = 0;
        let mut transfers = 0;
        let mut spends = 0;
        for ev in &report.energy_events {
            match ev {
                EnergyEvent::Harvest { .. } => {
                    harvests += 1;
                    self.harvested += 1;
                }
                EnergyEvent::Transfer { .. } => transfers += 1,
                EnergyEvent::Spend { amount, .. } => {
                    spends += 1;
                    self.spent += *amount as u64;
                }
            }
        }
        if harvests > 1 || transfers > 1 || spends > 1 {
            return Err(format!(
                "activation moved more than a single unit per channel: {:?}",
                report.energy_events
            ));
        }
        if is_energy_step {
            // Inside an energy run, nothing is spent and nobody moves.
            if spends > 0 {
                return Err("energy spent during an energy run".into());
            }
            if report.move_rec.is_some() {
                return Err("movement during an energy run".into());
            }
        }

        if sampled {
            // Battery bounds and the conservation ledger.
            let mut total = 0u64;
            for (id, _) in cfg.amoebots() {
                let EnergyVars { e_bat, .. } = energy_vars(cfg, id)
                    .ok_or_else(|| format!("{id:?}: missing energy variables"))?;
                if e_bat > self.kappa {
                    return Err(format!(
                        "{id:?}: battery {e_bat} above capacity {}",
                        self.kappa
                    ));
                }
                total += e_bat as u64;
            }
            if total != self.initial_total + self.harvested - self.spent {
                return Err(format!(
                    "conservation ledger off: batteries {total}, initial {} + harvested {} - spent {}",
                    self.initial_total, self.harvested, self.spent
                ));
            }

            // Connectivity, and sources persist.
            if !cfg.is_connected() {
                return Err("configuration disconnected".into());
            }
            if !cfg
                .amoebots()
                .any(|(id, _)| energy_vars(cfg, id).is_some_and(|v| v.state == SOURCE))
            {
                return Err("no source amoebot left".into());
            }

            check_forest(cfg)?;

            if is_energy_step {
                // Within an energy run the total never decreases.
                if self.in_energy_run && self.have_snapshot && total < self.prev_total {
                    return Err("energy lost within an energy run".into());
                }
                let stable_now = stable_set(cfg)?;
                let parents_now = Self::snapshot_parents(cfg);
                if self.in_energy_run && self.have_snapshot {
                    // Stable-tree membership persists and parents freeze
                    // for the rest of the run.
                    for id in &self.prev_stable {
                        if !stable_now.contains(id) {
                            return Err(format!("{id:?} left a stable tree during an energy run"));
                        }
                        if parents_now.get(id) != self.prev_parents.get(id) {
                            return Err(format!(
                                "{id:?} changed its parent while in a stable tree"
                            ));
                        }
                    }
                }
                self.prev_stable = stable_now;
                self.prev_parents = parents_now;
                self.have_snapshot = true;
                self.prev_total = total;
            }
        }

        if is_energy_step {
            if report.support.contains(&"GetPruned") {
                if let Some(actor) = report.actor {
                    let c = self.prune_counts.entry(actor).or_insert(0);
                    *c += 1;
                    self.max_prunes_in_run = self.max_prunes_in_run.max(*c);
                }
            }
            self.in_energy_run = true;
        } else {
            self.in_energy_run = false;
            self.have_snapshot = false;
            self.prune_counts.clear();
        }
        Ok(())
    }
}

impl StepObserver for EnergyMonitor {
    fn on_step(&mut self, cfg: &SystemConfiguration, report: &ExecReport) -> Result<(), String> {
        self.check(cfg, report)
    }
}
