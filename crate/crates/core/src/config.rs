//! System configurations: the occupancy assignment plus all public memories.
//! A configuration is the unit of legality checking, snapshotting and replay.

use crate::lattice::{port_map, Edge, NodeCoord, Orientation, PortLabel, PortMap};
use crate::value::Memory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::hash::{BuildHasherDefault, Hasher};
use thiserror::Error;

/// Multiply-rotate hasher for small fixed-width keys; node lookups are the
/// hottest operation in the engine.
#[derive(Default)]
pub struct FastHasher(u64);

impl Hasher for FastHasher {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        }
    }

    fn write_i32(&mut self, v: i32) {
        self.0 = (self.0 ^ v as u32 as u64)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .rotate_left(23);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

type NodeMap<V> = HashMap<NodeCoord, V, BuildHasherDefault<FastHasher>>;

/// Simulator bookkeeping identifier. Amoebots are anonymous at the algorithm
/// level; ids appear only in the engine and in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AmoebotId(pub u32);

/// Which of an amoebot's nodes a given lattice node is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    Head,
    Tail,
}

/// Upper bound on public-memory entries, enforcing constant-size memories.
pub const MAX_PUBLIC_VARS: usize = 16;

/// One amoebot: shape (contracted when `tail` is absent), orientation, and
/// its public memory. Expand flags are kept apart from the generic store and
/// keyed by lattice edge so they survive relabeling. Private memory is
/// scratch space that is cleared between activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmoebotRecord {
    pub head: NodeCoord,
    pub tail: Option<NodeCoord>,
    pub orientation: Orientation,
    #[serde(default)]
    pub public: Memory,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<Edge>,
    #[serde(skip)]
    pub private: Memory,
}

impl AmoebotRecord {
    pub fn contracted(head: NodeCoord, orientation: Orientation) -> Self {
        AmoebotRecord {
            head,
            tail: None,
            orientation,
            public: Memory::new(),
            flags: BTreeSet::new(),
            private: Memory::new(),
        }
    }

    pub fn is_expanded(&self) -> bool {
        self.tail.is_some()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeCoord> + '_ {
        std::iter::once(self.head).chain(self.tail)
    }

    pub fn occupies(&self, node: NodeCoord) -> bool {
        self.head == node || self.tail == Some(node)
    }

    /// Ports in label order: 6 for a contracted amoebot, 10 for an expanded
    /// one, without heap allocation.
    pub fn ports(&self) -> PortMap {
        port_map(self.head, self.tail, self.orientation)
    }

    pub fn port_count(&self) -> u8 {
        if self.is_expanded() {
            10
        } else {
            6
        }
    }

    /// The directed edge a port label denotes, if the label is in range.
    pub fn port_edge(&self, label: PortLabel) -> Option<Edge> {
        self.ports().edge(label)
    }

    /// The label currently naming a directed edge, if that edge is a port.
    pub fn edge_port(&self, edge: Edge) -> Option<PortLabel> {
        self.ports().label_of(edge)
    }

    pub fn has_flags(&self) -> bool {
        !self.flags.is_empty()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("node ({0}, {1}) occupied by more than one amoebot")]
    DoubleOccupancy(i32, i32),
    #[error("amoebot {0:?} has non-adjacent head and tail")]
    NonAdjacentExpansion(u32),
    #[error("occupancy index inconsistent with amoebot records")]
    InconsistentIndex,
    #[error("duplicate amoebot id {0:?}")]
    DuplicateId(u32),
}

/// Occupancy assignment plus all amoebot records. Value semantics: engine
/// steps produce new configurations; snapshots may be shared freely.
/// Records are stored densely by id, which generators hand out contiguously.
#[derive(Debug, Clone, Default)]
pub struct SystemConfiguration {
    amoebots: Vec<Option<AmoebotRecord>>,
    occupancy: NodeMap<(AmoebotId, NodeRole)>,
    count: usize,
}

impl PartialEq for SystemConfiguration {
    fn eq(&self, other: &Self) -> bool {
        // occupancy is derived from the records
        self.amoebots == other.amoebots
    }
}

impl SystemConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a configuration from records, checking legality.
    pub fn from_records(
        records: impl IntoIterator<Item = (AmoebotId, AmoebotRecord)>,
    ) -> Result<Self, ConfigError> {
        let mut cfg = SystemConfiguration::new();
        for (id, rec) in records {
            cfg.insert(id, rec)?;
        }
        Ok(cfg)
    }

    pub fn insert(&mut self, id: AmoebotId, rec: AmoebotRecord) -> Result<(), ConfigError> {
        let idx = id.0 as usize;
        if self.amoebots.len() <= idx {
            self.amoebots.resize(idx + 1, None);
        }
        if self.amoebots[idx].is_some() {
            return Err(ConfigError::DuplicateId(id.0));
        }
        if let Some(tail) = rec.tail {
            if !rec.head.is_adjacent(tail) {
                return Err(ConfigError::NonAdjacentExpansion(id.0));
            }
        }
        for (node, role) in
            std::iter::once((rec.head, NodeRole::Head)).chain(rec.tail.map(|t| (t, NodeRole::Tail)))
        {
            if self.occupancy.contains_key(&node) {
                return Err(ConfigError::DoubleOccupancy(node.q, node.r));
            }
            self.occupancy.insert(node, (id, role));
        }
        self.amoebots[idx] = Some(rec);
        self.count += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn ids(&self) -> impl Iterator<Item = AmoebotId> + '_ {
        self.amoebots
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|_| AmoebotId(i as u32)))
    }

    pub fn amoebots(&self) -> impl Iterator<Item = (AmoebotId, &AmoebotRecord)> + '_ {
        self.amoebots
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|rec| (AmoebotId(i as u32), rec)))
    }

    pub fn get(&self, id: AmoebotId) -> Option<&AmoebotRecord> {
        self.amoebots.get(id.0 as usize).and_then(|r| r.as_ref())
    }

    #[inline]
    pub fn record(&self, id: AmoebotId) -> &AmoebotRecord {
        self.amoebots[id.0 as usize]
            .as_ref()
            .expect("known amoebot id")
    }

    #[inline]
    pub(crate) fn record_mut(&mut self, id: AmoebotId) -> &mut AmoebotRecord {
        self.amoebots[id.0 as usize]
            .as_mut()
            .expect("known amoebot id")
    }

    /// Mutable record access for initialization and test scaffolding; the
    /// engine itself goes through journaled operation contexts.
    pub fn record_mut_pub(&mut self, id: AmoebotId) -> &mut AmoebotRecord {
        self.record_mut(id)
    }

    pub fn occupant(&self, node: NodeCoord) -> Option<(AmoebotId, NodeRole)> {
        self.occupancy.get(&node).copied()
    }

    pub fn is_occupied(&self, node: NodeCoord) -> bool {
        self.occupancy.contains_key(&node)
    }

    /// Occupied nodes in deterministic (record, head-then-tail) order.
    pub fn occupied_nodes(&self) -> impl Iterator<Item = NodeCoord> + '_ {
        self.amoebots().flat_map(|(_, rec)| rec.nodes())
    }

    pub(crate) fn set_occupancy(&mut self, node: NodeCoord, v: Option<(AmoebotId, NodeRole)>) {
        match v {
            Some(entry) => {
                self.occupancy.insert(node, entry);
            }
            None => {
                self.occupancy.remove(&node);
            }
        }
    }

    /// Checks occupancy legality: mutual record/index consistency, at most one
    /// amoebot per node, expanded pairs adjacent.
    pub fn check_legal(&self) -> Result<(), ConfigError> {
        let mut seen: BTreeMap<NodeCoord, AmoebotId> = BTreeMap::new();
        for (id, rec) in self.amoebots() {
            if let Some(tail) = rec.tail {
                if !rec.head.is_adjacent(tail) {
                    return Err(ConfigError::NonAdjacentExpansion(id.0));
                }
            }
            for node in rec.nodes() {
                if seen.insert(node, id).is_some() {
                    return Err(ConfigError::DoubleOccupancy(node.q, node.r));
                }
                match self.occupancy.get(&node) {
                    Some(&(oid, role)) if oid == id => {
                        let expect = if node == rec.head {
                            NodeRole::Head
                        } else {
                            NodeRole::Tail
                        };
                        if role != expect {
                            return Err(ConfigError::InconsistentIndex);
                        }
                    }
                    _ => return Err(ConfigError::InconsistentIndex),
                }
            }
        }
        if seen.len() != self.occupancy.len() {
            return Err(ConfigError::InconsistentIndex);
        }
        Ok(())
    }

    /// True iff the occupied nodes induce a single connected component.
    /// An expanded amoebot's nodes are adjacent, so plain node adjacency
    /// already routes through the amoebot.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.occupied_nodes().next() else {
            return true;
        };
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for w in v.neighbors() {
                if self.occupancy.contains_key(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.occupancy.len()
    }

    /// A copy with the named public variables (and optionally expand flags)
    /// removed from every amoebot. Used for congruence modulo framework
    /// variables.
    pub fn projected(&self, drop_vars: &[&str], drop_flags: bool) -> SystemConfiguration {
        let mut out = self.clone();
        for rec in out.amoebots.iter_mut().flatten() {
            for v in drop_vars {
                rec.public.remove(v);
            }
            if drop_flags {
                rec.flags.clear();
            }
            rec.private.clear();
        }
        out
    }

    /// Stable hex digest of the canonical serialized form.
    pub fn digest(&self) -> String {
        let snapshot = Snapshot::of(self);
        let bytes = serde_json::to_vec(&snapshot).expect("configuration serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let out = hasher.finalize();
        hex_prefix(&out, 16)
    }

    pub fn to_snapshot_string(&self) -> String {
        serde_json::to_string_pretty(&Snapshot::of(self)).expect("configuration serializes")
    }

    pub fn from_snapshot_str(s: &str) -> Result<Self, SnapshotError> {
        let snap: Snapshot = serde_json::from_str(s).map_err(SnapshotError::Parse)?;
        snap.into_config()
    }
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("malformed snapshot: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("illegal configuration: {0}")]
    Illegal(#[from] ConfigError),
}

pub const SNAPSHOT_VERSION: u32 = 1;

/// Round-trippable structured text form of a configuration. Occupancy is
/// derived, so only the records are stored.
#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    amoebots: BTreeMap<u32, AmoebotRecord>,
}

impl Snapshot {
    fn of(cfg: &SystemConfiguration) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            amoebots: cfg
                .amoebots()
                .map(|(id, rec)| {
                    let mut rec = rec.clone();
                    rec.private.clear();
                    (id.0, rec)
                })
                .collect(),
        }
    }

    fn into_config(self) -> Result<SystemConfiguration, SnapshotError> {
        if self.version != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version(self.version));
        }
        let cfg = SystemConfiguration::from_records(
            self.amoebots
                .into_iter()
                .map(|(id, rec)| (AmoebotId(id), rec)),
        )?;
        Ok(cfg)
    }
}
