//! Triangular-lattice geometry: axial coordinates, the six global directions,
//! and the mapping between an amoebot's local port labels and global directions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Offsets of the six lattice directions in axial `(q, r)` coordinates.
/// Direction 0 points along +q; directions proceed counter-clockwise.
pub const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// A node of the infinite triangular lattice in axial coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeCoord {
    pub q: i32,
    pub r: i32,
}

impl NodeCoord {
    pub const fn new(q: i32, r: i32) -> Self {
        NodeCoord { q, r }
    }

    pub const ORIGIN: NodeCoord = NodeCoord { q: 0, r: 0 };

    /// The adjacent node in global direction `d` (0..5).
    pub fn step(self, d: u8) -> NodeCoord {
        let (dq, dr) = DIRECTIONS[(d % 6) as usize];
        NodeCoord::new(self.q + dq, self.r + dr)
    }

    /// The six adjacent nodes in global direction order 0..5.
    pub fn neighbors(self) -> [NodeCoord; 6] {
        [
            self.step(0),
            self.step(1),
            self.step(2),
            self.step(3),
            self.step(4),
            self.step(5),
        ]
    }

    /// Global direction from `self` to `other`, if they are lattice-adjacent.
    pub fn direction_to(self, other: NodeCoord) -> Option<u8> {
        let d = (other.q - self.q, other.r - self.r);
        DIRECTIONS.iter().position(|&o| o == d).map(|i| i as u8)
    }

    pub fn is_adjacent(self, other: NodeCoord) -> bool {
        self.direction_to(other).is_some()
    }
}

/// A directed lattice edge. Used as the move-stable identity for parent
/// pointers and expand flags: port labels are recomputed views, edges are not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeCoord,
    pub to: NodeCoord,
}

impl Edge {
    pub fn new(from: NodeCoord, to: NodeCoord) -> Self {
        Edge { from, to }
    }

    pub fn reversed(self) -> Edge {
        Edge {
            from: self.to,
            to: self.from,
        }
    }
}

/// An amoebot's persistent local frame: which incident edge it calls label 0
/// (`offset`, a global direction) and its handedness (`chirality`, +1 when
/// its labels increase counter-clockwise in the global frame, -1 otherwise).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    pub offset: u8,
    pub chirality: i8,
}

impl Orientation {
    pub fn new(offset: u8, chirality: i8) -> Self {
        assert!(offset < 6, "orientation offset out of range");
        assert!(
            chirality == 1 || chirality == -1,
            "chirality must be +1 or -1"
        );
        Orientation { offset, chirality }
    }

    /// The identity frame: label 0 = global direction 0, counter-clockwise.
    pub const IDENTITY: Orientation = Orientation {
        offset: 0,
        chirality: 1,
    };

    /// All 12 orientations (6 offsets x 2 chiralities).
    pub fn all() -> impl Iterator<Item = Orientation> {
        (0..6u8).flat_map(|o| [1i8, -1].into_iter().map(move |c| Orientation::new(o, c)))
    }
}

/// A port label. Contracted amoebots expose labels 0..5, expanded ones 0..9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortLabel(pub u8);

impl PortLabel {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("port label {0} out of range for a contracted port map")]
    LabelOutOfRange(u8),
    #[error("head and tail must be distinct adjacent nodes")]
    IllegalShape,
}

/// Maps a contracted amoebot's local label to the global direction of the
/// incident edge: `(offset + chirality * label) mod 6`.
pub fn label_to_direction(o: Orientation, label: PortLabel) -> Result<u8, LatticeError> {
    if label.0 >= 6 {
        return Err(LatticeError::LabelOutOfRange(label.0));
    }
    Ok(rotate(o.offset, o.chirality as i32 * label.0 as i32))
}

/// Inverse of [`label_to_direction`].
pub fn direction_to_label(o: Orientation, direction: u8) -> PortLabel {
    let diff = direction as i32 - o.offset as i32;
    PortLabel(rotate(0, o.chirality as i32 * diff))
}

/// `base + steps` in the cyclic group of 6 directions.
pub fn rotate(base: u8, steps: i32) -> u8 {
    (base as i32 + steps).rem_euclid(6) as u8
}

/// The opposite global direction.
pub fn opposite(direction: u8) -> u8 {
    rotate(direction, 3)
}

/// Ports of a shape in label order without heap allocation: the anchor node
/// and global direction of each incident boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortMap {
    len: u8,
    entries: [(NodeCoord, u8); 10],
}

impl PortMap {
    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, label: PortLabel) -> Option<(NodeCoord, u8)> {
        (label.0 < self.len).then(|| self.entries[label.index()])
    }

    pub fn edge(&self, label: PortLabel) -> Option<Edge> {
        self.get(label)
            .map(|(anchor, d)| Edge::new(anchor, anchor.step(d)))
    }

    pub fn iter(self) -> impl Iterator<Item = (PortLabel, NodeCoord, u8)> {
        (0..self.len).map(move |l| {
            let (anchor, d) = self.entries[l as usize];
            (PortLabel(l), anchor, d)
        })
    }

    /// The label currently naming a directed edge, if that edge is a port.
    pub fn label_of(self, edge: Edge) -> Option<PortLabel> {
        self.iter()
            .find(|&(_, anchor, d)| anchor == edge.from && anchor.step(d) == edge.to)
            .map(|(l, _, _)| l)
    }
}

/// Port map of a contracted (`tail = None`) or expanded shape.
pub fn port_map(head: NodeCoord, tail: Option<NodeCoord>, o: Orientation) -> PortMap {
    match tail {
        None => {
            let mut entries = [(head, 0u8); 10];
            for (l, e) in entries.iter_mut().enumerate().take(6) {
                e.1 = rotate(o.offset, o.chirality as i32 * l as i32);
            }
            PortMap { len: 6, entries }
        }
        Some(tail) => expanded_port_map(head, tail, o).expect("expanded shape is legal"),
    }
}

fn expanded_port_map(
    head: NodeCoord,
    tail: NodeCoord,
    o: Orientation,
) -> Result<PortMap, LatticeError> {
    let d_ht = head.direction_to(tail).ok_or(LatticeError::IllegalShape)?;
    let d_th = opposite(d_ht);
    let chir = o.chirality as i32;

    let mut cycle = [(head, 0u8); 10];
    for (i, slot) in cycle.iter_mut().enumerate() {
        let (anchor, base) = if i < 5 { (head, d_ht) } else { (tail, d_th) };
        *slot = (anchor, rotate(base, chir * ((i % 5) as i32 + 1)));
    }

    let d0 = o.offset;
    let start = if d0 == d_ht {
        0
    } else {
        cycle
            .iter()
            .position(|&(n, d)| n == head && d == d0)
            .expect("head port for a non-tail direction is always on the perimeter")
    };
    cycle.rotate_left(start);
    Ok(PortMap {
        len: 10,
        entries: cycle,
    })
}

/// The ten boundary ports of an expanded amoebot occupying `head` and `tail`,
/// in label order. Each entry is the port's anchor node and the global
/// direction of its incident edge; the shared head-tail edge is not a port.
///
/// Labels run consecutively around the perimeter in chirality order, starting
/// from the head's port at global direction `label_to_direction(o, 0)`, or at
/// the next perimeter edge in chirality order when that direction faces the
/// tail.
pub fn expanded_port_layout(
    head: NodeCoord,
    tail: NodeCoord,
    o: Orientation,
) -> Result<Vec<(NodeCoord, u8)>, LatticeError> {
    let map = expanded_port_map(head, tail, o)?;
    Ok(map.iter().map(|(_, anchor, d)| (anchor, d)).collect())
}
