//! Read-only local observations for guards: an amoebot's own connections and
//! public memory plus its neighbors' public memories. Neighbor identity is
//! exposed to algorithm code only through port labels; amoebot ids stay
//! engine-internal.

use crate::algorithm::Scope;
use crate::config::{AmoebotId, AmoebotRecord, NodeRole, SystemConfiguration};
use crate::executor::OpError;
use crate::lattice::{Edge, NodeCoord, PortLabel};
use crate::value::Value;

/// The shape role of the single node across a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Contracted,
    Head,
    Tail,
}

#[derive(Clone, Copy)]
pub struct View<'a> {
    pub(crate) cfg: &'a SystemConfiguration,
    pub(crate) actor: AmoebotId,
    pub(crate) scope: Scope,
}

impl<'a> View<'a> {
    pub fn new(cfg: &'a SystemConfiguration, actor: AmoebotId, scope: Scope) -> Self {
        View { cfg, actor, scope }
    }

    pub fn with_scope(self, scope: Scope) -> View<'a> {
        View { scope, ..self }
    }

    pub(crate) fn rec(&self) -> &'a AmoebotRecord {
        self.cfg.record(self.actor)
    }

    pub fn is_expanded(&self) -> bool {
        self.rec().is_expanded()
    }

    pub fn port_count(&self) -> u8 {
        self.rec().port_count()
    }

    pub fn ports(&self) -> impl Iterator<Item = PortLabel> {
        (0..self.port_count()).map(PortLabel)
    }

    /// The directed edge behind a port label.
    pub fn edge_via(&self, p: PortLabel) -> Result<Edge, OpError> {
        self.rec().port_edge(p).ok_or(OpError::InvalidPort(p.0))
    }

    pub(crate) fn occupant_across(&self, p: PortLabel) -> Result<Option<AmoebotId>, OpError> {
        let edge = self.edge_via(p)?;
        Ok(self.cfg.occupant(edge.to).map(|(id, _)| id))
    }

    /// Whether `other` is in the actor's established neighborhood: some port
    /// of `other` connected to the actor carries a cleared expand flag.
    pub(crate) fn is_established(&self, other: AmoebotId) -> bool {
        let rec = self.cfg.record(other);
        let me = self.rec();
        rec.ports().iter().any(|(_, anchor, d)| {
            let target = anchor.step(d);
            me.occupies(target) && !rec.flags.contains(&Edge::new(anchor, target))
        })
    }

    pub(crate) fn in_scope(&self, other: AmoebotId) -> bool {
        match self.scope {
            Scope::Full => true,
            Scope::Established => self.is_established(other),
        }
    }

    /// True iff there is a neighbor connected via port `p` (restricted to the
    /// established neighborhood when the action's scope says so).
    pub fn connected(&self, p: PortLabel) -> Result<bool, OpError> {
        match self.occupant_across(p)? {
            Some(id) => Ok(self.in_scope(id)),
            None => Ok(false),
        }
    }

    /// Physical occupancy of the node across `p`, independent of the
    /// established-neighborhood restriction: expansion into an occupied node
    /// fails no matter who occupies it, so movement guards test emptiness
    /// against raw occupancy.
    pub fn node_occupied(&self, p: PortLabel) -> Result<bool, OpError> {
        Ok(self.occupant_across(p)?.is_some())
    }

    /// Reads a variable from the addressed public memory. `None` addresses the
    /// actor's own memory.
    pub fn read(&self, p: Option<PortLabel>, var: &str) -> Result<Value, OpError> {
        let rec = match p {
            None => self.rec(),
            Some(p) => {
                let id = self
                    .occupant_across(p)?
                    .filter(|&id| self.in_scope(id))
                    .ok_or(OpError::Disconnected(p.0))?;
                self.cfg.record(id)
            }
        };
        rec.public
            .get(var)
            .ok_or_else(|| OpError::UnknownVariable(var.to_owned()))
    }

    /// Guard-friendly read: `None` when the port is invalid, disconnected, or
    /// the variable is absent.
    pub fn peek(&self, p: Option<PortLabel>, var: &str) -> Option<Value> {
        self.read(p, var).ok()
    }

    pub fn peek_sym(&self, p: Option<PortLabel>, var: &str) -> Option<&'static str> {
        self.peek(p, var).and_then(Value::as_sym)
    }

    pub fn peek_int(&self, p: Option<PortLabel>, var: &str) -> Option<i32> {
        self.peek(p, var).and_then(Value::as_int)
    }

    /// Connected ports with the amoebot behind each, in label order. An
    /// expanded neighbor adjacent on several edges appears once per port.
    pub(crate) fn connected_ports(&self) -> impl Iterator<Item = (PortLabel, AmoebotId)> + 'a {
        let view = *self;
        let ports = self.rec().ports();
        ports.iter().filter_map(move |(p, anchor, d)| {
            let (id, _) = view.cfg.occupant(anchor.step(d))?;
            view.in_scope(id).then_some((p, id))
        })
    }

    /// The shape role of the node across `p`.
    pub fn neighbor_node_kind(&self, p: PortLabel) -> Result<NodeKind, OpError> {
        let edge = self.edge_via(p)?;
        let (id, role) = self
            .cfg
            .occupant(edge.to)
            .filter(|&(id, _)| self.in_scope(id))
            .ok_or(OpError::Disconnected(p.0))?;
        Ok(match role {
            NodeRole::Head if self.cfg.record(id).is_expanded() => NodeKind::Head,
            NodeRole::Head => NodeKind::Contracted,
            NodeRole::Tail => NodeKind::Tail,
        })
    }

    /// For a contracted actor, the local direction label of a port (they
    /// coincide by construction).
    pub fn port_local_dir(&self, p: PortLabel) -> Result<u8, OpError> {
        if self.is_expanded() || p.0 >= 6 {
            return Err(OpError::InvalidPort(p.0));
        }
        Ok(p.0)
    }

    /// For a contracted actor, the port at one of its local direction labels.
    pub fn local_dir_port(&self, d: u8) -> Result<PortLabel, OpError> {
        if self.is_expanded() || d >= 6 {
            return Err(OpError::InvalidPort(d));
        }
        Ok(PortLabel(d))
    }

    /// Relative handedness of the neighbor across `p`: +1 when its labels
    /// rotate the same way as the actor's. Connected amoebots know each
    /// other's orientations, so this is legal local information.
    pub fn rel_chirality(&self, p: PortLabel) -> Result<i8, OpError> {
        let id = self
            .occupant_across(p)?
            .filter(|&id| self.in_scope(id))
            .ok_or(OpError::Disconnected(p.0))?;
        let a = self.rec().orientation;
        let b = self.cfg.record(id).orientation;
        Ok(a.chirality * b.chirality)
    }

    /// Translates a direction label from the neighbor's frame into the
    /// actor's frame.
    pub fn translate_dir_from(&self, p: PortLabel, their_dir: u8) -> Result<u8, OpError> {
        let id = self
            .occupant_across(p)?
            .filter(|&id| self.in_scope(id))
            .ok_or(OpError::Disconnected(p.0))?;
        let theirs = self.cfg.record(id).orientation;
        let global = crate::lattice::label_to_direction(theirs, PortLabel(their_dir % 6))
            .map_err(|_| OpError::InvalidPort(their_dir))?;
        Ok(crate::lattice::direction_to_label(self.rec().orientation, global).0)
    }

    /// Whether the contracted neighbor across `p` stores in `var` a direction
    /// label whose incident edge points at one of the actor's nodes.
    pub fn neighbor_dir_points_at_me(&self, p: PortLabel, var: &str) -> Result<bool, OpError> {
        let id = self
            .occupant_across(p)?
            .filter(|&id| self.in_scope(id))
            .ok_or(OpError::Disconnected(p.0))?;
        let rec = self.cfg.record(id);
        if rec.is_expanded() {
            return Ok(false);
        }
        let Some(Value::Dir(d)) = rec.public.get(var) else {
            return Ok(false);
        };
        let global = crate::lattice::label_to_direction(rec.orientation, PortLabel(d))
            .map_err(|_| OpError::UnknownVariable(var.to_owned()))?;
        let target = rec.head.step(global);
        Ok(self.cfg.record(self.actor).occupies(target))
    }

    /// Lowest-labeled port of the neighbor across `p` that faces the actor,
    /// as that neighbor's directed edge.
    pub(crate) fn neighbor_lowest_port_facing_me(&self, p: PortLabel) -> Result<Edge, OpError> {
        let id = self
            .occupant_across(p)?
            .filter(|&id| self.in_scope(id))
            .ok_or(OpError::Disconnected(p.0))?;
        let rec = self.cfg.record(id);
        for (_, anchor, d) in rec.ports().iter() {
            let target = anchor.step(d);
            if self.rec().occupies(target) {
                return Ok(Edge::new(anchor, target));
            }
        }
        Err(OpError::Disconnected(p.0))
    }

    /// Head and tail nodes of the amoebot across `p`.
    pub(crate) fn neighbor_nodes(
        &self,
        p: PortLabel,
    ) -> Result<(NodeCoord, Option<NodeCoord>), OpError> {
        let id = self
            .occupant_across(p)?
            .filter(|&id| self.in_scope(id))
            .ok_or(OpError::Disconnected(p.0))?;
        let rec = self.cfg.record(id);
        Ok((rec.head, rec.tail))
    }

    /// Whether the actor has any set expand flag.
    pub fn has_own_flag(&self) -> bool {
        !self.rec().flags.is_empty()
    }

    pub(crate) fn actor_id(&self) -> AmoebotId {
        self.actor
    }

    pub fn config(&self) -> &'a SystemConfiguration {
        self.cfg
    }
}
