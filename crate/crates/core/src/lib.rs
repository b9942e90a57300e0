//! Deterministic simulator and property-testing library for the canonical
//! amoebot model: triangular-lattice geometry, guarded-action semantics under
//! an unfair sequential adversary, an energy distribution framework with its
//! analysis oracles, an expansion-robust transform, and two workload
//! algorithms (leader election by erosion, hexagon formation).

pub mod algorithm;
pub mod algorithms;
pub mod config;
pub mod conventions;
pub mod energy;
pub mod enumerate;
pub mod executor;
pub mod fixtures;
pub mod invariants;
pub mod lattice;
pub mod recharge;
pub mod replay;
pub mod robust;
pub mod scheduler;
pub mod trace;
pub mod value;
pub mod view;

pub use algorithm::{ActionSpec, AlgorithmSpec, Scope, Step};
pub use config::{AmoebotId, AmoebotRecord, SystemConfiguration};
pub use executor::{
    apply_action, execute_action, ExecError, ExecReport, KeepEnd, MoveOp, OpCtx, OpError,
};
pub use lattice::{Edge, NodeCoord, Orientation, PortLabel};
pub use value::Value;
pub use view::View;
