//! The two energy-compatible workloads and the spiral shape oracle.

pub mod hexagon;
pub mod leader;
pub mod spiral;

pub use hexagon::hexagon_formation_spec;
pub use leader::leader_election_spec;
pub use spiral::spiral_positions;
