//! Experiment harness: configuration generators, workload assembly, sweeps
//! with CSV output, SVG snapshots, and trace verification suites.

pub mod fit;
pub mod generate;
pub mod render;
pub mod runcfg;
pub mod setup;
pub mod sweep;
pub mod verify;
