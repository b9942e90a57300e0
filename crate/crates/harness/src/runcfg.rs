//! Experiment configuration shared by the CLI flags and the JSON config
//! file. Flags override file values; everything has a sensible default.

use crate::generate::Shape;
use crate::setup::Workload;
use amoebot_core::energy;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const OUT_DIR_ENV: &str = "AMOEBOT_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub workload: Workload,
    /// None picks the workload's default shape family.
    pub shape: Option<Shape>,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub kappa: u32,
    pub demand: u32,
    pub sources: usize,
    /// Run the energy-constrained transform (otherwise the plain workload).
    pub energy: bool,
    /// Additionally apply the expansion-robust transform.
    pub robust: bool,
    pub policy: String,
    pub seed: u64,
    pub budget: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            workload: Workload::LeaderElection,
            shape: None,
            ns: vec![25],
            trials: 1,
            kappa: energy::DEFAULT_CAPACITY,
            demand: energy::DEFAULT_DEMAND,
            sources: 1,
            energy: true,
            robust: false,
            policy: "uniform-random".into(),
            seed: 1,
            budget: 10_000_000,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn shape(&self) -> Shape {
        self.shape.unwrap_or_else(|| self.workload.default_shape())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Deterministic per-cell seed: reruns with an identical config are
    /// byte-identical.
    pub fn cell_seed(&self, n: usize, trial: usize) -> u64 {
        splitmix(self.seed ^ ((n as u64) << 20) ^ trial as u64)
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
