use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vtf_core::gmm::{InitStrategy, KmeansOptions, SeparationLevel};
use vtf_core::manifold::{MappingMode, StepRule};
use vtf_core::rlbfgs::SolverConfig;

/// How the sample size `N` follows from the dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSize {
    /// `N = factor · n²`
    PerDimSquared(usize),
    Fixed(usize),
}

impl SampleSize {
    pub fn for_dim(self, n: usize) -> usize {
        match self {
            SampleSize::PerDimSquared(f) => f * n * n,
            SampleSize::Fixed(len) => len,
        }
    }
}

/// Cells at or beyond this size are run but flagged as long-running.
pub const LONG_RUNNING_POINTS: usize = 100_000;
pub const LONG_RUNNING_DIM: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub components: Vec<usize>,
    pub dims: Vec<usize>,
    pub sample_size: SampleSize,
    pub separations: Vec<SeparationLevel>,
    pub modes: Vec<MappingMode>,
    pub step_rules: Vec<StepRule>,
    pub runs: usize,
    pub seed: u64,
    /// Applied to every solve; `mode` and `step_rule` are set per cell.
    pub solver: SolverConfig,
    pub init: KmeansOptions,
    pub out_dir: Option<PathBuf>,
    /// Also write every run's data as `datasets/<cell>_runNN.csv`.
    pub save_datasets: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            components: vec![2],
            dims: vec![2],
            sample_size: SampleSize::PerDimSquared(10),
            separations: vec![SeparationLevel::High],
            modes: MappingMode::ALL.to_vec(),
            step_rules: vec![StepRule::ExpMap],
            runs: 10,
            seed: 0,
            solver: SolverConfig::default(),
            init: KmeansOptions {
                strategy: InitStrategy::Seeding,
                lloyd_iters: 0,
            },
            out_dir: None,
            save_datasets: false,
        }
    }
}

/// One (K, n, N, separation) combination; every mode and step rule of a
/// cell consumes the same data and initial point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub k: usize,
    pub n: usize,
    pub len: usize,
    pub separation: SeparationLevel,
}

impl Cell {
    pub fn is_long_running(&self) -> bool {
        self.len >= LONG_RUNNING_POINTS || self.n >= LONG_RUNNING_DIM
    }

    pub fn slug(&self) -> String {
        format!("K{}_n{}_N{}_{}", self.k, self.n, self.len, self.separation.label())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.dims.is_empty() || self.separations.is_empty() {
            bail!("components, dims and separations must be non-empty");
        }
        if self.modes.is_empty() || self.step_rules.is_empty() {
            bail!("modes and step_rules must be non-empty");
        }
        if self.runs == 0 {
            bail!("runs must be positive");
        }
        if self.components.contains(&0) || self.dims.contains(&0) {
            bail!("K and n must be positive");
        }
        for cell in self.cells() {
            if cell.len < cell.k {
                bail!("cell {} has fewer points than components", cell.slug());
            }
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &k in &self.components {
            for &n in &self.dims {
                for &separation in &self.separations {
                    out.push(Cell {
                        k,
                        n,
                        len: self.sample_size.for_dim(n),
                        separation,
                    });
                }
            }
        }
        out
    }

    /// `seed ⊕ FNV-1a(K, n, N, separation, run)`
    pub fn run_seed(&self, cell: &Cell, run: usize) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let sep = SeparationLevel::ALL
            .iter()
            .position(|s| *s == cell.separation)
            .unwrap_or(0);
        for word in [cell.k as u64, cell.n as u64, cell.len as u64, sep as u64, run as u64] {
            for byte in word.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        self.seed ^ h
    }
}
