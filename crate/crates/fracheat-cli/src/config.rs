//! Run configuration: a TOML document with [kernel], [grid], and [run]
//! sections. Every run writes the fully resolved configuration (defaults
//! included) as a manifest next to its outputs, so a run is a pure
//! function of its manifest.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub alpha: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// time points for kernel/bounds sweeps
    #[serde(default)]
    pub t: Vec<f64>,
    /// radial distances for kernel sweeps
    #[serde(default)]
    pub r: Vec<f64>,
    /// nodes per axis for field grids
    pub n: Option<usize>,
    /// scaled distances for bound sweeps
    #[serde(default)]
    pub scaled_dist: Vec<f64>,
    /// torus mode cutoff for bound sweeps
    pub mode_cutoff: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// gevrey: "time" or "space"
    pub route: Option<String>,
    pub k_max: Option<usize>,
    /// bounds: "euclid" or "torus"
    pub geometry: Option<String>,
    /// bounds: derivative order
    pub k: Option<usize>,
    /// backward: "bandlimited" or "rough"
    pub fixture: Option<String>,
    pub delta: Option<f64>,
    pub j_max: Option<usize>,
    /// evolve/mc: evolution horizon or kernel time
    pub t: Option<f64>,
    /// evolve: "spectral" or "mol"
    pub method: Option<String>,
    pub nonlinearity_num: Option<u32>,
    pub nonlinearity_den: Option<u32>,
    pub n_steps: Option<usize>,
    /// mc
    pub n_samples: Option<usize>,
    pub bins: Option<usize>,
    pub hist_range: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kernel: KernelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
}

/// Manifest written next to the outputs: the resolved configuration plus
/// the command line essentials.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub tolerance: f64,
    pub workers: Option<usize>,
    pub config: Config,
}

pub fn load(path: &std::path::Path) -> Result<Config, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let cfg: Config = toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
    if !(cfg.kernel.alpha > 0.0 && cfg.kernel.alpha <= 2.0) {
        return Err(format!(
            "kernel.alpha must lie in (0, 2], got {}",
            cfg.kernel.alpha
        ));
    }
    if !(1..=3).contains(&cfg.kernel.dim) {
        return Err(format!("kernel.dim must be 1..3, got {}", cfg.kernel.dim));
    }
    Ok(cfg)
}
