//! Parameter sets shared by the benchmarks.

use aptsense_core::{ExperimentConfig, SystemParams};

/// Physical parameters of a bundled preset.
pub fn preset(name: &str) -> (ExperimentConfig, SystemParams) {
    let cfg = ExperimentConfig::preset(name).expect("bundled preset");
    let p = cfg.params().expect("bundled preset is valid");
    (cfg, p)
}

/// Dimensionless set inside its hysteresis window (γ = 1, δ = 4, U < 0).
pub fn bistable() -> SystemParams {
    SystemParams::anti_pt(0.0, 4.0, 0.25, 0.75, -0.01, 3.0)
}
