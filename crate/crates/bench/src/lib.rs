//! Shared fixtures for the criterion benchmarks.

use isac_core::experiments::realize;
use isac_core::selection::SelectionProblem;
use isac_core::SystemConfig;

/// Desk-scale configuration with a fixed seed.
pub fn desk_config() -> SystemConfig {
    SystemConfig { seed: 17, ..SystemConfig::default() }
}

/// Channel data of one realization of `cfg`.
pub fn problem(cfg: &SystemConfig) -> SelectionProblem {
    realize(cfg).expect("valid configuration").1
}
