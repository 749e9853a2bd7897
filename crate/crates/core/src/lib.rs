//! Wideband THz integrated sensing and communications: joint transmit
//! antenna selection and hybrid beamforming with beam-squint compensation.
//!
//! The crate is organized bottom-up:
//!
//! * [`scenario`] draws target/user geometry and builds per-subcarrier
//!   channels and sensing steering matrices.
//! * [`beamformer`] factors joint sensing-communications precoders into an
//!   analog and a digital stage on a given subarray.
//! * [`selection`] enumerates subarrays, scores them by spectral efficiency
//!   and searches for the best one.
//! * [`experiments`] runs seeded Monte Carlo sweeps and exports labeled
//!   datasets.

pub mod beamformer;
pub mod config;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod rng;
pub mod scenario;
pub mod selection;

pub use beamformer::{design_hybrid, DesignOptions, HybridBeamformer, HybridDesign, JscBeamformer};
pub use config::{ProcrustesMode, SystemConfig};
pub use error::{IsacError, Result};
pub use scenario::{generate_channel, ChannelSet, Scenario};
pub use selection::{
    exhaustive_select, sequential_select, spectral_efficiency, CandidateSpace, Enumeration, GroupConfig, Selection,
    SelectionProblem, SubarrayConfig,
};
