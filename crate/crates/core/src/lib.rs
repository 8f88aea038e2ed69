//! Derivative-based fixed pattern noise (FPN) correction for focal-plane arrays.
//!
//! The pipeline estimates the spatial derivatives of the per-pixel offset map
//! from one-pixel dither pairs ([`dither`]), aggregates them with a temporal
//! median, and integrates the resulting gradient field with a cosine-basis
//! Poisson solver ([`poisson`]). [`sim`] provides a seeded simulation harness
//! for measuring the residual error under noise and shift errors.

pub mod cli;
pub mod config;
pub mod dither;
pub mod error;
pub mod grid;
pub mod io;
pub mod plot;
pub mod poisson;
pub mod rng;
pub mod sensor;
pub mod sim;

pub use dither::{
    aggregate_median, cycle_difference, estimate_gradient, Axis, DifferenceSample, GradientField,
};
pub use error::{NucError, Result};
pub use grid::{
    forward_diff_x, forward_diff_y, frame_stats, temporal_diff, DxMap, DyMap, Frame, Grid,
};
pub use poisson::{
    dense_lsq_oracle, divergence, reconstruct_offset, solve_poisson_dct, DivergenceMap,
    ReconstructionReport,
};
pub use sensor::{
    capture, compensate_offset, gain_compensate, GainMap, OffsetKind, OffsetMap, TemporalNoiseModel,
};
