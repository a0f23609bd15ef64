//! Change-point detection for temporal networks.
//!
//! The crate fits stochastic block models (plain and degree-corrected) to
//! aggregated windows of network snapshots with belief propagation, and
//! flags instants where a two-segment model explains a window significantly
//! better than a single model. Significance comes from a parametric
//! bootstrap of the maximum log-likelihood ratio.
//!
//! Module map:
//! - [`graph`]: snapshots, temporal networks, window aggregation, edge-list I/O.
//! - [`sbm`]: likelihoods, belief propagation, EM fitting, description length.
//! - [`detect`]: sliding-window likelihood-ratio detection with bootstrap p-values.
//! - [`baseline`]: mean-degree and mean-geodesic t-test detectors.
//! - [`synth`]: planted change-point series.
//! - [`eval`]: precision/recall, detection-rate curves, plot data.

// Block-matrix code indexes several arrays by the same block label.
#![allow(clippy::needless_range_loop)]

pub mod baseline;
pub mod cli;
pub mod detect;
mod error;
pub mod eval;
pub mod graph;
pub mod rng;
pub mod sbm;
pub mod synth;

pub use error::{Error, Result};
