//! Time-of-birth detection from thermal video.
//!
//! The pipeline has three stages:
//!
//! 1. [`gmm_norm`]: adaptive per-video normalization around the skin
//!    temperature found by a 1D Gaussian mixture.
//! 2. [`detector`]: per-frame newborn-presence scores.
//! 3. [`tob`]: causal moving-average smoothing and first threshold crossing.
//!
//! [`simulator`] renders synthetic birth episodes with exact ground truth,
//! and [`cli`] wires everything into the `thermotob` command.

pub mod cli;
pub mod detector;
pub mod gmm_norm;
pub mod simulator;
pub mod stats;
pub mod thermal_io;
pub mod tob;
