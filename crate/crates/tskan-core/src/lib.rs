//! Interpretable regression for multivariate time series: compact
//! frequency-domain features (DC, magnitude, phase per variable) feeding a
//! one-layer spline-based additive network, plus the two-stage top-k
//! feature-selection pipeline, linear baselines, and interpretability
//! exports. Built for MOS prediction from video-streaming session logs,
//! usable on any fixed-length multivariate series.
//!
//! With the default `parallel` feature, per-sample work (feature
//! extraction, batch forward/gradient terms) runs on rayon; reductions are
//! always performed in sample order, so results are identical with the
//! feature disabled.

pub mod artifact;
pub mod baselines;
pub mod data;
pub mod error;
pub mod explain;
pub mod kan;
mod par;
pub mod pipeline;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use error::{Result, TskanError};
