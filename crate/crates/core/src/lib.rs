//! Tacho-less rotational speed tracking from vibration signals.
//!
//! Pipeline per frame: evidence curves from several estimators ([`estimators`]) are
//! mapped onto a shared RPM grid as normalized log-likelihoods ([`c2g`]), pooled
//! log-linearly ([`fusion`]) and absorbed by a recursive grid filter whose transition
//! width follows the curvature of the previous log-posterior ([`tracker`]).
//!
//! [`synth`] generates stress-test recordings with known trajectories, [`baselines`]
//! holds the comparison methods and [`pipeline`] wires everything together for the CLI.

pub mod baselines;
pub mod c2g;
pub mod error;
pub mod estimators;
pub mod fusion;
pub mod grid;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use grid::{GridLogLikelihood, RpmGrid};
