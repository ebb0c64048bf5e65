//! Gaussian-state security analysis of continuous-variable QKD under
//! shot-noise-unit calibration uncertainty.
//!
//! The crate builds covariance matrices for three detector calibration
//! models, evaluates asymptotic and finite-size key rates over a worst-case
//! shot-noise interval, and simulates the statistics of the calibration
//! itself.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod gaussian;
pub mod keyrate;
pub mod models;
pub mod sweep;

pub use calibration::{CalibrationEstimate, CalibrationMethod, DeviationRow, NoiseGroundTruth};
pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, MeasurementBasis, SymplecticSpectrum};
pub use keyrate::{BisectionOptions, FiniteSizeParams, KeyRateResult, Regime};
pub use models::{CalibrationModel, DetectorSplit, SnuScenario, SystemParams};
pub use sweep::{OutputFormat, SweepConfig, SweepRow, TenRow};
