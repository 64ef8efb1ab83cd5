//! Detection and estimation of randomly switching regimes in samples.
//!
//! A sample is split around a reference point into *ordinary* observations
//! (inside a band of half-width `b`) and *abnormal* ones. The separation
//! statistic `psi(b)` compares the two groups; its maximum `J` over `b` is
//! tested against a threshold `C`. On rejection the abnormal share estimates
//! the switched fraction.
//!
//! - [`split`]: the statistic and its exact `O(N log N)` scan.
//! - [`binary`]: two-regime detection (mean shift, asymmetric bands, variance
//!   contamination).
//! - [`multiclass`], [`multivariate`], [`regression`]: several regimes, vector
//!   data, and switching regression coefficients.
//! - [`calibration`]: fixed, formula and simulated thresholds.
//! - [`theory`]: exponential error bounds and population quantities.
//! - [`generators`], [`harness`]: synthetic data and Monte Carlo experiments.

pub mod binary;
pub mod calibration;
pub mod error;
pub mod generators;
pub mod harness;
pub mod multiclass;
pub mod multivariate;
mod numeric;
pub mod regression;
pub mod sample;
pub mod split;
pub mod theory;

pub use binary::{detect, detect_symmetric, MixtureEstimate};
pub use error::{Error, Result};
pub use numeric::{bisect, integrate};
pub use sample::{
    validate_sample, BandFn, BandPartition, Decision, DetectionConfig, DetectionReport, Sample,
    ScanGrid, ThresholdSpec, Variant, VectorSample,
};
