//! Switching-coefficient detection in linear regression.
//!
//! The fit is reduced to one univariate sequence per coefficient, each
//! observation contributing its own coefficient reading, and the binary
//! detector runs on every sequence.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binary::detect_symmetric;
use crate::error::{Error, Result};
use crate::sample::{DetectionConfig, DetectionReport, Sample};

/// Design matrix `X` (row-major, `n x k`) and response `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    k: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl RegressionData {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let k = rows.first().map(Vec::len).ok_or(Error::EmptySample)?;
        if k == 0 {
            return Err(Error::InvalidConfig(
                "design needs at least one column".into(),
            ));
        }
        if rows.len() != y.len() {
            return Err(Error::InvalidConfig(format!(
                "design has {} rows but the response has {} values",
                rows.len(),
                y.len()
            )));
        }
        let mut x = Vec::with_capacity(rows.len() * k);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::DimensionMismatch {
                    index: i + 1,
                    expected: k,
                    found: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
                return Err(Error::NonFiniteValue(i + 1));
            }
            x.extend_from_slice(r);
        }
        if rows.len() <= k {
            return Err(Error::SampleTooSmall {
                n: rows.len(),
                min: k + 1,
            });
        }
        Ok(Self { k, x, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn design(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n(), self.k, &self.x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(X'X)^-1`, row-major `k x k`.
    xtx_inv: DMatrix<f64>,
}

/// Ordinary least squares through a QR factorisation.
pub fn ols_fit(d: &RegressionData) -> Result<OlsFit> {
    let x = d.design();
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..d.k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..d.k).any(|i| r[(i, i)].abs() <= scale * 1e-12 * d.n() as f64) {
        return Err(Error::RankDeficient);
    }
    let y = DVector::from_column_slice(&d.y);
    let qty = qr.q().transpose() * &y;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    let residuals = &y - &x * &beta;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(d.k, d.k))
        .ok_or(Error::RankDeficient)?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(OlsFit {
        beta: beta.iter().copied().collect(),
        residuals: residuals.iter().copied().collect(),
        xtx_inv,
    })
}

/// How observation `i`'s reading of the coefficient vector is formed from the
/// fit `beta` and its residual `r_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientTrack {
    /// `beta + x_i r_i / |x_i|^2`: the smallest change to `beta` that fits
    /// observation `i` exactly.
    #[default]
    MinimumNorm,
    /// `beta + N (X'X)^-1 x_i r_i`; averages back to `beta` exactly.
    InfluenceSum,
    /// `beta + (X'X)^-1 x_i r_i / h_ii` with leverage `h_ii`.
    LeverageScaled,
}

fn tracks(d: &RegressionData, fit: &OlsFit, track: CoefficientTrack) -> Vec<Vec<f64>> {
    let n = d.n();
    let k = d.k;
    (0..n)
        .map(|i| {
            let xi = DVector::from_column_slice(d.row(i));
            let ri = fit.residuals[i];
            let step: DVector<f64> = match track {
                CoefficientTrack::MinimumNorm => &xi * (ri / xi.norm_squared()),
                CoefficientTrack::InfluenceSum => &fit.xtx_inv * &xi * (n as f64 * ri),
                CoefficientTrack::LeverageScaled => {
                    let g = &fit.xtx_inv * &xi;
                    let h = xi.dot(&g);
                    g * (ri / h)
                }
            };
            (0..k).map(|j| fit.beta[j] + step[j]).collect()
        })
        .collect()
}

/// Sequence of readings of coefficient `j` (0-based), one per observation.
pub fn coefficient_sequence(
    d: &RegressionData,
    j: usize,
    track: CoefficientTrack,
) -> Result<Sample> {
    if j >= d.k {
        return Err(Error::InvalidConfig(format!(
            "coefficient index {j} out of range for {} columns",
            d.k
        )));
    }
    let fit = ols_fit(d)?;
    Sample::new(tracks(d, &fit, track).into_iter().map(|t| t[j]).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionSwitchReport {
    pub per_coefficient: Vec<DetectionReport>,
    pub any_switch: bool,
    pub epsilon_hat: Option<f64>,
    pub track: CoefficientTrack,
}

/// Runs the symmetric detector on every coefficient sequence built with the
/// default track.
pub fn detect_switching_regression(
    d: &RegressionData,
    cfg: &DetectionConfig,
    c: f64,
) -> Result<RegressionSwitchReport> {
    detect_switching_regression_with(d, cfg, c, CoefficientTrack::default())
}

pub fn detect_switching_regression_with(
    d: &RegressionData,
    cfg: &DetectionConfig,
    c: f64,
    track: CoefficientTrack,
) -> Result<RegressionSwitchReport> {
    let fit = ols_fit(d)?;
    let t = tracks(d, &fit, track);
    let per_coefficient = (0..d.k)
        .map(|j| {
            let s = Sample::new(t.iter().map(|row| row[j]).collect())?;
            detect_symmetric(&s, cfg, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let any_switch = per_coefficient.iter().any(DetectionReport::rejects);
    // largest J among rejecting coefficients; first index wins ties
    let epsilon_hat = per_coefficient
        .iter()
        .filter(|r| r.rejects() && r.epsilon_hat.is_some())
        .fold(None::<&DetectionReport>, |best, r| match best {
            Some(b) if b.j >= r.j => Some(b),
            _ => Some(r),
        })
        .and_then(|r| r.epsilon_hat);
    Ok(RegressionSwitchReport {
        per_coefficient,
        any_switch,
        epsilon_hat,
        track,
    })
}
