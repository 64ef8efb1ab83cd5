//! Shared domain types: validated samples, band partitions, threshold and
//! detection configuration, and the detection report.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::GeneratorKind;

/// Default minimum sample size accepted by the detectors.
pub const DEFAULT_N_MIN: usize = 20;

/// An ordered, non-empty sequence of finite observations.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        validate_sample(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a `Sample` holds at least one observation.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Sub-sample made of the observations at `indices` (0-based), in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Sample> {
        Sample::new(indices.iter().map(|&i| self.values[i]).collect())
    }

    pub(crate) fn require_min(&self, n_min: usize) -> Result<()> {
        if self.len() < n_min {
            return Err(Error::SampleTooSmall {
                n: self.len(),
                min: n_min,
            });
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for Sample {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        Sample::new(values).map_err(serde::de::Error::custom)
    }
}

/// Checks that `values` is non-empty and finite.
pub fn validate_sample(values: Vec<f64>) -> Result<Sample> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(pos + 1));
    }
    Ok(Sample { values })
}

/// An ordered sequence of equal-length finite vectors, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSample {
    dim: usize,
    data: Vec<f64>,
}

impl VectorSample {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptySample)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "vectors must have dimension >= 1".into(),
            ));
        }
        let mut data = Vec::with_capacity(dim * vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    index: i + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteValue(i + 1));
            }
            data.extend_from_slice(v);
        }
        Ok(Self { dim, data })
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::EmptySample);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                index: data.len() / dim + 1,
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(pos / dim + 1));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    /// Euclidean norm of every vector.
    pub fn norms(&self) -> Sample {
        let values = self.rows().map(euclidean_norm).collect();
        Sample { values }
    }
}

pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Split of a sample at band half-width `b` into ordinary and abnormal
/// observations. Indices are 0-based in memory and 1-based when serialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPartition {
    pub b: f64,
    #[serde(with = "one_based")]
    pub ordinary: Vec<usize>,
    #[serde(with = "one_based")]
    pub abnormal: Vec<usize>,
}

impl BandPartition {
    pub fn n1(&self) -> usize {
        self.ordinary.len()
    }

    pub fn n2(&self) -> usize {
        self.abnormal.len()
    }

    pub fn n(&self) -> usize {
        self.n1() + self.n2()
    }

    /// True when the two index sets cover `0..n` exactly once.
    pub fn is_partition_of(&self, n: usize) -> bool {
        if self.n() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &i in self.ordinary.iter().chain(&self.abnormal) {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }
}

mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|i| i + 1).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        v.into_iter()
            .map(|i| {
                i.checked_sub(1)
                    .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))
            })
            .collect()
    }
}

/// How the decision threshold `C` is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdSpec {
    Fixed {
        c: f64,
    },
    /// Log-linear regression formula in `(N, sigma, rho, alpha)`.
    Formula {
        sigma: f64,
        rho: f64,
        alpha: f64,
    },
    /// Empirical `alpha`-quantile of the decision statistic over homogeneous
    /// training samples drawn from `generator`.
    MonteCarlo {
        alpha: f64,
        trials: usize,
        generator: GeneratorKind,
        seed: u64,
    },
}

impl ThresholdSpec {
    pub fn validate(&self) -> Result<()> {
        let alpha_ok = |a: f64| a > 0.0 && a < 1.0;
        match self {
            ThresholdSpec::Fixed { c } if !(*c > 0.0) => Err(Error::InvalidConfig(format!(
                "fixed threshold must be > 0, got {c}"
            ))),
            ThresholdSpec::Formula { sigma, rho, alpha } => {
                if !(*sigma > 0.0) || !(0.0..1.0).contains(rho) || !alpha_ok(*alpha) {
                    Err(Error::DomainError(format!(
                        "formula threshold needs sigma > 0, 0 <= rho < 1, 0 < alpha < 1 \
                         (got sigma={sigma}, rho={rho}, alpha={alpha})"
                    )))
                } else {
                    Ok(())
                }
            }
            ThresholdSpec::MonteCarlo { alpha, trials, .. } => {
                if !alpha_ok(*alpha) {
                    Err(Error::DomainError(format!(
                        "alpha must lie in (0, 1), got {alpha}"
                    )))
                } else if *trials < 100 {
                    Err(Error::InvalidConfig(format!(
                        "Monte Carlo calibration needs at least 100 trials, got {trials}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Where the band half-width is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanGrid {
    /// Every distinct partition reachable in `(0, b_max]`; exact maximum.
    Breakpoints { b_max: Option<f64> },
    /// `points` geometrically spaced values from `top / points` to `top`,
    /// where `top` is `b_max` or the largest observed key.
    Geometric { points: usize, b_max: Option<f64> },
    /// Caller-supplied, strictly increasing positive values.
    Explicit { values: Vec<f64> },
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid::Breakpoints { b_max: None }
    }
}

impl ScanGrid {
    pub fn b_max(&self) -> Option<f64> {
        match self {
            ScanGrid::Breakpoints { b_max } | ScanGrid::Geometric { b_max, .. } => *b_max,
            ScanGrid::Explicit { values } => values.last().copied(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScanGrid::Breakpoints { b_max } => check_b_max(*b_max),
            ScanGrid::Geometric { points, b_max } => {
                if *points == 0 {
                    return Err(Error::EmptyGrid);
                }
                check_b_max(*b_max)
            }
            ScanGrid::Explicit { values } => validate_grid(values),
        }
    }
}

fn check_b_max(b_max: Option<f64>) -> Result<()> {
    match b_max {
        Some(b) if !(b > 0.0) || b.is_nan() => {
            Err(Error::InvalidConfig(format!("b_max must be > 0, got {b}")))
        }
        _ => Ok(()),
    }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !grid.iter().all(|b| b.is_finite() && *b > 0.0) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid);
    }
    Ok(())
}

/// Caller-supplied lower band boundary `phi(b)` for asymmetric ordinary sets.
#[derive(Clone)]
pub struct BandFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl BandFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, b: f64) -> f64 {
        (self.0)(b)
    }
}

impl fmt::Debug for BandFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BandFn(..)")
    }
}

#[derive(Clone, Debug, Default)]
pub enum Variant {
    #[default]
    Symmetric,
    /// Ordinary iff `-phi(b) <= x - theta <= b`.
    Asymmetric(BandFn),
    /// Squared deviations split by `theta (1 - phi(b)) <= y <= theta (1 + b)`.
    VarianceContamination,
}

#[derive(Clone, Debug)]
pub struct DetectionConfig {
    pub threshold: ThresholdSpec,
    pub grid: ScanGrid,
    pub variant: Variant,
    pub n_min: usize,
}

impl DetectionConfig {
    pub fn new(threshold: ThresholdSpec) -> Self {
        Self {
            threshold,
            grid: ScanGrid::default(),
            variant: Variant::Symmetric,
            n_min: DEFAULT_N_MIN,
        }
    }

    pub fn with_grid(mut self, grid: ScanGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_n_min(mut self, n_min: usize) -> Self {
        self.n_min = n_min;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Homogeneous,
    Switches,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    #[serde(rename = "J")]
    pub j: f64,
    pub b_star: f64,
    /// Threshold `C` the statistic was compared against.
    pub threshold: f64,
    /// Reference point the band was centred on (one entry per dimension).
    pub center: Vec<f64>,
    pub decision: Decision,
    pub epsilon_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_hat: Option<f64>,
    /// Vector shift estimate for multivariate samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_hat: Option<Vec<f64>>,
    pub partition_at_b_star: BandPartition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl DetectionReport {
    /// Checks the internal consistency every report must satisfy.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let rejects = self.j > self.threshold;
        if rejects != (self.decision == Decision::Switches) {
            return Err(format!(
                "decision {:?} disagrees with J={} vs C={}",
                self.decision, self.j, self.threshold
            ));
        }
        let p = &self.partition_at_b_star;
        if !p.is_partition_of(p.n()) {
            return Err("partition is not exhaustive and exclusive".into());
        }
        match (self.decision, self.epsilon_hat) {
            (Decision::Homogeneous, Some(_)) => {
                Err("homogeneous report carries an epsilon estimate".into())
            }
            (Decision::Switches, None) if p.n2() > 0 => {
                Err("rejecting report lacks an epsilon estimate".into())
            }
            (Decision::Switches, Some(eps)) => {
                let expected = p.n2() as f64 / p.n() as f64;
                if eps != expected || !(0.0..=1.0).contains(&eps) {
                    Err(format!("epsilon_hat {eps} differs from n2/N = {expected}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn rejects(&self) -> bool {
        self.decision == Decision::Switches
    }
}
