//! Binary mixture detection: symmetric bands, caller-supplied asymmetric
//! bands, and the Gaussian variance-contamination procedure.

use serde::{Deserialize, Serialize};

use crate::calibration::resolve_threshold;
use crate::error::{Error, Result};
use crate::sample::{
    validate_grid, BandFn, BandPartition, Decision, DetectionConfig, DetectionReport, Sample,
    ScanGrid, Variant,
};
use crate::split::{
    geometric_grid, psi, sample_mean, Boundary, KeyedScan, RawScan, DEFAULT_GRID_POINTS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Nonparametric,
    ConsistentSystem,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureEstimate {
    pub epsilon_hat: f64,
    pub h_hat: f64,
    pub method: EstimateMethod,
}

/// Resolves the configured threshold for this sample size and runs the
/// detector selected by `cfg.variant`.
pub fn detect(s: &Sample, cfg: &DetectionConfig) -> Result<DetectionReport> {
    let c = resolve_threshold(&cfg.threshold, s.len())?;
    match &cfg.variant {
        Variant::Symmetric => detect_symmetric(s, cfg, c),
        Variant::Asymmetric(phi) => detect_asymmetric(s, cfg, phi, c),
        Variant::VarianceContamination => variance_contamination_detect(s, cfg, c),
    }
}

fn check_threshold(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "threshold must be > 0, got {c}"
        )));
    }
    Ok(())
}

fn report(
    raw: &RawScan,
    c: f64,
    center: f64,
    partition: BandPartition,
    n: usize,
) -> DetectionReport {
    let decision = if raw.j > c {
        Decision::Switches
    } else {
        Decision::Homogeneous
    };
    let mut diagnostics = Vec::new();
    let epsilon_hat = match decision {
        Decision::Switches if partition.n2() == 0 => {
            diagnostics.push("degenerate epsilon: no abnormal observations at b*".to_string());
            None
        }
        Decision::Switches => Some(partition.n2() as f64 / n as f64),
        Decision::Homogeneous => None,
    };
    DetectionReport {
        j: raw.j,
        b_star: raw.b_star(),
        threshold: c,
        center: vec![center],
        decision,
        epsilon_hat,
        h_hat: None,
        a_hat: None,
        partition_at_b_star: partition,
        diagnostics,
    }
}

/// Symmetric band detector with a resolved threshold `c`.
pub fn detect_symmetric(s: &Sample, cfg: &DetectionConfig, c: f64) -> Result<DetectionReport> {
    check_threshold(c)?;
    cfg.grid.validate()?;
    s.require_min(cfg.n_min)?;
    let theta = sample_mean(s);
    let keyed = KeyedScan::symmetric(s, theta);
    let raw = keyed.scan(&keyed.grid_for(&cfg.grid), s.len() as f64);
    let partition = keyed.partition(raw.b_star());
    let mut r = report(&raw, c, theta, partition, s.len());
    // h* = theta / eps*, so eps* h* reproduces the sample mean
    r.h_hat = r.epsilon_hat.map(|e| theta / e);
    Ok(r)
}

/// Solves `eps * h = theta` together with the first-order band condition
/// `(1 - eps) [f0(theta + b) - f0(theta - b)] = eps [f0(theta - b - h) - f0(theta + b - h)]`
/// for `eps` in `(1e-6, 0.5]`, returning the smallest root.
pub fn consistent_estimates(
    s: &Sample,
    b_star: f64,
    f0: impl Fn(f64) -> f64,
) -> Result<MixtureEstimate> {
    if !(b_star > 0.0) {
        return Err(Error::DomainError(format!("b* must be > 0, got {b_star}")));
    }
    let theta = sample_mean(s);
    let denom = f0(theta + b_star) - f0(theta - b_star);
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let g = |e: f64| {
        let h = theta / e;
        (1.0 - e) * denom - e * (f0(theta - b_star - h) - f0(theta + b_star - h))
    };
    const LO: f64 = 1e-6;
    const HI: f64 = 0.5;
    const STEPS: usize = 64;
    let ratio = (HI / LO).powf(1.0 / STEPS as f64);
    let mut a = LO;
    let mut ga = g(a);
    for i in 1..=STEPS {
        let b = if i == STEPS {
            HI
        } else {
            LO * ratio.powi(i as i32)
        };
        let gb = g(b);
        if ga == 0.0 || ga.signum() != gb.signum() {
            let eps = if ga == 0.0 {
                a
            } else {
                bisect_abs(&g, a, b, 1e-12)
            };
            return Ok(MixtureEstimate {
                epsilon_hat: eps,
                h_hat: theta / eps,
                method: EstimateMethod::ConsistentSystem,
            });
        }
        a = b;
        ga = gb;
    }
    Err(Error::NoRoot(format!(
        "no sign change of the estimating equation for eps in ({LO}, {HI}]"
    )))
}

fn bisect_abs(g: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    crate::numeric::bisect(g, lo, hi, tol).expect("bracket has a sign change")
}

/// Ordinary iff `-phi(b) <= y_i <= b` for the already-centred values `y`.
pub fn asymmetric_partition(y: &Sample, b: f64, phi: &BandFn) -> Result<BandPartition> {
    let lower = phi.eval(b);
    if !(lower >= 0.0) {
        return Err(Error::NegativePhi { b, value: lower });
    }
    let (ordinary, abnormal) = (0..y.len()).partition(|&i| (-lower..=b).contains(&y.values()[i]));
    Ok(BandPartition {
        b,
        ordinary,
        abnormal,
    })
}

/// Scans an asymmetric band by evaluating every grid point directly.
/// Breakpoint grids use the positive centred values as candidates.
pub fn detect_asymmetric(
    s: &Sample,
    cfg: &DetectionConfig,
    phi: &BandFn,
    c: f64,
) -> Result<DetectionReport> {
    check_threshold(c)?;
    cfg.grid.validate()?;
    s.require_min(cfg.n_min)?;
    let theta = sample_mean(s);
    let y = Sample::new(s.values().iter().map(|x| x - theta).collect())?;
    let abs: Vec<f64> = y.values().iter().map(|v| v.abs()).collect();
    let grid = match &cfg.grid {
        ScanGrid::Breakpoints { b_max } => {
            let mut g: Vec<f64> = y
                .values()
                .iter()
                .copied()
                .filter(|&v| v > 0.0 && b_max.is_none_or(|m| v <= m))
                .collect();
            g.sort_by(f64::total_cmp);
            g.dedup();
            if g.is_empty() {
                g = geometric_grid(&abs, DEFAULT_GRID_POINTS, *b_max);
            }
            g
        }
        ScanGrid::Geometric { points, b_max } => geometric_grid(&abs, *points, *b_max),
        ScanGrid::Explicit { values } => values.clone(),
    };
    validate_grid(&grid)?;
    let mut psi_values = Vec::with_capacity(grid.len());
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, &b) in grid.iter().enumerate() {
        let p = asymmetric_partition(&y, b, phi)?;
        let v = psi(s, &p);
        if v.abs() > best.0 {
            best = (v.abs(), i);
        }
        psi_values.push(v);
    }
    let raw = RawScan {
        grid,
        dim: 1,
        psi: psi_values,
        j: best.0,
        arg: best.1,
    };
    let partition = asymmetric_partition(&y, raw.b_star(), phi)?;
    Ok(report(&raw, c, theta, partition, s.len()))
}

/// `phi(b) = 1 - b / (e^b - 1)`, the lower band boundary for squared
/// Gaussian deviations. Increases from 0 (as `b -> 0+`) towards 1.
pub fn phi_variance(b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let em1 = b.exp_m1();
    if em1.is_infinite() {
        return 1.0;
    }
    1.0 - b / em1
}

/// Inverse of [`phi_variance`] on `(0, 1)`; `+inf` for `t >= 1`.
pub fn phi_variance_inverse(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return f64::INFINITY;
    }
    let mut hi = 1.0;
    while phi_variance(hi) < t {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi_variance(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Detects a variance-contaminated component. With `y_i = (x_i - mean)^2`
/// and `theta = mean(y)`, observation `i` is ordinary at `b` iff
/// `theta (1 - phi(b)) <= y_i <= theta (1 + b)`.
pub fn variance_contamination_detect(
    s: &Sample,
    cfg: &DetectionConfig,
    c: f64,
) -> Result<DetectionReport> {
    check_threshold(c)?;
    cfg.grid.validate()?;
    s.require_min(cfg.n_min)?;
    let mu = sample_mean(s);
    let y: Vec<f64> = s.values().iter().map(|x| (x - mu) * (x - mu)).collect();
    let y = Sample::new(y)?;
    let theta = sample_mean(&y);
    if theta == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let keys: Vec<f64> = y
        .values()
        .iter()
        .map(|&v| {
            let r = v / theta;
            let approx = if r >= 1.0 {
                r - 1.0
            } else {
                phi_variance_inverse(1.0 - r)
            };
            snap_key(v, theta, approx)
        })
        .collect();
    let keyed = KeyedScan::new(y.values(), 1, &keys, Boundary::Inclusive);
    let raw = keyed.scan(&keyed.grid_for(&cfg.grid), y.len() as f64);
    let partition = keyed.partition(raw.b_star());
    let mut r = report(&raw, c, theta, partition, s.len());
    r.diagnostics.push(format!("location estimate {mu}"));
    Ok(r)
}

fn in_variance_band(y: f64, theta: f64, b: f64) -> bool {
    theta * (1.0 - phi_variance(b)) <= y && y <= theta * (1.0 + b)
}

/// Moves `approx` to the smallest float at which `y` enters the band, so the
/// scan and the interval rule agree at every candidate half-width.
fn snap_key(y: f64, theta: f64, approx: f64) -> f64 {
    if !approx.is_finite() {
        return approx;
    }
    let mut k = approx;
    for _ in 0..256 {
        if in_variance_band(y, theta, k) {
            break;
        }
        k = k.next_up();
    }
    if !in_variance_band(y, theta, k) {
        return approx;
    }
    for _ in 0..256 {
        let down = k.next_down();
        if down < 0.0 || !in_variance_band(y, theta, down) {
            break;
        }
        k = down;
    }
    k
}

/// Partition of a sample under the variance-contamination rule at `b`,
/// evaluated directly from the interval definition.
pub fn variance_partition(s: &Sample, b: f64) -> BandPartition {
    let mu = sample_mean(s);
    let y: Vec<f64> = s.values().iter().map(|x| (x - mu) * (x - mu)).collect();
    let theta = crate::numeric::dd_sum(y.iter().copied()).div_f64(y.len() as f64);
    let (ordinary, abnormal) = (0..y.len()).partition(|&i| in_variance_band(y[i], theta, b));
    BandPartition {
        b,
        ordinary,
        abnormal,
    }
}
