//! Recursive detection of several classes by peeling: locate the densest
//! region, split around it, remove the ordinary part, and repeat on the rest
//! until the remainder looks homogeneous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Decision, DetectionConfig, DetectionReport, Sample, ScanGrid};
use crate::split::KeyedScan;

/// Default cap on peeling steps.
pub const DEFAULT_MAX_CLASSES: usize = 10;

/// Midpoint of the fullest of `bins` equal-width bins over `[min, max]`;
/// ties go to the leftmost bin.
pub fn histogram_mode(s: &Sample, bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let x = s.values();
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(lo);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in x {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let best = counts
        .iter()
        .enumerate()
        .fold(
            (0, 0),
            |(bi, bc), (i, &c)| if c > bc { (i, c) } else { (bi, bc) },
        )
        .0;
    Ok(lo + (best as f64 + 0.5) * width)
}

/// Denominator used for the split statistic at each peeling step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeelNormalization {
    /// Square of the original sample size, so one threshold serves every step.
    #[default]
    OriginalSize,
    /// Square of the current working sample size.
    WorkingSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassOptions {
    /// Largest half-width scanned at each step (the minimum class separation).
    pub band: f64,
    pub max_classes: usize,
    pub normalization: PeelNormalization,
    /// Histogram bins; `ceil(sqrt(n))` of the working sample when absent.
    pub bins: Option<usize>,
}

impl MulticlassOptions {
    pub fn new(band: f64) -> Self {
        Self {
            band,
            max_classes: DEFAULT_MAX_CLASSES,
            normalization: PeelNormalization::default(),
            bins: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The last step accepted homogeneity.
    Accepted,
    /// A rejecting split would have peeled nothing or everything.
    NoProgress,
    /// The remainder fell below the minimum sample size.
    Exhausted,
    MaxClassesExceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassReport {
    /// Number of detected switches; classes = `k_hat + 1`.
    pub k_hat: usize,
    /// Share of the original sample peeled at each rejecting step.
    pub class_fractions: Vec<f64>,
    /// Reference point of each rejecting step.
    pub class_centers: Vec<f64>,
    /// Abnormal share of the original sample at the first step when it
    /// rejects: an estimate of the total switched fraction.
    pub epsilon_total_hat: Option<f64>,
    /// Per-step reports; partition indices refer to that step's working sample.
    pub peel_trace: Vec<DetectionReport>,
    /// Class of every original observation: `j` if peeled at step `j`,
    /// `k_hat` for the final remainder.
    pub assignments: Vec<usize>,
    pub stop_reason: StopReason,
}

fn band_grid(grid: &ScanGrid, band: f64) -> ScanGrid {
    let cap = |b: Option<f64>| Some(b.map_or(band, |m| m.min(band)));
    match grid {
        ScanGrid::Breakpoints { b_max } => ScanGrid::Breakpoints { b_max: cap(*b_max) },
        ScanGrid::Geometric { points, b_max } => ScanGrid::Geometric {
            points: *points,
            b_max: cap(*b_max),
        },
        ScanGrid::Explicit { values } => ScanGrid::Explicit {
            values: values.iter().copied().filter(|&b| b <= band).collect(),
        },
    }
}

/// Peels classes with threshold `c` and half-widths restricted to `(0, band]`.
pub fn detect_multiclass(
    s: &Sample,
    cfg: &DetectionConfig,
    c: f64,
    band: f64,
    max_classes: usize,
) -> Result<MulticlassReport> {
    let opts = MulticlassOptions {
        max_classes,
        ..MulticlassOptions::new(band)
    };
    detect_multiclass_with(s, cfg, c, &opts)
}

pub fn detect_multiclass_with(
    s: &Sample,
    cfg: &DetectionConfig,
    c: f64,
    opts: &MulticlassOptions,
) -> Result<MulticlassReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be > 0, got {c}"
        )));
    }
    if !(opts.band > 0.0) || !opts.band.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "band must be > 0, got {}",
            opts.band
        )));
    }
    if opts.max_classes == 0 {
        return Err(Error::InvalidConfig("max_classes must be >= 1".into()));
    }
    s.require_min(cfg.n_min)?;
    let grid = band_grid(&cfg.grid, opts.band);
    grid.validate()?;

    let n0 = s.len();
    let mut working: Vec<usize> = (0..n0).collect();
    let mut assignments = vec![0usize; n0];
    let mut report = MulticlassReport {
        k_hat: 0,
        class_fractions: Vec::new(),
        class_centers: Vec::new(),
        epsilon_total_hat: None,
        peel_trace: Vec::new(),
        assignments: Vec::new(),
        stop_reason: StopReason::Accepted,
    };
    loop {
        if working.len() < cfg.n_min {
            report.stop_reason = StopReason::Exhausted;
            break;
        }
        let sub = s.select(&working)?;
        let n = sub.len();
        let bins = opts
            .bins
            .unwrap_or((n as f64).sqrt().ceil() as usize)
            .max(2);
        let theta = histogram_mode(&sub, bins)?;
        let keyed = KeyedScan::symmetric(&sub, theta);
        let norm = match opts.normalization {
            PeelNormalization::OriginalSize => n0 as f64,
            PeelNormalization::WorkingSize => n as f64,
        };
        let raw = keyed.scan(&keyed.grid_for(&grid), norm);
        let partition = keyed.partition(raw.b_star());
        let rejects = raw.j > c;
        let (n1, n2) = (partition.n1(), partition.n2());
        report.peel_trace.push(DetectionReport {
            j: raw.j,
            b_star: raw.b_star(),
            threshold: c,
            center: vec![theta],
            decision: if rejects {
                Decision::Switches
            } else {
                Decision::Homogeneous
            },
            epsilon_hat: (rejects && n2 > 0).then(|| n2 as f64 / n as f64),
            h_hat: None,
            a_hat: None,
            partition_at_b_star: partition.clone(),
            diagnostics: Vec::new(),
        });
        if !rejects {
            report.stop_reason = StopReason::Accepted;
            break;
        }
        if n2 == 0 || n1 == 0 {
            report.stop_reason = StopReason::NoProgress;
            break;
        }
        if report.k_hat == 0 {
            report.epsilon_total_hat = Some(n2 as f64 / n0 as f64);
        }
        for &i in &partition.ordinary {
            assignments[working[i]] = report.k_hat;
        }
        report.k_hat += 1;
        report.class_fractions.push(n1 as f64 / n0 as f64);
        report.class_centers.push(theta);
        working = partition.abnormal.iter().map(|&i| working[i]).collect();
        if report.k_hat >= opts.max_classes {
            report.stop_reason = StopReason::MaxClassesExceeded;
            break;
        }
    }
    for &i in &working {
        assignments[i] = report.k_hat;
    }
    report.assignments = assignments;
    Ok(report)
}
