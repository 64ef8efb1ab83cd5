//! Vector-valued observations: the binary detector with vector sums and
//! Euclidean distances, and multiclass detection on the vector norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiclass::{detect_multiclass, MulticlassReport};
use crate::numeric::dd_sum;
use crate::sample::{Decision, DetectionConfig, DetectionReport, ScanGrid, VectorSample};
use crate::split::{Boundary, KeyedScan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorScanResult {
    pub grid: Vec<f64>,
    pub psi_vectors: Vec<Vec<f64>>,
    #[serde(rename = "J")]
    pub j: f64,
    pub b_star: f64,
}

/// Component-wise mean.
pub fn vector_mean(vs: &VectorSample) -> Vec<f64> {
    let n = vs.len() as f64;
    (0..vs.dim())
        .map(|d| dd_sum(vs.rows().map(|r| r[d])).div_f64(n))
        .collect()
}

fn keyed(vs: &VectorSample, center: &[f64]) -> KeyedScan {
    let keys: Vec<f64> = vs
        .rows()
        .map(|r| {
            let diff: Vec<f64> = r.iter().zip(center).map(|(a, b)| a - b).collect();
            crate::sample::euclidean_norm(&diff)
        })
        .collect();
    KeyedScan::new(vs.flat(), vs.dim(), &keys, Boundary::Strict)
}

/// Vector statistic on `grid`, with observations ordinary iff
/// `|X_i - center| < b`.
pub fn scan_vectors(
    vs: &VectorSample,
    center: &[f64],
    grid: &ScanGrid,
) -> Result<VectorScanResult> {
    if center.len() != vs.dim() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: vs.dim(),
            found: center.len(),
        });
    }
    grid.validate()?;
    let k = keyed(vs, center);
    let raw = k.scan(&k.grid_for(grid), vs.len() as f64);
    let b_star = raw.b_star();
    Ok(VectorScanResult {
        psi_vectors: (0..raw.grid.len())
            .map(|i| raw.psi_at(i).to_vec())
            .collect(),
        grid: raw.grid,
        j: raw.j,
        b_star,
    })
}

/// Binary detector for vectors; on rejection `a_hat = theta / eps_hat`.
pub fn detect_multivariate_binary(
    vs: &VectorSample,
    cfg: &DetectionConfig,
    c: f64,
) -> Result<DetectionReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be > 0, got {c}"
        )));
    }
    cfg.grid.validate()?;
    if vs.len() < cfg.n_min {
        return Err(Error::SampleTooSmall {
            n: vs.len(),
            min: cfg.n_min,
        });
    }
    let theta = vector_mean(vs);
    let k = keyed(vs, &theta);
    let raw = k.scan(&k.grid_for(&cfg.grid), vs.len() as f64);
    let partition = k.partition(raw.b_star());
    let rejects = raw.j > c;
    let mut diagnostics = Vec::new();
    let epsilon_hat = match (rejects, partition.n2()) {
        (false, _) => None,
        (true, 0) => {
            diagnostics.push("degenerate epsilon: no abnormal observations at b*".to_string());
            None
        }
        (true, n2) => Some(n2 as f64 / vs.len() as f64),
    };
    let a_hat = epsilon_hat.map(|e| theta.iter().map(|t| t / e).collect());
    Ok(DetectionReport {
        j: raw.j,
        b_star: raw.b_star(),
        threshold: c,
        center: theta,
        decision: if rejects {
            Decision::Switches
        } else {
            Decision::Homogeneous
        },
        epsilon_hat,
        h_hat: None,
        a_hat,
        partition_at_b_star: partition,
        diagnostics,
    })
}

/// Multiclass detection on the Euclidean norms of the vectors.
pub fn detect_multivariate_multiclass(
    vs: &VectorSample,
    cfg: &DetectionConfig,
    c: f64,
    band: f64,
    max_classes: usize,
) -> Result<MulticlassReport> {
    detect_multiclass(&vs.norms(), cfg, c, band, max_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::ThresholdSpec;

    fn cfg() -> DetectionConfig {
        DetectionConfig::new(ThresholdSpec::Fixed { c: 0.05 }).with_n_min(1)
    }

    #[test]
    fn identical_vectors_have_no_switch() {
        let vs = VectorSample::new(vec![vec![1.0, -2.0]; 30]).unwrap();
        let r = detect_multivariate_binary(&vs, &cfg(), 0.05).unwrap();
        assert_eq!(r.j, 0.0);
        assert_eq!(r.decision, Decision::Homogeneous);
        let m = detect_multivariate_multiclass(&vs, &cfg(), 0.05, 1.0, 10).unwrap();
        assert_eq!(m.k_hat, 0);
    }

    #[test]
    fn planted_vector_outliers() {
        let mut rows = vec![vec![0.0, 0.0]; 8];
        rows.extend(vec![vec![3.0, 3.0]; 2]);
        let vs = VectorSample::new(rows).unwrap();
        let r = detect_multivariate_binary(&vs, &cfg(), 0.05).unwrap();
        assert_eq!(r.epsilon_hat, Some(0.2));
        let a = r.a_hat.clone().unwrap();
        assert!((a[0] - 3.0).abs() < 1e-12 && (a[1] - 3.0).abs() < 1e-12);
        r.check_consistency().unwrap();
    }

    #[test]
    fn center_dimension_is_checked() {
        let vs = VectorSample::new(vec![vec![1.0, 2.0]; 3]).unwrap();
        assert!(matches!(
            scan_vectors(&vs, &[0.0], &ScanGrid::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
