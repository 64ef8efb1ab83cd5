//! Monte Carlo replication of detection experiments.
//!
//! A plan is a list of rows (sample size, generator, threshold, detector).
//! Each row becomes one cell of the output table. Replication `r` of row `i`
//! draws from stream `(i << 32) | r` of the plan seed and results are folded
//! in replication order, so tables do not depend on the number of workers.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary;
use crate::calibration::{resolve_threshold_for, Pipeline};
use crate::error::{Error, Result};
use crate::generators::{rng_for, Dataset, Design, GeneratorKind};
use crate::multiclass::detect_multiclass;
use crate::multivariate::{detect_multivariate_binary, detect_multivariate_multiclass};
use crate::regression::{detect_switching_regression_with, CoefficientTrack};
use crate::sample::{DetectionConfig, ScanGrid, ThresholdSpec, Variant};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "REGIME_SPLIT_THREADS";
/// Replications used by presets unless overridden.
pub const DEFAULT_REPLICATIONS: usize = 1000;
/// Seed used by presets unless overridden.
pub const PRESET_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorKind {
    /// Empirical `alpha`-quantile of the symmetric statistic.
    Quantile {
        alpha: f64,
    },
    /// Empirical `alpha`-quantile of the variance-contamination statistic.
    VarianceQuantile {
        alpha: f64,
    },
    Binary,
    Variance,
    MultivariateBinary,
    Multiclass {
        band: f64,
        max_classes: usize,
        true_k: usize,
    },
    MultivariateMulticlass {
        band: f64,
        max_classes: usize,
        true_k: usize,
    },
    /// Decision and estimate from coefficient `coefficient` (0-based), or
    /// from the pooled report when absent.
    Regression {
        track: CoefficientTrack,
        coefficient: Option<usize>,
    },
}

impl DetectorKind {
    fn pipeline(&self, grid: &ScanGrid) -> Pipeline {
        let grid = grid.clone();
        match self {
            DetectorKind::Variance | DetectorKind::VarianceQuantile { .. } => {
                Pipeline::Univariate {
                    variant: Variant::VarianceContamination,
                    grid,
                }
            }
            DetectorKind::MultivariateBinary => Pipeline::Multivariate { grid },
            DetectorKind::Regression { track, .. } => Pipeline::Regression {
                grid,
                track: *track,
            },
            _ => Pipeline::Univariate {
                variant: Variant::Symmetric,
                grid,
            },
        }
    }

    fn quantile_alpha(&self) -> Option<f64> {
        match self {
            DetectorKind::Quantile { alpha } | DetectorKind::VarianceQuantile { alpha } => {
                Some(*alpha)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub label: String,
    pub n: usize,
    pub generator: GeneratorKind,
    /// Ignored by quantile rows.
    pub threshold: ThresholdSpec,
    pub detector: DetectorKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub rows: Vec<PlanRow>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub grid: ScanGrid,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.rows.is_empty() {
            return Err(Error::InvalidConfig("plan has no rows".into()));
        }
        for row in &self.rows {
            if row.n == 0 {
                return Err(Error::InvalidConfig(format!(
                    "row '{}' has N = 0",
                    row.label
                )));
            }
            row.generator.validate()?;
        }
        self.grid.validate()
    }
}

/// One row of results. Frequencies carry binomial standard errors
/// `sqrt(p (1 - p) / R)` over the successful replications.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub label: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub trials: usize,
    pub failures: usize,
    pub reject_rate: Option<f64>,
    pub reject_se: Option<f64>,
    /// Acceptance frequency when the generator has switches.
    pub w2: Option<f64>,
    pub w2_se: Option<f64>,
    /// Rejection frequency when the generator is homogeneous.
    pub type1_rate: Option<f64>,
    pub type1_se: Option<f64>,
    /// Mean estimated switched fraction over rejecting replications.
    pub mean_epsilon_hat: Option<f64>,
    pub k_error_rate: Option<f64>,
    pub k_error_se: Option<f64>,
    /// Empirical quantile of `J` for quantile rows.
    pub quantile: Option<f64>,
    pub quantile_se: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub name: String,
    pub seed: u64,
    pub replications: usize,
    pub cells: Vec<ExperimentCell>,
}

/// Worker count: `workers`, else `REGIME_SPLIT_THREADS`, else all cores.
pub fn worker_count(workers: Option<usize>) -> usize {
    workers
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct Outcome {
    rejects: bool,
    epsilon_hat: Option<f64>,
    j: f64,
    k_wrong: Option<bool>,
}

fn run_trial(row: &PlanRow, data: &Dataset, cfg: &DetectionConfig, c: f64) -> Result<Outcome> {
    let univariate = || match data {
        Dataset::Univariate(s) => Ok(s),
        _ => Err(Error::InvalidConfig(format!(
            "row '{}' needs univariate data",
            row.label
        ))),
    };
    let vector = || match data {
        Dataset::Vector(v) => Ok(v),
        _ => Err(Error::InvalidConfig(format!(
            "row '{}' needs vector data",
            row.label
        ))),
    };
    let simple = |r: crate::sample::DetectionReport| Outcome {
        rejects: r.rejects(),
        epsilon_hat: r.epsilon_hat,
        j: r.j,
        k_wrong: None,
    };
    let multi = |r: crate::multiclass::MulticlassReport, true_k: usize| Outcome {
        rejects: r.k_hat > 0,
        epsilon_hat: r.epsilon_total_hat,
        j: r.peel_trace.first().map_or(0.0, |s| s.j),
        k_wrong: Some(r.k_hat != true_k),
    };
    Ok(match &row.detector {
        DetectorKind::Quantile { .. } | DetectorKind::Binary => {
            simple(binary::detect_symmetric(univariate()?, cfg, c)?)
        }
        DetectorKind::VarianceQuantile { .. } | DetectorKind::Variance => simple(
            binary::variance_contamination_detect(univariate()?, cfg, c)?,
        ),
        DetectorKind::MultivariateBinary => simple(detect_multivariate_binary(vector()?, cfg, c)?),
        DetectorKind::Multiclass {
            band,
            max_classes,
            true_k,
        } => multi(
            detect_multiclass(univariate()?, cfg, c, *band, *max_classes)?,
            *true_k,
        ),
        DetectorKind::MultivariateMulticlass {
            band,
            max_classes,
            true_k,
        } => multi(
            detect_multivariate_multiclass(vector()?, cfg, c, *band, *max_classes)?,
            *true_k,
        ),
        DetectorKind::Regression { track, coefficient } => {
            let Dataset::Regression(d) = data else {
                return Err(Error::InvalidConfig(format!(
                    "row '{}' needs regression data",
                    row.label
                )));
            };
            let r = detect_switching_regression_with(d, cfg, c, *track)?;
            match coefficient {
                Some(j) => {
                    let rep = r.per_coefficient.get(*j).ok_or_else(|| {
                        Error::InvalidConfig(format!("coefficient {j} out of range"))
                    })?;
                    simple(rep.clone())
                }
                None => Outcome {
                    rejects: r.any_switch,
                    epsilon_hat: r.epsilon_hat,
                    j: r.per_coefficient.iter().map(|p| p.j).fold(0.0, f64::max),
                    k_wrong: None,
                },
            }
        }
    })
}

fn rate(hits: usize, total: usize) -> (Option<f64>, Option<f64>) {
    if total == 0 {
        return (None, None);
    }
    let p = hits as f64 / total as f64;
    (Some(p), Some((p * (1.0 - p) / total as f64).sqrt()))
}

fn run_cell(plan: &ExperimentPlan, index: usize, row: &PlanRow) -> ExperimentCell {
    let mut cell = ExperimentCell {
        label: row.label.clone(),
        n: row.n,
        ..Default::default()
    };
    let quantile = row.detector.quantile_alpha();
    let c = match quantile {
        Some(_) => Ok(f64::MAX),
        None => resolve_threshold_for(&row.threshold, row.n, &row.detector.pipeline(&plan.grid)),
    };
    let c = match c {
        Ok(c) => c,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    if quantile.is_none() {
        cell.c = Some(c);
    }
    let cfg = DetectionConfig::new(row.threshold.clone())
        .with_grid(plan.grid.clone())
        .with_n_min(1);
    let outcomes: Vec<Result<Outcome>> = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let stream = ((index as u64) << 32) | r as u64;
            let g = row
                .generator
                .sample_with(row.n, &mut rng_for(plan.seed, stream))?;
            run_trial(row, &g.data, &cfg, c)
        })
        .collect();
    let mut ok = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(o) => ok.push(o),
            Err(e) => {
                cell.failures += 1;
                cell.error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    cell.trials = ok.len();
    let total = ok.len();
    if let Some(alpha) = quantile {
        let mut js: Vec<f64> = ok.iter().map(|o| o.j).collect();
        js.sort_by(f64::total_cmp);
        if !js.is_empty() {
            let order = |p: f64| js[((p * total as f64).ceil() as usize).clamp(1, total) - 1];
            let spread = (alpha * (1.0 - alpha) / total as f64).sqrt();
            cell.quantile = Some(order(alpha));
            cell.quantile_se = Some(0.5 * (order(alpha + spread) - order(alpha - spread)));
        }
        return cell;
    }
    let rejects = ok.iter().filter(|o| o.rejects).count();
    (cell.reject_rate, cell.reject_se) = rate(rejects, total);
    if row.generator.is_homogeneous() {
        (cell.type1_rate, cell.type1_se) = (cell.reject_rate, cell.reject_se);
    } else {
        (cell.w2, cell.w2_se) = rate(total - rejects, total);
    }
    let eps: Vec<f64> = ok
        .iter()
        .filter(|o| o.rejects)
        .filter_map(|o| o.epsilon_hat)
        .collect();
    if !eps.is_empty() {
        cell.mean_epsilon_hat = Some(eps.iter().sum::<f64>() / eps.len() as f64);
    }
    if ok.iter().any(|o| o.k_wrong.is_some()) {
        let wrong = ok.iter().filter(|o| o.k_wrong == Some(true)).count();
        (cell.k_error_rate, cell.k_error_se) = rate(wrong, total);
    }
    cell
}

/// Runs `f` on a dedicated pool of [`worker_count`] threads.
pub fn install<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(workers))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every row of `plan` on `workers` threads (see [`worker_count`]).
pub fn run_plan(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentTable> {
    plan.validate()?;
    let cells = install(workers, || {
        plan.rows
            .iter()
            .enumerate()
            .map(|(i, row)| run_cell(plan, i, row))
            .collect()
    })?;
    Ok(ExperimentTable {
        name: plan.name.clone(),
        seed: plan.seed,
        replications: plan.replications,
        cells,
    })
}

pub const CSV_HEADER: &str = "label,N,C,trials,failures,reject_rate,reject_se,w2,w2_se,\
    type1_rate,type1_se,mean_epsilon_hat,k_error_rate,k_error_se,quantile,quantile_se,error";

impl ExperimentTable {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let error = c.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.label.replace(',', ";"),
                c.n,
                opt(c.c),
                c.trials,
                c.failures,
                opt(c.reject_rate),
                opt(c.reject_se),
                opt(c.w2),
                opt(c.w2_se),
                opt(c.type1_rate),
                opt(c.type1_se),
                opt(c.mean_epsilon_hat),
                opt(c.k_error_rate),
                opt(c.k_error_se),
                opt(c.quantile),
                opt(c.quantile_se),
                error
            );
        }
        out
    }

    pub fn cell(&self, label: &str, n: usize) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.label == label && c.n == n)
    }
}

const SIZES: [usize; 9] = [50, 100, 300, 500, 800, 1000, 1200, 1500, 2000];
const CLASS_SIZES: [usize; 7] = [100, 200, 300, 500, 700, 1000, 1500];

fn fixed(c: f64) -> ThresholdSpec {
    ThresholdSpec::Fixed { c }
}

fn formula95() -> ThresholdSpec {
    ThresholdSpec::Formula {
        sigma: 1.0,
        rho: 0.0,
        alpha: 0.95,
    }
}

fn quantile_rows(generator: GeneratorKind, variance: bool) -> Vec<PlanRow> {
    let mut rows = Vec::new();
    for alpha in [0.95, 0.99] {
        for &n in &SIZES {
            rows.push(PlanRow {
                label: format!("alpha={alpha}"),
                n,
                generator: generator.clone(),
                threshold: fixed(1.0),
                detector: if variance {
                    DetectorKind::VarianceQuantile { alpha }
                } else {
                    DetectorKind::Quantile { alpha }
                },
            });
        }
    }
    rows
}

fn detection_rows(
    label: &str,
    generator: GeneratorKind,
    detector: DetectorKind,
    cells: &[(usize, ThresholdSpec)],
) -> Vec<PlanRow> {
    cells
        .iter()
        .map(|(n, t)| PlanRow {
            label: label.to_string(),
            n: *n,
            generator: generator.clone(),
            threshold: t.clone(),
            detector: detector.clone(),
        })
        .collect()
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 9] = [
    "table1", "table2", "table3", "table4", "table5", "table6", "table7", "table8", "table9",
];

/// Built-in plans with [`DEFAULT_REPLICATIONS`] and [`PRESET_SEED`].
pub fn preset(name: &str) -> Result<ExperimentPlan> {
    let shift = |epsilon, h| GeneratorKind::ShiftMixture {
        epsilon,
        h,
        sigma: 1.0,
    };
    let variance = |epsilon, lambda| GeneratorKind::VarianceMixture {
        epsilon,
        mu: 0.0,
        sigma: 1.0,
        lambda,
    };
    let with_c = |ns: &[usize], cs: &[f64]| -> Vec<(usize, ThresholdSpec)> {
        ns.iter().zip(cs).map(|(&n, &c)| (n, fixed(c))).collect()
    };
    let regression = |beta1: Vec<f64>, epsilon| GeneratorKind::SwitchingRegression {
        design: Design::Trend,
        beta0: vec![1.0, 1.0],
        beta1,
        epsilon,
        noise_sigma: 1.0,
    };
    let reg_detector = DetectorKind::Regression {
        track: CoefficientTrack::default(),
        coefficient: Some(1),
    };
    let reg_cells = with_c(&[300, 500, 800, 1000], &[0.07, 0.05, 0.04, 0.03]);
    let rows = match name {
        "table1" => quantile_rows(shift(0.0, 0.0), false),
        "table2" => {
            let mut rows = detection_rows(
                "h=2",
                shift(0.1, 2.0),
                DetectorKind::Binary,
                &with_c(&[300, 500, 800, 1000], &[0.0710, 0.0534, 0.044, 0.038]),
            );
            rows.extend(detection_rows(
                "h=1.5",
                shift(0.1, 1.5),
                DetectorKind::Binary,
                &with_c(&[800, 1200, 2000, 3000], &[0.044, 0.037, 0.029, 0.022]),
            ));
            rows
        }
        "table3" => quantile_rows(variance(0.0, 1.0), true),
        "table4" => detection_rows(
            "lambda=3",
            variance(0.05, 3.0),
            DetectorKind::Variance,
            &with_c(&[300, 500, 800, 1000], &[0.1570, 0.1419, 0.1252, 0.1244]),
        ),
        "table5" => detection_rows(
            "lambda=5",
            variance(0.01, 5.0),
            DetectorKind::Variance,
            &with_c(
                &[1000, 1200, 1500, 2000, 3000],
                &[0.1244, 0.1146, 0.1107, 0.1075, 0.1019],
            ),
        ),
        "table6" => detection_rows(
            "three-class",
            GeneratorKind::Multiclass {
                epsilons: vec![0.3, 0.15],
                shifts: vec![1.0, 3.0, 7.0],
                sigma: 1.0,
            },
            DetectorKind::Multiclass {
                band: 2.0,
                max_classes: crate::multiclass::DEFAULT_MAX_CLASSES,
                true_k: 2,
            },
            &CLASS_SIZES.map(|n| (n, formula95())),
        ),
        "table7" => detection_rows(
            "three-class-2d",
            GeneratorKind::MvGaussianMixture {
                epsilons: vec![0.3, 0.15],
                shifts: vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 3.0]],
                covariance: vec![vec![0.745, -0.07], vec![-0.07, 0.51]],
            },
            DetectorKind::MultivariateMulticlass {
                // gap between the norms of the two outer class centres
                band: 13f64.sqrt() - 5f64.sqrt(),
                max_classes: crate::multiclass::DEFAULT_MAX_CLASSES,
                true_k: 2,
            },
            &CLASS_SIZES.map(|n| (n, formula95())),
        ),
        "table8" => detection_rows(
            "eps=0.05",
            regression(vec![1.0, 2.0], 0.05),
            reg_detector,
            &reg_cells,
        ),
        "table9" => detection_rows(
            "eps=0.1",
            regression(vec![1.0, 1.5], 0.1),
            reg_detector,
            &reg_cells,
        ),
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(ExperimentPlan {
        name: name.to_string(),
        rows,
        replications: DEFAULT_REPLICATIONS,
        seed: PRESET_SEED,
        grid: ScanGrid::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset() {
        assert_eq!(preset("tableX"), Err(Error::UnknownPreset("tableX".into())));
    }

    #[test]
    fn every_preset_is_valid() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn table6_parameters() {
        let p = preset("table6").unwrap();
        assert_eq!(
            p.rows[0].generator,
            GeneratorKind::Multiclass {
                epsilons: vec![0.3, 0.15],
                shifts: vec![1.0, 3.0, 7.0],
                sigma: 1.0
            }
        );
    }

    #[test]
    fn huge_threshold_never_rejects() {
        let plan = ExperimentPlan {
            name: "null".into(),
            rows: vec![PlanRow {
                label: "null".into(),
                n: 100,
                generator: GeneratorKind::standard_normal(),
                threshold: fixed(1e9),
                detector: DetectorKind::Binary,
            }],
            replications: 50,
            seed: 1,
            grid: ScanGrid::default(),
        };
        let t = run_plan(&plan, Some(2)).unwrap();
        assert_eq!(t.cells[0].type1_rate, Some(0.0));
        assert_eq!(t.cells[0].w2, None);
    }

    #[test]
    fn single_replication_smoke() {
        let mut plan = preset("table2").unwrap();
        plan.rows.truncate(1);
        plan.replications = 1;
        let t = run_plan(&plan, Some(1)).unwrap();
        assert_eq!(t.cells.len(), 1);
        assert_eq!(t.cells[0].trials, 1);
        let w2 = t.cells[0].w2.unwrap();
        assert!(w2 == 0.0 || w2 == 1.0);
    }

    #[test]
    fn failing_cell_does_not_abort_the_table() {
        let plan = ExperimentPlan {
            name: "mixed".into(),
            rows: vec![
                PlanRow {
                    label: "bad".into(),
                    n: 50,
                    generator: GeneratorKind::standard_normal(),
                    threshold: ThresholdSpec::Formula {
                        sigma: 1.0,
                        rho: 1.5,
                        alpha: 0.95,
                    },
                    detector: DetectorKind::Binary,
                },
                PlanRow {
                    label: "good".into(),
                    n: 50,
                    generator: GeneratorKind::standard_normal(),
                    threshold: fixed(0.1),
                    detector: DetectorKind::Binary,
                },
            ],
            replications: 10,
            seed: 3,
            grid: ScanGrid::default(),
        };
        let t = run_plan(&plan, Some(1)).unwrap();
        assert!(t.cells[0].error.is_some());
        assert_eq!(t.cells[1].trials, 10);
    }
}
