//! Generator, threshold and plan descriptions read from key/value files.

use std::path::Path;

use regime_split::calibration::CalibrationResult;
use regime_split::generators::{Design, GeneratorKind};
use regime_split::harness::{DetectorKind, ExperimentPlan, PlanRow};
use regime_split::regression::CoefficientTrack;
use regime_split::ScanGrid;

use crate::error::CliError;
use crate::kv::{Document, Section};

/// Reads the generator parameters from `s`, with the kind under `kind_key`.
pub fn generator(s: &Section, kind_key: &str) -> Result<GeneratorKind, CliError> {
    let kind = match s.require(kind_key)? {
        "shift_mixture" => GeneratorKind::ShiftMixture {
            epsilon: s.parse_or("epsilon", 0.0)?,
            h: s.parse_or("h", 0.0)?,
            sigma: s.parse_or("sigma", 1.0)?,
        },
        "variance_mixture" => GeneratorKind::VarianceMixture {
            epsilon: s.parse_or("epsilon", 0.0)?,
            mu: s.parse_or("mu", 0.0)?,
            sigma: s.parse_or("sigma", 1.0)?,
            lambda: s.parse_or("lambda", 1.0)?,
        },
        "multiclass" => GeneratorKind::Multiclass {
            epsilons: optional_list(s, "epsilons")?,
            shifts: s.list("shifts")?,
            sigma: s.parse_or("sigma", 1.0)?,
        },
        "ar1" => GeneratorKind::Ar1 {
            rho: s.parse_or("rho", 0.0)?,
            sigma: s.parse_or("sigma", 1.0)?,
        },
        "mv_gaussian_mixture" => GeneratorKind::MvGaussianMixture {
            epsilons: optional_list(s, "epsilons")?,
            shifts: s.matrix("shifts")?,
            covariance: s.matrix("covariance")?,
        },
        "switching_regression" => GeneratorKind::SwitchingRegression {
            design: match s.get("design").unwrap_or("trend") {
                "trend" => Design::Trend,
                "gaussian" => Design::Gaussian {
                    columns: s.parse_or("columns", 1)?,
                },
                other => return Err(CliError::Usage(format!("unknown design '{other}'"))),
            },
            beta0: s.list("beta0")?,
            beta1: s.list("beta1")?,
            epsilon: s.parse_or("epsilon", 0.0)?,
            noise_sigma: s.parse_or("noise_sigma", 1.0)?,
        },
        other => return Err(CliError::Usage(format!("unknown generator kind '{other}'"))),
    };
    kind.validate()
        .map_err(|e| CliError::Usage(format!("[{}]: {e}", s.name)))?;
    Ok(kind)
}

fn optional_list(s: &Section, key: &str) -> Result<Vec<f64>, CliError> {
    if s.get(key).is_some_and(|v| !v.trim().is_empty()) {
        s.list(key)
    } else {
        Ok(Vec::new())
    }
}

/// `[generator]` section with `kind`, `n` and an optional `seed`.
pub struct ModelSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: Option<u64>,
    pub mode: Mode,
    pub track: CoefficientTrack,
}

pub fn model(doc: &Document) -> Result<ModelSpec, CliError> {
    let g = doc.require_section("generator")?;
    let kind = generator(g, "kind")?;
    let n = g.parse_required("n")?;
    if n == 0 {
        return Err(CliError::Usage("[generator] n must be >= 1".into()));
    }
    let det = doc.section("detector");
    let mode = match det.and_then(|d| d.get("mode")) {
        Some(m) => m.parse()?,
        None => Mode::default_for(&kind),
    };
    let track = match det.and_then(|d| d.get("track")) {
        Some(t) => parse_track(t)?,
        None => CoefficientTrack::default(),
    };
    Ok(ModelSpec {
        kind,
        n,
        seed: g.parse("seed")?,
        mode,
        track,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Binary,
    Variance,
    Multiclass,
    Multivariate,
    MultivariateMulticlass,
    Regression,
}

impl Mode {
    fn default_for(kind: &GeneratorKind) -> Mode {
        match kind {
            GeneratorKind::VarianceMixture { .. } => Mode::Variance,
            GeneratorKind::MvGaussianMixture { .. } => Mode::Multivariate,
            GeneratorKind::SwitchingRegression { .. } => Mode::Regression,
            _ => Mode::Binary,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        <Mode as clap::ValueEnum>::from_str(s, true)
            .map_err(|_| CliError::Usage(format!("unknown mode '{s}'")))
    }
}

pub fn parse_track(s: &str) -> Result<CoefficientTrack, CliError> {
    match s.replace('-', "_").as_str() {
        "minimum_norm" => Ok(CoefficientTrack::MinimumNorm),
        "influence_sum" => Ok(CoefficientTrack::InfluenceSum),
        "leverage_scaled" => Ok(CoefficientTrack::LeverageScaled),
        _ => Err(CliError::Usage(format!("unknown coefficient track '{s}'"))),
    }
}

/// Threshold argument of `detect`.
#[derive(Clone, Debug, PartialEq)]
pub enum ThresholdArg {
    Fixed(f64),
    Formula { sigma: f64, rho: f64, alpha: f64 },
    Calibrated(CalibrationResult),
}

pub fn threshold(arg: &str) -> Result<ThresholdArg, CliError> {
    let (kind, rest) = arg
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("threshold '{arg}' must look like kind:value")))?;
    let bad = || CliError::Usage(format!("cannot parse threshold '{arg}'"));
    match kind {
        "fixed" => {
            let c: f64 = rest.trim().parse().map_err(|_| bad())?;
            if !(c > 0.0) || !c.is_finite() {
                return Err(CliError::Usage(format!(
                    "fixed threshold must be > 0, got {c}"
                )));
            }
            Ok(ThresholdArg::Fixed(c))
        }
        "formula" => match crate::kv::parse_list(rest).map_err(|_| bad())?[..] {
            [sigma, rho, alpha] => {
                regime_split::ThresholdSpec::Formula { sigma, rho, alpha }
                    .validate()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(ThresholdArg::Formula { sigma, rho, alpha })
            }
            _ => Err(bad()),
        },
        "mc" => {
            let path = Path::new(rest);
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let r: CalibrationResult = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            if !(r.c > 0.0) {
                return Err(CliError::Usage(format!(
                    "{}: C must be > 0",
                    path.display()
                )));
            }
            Ok(ThresholdArg::Calibrated(r))
        }
        _ => Err(bad()),
    }
}

fn detector(s: &Section) -> Result<DetectorKind, CliError> {
    let band = || s.parse_required::<f64>("band");
    let max_classes = || s.parse_or("max_classes", regime_split::multiclass::DEFAULT_MAX_CLASSES);
    Ok(match s.require("detector")? {
        "quantile" => DetectorKind::Quantile {
            alpha: s.parse_or("alpha", 0.95)?,
        },
        "variance_quantile" => DetectorKind::VarianceQuantile {
            alpha: s.parse_or("alpha", 0.95)?,
        },
        "binary" => DetectorKind::Binary,
        "variance" => DetectorKind::Variance,
        "multivariate" | "multivariate_binary" => DetectorKind::MultivariateBinary,
        "multiclass" => DetectorKind::Multiclass {
            band: band()?,
            max_classes: max_classes()?,
            true_k: s.parse_required("true_k")?,
        },
        "multivariate_multiclass" => DetectorKind::MultivariateMulticlass {
            band: band()?,
            max_classes: max_classes()?,
            true_k: s.parse_required("true_k")?,
        },
        "regression" => DetectorKind::Regression {
            track: s
                .get("track")
                .map(parse_track)
                .transpose()?
                .unwrap_or_default(),
            coefficient: match s.parse::<usize>("coefficient")? {
                Some(0) => return Err(CliError::Usage("coefficient is 1-based".into())),
                Some(j) => Some(j - 1),
                None => None,
            },
        },
        other => return Err(CliError::Usage(format!("unknown detector '{other}'"))),
    })
}

/// Plan file: `[plan]` with `name`, `replications`, `seed`, optional
/// `b_max`; then one `[row]` section per scenario with `label`, `n` (a list),
/// `detector`, `threshold`, and `generator` plus its parameters.
pub fn plan(doc: &Document) -> Result<ExperimentPlan, CliError> {
    let head = doc.require_section("plan")?;
    let mut rows = Vec::new();
    for s in doc.sections.iter().filter(|s| s.name == "row") {
        let generator = generator(s, "generator")?;
        let detector = detector(s)?;
        let threshold = match s.get("threshold") {
            None => regime_split::ThresholdSpec::Fixed { c: 1.0 },
            Some(t) => match threshold(t)? {
                ThresholdArg::Fixed(c) => regime_split::ThresholdSpec::Fixed { c },
                ThresholdArg::Formula { sigma, rho, alpha } => {
                    regime_split::ThresholdSpec::Formula { sigma, rho, alpha }
                }
                ThresholdArg::Calibrated(r) => regime_split::ThresholdSpec::Fixed { c: r.c },
            },
        };
        let label = s.get("label").unwrap_or("row").to_string();
        for n in s.list("n")? {
            if n < 1.0 || n.fract() != 0.0 {
                return Err(CliError::Usage(format!(
                    "[row] n = {n} is not a positive integer"
                )));
            }
            rows.push(PlanRow {
                label: label.clone(),
                n: n as usize,
                generator: generator.clone(),
                threshold: threshold.clone(),
                detector: detector.clone(),
            });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Usage("plan has no [row] sections".into()));
    }
    Ok(ExperimentPlan {
        name: head.get("name").unwrap_or("plan").to_string(),
        rows,
        replications: head.parse_or("replications", regime_split::harness::DEFAULT_REPLICATIONS)?,
        seed: head.parse_or("seed", regime_split::harness::PRESET_SEED)?,
        grid: ScanGrid::Breakpoints {
            b_max: head.parse("b_max")?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_forms() {
        assert_eq!(threshold("fixed:0.5").unwrap(), ThresholdArg::Fixed(0.5));
        assert_eq!(
            threshold("formula:1,0,0.95").unwrap(),
            ThresholdArg::Formula {
                sigma: 1.0,
                rho: 0.0,
                alpha: 0.95
            }
        );
        assert!(threshold("formula:1,1,0.95").is_err());
        assert!(threshold("fixed:-1").is_err());
        assert!(threshold("nonsense").is_err());
    }

    #[test]
    fn plan_rows_expand_over_n() {
        let doc = Document::parse(
            "[plan]\nname = t\nreplications = 5\nseed = 9\n\
             [row]\nlabel = a\nn = 100, 200\ndetector = binary\nthreshold = fixed:0.1\n\
             generator = shift_mixture\nepsilon = 0.1\nh = 2\n",
        )
        .unwrap();
        let p = plan(&doc).unwrap();
        assert_eq!(p.rows.len(), 2);
        assert_eq!(p.rows[1].n, 200);
        assert_eq!(p.replications, 5);
    }

    #[test]
    fn mv_generator_from_matrices() {
        let doc = Document::parse(
            "[generator]\nkind = mv_gaussian_mixture\nn = 10\nepsilons = 0.3, 0.15\n\
             shifts = 0 0; 1 2; 2 3\ncovariance = 0.745 -0.07; -0.07 0.51\n",
        )
        .unwrap();
        let m = model(&doc).unwrap();
        assert_eq!(m.mode, Mode::Multivariate);
    }
}
