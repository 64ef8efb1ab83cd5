//! Seeded synthetic data for every model the detectors are exercised on.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)` and switched to stream `stream` via `set_stream`.
//! Trial `t` of an experiment always uses stream `t`, so results do not depend
//! on how trials are scheduled across threads.
//!
//! Per observation, a mixture label is drawn first from one uniform `u`
//! (class `j` if `u` falls in the `j`-th cumulative fraction slot, class 0
//! otherwise), then the noise term.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::RegressionData;
use crate::sample::{Sample, VectorSample};

/// Burn-in steps discarded before an AR(1) path is recorded.
pub const AR1_BURN_IN: usize = 1000;

/// Deterministic generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Design matrix layout for synthetic regressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// Rows `(1, i)` for `i = 1..=N`.
    Trend,
    /// Intercept followed by `columns` i.i.d. standard normal regressors.
    Gaussian { columns: usize },
}

impl Design {
    pub fn width(&self) -> usize {
        match self {
            Design::Trend => 2,
            Design::Gaussian { columns } => columns + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `(1 - eps) N(0, sigma^2) + eps N(h, sigma^2)`.
    ShiftMixture { epsilon: f64, h: f64, sigma: f64 },
    /// `(1 - eps) N(mu, sigma^2) + eps N(mu, lambda^2)`.
    VarianceMixture {
        epsilon: f64,
        mu: f64,
        sigma: f64,
        lambda: f64,
    },
    /// Class 0 at `shifts[0]` with weight `1 - sum(epsilons)`, class `j` at
    /// `shifts[j]` with weight `epsilons[j - 1]`; noise `N(0, sigma^2)`.
    Multiclass {
        epsilons: Vec<f64>,
        shifts: Vec<f64>,
        sigma: f64,
    },
    /// `x(n) = rho x(n - 1) + sigma xi_n`.
    Ar1 { rho: f64, sigma: f64 },
    /// Multivariate analogue of `Multiclass` with Gaussian noise of the given
    /// covariance.
    MvGaussianMixture {
        epsilons: Vec<f64>,
        shifts: Vec<Vec<f64>>,
        covariance: Vec<Vec<f64>>,
    },
    /// `y_i = x_i' beta_i + u_i`, `beta_i = beta1` with probability `epsilon`
    /// and `beta0` otherwise, `u_i ~ N(0, noise_sigma^2)`.
    SwitchingRegression {
        design: Design,
        beta0: Vec<f64>,
        beta1: Vec<f64>,
        epsilon: f64,
        noise_sigma: f64,
    },
}

impl GeneratorKind {
    /// Standard normal i.i.d. observations.
    pub fn standard_normal() -> Self {
        GeneratorKind::ShiftMixture {
            epsilon: 0.0,
            h: 0.0,
            sigma: 1.0,
        }
    }

    /// True when every observation comes from the base class.
    pub fn is_homogeneous(&self) -> bool {
        match self {
            GeneratorKind::ShiftMixture { epsilon, h, .. } => *epsilon == 0.0 || *h == 0.0,
            GeneratorKind::VarianceMixture {
                epsilon,
                sigma,
                lambda,
                ..
            } => *epsilon == 0.0 || sigma == lambda,
            GeneratorKind::Multiclass { epsilons, .. }
            | GeneratorKind::MvGaussianMixture { epsilons, .. } => {
                epsilons.iter().all(|&e| e == 0.0)
            }
            GeneratorKind::Ar1 { .. } => true,
            GeneratorKind::SwitchingRegression {
                epsilon,
                beta0,
                beta1,
                ..
            } => *epsilon == 0.0 || beta0 == beta1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let sd = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be > 0, got {v}")))
            }
        };
        match self {
            GeneratorKind::ShiftMixture { epsilon, h, sigma } => {
                check_fractions(&[*epsilon])?;
                if !h.is_finite() {
                    return bad(format!("shift must be finite, got {h}"));
                }
                sd("sigma", *sigma)
            }
            GeneratorKind::VarianceMixture {
                epsilon,
                mu,
                sigma,
                lambda,
            } => {
                check_fractions(&[*epsilon])?;
                if !mu.is_finite() {
                    return bad(format!("mu must be finite, got {mu}"));
                }
                sd("sigma", *sigma)?;
                sd("lambda", *lambda)
            }
            GeneratorKind::Multiclass {
                epsilons,
                shifts,
                sigma,
            } => {
                check_fractions(epsilons)?;
                if shifts.len() != epsilons.len() + 1 {
                    return bad(format!(
                        "{} fractions need {} shifts, got {}",
                        epsilons.len(),
                        epsilons.len() + 1,
                        shifts.len()
                    ));
                }
                if shifts.iter().any(|h| !h.is_finite()) {
                    return bad("shifts must be finite".into());
                }
                sd("sigma", *sigma)
            }
            GeneratorKind::Ar1 { rho, sigma } => {
                if !(rho.abs() < 1.0) {
                    return bad(format!("AR(1) needs |rho| < 1, got {rho}"));
                }
                sd("sigma", *sigma)
            }
            GeneratorKind::MvGaussianMixture {
                epsilons,
                shifts,
                covariance,
            } => {
                check_fractions(epsilons)?;
                if shifts.len() != epsilons.len() + 1 {
                    return bad("need one shift vector per class".into());
                }
                let k = covariance.len();
                if k == 0 || covariance.iter().any(|r| r.len() != k) {
                    return bad("covariance must be a non-empty square matrix".into());
                }
                if shifts
                    .iter()
                    .any(|s| s.len() != k || s.iter().any(|v| !v.is_finite()))
                {
                    return bad(format!("shift vectors must be finite with dimension {k}"));
                }
                cholesky(covariance).map(|_| ())
            }
            GeneratorKind::SwitchingRegression {
                design,
                beta0,
                beta1,
                epsilon,
                noise_sigma,
            } => {
                check_fractions(&[*epsilon])?;
                let k = design.width();
                if beta0.len() != k || beta1.len() != k {
                    return bad(format!("coefficient vectors must have length {k}"));
                }
                if beta0.iter().chain(beta1).any(|v| !v.is_finite()) {
                    return bad("coefficients must be finite".into());
                }
                sd("noise_sigma", *noise_sigma)
            }
        }
    }

    /// Draws `n` observations from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Generated> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidSpec("sample size must be >= 1".into()));
        }
        let mut labels = Vec::with_capacity(n);
        let data = match self {
            GeneratorKind::ShiftMixture { epsilon, h, sigma } => {
                let mut x = Vec::with_capacity(n);
                for _ in 0..n {
                    let class = draw_class(rng, &[*epsilon]);
                    let z: f64 = rng.sample(StandardNormal);
                    x.push(if class == 1 { *h } else { 0.0 } + sigma * z);
                    labels.push(class);
                }
                Dataset::Univariate(Sample::new(x)?)
            }
            GeneratorKind::VarianceMixture {
                epsilon,
                mu,
                sigma,
                lambda,
            } => {
                let mut x = Vec::with_capacity(n);
                for _ in 0..n {
                    let class = draw_class(rng, &[*epsilon]);
                    let z: f64 = rng.sample(StandardNormal);
                    x.push(mu + if class == 1 { *lambda } else { *sigma } * z);
                    labels.push(class);
                }
                Dataset::Univariate(Sample::new(x)?)
            }
            GeneratorKind::Multiclass {
                epsilons,
                shifts,
                sigma,
            } => {
                let mut x = Vec::with_capacity(n);
                for _ in 0..n {
                    let class = draw_class(rng, epsilons);
                    let z: f64 = rng.sample(StandardNormal);
                    x.push(shifts[class as usize] + sigma * z);
                    labels.push(class);
                }
                Dataset::Univariate(Sample::new(x)?)
            }
            GeneratorKind::Ar1 { rho, sigma } => {
                let mut state = 0.0;
                for _ in 0..AR1_BURN_IN {
                    let z: f64 = rng.sample(StandardNormal);
                    state = rho * state + sigma * z;
                }
                let mut x = Vec::with_capacity(n);
                for _ in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    state = rho * state + sigma * z;
                    x.push(state);
                    labels.push(0);
                }
                Dataset::Univariate(Sample::new(x)?)
            }
            GeneratorKind::MvGaussianMixture {
                epsilons,
                shifts,
                covariance,
            } => {
                let l = cholesky(covariance)?;
                let k = covariance.len();
                let mut flat = Vec::with_capacity(n * k);
                for _ in 0..n {
                    let class = draw_class(rng, epsilons);
                    let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let noise = &l * z;
                    flat.extend((0..k).map(|d| shifts[class as usize][d] + noise[d]));
                    labels.push(class);
                }
                Dataset::Vector(VectorSample::from_flat(k, flat)?)
            }
            GeneratorKind::SwitchingRegression {
                design,
                beta0,
                beta1,
                epsilon,
                noise_sigma,
            } => {
                let k = design.width();
                let mut rows = Vec::with_capacity(n);
                let mut y = Vec::with_capacity(n);
                for i in 0..n {
                    let class = draw_class(rng, &[*epsilon]);
                    let row: Vec<f64> = match design {
                        Design::Trend => vec![1.0, (i + 1) as f64],
                        Design::Gaussian { .. } => std::iter::once(1.0)
                            .chain((1..k).map(|_| rng.sample::<f64, _>(StandardNormal)))
                            .collect(),
                    };
                    let beta = if class == 1 { beta1 } else { beta0 };
                    let u: f64 = rng.sample(StandardNormal);
                    let mean: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
                    y.push(mean + noise_sigma * u);
                    rows.push(row);
                    labels.push(class);
                }
                Dataset::Regression(RegressionData::new(rows, y)?)
            }
        };
        Ok(Generated { data, labels })
    }
}

fn check_fractions(eps: &[f64]) -> Result<()> {
    if eps.iter().any(|e| !(0.0..1.0).contains(e)) {
        return Err(Error::InvalidSpec(format!(
            "fractions must lie in [0, 1), got {eps:?}"
        )));
    }
    let total: f64 = eps.iter().sum();
    if total >= 1.0 {
        return Err(Error::InvalidSpec(format!(
            "fractions must sum below 1, got {total}"
        )));
    }
    Ok(())
}

fn draw_class<R: Rng + ?Sized>(rng: &mut R, eps: &[f64]) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, e) in eps.iter().enumerate() {
        acc += e;
        if u < acc {
            return j as u32 + 1;
        }
    }
    0
}

fn cholesky(cov: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let k = cov.len();
    let m = DMatrix::from_fn(k, k, |i, j| cov[i][j]);
    if (0..k).any(|i| (0..k).any(|j| m[(i, j)] != m[(j, i)])) {
        return Err(Error::InvalidSpec("covariance must be symmetric".into()));
    }
    m.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidSpec("covariance must be positive definite".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Univariate(Sample),
    Vector(VectorSample),
    Regression(RegressionData),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Univariate(s) => s.len(),
            Dataset::Vector(v) => v.len(),
            Dataset::Regression(r) => r.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Generated data with the latent class of every observation
/// (0 for the base class).
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    pub labels: Vec<u32>,
}

/// Draws `spec.n` observations from stream 0 of `spec.seed`.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    spec.kind.sample_with(spec.n, &mut rng_for(spec.seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn univariate(g: &Generated) -> &[f64] {
        match &g.data {
            Dataset::Univariate(s) => s.values(),
            _ => panic!("expected univariate data"),
        }
    }

    #[test]
    fn unmixed_labels_are_all_ordinary() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::ShiftMixture {
                epsilon: 0.0,
                h: 5.0,
                sigma: 1.0,
            },
            n: 100,
            seed: 3,
        };
        assert!(generate(&spec).unwrap().labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn abnormal_fraction_matches_epsilon() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::ShiftMixture {
                epsilon: 0.1,
                h: 2.0,
                sigma: 1.0,
            },
            n: 100_000,
            seed: 11,
        };
        let g = generate(&spec).unwrap();
        let frac = g.labels.iter().filter(|&&l| l == 1).count() as f64 / 1e5;
        assert!((frac - 0.1).abs() < 0.005, "{frac}");
        let mean = univariate(&g).iter().sum::<f64>() / 1e5;
        assert!((mean - 0.2).abs() < 0.02, "{mean}");
    }

    #[test]
    fn white_noise_ar1_has_small_lag_one_correlation() {
        let n = 5000;
        let spec = GeneratorSpec {
            kind: GeneratorKind::Ar1 {
                rho: 0.0,
                sigma: 1.0,
            },
            n,
            seed: 5,
        };
        let g = generate(&spec).unwrap();
        let x = univariate(&g);
        let m = x.iter().sum::<f64>() / n as f64;
        let var: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
        let cov: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        assert!((cov / var).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn same_seed_same_output() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::Multiclass {
                epsilons: vec![0.3, 0.15],
                shifts: vec![1.0, 3.0, 7.0],
                sigma: 1.0,
            },
            n: 500,
            seed: 42,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GeneratorSpec {
            seed: 43,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn streams_are_independent_of_each_other() {
        let kind = GeneratorKind::standard_normal();
        let a = kind.sample_with(10, &mut rng_for(1, 0)).unwrap();
        let b = kind.sample_with(10, &mut rng_for(1, 1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            GeneratorKind::ShiftMixture {
                epsilon: 1.0,
                h: 1.0,
                sigma: 1.0,
            },
            GeneratorKind::Ar1 {
                rho: 1.0,
                sigma: 1.0,
            },
            GeneratorKind::Multiclass {
                epsilons: vec![0.6, 0.5],
                shifts: vec![0.0, 1.0, 2.0],
                sigma: 1.0,
            },
            GeneratorKind::MvGaussianMixture {
                epsilons: vec![0.1],
                shifts: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
                covariance: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            },
        ];
        for kind in bad {
            assert!(
                matches!(kind.validate(), Err(Error::InvalidSpec(_))),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn mv_mixture_has_the_requested_covariance() {
        let cov = vec![vec![0.745, -0.07], vec![-0.07, 0.51]];
        let kind = GeneratorKind::MvGaussianMixture {
            epsilons: vec![],
            shifts: vec![vec![0.0, 0.0]],
            covariance: cov.clone(),
        };
        let g = kind.sample_with(50_000, &mut rng_for(9, 0)).unwrap();
        let Dataset::Vector(v) = g.data else { panic!() };
        let n = v.len() as f64;
        let mut s = [[0.0; 2]; 2];
        for r in v.rows() {
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] += r[i] * r[j] / n;
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((s[i][j] - cov[i][j]).abs() < 0.02, "{s:?}");
            }
        }
    }

    #[test]
    fn trend_design_rows() {
        let kind = GeneratorKind::SwitchingRegression {
            design: Design::Trend,
            beta0: vec![1.0, 1.0],
            beta1: vec![1.0, 2.0],
            epsilon: 0.05,
            noise_sigma: 1.0,
        };
        let g = kind.sample_with(4, &mut rng_for(0, 0)).unwrap();
        let Dataset::Regression(d) = g.data else {
            panic!()
        };
        assert_eq!(d.row(2), &[1.0, 3.0]);
    }
}
