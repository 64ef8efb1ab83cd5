//! Closed-form theoretical quantities: exponential bound rates, the
//! population split curve, its optimal half-width, and the chi-square type
//! information bound.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, integrate, std_normal_pdf};

/// Absolute tolerance for every quadrature in this module.
pub const QUAD_TOL: f64 = 1e-10;
/// Tails are truncated this many scale units beyond the outermost component.
pub const TAIL_SCALES: f64 = 12.0;

/// Cramer-type moment constants `g`, `H` of the centred observations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CramerConstants {
    pub g: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

impl CramerConstants {
    pub fn new(g: f64, h: f64) -> Result<Self> {
        if !(g > 0.0) || !(h > 0.0) {
            return Err(Error::DomainError(format!(
                "need g > 0 and H > 0, got g={g}, H={h}"
            )));
        }
        Ok(Self { g, h })
    }

    /// Defaults for `N(0, sigma^2)`: `g = sigma^2`, `H = 10 / sigma`.
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            g: sigma * sigma,
            h: 10.0 / sigma,
        }
    }
}

/// Mixing coefficients `psi(1) >= psi(2) >= ... >= 0`. Lags beyond the
/// profile take the last value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    psi_coefficients: Vec<f64>,
}

impl MixingProfile {
    pub fn new(psi_coefficients: Vec<f64>) -> Result<Self> {
        if psi_coefficients.is_empty() {
            return Err(Error::DomainError("mixing profile is empty".into()));
        }
        if psi_coefficients
            .iter()
            .any(|p| !(*p >= 0.0) || !p.is_finite())
            || psi_coefficients.windows(2).any(|w| w[1] > w[0])
        {
            return Err(Error::DomainError(
                "mixing profile must be nonnegative and nonincreasing".into(),
            ));
        }
        Ok(Self { psi_coefficients })
    }

    /// Independent observations.
    pub fn independent() -> Self {
        Self {
            psi_coefficients: vec![0.0],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.psi_coefficients
    }
}

/// `gamma(x)` with `ln(1 + gamma) = x^2 / 4g` for `x <= gH` and `xH / 4` above.
pub fn gamma_of(x: f64, cc: CramerConstants) -> f64 {
    let exponent = if x <= cc.g * cc.h {
        x * x / (4.0 * cc.g)
    } else {
        x * cc.h / 4.0
    };
    exponent.exp_m1()
}

/// Smallest lag `l >= 1` with `psi(l) <= gamma(x)`.
pub fn phi0_of(x: f64, mp: &MixingProfile, cc: CramerConstants) -> Result<usize> {
    let gamma = gamma_of(x, cc);
    mp.psi_coefficients
        .iter()
        .position(|&p| p <= gamma)
        .map(|i| i + 1)
        .ok_or(Error::NoSuchLag { gamma })
}

fn rate(x: f64, phi0: usize, cc: CramerConstants) -> f64 {
    let p = phi0 as f64;
    (cc.h * x / (8.0 * p)).min(x * x / (16.0 * p * p * cc.g))
}

/// Type-1 error exponent `L(C) = min(HC / 8 phi0, C^2 / (16 phi0^2 g))`.
pub fn type1_rate(c: f64, phi0: usize, cc: CramerConstants) -> f64 {
    rate(c, phi0, cc)
}

/// Type-2 error exponent `L(delta)`, same form as [`type1_rate`].
pub fn type2_rate(delta: f64, phi0: usize, cc: CramerConstants) -> f64 {
    rate(delta, phi0, cc)
}

/// `4 phi0 exp(-L(C) N)`; may exceed 1.
pub fn type1_bound(c: f64, phi0: usize, cc: CramerConstants, n: usize) -> f64 {
    4.0 * phi0 as f64 * (-type1_rate(c, phi0, cc) * n as f64).exp()
}

/// `4 phi0 exp(-L(delta) N)`; may exceed 1.
pub fn type2_bound(delta: f64, phi0: usize, cc: CramerConstants, n: usize) -> f64 {
    4.0 * phi0 as f64 * (-type2_rate(delta, phi0, cc) * n as f64).exp()
}

/// A univariate density with a location and a scale used for tail truncation.
pub trait Density: Send + Sync {
    fn pdf(&self, x: f64) -> f64;
    /// Location used to place the truncated integration range.
    fn location(&self) -> f64;
    /// Standard-deviation equivalent used for tail truncation.
    fn scale(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() {
            return Err(Error::DomainError(format!(
                "invalid Gaussian N({mean}, {sd}^2)"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }
}

impl Density for Gaussian {
    fn pdf(&self, x: f64) -> f64 {
        std_normal_pdf((x - self.mean) / self.sd) / self.sd
    }
    fn location(&self) -> f64 {
        self.mean
    }
    fn scale(&self) -> f64 {
        self.sd
    }
}

/// Arbitrary density given as a closure.
#[derive(Clone)]
pub struct FnDensity {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    location: f64,
    scale: f64,
}

impl FnDensity {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, location: f64, scale: f64) -> Self {
        Self {
            f: Arc::new(f),
            location,
            scale,
        }
    }
}

impl Density for FnDensity {
    fn pdf(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn location(&self) -> f64 {
        self.location
    }
    fn scale(&self) -> f64 {
        self.scale
    }
}

/// `(1 - eps) f0(x) + eps f0(x - h)` with overall mean `eps h` for centred `f0`.
struct ShiftMixture<'a, D: Density + ?Sized> {
    f0: &'a D,
    eps: f64,
    h: f64,
}

impl<D: Density + ?Sized> ShiftMixture<'_, D> {
    fn pdf(&self, x: f64) -> f64 {
        (1.0 - self.eps) * self.f0.pdf(x) + self.eps * self.f0.pdf(x - self.h)
    }

    fn support(&self) -> (f64, f64) {
        let loc = self.f0.location();
        let w = TAIL_SCALES * self.f0.scale();
        (loc + self.h.min(0.0) - w, loc + self.h.max(0.0) + w)
    }
}

fn check_mixture(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::DomainError(format!(
            "epsilon must lie in [0, 1], got {eps}"
        )));
    }
    Ok(())
}

/// Population split curve `Psi(b) = r(b) - eps h d(b)` where `r` and `d` are
/// the first moment and mass of the mixture over `[eps h - b, eps h + b]`.
pub fn theoretical_psi<D: Density + ?Sized>(b: f64, eps: f64, h: f64, f0: &D) -> Result<f64> {
    check_mixture(eps)?;
    if !(b >= 0.0) {
        return Err(Error::DomainError(format!("b must be >= 0, got {b}")));
    }
    let m = ShiftMixture { f0, eps, h };
    let c = eps * h;
    let (lo, hi) = m.support();
    let a = (c - b).max(lo);
    let z = (c + b).min(hi);
    if a >= z {
        return Ok(0.0);
    }
    // integrating f(x) (x - c) avoids cancelling r(b) against c d(b)
    let split = c.clamp(a, z);
    let left = integrate(|x| m.pdf(x) * (x - c), a, split, QUAD_TOL)?;
    let right = integrate(|x| m.pdf(x) * (x - c), split, z, QUAD_TOL)?;
    Ok(left + right)
}

/// Root of `f(eps h + b) = f(eps h - b)` in `(0, b_max]` maximising
/// `|Psi(b)|`. `b_max` defaults to the truncated support width.
pub fn optimal_band<D: Density + ?Sized>(
    eps: f64,
    h: f64,
    f0: &D,
    b_max: Option<f64>,
) -> Result<f64> {
    check_mixture(eps)?;
    if eps * h == 0.0 {
        return Err(Error::DomainError(
            "optimal band needs a nondegenerate mixture (eps h != 0)".into(),
        ));
    }
    let m = ShiftMixture { f0, eps, h };
    let c = eps * h;
    let top = b_max.unwrap_or_else(|| {
        let (lo, hi) = m.support();
        (hi - c).max(c - lo)
    });
    let d = |b: f64| m.pdf(c + b) - m.pdf(c - b);
    const STEPS: i32 = 64;
    const SPAN: f64 = 1e-6;
    let at = |i: i32| top * SPAN.powf((STEPS - i) as f64 / STEPS as f64);
    let mut best: Option<(f64, f64)> = None;
    let mut prev = (at(0), d(at(0)));
    for i in 1..=STEPS {
        let b = at(i);
        let v = d(b);
        if prev.1 != 0.0 && v != 0.0 && prev.1.signum() != v.signum() {
            let root = bisect(d, prev.0, b, 1e-13 * top)?;
            let size = theoretical_psi(root, eps, h, f0)?.abs();
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((root, size));
            }
        }
        prev = (b, v);
    }
    best.map(|(b, _)| b)
        .ok_or(Error::NoRootInRange { b_max: top })
}

/// `J(eps) = integral of (f0 - f1)^2 / f_eps` with `f_eps = (1 - eps) f0 + eps f1`.
pub fn info_bound_j<D0, D1>(eps: f64, f0: &D0, f1: &D1) -> Result<f64>
where
    D0: Density + ?Sized,
    D1: Density + ?Sized,
{
    check_mixture(eps)?;
    let lo =
        (f0.location() - TAIL_SCALES * f0.scale()).min(f1.location() - TAIL_SCALES * f1.scale());
    let hi =
        (f0.location() + TAIL_SCALES * f0.scale()).max(f1.location() + TAIL_SCALES * f1.scale());
    let gap = std::cell::Cell::new(None);
    let integrand = |x: f64| {
        let (a, b) = (f0.pdf(x), f1.pdf(x));
        let diff = a - b;
        if diff == 0.0 {
            return 0.0;
        }
        let mix = (1.0 - eps) * a + eps * b;
        if mix <= 0.0 {
            gap.set(Some(x));
            return 0.0;
        }
        diff * diff / mix
    };
    let v = integrate(integrand, lo, hi, QUAD_TOL)?;
    if let Some(x) = gap.get() {
        return Err(Error::DivisionBySupportGap { x });
    }
    Ok(v)
}
