//! The band-split separation statistic.
//!
//! For a reference point `theta` and half-width `b`, observations with
//! `|x - theta| < b` are *ordinary* (`n1` of them, sum `S1`) and the rest are
//! *abnormal* (`n2`, sum `S2`). The statistic is
//!
//! ```text
//! psi(b) = (n2 * S1 - n1 * S2) / N^2
//! ```
//!
//! and the decision statistic is `J = max_b |psi(b)|`. `psi` is constant
//! between consecutive distances `|x_i - theta|`, so the exact maximum is found
//! by sorting the distances once and sweeping prefix sums (`O(N log N)`).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::{dd_sum, Dd};
use crate::sample::{validate_grid, BandPartition, Sample, ScanGrid};

/// Default number of points in the geometric scan grid.
pub const DEFAULT_GRID_POINTS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid: Vec<f64>,
    pub psi_values: Vec<f64>,
    #[serde(rename = "J")]
    pub j: f64,
    pub b_star: f64,
}

impl ScanResult {
    /// Position of `b_star` in the grid.
    pub fn argmax(&self) -> usize {
        self.grid
            .iter()
            .position(|&b| b == self.b_star)
            .expect("b_star is a grid point")
    }
}

/// Arithmetic mean, accumulated in double-double precision.
pub fn sample_mean(s: &Sample) -> f64 {
    dd_sum(s.values().iter().copied()).div_f64(s.len() as f64)
}

/// Splits `s` by the open band `(center - b, center + b)`.
pub fn partition_by_band(s: &Sample, center: f64, b: f64) -> BandPartition {
    let (ordinary, abnormal) = (0..s.len()).partition(|&i| (s.values()[i] - center).abs() < b);
    BandPartition {
        b,
        ordinary,
        abnormal,
    }
}

fn psi_from_sums(n1: usize, n2: usize, s1: f64, s2: f64, norm: f64) -> f64 {
    (n2 as f64 * s1 - n1 as f64 * s2) / (norm * norm)
}

/// `(n2 * sum(ordinary) - n1 * sum(abnormal)) / N^2`.
pub fn psi(s: &Sample, p: &BandPartition) -> f64 {
    let x = s.values();
    let s1 = dd_sum(p.ordinary.iter().map(|&i| x[i])).value();
    let s2 = dd_sum(p.abnormal.iter().map(|&i| x[i])).value();
    psi_from_sums(p.n1(), p.n2(), s1, s2, s.len() as f64)
}

/// Equivalent rearrangement `(N * sum(ordinary) - n1 * sum(all)) / N^2`.
pub fn psi_rearranged(s: &Sample, p: &BandPartition) -> f64 {
    let x = s.values();
    let n = s.len() as f64;
    let s1: f64 = p.ordinary.iter().map(|&i| x[i]).sum();
    let total: f64 = x.iter().sum();
    (n * s1 - p.n1() as f64 * total) / (n * n)
}

/// Evaluates `psi` on an explicit grid of half-widths.
pub fn scan(s: &Sample, center: f64, grid: &[f64]) -> Result<ScanResult> {
    validate_grid(grid)?;
    let keyed = KeyedScan::symmetric(s, center);
    Ok(keyed.scan(grid, s.len() as f64).into_scalar())
}

/// Exact scan over every partition reachable with `0 < b <= b_max`.
pub fn scan_breakpoints(s: &Sample, center: f64, b_max: Option<f64>) -> ScanResult {
    let keyed = KeyedScan::symmetric(s, center);
    let grid = keyed.candidates(b_max);
    keyed.scan(&grid, s.len() as f64).into_scalar()
}

/// Geometric grid of `points` values ending at the largest distance from
/// `center` (or at `b_max` when given).
pub fn default_grid(s: &Sample, center: f64) -> Vec<f64> {
    let keys: Vec<f64> = s.values().iter().map(|x| (x - center).abs()).collect();
    geometric_grid(&keys, DEFAULT_GRID_POINTS, None)
}

/// Dispatches on the configured grid kind.
pub fn scan_with(s: &Sample, center: f64, grid: &ScanGrid) -> Result<ScanResult> {
    grid.validate()?;
    let keyed = KeyedScan::symmetric(s, center);
    let points = keyed.grid_for(grid);
    Ok(keyed.scan(&points, s.len() as f64).into_scalar())
}

pub(crate) fn geometric_grid(keys: &[f64], points: usize, b_max: Option<f64>) -> Vec<f64> {
    let top = b_max.unwrap_or_else(|| {
        keys.iter()
            .copied()
            .filter(|k| k.is_finite())
            .fold(0.0, f64::max)
    });
    if !(top > 0.0) || points == 0 {
        return vec![b_max.unwrap_or(1.0)];
    }
    if points == 1 {
        return vec![top];
    }
    let lo = top / points as f64;
    let ratio = (top / lo).powf(1.0 / (points - 1) as f64);
    let mut grid: Vec<f64> = (0..points).map(|i| lo * ratio.powi(i as i32)).collect();
    *grid.last_mut().expect("points >= 2") = top;
    grid.dedup_by(|a, b| a <= b);
    grid
}

/// Whether a key equal to `b` is on the ordinary side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Boundary {
    /// ordinary iff key < b
    Strict,
    /// ordinary iff key <= b
    Inclusive,
}

/// Observations sorted by a monotone key, with prefix sums of their values.
///
/// An observation is ordinary at half-width `b` iff its key is below `b`
/// (see [`Boundary`]). Values may be vectors of dimension `dim`.
pub(crate) struct KeyedScan {
    dim: usize,
    keys: Vec<f64>,
    order: Vec<usize>,
    prefix: Vec<Dd>,
    boundary: Boundary,
}

pub(crate) struct RawScan {
    pub grid: Vec<f64>,
    pub dim: usize,
    /// `grid.len() * dim` statistic components.
    pub psi: Vec<f64>,
    pub j: f64,
    pub arg: usize,
}

impl RawScan {
    pub fn b_star(&self) -> f64 {
        self.grid[self.arg]
    }

    pub fn psi_at(&self, i: usize) -> &[f64] {
        &self.psi[i * self.dim..(i + 1) * self.dim]
    }

    pub fn into_scalar(self) -> ScanResult {
        debug_assert_eq!(self.dim, 1);
        let b_star = self.b_star();
        ScanResult {
            grid: self.grid,
            psi_values: self.psi,
            j: self.j,
            b_star,
        }
    }
}

impl KeyedScan {
    pub fn new(values: &[f64], dim: usize, keys: &[f64], boundary: Boundary) -> Self {
        let n = keys.len();
        debug_assert_eq!(values.len(), n * dim);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
        let sorted_keys = order.iter().map(|&i| keys[i]).collect();
        let mut prefix = vec![Dd::ZERO; (n + 1) * dim];
        for (slot, &i) in order.iter().enumerate() {
            for d in 0..dim {
                prefix[(slot + 1) * dim + d] = prefix[slot * dim + d].add_f64(values[i * dim + d]);
            }
        }
        Self {
            dim,
            keys: sorted_keys,
            order,
            prefix,
            boundary,
        }
    }

    pub fn symmetric(s: &Sample, center: f64) -> Self {
        let keys: Vec<f64> = s.values().iter().map(|x| (x - center).abs()).collect();
        Self::new(s.values(), 1, &keys, Boundary::Strict)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn n_ordinary(&self, b: f64) -> usize {
        match self.boundary {
            Boundary::Strict => self.keys.partition_point(|&k| k < b),
            Boundary::Inclusive => self.keys.partition_point(|&k| k <= b),
        }
    }

    /// Writes `psi` for the partition with `n1` ordinary observations into
    /// `out`, normalising by `norm^2`.
    pub fn psi_into(&self, n1: usize, norm: f64, out: &mut [f64]) {
        let n = self.len();
        let n2 = n - n1;
        for d in 0..self.dim {
            let ordinary = self.prefix[n1 * self.dim + d];
            let abnormal = self.prefix[n * self.dim + d].sub(ordinary);
            out[d] = psi_from_sums(n1, n2, ordinary.value(), abnormal.value(), norm);
        }
    }

    /// Half-widths that realise every distinct partition with `0 < b <= b_max`.
    /// Each candidate is the smallest `b` producing its partition when such a
    /// minimum exists, otherwise the right end of the interval.
    pub fn candidates(&self, b_max: Option<f64>) -> Vec<f64> {
        let limit = b_max.unwrap_or(f64::INFINITY);
        let mut out: Vec<f64> = Vec::new();
        for &k in &self.keys {
            if k > 0.0 && k.is_finite() && k <= limit && out.last() != Some(&k) {
                out.push(k);
            }
        }
        match self.boundary {
            Boundary::Strict => {
                if let Some(bm) = b_max {
                    if out.last() != Some(&bm) {
                        out.push(bm);
                    }
                }
            }
            Boundary::Inclusive => {
                // keys <= 0 are ordinary for any b > 0
                if self.keys.first().is_some_and(|&k| k <= 0.0) {
                    let first = out.first().copied().or(b_max).unwrap_or(1.0);
                    out.insert(0, 0.5 * first);
                }
            }
        }
        if out.is_empty() {
            out.push(b_max.unwrap_or(1.0));
        }
        out
    }

    pub fn grid_for(&self, grid: &ScanGrid) -> Vec<f64> {
        match grid {
            ScanGrid::Breakpoints { b_max } => self.candidates(*b_max),
            ScanGrid::Geometric { points, b_max } => geometric_grid(&self.keys, *points, *b_max),
            ScanGrid::Explicit { values } => values.clone(),
        }
    }

    /// Evaluates the statistic on `grid`; ties in `J` resolve to the smallest `b`.
    pub fn scan(&self, grid: &[f64], norm: f64) -> RawScan {
        let dim = self.dim;
        let mut psi = vec![0.0; grid.len() * dim];
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, &b) in grid.iter().enumerate() {
            let n1 = self.n_ordinary(b);
            let out = &mut psi[i * dim..(i + 1) * dim];
            self.psi_into(n1, norm, out);
            let size = crate::sample::euclidean_norm(out);
            if size > best.0 {
                best = (size, i);
            }
        }
        RawScan {
            grid: grid.to_vec(),
            dim,
            psi,
            j: best.0.max(0.0),
            arg: best.1,
        }
    }

    /// Partition at half-width `b`, with indices in ascending order.
    pub fn partition(&self, b: f64) -> BandPartition {
        let n1 = self.n_ordinary(b);
        let mut ordinary = self.order[..n1].to_vec();
        let mut abnormal = self.order[n1..].to_vec();
        ordinary.sort_unstable();
        abnormal.sort_unstable();
        BandPartition {
            b,
            ordinary,
            abnormal,
        }
    }
}
