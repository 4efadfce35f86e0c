//! Calibration of the ℓ2/ℓ2 distortion `g_δ(λ) = δ g(λ/δ)`, where
//! `g(t)² = E X²` for `X ∼ Buffon(r t, N)` with a `χ(N)`-distributed row
//! length `r`.
//!
//! The table stores `g` on a normalized grid `t = λ/δ`, geometric over
//! `[T_MIN, T_MAX]` plus `t = 0`, and interpolates monotonically in log-log
//! coordinates. Below `T_MIN` the table follows `g ∝ √t`; above `T_MAX` it
//! follows `g = √(t² + c)` with `c` matched at `T_MAX`.

use nalgebra::{DMatrix, DVector};

use crate::buffon::{build_pmf, moment, BuffonParams};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::special::{chi_density, chi_mean_sd, chi_moment};

pub const T_MIN: f64 = 1e-3;
pub const T_MAX: f64 = 50.0;
pub const MIN_GRID: usize = 64;
pub const DEFAULT_GRID: usize = 96;
const CHI_SPAN: f64 = 10.0;
const BASE_PANELS: usize = 48;
const MAX_PANELS: usize = 160;
const PANEL_ORDER: usize = 8;
const SANDWICH_TOL: f64 = 1e-9;
const INVERSE_RTOL: f64 = 1e-14;

/// `√(2/π)`
const MEAN_ABS_GAUSS: f64 = 0.797_884_560_802_865_4;

/// Tabulated `g_δ` with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct GDeltaTable {
    dim: u32,
    delta: f64,
    /// normalized grid, `t[0] = 0`
    t: Vec<f64>,
    /// `g(t)` on the normalized grid
    g: Vec<f64>,
    /// log-log slopes at `t[1..]` for the cubic Hermite interpolant
    slopes: Vec<f64>,
    tail_c: f64,
}

/// `√(√(2/π) δ λ)`, the small-distance asymptote of `g_δ`.
fn sqrt_term(delta: f64, lambda: f64) -> f64 {
    (MEAN_ABS_GAUSS * delta * lambda).sqrt()
}

/// `max(√(√(2/π)δλ), λ)`
pub fn lower_bound(delta: f64, lambda: f64) -> f64 {
    sqrt_term(delta, lambda).max(lambda)
}

/// `√(√(2/π)δλ) + λ`
pub fn upper_bound(delta: f64, lambda: f64) -> f64 {
    sqrt_term(delta, lambda) + lambda
}

/// The normalized grid: `0` followed by `size − 1` geometric points.
pub fn normalized_grid(size: usize) -> Vec<f64> {
    let steps = (size - 2) as f64;
    let ratio = (T_MAX / T_MIN).ln();
    std::iter::once(0.0)
        .chain((0..size - 1).map(|i| {
            if i == size - 2 {
                T_MAX
            } else {
                T_MIN * (ratio * i as f64 / steps).exp()
            }
        }))
        .collect()
}

/// Second moment `m₂(a) = E X²` of `Buffon(a, N)`.
pub fn buffon_second_moment(a: f64, dim: u32) -> Result<f64> {
    moment(&build_pmf(BuffonParams::new(a, dim)?)?, 2)
}

fn chi_range(dim: u32) -> (f64, f64) {
    let (mu, sd) = chi_mean_sd(dim);
    ((mu - CHI_SPAN * sd).max(0.0), mu + CHI_SPAN * sd)
}

/// Panel edges on `[lo, hi]`: a uniform base partition refined at the
/// `r` where `r t` crosses an integer, grouped to at most `MAX_PANELS`.
fn panel_edges(lo: f64, hi: f64, t: f64) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=BASE_PANELS)
        .map(|i| lo + (hi - lo) * i as f64 / BASE_PANELS as f64)
        .collect();
    let k_lo = (lo * t).floor() as i64 + 1;
    let k_hi = (hi * t).ceil() as i64 - 1;
    if k_hi >= k_lo {
        let count = (k_hi - k_lo + 1) as usize;
        let stride = count.div_ceil(MAX_PANELS - BASE_PANELS);
        edges.extend(
            (k_lo..=k_hi)
                .step_by(stride)
                .map(|k| k as f64 / t)
                .filter(|&r| r > lo && r < hi),
        );
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * hi);
    edges
}

/// `E m₂(r t)` over `r ∼ χ(N)` by panelled Gauss-Legendre quadrature.
pub fn mixture_second_moment(t: f64, dim: u32) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid(format!(
            "normalized distance must be >= 0, got {t}"
        )));
    }
    let rule = GaussLegendre::new(PANEL_ORDER);
    let (lo, hi) = chi_range(dim);
    let edges = panel_edges(lo, hi, t);
    let mut total = 0.0;
    for w in edges.windows(2) {
        for (r, wt) in rule.points_on(w[0], w[1]) {
            let f = chi_density(dim, r);
            if f > 0.0 {
                total += wt * f * buffon_second_moment(r * t, dim)?;
            }
        }
    }
    Ok(total)
}

/// Fritsch–Carlson slopes for monotone cubic Hermite interpolation.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

impl GDeltaTable {
    /// Builds the table from mixture quadrature at `grid_size` points.
    pub fn build(dim: u32, delta: f64, grid_size: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {dim}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid(format!(
                "bin width must be finite and > 0, got {delta}"
            )));
        }
        if grid_size < MIN_GRID {
            return Err(Error::invalid(format!(
                "grid needs >= {MIN_GRID} points, got {grid_size}"
            )));
        }
        let t = normalized_grid(grid_size);
        let g = t
            .iter()
            .map(|&t| Ok(mixture_second_moment(t, dim)?.sqrt()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(dim, delta, t, g)
    }

    fn from_values(dim: u32, delta: f64, t: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        for (&ti, &gi) in t.iter().zip(&g) {
            let (lo, hi) = (lower_bound(1.0, ti), upper_bound(1.0, ti));
            let slack = SANDWICH_TOL * hi.max(f64::MIN_POSITIVE);
            if gi < lo - slack || gi > hi + slack {
                return Err(Error::Numerical(format!(
                    "g({ti}) = {gi} outside [{lo}, {hi}] for N = {dim}"
                )));
            }
        }
        if let Some(i) = (1..g.len()).find(|&i| g[i] <= g[i - 1]) {
            return Err(Error::Numerical(format!(
                "g is not strictly increasing between t = {} and t = {}",
                t[i - 1],
                t[i]
            )));
        }
        let lx: Vec<f64> = t[1..].iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = g[1..].iter().map(|v| v.ln()).collect();
        let slopes = pchip_slopes(&lx, &ly);
        let (tm, gm) = (t[t.len() - 1], g[g.len() - 1]);
        Ok(Self {
            dim,
            delta,
            tail_c: gm * gm - tm * tm,
            t,
            g,
            slopes,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Grid in distance units.
    pub fn grid(&self) -> Vec<f64> {
        self.t.iter().map(|t| self.delta * t).collect()
    }

    /// `g_δ` at the grid points.
    pub fn values(&self) -> Vec<f64> {
        self.g.iter().map(|g| self.delta * g).collect()
    }

    /// Distance above which the asymptotic tail is used.
    pub fn tail_switch(&self) -> f64 {
        self.delta * T_MAX
    }

    /// `c` in the tail form `g(t) = √(t² + c)`.
    pub fn tail_constant(&self) -> f64 {
        self.tail_c
    }

    fn eval_normalized(&self, t: f64) -> f64 {
        let t_min = self.t[1];
        let t_max = self.t[self.t.len() - 1];
        if t <= 0.0 {
            0.0
        } else if t < t_min {
            self.g[1] * (t / t_min).sqrt()
        } else if t >= t_max {
            (t * t + self.tail_c).sqrt()
        } else {
            let x = t.ln();
            // positive part of the grid starts at index 1
            let j = self.t[1..]
                .partition_point(|&v| v <= t)
                .clamp(1, self.t.len() - 2);
            let (i0, i1) = (j - 1, j);
            let (t0, t1) = (self.t[i0 + 1], self.t[i1 + 1]);
            hermite(
                t0.ln(),
                t1.ln(),
                self.g[i0 + 1].ln(),
                self.g[i1 + 1].ln(),
                self.slopes[i0],
                self.slopes[i1],
                x,
            )
            .exp()
        }
    }

    /// `g_δ(λ) = δ g(λ/δ)`.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!(
                "g is defined for finite λ >= 0, got {lambda}"
            )));
        }
        Ok(self.delta * self.eval_normalized(lambda / self.delta))
    }

    /// `λ` with `g_δ(λ) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y.is_finite() && y >= 0.0) {
            return Err(Error::invalid(format!(
                "g inverse needs finite y >= 0, got {y}"
            )));
        }
        let s = y / self.delta;
        let last = self.g.len() - 1;
        let t = if s == 0.0 {
            0.0
        } else if s < self.g[1] {
            self.t[1] * (s / self.g[1]).powi(2)
        } else if s >= self.g[last] {
            (s * s - self.tail_c).max(0.0).sqrt()
        } else {
            let j = self.g.partition_point(|&v| v <= s);
            let (mut lo, mut hi) = (self.t[j - 1], self.t[j]);
            while hi - lo > INVERSE_RTOL * hi {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.eval_normalized(mid) < s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        Ok(self.delta * t)
    }
}

/// Builds `g_δ` for dimension `dim` on `grid_size` points.
pub fn build_gdelta(dim: u32, delta: f64, grid_size: usize) -> Result<GDeltaTable> {
    GDeltaTable::build(dim, delta, grid_size)
}

/// `g_δ(λ)` from a table.
pub fn g_eval(table: &GDeltaTable, lambda: f64) -> Result<f64> {
    table.eval(lambda)
}

/// `g_δ⁻¹(y)` from a table.
pub fn g_inverse(table: &GDeltaTable, y: f64) -> Result<f64> {
    table.inverse(y)
}

/// One point of the polynomial-fit cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCheck {
    pub t: f64,
    pub quadrature: f64,
    pub polynomial: f64,
}

impl FitCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.polynomial - self.quadrature).abs() / self.quadrature
    }
}

/// `E X²` at normalized distance `t` by fitting `m₂(a)` with a degree
/// `degree` polynomial on the relevant range of `a = r t` (weighted by the
/// `χ(N)` density) and integrating term by term with `χ(N)` moments.
pub fn polynomial_fit_second_moment(t: f64, dim: u32, degree: usize) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid("polynomial fit needs t > 0"));
    }
    let (lo, hi) = chi_range(dim);
    let samples = 8 * (degree + 1);
    let a_max = hi * t;
    let mut design = DMatrix::zeros(samples, degree + 1);
    let mut rhs = DVector::zeros(samples);
    for i in 0..samples {
        // Chebyshev points on [lo, hi]
        let c = (std::f64::consts::PI * (i as f64 + 0.5) / samples as f64).cos();
        let r = lo + 0.5 * (hi - lo) * (1.0 + c);
        let w = chi_density(dim, r).sqrt();
        let a = r * t;
        let m2 = buffon_second_moment(a, dim)?;
        for j in 0..=degree {
            design[(i, j)] = w * (a / a_max).powi(j as i32);
        }
        rhs[i] = w * m2;
    }
    let svd = design.svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(format!("least squares failed: {e}")))?;
    (0..=degree).try_fold(0.0, |acc, j| {
        Ok(acc + coef[j] * (t / a_max).powi(j as i32) * chi_moment(dim, j as u32)?)
    })
}

/// Compares table values with the polynomial-fit route at `ts`.
pub fn moment_fit_crosscheck(dim: u32, ts: &[f64], degree: usize) -> Result<Vec<FitCheck>> {
    ts.iter()
        .map(|&t| {
            Ok(FitCheck {
                t,
                quadrature: mixture_second_moment(t, dim)?,
                polynomial: polynomial_fit_second_moment(t, dim, degree)?,
            })
        })
        .collect()
}
