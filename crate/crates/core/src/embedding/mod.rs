//! Dithered, uniformly quantized random projections and the distance
//! estimators built on them.
//!
//! A [`Projector`] freezes a random matrix `Φ ∈ R^{M×N}` and a dither
//! `ξ ∈ [0, δ)^M`; a point `x` maps to the integer codes
//! `⌊(Φx + ξ) / δ⌋`, i.e. to `ψ_δ(x) = δ · codes ∈ δZ^M`.

mod diag;
pub mod io;

use std::f64::consts::{FRAC_2_PI, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gdelta::GDeltaTable;
use crate::rng::{self, Gaussian};

pub use diag::{subgaussian_diag, SubGaussianReport};

/// Codes must stay strictly below this magnitude.
pub const CODE_LIMIT: f64 = 4_611_686_018_427_387_904.0; // 2^62

/// `δ ⌊λ / δ⌋`.
pub fn quantize(lambda: f64, delta: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "cannot quantize non-finite value {lambda}"
        )));
    }
    check_delta(delta)?;
    Ok(delta * bin_index(lambda, delta))
}

/// `⌊λ/δ⌋`, corrected so that `δk ≤ λ < δ(k+1)` holds for the rounded
/// products as well.
fn bin_index(lambda: f64, delta: f64) -> f64 {
    let mut k = (lambda / delta).floor();
    if delta * k > lambda {
        k -= 1.0;
    } else if delta * (k + 1.0) <= lambda {
        k += 1.0;
    }
    k
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!(
            "bin width must be finite and > 0, got {delta}"
        )));
    }
    Ok(())
}

/// Distribution of the rows of `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RowModel {
    /// i.i.d. standard normal entries
    #[default]
    Gaussian,
    /// rows uniform on the sphere of radius `√N`
    UniformSphere,
}

impl RowModel {
    pub fn code(self) -> u8 {
        match self {
            RowModel::Gaussian => 0,
            RowModel::UniformSphere => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(RowModel::Gaussian),
            1 => Ok(RowModel::UniformSphere),
            other => Err(Error::Format(format!("unknown row model {other}"))),
        }
    }

    /// `E|⟨φ, w⟩| / ‖w‖` for a row `φ` of this model in dimension `dim`.
    pub fn mean_abs_projection(self, dim: u32) -> Result<f64> {
        match self {
            RowModel::Gaussian => Ok(FRAC_2_PI.sqrt()),
            RowModel::UniformSphere => Ok(f64::from(dim).sqrt() * crate::special::tau(dim)?),
        }
    }

    pub(crate) fn fill_row<R: rand::Rng>(self, g: &mut Gaussian<R>, row: &mut [f64]) {
        match self {
            RowModel::Gaussian => g.fill(row),
            RowModel::UniformSphere => {
                g.fill_direction(row);
                let r = (row.len() as f64).sqrt();
                row.iter_mut().for_each(|x| *x *= r);
            }
        }
    }
}

/// Frozen random embedding state. Fully determined by
/// `(seed, m, n, delta, row_model)`.
#[derive(Debug, Clone)]
pub struct Projector {
    m: usize,
    n: usize,
    delta: f64,
    seed: u64,
    row_model: RowModel,
    /// row-major `m × n`
    phi: Vec<f64>,
    dither: Vec<f64>,
    id: u64,
}

impl Projector {
    pub fn new(m: usize, n: usize, delta: f64, seed: u64, row_model: RowModel) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!(
                "dimensions must be positive, got M={m}, N={n}"
            )));
        }
        if row_model == RowModel::UniformSphere && n < 2 {
            return Err(Error::invalid("uniform-sphere rows need N >= 2"));
        }
        check_delta(delta)?;
        let mut phi = vec![0.0; m * n];
        let mut g = Gaussian::new(rng::stream(seed, 0));
        for row in phi.chunks_exact_mut(n) {
            row_model.fill_row(&mut g, row);
        }
        let mut u = Gaussian::new(rng::stream(seed, 1));
        let dither = (0..m).map(|_| delta * u.uniform()).collect();
        Ok(Self {
            m,
            n,
            delta,
            seed,
            row_model,
            phi,
            dither,
            id: projector_id(m, n, delta, seed, row_model),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row_model(&self) -> RowModel {
        self.row_model
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.phi[j * self.n..(j + 1) * self.n]
    }

    pub fn dither(&self) -> &[f64] {
        &self.dither
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Unquantized, undithered projection `Φx`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self
            .phi
            .chunks_exact(self.n)
            .map(|row| dot(row, x))
            .collect())
    }
}

fn projector_id(m: usize, n: usize, delta: f64, seed: u64, row_model: RowModel) -> u64 {
    let mut h = Sha256::new();
    h.update(b"qjl-projector-v1");
    h.update((m as u64).to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update(delta.to_bits().to_le_bytes());
    h.update(seed.to_le_bytes());
    h.update([row_model.code()]);
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A point's image: integer codes `k_j` with `ψ_δ(x)_j = δ k_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    codes: Vec<i64>,
    delta: f64,
    projector_id: u64,
}

impl Sketch {
    pub fn new(codes: Vec<i64>, delta: f64, projector_id: u64) -> Self {
        Self {
            codes,
            delta,
            projector_id,
        }
    }

    pub fn codes(&self) -> &[i64] {
        &self.codes
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn projector_id(&self) -> u64 {
        self.projector_id
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// The quantized values `δ k_j`.
    pub fn values(&self) -> Vec<f64> {
        self.codes.iter().map(|&k| self.delta * k as f64).collect()
    }
}

/// `ψ_δ(x) = Q_δ(Φx + ξ)`, returned as codes.
pub fn embed(proj: &Projector, x: &[f64]) -> Result<Sketch> {
    proj.check_dim(x)?;
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite coordinate {bad}")));
    }
    quantize_projection(proj, &proj.project(x)?)
}

/// Codes `⌊(y_j + ξ_j)/δ⌋` for an already computed projection `y = Φx`.
pub fn quantize_projection(proj: &Projector, y: &[f64]) -> Result<Sketch> {
    if y.len() != proj.m {
        return Err(Error::DimensionMismatch {
            expected: proj.m,
            actual: y.len(),
        });
    }
    let codes = y
        .iter()
        .zip(&proj.dither)
        .enumerate()
        .map(|(row, (yj, xi))| {
            let value = yj + xi;
            let scaled = value / proj.delta;
            if scaled.is_nan() || scaled.abs() >= CODE_LIMIT {
                return Err(Error::CodeOverflow {
                    row,
                    magnitude: scaled.abs(),
                });
            }
            Ok(bin_index(value, proj.delta) as i64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sketch::new(codes, proj.delta, proj.id))
}

/// Embeds every point in parallel.
pub fn embed_all(proj: &Projector, points: &[Vec<f64>]) -> Result<Vec<Sketch>> {
    points.par_iter().map(|x| embed(proj, x)).collect()
}

fn check_pair(su: &Sketch, sv: &Sketch) -> Result<()> {
    if su.projector_id != sv.projector_id {
        return Err(Error::ProjectorMismatch(su.projector_id, sv.projector_id));
    }
    if su.codes.len() != sv.codes.len() {
        return Err(Error::DimensionMismatch {
            expected: su.codes.len(),
            actual: sv.codes.len(),
        });
    }
    Ok(())
}

/// Unbiased ℓ2 distance estimate `√(π/2)/M · ‖ψ(u) − ψ(v)‖₁`.
pub fn l1_estimate(su: &Sketch, sv: &Sketch) -> Result<f64> {
    check_pair(su, sv)?;
    let m = su.codes.len() as f64;
    let sum: f64 = su
        .codes
        .iter()
        .zip(&sv.codes)
        .map(|(a, b)| (a - b).unsigned_abs() as f64)
        .sum();
    Ok((PI / 2.0).sqrt() / m * su.delta * sum)
}

/// `(1/√M) ‖ψ(u) − ψ(v)‖₂`, which concentrates around `g_δ(‖u − v‖)`.
pub fn l2_raw(su: &Sketch, sv: &Sketch) -> Result<f64> {
    check_pair(su, sv)?;
    let m = su.codes.len() as f64;
    let sum: f64 = su
        .codes
        .iter()
        .zip(&sv.codes)
        .map(|(a, b)| {
            let d = (a - b) as f64;
            d * d
        })
        .sum();
    Ok(su.delta * (sum / m).sqrt())
}

/// ℓ2 distance estimate `g_δ^{-1}(l2_raw)`.
pub fn l2_estimate(su: &Sketch, sv: &Sketch, g: &GDeltaTable) -> Result<f64> {
    let raw = l2_raw(su, sv)?;
    if g.delta() != su.delta {
        return Err(Error::invalid(format!(
            "g table built for delta {} but sketches use {}",
            g.delta(),
            su.delta
        )));
    }
    if raw == 0.0 {
        return Ok(0.0);
    }
    g.inverse(raw)
}

/// The unquantized baseline `√(π/2)/M · ‖Φu − Φv‖₁`.
pub fn unquantized_l1_estimate(proj: &Projector, u: &[f64], v: &[f64]) -> Result<f64> {
    let pu = proj.project(u)?;
    let pv = proj.project(v)?;
    let sum: f64 = pu.iter().zip(&pv).map(|(a, b)| (a - b).abs()).sum();
    Ok((PI / 2.0).sqrt() / proj.m as f64 * sum)
}

/// The unquantized baseline `(1/√M) ‖Φu − Φv‖₂`.
pub fn unquantized_l2_estimate(proj: &Projector, u: &[f64], v: &[f64]) -> Result<f64> {
    let pu = proj.project(u)?;
    let pv = proj.project(v)?;
    let sum: f64 = pu.iter().zip(&pv).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / proj.m as f64).sqrt())
}

/// One-bit mapping `sign(Φx)`; `true` marks a nonnegative projection.
pub fn binary_embed(proj: &Projector, x: &[f64]) -> Result<Vec<bool>> {
    Ok(proj.project(x)?.into_iter().map(|v| v >= 0.0).collect())
}

/// Normalized Hamming distance `(1/M) Σ 𝟙(b1_j ≠ b2_j)`.
pub fn hamming(b1: &[bool], b2: &[bool]) -> Result<f64> {
    if b1.len() != b2.len() {
        return Err(Error::DimensionMismatch {
            expected: b1.len(),
            actual: b2.len(),
        });
    }
    if b1.is_empty() {
        return Err(Error::invalid("hamming distance of empty strings"));
    }
    let diff = b1.iter().zip(b2).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / b1.len() as f64)
}

/// Angle between `u` and `v` in radians, in `[0, π]`.
///
/// The expected normalized Hamming distance of the one-bit mapping is this
/// angle divided by `π`; callers comparing the two divide explicitly.
pub fn angular(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::invalid("angular distance needs nonzero vectors"));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0).acos())
}

/// Euclidean distance.
pub fn distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// A finite point cloud with its separation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::invalid("point set is empty or zero-dimensional"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
        }
        Ok(Self { points, dim })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All unordered index pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let s = self.points.len();
        (0..s).flat_map(move |i| (i + 1..s).map(move |j| (i, j)))
    }

    fn pair_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs()
            .map(|(i, j)| distance(&self.points[i], &self.points[j]))
    }

    /// Smallest nonzero pairwise distance; `None` with fewer than two
    /// distinct points.
    pub fn nu(&self) -> Option<f64> {
        self.pair_distances()
            .filter(|&d| d > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Largest pairwise distance.
    pub fn diam(&self) -> f64 {
        self.pair_distances().fold(0.0, f64::max)
    }

    pub fn mean_distance(&self) -> f64 {
        let (sum, count) = self
            .pair_distances()
            .fold((0.0, 0usize), |(s, c), d| (s + d, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}
