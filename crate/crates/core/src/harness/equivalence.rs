//! Monte Carlo checks that run through the embedding path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats;
use crate::buffon::{build_pmf, tv_distance, BuffonParams, Histogram};
use crate::embedding::{embed, l1_estimate, Projector, RowModel};
use crate::error::{Error, Result};
use crate::gdelta::mixture_second_moment;
use crate::rng;

/// Rows drawn per projector when sampling code differences.
pub const ROWS_PER_CHUNK: usize = 4096;

/// Histogram of `|k_j(u) − k_j(v)|` over `samples` rows, drawn as
/// projectors of at most [`ROWS_PER_CHUNK`] rows with derived seeds.
pub fn difference_histogram(
    dim: usize,
    delta: f64,
    u: &[f64],
    v: &[f64],
    row_model: RowModel,
    samples: u64,
    seed: u64,
) -> Result<Histogram> {
    if samples == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let chunk = ROWS_PER_CHUNK as u64;
    let chunks = samples.div_ceil(chunk);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let rows = chunk.min(samples - c * chunk) as usize;
            let proj = Projector::new(rows, dim, delta, rng::derive_seed(seed, &[c]), row_model)?;
            let su = embed(&proj, u)?;
            let sv = embed(&proj, v)?;
            let mut h = Histogram::default();
            for (a, b) in su.codes().iter().zip(sv.codes()) {
                h.record((a - b).unsigned_abs() as usize);
            }
            Ok(h)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts
        .iter()
        .fold(Histogram::default(), |acc, h| acc.merge(h)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceResult {
    pub a: f64,
    pub dim: u32,
    pub samples: u64,
    pub tv: f64,
    pub counts: Vec<u64>,
    pub pmf: Vec<f64>,
}

/// Total-variation distance between code differences of rows of norm
/// `√N` and `Buffon(a, N)`: `u = 0`, `v = (a/√N) e₁`, `δ = 1`.
pub fn check_equivalence(a: f64, dim: u32, samples: u64, seed: u64) -> Result<EquivalenceResult> {
    let params = BuffonParams::new(a, dim)?;
    let pmf = build_pmf(params)?;
    let n = dim as usize;
    let u = vec![0.0; n];
    let mut v = vec![0.0; n];
    v[0] = a / f64::from(dim).sqrt();
    let hist = difference_histogram(n, 1.0, &u, &v, RowModel::UniformSphere, samples, seed)?;
    Ok(EquivalenceResult {
        a,
        dim,
        samples,
        tv: tv_distance(&hist, &pmf),
        counts: hist.counts().to_vec(),
        pmf: pmf.probabilities().to_vec(),
    })
}

/// A Monte Carlo mean with its standard error and the predicted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCheck {
    pub mean: f64,
    pub se: f64,
    pub expected: f64,
}

impl MeanCheck {
    /// Deviation in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.expected).abs() / self.se
    }
}

/// Mean of the ℓ1 estimator over `trials` fresh single-row projectors.
///
/// The prediction is `‖u − v‖` scaled by `E|⟨φ, w⟩| / (√(2/π)‖w‖)`, which
/// is 1 for Gaussian rows and `√N τ_N / √(2/π)` for sphere rows.
pub fn l1_expectation(
    u: &[f64],
    v: &[f64],
    delta: f64,
    row_model: RowModel,
    trials: usize,
    seed: u64,
) -> Result<MeanCheck> {
    if trials < 2 {
        return Err(Error::invalid("need at least two trials"));
    }
    let n = u.len();
    let ests = (0..trials)
        .into_par_iter()
        .map(|t| {
            let p = Projector::new(1, n, delta, rng::derive_seed(seed, &[t as u64]), row_model)?;
            l1_estimate(&embed(&p, u)?, &embed(&p, v)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, se) = stats::mean_and_se(&ests);
    let dist = crate::embedding::distance(u, v);
    let ratio = row_model.mean_abs_projection(n as u32)? / std::f64::consts::FRAC_2_PI.sqrt();
    Ok(MeanCheck {
        mean,
        se,
        expected: ratio * dist,
    })
}

/// `E X²` of the code difference with Gaussian rows at distance `lambda`,
/// in units of `δ²`, against the mixture quadrature.
pub fn second_moment_mc(
    dim: u32,
    delta: f64,
    lambda: f64,
    samples: u64,
    seed: u64,
) -> Result<MeanCheck> {
    let n = dim as usize;
    let u = vec![0.0; n];
    let mut v = vec![0.0; n];
    v[0] = lambda;
    let h = difference_histogram(n, delta, &u, &v, RowModel::Gaussian, samples, seed)?;
    let m2 = h.raw_moment(2);
    let m4 = h.raw_moment(4);
    Ok(MeanCheck {
        mean: m2,
        se: ((m4 - m2 * m2).max(0.0) / (h.total() as f64 - 1.0)).sqrt(),
        expected: mixture_second_moment(lambda / delta, dim)?,
    })
}
