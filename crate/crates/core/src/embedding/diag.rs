use rayon::prelude::*;
use serde::Serialize;

use super::{dot, Projector};
use crate::error::{Error, Result};
use crate::rng::{self, Gaussian};

const CHUNK: u64 = 1 << 14;
const DIAG_STREAM: u64 = 0x5d1a_6000;

/// Empirical behaviour of `Z = |Q(⟨φ,u⟩+ξ) − Q(⟨φ,v⟩+ξ)|` against
/// `Y = |⟨φ, u−v⟩|` over fresh draws of `(φ, ξ)`.
#[derive(Debug, Clone, Serialize)]
pub struct SubGaussianReport {
    pub samples: u64,
    pub mean_z: f64,
    /// standard error of `mean_z`
    pub mean_z_se: f64,
    /// `E Z` predicted by the row model
    pub expected_mean_z: f64,
    pub max_abs_z_minus_y: f64,
    pub delta: f64,
    /// `(t, P̂(|Z − Ẑ| > t))`
    pub tail: Vec<(f64, f64)>,
}

impl SubGaussianReport {
    /// `|Z − Y| ≤ 2δ` held on every sample.
    pub fn bound_holds(&self) -> bool {
        self.max_abs_z_minus_y <= 2.0 * self.delta
    }
}

/// Draws `samples` independent rows and dithers shaped like `proj`'s
/// (same `N`, `δ`, row model), seeded from `proj`'s seed.
pub fn subgaussian_diag(
    proj: &Projector,
    u: &[f64],
    v: &[f64],
    samples: u64,
    t_grid: &[f64],
) -> Result<SubGaussianReport> {
    proj.check_dim(u)?;
    proj.check_dim(v)?;
    if samples < 2 {
        return Err(Error::invalid("diagnostics need at least two samples"));
    }
    let n = proj.n();
    let delta = proj.delta();
    let model = proj.row_model();
    let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let seed = rng::derive_seed(proj.seed(), &[DIAG_STREAM]);
    let chunks = samples.div_ceil(CHUNK);

    let zs: Vec<(Vec<f64>, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(samples - c * CHUNK) as usize;
            let mut g = Gaussian::new(rng::stream(seed, c));
            let mut row = vec![0.0; n];
            let mut zs = Vec::with_capacity(len);
            let mut worst = 0.0f64;
            for _ in 0..len {
                model.fill_row(&mut g, &mut row);
                let xi = delta * g.uniform();
                let qu = ((dot(&row, u) + xi) / delta).floor();
                let qv = ((dot(&row, v) + xi) / delta).floor();
                let z = delta * (qu - qv).abs();
                let y = dot(&row, &w).abs();
                worst = worst.max((z - y).abs());
                zs.push(z);
            }
            (zs, worst)
        })
        .collect();

    let max_abs_z_minus_y = zs.iter().map(|c| c.1).fold(0.0, f64::max);
    let all: Vec<f64> = zs.into_iter().flat_map(|c| c.0).collect();
    let count = all.len() as f64;
    let mean_z = all.iter().sum::<f64>() / count;
    let var = all.iter().map(|z| (z - mean_z).powi(2)).sum::<f64>() / (count - 1.0);
    let tail = t_grid
        .iter()
        .map(|&t| {
            let hits = all.iter().filter(|&&z| (z - mean_z).abs() > t).count();
            (t, hits as f64 / count)
        })
        .collect();
    let norm_w = dot(&w, &w).sqrt();
    Ok(SubGaussianReport {
        samples,
        mean_z,
        mean_z_se: (var / count).sqrt(),
        expected_mean_z: model.mean_abs_projection(n as u32)? * norm_w,
        max_abs_z_minus_y,
        delta,
        tail,
    })
}
