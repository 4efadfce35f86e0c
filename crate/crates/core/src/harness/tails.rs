//! Empirical tail curves of the estimators against their concentration
//! bounds.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::binomial_sigma;
use crate::embedding::{angular, binary_embed, distance, embed, hamming, l1_estimate, Projector};
use crate::error::{Error, Result};
use crate::rng;

/// Smallest number of projector draws per tail curve.
pub const MIN_DRAWS: usize = 1000;

const TAIL_STREAM: u64 = 0x7a11;
const BINARY_STREAM: u64 = 0xb17;

/// Which concentration statement a row checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// ℓ1 estimator against `√(π/2) δ · (√(2v/M) ε + β ε²)`
    L1,
    /// normalized Hamming distance against `d_S/π ± ε`
    Hamming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub kind: TailKind,
    pub m: usize,
    pub epsilon: f64,
    pub draws: usize,
    pub violations: usize,
    pub rate: f64,
    /// analytic bound clipped to 1
    pub bound: f64,
    pub sigma: f64,
    /// half-width of the band tested
    pub half_width: f64,
}

impl TailRow {
    /// Empirical rate within three binomial standard deviations of the bound.
    pub fn consistent(&self) -> bool {
        self.rate <= self.bound + 3.0 * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub config: ExperimentConfig,
    pub pair: [usize; 2],
    pub true_dist: f64,
    pub delta: f64,
    pub rows: Vec<TailRow>,
}

/// Bernstein parameters of one row's code difference: `v/M = 4 max(1, α)²`
/// and `β = 2 max(1, α)` with `α = ‖u − v‖/δ`.
pub fn bernstein_half_width(dist: f64, delta: f64, epsilon: f64) -> f64 {
    let s = (dist / delta).max(1.0);
    let v_over_m = 4.0 * s * s;
    let beta = 2.0 * s;
    (PI / 2.0).sqrt() * delta * ((2.0 * v_over_m).sqrt() * epsilon + beta * epsilon * epsilon)
}

fn row(
    kind: TailKind,
    m: usize,
    epsilon: f64,
    errs: &[f64],
    half_width: f64,
    bound: f64,
) -> TailRow {
    let violations = errs.iter().filter(|e| **e > half_width).count();
    let bound = bound.min(1.0);
    TailRow {
        kind,
        m,
        epsilon,
        draws: errs.len(),
        violations,
        rate: violations as f64 / errs.len() as f64,
        bound,
        sigma: binomial_sigma(bound, errs.len() as u64),
        half_width,
    }
}

/// Failure rates of the ℓ1 band and of the one-bit Hamming band for the
/// configured pair, with `cfg.trials` projector draws per `M`.
pub fn tail_curve(cfg: &ExperimentConfig) -> Result<TailReport> {
    cfg.validate()?;
    if cfg.trials < MIN_DRAWS {
        return Err(Error::Config(format!(
            "tail curves need at least {MIN_DRAWS} draws, got {}",
            cfg.trials
        )));
    }
    let points = cfg.generate_points()?;
    let delta = cfg.delta.resolve(&points)?;
    let [i, j] = cfg.tail_pair;
    let (u, v) = (&points.points()[i], &points.points()[j]);
    let dist = distance(u, v);
    let angle = if dist > 0.0 {
        Some(angular(u, v)? / PI)
    } else {
        None
    };

    let mut rows = Vec::new();
    for &m in &cfg.m_sweep {
        let errs: Vec<(f64, Option<f64>)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = rng::derive_seed(cfg.seed, &[TAIL_STREAM, m as u64, t as u64]);
                let p = Projector::new(m, cfg.dim, delta, seed, cfg.row_model)?;
                let l1 = (l1_estimate(&embed(&p, u)?, &embed(&p, v)?)? - dist).abs();
                let ham = match angle {
                    Some(a) => {
                        let seed = rng::derive_seed(cfg.seed, &[BINARY_STREAM, m as u64, t as u64]);
                        let p = Projector::new(m, cfg.dim, delta, seed, cfg.row_model)?;
                        Some((hamming(&binary_embed(&p, u)?, &binary_embed(&p, v)?)? - a).abs())
                    }
                    None => None,
                };
                Ok((l1, ham))
            })
            .collect::<Result<Vec<_>>>()?;
        let l1: Vec<f64> = errs.iter().map(|e| e.0).collect();
        let mf = m as f64;
        for &eps in &cfg.epsilon_grid {
            rows.push(row(
                TailKind::L1,
                m,
                eps,
                &l1,
                bernstein_half_width(dist, delta, eps),
                2.0 * (-eps * eps * mf).exp(),
            ));
        }
        let ham: Option<Vec<f64>> = errs.iter().map(|e| e.1).collect();
        if let Some(ham) = ham {
            for &eps in &cfg.epsilon_grid {
                rows.push(row(
                    TailKind::Hamming,
                    m,
                    eps,
                    &ham,
                    eps,
                    2.0 * (-2.0 * eps * eps * mf).exp(),
                ));
            }
        }
    }
    Ok(TailReport {
        config: cfg.clone(),
        pair: cfg.tail_pair,
        true_dist: dist,
        delta,
        rows,
    })
}
