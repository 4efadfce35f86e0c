//! Pairwise distortion sweeps over the embedded dimension `M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::{self, BandFit, BandPoint, LineFit};
use crate::embedding::{
    angular, binary_embed, hamming, l1_estimate, l2_estimate, l2_raw, quantize_projection,
    PointSet, Projector, Sketch,
};
use crate::error::{Error, Result};
use crate::gdelta::GDeltaTable;

/// Pairs closer than this are left out of multiplicative statistics.
pub const SEPARATION_FLOOR: f64 = 1e-9;
/// Target coverage of fitted bands.
pub const BAND_COVERAGE: f64 = 0.95;

/// Which estimator a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1,
    L2,
}

/// One `(M, trial, pair)` observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub m: usize,
    pub trial: usize,
    pub i: usize,
    pub j: usize,
    pub true_dist: f64,
    /// quantized estimate of the distance
    pub estimate: f64,
    /// the same estimator on the unquantized projections
    pub unquantized: f64,
    /// `(1/√M)‖ψ(u) − ψ(v)‖₂` (ℓ2 runs)
    pub l2_raw: Option<f64>,
    /// `g_δ(true_dist)` (ℓ2 runs)
    pub g_true: Option<f64>,
    pub hamming: Option<f64>,
    /// angle between the points divided by `π`
    pub angle_over_pi: Option<f64>,
}

/// Per-`M` summary; every "worst" value is the median over trials of the
/// maximum over pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MAggregate {
    pub m: usize,
    /// `√(2 ln S / M)`
    pub epsilon: f64,
    pub worst_abs_error: f64,
    pub worst_rel_error: f64,
    pub worst_unquantized_rel_error: f64,
    pub worst_quantization_gap: f64,
    /// share of squared error due to quantization
    pub additive_share: f64,
    /// `√|raw² − g_δ(true)²|` (ℓ2 runs)
    pub worst_l2_residual: Option<f64>,
    /// `|raw − g_δ(true)|` (ℓ2 runs)
    pub worst_l2_direct: Option<f64>,
    pub worst_hamming_gap: Option<f64>,
}

/// Fitted decay rates and band constants of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub metric: Metric,
    pub delta: f64,
    pub nu: f64,
    pub diam: f64,
    pub abs_error_slope: LineFit,
    pub l2_residual_slope: Option<LineFit>,
    pub l2_direct_slope: Option<LineFit>,
    /// `|est − true| ≤ (c·true + c′·δ)·ε`
    pub band: BandFit,
    /// ℓ2 runs: `|raw² − g²| ≤ (c·g² + c′·δ²)·ε`
    pub l2_band: Option<BandFit>,
    pub additive_share: f64,
    /// worst absolute error never grows with `M`
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<PairRecord>,
    pub aggregates: Vec<MAggregate>,
    pub summary: Summary,
}

/// `√(2 ln S / M)`, the per-draw precision scale of a sweep.
pub fn sweep_epsilon(points: usize, m: usize) -> f64 {
    (2.0 * (points as f64).ln() / m as f64).sqrt()
}

struct Cell<'a> {
    points: &'a PointSet,
    delta: f64,
    metric: Metric,
    g: Option<&'a GDeltaTable>,
    binary: bool,
}

impl Cell<'_> {
    fn run(&self, cfg: &ExperimentConfig, m: usize, trial: usize) -> Result<Vec<PairRecord>> {
        let proj = Projector::new(
            m,
            cfg.dim,
            self.delta,
            cfg.projector_seed(m, trial),
            cfg.row_model,
        )?;
        let pts = self.points.points();
        let projected = pts
            .iter()
            .map(|x| proj.project(x))
            .collect::<Result<Vec<_>>>()?;
        let sketches = projected
            .iter()
            .map(|y| quantize_projection(&proj, y))
            .collect::<Result<Vec<Sketch>>>()?;
        let signs = if self.binary {
            Some(
                pts.iter()
                    .map(|x| binary_embed(&proj, x))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let mf = m as f64;
        let half_pi_sqrt = (std::f64::consts::PI / 2.0).sqrt();
        self.points
            .pairs()
            .map(|(i, j)| {
                let true_dist = crate::embedding::distance(&pts[i], &pts[j]);
                let (yi, yj) = (&projected[i], &projected[j]);
                let (estimate, unquantized, raw, g_true) = match self.metric {
                    Metric::L1 => {
                        let unq = half_pi_sqrt / mf
                            * yi.iter().zip(yj).map(|(a, b)| (a - b).abs()).sum::<f64>();
                        (l1_estimate(&sketches[i], &sketches[j])?, unq, None, None)
                    }
                    Metric::L2 => {
                        let g = self
                            .g
                            .ok_or_else(|| Error::invalid("l2 sweep needs a g table"))?;
                        let unq = (yi
                            .iter()
                            .zip(yj)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            / mf)
                            .sqrt();
                        (
                            l2_estimate(&sketches[i], &sketches[j], g)?,
                            unq,
                            Some(l2_raw(&sketches[i], &sketches[j])?),
                            Some(g.eval(true_dist)?),
                        )
                    }
                };
                let (ham, ang) = match &signs {
                    Some(s) if true_dist > 0.0 => (
                        Some(hamming(&s[i], &s[j])?),
                        angular(&pts[i], &pts[j])
                            .ok()
                            .map(|a| a / std::f64::consts::PI),
                    ),
                    _ => (None, None),
                };
                Ok(PairRecord {
                    m,
                    trial,
                    i,
                    j,
                    true_dist,
                    estimate,
                    unquantized,
                    l2_raw: raw,
                    g_true,
                    hamming: ham,
                    angle_over_pi: ang,
                })
            })
            .collect()
    }
}

fn sweep(
    cfg: &ExperimentConfig,
    metric: Metric,
    g: Option<&GDeltaTable>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let points = cfg.generate_points()?;
    let delta = cfg.delta.resolve(&points)?;
    if let Some(g) = g {
        if g.delta() != delta || g.dim() as usize != cfg.dim {
            return Err(Error::invalid(format!(
                "g table is for (N = {}, delta = {}) but the run uses (N = {}, delta = {delta})",
                g.dim(),
                g.delta(),
                cfg.dim
            )));
        }
    }
    let cell = Cell {
        points: &points,
        delta,
        metric,
        g,
        binary: cfg.binary,
    };
    let jobs: Vec<(usize, usize)> = cfg
        .m_sweep
        .iter()
        .flat_map(|&m| (0..cfg.trials).map(move |t| (m, t)))
        .collect();
    let records: Vec<PairRecord> = jobs
        .par_iter()
        .map(|&(m, t)| cell.run(cfg, m, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let aggregates = aggregate(cfg, &records);
    let summary = summarize(cfg, metric, &points, delta, &records, &aggregates)?;
    Ok(ExperimentReport {
        config: cfg.clone(),
        records,
        aggregates,
        summary,
    })
}

/// ℓ1 sweep: `√(π/2)/M ‖ψ(u) − ψ(v)‖₁` against `‖u − v‖`.
pub fn run_distortion(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    sweep(cfg, Metric::L1, None)
}

/// ℓ2 sweep: `raw = (1/√M)‖ψ(u) − ψ(v)‖₂` against `g_δ(‖u − v‖)`, plus the
/// inverted estimate against `‖u − v‖`.
pub fn run_l2_distortion(cfg: &ExperimentConfig, g: &GDeltaTable) -> Result<ExperimentReport> {
    sweep(cfg, Metric::L2, Some(g))
}

fn worst_by_trial<F: Fn(&PairRecord) -> Option<f64>>(
    recs: &[&PairRecord],
    trials: usize,
    f: F,
) -> Option<f64> {
    let mut per_trial = vec![f64::NEG_INFINITY; trials];
    let mut seen = false;
    for r in recs {
        if let Some(v) = f(r) {
            per_trial[r.trial] = per_trial[r.trial].max(v);
            seen = true;
        }
    }
    seen.then(|| stats::median(&per_trial))
}

fn share(recs: &[&PairRecord]) -> f64 {
    let (q, j) = recs.iter().fold((0.0, 0.0), |(q, j), r| {
        (
            q + (r.estimate - r.unquantized).powi(2),
            j + (r.unquantized - r.true_dist).powi(2),
        )
    });
    if q + j == 0.0 {
        0.0
    } else {
        q / (q + j)
    }
}

fn aggregate(cfg: &ExperimentConfig, records: &[PairRecord]) -> Vec<MAggregate> {
    cfg.m_sweep
        .iter()
        .map(|&m| {
            let recs: Vec<&PairRecord> = records.iter().filter(|r| r.m == m).collect();
            let t = cfg.trials;
            let sep = |r: &PairRecord| r.true_dist >= SEPARATION_FLOOR;
            MAggregate {
                m,
                epsilon: sweep_epsilon(cfg.points, m),
                worst_abs_error: worst_by_trial(&recs, t, |r| {
                    Some((r.estimate - r.true_dist).abs())
                })
                .unwrap_or(0.0),
                worst_rel_error: worst_by_trial(&recs, t, |r| {
                    sep(r).then(|| (r.estimate - r.true_dist).abs() / r.true_dist)
                })
                .unwrap_or(0.0),
                worst_unquantized_rel_error: worst_by_trial(&recs, t, |r| {
                    sep(r).then(|| (r.unquantized - r.true_dist).abs() / r.true_dist)
                })
                .unwrap_or(0.0),
                worst_quantization_gap: worst_by_trial(&recs, t, |r| {
                    Some((r.estimate - r.unquantized).abs())
                })
                .unwrap_or(0.0),
                additive_share: share(&recs),
                worst_l2_residual: worst_by_trial(&recs, t, |r| {
                    Some((r.l2_raw?.powi(2) - r.g_true?.powi(2)).abs().sqrt())
                }),
                worst_l2_direct: worst_by_trial(&recs, t, |r| Some((r.l2_raw? - r.g_true?).abs())),
                worst_hamming_gap: worst_by_trial(&recs, t, |r| {
                    Some((r.hamming? - r.angle_over_pi?).abs())
                }),
            }
        })
        .collect()
}

fn optional_slope(ms: &[f64], ys: Option<Vec<f64>>) -> Option<LineFit> {
    ys.filter(|_| ms.len() >= 2)
        .and_then(|ys| stats::log_log_slope(ms, &ys).ok())
}

fn summarize(
    cfg: &ExperimentConfig,
    metric: Metric,
    points: &PointSet,
    delta: f64,
    records: &[PairRecord],
    aggregates: &[MAggregate],
) -> Result<Summary> {
    let ms: Vec<f64> = aggregates.iter().map(|a| a.m as f64).collect();
    let abs: Vec<f64> = aggregates.iter().map(|a| a.worst_abs_error).collect();
    let abs_error_slope = if ms.len() >= 2 && abs.iter().all(|v| *v > 0.0) {
        stats::log_log_slope(&ms, &abs)?
    } else {
        LineFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
        }
    };
    let residual: Option<Vec<f64>> = aggregates.iter().map(|a| a.worst_l2_residual).collect();
    let direct: Option<Vec<f64>> = aggregates.iter().map(|a| a.worst_l2_direct).collect();

    let band_points: Vec<BandPoint> = records
        .iter()
        .map(|r| BandPoint {
            abs_err: (r.estimate - r.true_dist).abs(),
            scale: r.true_dist,
            unit: delta,
            epsilon: sweep_epsilon(cfg.points, r.m),
        })
        .collect();
    let band = stats::fit_band(&band_points, BAND_COVERAGE)?;
    let l2_band = if metric == Metric::L2 {
        let pts: Vec<BandPoint> = records
            .iter()
            .filter_map(|r| {
                let (raw, g) = (r.l2_raw?, r.g_true?);
                Some(BandPoint {
                    abs_err: (raw * raw - g * g).abs(),
                    scale: g * g,
                    unit: delta * delta,
                    epsilon: sweep_epsilon(cfg.points, r.m),
                })
            })
            .collect();
        Some(stats::fit_band(&pts, BAND_COVERAGE)?)
    } else {
        None
    };
    let all: Vec<&PairRecord> = records.iter().collect();
    Ok(Summary {
        metric,
        delta,
        nu: points.nu().unwrap_or(0.0),
        diam: points.diam(),
        abs_error_slope,
        l2_residual_slope: optional_slope(&ms, residual),
        l2_direct_slope: optional_slope(&ms, direct),
        band,
        l2_band,
        additive_share: share(&all),
        monotone: abs.windows(2).all(|w| w[1] <= w[0]),
    })
}
