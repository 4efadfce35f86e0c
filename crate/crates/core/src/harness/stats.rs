//! Small statistics helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Median of a sample; `NaN` entries are not allowed.
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Ordinary least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("line fit needs two or more paired values"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("line fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Band `|err| ≤ (c · scale + c′ · unit) · ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandFit {
    pub c: f64,
    pub c_prime: f64,
    pub coverage: f64,
}

/// One observation for [`fit_band`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub abs_err: f64,
    pub scale: f64,
    pub unit: f64,
    pub epsilon: f64,
}

impl BandFit {
    pub fn covers(&self, p: &BandPoint) -> bool {
        p.abs_err <= (self.c * p.scale + self.c_prime * p.unit) * p.epsilon * (1.0 + 1e-12)
    }
}

/// Smallest `c + c′` whose band covers at least `target` of the points.
///
/// Candidate `c` values are quantiles of `|err| / (scale ε)`; for each, `c′`
/// is the `target` quantile of the remaining additive need.
pub fn fit_band(points: &[BandPoint], target: f64) -> Result<BandFit> {
    if points.is_empty() {
        return Err(Error::invalid("band fit needs observations"));
    }
    let ratios: Vec<f64> = points
        .iter()
        .filter(|p| p.scale > 0.0 && p.epsilon > 0.0)
        .map(|p| p.abs_err / (p.scale * p.epsilon))
        .collect();
    let mut candidates = vec![0.0];
    candidates.extend((0..=100).map(|i| quantile(&ratios, i as f64 / 100.0)));
    let mut best: Option<BandFit> = None;
    for c in candidates.into_iter().filter(|c| c.is_finite()) {
        let needs: Vec<f64> = points
            .iter()
            .map(|p| {
                let rest = p.abs_err / p.epsilon - c * p.scale;
                if rest <= 0.0 {
                    0.0
                } else if p.unit > 0.0 {
                    rest / p.unit
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let c_prime = upper_quantile(&needs, target);
        if !c_prime.is_finite() {
            continue;
        }
        if best.map_or(true, |b| c + c_prime < b.c + b.c_prime) {
            best = Some(BandFit {
                c,
                c_prime,
                coverage: 0.0,
            });
        }
    }
    let mut fit =
        best.ok_or_else(|| Error::Numerical("no finite band covers the target".into()))?;
    fit.coverage = points.iter().filter(|p| fit.covers(p)).count() as f64 / points.len() as f64;
    Ok(fit)
}

/// Smallest sample value with at least a `q` fraction at or below it.
fn upper_quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Standard deviation of a binomial proportion.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n as f64).sqrt()
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
