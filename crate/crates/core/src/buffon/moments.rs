use super::{BuffonParams, BuffonPmf};
use crate::error::{Error, Result};
use crate::special::{binomial, chi};

/// Relative agreement required between the two moment evaluations.
pub const MOMENT_AGREEMENT_TOL: f64 = 1e-9;
/// Relative slack allowed when checking a moment against its bounds.
pub const BOUND_TOL: f64 = 1e-9;

/// `Δ²(c_{k−1}) = c_{k+1} − 2 c_k + c_{k−1}`.
pub fn second_difference<F: Fn(i64) -> f64>(c: F, k: i64) -> f64 {
    c(k + 1) - 2.0 * c(k) + c(k - 1)
}

/// `Σ_k k^q p_k`.
pub fn moment_direct(pmf: &BuffonPmf, q: u32) -> f64 {
    pmf.probabilities()
        .iter()
        .enumerate()
        .map(|(k, p)| (k as f64).powi(q as i32) * p)
        .sum()
}

/// `E X^q` by summation by parts over the `κ` sequence:
/// `c_0(κ_{−1} − 2κ_0) + c_1 κ_0 + Σ_{k=1}^{n} Δ²(c_{k−1}) κ_k`.
pub fn moment_by_parts(pmf: &BuffonPmf, q: u32) -> f64 {
    let c = |k: i64| -> f64 {
        if q == 0 {
            1.0
        } else {
            (k as f64).powi(q as i32)
        }
    };
    let head = c(0) * (pmf.kappa(-1) - 2.0 * pmf.kappa(0)) + c(1) * pmf.kappa(0);
    let tail: f64 = (1..=pmf.support_bound() as i64)
        .map(|k| second_difference(c, k) * pmf.kappa(k))
        .sum();
    head + tail
}

/// Interval known to contain `E X^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBounds {
    pub lower: f64,
    pub upper: f64,
}

impl MomentBounds {
    pub fn contains(&self, x: f64, rel_tol: f64) -> bool {
        let slack = rel_tol * x.abs().max(1.0);
        x >= self.lower - slack && x <= self.upper + slack
    }

    fn intersect(self, lower: f64, upper: f64) -> Self {
        Self {
            lower: self.lower.max(lower),
            upper: self.upper.min(upper),
        }
    }
}

/// The analytic bounds on `E X^q` for `X ~ Buffon(a, N)`.
///
/// * `a < 1`: `E X^q = τ_N a` exactly.
/// * `q = 2`: `max(τ_N a, a²/N) ≤ E X² ≤ τ_N a + (a² − 1)_+/N`.
/// * `q = 3`: `|E X³ − (τ_N a + χ_N(3/2) a³)| ≤ 3a²/N`.
/// * `q ≥ 4, a ≥ 1`: `|E X^q − (τ_N a + χ_N(q/2) a^q)| ≤ q χ_N((q−1)/2) a^{q−1}
///   + C(q,2)/24 χ_N((q−2)/2) (2a)^{q−2} + C(q,3)/12 χ_N((q−3)/2) (2a)^{q−3}`.
/// * `q ≥ 2`: `E X^q ≤ τ_N a + 2^{q−2} χ_N(q/2) a^q + 2^{q−2} q χ_N((q−1)/2) a^{q−1}`.
/// * `a ≥ 1`: `E X^q ≥ τ_N a`.
pub fn moment_bounds(params: BuffonParams, q: u32) -> Result<MomentBounds> {
    if q == 0 {
        return Ok(MomentBounds {
            lower: 1.0,
            upper: 1.0,
        });
    }
    let dim = params.dim();
    let nf = f64::from(dim);
    let a = params.a();
    let tau = crate::special::tau(dim)?;
    let base = tau * a;
    if q == 1 || a < 1.0 {
        return Ok(MomentBounds {
            lower: base,
            upper: base,
        });
    }
    let qf = f64::from(q);
    let mut b = MomentBounds {
        lower: base,
        upper: f64::INFINITY,
    };
    match q {
        2 => {
            b = b.intersect(base.max(a * a / nf), base + (a * a - 1.0).max(0.0) / nf);
        }
        3 => {
            let centre = base + chi(dim, 1.5)? * a.powi(3);
            let r = 3.0 * a * a / nf;
            b = b.intersect(centre - r, centre + r);
        }
        _ => {
            let centre = base + chi(dim, qf / 2.0)? * a.powf(qf);
            let r = qf * chi(dim, (qf - 1.0) / 2.0)? * a.powf(qf - 1.0)
                + binomial(q, 2) / 24.0 * chi(dim, (qf - 2.0) / 2.0)? * (2.0 * a).powf(qf - 2.0)
                + binomial(q, 3) / 12.0 * chi(dim, (qf - 3.0) / 2.0)? * (2.0 * a).powf(qf - 3.0);
            b = b.intersect(centre - r, centre + r);
        }
    }
    let pow2 = 2f64.powf(qf - 2.0);
    let weak = base
        + pow2 * chi(dim, qf / 2.0)? * a.powf(qf)
        + pow2 * qf * chi(dim, (qf - 1.0) / 2.0)? * a.powf(qf - 1.0);
    Ok(b.intersect(f64::NEG_INFINITY, weak))
}

/// `E X^q` for `q ≥ 1`.
///
/// Computed both as the direct pmf sum and by summation by parts over `κ`;
/// the two must agree, and the value must respect [`moment_bounds`].
pub fn moment(pmf: &BuffonPmf, q: u32) -> Result<f64> {
    if q == 0 {
        return Err(Error::invalid("moment order must be >= 1"));
    }
    let direct = moment_direct(pmf, q);
    let by_parts = moment_by_parts(pmf, q);
    if (direct - by_parts).abs() > MOMENT_AGREEMENT_TOL * direct.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "E X^{q}: direct sum {direct:e} vs summation by parts {by_parts:e}"
        )));
    }
    let bounds = moment_bounds(pmf.params(), q)?;
    if !bounds.contains(direct, BOUND_TOL) {
        return Err(Error::Numerical(format!(
            "E X^{q} = {direct:e} outside [{:e}, {:e}] for a = {}, N = {}",
            bounds.lower,
            bounds.upper,
            pmf.params().a(),
            pmf.params().dim()
        )));
    }
    Ok(direct)
}

/// `2 Σ_{k≥1} κ_k` together with its analytic bracket
/// `a²/N − τ_N a ≤ 2 Σ κ_k ≤ (a² − 1)_+ / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSumBounds {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn kappa_sum_bounds(pmf: &BuffonPmf) -> KappaSumBounds {
    let a = pmf.params().a();
    let nf = f64::from(pmf.params().dim());
    let value = 2.0
        * (1..=pmf.support_bound() as i64)
            .map(|k| pmf.kappa(k))
            .sum::<f64>();
    KappaSumBounds {
        value,
        lower: a * a / nf - pmf.tau() * a,
        upper: (a * a - 1.0).max(0.0) / nf,
    }
}
