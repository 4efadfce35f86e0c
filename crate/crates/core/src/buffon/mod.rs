//! The N-dimensional Buffon needle distribution.
//!
//! A needle of normalized length `a = L/δ` thrown uniformly at random (in
//! position and orientation) on a grid of parallel hyperplanes of `R^N`,
//! spaced `δ` apart, crosses `X ∈ {0, …, ⌊a⌋ + 1}` of them. This module
//! computes the exact law of `X`, its moments, the known moment bounds, and
//! two independent samplers.

mod moments;
mod sampling;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special::tau;

pub use moments::{
    kappa_sum_bounds, moment, moment_bounds, moment_by_parts, moment_direct, second_difference,
    KappaSumBounds, MomentBounds,
};
pub use sampling::{mc_sample, sample, tv_distance, Histogram};

/// Absolute tolerance of every `J_N` quadrature.
pub const QUAD_TOL: f64 = 1e-13;
/// Round-off allowance for negative probabilities before they are clamped.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Maximum normalization defect tolerated before renormalizing.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Required agreement between the two `κ_k` formulas.
pub const KAPPA_AGREEMENT_TOL: f64 = 1e-10;

/// Needle length (in grid spacings) and ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuffonParams {
    a: f64,
    dim: u32,
}

impl BuffonParams {
    pub fn new(a: f64, dim: u32) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid(format!(
                "needle length a must be finite and > 0, got {a}"
            )));
        }
        if dim < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(Self { a, dim })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// `n = ⌊a⌋`, the largest index with a well-defined crossing angle.
    pub fn support_bound(&self) -> usize {
        self.a.floor() as usize
    }

    /// `cos θ_k`, clamped to `[0, 1]` per the angle convention: `θ_k = π/2`
    /// for `k < 0` and `θ_k = 0` for `k > n`.
    fn cos_theta(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            (k as f64 / self.a).min(1.0)
        }
    }
}

/// `J_N(α) = (N − 1) ∫_0^α sin^{N−2} θ dθ` for `α ∈ [0, π/2]`.
pub fn j_n(dim: u32, alpha: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {dim}")));
    }
    if !(0.0..=FRAC_PI_2).contains(&alpha) {
        return Err(Error::invalid(format!(
            "J_N needs alpha in [0, pi/2], got {alpha}"
        )));
    }
    Ok(j_piece(dim, 0.0, alpha))
}

fn j_piece(dim: u32, lo: f64, hi: f64) -> f64 {
    let p = (dim - 2) as i32;
    let scale = f64::from(dim - 1);
    scale * quadrature::adaptive(|t: f64| t.sin().powi(p), lo, hi, QUAD_TOL / scale)
}

/// The exact pmf of `Buffon(a, N)` together with the intermediate `θ_k` and
/// `κ_k` sequences it was assembled from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuffonPmf {
    params: BuffonParams,
    n: usize,
    tau: f64,
    /// θ_0 … θ_n
    theta: Vec<f64>,
    /// κ_{−1} … κ_{n+1}, stored with an offset of one.
    kappa: Vec<f64>,
    /// p_0 … p_{n+1}
    p: Vec<f64>,
}

impl BuffonPmf {
    pub fn params(&self) -> BuffonParams {
        self.params
    }

    /// The support bound `n = ⌊a⌋`; the support is `{0, …, n + 1}`.
    pub fn support_bound(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `κ_k` for `k ∈ [−1, n + 1]`; zero beyond `n + 1`, as the sequence is
    /// constant there.
    pub fn kappa(&self, k: i64) -> f64 {
        if k > self.n as i64 + 1 {
            return 0.0;
        }
        assert!(k >= -1, "kappa index below -1");
        self.kappa[(k + 1) as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// `P(X = k)`, zero outside the support.
    pub fn prob(&self, k: usize) -> f64 {
        self.p.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Assembles the pmf of `Buffon(a, N)` from the `κ_k` sequence:
/// `p_k = κ_{k+1} + κ_{k−1} − 2 κ_k` with
/// `κ_k = τ_N a sin^{N−1} θ_k − k τ_N J_N(θ_k)` and `cos θ_k = k / a`.
pub fn build_pmf(params: BuffonParams) -> Result<BuffonPmf> {
    let dim = params.dim;
    let a = params.a;
    let n = params.support_bound();
    let tau = tau(dim)?;

    let cosines: Vec<f64> = (0..=n as i64).map(|k| params.cos_theta(k)).collect();
    let theta: Vec<f64> = cosines.iter().map(|c| c.acos()).collect();

    // J_N(θ_k) accumulated from the smallest angle (k = n) up to θ_0 = π/2.
    let mut j_vals = vec![0.0; n + 1];
    let mut acc = j_piece(dim, 0.0, theta[n]);
    j_vals[n] = acc;
    for k in (0..n).rev() {
        acc += j_piece(dim, theta[k + 1], theta[k]);
        j_vals[k] = acc;
    }
    let j_half_pi = j_vals[0];

    let mut kappa = Vec::with_capacity(n + 3);
    // κ_{−1}: θ = π/2
    kappa.push(tau * a + tau * j_half_pi);
    for k in 0..=n {
        let c = cosines[k];
        let sin = ((1.0 - c) * (1.0 + c)).max(0.0).sqrt();
        let kf = k as f64;
        kappa.push(tau * a * sin.powi(dim as i32 - 1) - kf * tau * j_vals[k]);
    }
    // κ_{n+1}: θ = 0
    kappa.push(0.0);

    let kap = |k: i64| -> f64 {
        if k > n as i64 + 1 {
            0.0
        } else {
            kappa[(k + 1) as usize]
        }
    };
    let mut p: Vec<f64> = (0..=n as i64 + 1)
        .map(|k| kap(k + 1) + kap(k - 1) - 2.0 * kap(k))
        .collect();

    for (k, pk) in p.iter_mut().enumerate() {
        if *pk < -NEGATIVE_CLAMP {
            return Err(Error::Numerical(format!(
                "p_{k} = {pk:e} for a = {a}, N = {dim}"
            )));
        }
        if *pk < 0.0 {
            *pk = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Numerical(format!(
            "pmf sums to {total} for a = {a}, N = {dim}"
        )));
    }
    p.iter_mut().for_each(|x| *x /= total);

    Ok(BuffonPmf {
        params,
        n,
        tau,
        theta,
        kappa,
        p,
    })
}

/// `κ_k` from its integral representation
/// `τ_N a (N − 1) ∫_0^1 (1 − u²)^{(N−3)/2} (u − k/a)_+ du`.
///
/// The substitution `u = 1 − s²` removes the endpoint singularity of the
/// weight for `N = 2`; the kink at `u = k/a` becomes the upper limit.
/// The result is checked against the θ-form of [`build_pmf`].
pub fn kappa_alt(params: BuffonParams, k: usize) -> Result<f64> {
    let n = params.support_bound();
    if k > n {
        return Err(Error::invalid(format!(
            "kappa_alt needs k <= floor(a) = {n}, got {k}"
        )));
    }
    let value = kappa_integral(params, k)?;
    let pmf = build_pmf(params)?;
    let theta_form = pmf.kappa(k as i64);
    if (value - theta_form).abs() > KAPPA_AGREEMENT_TOL {
        return Err(Error::Numerical(format!(
            "kappa_{k}: integral form {value:e} vs theta form {theta_form:e}"
        )));
    }
    Ok(value)
}

/// The integral form of `κ_k` without the cross-check.
pub fn kappa_integral(params: BuffonParams, k: usize) -> Result<f64> {
    let dim = params.dim;
    let a = params.a;
    let tau = tau(dim)?;
    let c = (k as f64 / a).min(1.0);
    let s_max = (1.0 - c).sqrt();
    let half_exp = (f64::from(dim) - 3.0) / 2.0;
    let p = (dim - 2) as i32;
    let scale = tau * a * f64::from(dim - 1);
    // du = 2 s ds and 1 − u² = s² (2 − s²)
    let f = |s: f64| {
        let s2 = s * s;
        2.0 * s.powi(p) * (2.0 - s2).powf(half_exp) * (1.0 - s2 - c)
    };
    Ok(scale * quadrature::adaptive(f, 0.0, s_max, QUAD_TOL / scale.max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pmf(a: f64, dim: u32) -> BuffonPmf {
        build_pmf(BuffonParams::new(a, dim).unwrap()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(BuffonParams::new(0.0, 3).is_err());
        assert!(BuffonParams::new(-1.0, 3).is_err());
        assert!(BuffonParams::new(f64::INFINITY, 3).is_err());
        assert!(BuffonParams::new(f64::NAN, 3).is_err());
        assert!(BuffonParams::new(1.0, 1).is_err());
        assert_eq!(BuffonParams::new(2.7, 3).unwrap().support_bound(), 2);
    }

    #[test]
    fn j_n_values() {
        assert!((j_n(2, PI / 2.0).unwrap() - PI / 2.0).abs() < 1e-13);
        assert_eq!(j_n(7, 0.0).unwrap(), 0.0);
        // N = 3: 2 ∫ sin = 2 (1 − cos α)
        assert!((j_n(3, PI / 3.0).unwrap() - 1.0).abs() < 1e-13);
        assert!(j_n(3, -0.1).is_err());
        assert!(j_n(3, 1.6).is_err());
        assert!(j_n(1, 0.5).is_err());
    }

    #[test]
    fn j_n_at_right_angle_is_inverse_tau() {
        for dim in [2u32, 3, 4, 10, 57, 100, 400] {
            let j = j_n(dim, PI / 2.0).unwrap();
            assert!((j * tau(dim).unwrap() - 1.0).abs() < 1e-12, "N = {dim}");
        }
    }

    #[test]
    fn j_n_nondecreasing() {
        let mut last = 0.0;
        for i in 0..=50 {
            let j = j_n(6, PI / 2.0 * i as f64 / 50.0).unwrap();
            assert!(j >= last);
            last = j;
        }
    }

    #[test]
    fn short_needle_two_dimensions() {
        let p = pmf(0.5, 2);
        assert_eq!(p.support_bound(), 0);
        assert!((p.prob(1) - 1.0 / PI).abs() < 1e-12);
        assert!((p.prob(0) - (1.0 - 1.0 / PI)).abs() < 1e-12);
    }

    #[test]
    fn short_needle_three_dimensions() {
        let p = pmf(0.5, 3);
        assert!((p.prob(1) - 0.25).abs() < 1e-12);
        assert!((p.prob(0) - 0.75).abs() < 1e-12);
        assert_eq!(p.prob(2), 0.0);
    }

    #[test]
    fn planar_kappa_closed_form() {
        // κ_k = (2a sin θ_k)/π − (2k θ_k)/π in the plane
        let a = 3.7;
        let p = pmf(a, 2);
        for k in 0..=3i64 {
            let th = (k as f64 / a).acos();
            let expect = 2.0 * a * th.sin() / PI - 2.0 * k as f64 * th / PI;
            assert!((p.kappa(k) - expect).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn integer_length_has_empty_top_bin() {
        let p = pmf(2.0, 3);
        assert_eq!(p.support_bound(), 2);
        assert!(p.prob(3).abs() < 1e-15);
        assert!(p.kappa(2).abs() < 1e-15);
    }

    #[test]
    fn pmf_is_continuous_across_integer_lengths() {
        let below = pmf(2.0 - 1e-9, 4);
        let at = pmf(2.0, 4);
        let above = pmf(2.0 + 1e-9, 4);
        for k in 0..4 {
            assert!((below.prob(k) - at.prob(k)).abs() < 1e-7);
            assert!((above.prob(k) - at.prob(k)).abs() < 1e-7);
        }
    }

    #[test]
    fn kappa_alt_special_values() {
        let p = BuffonParams::new(1.0, 3).unwrap();
        assert!(kappa_alt(p, 1).unwrap().abs() < 1e-12);
        for (a, dim) in [(0.3, 2), (2.5, 5), (7.1, 12)] {
            let params = BuffonParams::new(a, dim).unwrap();
            let k0 = kappa_alt(params, 0).unwrap();
            assert!((k0 - tau(dim).unwrap() * a).abs() < 1e-12);
        }
        let a = 2.0;
        let th = (0.5f64).acos();
        let expect = 2.0 * a / PI * th.sin() - 2.0 / PI * th;
        let got = kappa_alt(BuffonParams::new(a, 2).unwrap(), 1).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn kappa_alt_rejects_out_of_range() {
        let p = BuffonParams::new(2.5, 3).unwrap();
        assert!(kappa_alt(p, 3).is_err());
    }
}
