//! Gamma-ratio special functions.
//!
//! Every ratio is evaluated in log space so that dimensions in the thousands
//! stay finite (`Γ(N/2)` alone overflows near `N = 343`).

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

fn check_dim(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {n}")));
    }
    Ok(())
}

/// Expected number of grid crossings per unit (normalized) needle length in
/// dimension `n`: `Γ(n/2) / (√π Γ((n+1)/2))`.
pub fn tau(n: u32) -> Result<f64> {
    check_dim(n)?;
    let half = f64::from(n) / 2.0;
    Ok((ln_gamma(half) - ln_gamma(half + 0.5) - LN_SQRT_PI).exp())
}

/// `χ_N(x) = Γ(x + 1/2) Γ(N/2) / (√π Γ(N/2 + x))`.
///
/// `χ_N(0) = 1`, `χ_N(1/2) = τ_N` and `χ_N(1) = 1/N`.
pub fn chi(n: u32, x: f64) -> Result<f64> {
    check_dim(n)?;
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::invalid(format!(
            "chi requires finite x >= 0, got {x}"
        )));
    }
    let half = f64::from(n) / 2.0;
    Ok((ln_gamma(x + 0.5) + ln_gamma(half) - ln_gamma(half + x) - LN_SQRT_PI).exp())
}

/// Raw moment `E R^q` of the chi distribution with `n` degrees of freedom,
/// i.e. of the Euclidean norm of a standard normal `n`-vector.
pub fn chi_moment(n: u32, q: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("chi distribution needs n >= 1"));
    }
    if q == 0 {
        return Ok(1.0);
    }
    let (n, q) = (f64::from(n), f64::from(q));
    Ok((0.5 * q * 2f64.ln() + ln_gamma((n + q) / 2.0) - ln_gamma(n / 2.0)).exp())
}

/// Density of the chi distribution with `n` degrees of freedom.
pub(crate) fn chi_density(n: u32, r: f64) -> f64 {
    if r <= 0.0 {
        return if n == 1 { (2.0 / PI).sqrt() } else { 0.0 };
    }
    let n = f64::from(n);
    let ln = (1.0 - n / 2.0) * 2f64.ln() + (n - 1.0) * r.ln() - 0.5 * r * r - ln_gamma(n / 2.0);
    ln.exp()
}

/// Mean and standard deviation of the chi distribution.
pub(crate) fn chi_mean_sd(n: u32) -> (f64, f64) {
    let mean = chi_moment(n, 1).expect("n >= 1");
    let var = (f64::from(n) - mean * mean).max(0.0);
    (mean, var.sqrt())
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}
