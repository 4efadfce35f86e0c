use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BuffonParams, BuffonPmf};
use crate::error::{Error, Result};
use crate::rng::{self, Gaussian};

/// Throws simulated per random stream; fixes the work split so results are
/// independent of the thread count.
const CHUNK: u64 = 1 << 16;

/// Empirical distribution of crossing counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn record(&mut self, k: usize) {
        if k >= self.counts.len() {
            self.counts.resize(k + 1, 0);
        }
        self.counts[k] += 1;
    }

    pub fn merge(mut self, other: &Histogram) -> Self {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.counts.get(k).copied().unwrap_or(0) as f64 / total as f64
    }

    /// Sample mean of `k^q`.
    pub fn raw_moment(&self, q: u32) -> f64 {
        let total = self.total() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (k as f64).powi(q as i32) * c as f64)
            .sum::<f64>()
            / total
    }
}

/// Total-variation distance `½ Σ |f_k − p_k|` between a histogram and a pmf.
pub fn tv_distance(hist: &Histogram, pmf: &BuffonPmf) -> f64 {
    let len = hist.counts().len().max(pmf.probabilities().len());
    0.5 * (0..len)
        .map(|k| (hist.frequency(k) - pmf.prob(k)).abs())
        .sum::<f64>()
}

fn chunked<F>(count: u64, seed: u64, body: F) -> Histogram
where
    F: Fn(&mut Gaussian<rng::StreamRng>, u64, &mut Histogram) + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(count - c * CHUNK);
            let mut g = Gaussian::new(rng::stream(seed, c));
            let mut h = Histogram::default();
            body(&mut g, len, &mut h);
            h
        })
        .reduce(Histogram::default, |a, b| a.merge(&b))
}

/// Geometric Monte Carlo of the needle experiment.
///
/// Each throw draws the needle direction uniformly on the sphere (normalized
/// Gaussian vector; only its first coordinate `z` matters) and the offset of
/// one endpoint `u ~ U[0, 1)` relative to the grid. The crossing count is
/// `|⌊u + a z⌋ − ⌊u⌋|`.
pub fn mc_sample(params: BuffonParams, count: u64, seed: u64) -> Result<Histogram> {
    if count == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let a = params.a();
    let dim = params.dim() as usize;
    Ok(chunked(count, seed, |g, len, h| {
        let mut dir = vec![0.0; dim];
        for _ in 0..len {
            g.fill_direction(&mut dir);
            let u = g.uniform();
            let x = (u + a * dir[0]).floor() - u.floor();
            h.record(x.abs() as usize);
        }
    }))
}

/// Inverse-CDF draws from an exact pmf.
pub fn sample(pmf: &BuffonPmf, seed: u64, count: usize) -> Vec<usize> {
    let cdf: Vec<f64> = pmf
        .probabilities()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let last = cdf.len() - 1;
    let mut rng = rng::stream(seed, 0);
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::build_pmf;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn histogram_merge_and_frequency() {
        let mut a = Histogram::default();
        a.record(0);
        a.record(2);
        let mut b = Histogram::default();
        b.record(2);
        b.record(5);
        let m = a.merge(&b);
        assert_eq!(m.counts(), &[1, 0, 2, 0, 0, 1]);
        assert_eq!(m.total(), 4);
        assert_eq!(m.frequency(2), 0.5);
        assert_eq!(m.frequency(9), 0.0);
    }

    #[test]
    fn mc_planar_short_needle() {
        let p = BuffonParams::new(0.5, 2).unwrap();
        let n = 1_000_000;
        let h = mc_sample(p, n, 5).unwrap();
        let target = 1.0 / PI;
        let sigma = (target * (1.0 - target) / n as f64).sqrt();
        assert!((h.frequency(1) - target).abs() < 3.0 * sigma);
        assert_eq!(h.frequency(2), 0.0);
    }

    #[test]
    fn mc_tiny_needle_never_crosses() {
        let p = BuffonParams::new(1e-300, 4).unwrap();
        let h = mc_sample(p, 10_000, 1).unwrap();
        assert_eq!(h.counts(), &[10_000]);
    }

    #[test]
    fn mc_is_deterministic() {
        let p = BuffonParams::new(3.3, 3).unwrap();
        assert_eq!(
            mc_sample(p, 200_000, 9).unwrap(),
            mc_sample(p, 200_000, 9).unwrap()
        );
        assert_ne!(
            mc_sample(p, 200_000, 9).unwrap(),
            mc_sample(p, 200_000, 10).unwrap()
        );
        assert!(mc_sample(p, 0, 9).is_err());
    }

    #[test]
    fn inverse_cdf_mean() {
        let pmf = build_pmf(BuffonParams::new(0.5, 2).unwrap()).unwrap();
        let n = 1_000_000;
        let xs = sample(&pmf, 3, n);
        let mean = xs.iter().sum::<usize>() as f64 / n as f64;
        let target = 1.0 / PI;
        let sigma = (target * (1.0 - target) / n as f64).sqrt();
        assert!((mean - target).abs() < 3.0 * sigma);
    }

    #[test]
    fn inverse_cdf_second_moment() {
        let pmf = build_pmf(BuffonParams::new(4.0, 3).unwrap()).unwrap();
        let n = 1_000_000;
        let xs = sample(&pmf, 17, n);
        let m2 = super::super::moment(&pmf, 2).unwrap();
        let m4 = super::super::moment(&pmf, 4).unwrap();
        let sigma = ((m4 - m2 * m2) / n as f64).sqrt();
        let emp = xs.iter().map(|&x| (x * x) as f64).sum::<f64>() / n as f64;
        assert!((emp - m2).abs() < 3.0 * sigma);
    }

    #[test]
    fn degenerate_pmf_samples_zero() {
        // a below the resolution of p_1 = τ a leaves all mass on zero
        let pmf = build_pmf(BuffonParams::new(1e-300, 3).unwrap()).unwrap();
        assert!(sample(&pmf, 1, 1000).iter().all(|&x| x == 0));
    }
}
