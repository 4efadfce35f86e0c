use std::f64::consts::FRAC_2_PI;

use qjl::embedding::{
    binary_embed, embed, hamming, l2_estimate, l2_raw, subgaussian_diag, unquantized_l2_estimate,
    Projector, RowModel,
};
use qjl::harness::{difference_histogram, l1_expectation};
use qjl::rng::{self, Gaussian};
use qjl::{build_gdelta, chi_moment, tau};

fn pair(dim: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let u = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    v[dim - 1] = alpha;
    (u, v)
}

#[test]
fn single_row_l1_estimator_is_unbiased() {
    let (u, v) = pair(5, 1.0);
    let c = l1_expectation(&u, &v, 0.3, RowModel::Gaussian, 10_000, 17).unwrap();
    assert!(c.z_score() < 3.0, "{c:?}");
}

#[test]
fn mixture_second_moment_within_bracket() {
    for (i, &alpha) in [0.2, 1.0, 3.0].iter().enumerate() {
        let (u, v) = pair(6, alpha);
        let h = difference_histogram(6, 1.0, &u, &v, RowModel::Gaussian, 400_000, 30 + i as u64)
            .unwrap();
        let m2 = h.raw_moment(2);
        let se = ((h.raw_moment(4) - m2 * m2) / h.total() as f64).sqrt();
        let lo = (FRAC_2_PI.sqrt() * alpha).max(alpha * alpha);
        let hi = FRAC_2_PI.sqrt() * alpha + alpha * alpha;
        assert!(
            m2 >= lo - 3.0 * se && m2 <= hi + 3.0 * se,
            "α = {alpha}: {m2} not in [{lo}, {hi}]"
        );
    }
}

#[test]
fn large_distance_moments_follow_folded_gaussian() {
    let alpha = 50.0;
    let (u, v) = pair(4, alpha);
    let h = difference_histogram(4, 1.0, &u, &v, RowModel::Gaussian, 200_000, 41).unwrap();
    let folded = [
        FRAC_2_PI.sqrt() * alpha,
        alpha * alpha,
        2.0 * FRAC_2_PI.sqrt() * alpha.powi(3),
    ];
    for (q, f) in (1..=3).zip(folded) {
        let rel = (h.raw_moment(q) - f).abs() / f;
        assert!(rel <= 5.0 / alpha, "q = {q}: relative deviation {rel}");
    }
}

#[test]
fn chi_moment_matches_sampled_norms() {
    let mut g = Gaussian::new(rng::stream(5, 0));
    let n = 10_000_000;
    let mut x = [0.0; 3];
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        g.fill(&mut x);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        s1 += r;
        s2 += r * r;
    }
    let mean = s1 / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    let exact = chi_moment(3, 1).unwrap();
    assert!((exact - 4.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    assert!((mean - exact).abs() < 3.0 * se);
}

#[test]
fn subgaussian_bound_and_means() {
    let mut g = Gaussian::new(rng::stream(8, 0));
    let mut u = vec![0.0; 9];
    let mut v = vec![0.0; 9];
    g.fill(&mut u);
    g.fill(&mut v);
    for (model, seed) in [(RowModel::Gaussian, 1), (RowModel::UniformSphere, 2)] {
        let p = Projector::new(1, 9, 0.25, seed, model).unwrap();
        let r = subgaussian_diag(&p, &u, &v, 200_000, &[0.5, 1.0]).unwrap();
        assert!(r.bound_holds());
        assert!(
            (r.mean_z - r.expected_mean_z).abs() < 3.0 * r.mean_z_se,
            "{model:?}: {r:?}"
        );
    }
    let sphere = Projector::new(1, 9, 0.25, 2, RowModel::UniformSphere).unwrap();
    let r = subgaussian_diag(&sphere, &u, &v, 10_000, &[]).unwrap();
    let w = qjl::embedding::distance(&u, &v);
    assert!((r.expected_mean_z - 3.0 * tau(9).unwrap() * w).abs() < 1e-12);
}

#[test]
fn raw_l2_concentrates_on_g() {
    let g = build_gdelta(6, 0.5, 64).unwrap();
    let (u, v) = pair(6, 0.9);
    let lambda = 0.9;
    let target = g.eval(lambda).unwrap().powi(2);
    let vals: Vec<f64> = (0..400)
        .map(|t| {
            let p = Projector::new(256, 6, 0.5, 1000 + t, RowModel::Gaussian).unwrap();
            l2_raw(&embed(&p, &u).unwrap(), &embed(&p, &v).unwrap())
                .unwrap()
                .powi(2)
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let se = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!(
        (mean - target).abs() < 3.0 * se,
        "{mean} vs {target} ± {se}"
    );
}

#[test]
fn fine_quantization_recovers_distance() {
    let dist: f64 = 2.0;
    let delta = 1e-6 * dist;
    let g = build_gdelta(8, delta, 64).unwrap();
    let (u, v) = pair(8, dist);
    let m = 4096;
    let p = Projector::new(m, 8, delta, 3, RowModel::Gaussian).unwrap();
    let est = l2_estimate(&embed(&p, &u).unwrap(), &embed(&p, &v).unwrap(), &g).unwrap();
    let eps = (1.0 / m as f64).sqrt();
    assert!((est - dist).abs() <= 2.0 * eps * dist, "{est}");
    let unq = unquantized_l2_estimate(&p, &u, &v).unwrap();
    assert!((est - unq).abs() <= 1e-5 * dist);
}

#[test]
fn hamming_tracks_angle() {
    let u = [1.0, 0.0, 0.0];
    let v = [1.0, 1.0, 0.0];
    let expected = 0.25;
    let p = Projector::new(100_000, 3, 1.0, 6, RowModel::Gaussian).unwrap();
    let h = hamming(
        &binary_embed(&p, &u).unwrap(),
        &binary_embed(&p, &v).unwrap(),
    )
    .unwrap();
    assert!((h - expected).abs() < 3.0 * (expected * (1.0 - expected) / 1e5f64).sqrt());
}
