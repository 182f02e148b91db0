use std::sync::Arc;

use proptest::prelude::*;
use volterra_core::drifts::*;
use volterra_core::ensemble::Ensemble;
use volterra_core::kernels::KernelSpec;
use volterra_core::paths::*;
use volterra_core::quadrature::gauss_legendre;
use volterra_core::rng::{standard_normals, SeedTag, StreamPurpose};
use volterra_core::solver::*;
use volterra_core::special::normal_cdf;
use volterra_core::stats::*;

fn grid(n: usize) -> Arc<TimeGrid> {
    Arc::new(TimeGrid::uniform(1.0, n).unwrap())
}

fn fbm_ensemble(hurst: f64, n: usize, n_paths: usize, seed: u64) -> Ensemble {
    let sampler = VolterraSampler::new(KernelSpec::fbm(hurst, 1.0).unwrap(), grid(n)).unwrap();
    Ensemble::generate(seed, n_paths, |t| Ok(sampler.sample(t))).unwrap()
}

fn sign_ensemble(n: usize, n_paths: usize, seed: u64) -> Ensemble {
    let g = grid(n);
    let sampler = VolterraSampler::new(KernelSpec::fbm(0.75, 1.0).unwrap(), Arc::clone(&g)).unwrap();
    let config = SolverConfig::new(g, 0.0, DriftSpec::sign()).unwrap();
    Ensemble::generate(seed, n_paths, |t| euler_solve(&config, &sampler.sample(t))).unwrap()
}

#[test]
fn standard_normal_draws_pass() {
    let z = standard_normals(SeedTag::new(100, 0), StreamPurpose::GaussianVector, 100_000);
    assert!(normality_check(&z).unwrap().consistent_with_standard_normal(4.0));
}

#[test]
fn zero_drift_small_ball_matches_gaussian_cdf() {
    let hurst = 0.75;
    let e = fbm_ensemble(hurst, 64, 20_000, 101);
    let samples = e.node_values(64);
    let alphas: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    let study = small_ball_probability(&samples, 0.0, &alphas, Some(101)).unwrap();
    let exact: Vec<f64> = alphas.iter().map(|&a| normal_cdf(a) - 0.5).collect();
    for (r, p) in study.reports.iter().zip(&exact) {
        assert!(r.within(*p, 3.0), "{r:?} vs {p}");
    }
    let fit = fit_log_log(&alphas.iter().copied().zip(exact).collect::<Vec<_>>()).unwrap();
    assert!((fit.slope - 1.0).abs() < 1e-2);
}

#[test]
fn fbm_never_hits_a_point_exactly() {
    let e = fbm_ensemble(0.75, 128, 1000, 102);
    let set = OccupationSet::Finite(FiniteSetApprox::new(vec![0.3], 0.0).unwrap());
    assert!(e.paths.iter().all(|p| occupation_time(p, &set) == 0.0));
}

#[test]
fn fattened_point_occupation_scaling() {
    let e = sign_ensemble(256, 2000, 103);
    let deltas: Vec<f64> = (2..=6).map(|k| 2f64.powi(-k)).collect();
    let points: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| {
            let set = OccupationSet::Finite(FiniteSetApprox::new(vec![0.0], d).unwrap());
            // the origin node always sits at x0 = 0; count from the first step
            let times: Vec<f64> =
                e.paths.iter().map(|p| occupation_time(p, &set) - p.grid.step()).collect();
            (d, times.iter().sum::<f64>() / times.len() as f64)
        })
        .collect();
    let fit = fit_log_log(&points).unwrap();
    assert!(fit.slope >= 0.25 - 0.15, "{fit:?}");
}

#[test]
fn krylov_indicator_matches_gaussian_oracle() {
    let hurst = 0.75;
    let e = fbm_ensemble(hurst, 512, 10_000, 104);
    let g = KrylovIntegrand::indicator(0.0, 1.0, 1.0, 2.0);
    let r = krylov_functional(&g, hurst, &e).unwrap();
    let rule = gauss_legendre(64);
    // ∫_0^1 (Φ(1/t^H) - 1/2) dt, graded toward t = 0
    let oracle: f64 = (0..20)
        .map(|j| {
            let (lo, hi) = (2f64.powi(-(j + 1)), 2f64.powi(-j));
            rule.integrate(lo, hi, |t| normal_cdf(t.powf(-hurst)) - 0.5)
        })
        .sum::<f64>()
        + 2f64.powi(-20) * 0.5;
    assert!(r.report.within(oracle, 3.0), "{:?} vs {oracle}", r.report);
}

#[test]
fn krylov_shrinking_indicators() {
    let hurst = 0.75;
    let e = sign_ensemble(256, 2000, 105);
    let estimates: Vec<f64> = (1..=6)
        .map(|k| {
            let width = 2f64.powi(-k);
            // open at 0 so the fixed starting point does not count
            let g = KrylovIntegrand { g: Arc::new(move |_, x| if x > 0.0 && x <= width { 1.0 } else { 0.0 }), q: 2.0, support: (0.0, 1.0, 0.0, width) };
            krylov_functional(&g, hurst, &e).unwrap().report.estimate
        })
        .collect();
    assert!(estimates.windows(2).all(|w| w[1] < w[0]), "{estimates:?}");
    let ratios: Vec<f64> = estimates.iter().enumerate().map(|(k, v)| v / 2f64.powi(-(k as i32 + 1)).powf(1.0 - hurst)).collect();
    assert!(ratios.iter().all(|r| *r <= 2.0 * ratios[0]), "{ratios:?}");
}

#[test]
fn l2_distance_recomputed_independently() {
    let g = grid(128);
    let drift = DriftSpec::smooth(DriftFn::ClampedAffine { slope: -1.0, intercept: 0.0, lo: -1.0, hi: 1.0 }, 1.0).unwrap();
    let model = MixedModel::new(drift, 0.3, 0.75, Arc::clone(&g), 0.0).unwrap();
    let solved: Vec<MixedSolutions> = (0..500).map(|i| model.solve_all(&[8], SeedTag::new(106, i)).unwrap()).collect();
    let a = Ensemble::from_paths(106, solved.iter().map(|s| s.by_n[0].1.clone()).collect());
    let b = Ensemble::from_paths(106, solved.iter().map(|s| s.reference.clone()).collect());
    let r = l2_distance(&a, &b, 128).unwrap();
    // plain left-to-right pass over the pathwise squared differences
    let mut total = 0.0;
    for s in &solved {
        let d = s.by_n[0].1.values[127] - s.reference.values[127];
        total += d * d;
    }
    let recomputed = total / solved.len() as f64;
    assert!((r.estimate - recomputed).abs() <= 3.0 * r.std_error);
    assert!((r.estimate - recomputed).abs() <= 1e-12 * recomputed);
}

#[test]
fn l2_triangle_bound() {
    let a = fbm_ensemble(0.6, 64, 2000, 107);
    let b = a.map(|p| p.scaled(0.5));
    let c = a.map(|p| p.scaled(-0.25));
    let (ab, bc, ac) = (l2_distance(&a, &b, 64).unwrap(), l2_distance(&b, &c, 64).unwrap(), l2_distance(&a, &c, 64).unwrap());
    let combined = ab.std_error + bc.std_error + ac.std_error;
    assert!(ac.estimate.sqrt() <= ab.estimate.sqrt() + bc.estimate.sqrt() + 3.0 * combined);
}

#[test]
fn standard_error_shrinks_with_paths() {
    let e = fbm_ensemble(0.75, 32, 8000, 108);
    let small = Ensemble::from_paths(108, e.paths[..4000].to_vec());
    let ratio = small.mean_at(32).unwrap().std_error / e.mean_at(32).unwrap().std_error;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.1, "{ratio}");
    assert_eq!(e.mean_at(32).unwrap(), fbm_ensemble(0.75, 32, 8000, 108).mean_at(32).unwrap());
}

#[test]
fn fbm_besov_refinement() {
    let mut below = Vec::new();
    let mut above = Vec::new();
    for n in [256, 512, 1024] {
        let e = fbm_ensemble(0.75, n, 200, 109);
        below.push(besov_norm(&e, 0.3).unwrap().norm_value);
        above.push(besov_norm(&e, 0.8).unwrap().norm_value);
    }
    for w in below.windows(2) {
        assert!((0.9..=1.1).contains(&(w[1] / w[0])), "{below:?}");
    }
    // divergence for β > H is slow here: I² grows like 2^{2(β-H)} per halving
    for w in above.windows(2) {
        assert!(w[1] / w[0] >= 1.1, "{above:?}");
    }
}

fn sine_path(n: usize, freq: f64) -> SamplePath {
    let g = grid(n);
    let values: Vec<f64> = g.points().iter().map(|t| (freq * t).sin()).collect();
    SamplePath { grid: g, origin: 0.0, values, increments: vec![], seed: None }
}

proptest! {
    #[test]
    fn besov_scales_quadratically(j in -4i32..5, freq in 1.0f64..20.0, beta in 0.05f64..0.95) {
        let lambda = 2f64.powi(j);
        let e = Ensemble::from_paths(0, vec![sine_path(64, freq), sine_path(64, freq + 1.0)]);
        let base = besov_norm(&e, beta).unwrap().norm_value;
        let scaled = besov_norm(&e.map(|p| p.scaled(lambda)), beta).unwrap().norm_value;
        prop_assert_eq!(scaled, lambda * lambda * base);
    }

    #[test]
    fn occupation_is_additive(freq in 0.5f64..30.0, lo in -1.0f64..0.0, mid in 0.0f64..0.5, hi in 0.5f64..1.0) {
        // Δ = 2^-8, so Δ · count is exact as well
        let p = sine_path(256, freq);
        let count = |lo, hi| occupation_count(&p, &OccupationSet::Interval { lo, hi });
        prop_assert_eq!(count(lo, hi), count(lo, mid) + count(mid, hi));
        let whole = occupation_time(&p, &OccupationSet::Interval { lo, hi });
        let parts = occupation_time(&p, &OccupationSet::Interval { lo, hi: mid })
            + occupation_time(&p, &OccupationSet::Interval { lo: mid, hi });
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn small_ball_frequencies_nested(seed in 0u64..1000, k in 2usize..8) {
        let samples = standard_normals(SeedTag::new(seed, 0), StreamPurpose::GaussianVector, 5000);
        let alphas: Vec<f64> = (0..k).map(|j| 2f64.powi(-(j as i32))).collect();
        if let Ok(s) = small_ball_probability(&samples, -0.1, &alphas, None) {
            prop_assert!(s.reports.windows(2).all(|w| w[1].estimate <= w[0].estimate));
        }
    }
}
