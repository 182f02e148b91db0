use std::sync::Arc;

use volterra_core::ensemble::Ensemble;
use volterra_core::kernels::*;
use volterra_core::paths::*;
use volterra_core::rng::SeedTag;
use volterra_core::stats::{tree_sum, McReport};

fn grid(n: usize) -> Arc<TimeGrid> {
    Arc::new(TimeGrid::uniform(1.0, n).unwrap())
}

fn variance_report(values: &[f64]) -> McReport {
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    McReport::from_samples(&squares, None).unwrap()
}

#[test]
fn brownian_increment_moments() {
    let g = TimeGrid::uniform(1000.0, 1_000_000).unwrap();
    let incs = brownian_increments(&g, SeedTag::new(5, 0));
    let n = incs.len() as f64;
    let delta = g.step();
    let mean = tree_sum(&incs) / n;
    assert!(mean.abs() < 4.0 * (delta / n).sqrt(), "{mean}");
    let var = tree_sum(&incs.iter().map(|x| (x - mean).powi(2)).collect::<Vec<_>>()) / (n - 1.0);
    assert!((var / delta - 1.0).abs() < 0.01, "{var}");
    assert_eq!(incs, brownian_increments(&g, SeedTag::new(5, 0)));
}

#[test]
fn riemann_liouville_variance_at_horizon() {
    let sampler = VolterraSampler::new(KernelSpec::riemann_liouville(0.75, 1.0).unwrap(), grid(256)).unwrap();
    let e = Ensemble::generate(21, 10_000, |t| Ok(sampler.sample(t))).unwrap();
    let r = variance_report(&e.node_values(256));
    assert!(r.within(1.0 / 1.5, 3.0), "{r:?}");
}

#[test]
fn fbm_covariance_and_centering() {
    let g = grid(64);
    let sampler = VolterraSampler::new(KernelSpec::fbm(0.75, 1.0).unwrap(), Arc::clone(&g)).unwrap();
    let e = Ensemble::generate(22, 10_000, |t| Ok(sampler.sample(t))).unwrap();
    let r = e.second_moment(32, 64).unwrap();
    assert!(r.within(fbm_covariance(0.75, 0.5, 1.0).unwrap(), 3.0), "{r:?}");
    for k in (8..=64).step_by(8) {
        assert!(e.mean_at(k).unwrap().within(0.0, 4.0));
    }
}

#[test]
fn exact_sampler_single_point_variance() {
    let hurst = 0.7;
    let g = Arc::new(TimeGrid::uniform(2.0, 1).unwrap());
    let sampler = ExactSampler::new(&KernelSpec::fbm(hurst, 2.0).unwrap(), g).unwrap();
    let values: Vec<f64> = (0..100_000).map(|i| sampler.sample(SeedTag::new(8, i)).values[0]).collect();
    assert!(variance_report(&values).within(2f64.powf(2.0 * hurst), 3.0));
}

#[test]
fn exact_brownian_increments_uncorrelated() {
    let g = grid(32);
    let sampler = ExactSampler::new(&KernelSpec::fbm(0.5, 1.0).unwrap(), Arc::clone(&g)).unwrap();
    let n = 2000;
    let mut products = Vec::new();
    let mut squares = Vec::new();
    for i in 0..n {
        let p = sampler.sample(SeedTag::new(9, i));
        let incs: Vec<f64> = (1..=32).map(|k| p.at_node(k) - p.at_node(k - 1)).collect();
        for w in incs.windows(2) {
            products.push(w[0] * w[1]);
        }
        squares.extend(incs.iter().map(|x| x * x));
    }
    let rho = tree_sum(&products) / products.len() as f64 / (tree_sum(&squares) / squares.len() as f64);
    assert!(rho.abs() < 4.0 / (products.len() as f64).sqrt(), "{rho}");
}

#[test]
fn two_samplers_agree_on_variance() {
    let g = grid(16);
    for hurst in [0.6, 0.75] {
        let spec = KernelSpec::fbm(hurst, 1.0).unwrap();
        let v = VolterraSampler::new(spec.clone(), Arc::clone(&g)).unwrap();
        let x = ExactSampler::new(&spec, Arc::clone(&g)).unwrap();
        let a = Ensemble::generate(1, 10_000, |t| Ok(v.sample(t))).unwrap().second_moment(16, 16).unwrap();
        let b = Ensemble::generate(2, 10_000, |t| Ok(x.sample(t))).unwrap().second_moment(16, 16).unwrap();
        let combined = a.std_error.hypot(b.std_error);
        assert!((a.estimate - b.estimate).abs() <= 3.0 * combined, "{a:?} vs {b:?}");
    }
}

#[test]
fn mixture_variance_matches_kernel() {
    let g = grid(128);
    let sampler = CorrelatedSampler::new(0.3, 0.75, Arc::clone(&g)).unwrap();
    let n = 4;
    let values: Vec<f64> =
        (0..10_000).map(|i| sampler.pair(n, SeedTag::new(4, i)).unwrap().mixture.at_node(128)).collect();
    let mix = KernelSpec::fbm_mixture(&[(0.25, 0.3), (1.0, 0.75)], 1.0).unwrap();
    let target = mix.local_variance(1.0, 1.0, DEFAULT_QUAD_POINTS).unwrap().value;
    assert!(variance_report(&values).within(target, 3.0), "{target}");
}

#[test]
fn mixture_is_constructed_exactly() {
    let sampler = CorrelatedSampler::new(0.3, 0.75, grid(64)).unwrap();
    let pair = sampler.pair(7, SeedTag::new(3, 3)).unwrap();
    for ((m, a), b) in pair.mixture.values.iter().zip(&pair.path_h1.values).zip(&pair.path_h2.values) {
        assert_eq!(*m, (1.0 / 7.0) * a + b);
    }
}

fn mean_holder(gamma: f64, paths: &[SamplePath]) -> f64 {
    paths.iter().map(|p| holder_constant(p, gamma).unwrap()).sum::<f64>() / paths.len() as f64
}

#[test]
fn holder_constants_under_refinement() {
    let mut below = Vec::new();
    let mut above = Vec::new();
    for n in [128, 256, 512] {
        let sampler = VolterraSampler::new(KernelSpec::fbm(0.75, 1.0).unwrap(), grid(n)).unwrap();
        let paths: Vec<SamplePath> = (0..200).map(|i| sampler.sample(SeedTag::new(30, i))).collect();
        below.push(mean_holder(0.7, &paths));
        above.push(mean_holder(0.8, &paths));
    }
    for w in below.windows(2) {
        assert!((0.8..=1.25).contains(&(w[1] / w[0])), "{below:?}");
    }
    // γ > H grows like 2^{γ-H} per halving up to log factors
    for w in above.windows(2) {
        assert!(w[1] / w[0] >= 1.05, "{above:?}");
    }
}

#[test]
fn linear_path_holder_constant() {
    let g = grid(256);
    let c = 3.0;
    let values: Vec<f64> = g.points().iter().map(|t| c * t).collect();
    let p = SamplePath { grid: g, origin: 0.0, values, increments: vec![], seed: None };
    let h = holder_constant(&p, 0.999).unwrap();
    assert!((h / c - 1.0).abs() < 0.01);
}
