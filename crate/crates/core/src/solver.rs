//! Explicit Euler scheme for `dX = b(t, X) dt + dB^K`, the conditionally
//! Gaussian decomposition, the mollified-drift ladder and the stabilized
//! mixed equation.
//!
//! The scheme is stored as `X_i = (x0 + B_i) + D_i`, where `D_i` is the
//! left-rectangle sum of `b(t_k, X_k) Δ` over `k < i`. This is the same
//! recursion as `X_{i+1} = X_i + b(t_i, X_i) Δ + (B_{i+1} - B_i)`, but a
//! drift that never fires leaves `X = x0 + B` bit for bit.

use std::sync::Arc;

use rayon::prelude::*;

use crate::drifts::{check_linear_growth, mollify_with, sampled_sup, DriftKind, DriftSpec, MollifierShape, MOLLIFIER_NODES};
use crate::error::{domain, Error, Result};
use crate::kernels::DEFAULT_QUAD_POINTS;
use crate::paths::{mixture_values, CorrelatedPair, CorrelatedSampler, SamplePath, TimeGrid, VolterraSampler};
use crate::rng::SeedTag;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Arc<TimeGrid>,
    pub x0: f64,
    pub drift: DriftSpec,
}

impl SolverConfig {
    /// Validates a piecewise drift's declared growth constant on a sample sweep.
    pub fn new(grid: Arc<TimeGrid>, x0: f64, drift: DriftSpec) -> Result<Self> {
        if !x0.is_finite() {
            return domain(format!("initial condition must be finite, got {x0}"));
        }
        if let DriftKind::Piecewise { growth, .. } = drift.kind() {
            let ts: Vec<f64> = (0..=16).map(|k| grid.horizon() * k as f64 / 16.0).collect();
            let xs: Vec<f64> = (0..=400).map(|k| -50.0 + 0.25 * k as f64).collect();
            if !check_linear_growth(&drift, *growth, &ts, &xs) {
                return domain(format!("drift violates |b| <= {growth} (1 + |x|) on the sample sweep"));
            }
        }
        Ok(Self { grid, x0, drift })
    }
}

fn check_grid(config: &SolverConfig, noise: &SamplePath) -> Result<()> {
    if noise.grid.as_ref() != config.grid.as_ref() {
        return domain("noise path and solver config use different grids");
    }
    Ok(())
}

/// Explicit Euler solution driven by a noise path.
pub fn euler_solve(config: &SolverConfig, noise: &SamplePath) -> Result<SamplePath> {
    check_grid(config, noise)?;
    Ok(euler_values(&config.drift, config.x0, noise))
}

fn euler_values(drift: &DriftSpec, x0: f64, noise: &SamplePath) -> SamplePath {
    let grid = &noise.grid;
    let step = grid.step();
    let mut values = Vec::with_capacity(grid.len());
    let mut drift_sum = 0.0;
    let mut x = x0;
    let mut t = 0.0;
    for (i, &b) in noise.values.iter().enumerate() {
        drift_sum += drift.eval(t, x) * step;
        x = (x0 + b) + drift_sum;
        values.push(x);
        t = grid.points()[i];
    }
    SamplePath {
        grid: Arc::clone(grid),
        origin: x0,
        values,
        increments: noise.increments.clone(),
        seed: noise.seed,
    }
}

/// `max_i |X_i - x0 - Σ_{k<i} b(t_k, X_k) Δ - B_i|`.
pub fn residual(solution: &SamplePath, config: &SolverConfig, noise: &SamplePath) -> Result<f64> {
    check_grid(config, noise)?;
    if solution.grid.as_ref() != noise.grid.as_ref() {
        return domain("solution and noise path use different grids");
    }
    let step = config.grid.step();
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for i in 1..=config.grid.len() {
        let k = i - 1;
        integral += config.drift.eval(config.grid.node_time(k), solution.at_node(k)) * step;
        let r = solution.at_node(i) - (config.x0 + noise.at_node(i)) - integral;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `sup_i |a_i - b_i|` over grid points.
pub fn sup_distance(a: &SamplePath, b: &SamplePath) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Geometric mollification levels `4, 16, …, 4^k`.
pub fn ladder_levels(k: u32) -> Vec<u32> {
    (1..=k).map(|j| 4u32.pow(j)).collect()
}

/// Mollified drifts for each level, built once and shared by all paths.
#[derive(Debug, Clone)]
pub struct MollifiedLadder {
    pub levels: Vec<u32>,
    pub shape: MollifierShape,
    drifts: Vec<DriftSpec>,
}

impl MollifiedLadder {
    pub fn new(drift: &DriftSpec, levels: &[u32], shape: MollifierShape) -> Result<Self> {
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return domain("mollification levels must be nonempty and strictly increasing");
        }
        let drifts = levels
            .iter()
            .map(|&n| mollify_with(drift, n, MOLLIFIER_NODES, shape))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels: levels.to_vec(), shape, drifts })
    }

    pub fn solve(&self, x0: f64, noise: &SamplePath) -> Approximation {
        let solutions: Vec<SamplePath> = self.drifts.iter().map(|d| euler_values(d, x0, noise)).collect();
        let trace = solutions.windows(2).map(|w| sup_distance(&w[0], &w[1])).collect();
        Approximation { levels: self.levels.clone(), solutions, trace }
    }
}

/// Solutions of the mollified equations on one noise path.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub levels: Vec<u32>,
    pub solutions: Vec<SamplePath>,
    /// `sup_t |X^{n_j} - X^{n_{j+1}}|`
    pub trace: Vec<f64>,
}

impl Approximation {
    pub fn finest(&self) -> &SamplePath {
        self.solutions.last().expect("at least one level")
    }

    pub fn trace_strictly_decreasing(&self) -> bool {
        self.trace.windows(2).all(|w| w[1] < w[0])
    }
}

pub fn approximation_solve(config: &SolverConfig, noise: &SamplePath, levels: &[u32]) -> Result<Approximation> {
    check_grid(config, noise)?;
    Ok(MollifiedLadder::new(&config.drift, levels, MollifierShape::Symmetric)?.solve(config.x0, noise))
}

/// `Y = X_{t-ε} + (B_t - B_{t-ε})` with the conditional mean `ξ` and the
/// conditional variance `κ_ε²` given the noise up to `t - ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgpDecomposition {
    pub t: f64,
    pub epsilon: f64,
    pub y: f64,
    pub xi: f64,
    /// `∫_{t-ε}^t K(t,s)² ds`.
    pub kappa_sq: f64,
    /// The same variance for the discrete kernel weights.
    pub discrete_kappa_sq: f64,
}

impl CgpDecomposition {
    pub fn standardized(&self) -> f64 {
        (self.y - self.xi) / self.kappa_sq.sqrt()
    }
}

/// Precomputed `κ_ε²` for repeated decompositions at one `(t, ε)`.
#[derive(Debug, Clone, Copy)]
pub struct CgpWindow {
    node_t: usize,
    node_s: usize,
    t: f64,
    epsilon: f64,
    kappa_sq: f64,
    discrete_kappa_sq: f64,
}

impl CgpWindow {
    pub fn new(sampler: &VolterraSampler, t: f64, epsilon: f64) -> Result<Self> {
        let grid = sampler.grid();
        let (Some(node_t), Some(node_s)) = (grid.node_of(t), grid.node_of(t - epsilon)) else {
            return domain(format!("t = {t} and t - ε = {} must be grid points", t - epsilon));
        };
        if !(epsilon > 0.0 && node_s < node_t) {
            return domain(format!("need 0 < ε < t, got ε = {epsilon}, t = {t}"));
        }
        let kappa_sq = sampler.spec().local_variance(t, epsilon, DEFAULT_QUAD_POINTS)?.value;
        let discrete_kappa_sq = if node_s == 0 {
            sampler.row(node_t - 1).iter().map(|w| w * w).sum::<f64>() * grid.step()
        } else {
            sampler.discrete_window_variance(node_t - 1, node_s - 1)
        };
        Ok(Self { node_t, node_s, t, epsilon, kappa_sq, discrete_kappa_sq })
    }

    pub fn decompose(&self, sampler: &VolterraSampler, solution: &SamplePath, noise: &SamplePath) -> Result<CgpDecomposition> {
        if noise.increments.len() != sampler.grid().len() {
            return domain("the decomposition needs the driving increments of the noise path");
        }
        let (i, k) = (self.node_t, self.node_s);
        let x_prev = solution.at_node(k);
        let y = x_prev + (noise.at_node(i) - noise.at_node(k));
        let correction = if k == 0 { 0.0 } else { sampler.memory_correction(i - 1, k - 1, &noise.increments) };
        Ok(CgpDecomposition {
            t: self.t,
            epsilon: self.epsilon,
            y,
            xi: x_prev + correction,
            kappa_sq: self.kappa_sq,
            discrete_kappa_sq: self.discrete_kappa_sq,
        })
    }
}

/// Decomposition at `(t, ε)` using the sampler's discrete kernel.
pub fn cgp_decompose(
    solution: &SamplePath,
    noise: &SamplePath,
    sampler: &VolterraSampler,
    t: f64,
    epsilon: f64,
) -> Result<CgpDecomposition> {
    CgpWindow::new(sampler, t, epsilon)?.decompose(sampler, solution, noise)
}

/// Solver for `dX^N = b dt + (1/N) dB^{H1} + dB^{H2}` with completely
/// correlated noises.
#[derive(Debug, Clone)]
pub struct MixedModel {
    drift: DriftSpec,
    x0: f64,
    sampler: CorrelatedSampler,
}

/// Solutions for several `N` and the `N = ∞` reference on one seed.
#[derive(Debug, Clone)]
pub struct MixedSolutions {
    pub reference: SamplePath,
    pub rough: SamplePath,
    pub smooth: SamplePath,
    pub by_n: Vec<(u32, SamplePath)>,
}

impl MixedModel {
    /// Checks boundedness of the drift by its declared bound and a sample sweep.
    pub fn new(drift: DriftSpec, h1: f64, h2: f64, grid: Arc<TimeGrid>, x0: f64) -> Result<Self> {
        let Some(bound) = drift.sup_bound() else {
            return Err(Error::UnboundedDrift(format!("{:?}", drift.kind())));
        };
        let ts: Vec<f64> = (0..=8).map(|k| grid.horizon() * k as f64 / 8.0).collect();
        let xs: Vec<f64> = (0..=2000).map(|k| -100.0 + 0.1 * k as f64).collect();
        if sampled_sup(&drift, &ts, &xs) > bound * (1.0 + 1e-12) {
            return Err(Error::UnboundedDrift(format!("sampled values exceed the declared bound {bound}")));
        }
        let sampler = CorrelatedSampler::new(h1, h2, grid)?;
        if !x0.is_finite() {
            return domain(format!("initial condition must be finite, got {x0}"));
        }
        Ok(Self { drift, x0, sampler })
    }

    pub fn sampler(&self) -> &CorrelatedSampler {
        &self.sampler
    }

    pub fn solve(&self, stabilization: u32, tag: SeedTag) -> Result<(SamplePath, CorrelatedPair)> {
        let pair = self.sampler.pair(stabilization, tag)?;
        Ok((euler_values(&self.drift, self.x0, &pair.mixture), pair))
    }

    /// The `N = ∞` member, driven by the `H2` path alone.
    pub fn reference(&self, smooth: &SamplePath) -> SamplePath {
        euler_values(&self.drift, self.x0, smooth)
    }

    pub fn solve_all(&self, ns: &[u32], tag: SeedTag) -> Result<MixedSolutions> {
        if ns.contains(&0) {
            return domain("stabilization index N must be a positive integer");
        }
        let (rough, smooth) = self.sampler.components(tag);
        let reference = self.reference(&smooth);
        let by_n = ns
            .iter()
            .map(|&n| {
                let noise = SamplePath { values: mixture_values(&rough.values, &smooth.values, n), ..smooth.clone() };
                (n, euler_values(&self.drift, self.x0, &noise))
            })
            .collect();
        Ok(MixedSolutions { reference, rough, smooth, by_n })
    }
}

pub fn mixed_solve(
    drift: &DriftSpec,
    h1: f64,
    h2: f64,
    stabilization: u32,
    grid: Arc<TimeGrid>,
    x0: f64,
    tag: SeedTag,
) -> Result<(SamplePath, CorrelatedPair)> {
    MixedModel::new(drift.clone(), h1, h2, grid, x0)?.solve(stabilization, tag)
}

/// Solves one equation per noise path in parallel, in index order.
pub fn solve_ensemble(config: &SolverConfig, noises: &[SamplePath]) -> Result<Vec<SamplePath>> {
    noises.par_iter().map(|n| euler_solve(config, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drifts::DriftFn;
    use crate::kernels::KernelSpec;

    fn setup(n: usize, hurst: f64) -> (Arc<TimeGrid>, VolterraSampler) {
        let grid = Arc::new(TimeGrid::uniform(1.0, n).unwrap());
        let sampler = VolterraSampler::new(KernelSpec::fbm(hurst, 1.0).unwrap(), Arc::clone(&grid)).unwrap();
        (grid, sampler)
    }

    #[test]
    fn zero_drift_reproduces_noise() {
        let (grid, sampler) = setup(64, 0.75);
        let noise = sampler.sample(SeedTag::new(1, 2));
        let config = SolverConfig::new(grid, 0.3, DriftSpec::zero()).unwrap();
        let x = euler_solve(&config, &noise).unwrap();
        for (a, b) in x.values.iter().zip(&noise.values) {
            assert_eq!(*a, 0.3 + b);
        }
    }

    #[test]
    fn constant_drift_without_noise() {
        let grid = Arc::new(TimeGrid::uniform(2.0, 100).unwrap());
        let noise = SamplePath {
            grid: Arc::clone(&grid),
            origin: 0.0,
            values: vec![0.0; 100],
            increments: vec![0.0; 100],
            seed: None,
        };
        let config = SolverConfig::new(Arc::clone(&grid), 1.0, DriftSpec::constant(-0.5)).unwrap();
        let x = euler_solve(&config, &noise).unwrap();
        for (v, t) in x.values.iter().zip(grid.points()) {
            assert!((v - (1.0 - 0.5 * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn residual_of_scheme_vanishes_and_detects_corruption() {
        let (grid, sampler) = setup(128, 0.75);
        let noise = sampler.sample(SeedTag::new(4, 0));
        let config = SolverConfig::new(grid, 0.0, DriftSpec::sign()).unwrap();
        let mut x = euler_solve(&config, &noise).unwrap();
        assert!(residual(&x, &config, &noise).unwrap() < 1e-12);
        x.values[40] += 1.0;
        let step = config.grid.step();
        assert!(residual(&x, &config, &noise).unwrap() >= 1.0 - step);
    }

    #[test]
    fn cgp_with_zero_drift_is_exact() {
        let (grid, sampler) = setup(64, 0.75);
        let noise = sampler.sample(SeedTag::new(9, 1));
        let config = SolverConfig::new(grid, 0.0, DriftSpec::zero()).unwrap();
        let x = euler_solve(&config, &noise).unwrap();
        let d = cgp_decompose(&x, &noise, &sampler, 1.0, 0.25).unwrap();
        assert_eq!(d.y, x.at(1.0).unwrap());
        assert!(cgp_decompose(&x, &noise, &sampler, 1.0, 0.3).is_err());
    }

    #[test]
    fn cgp_brownian_mean_is_past_value() {
        let (grid, sampler) = setup(32, 0.5);
        let noise = sampler.sample(SeedTag::new(9, 1));
        let config = SolverConfig::new(grid, 0.0, DriftSpec::sign()).unwrap();
        let x = euler_solve(&config, &noise).unwrap();
        let d = cgp_decompose(&x, &noise, &sampler, 0.75, 0.25).unwrap();
        assert_eq!(d.xi, x.at(0.5).unwrap());
    }

    #[test]
    fn cgp_bounded_drift_distance() {
        let (grid, sampler) = setup(64, 0.75);
        let config = SolverConfig::new(grid, 0.0, DriftSpec::sign()).unwrap();
        for seed in 0..5 {
            let noise = sampler.sample(SeedTag::new(seed, 0));
            let x = euler_solve(&config, &noise).unwrap();
            for (t, e) in [(1.0, 0.25), (0.5, 0.125), (0.75, 0.5)] {
                let d = cgp_decompose(&x, &noise, &sampler, t, e).unwrap();
                assert!((x.at(t).unwrap() - d.y).abs() <= e + 1e-12);
            }
        }
    }

    #[test]
    fn smooth_ladder_is_direct_solve() {
        let (grid, sampler) = setup(64, 0.75);
        let noise = sampler.sample(SeedTag::new(2, 0));
        let drift = DriftSpec::from_fn(DriftFn::Tanh { scale: 1.0, rate: 1.0 }).unwrap();
        let config = SolverConfig::new(grid, 0.1, drift).unwrap();
        let direct = euler_solve(&config, &noise).unwrap();
        let approx = approximation_solve(&config, &noise, &ladder_levels(3)).unwrap();
        for s in &approx.solutions {
            assert!(sup_distance(s, &direct) <= 1e-12);
        }
    }

    #[test]
    fn mixed_zero_drift_is_mixture() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
        let (x, pair) = mixed_solve(&DriftSpec::zero(), 0.3, 0.75, 4, grid, 0.5, SeedTag::new(1, 1)).unwrap();
        for (a, m) in x.values.iter().zip(&pair.mixture.values) {
            assert_eq!(*a, 0.5 + m);
        }
    }

    #[test]
    fn mixed_rejects_unbounded_drift() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
        let drift = DriftSpec::from_fn(DriftFn::Affine { slope: -1.0, intercept: 0.0 }).unwrap();
        assert!(matches!(
            MixedModel::new(drift, 0.3, 0.75, grid, 0.0),
            Err(Error::UnboundedDrift(_))
        ));
    }
}
