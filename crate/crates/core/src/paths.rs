//! Time grids and sample paths of Volterra processes.
//!
//! `VolterraSampler` discretizes `B_t = ∫_0^t K(t,s) dW_s` against the
//! Brownian increments of a uniform grid. Row `i` of its lower-triangular
//! weight matrix holds `K̄(t_i, cell_j)`:
//!
//! * interior cells: the kernel at the cell midpoint;
//! * the diagonal cell `j = i`: `sqrt(∫_cell K(t_i,s)² ds / Δ)`, so the
//!   variance contributed by the cell where `K` is singular or degenerate is
//!   exact;
//! * the first cell `(0, Δ]` when the kernel blows up at `s = 0`: the same
//!   L²-exact value.
//!
//! `ExactSampler` draws the exact finite-dimensional law through a Cholesky
//! factor of the covariance matrix and serves as the reference sampler.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::kernels::{CholeskyFactor, KernelSpec, DEFAULT_QUAD_POINTS};
use crate::rng::{standard_normals, SeedTag, StreamPurpose};

/// Uniform grid `Δ, 2Δ, …, T`. Node 0 is the origin `t = 0`, which is not
/// one of the `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    step: f64,
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, n_points: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("grid horizon must be positive, got {horizon}"));
        }
        if n_points == 0 {
            return domain("a grid needs at least one point");
        }
        let n = n_points as f64;
        let points: Vec<f64> = (1..=n_points).map(|k| (k as f64 / n) * horizon).collect();
        Ok(Self { horizon, step: points[0], points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Time of node `k`, where node 0 is the origin.
    pub fn node_time(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.points[k - 1]
        }
    }

    /// Node index of `t` if `t` is a node of the grid.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.step).round();
        if !(k >= 0.0) || k > self.len() as f64 {
            return None;
        }
        let k = k as usize;
        ((self.node_time(k) - t).abs() <= 1e-9 * self.step).then_some(k)
    }
}

/// Process values on a grid together with the increments that drove them.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: Arc<TimeGrid>,
    /// Value at `t = 0`.
    pub origin: f64,
    /// One value per grid point.
    pub values: Vec<f64>,
    /// One Brownian increment per grid cell; empty for exact Gaussian paths.
    pub increments: Vec<f64>,
    pub seed: Option<SeedTag>,
}

impl SamplePath {
    /// Value at node `k` (node 0 is the origin).
    pub fn at_node(&self, k: usize) -> f64 {
        if k == 0 {
            self.origin
        } else {
            self.values[k - 1]
        }
    }

    /// Value at a grid time.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.grid.node_of(t).map(|k| self.at_node(k))
    }

    /// All node values, origin first.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.origin).chain(self.values.iter().copied())
    }

    pub fn scaled(&self, factor: f64) -> SamplePath {
        SamplePath {
            origin: factor * self.origin,
            values: self.values.iter().map(|v| factor * v).collect(),
            ..self.clone()
        }
    }
}

/// Independent `Normal(0, Δ)` increments, one per cell.
pub fn brownian_increments(grid: &TimeGrid, tag: SeedTag) -> Vec<f64> {
    let scale = grid.step().sqrt();
    let mut z = standard_normals(tag, StreamPurpose::BrownianIncrements, grid.len());
    for v in &mut z {
        *v *= scale;
    }
    z
}

/// Discrete kernel matrix of a Volterra process on a grid.
#[derive(Debug, Clone)]
pub struct VolterraSampler {
    spec: KernelSpec,
    grid: Arc<TimeGrid>,
    /// Row `i` occupies `weights[i(i+1)/2 .. (i+1)(i+2)/2]`.
    weights: Vec<f64>,
}

impl VolterraSampler {
    pub fn new(spec: KernelSpec, grid: Arc<TimeGrid>) -> Result<Self> {
        if grid.horizon() > spec.horizon() * (1.0 + 1e-12) {
            return domain(format!(
                "grid horizon {} exceeds kernel horizon {}",
                grid.horizon(),
                spec.horizon()
            ));
        }
        let n = grid.len();
        let rows: Vec<Vec<f64>> = if spec.is_brownian() {
            (0..n).map(|i| vec![1.0; i + 1]).collect()
        } else {
            (0..n).into_par_iter().map(|i| kernel_row(&spec, &grid, i)).collect::<Result<_>>()?
        };
        Ok(Self { spec, grid, weights: rows.concat() })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    /// Weights `K̄(t_i, cell_j)` for `j = 0..=i` (grid point `i`, 0-based).
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.weights[start..start + i + 1]
    }

    /// Process values for given increments.
    pub fn values(&self, increments: &[f64]) -> Result<Vec<f64>> {
        if increments.len() != self.grid.len() {
            return domain(format!(
                "expected {} increments, got {}",
                self.grid.len(),
                increments.len()
            ));
        }
        Ok((0..self.grid.len()).map(|i| dot(self.row(i), &increments[..=i])).collect())
    }

    /// Path driven by the given increments.
    pub fn path(&self, increments: Vec<f64>, seed: Option<SeedTag>) -> Result<SamplePath> {
        let values = self.values(&increments)?;
        Ok(SamplePath { grid: Arc::clone(&self.grid), origin: 0.0, values, increments, seed })
    }

    /// Path driven by the tagged Brownian stream.
    pub fn sample(&self, tag: SeedTag) -> SamplePath {
        self.path(brownian_increments(&self.grid, tag), Some(tag))
            .expect("increment count matches the grid")
    }

    /// `Σ_{j < cells} (K̄(t_i, j) − K̄(t_k, j)) ΔW_j` for grid points `k < i`,
    /// summed over the cells before point `k`'s diagonal cell.
    pub(crate) fn memory_correction(&self, i: usize, k: usize, increments: &[f64]) -> f64 {
        let (ri, rk) = (self.row(i), self.row(k));
        // cells 0..=k lie before t_k (cell k ends at t_k)
        let mut acc = 0.0;
        for j in 0..=k {
            acc += (ri[j] - rk[j]) * increments[j];
        }
        acc
    }

    /// Discrete conditional variance `Σ_{j > k} K̄(t_i, j)² Δ`.
    pub fn discrete_window_variance(&self, i: usize, k: usize) -> f64 {
        let r = self.row(i);
        r[k + 1..].iter().map(|w| w * w).sum::<f64>() * self.grid.step()
    }
}

fn kernel_row(spec: &KernelSpec, grid: &TimeGrid, i: usize) -> Result<Vec<f64>> {
    let t = grid.points()[i];
    let delta = grid.step();
    let singular_origin = spec.singular_at_origin();
    let mut row = Vec::with_capacity(i + 1);
    for j in 0..=i {
        let (lo, hi) = (grid.node_time(j), grid.node_time(j + 1));
        let w = if j == i {
            (spec.square_integral(t, lo, t, DEFAULT_QUAD_POINTS)? / delta).sqrt()
        } else if j == 0 && singular_origin {
            (spec.square_integral(t, 0.0, hi, DEFAULT_QUAD_POINTS)? / delta).sqrt()
        } else {
            spec.eval_interior(t, 0.5 * (lo + hi))?
        };
        row.push(w);
    }
    Ok(row)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Values of a Volterra path driven by the given increments.
pub fn volterra_path(spec: &KernelSpec, grid: Arc<TimeGrid>, increments: Vec<f64>) -> Result<SamplePath> {
    VolterraSampler::new(spec.clone(), grid)?.path(increments, None)
}

/// Exact Gaussian sampler from a Cholesky factor of the covariance matrix.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    grid: Arc<TimeGrid>,
    factor: CholeskyFactor,
}

impl ExactSampler {
    pub fn new(spec: &KernelSpec, grid: Arc<TimeGrid>) -> Result<Self> {
        let factor = spec.covariance_matrix(&grid)?.cholesky()?;
        Ok(Self { grid, factor })
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter
    }

    pub fn sample(&self, tag: SeedTag) -> SamplePath {
        let n = self.grid.len();
        let z = standard_normals(tag, StreamPurpose::GaussianVector, n);
        let l = &self.factor.lower;
        let values = (0..n).map(|i| (0..=i).fold(0.0, |acc, j| acc + l[(i, j)] * z[j])).collect();
        SamplePath { grid: Arc::clone(&self.grid), origin: 0.0, values, increments: Vec::new(), seed: Some(tag) }
    }
}

pub fn exact_gaussian_path(spec: &KernelSpec, grid: Arc<TimeGrid>, tag: SeedTag) -> Result<SamplePath> {
    Ok(ExactSampler::new(spec, grid)?.sample(tag))
}

/// Two completely correlated fBms and their mixture `B^{H1}/N + B^{H2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedPair {
    pub path_h1: SamplePath,
    pub path_h2: SamplePath,
    pub mixture: SamplePath,
    pub stabilization: u32,
}

/// Samplers for the two kernels of a correlated mixture on a common grid.
#[derive(Debug, Clone)]
pub struct CorrelatedSampler {
    rough: VolterraSampler,
    smooth: VolterraSampler,
}

impl CorrelatedSampler {
    /// Requires `H1 ∈ (0, 1/2]` and `H2 ∈ (1/2, 1)`.
    pub fn new(h1: f64, h2: f64, grid: Arc<TimeGrid>) -> Result<Self> {
        if !(h1 > 0.0 && h1 <= 0.5) {
            return domain(format!("stabilizing Hurst parameter H1 must lie in (0, 1/2], got {h1}"));
        }
        if !(h2 > 0.5 && h2 < 1.0) {
            return domain(format!("Hurst parameter H2 must lie in (1/2, 1), got {h2}"));
        }
        Self::unchecked(h1, h2, grid)
    }

    pub(crate) fn unchecked(h1: f64, h2: f64, grid: Arc<TimeGrid>) -> Result<Self> {
        let horizon = grid.horizon();
        let rough = VolterraSampler::new(KernelSpec::fbm(h1, horizon)?, Arc::clone(&grid))?;
        let smooth = VolterraSampler::new(KernelSpec::fbm(h2, horizon)?, grid)?;
        Ok(Self { rough, smooth })
    }

    pub fn rough(&self) -> &VolterraSampler {
        &self.rough
    }

    pub fn smooth(&self) -> &VolterraSampler {
        &self.smooth
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        self.smooth.grid()
    }

    /// Both fBm paths from one shared increment vector.
    pub fn components(&self, tag: SeedTag) -> (SamplePath, SamplePath) {
        let increments = brownian_increments(self.grid(), tag);
        let rough = self.rough.path(increments.clone(), Some(tag)).expect("grid sized increments");
        let smooth = self.smooth.path(increments, Some(tag)).expect("grid sized increments");
        (rough, smooth)
    }

    pub fn pair(&self, stabilization: u32, tag: SeedTag) -> Result<CorrelatedPair> {
        let (path_h1, path_h2) = self.components(tag);
        combine(path_h1, path_h2, stabilization)
    }
}

/// Builds the pair from two paths that share their driving increments.
pub fn combine(path_h1: SamplePath, path_h2: SamplePath, stabilization: u32) -> Result<CorrelatedPair> {
    if stabilization == 0 {
        return domain("stabilization index N must be a positive integer");
    }
    let values = mixture_values(&path_h1.values, &path_h2.values, stabilization);
    let mixture = SamplePath { values, ..path_h2.clone() };
    Ok(CorrelatedPair { path_h1, path_h2, mixture, stabilization })
}

pub(crate) fn mixture_values(rough: &[f64], smooth: &[f64], stabilization: u32) -> Vec<f64> {
    let w = 1.0 / stabilization as f64;
    rough.iter().zip(smooth).map(|(a, b)| w * a + b).collect()
}

pub fn correlated_mixture(
    h1: f64,
    h2: f64,
    stabilization: u32,
    grid: Arc<TimeGrid>,
    tag: SeedTag,
) -> Result<CorrelatedPair> {
    CorrelatedSampler::new(h1, h2, grid)?.pair(stabilization, tag)
}

/// `max_{s<t} |X_t − X_s| / (t − s)^γ` over all node pairs, origin included.
pub fn holder_constant(path: &SamplePath, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("Hölder exponent must lie in (0,1), got {gamma}"));
    }
    let nodes: Vec<f64> = path.nodes().collect();
    let step = path.grid.step();
    let lag_power: Vec<f64> = (0..nodes.len()).map(|m| (m as f64 * step).powf(gamma)).collect();
    let mut best: f64 = 0.0;
    for l in 1..nodes.len() {
        for k in 0..l {
            best = best.max((nodes[l] - nodes[k]).abs() / lag_power[l - k]);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::uniform(1.0, n).unwrap())
    }

    #[test]
    fn grid_invariants() {
        let g = TimeGrid::uniform(3.0, 7).unwrap();
        assert_eq!(g.points()[0], g.step());
        assert_eq!(*g.points().last().unwrap(), 3.0);
        for w in g.points().windows(2) {
            assert!(((w[1] - w[0]) - g.step()).abs() <= 4.0 * f64::EPSILON * 3.0);
        }
        assert_eq!(g.node_of(0.0), Some(0));
        assert_eq!(g.node_of(3.0), Some(7));
        assert_eq!(g.node_of(1.0), None);
        assert!(TimeGrid::uniform(0.0, 4).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
    }

    #[test]
    fn brownian_kernel_gives_cumulative_sum() {
        let g = grid(64);
        let spec = KernelSpec::fbm(0.5, 1.0).unwrap();
        let inc = brownian_increments(&g, SeedTag::new(1, 0));
        let path = volterra_path(&spec, Arc::clone(&g), inc.clone()).unwrap();
        let mut running = 0.0;
        for (v, dw) in path.values.iter().zip(&inc) {
            running += dw;
            assert_eq!(*v, running);
        }
    }

    #[test]
    fn increments_are_deterministic() {
        let g = grid(32);
        assert_eq!(brownian_increments(&g, SeedTag::new(5, 9)), brownian_increments(&g, SeedTag::new(5, 9)));
    }

    #[test]
    fn increment_count_checked() {
        let g = grid(8);
        let sampler = VolterraSampler::new(KernelSpec::fbm(0.7, 1.0).unwrap(), g).unwrap();
        assert!(sampler.path(vec![0.0; 7], None).is_err());
    }

    #[test]
    fn mixture_is_constructed_from_components() {
        let g = grid(32);
        let pair = correlated_mixture(0.3, 0.75, 4, g, SeedTag::new(3, 1)).unwrap();
        assert_eq!(pair.path_h1.increments, pair.path_h2.increments);
        assert_eq!(pair.mixture.increments, pair.path_h2.increments);
        for i in 0..32 {
            assert_eq!(pair.mixture.values[i], 0.25 * pair.path_h1.values[i] + pair.path_h2.values[i]);
        }
    }

    #[test]
    fn equal_kernels_with_unit_weight_double() {
        let g = grid(32);
        let s = CorrelatedSampler::unchecked(0.7, 0.7, g).unwrap();
        let pair = s.pair(1, SeedTag::new(2, 2)).unwrap();
        for (m, v) in pair.mixture.values.iter().zip(&pair.path_h2.values) {
            assert_eq!(*m, 2.0 * v);
        }
    }

    #[test]
    fn doubling_n_halves_the_stabilizing_term() {
        let g = grid(64);
        let s = CorrelatedSampler::new(0.3, 0.75, g).unwrap();
        let tag = SeedTag::new(11, 0);
        let sup = |n: u32| {
            let p = s.pair(n, tag).unwrap();
            p.mixture.values.iter().zip(&p.path_h2.values).map(|(m, v)| (m - v).abs()).fold(0.0, f64::max)
        };
        let (a, b, c) = (sup(2), sup(4), sup(8));
        assert!((a / b - 2.0).abs() < 1e-10);
        assert!((b / c - 2.0).abs() < 1e-10);
    }

    #[test]
    fn hurst_ranges_checked() {
        let g = grid(8);
        assert!(correlated_mixture(0.6, 0.75, 1, Arc::clone(&g), SeedTag::new(0, 0)).is_err());
        assert!(correlated_mixture(0.3, 0.4, 1, Arc::clone(&g), SeedTag::new(0, 0)).is_err());
        assert!(correlated_mixture(0.3, 0.75, 0, g, SeedTag::new(0, 0)).is_err());
    }

    #[test]
    fn holder_of_simple_paths() {
        let g = grid(100);
        let c = 2.5;
        let linear = SamplePath {
            grid: Arc::clone(&g),
            origin: 0.0,
            values: g.points().iter().map(|t| c * t).collect(),
            increments: vec![],
            seed: None,
        };
        let h = holder_constant(&linear, 0.999).unwrap();
        assert!((h - c).abs() < 0.01 * c);
        let constant = SamplePath { values: vec![1.5; 100], origin: 1.5, ..linear.clone() };
        assert_eq!(holder_constant(&constant, 0.5).unwrap(), 0.0);
        assert!(holder_constant(&linear, 1.0).is_err());
    }
}
