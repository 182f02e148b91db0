//! Small-ball frequencies, occupation measures and Krylov-type functionals.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{fit_log_log, McReport, SlopeFit};
use crate::drifts::FiniteSetApprox;
use crate::ensemble::Ensemble;
use crate::error::{domain, Error, Result};
use crate::paths::SamplePath;
use crate::quadrature::gauss_legendre;

/// Minimum number of hits for an `α` to enter the slope fit.
pub const SMALL_BALL_COUNT_FLOOR: usize = 50;

/// Frequencies of `X_t ∈ (x, x + α)` over a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallStudy {
    pub x: f64,
    pub alphas: Vec<f64>,
    pub hits: Vec<usize>,
    pub reports: Vec<McReport>,
    /// Fit of `ln p̂` against `ln α` over the alphas meeting the count floor.
    pub fit: SlopeFit,
}

impl SmallBallStudy {
    /// `p̂ / (t^{-H} α^{1-H})` per `α`.
    pub fn bound_ratios(&self, t: f64, hurst: f64) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.reports)
            .map(|(a, r)| r.estimate / (t.powf(-hurst) * a.powf(1.0 - hurst)))
            .collect()
    }

    /// Growth of the running maximum of the bound ratio from the largest
    /// `α` to the smallest: `max_j ratio_j / ratio_0`. A bounded ratio keeps
    /// this near 1.
    pub fn bound_ratio_growth(&self, t: f64, hurst: f64) -> f64 {
        let ratios = self.bound_ratios(t, hurst);
        let first = ratios[0];
        ratios.iter().copied().fold(first, f64::max) / first
    }
}

/// `alphas` must be positive and strictly decreasing.
pub fn small_ball_probability(samples: &[f64], x: f64, alphas: &[f64], seed: Option<u64>) -> Result<SmallBallStudy> {
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0)) || alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return domain("alphas must be positive and strictly decreasing");
    }
    let n = samples.len();
    let hits: Vec<usize> =
        alphas.iter().map(|&a| samples.iter().filter(|&&v| v > x && v < x + a).count()).collect();
    let reports = hits.iter().map(|&h| McReport::binomial(h, n, seed)).collect::<Result<Vec<_>>>()?;
    let usable: Vec<(f64, f64)> = alphas
        .iter()
        .zip(&hits)
        .zip(&reports)
        .filter(|((_, &h), _)| h >= SMALL_BALL_COUNT_FLOOR)
        .map(|((&a, _), r)| (a, r.estimate))
        .collect();
    if usable.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "no α reaches {SMALL_BALL_COUNT_FLOOR} hits among {n} samples"
        )));
    }
    let fit = fit_log_log(&usable)?;
    Ok(SmallBallStudy { x, alphas: alphas.to_vec(), hits, reports, fit })
}

/// Set whose occupation measure is counted.
#[derive(Debug, Clone, PartialEq)]
pub enum OccupationSet {
    Finite(FiniteSetApprox),
    /// Half-open `[lo, hi)`, so adjacent intervals partition exactly.
    Interval { lo: f64, hi: f64 },
}

impl OccupationSet {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            OccupationSet::Finite(f) => f.contains(x),
            OccupationSet::Interval { lo, hi } => x >= *lo && x < *hi,
        }
    }
}

/// Number of left endpoints `t_0 = 0, …, t_{n-1}` with `X` in the set.
pub fn occupation_count(path: &SamplePath, set: &OccupationSet) -> usize {
    let n = path.grid.len();
    (0..n).filter(|&k| set.contains(path.at_node(k))).count()
}

/// Left-rectangle occupation time `Δ · #{k < n : X_{t_k} ∈ set}`.
pub fn occupation_time(path: &SamplePath, set: &OccupationSet) -> f64 {
    path.grid.step() * occupation_count(path, set) as f64
}

/// A nonnegative integrand `g(t, x)` supported in a box, with the exponent
/// `q` of the norm `(∫∫ g^q)^{1/q}`.
#[derive(Clone)]
pub struct KrylovIntegrand {
    pub g: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub q: f64,
    /// `(t_lo, t_hi, x_lo, x_hi)`
    pub support: (f64, f64, f64, f64),
}

impl fmt::Debug for KrylovIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KrylovIntegrand(q = {}, support = {:?})", self.q, self.support)
    }
}

impl KrylovIntegrand {
    /// `g(t, x) = 1_{[lo, hi]}(x)` on `[0, T]`.
    pub fn indicator(lo: f64, hi: f64, horizon: f64, q: f64) -> Self {
        Self {
            g: Arc::new(move |_, x| if x >= lo && x <= hi { 1.0 } else { 0.0 }),
            q,
            support: (0.0, horizon, lo, hi),
        }
    }

    pub fn zero(horizon: f64, q: f64) -> Self {
        Self { g: Arc::new(|_, _| 0.0), q, support: (0.0, horizon, 0.0, 1.0) }
    }

    /// `(∫∫ g^q dx dt)^{1/q}` by a tensor Gauss-Legendre rule on the support.
    pub fn lq_norm(&self) -> f64 {
        let rule = gauss_legendre(64);
        let (t0, t1, x0, x1) = self.support;
        let inner = |t: f64| rule.integrate(x0, x1, |x| (self.g)(t, x).max(0.0).powf(self.q));
        rule.integrate(t0, t1, inner).powf(1.0 / self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    /// Estimate of `E[∫_0^T g(t, X_t) dt]`.
    pub report: McReport,
    pub lq_norm: f64,
}

/// Monte Carlo estimate of `E[∫_0^T g(t, X_t) dt]` with left-rectangle
/// time integrals; requires `q > 1 + H`.
pub fn krylov_functional(g: &KrylovIntegrand, hurst: f64, ensemble: &Ensemble) -> Result<KrylovReport> {
    if !(g.q > 1.0 + hurst) {
        return domain(format!("Krylov exponent q = {} must exceed 1 + H = {}", g.q, 1.0 + hurst));
    }
    let per_path: Vec<f64> = ensemble
        .paths
        .par_iter()
        .map(|p| {
            let step = p.grid.step();
            (0..p.grid.len()).fold(0.0, |acc, k| acc + (g.g)(p.grid.node_time(k), p.at_node(k)) * step)
        })
        .collect();
    let report = McReport::from_samples(&per_path, Some(ensemble.master_seed))?;
    Ok(KrylovReport { report, lq_norm: g.lq_norm() })
}
