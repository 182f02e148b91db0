//! Monte Carlo estimators and scaling fits.

mod besov;
mod convergence;
mod occupation;

pub use besov::{besov_norm, besov_profile, BesovEstimate};
pub use convergence::{convergence_study, l2_distance, ConvergenceRow, ConvergenceStudy};
pub use occupation::{
    krylov_functional, occupation_count, occupation_time, small_ball_probability, KrylovIntegrand, KrylovReport, OccupationSet,
    SmallBallStudy, SMALL_BALL_COUNT_FLOOR,
};

use crate::error::{Error, Result};

/// Pairwise summation in a fixed order, independent of thread count.
pub fn tree_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    tree_sum(&values[..mid]) + tree_sum(&values[mid..])
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub ci95: (f64, f64),
    pub seed: Option<u64>,
}

impl McReport {
    pub fn new(estimate: f64, std_error: f64, n_samples: usize, seed: Option<u64>) -> Self {
        let half = 1.96 * std_error;
        Self { estimate, std_error, n_samples, ci95: (estimate - half, estimate + half), seed }
    }

    /// Sample mean and its standard error `s / sqrt(n)`.
    pub fn from_samples(samples: &[f64], seed: Option<u64>) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InsufficientSamples(format!("need at least 2 samples, got {n}")));
        }
        let mean = tree_sum(samples) / n as f64;
        let squares: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let variance = tree_sum(&squares) / (n - 1) as f64;
        Ok(Self::new(mean, (variance / n as f64).sqrt(), n, seed))
    }

    /// Sample frequency `k / n` with the binomial standard error.
    pub fn binomial(hits: usize, n: usize, seed: Option<u64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientSamples(format!("need at least 2 samples, got {n}")));
        }
        let p = hits as f64 / n as f64;
        Ok(Self::new(p, (p * (1.0 - p) / n as f64).sqrt(), n, seed))
    }

    /// `|estimate - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fits `ln y = intercept + slope ln x` to positive `(x, y)` pairs.
pub fn fit_log_log(data: &[(f64, f64)]) -> Result<SlopeFit> {
    if data.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive data".into()));
    }
    let points: Vec<(f64, f64)> = data.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    fit_line(points)
}

/// Ordinary least squares on already-transformed points.
pub fn fit_line(points: Vec<(f64, f64)>) -> Result<SlopeFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientSamples(format!("slope fit needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("slope fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(SlopeFit { slope, intercept, r_squared, points })
}

/// A statistic with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub std_error: f64,
}

/// Sample moments; skewness and kurtosis are `None` for constant data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityReport {
    pub n_samples: usize,
    pub mean: Moment,
    pub variance: Moment,
    pub skewness: Option<Moment>,
    pub excess_kurtosis: Option<Moment>,
}

impl NormalityReport {
    /// All four statistics lie within `k` standard errors of a standard
    /// normal's `(0, 1, 0, 0)`.
    pub fn consistent_with_standard_normal(&self, k: f64) -> bool {
        let ok = |m: Moment, target: f64| (m.value - target).abs() <= k * m.std_error;
        ok(self.mean, 0.0)
            && ok(self.variance, 1.0)
            && self.skewness.is_some_and(|m| ok(m, 0.0))
            && self.excess_kurtosis.is_some_and(|m| ok(m, 0.0))
    }
}

/// Minimum sample count accepted by `normality_check`.
pub const NORMALITY_MIN_SAMPLES: usize = 100;

/// Mean, unbiased variance, skewness and excess kurtosis with
/// leave-one-out jackknife standard errors.
pub fn normality_check(samples: &[f64]) -> Result<NormalityReport> {
    let n = samples.len();
    if n < NORMALITY_MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "normality check needs at least {NORMALITY_MIN_SAMPLES} samples, got {n}"
        )));
    }
    let nf = n as f64;
    let center = tree_sum(samples) / nf;
    let d: Vec<f64> = samples.iter().map(|x| x - center).collect();
    let power_sum = |k: i32| tree_sum(&d.iter().map(|x| x.powi(k)).collect::<Vec<_>>());
    let s = [power_sum(1), power_sum(2), power_sum(3), power_sum(4)];

    let full = moments(s, nf);
    let loo: Vec<[f64; 4]> = d
        .iter()
        .map(|&x| moments([s[0] - x, s[1] - x * x, s[2] - x.powi(3), s[3] - x.powi(4)], nf - 1.0))
        .collect();
    let jackknife = |k: usize| {
        let vals: Vec<f64> = loo.iter().map(|m| m[k]).collect();
        let mean = tree_sum(&vals) / nf;
        let ss = tree_sum(&vals.iter().map(|v| (v - mean) * (v - mean)).collect::<Vec<_>>());
        ((nf - 1.0) / nf * ss).sqrt()
    };
    let moment = |k: usize| Moment { value: full[k], std_error: jackknife(k) };
    let degenerate = full[1] == 0.0 || loo.iter().any(|m| !m[2].is_finite() || !m[3].is_finite());
    Ok(NormalityReport {
        n_samples: n,
        mean: Moment { value: center + full[0], std_error: jackknife(0) },
        variance: moment(1),
        skewness: (!degenerate).then(|| moment(2)),
        excess_kurtosis: (!degenerate).then(|| moment(3)),
    })
}

/// `[mean offset, unbiased variance, skewness, excess kurtosis]` from power
/// sums of shifted data.
fn moments(s: [f64; 4], n: f64) -> [f64; 4] {
    let mu = s[0] / n;
    let (r2, r3, r4) = (s[1] / n, s[2] / n, s[3] / n);
    let m2 = (r2 - mu * mu).max(0.0);
    let m3 = r3 - 3.0 * mu * r2 + 2.0 * mu.powi(3);
    let m4 = r4 - 4.0 * mu * r3 + 6.0 * mu * mu * r2 - 3.0 * mu.powi(4);
    let variance = m2 * n / (n - 1.0);
    if m2 == 0.0 {
        return [mu, variance, f64::NAN, f64::NAN];
    }
    [mu, variance, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0]
}
