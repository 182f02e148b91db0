//! Volterra kernels `K(t, s)`, local variances and covariance functions.
//!
//! Three kernel families are supported: the unit-variance fBm Volterra
//! kernel, the Riemann-Liouville kernel `(t - s)^(H - 1/2)`, and finite
//! weighted sums of those (completely correlated mixtures driven by one
//! Brownian motion).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::paths::TimeGrid;
use crate::quadrature::{graded_integral, EndBehavior};
use crate::special::{ln_gamma, unit_interval};
use crate::stats::{fit_log_log, SlopeFit};

/// Gauss nodes per quadrature cell used when a caller does not choose.
pub const DEFAULT_QUAD_POINTS: usize = 16;
/// Relative error bound for kernel quadratures.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Which Volterra kernel and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    FbmVolterra { hurst: f64 },
    RiemannLiouville { hurst: f64 },
    Mixture(Vec<(f64, KernelKind)>),
}

impl KernelKind {
    fn validate(&self) -> Result<()> {
        match self {
            KernelKind::FbmVolterra { hurst } | KernelKind::RiemannLiouville { hurst } => {
                if !(*hurst > 0.0 && *hurst < 1.0) {
                    return domain(format!("Hurst parameter must lie in (0,1), got {hurst}"));
                }
                Ok(())
            }
            KernelKind::Mixture(parts) => {
                if parts.is_empty() {
                    return domain("a mixture kernel needs at least one component");
                }
                for (w, inner) in parts {
                    if !w.is_finite() {
                        return domain(format!("mixture weight {w} is not finite"));
                    }
                    inner.validate()?;
                }
                Ok(())
            }
        }
    }

    fn flatten(&self, weight: f64, out: &mut Vec<Component>) {
        match self {
            KernelKind::FbmVolterra { hurst } => out.push(Component::fbm(weight, *hurst)),
            KernelKind::RiemannLiouville { hurst } => out.push(Component::rl(weight, *hurst)),
            KernelKind::Mixture(parts) => {
                for (w, inner) in parts {
                    inner.flatten(weight * w, out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    Fbm,
    RiemannLiouville,
}

/// One weighted kernel with its normalisation precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    weight: f64,
    family: Family,
    hurst: f64,
    scale: f64,
}

impl Component {
    fn fbm(weight: f64, hurst: f64) -> Self {
        Self { weight, family: Family::Fbm, hurst, scale: fbm_kernel_scale(hurst) }
    }

    fn rl(weight: f64, hurst: f64) -> Self {
        Self { weight, family: Family::RiemannLiouville, hurst, scale: 1.0 }
    }

    fn brownian(&self) -> bool {
        self.hurst == 0.5
    }

    fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if self.brownian() {
            return Ok(1.0);
        }
        let alpha = self.hurst - 0.5;
        let lag = t - s;
        match self.family {
            Family::RiemannLiouville => Ok(lag.powf(alpha)),
            Family::Fbm => {
                // Pfaff form of F(H-1/2, 1/2-H; H+1/2; 1-t/s): argument
                // (t-s)/t with exact complement s/t.
                let w = lag / t;
                let y = s / t;
                let f = unit_interval(alpha, 2.0 * self.hurst, self.hurst + 0.5, w, y)?;
                Ok(self.scale * (lag * y).powf(alpha) * f)
            }
        }
    }
}

/// Constant that makes `(t-s)^(H-1/2) F(H-1/2, 1/2-H; H+1/2; 1-t/s)` the
/// kernel of a unit-variance fBm.
fn fbm_kernel_scale(hurst: f64) -> f64 {
    if hurst == 0.5 {
        return 1.0;
    }
    let ln = (2.0 * hurst).ln() + ln_gamma(1.5 - hurst).expect("1.5 - H > 0")
        - ln_gamma(hurst + 0.5).expect("H + 0.5 > 0")
        - ln_gamma(2.0 - 2.0 * hurst).expect("2 - 2H > 0");
    (0.5 * ln).exp()
}

/// An immutable, validated Volterra kernel on the horizon `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    horizon: f64,
    components: Vec<Component>,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, horizon: f64) -> Result<Self> {
        kind.validate()?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        let mut components = Vec::new();
        kind.flatten(1.0, &mut components);
        Ok(Self { kind, horizon, components })
    }

    pub fn fbm(hurst: f64, horizon: f64) -> Result<Self> {
        Self::new(KernelKind::FbmVolterra { hurst }, horizon)
    }

    pub fn riemann_liouville(hurst: f64, horizon: f64) -> Result<Self> {
        Self::new(KernelKind::RiemannLiouville { hurst }, horizon)
    }

    /// `weight_1 K_{H_1} + weight_2 K_{H_2}` with fBm kernels.
    pub fn fbm_mixture(parts: &[(f64, f64)], horizon: f64) -> Result<Self> {
        let parts = parts
            .iter()
            .map(|&(w, h)| (w, KernelKind::FbmVolterra { hurst: h }))
            .collect();
        Self::new(KernelKind::Mixture(parts), horizon)
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// True when the kernel is identically one (Brownian motion).
    pub fn is_brownian(&self) -> bool {
        self.components.len() == 1 && self.components[0].weight == 1.0 && self.components[0].brownian()
    }

    /// Hurst parameter of a single-component kernel with unit weight.
    pub fn single_hurst(&self) -> Option<f64> {
        match self.components.as_slice() {
            [c] if c.weight == 1.0 => Some(c.hurst),
            _ => None,
        }
    }

    fn is_pure_fbm(&self) -> Option<(f64, f64)> {
        match self.components.as_slice() {
            [c] if c.family == Family::Fbm => Some((c.weight, c.hurst)),
            _ => None,
        }
    }

    /// `K(t, s)` for `0 < s < t <= T`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0) || !(s < t) || t > self.horizon {
            return domain(format!(
                "kernel needs 0 < s < t <= T, got t = {t}, s = {s}, T = {}",
                self.horizon
            ));
        }
        self.eval_interior(t, s)
    }

    pub(crate) fn eval_interior(&self, t: f64, s: f64) -> Result<f64> {
        let mut components = self.components.iter();
        let first = components.next().expect("at least one component");
        let mut acc = first.weight * first.eval(t, s)?;
        for c in components {
            acc += c.weight * c.eval(t, s)?;
        }
        Ok(acc)
    }

    /// Exponent `p` with `K(t,s)^2 ~ (t-s)^p` as `s -> t`.
    fn diagonal_exponent(&self) -> f64 {
        self.active().map(|c| 2.0 * c.hurst - 1.0).fold(f64::INFINITY, f64::min)
    }

    /// Exponent `p` with `|K(t,s)| ~ s^p` as `s -> 0`.
    fn origin_exponent(&self) -> f64 {
        self.active()
            .map(|c| match c.family {
                Family::Fbm => -(c.hurst - 0.5).abs(),
                Family::RiemannLiouville => 0.0,
            })
            .fold(0.0, f64::min)
    }

    fn active(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.weight != 0.0)
    }

    pub(crate) fn singular_at_origin(&self) -> bool {
        self.origin_exponent() < 0.0
    }

    /// `∫_lo^hi K(t,s)^2 ds` for `0 <= lo < hi <= t`.
    pub fn square_integral(&self, t: f64, lo: f64, hi: f64, quad_points: usize) -> Result<f64> {
        if !(lo >= 0.0 && hi > lo && hi <= t && t <= self.horizon) {
            return domain(format!("invalid window [{lo}, {hi}] at t = {t}"));
        }
        if self.is_brownian() {
            return Ok(hi - lo);
        }
        let left = self.left_behavior(lo, hi, 2.0 * self.origin_exponent());
        let right = if hi == t {
            EndBehavior::Power(self.diagonal_exponent())
        } else {
            EndBehavior::Smooth
        };
        let r = graded_integral(lo, hi, left, right, quad_points, |s| {
            let k = self.eval_interior(t, s)?;
            Ok(k * k)
        })?;
        check_quadrature(r.value, r.error)?;
        Ok(r.value)
    }

    fn left_behavior(&self, lo: f64, hi: f64, origin_power: f64) -> EndBehavior {
        if origin_power >= 0.0 {
            EndBehavior::Smooth
        } else if lo == 0.0 {
            EndBehavior::Power(origin_power)
        } else if lo < hi - lo {
            EndBehavior::Steep
        } else {
            EndBehavior::Smooth
        }
    }

    /// Conditional variance `κ_ε² = ∫_{t-ε}^t K(t,s)² ds`.
    pub fn local_variance(&self, t: f64, epsilon: f64, quad_points: usize) -> Result<LocalVariance> {
        if !(epsilon > 0.0 && epsilon <= t && t <= self.horizon) {
            return domain(format!(
                "local variance needs 0 < ε <= t <= T, got ε = {epsilon}, t = {t}, T = {}",
                self.horizon
            ));
        }
        if quad_points < 2 {
            return domain("local variance needs at least 2 quadrature points");
        }
        let lo = if epsilon == t { 0.0 } else { t - epsilon };
        let value = self.square_integral(t, lo, t, quad_points)?;
        Ok(LocalVariance { t, epsilon, value })
    }

    /// `Cov(B_s, B_t) = ∫_0^{min(s,t)} K(t,u) K(s,u) du`.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        if !(s >= 0.0 && t >= 0.0 && s <= self.horizon && t <= self.horizon) {
            return domain(format!("covariance needs s, t in [0, T], got {s}, {t}"));
        }
        if let Some((w, h)) = self.is_pure_fbm() {
            return Ok(w * w * fbm_covariance(h, s, t)?);
        }
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        if s == 0.0 {
            return Ok(0.0);
        }
        if s == t {
            return self.square_integral(t, 0.0, t, DEFAULT_QUAD_POINTS);
        }
        if self.is_brownian() {
            return Ok(s);
        }
        let left = self.left_behavior(0.0, s, 2.0 * self.origin_exponent());
        let right = EndBehavior::Power(self.diagonal_exponent() / 2.0);
        let r = graded_integral(0.0, s, left, right, DEFAULT_QUAD_POINTS, |u| {
            Ok(self.eval_interior(t, u)? * self.eval_interior(s, u)?)
        })?;
        check_quadrature(r.value, r.error)?;
        Ok(r.value)
    }

    /// Covariance matrix of the process on the grid points.
    pub fn covariance_matrix(&self, grid: &TimeGrid) -> Result<CovarianceMatrix> {
        let times = grid.points();
        let n = times.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..=i).map(|j| self.covariance(times[j], times[i])).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(CovarianceMatrix { times: times.to_vec(), matrix: m })
    }
}

fn check_quadrature(value: f64, error: f64) -> Result<()> {
    if error > QUADRATURE_TOLERANCE * value.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Quadrature { estimate: error / value.abs(), tolerance: QUADRATURE_TOLERANCE });
    }
    Ok(())
}

/// `K(t, s)` as a free function.
pub fn kernel_eval(spec: &KernelSpec, t: f64, s: f64) -> Result<f64> {
    spec.eval(t, s)
}

/// `κ_ε²` over the window `(t - ε, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalVariance {
    pub t: f64,
    pub epsilon: f64,
    pub value: f64,
}

impl LocalVariance {
    pub fn kappa(&self) -> f64 {
        self.value.sqrt()
    }
}

pub fn local_variance(spec: &KernelSpec, t: f64, epsilon: f64, quad_points: usize) -> Result<LocalVariance> {
    spec.local_variance(t, epsilon, quad_points)
}

/// Closed-form fBm covariance `(|t|^2H + |s|^2H - |t-s|^2H) / 2`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> Result<f64> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return domain(format!("Hurst parameter must lie in (0,1), got {hurst}"));
    }
    let two_h = 2.0 * hurst;
    Ok(0.5 * (t.abs().powf(two_h) + s.abs().powf(two_h) - (t - s).abs().powf(two_h)))
}

/// Symmetric covariance matrix on a set of times.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub times: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

/// Lower Cholesky factor and the jitter that was needed to obtain it.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub lower: DMatrix<f64>,
    pub jitter: f64,
}

impl CovarianceMatrix {
    /// Cholesky factorisation; on failure retries with diagonal jitter
    /// `1e-12 trace/n`, then once more with `1e-10 trace/n`.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let n = self.matrix.nrows();
        let mean_diag = self.matrix.trace() / n as f64;
        let mut last = 0.0;
        for jitter in [0.0, 1e-12 * mean_diag, 1e-10 * mean_diag] {
            let mut m = self.matrix.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            last = jitter;
            if let Some(c) = nalgebra::linalg::Cholesky::new(m) {
                return Ok(CholeskyFactor { lower: c.l(), jitter });
            }
        }
        Err(Error::NotPositiveDefinite { jitter: last })
    }
}

/// One row of a kernel lower-bound study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub t: f64,
    pub epsilon: f64,
    pub kappa: f64,
    /// `κ_ε / ε^H`
    pub ratio: f64,
}

/// Empirical check of `κ_ε >= c ε^H` on a grid of windows.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub hurst: f64,
    pub rows: Vec<BoundRow>,
    pub inf_ratio: f64,
    /// Pooled log-log fit of `κ_ε` against `ε` over all rows.
    pub slope_fit: SlopeFit,
    /// Per-`t` slopes, in the order of the `t` grid.
    pub slopes_by_t: Vec<(f64, f64)>,
}

impl BoundReport {
    pub fn slope(&self) -> f64 {
        self.slope_fit.slope
    }

    /// Positive infimum and pooled slope within `tolerance` of `H`. The
    /// per-`t` slopes are diagnostics: windows with `ε` close to `t` bend
    /// the short fits for large `H`.
    pub fn certifies(&self, tolerance: f64) -> bool {
        self.inf_ratio > 0.0 && (self.slope() - self.hurst).abs() <= tolerance
    }

    /// Largest deviation `|slope_t - H|` over the per-`t` fits.
    pub fn max_slope_deviation(&self) -> f64 {
        self.slopes_by_t.iter().map(|&(_, s)| (s - self.hurst).abs()).fold(0.0, f64::max)
    }
}

pub fn verify_kernel_lower_bound(
    spec: &KernelSpec,
    hurst: f64,
    eps_grid: &[f64],
    t_grid: &[f64],
) -> Result<BoundReport> {
    if eps_grid.is_empty() || t_grid.is_empty() {
        return domain("kernel bound grids must be nonempty");
    }
    let pairs: Vec<(f64, f64)> = t_grid.iter().flat_map(|&t| eps_grid.iter().map(move |&e| (t, e))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(t, epsilon)| {
            let kappa = spec.local_variance(t, epsilon, DEFAULT_QUAD_POINTS)?.kappa();
            Ok(BoundRow { t, epsilon, kappa, ratio: kappa / epsilon.powf(hurst) })
        })
        .collect::<Result<Vec<_>>>()?;
    let inf_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let slope_fit = fit_log_log(&rows.iter().map(|r| (r.epsilon, r.kappa)).collect::<Vec<_>>())?;
    let mut slopes_by_t = Vec::with_capacity(t_grid.len());
    if eps_grid.len() >= 3 {
        for &t in t_grid {
            let pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.t == t).map(|r| (r.epsilon, r.kappa)).collect();
            slopes_by_t.push((t, fit_log_log(&pts)?.slope));
        }
    }
    Ok(BoundReport { hurst, rows, inf_ratio, slope_fit, slopes_by_t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_kernel_is_one() {
        let k = KernelSpec::fbm(0.5, 1.0).unwrap();
        assert_eq!(k.eval(1.0, 0.3).unwrap(), 1.0);
        assert!(k.is_brownian());
    }

    #[test]
    fn riemann_liouville_closed_form() {
        let k = KernelSpec::riemann_liouville(0.75, 2.0).unwrap();
        let v = k.eval(2.0, 1.75).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn eval_domain_errors() {
        let k = KernelSpec::fbm(0.7, 1.0).unwrap();
        assert!(k.eval(1.0, 0.0).is_err());
        assert!(k.eval(0.5, 0.5).is_err());
        assert!(k.eval(1.5, 0.5).is_err());
        assert!(KernelSpec::fbm(1.2, 1.0).is_err());
        assert!(KernelSpec::fbm(0.5, 0.0).is_err());
        assert!(KernelSpec::new(KernelKind::Mixture(vec![]), 1.0).is_err());
    }

    #[test]
    fn single_unit_component_mixture_matches_component() {
        let inner = KernelSpec::fbm(0.7, 1.0).unwrap();
        let mix = KernelSpec::new(KernelKind::Mixture(vec![(1.0, KernelKind::FbmVolterra { hurst: 0.7 })]), 1.0)
            .unwrap();
        for &(t, s) in &[(1.0, 0.2), (0.6, 0.59), (0.9, 0.001)] {
            assert_eq!(mix.eval(t, s).unwrap(), inner.eval(t, s).unwrap());
        }
    }

    #[test]
    fn riemann_liouville_local_variance() {
        let k = KernelSpec::riemann_liouville(0.75, 2.0).unwrap();
        let full = k.local_variance(1.0, 1.0, 16).unwrap().value;
        assert!((full - 2.0 / 3.0).abs() < 1e-10);
        let window = k.local_variance(2.0, 0.5, 16).unwrap().value;
        assert!((window - 0.5f64.powf(1.5) / 1.5).abs() < 1e-10);
    }

    #[test]
    fn fbm_full_window_is_t_to_2h() {
        for &h in &[0.3, 0.6, 0.75, 0.9] {
            let k = KernelSpec::fbm(h, 1.0).unwrap();
            let v = k.local_variance(0.8, 0.8, 16).unwrap().value;
            assert!((v - 0.8f64.powf(2.0 * h)).abs() < 1e-8, "H={h}: {v}");
        }
    }

    #[test]
    fn local_variance_is_additive() {
        let k = KernelSpec::fbm_mixture(&[(0.25, 0.3), (1.0, 0.75)], 1.0).unwrap();
        let (t, eps) = (0.9, 0.2);
        let whole = k.local_variance(t, eps, 16).unwrap().value;
        let near = k.local_variance(t, eps / 2.0, 16).unwrap().value;
        let far = k.square_integral(t, t - eps, t - eps / 2.0, 16).unwrap();
        assert!((whole - near - far).abs() < 1e-10 * whole);
    }

    #[test]
    fn local_variance_errors() {
        let k = KernelSpec::fbm(0.7, 1.0).unwrap();
        assert!(k.local_variance(1.0, 0.0, 16).is_err());
        assert!(k.local_variance(0.5, 0.6, 16).is_err());
        assert!(k.local_variance(1.5, 0.1, 16).is_err());
        assert!(k.local_variance(1.0, 0.1, 1).is_err());
    }

    #[test]
    fn fbm_covariance_values() {
        assert_eq!(fbm_covariance(0.75, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(fbm_covariance(0.3, 0.0, 0.7).unwrap(), 0.0);
        assert!((fbm_covariance(0.5, 0.3, 0.9).unwrap() - 0.3).abs() < 1e-15);
        assert!(fbm_covariance(1.0, 0.3, 0.9).is_err());
    }

    #[test]
    fn kernel_positive_with_diagonal_power_lower_bound() {
        let h = 0.75;
        let k = KernelSpec::fbm(h, 1.0).unwrap();
        let mut min_ratio = f64::INFINITY;
        for i in 1..=20 {
            let t = i as f64 / 20.0;
            for j in 1..40 {
                let s = t * j as f64 / 40.0;
                let v = k.eval(t, s).unwrap();
                assert!(v > 0.0);
                min_ratio = min_ratio.min(v / (t - s).powf(h - 0.5));
            }
        }
        assert!(min_ratio > 0.5, "{min_ratio}");
    }

    #[test]
    fn bound_report_for_riemann_liouville_is_exact() {
        let h = 0.6;
        let k = KernelSpec::riemann_liouville(h, 1.0).unwrap();
        let eps: Vec<f64> = (2..=10).map(|k| 2f64.powi(-k)).collect();
        let r = verify_kernel_lower_bound(&k, h, &eps, &[0.5, 1.0]).unwrap();
        let expected = 1.0 / (2.0 * h).sqrt();
        assert!((r.inf_ratio - expected).abs() < 1e-9);
        assert!((r.slope() - h).abs() < 1e-9);
        assert!(r.certifies(0.02));
    }

    #[test]
    fn covariance_matrix_brownian() {
        let k = KernelSpec::fbm(0.5, 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let c = k.covariance_matrix(&grid).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = grid.points()[i].min(grid.points()[j]);
                assert!((c.matrix[(i, j)] - expected).abs() < 1e-15);
            }
        }
        assert!(c.cholesky().is_ok());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = CovarianceMatrix {
            times: vec![1.0, 2.0],
            matrix: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
        };
        assert!(matches!(m.cholesky(), Err(Error::NotPositiveDefinite { .. })));
    }
}
