//! Drift coefficients `b(t, x)`: the singular catalog, structural checks,
//! mollification and the Lamperti change of variables.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::quadrature::{gauss_legendre, GaussLegendre};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type DriftClosure = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Finite set of reals, optionally fattened to `{x : dist(x, set) < δ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSetApprox {
    elements: Vec<f64>,
    delta: f64,
}

impl FiniteSetApprox {
    pub fn new(mut elements: Vec<f64>, delta: f64) -> Result<Self> {
        if elements.iter().any(|x| !x.is_finite()) {
            return domain("set elements must be finite");
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return domain(format!("fattening δ must be a finite value >= 0, got {delta}"));
        }
        elements.sort_by(f64::total_cmp);
        elements.dedup();
        Ok(Self { elements, delta })
    }

    /// `{p/q : |p| <= max_numerator, 1 <= q <= max_denominator}`.
    pub fn rationals(max_numerator: u32, max_denominator: u32, delta: f64) -> Result<Self> {
        let p = max_numerator as i64;
        let elements = (1..=max_denominator as i64)
            .flat_map(|q| (-p..=p).map(move |p| p as f64 / q as f64))
            .collect();
        Self::new(elements, delta)
    }

    pub fn elements(&self) -> &[f64] {
        &self.elements
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.elements.clone(), delta)
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.delta == 0.0 {
            return self.elements.binary_search_by(|e| e.total_cmp(&x)).is_ok();
        }
        let i = self.elements.partition_point(|&e| e < x);
        let near = |j: usize| self.elements.get(j).is_some_and(|&e| (e - x).abs() < self.delta);
        near(i) || (i > 0 && near(i - 1))
    }

    /// Lebesgue measure of the fattened set.
    pub fn measure(&self) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut current: Option<(f64, f64)> = None;
        for &e in &self.elements {
            let (lo, hi) = (e - self.delta, e + self.delta);
            current = match current {
                Some((a, b)) if lo <= b => Some((a, hi)),
                Some((a, b)) => {
                    total += b - a;
                    Some((lo, hi))
                }
                None => Some((lo, hi)),
            };
        }
        if let Some((a, b)) = current {
            total += b - a;
        }
        total
    }

    /// Discontinuities of the indicator of the fattened set.
    fn edges(&self) -> Vec<f64> {
        if self.delta == 0.0 {
            return Vec::new();
        }
        self.elements.iter().flat_map(|&e| [e - self.delta, e + self.delta]).collect()
    }
}

/// Elementary drift functions of `x` (and `t` for the custom variant).
#[derive(Clone)]
pub enum DriftFn {
    Constant(f64),
    /// `slope x + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `clamp(slope x + intercept, lo, hi)`
    ClampedAffine { slope: f64, intercept: f64, lo: f64, hi: f64 },
    /// `scale tanh(rate x)`
    Tanh { scale: f64, rate: f64 },
    /// `height exp(-(x - center)^2 / (2 width^2))`
    GaussianBump { height: f64, center: f64, width: f64 },
    Mollified(Arc<Mollified>),
    Custom { name: String, f: DriftClosure, sup: Option<f64>, lipschitz: Option<f64> },
}

impl fmt::Debug for DriftFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftFn::Constant(c) => write!(f, "Constant({c})"),
            DriftFn::Affine { slope, intercept } => write!(f, "Affine({slope} x + {intercept})"),
            DriftFn::ClampedAffine { slope, intercept, lo, hi } => {
                write!(f, "ClampedAffine({slope} x + {intercept} in [{lo}, {hi}])")
            }
            DriftFn::Tanh { scale, rate } => write!(f, "Tanh({scale} tanh({rate} x))"),
            DriftFn::GaussianBump { height, center, width } => {
                write!(f, "GaussianBump({height}, {center}, {width})")
            }
            DriftFn::Mollified(m) => write!(f, "Mollified(n = {}, {:?}, {:?})", m.level, m.shape, m.base),
            DriftFn::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl DriftFn {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            DriftFn::Constant(c) => *c,
            DriftFn::Affine { slope, intercept } => slope * x + intercept,
            DriftFn::ClampedAffine { slope, intercept, lo, hi } => (slope * x + intercept).clamp(*lo, *hi),
            DriftFn::Tanh { scale, rate } => scale * (rate * x).tanh(),
            DriftFn::GaussianBump { height, center, width } => {
                let z = (x - center) / width;
                height * (-0.5 * z * z).exp()
            }
            DriftFn::Mollified(m) => m.eval(t, x),
            DriftFn::Custom { f, .. } => f(t, x),
        }
    }

    /// `sup |f|` over `[0,T] x ℝ` when it is finite.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            DriftFn::Constant(c) => Some(c.abs()),
            DriftFn::Affine { slope, intercept } => (*slope == 0.0).then_some(intercept.abs()),
            DriftFn::ClampedAffine { lo, hi, .. } => Some(lo.abs().max(hi.abs())),
            DriftFn::Tanh { scale, .. } => Some(scale.abs()),
            DriftFn::GaussianBump { height, .. } => Some(height.abs()),
            DriftFn::Mollified(m) => m.base.sup_bound(),
            DriftFn::Custom { sup, .. } => *sup,
        }
    }

    /// Lipschitz constant in `x` when known.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            DriftFn::Constant(_) => Some(0.0),
            DriftFn::Affine { slope, .. } | DriftFn::ClampedAffine { slope, .. } => Some(slope.abs()),
            DriftFn::Tanh { scale, rate } => Some((scale * rate).abs()),
            DriftFn::GaussianBump { height, width, .. } => Some(height.abs() / width.abs() * (-0.5f64).exp()),
            DriftFn::Mollified(m) => m.lipschitz(),
            DriftFn::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}

/// One term `f_i 1_{M_i}` of a Dirichlet-type drift.
#[derive(Debug, Clone)]
pub struct DirichletTerm {
    pub f: DriftFn,
    /// Integrability exponent, `f64::INFINITY` allowed.
    pub q: f64,
    pub set: FiniteSetApprox,
}

#[derive(Debug, Clone)]
pub enum DriftKind {
    Smooth { f: DriftFn, lipschitz: f64 },
    /// `pieces[k]` applies on `[a_k, a_{k+1})`, with `a_0 = -∞`, `a_{m+1} = ∞`.
    Piecewise { breakpoints: Vec<f64>, pieces: Vec<DriftFn>, growth: f64 },
    Dirichlet { terms: Vec<DirichletTerm> },
    /// `b̃(t, x) 1_{x ∉ F}`, with `b̃ ≡ 1` when absent.
    IndicatorComplement { set: FiniteSetApprox, inner: Option<Box<DriftSpec>> },
    /// `scale sign(x - center)` with `sign(0) = 0`.
    Sign { scale: f64, center: f64 },
    /// `b(t, F⁻¹(y)) / σ(F⁻¹(y))`.
    Lamperti { base: Box<DriftSpec>, map: Arc<LampertiMap> },
}

/// An immutable drift coefficient.
#[derive(Debug, Clone)]
pub struct DriftSpec {
    kind: DriftKind,
}

impl DriftSpec {
    pub fn smooth(f: DriftFn, lipschitz: f64) -> Result<Self> {
        if !(lipschitz >= 0.0) {
            return domain(format!("Lipschitz constant must be >= 0, got {lipschitz}"));
        }
        Ok(Self { kind: DriftKind::Smooth { f, lipschitz } })
    }

    /// Smooth drift using the function's own Lipschitz constant.
    pub fn from_fn(f: DriftFn) -> Result<Self> {
        let l = f.lipschitz().ok_or_else(|| Error::Domain(format!("{f:?} has no known Lipschitz constant")))?;
        Self::smooth(f, l)
    }

    pub fn zero() -> Self {
        Self { kind: DriftKind::Smooth { f: DriftFn::Constant(0.0), lipschitz: 0.0 } }
    }

    pub fn constant(c: f64) -> Self {
        Self { kind: DriftKind::Smooth { f: DriftFn::Constant(c), lipschitz: 0.0 } }
    }

    pub fn piecewise(breakpoints: Vec<f64>, pieces: Vec<DriftFn>, growth: f64) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return domain(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            ));
        }
        if breakpoints.iter().any(|a| !a.is_finite()) || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("breakpoints must be finite and strictly increasing");
        }
        if !(growth >= 0.0) {
            return domain(format!("growth constant must be >= 0, got {growth}"));
        }
        Ok(Self { kind: DriftKind::Piecewise { breakpoints, pieces, growth } })
    }

    pub fn dirichlet(terms: Vec<DirichletTerm>) -> Result<Self> {
        if terms.is_empty() {
            return domain("a Dirichlet drift needs at least one term");
        }
        if let Some(t) = terms.iter().find(|t| !(t.q > 1.0)) {
            return domain(format!("integrability exponent must lie in (1, ∞], got {}", t.q));
        }
        Ok(Self { kind: DriftKind::Dirichlet { terms } })
    }

    pub fn indicator_complement(set: FiniteSetApprox, inner: Option<DriftSpec>) -> Self {
        Self { kind: DriftKind::IndicatorComplement { set, inner: inner.map(Box::new) } }
    }

    pub fn sign() -> Self {
        Self::scaled_sign(1.0, 0.0)
    }

    pub fn scaled_sign(scale: f64, center: f64) -> Self {
        Self { kind: DriftKind::Sign { scale, center } }
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, DriftKind::Smooth { .. })
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            DriftKind::Smooth { f, .. } => f.eval(t, x),
            DriftKind::Piecewise { breakpoints, pieces, .. } => {
                let k = breakpoints.partition_point(|&a| a <= x);
                pieces[k].eval(t, x)
            }
            DriftKind::Dirichlet { terms } => {
                let mut acc = 0.0;
                for term in terms {
                    if term.set.contains(x) {
                        acc += term.f.eval(t, x);
                    }
                }
                acc
            }
            DriftKind::IndicatorComplement { set, inner } => {
                if set.contains(x) {
                    0.0
                } else {
                    inner.as_ref().map_or(1.0, |b| b.eval(t, x))
                }
            }
            DriftKind::Sign { scale, center } => {
                let d = x - center;
                if d > 0.0 {
                    *scale
                } else if d < 0.0 {
                    -scale
                } else {
                    0.0
                }
            }
            DriftKind::Lamperti { base, map } => {
                let x = map.inverse(x);
                base.eval(t, x) / (map.sigma)(x)
            }
        }
    }

    /// `sup |b|` when the drift is bounded.
    pub fn sup_bound(&self) -> Option<f64> {
        match &self.kind {
            DriftKind::Smooth { f, .. } => f.sup_bound(),
            DriftKind::Piecewise { pieces, .. } => {
                pieces.iter().map(DriftFn::sup_bound).try_fold(0.0, |acc, s| s.map(|s| f64::max(acc, s)))
            }
            DriftKind::Dirichlet { terms } => {
                terms.iter().map(|t| t.f.sup_bound()).try_fold(0.0, |acc, s| s.map(|s| acc + s))
            }
            DriftKind::IndicatorComplement { inner, .. } => inner.as_ref().map_or(Some(1.0), |b| b.sup_bound()),
            DriftKind::Sign { scale, .. } => Some(scale.abs()),
            DriftKind::Lamperti { base, map } => base.sup_bound().map(|s| s / map.c_low),
        }
    }

    /// Points where the drift may jump in `x`. Sets with `δ = 0` are
    /// omitted: they change the drift only on a null set.
    pub fn discontinuities(&self) -> Vec<f64> {
        let mut out = match &self.kind {
            DriftKind::Smooth { .. } => Vec::new(),
            DriftKind::Piecewise { breakpoints, .. } => breakpoints.clone(),
            DriftKind::Dirichlet { terms } => terms.iter().flat_map(|t| t.set.edges()).collect(),
            DriftKind::IndicatorComplement { set, inner } => {
                let mut v = set.edges();
                if let Some(b) = inner {
                    v.extend(b.discontinuities());
                }
                v
            }
            DriftKind::Sign { center, .. } => vec![*center],
            DriftKind::Lamperti { base, map } => base.discontinuities().into_iter().map(|x| map.forward(x)).collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Lipschitz constant when the drift is smooth.
    pub fn lipschitz(&self) -> Option<f64> {
        match &self.kind {
            DriftKind::Smooth { lipschitz, .. } => Some(*lipschitz),
            _ => None,
        }
    }
}

pub fn eval_drift(spec: &DriftSpec, t: f64, x: f64) -> f64 {
    spec.eval(t, x)
}

/// `|b(t, x)| <= C (1 + |x|)` at every sampled point.
pub fn check_linear_growth(spec: &DriftSpec, c: f64, t_samples: &[f64], x_samples: &[f64]) -> bool {
    t_samples.iter().all(|&t| x_samples.iter().all(|&x| spec.eval(t, x).abs() <= c * (1.0 + x.abs())))
}

/// `sup |b|` over the sampled points, for the boundedness condition of the
/// mixed equation.
pub fn sampled_sup(spec: &DriftSpec, t_samples: &[f64], x_samples: &[f64]) -> f64 {
    t_samples
        .iter()
        .flat_map(|&t| x_samples.iter().map(move |&x| spec.eval(t, x).abs()))
        .fold(0.0, f64::max)
}

/// Placement of the mollifier's support relative to the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifierShape {
    /// Bump on `[-1/n, 1/n]`.
    Symmetric,
    /// Bump on `[0, 2/n]`, so `b_n(x)` averages `b` over `[x - 2/n, x]`.
    OneSided,
}

/// Number of quadrature nodes on the mollifier support used by `mollify`.
pub const MOLLIFIER_NODES: usize = 64;

fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// `b_n(t, x) = ∫ b(t, x - y) φ_n(y) dy` by fixed Gauss-Legendre quadrature,
/// split at the preimages of the drift's jump points so each piece has a
/// smooth integrand.
pub struct Mollified {
    base: DriftSpec,
    shape: MollifierShape,
    level: u32,
    half_width: f64,
    rule: Arc<GaussLegendre>,
    /// Node offsets `y_k` and normalized weights for the unsplit support.
    table: Vec<(f64, f64)>,
    jumps: Vec<f64>,
}

impl Mollified {
    fn center(&self) -> f64 {
        match self.shape {
            MollifierShape::Symmetric => 0.0,
            MollifierShape::OneSided => self.half_width,
        }
    }

    fn density(&self, y: f64) -> f64 {
        bump((y - self.center()) / self.half_width)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn shape(&self) -> MollifierShape {
        self.shape
    }

    fn eval(&self, t: f64, x: f64) -> f64 {
        let lo = self.center() - self.half_width;
        let hi = self.center() + self.half_width;
        // jump at a contributes where x - y = a, i.e. y = x - a
        let first = self.jumps.partition_point(|&a| a <= x - hi);
        let last = self.jumps.partition_point(|&a| a < x - lo);
        if first == last {
            let mut acc = 0.0;
            for &(y, w) in &self.table {
                acc += w * self.base.eval(t, x - y);
            }
            return acc;
        }
        let mut cuts = vec![lo];
        cuts.extend(self.jumps[first..last].iter().rev().map(|a| x - a));
        cuts.push(hi);
        let (mut num, mut den) = (0.0, 0.0);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(b > a) {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (u, gw) in self.rule.nodes().iter().zip(self.rule.weights()) {
                let y = mid + half * u;
                let weight = gw * half * self.density(y);
                num += weight * self.base.eval(t, x - y);
                den += weight;
            }
        }
        num / den
    }

    /// `‖b‖_∞ ‖φ_n'‖_1 = 2 ‖b‖_∞ φ_n(center)`.
    fn lipschitz(&self) -> Option<f64> {
        let sup = self.base.sup_bound()?;
        let mass: f64 = self.rule.integrate(-1.0, 1.0, bump) * self.half_width;
        Some(2.0 * sup * bump(0.0) / mass)
    }
}

/// Symmetric-bump mollification of a bounded drift at level `n`.
pub fn mollify(spec: &DriftSpec, n: u32, quad_points: usize) -> Result<DriftSpec> {
    mollify_with(spec, n, quad_points, MollifierShape::Symmetric)
}

/// Mollification with a chosen bump placement. Smooth drifts are returned
/// unchanged.
pub fn mollify_with(spec: &DriftSpec, n: u32, quad_points: usize, shape: MollifierShape) -> Result<DriftSpec> {
    if spec.is_smooth() {
        return Ok(spec.clone());
    }
    if n == 0 {
        return domain("mollification level must be a positive integer");
    }
    if quad_points < 2 {
        return domain("mollification needs at least 2 quadrature points");
    }
    if spec.sup_bound().is_none() {
        return Err(Error::UnboundedDrift(format!("{:?}", spec.kind())));
    }
    let rule = gauss_legendre(quad_points);
    let half_width = 1.0 / n as f64;
    let mut m = Mollified {
        base: spec.clone(),
        shape,
        level: n,
        half_width,
        rule: Arc::clone(&rule),
        table: Vec::new(),
        jumps: spec.discontinuities(),
    };
    let center = m.center();
    let raw: Vec<(f64, f64)> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(u, w)| (center + half_width * u, w * bump(*u)))
        .collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    m.table = raw.into_iter().map(|(y, w)| (y, w / total)).collect();
    let lipschitz = m.lipschitz().expect("bounded drift");
    DriftSpec::smooth(DriftFn::Mollified(Arc::new(m)), lipschitz)
}

/// `F(x) = ∫_0^x dz / σ(z)` on a cached grid, with its inverse.
pub struct LampertiMap {
    sigma: ScalarFn,
    c_low: f64,
    c_high: f64,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
    rule: Arc<GaussLegendre>,
}

impl fmt::Debug for LampertiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LampertiMap([{}, {}], {} cells, σ in [{}, {}])",
            self.knots[0],
            self.knots[self.knots.len() - 1],
            self.knots.len() - 1,
            self.c_low,
            self.c_high
        )
    }
}

/// Inverse tolerance of the Lamperti map.
pub const LAMPERTI_TOLERANCE: f64 = 1e-12;

impl LampertiMap {
    /// Builds the cache on `range` (which must contain 0) with `cells`
    /// uniform cells, checking `c_low <= σ <= c_high` at every node used.
    pub fn new(sigma: ScalarFn, bounds: (f64, f64), range: (f64, f64), cells: usize) -> Result<Self> {
        let (c_low, c_high) = bounds;
        if !(c_low > 0.0 && c_high >= c_low) {
            return domain(format!("σ bounds must satisfy 0 < c_low <= c_high, got {bounds:?}"));
        }
        let (lo, hi) = range;
        if !(lo <= 0.0 && hi >= 0.0 && hi > lo) {
            return domain(format!("Lamperti range must contain 0, got {range:?}"));
        }
        if cells == 0 {
            return domain("Lamperti cache needs at least one cell");
        }
        let rule = gauss_legendre(16);
        let knots: Vec<f64> = (0..=cells).map(|k| lo + (hi - lo) * (k as f64 / cells as f64)).collect();
        let check = |z: f64| {
            let s = sigma(z);
            if !(s >= c_low && s <= c_high) {
                return domain(format!("σ({z}) = {s} violates its bounds [{c_low}, {c_high}]"));
            }
            Ok(1.0 / s)
        };
        let mut increments = Vec::with_capacity(cells);
        for w in knots.windows(2) {
            check(w[0])?;
            increments.push(rule.try_integrate(w[0], w[1], check)?);
        }
        check(hi)?;
        let mut cumulative = vec![0.0; cells + 1];
        for k in 0..cells {
            cumulative[k + 1] = cumulative[k] + increments[k];
        }
        // shift so that F(0) = 0
        let origin = Self::integrate_from_knots(&knots, &cumulative, &rule, &*sigma, 0.0);
        for v in &mut cumulative {
            *v -= origin;
        }
        Ok(Self { sigma, c_low, c_high, knots, cumulative, rule })
    }

    fn integrate_from_knots(knots: &[f64], cumulative: &[f64], rule: &GaussLegendre, sigma: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        let n = knots.len() - 1;
        let step = knots[1] - knots[0];
        if x < knots[0] || x > knots[n] {
            // outside the cache: integrate from the nearest end in cache-sized pieces
            let (start, base) = if x < knots[0] { (knots[0], cumulative[0]) } else { (knots[n], cumulative[n]) };
            let pieces = ((x - start).abs() / step).ceil().max(1.0) as usize;
            let h = (x - start) / pieces as f64;
            let mut acc = base;
            for k in 0..pieces {
                let a = start + k as f64 * h;
                acc += rule.integrate(a, a + h, |z| 1.0 / sigma(z));
            }
            return acc;
        }
        let k = (((x - knots[0]) / step).floor() as usize).min(n - 1);
        let k = if knots[k] > x { k - 1 } else { k };
        cumulative[k] + rule.integrate(knots[k], x, |z| 1.0 / sigma(z))
    }

    pub fn sigma(&self, x: f64) -> f64 {
        (self.sigma)(x)
    }

    pub fn forward(&self, x: f64) -> f64 {
        Self::integrate_from_knots(&self.knots, &self.cumulative, &self.rule, &*self.sigma, x)
    }

    /// `F⁻¹(y)` by a safeguarded Newton iteration, `F' = 1/σ`.
    pub fn inverse(&self, y: f64) -> f64 {
        let n = self.knots.len() - 1;
        let (mut a, mut b) = if y < self.cumulative[0] {
            let d = (self.cumulative[0] - y) * self.c_high;
            (self.knots[0] - d, self.knots[0])
        } else if y > self.cumulative[n] {
            let d = (y - self.cumulative[n]) * self.c_high;
            (self.knots[n], self.knots[n] + d)
        } else {
            let k = self.cumulative.partition_point(|&v| v <= y).clamp(1, n);
            (self.knots[k - 1], self.knots[k])
        };
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let f = self.forward(x) - y;
            if f > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let newton = x - f * self.sigma(x);
            let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (next - x).abs() <= LAMPERTI_TOLERANCE * x.abs().max(1.0) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Result of the change of variables `Y = F(X)`.
#[derive(Debug, Clone)]
pub struct LampertiTransform {
    pub map: Arc<LampertiMap>,
    pub drift: DriftSpec,
}

/// Additive-noise form of `dX = b dt + σ(X) dB^H`.
pub fn lamperti_transform(
    sigma: ScalarFn,
    bounds: (f64, f64),
    range: (f64, f64),
    drift: &DriftSpec,
) -> Result<LampertiTransform> {
    let map = Arc::new(LampertiMap::new(sigma, bounds, range, 4096)?);
    let transformed = DriftSpec { kind: DriftKind::Lamperti { base: Box::new(drift.clone()), map: Arc::clone(&map) } };
    Ok(LampertiTransform { map, drift: transformed })
}
