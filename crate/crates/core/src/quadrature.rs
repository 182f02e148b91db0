//! Gauss-Legendre rules and a geometrically graded integrator for integrands
//! with power-law endpoint behaviour.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{domain, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                derivative = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            if dp != 0.0 {
                derivative = dp;
            }
            let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    pub fn try_integrate<F: FnMut(f64) -> Result<f64>>(&self, lo: f64, hi: f64, mut f: F) -> Result<f64> {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x)?;
        }
        Ok(acc * half)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Shared, lazily built rule with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(rule) = cache.read().expect("quadrature cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(GaussLegendre::new(n));
    cache
        .write()
        .expect("quadrature cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

/// How the integrand behaves at one end of the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndBehavior {
    /// Smooth up to the endpoint.
    Smooth,
    /// Smooth, but varies on a scale much shorter than the interval; cells
    /// are refined geometrically toward the endpoint.
    Steep,
    /// Behaves like `C d^p` in the distance `d` to the endpoint, `p > -1`.
    /// Cells are refined geometrically and the last cell is integrated in
    /// closed form with the non-power factor frozen at the cell edge.
    Power(f64),
}

/// Result of a graded integration with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
}

/// Number of geometric refinement levels toward a graded endpoint.
const GRADING_DEPTH: usize = 30;

/// Integrates `f` over `[lo, hi]` with graded cells toward non-smooth ends.
///
/// Each cell is integrated with `nodes` and `2 nodes` Gauss-Legendre points;
/// the difference is returned as the error estimate.
pub fn graded_integral<F>(
    lo: f64,
    hi: f64,
    left: EndBehavior,
    right: EndBehavior,
    nodes: usize,
    f: F,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(hi > lo) {
        return domain(format!("empty integration interval [{lo}, {hi}]"));
    }
    if nodes < 2 {
        return domain("graded quadrature needs at least 2 nodes per cell");
    }
    for end in [left, right] {
        if let EndBehavior::Power(p) = end {
            if !(p > -1.0) {
                return domain(format!("endpoint exponent {p} is not integrable"));
            }
        }
    }
    let coarse = gauss_legendre(nodes);
    let fine = gauss_legendre(2 * nodes);
    let mut acc = Accumulator::default();

    let graded_left = left != EndBehavior::Smooth;
    let graded_right = right != EndBehavior::Smooth;
    match (graded_left, graded_right) {
        (false, false) => {
            let mid = 0.5 * (lo + hi);
            acc.cell(&coarse, &fine, lo, mid, &f)?;
            acc.cell(&coarse, &fine, mid, hi, &f)?;
        }
        (true, false) => acc.graded(&coarse, &fine, lo, hi, left, Side::Left, &f)?,
        (false, true) => acc.graded(&coarse, &fine, lo, hi, right, Side::Right, &f)?,
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            acc.graded(&coarse, &fine, lo, mid, left, Side::Left, &f)?;
            acc.graded(&coarse, &fine, mid, hi, right, Side::Right, &f)?;
        }
    }
    Ok(QuadratureResult { value: acc.fine, error: (acc.fine - acc.coarse).abs() })
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Left,
    Right,
}

#[derive(Default)]
struct Accumulator {
    coarse: f64,
    fine: f64,
}

impl Accumulator {
    fn cell<F>(&mut self, coarse: &GaussLegendre, fine: &GaussLegendre, a: f64, b: f64, f: &F) -> Result<()>
    where
        F: Fn(f64) -> Result<f64>,
    {
        self.coarse += coarse.try_integrate(a, b, f)?;
        self.fine += fine.try_integrate(a, b, f)?;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn graded<F>(
        &mut self,
        coarse: &GaussLegendre,
        fine: &GaussLegendre,
        lo: f64,
        hi: f64,
        end: EndBehavior,
        side: Side,
        f: &F,
    ) -> Result<()>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let length = hi - lo;
        // Distances from the graded endpoint, largest cell first.
        let mut outer = length;
        for _ in 0..GRADING_DEPTH {
            let inner = 0.5 * outer;
            let (a, b) = match side {
                Side::Left => (lo + inner, lo + outer),
                Side::Right => (hi - outer, hi - inner),
            };
            self.cell(coarse, fine, a, b, f)?;
            outer = inner;
        }
        let (a, b) = match side {
            Side::Left => (lo, lo + outer),
            Side::Right => (hi - outer, hi),
        };
        match end {
            EndBehavior::Power(p) => {
                let edge = match side {
                    Side::Left => b,
                    Side::Right => a,
                };
                let tail = f(edge)? * outer / (p + 1.0);
                self.coarse += tail;
                self.fine += tail;
            }
            _ => self.cell(coarse, fine, a, b, f)?,
        }
        Ok(())
    }
}
