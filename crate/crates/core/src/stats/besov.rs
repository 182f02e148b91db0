//! Stochastic Besov norm
//! `‖Y‖_β = sup_t (E[Y_t²] + E[(∫_0^t |Y_t - Y_s| / (t-s)^{1+β} ds)²])`.
//!
//! The inner integral is taken exactly for the piecewise-linear interpolant
//! of the path. On the cell ending at `t` the interpolant gives
//! `|Y_t - Y_s| = |m| (t - s)` for the cell slope `m`, so that cell adds
//! `|m| Δ^{1-β} / (1-β)` instead of being dropped.

use rayon::prelude::*;

use super::tree_sum;
use crate::ensemble::Ensemble;
use crate::error::{domain, Result};
use crate::paths::SamplePath;

#[derive(Debug, Clone, PartialEq)]
pub struct BesovEstimate {
    pub beta: f64,
    pub norm_value: f64,
    /// `(t, E[Y_t²] + E[I_t²])` for every node, origin first.
    pub per_t_profile: Vec<(f64, f64)>,
    /// Set when the inner integral near `s = t` relies on the linear
    /// interpolant between grid values rather than on the path itself.
    pub grid_bias_note: bool,
}

/// Inner integrals `I_{t_i}` for every node of one path.
pub fn besov_profile(path: &SamplePath, beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) {
        return domain(format!("Besov parameter must lie in (0,1), got {beta}"));
    }
    let nodes: Vec<f64> = path.nodes().collect();
    let step = path.grid.step();
    let n = nodes.len();
    // (mΔ)^{-β} and (mΔ)^{1-β}
    let neg: Vec<f64> = (0..n).map(|m| (m as f64 * step).powf(-beta)).collect();
    let pos: Vec<f64> = (0..n).map(|m| (m as f64 * step).powf(1.0 - beta)).collect();
    let last_cell = step.powf(1.0 - beta) / (1.0 - beta);
    let mut out = vec![0.0; n];
    for i in 1..n {
        let yi = nodes[i];
        let mut acc = (yi - nodes[i - 1]).abs() / step * last_cell;
        for j in 0..i - 1 {
            // cell [t_j, t_{j+1}] in u = t_i - s: u from m-1 to m steps
            let m = i - j;
            let (d_far, d_near) = (yi - nodes[j], yi - nodes[j + 1]);
            acc += cell_integral(d_near, d_far, m, step, beta, &neg, &pos);
        }
        out[i] = acc;
    }
    Ok(out)
}

/// `∫_{u1}^{u0} |d(u)| u^{-1-β} du` for `d` linear in `u` with
/// `d(u1) = d_near`, `d(u0) = d_far`, `u0 = mΔ`, `u1 = (m-1)Δ`, `m >= 2`.
fn cell_integral(d_near: f64, d_far: f64, m: usize, step: f64, beta: f64, neg: &[f64], pos: &[f64]) -> f64 {
    let slope = (d_far - d_near) / step;
    let u1 = (m - 1) as f64 * step;
    let intercept = d_near - slope * u1;
    // ∫_a^b (intercept + slope u) u^{-1-β} du from na = a^{-β}, pa = a^{1-β}
    let piece = |na: f64, nb: f64, pa: f64, pb: f64| intercept * (na - nb) / beta + slope * (pb - pa) / (1.0 - beta);
    if d_near * d_far >= 0.0 {
        let v = piece(neg[m - 1], neg[m], pos[m - 1], pos[m]);
        return v.abs();
    }
    let root = -intercept / slope;
    let (nr, pr) = (root.powf(-beta), root.powf(1.0 - beta));
    let lower = piece(neg[m - 1], nr, pos[m - 1], pr);
    let upper = piece(nr, neg[m], pr, pos[m]);
    lower.abs() + upper.abs()
}

/// Ensemble estimate of the norm with the sup over grid nodes.
pub fn besov_norm(ensemble: &Ensemble, beta: f64) -> Result<BesovEstimate> {
    let Some(grid) = ensemble.grid() else {
        return domain("Besov norm of an empty ensemble");
    };
    let profiles = ensemble.paths.par_iter().map(|p| besov_profile(p, beta)).collect::<Result<Vec<_>>>()?;
    let n_paths = ensemble.len() as f64;
    let per_t_profile: Vec<(f64, f64)> = (0..=grid.len())
        .map(|k| {
            let squares: Vec<f64> = ensemble.paths.iter().map(|p| p.at_node(k) * p.at_node(k)).collect();
            let inner: Vec<f64> = profiles.iter().map(|v| v[k] * v[k]).collect();
            (grid.node_time(k), tree_sum(&squares) / n_paths + tree_sum(&inner) / n_paths)
        })
        .collect();
    let norm_value = per_t_profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(BesovEstimate { beta, norm_value, per_t_profile, grid_bias_note: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::TimeGrid;
    use std::sync::Arc;

    fn path(values: Vec<f64>, origin: f64) -> SamplePath {
        let grid = Arc::new(TimeGrid::uniform(1.0, values.len()).unwrap());
        SamplePath { grid, origin, values, increments: vec![], seed: None }
    }

    #[test]
    fn linear_path_is_exact() {
        let n = 1024;
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let p = path(grid.points().to_vec(), 0.0);
        let e = Ensemble::from_paths(0, vec![p]);
        let b = besov_norm(&e, 0.5).unwrap();
        assert!((b.norm_value - 5.0).abs() < 1e-9, "{}", b.norm_value);
        let profile = besov_profile(&e.paths[0], 0.5).unwrap();
        assert!((profile[n / 4] - 2.0 * 0.25f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn sign_change_inside_a_cell() {
        // nodes 0, 1, 0.5 at t = 0, 1/2, 1; on [0, 1/2] Y_1 - L(s) = 0.5 - 2s
        // changes sign at s = 1/4, and the last cell has slope -1
        let p = path(vec![1.0, 0.5], 0.0);
        let beta = 0.5;
        let got = besov_profile(&p, beta).unwrap()[2];
        let rule = crate::quadrature::gauss_legendre(64);
        let f = |s: f64| (0.5 - 2.0 * s).abs() * (1.0 - s).powf(-1.5);
        let oracle = rule.integrate(0.0, 0.25, f) + rule.integrate(0.25, 0.5, f) + 0.5f64.sqrt() / 0.5;
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn constant_ensemble_gives_square() {
        let e = Ensemble::from_paths(0, vec![path(vec![1.5; 32], 1.5); 3]);
        assert_eq!(besov_norm(&e, 0.3).unwrap().norm_value, 2.25);
        assert!(besov_profile(&e.paths[0], 1.0).is_err());
    }
}
