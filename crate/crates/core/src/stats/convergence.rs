//! Paired L² distances and the `N → ∞` study of the stabilized equation.

use std::sync::Arc;

use rayon::prelude::*;

use super::besov::{besov_norm, BesovEstimate};
use super::{fit_log_log, McReport, SlopeFit};
use crate::drifts::DriftSpec;
use crate::ensemble::Ensemble;
use crate::error::{domain, Error, Result};
use crate::paths::{SamplePath, TimeGrid};
use crate::rng::SeedTag;
use crate::solver::MixedModel;

/// `E[(A_t - B_t)²]` over seed-paired ensembles at node `k`.
pub fn l2_distance(a: &Ensemble, b: &Ensemble, k: usize) -> Result<McReport> {
    a.check_paired(b)?;
    if a.grid().is_some_and(|g| k > g.len()) {
        return Err(Error::Domain(format!("node {k} is outside the grid")));
    }
    let squares: Vec<f64> = a
        .paths
        .iter()
        .zip(&b.paths)
        .map(|(x, y)| {
            let d = x.at_node(k) - y.at_node(k);
            d * d
        })
        .collect();
    McReport::from_samples(&squares, Some(a.master_seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub stabilization: u32,
    /// `E[(X_T^N - X_T^∞)²]`
    pub l2: McReport,
    /// Besov norm of `X^N - X^∞`.
    pub besov: BesovEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Fit of `ln l2` against `ln N`; absent when some `l2` vanishes.
    pub fit: Option<SlopeFit>,
    /// `E[(B_T^{H1})²]` over the same paths.
    pub rough_second_moment: McReport,
}

impl ConvergenceStudy {
    pub fn l2_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].l2.estimate <= w[0].l2.estimate)
    }

    pub fn besov_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].besov.norm_value <= w[0].besov.norm_value)
    }
}

/// Shared-seed comparison of `X^N` against the `N = ∞` reference for each
/// `N`; all `N` reuse the same two fBm paths per seed.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    drift: &DriftSpec,
    h1: f64,
    h2: f64,
    ns: &[u32],
    grid: Arc<TimeGrid>,
    n_paths: usize,
    beta: f64,
    master_seed: u64,
    x0: f64,
) -> Result<ConvergenceStudy> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return domain("stabilization indices must be nonempty and strictly increasing");
    }
    if !(beta > 0.0 && beta < h1) {
        return domain(format!("Besov parameter must lie in (0, H1) = (0, {h1}), got {beta}"));
    }
    let model = MixedModel::new(drift.clone(), h1, h2, Arc::clone(&grid), x0)?;
    let solved = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = model.solve_all(ns, SeedTag::new(master_seed, i))?;
            let diffs: Vec<SamplePath> = s
                .by_n
                .iter()
                .map(|(_, x)| SamplePath {
                    origin: 0.0,
                    values: x.values.iter().zip(&s.reference.values).map(|(a, b)| a - b).collect(),
                    ..s.reference.clone()
                })
                .collect();
            Ok((s.rough.values[grid.len() - 1], diffs))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = grid.len();
    let mut rows = Vec::with_capacity(ns.len());
    for (j, &n) in ns.iter().enumerate() {
        let ensemble = Ensemble::from_paths(master_seed, solved.iter().map(|(_, d)| d[j].clone()).collect());
        let squares: Vec<f64> = ensemble.paths.iter().map(|p| p.at_node(last).powi(2)).collect();
        let l2 = McReport::from_samples(&squares, Some(master_seed))?;
        let besov = besov_norm(&ensemble, beta)?;
        rows.push(ConvergenceRow { stabilization: n, l2, besov });
    }
    let rough: Vec<f64> = solved.iter().map(|(r, _)| r * r).collect();
    let rough_second_moment = McReport::from_samples(&rough, Some(master_seed))?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.stabilization as f64, r.l2.estimate)).collect();
    let fit = if points.iter().all(|p| p.1 > 0.0) && points.len() >= 3 { Some(fit_log_log(&points)?) } else { None };
    Ok(ConvergenceStudy { rows, fit, rough_second_moment })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ensemble(offset: f64) -> Ensemble {
        let grid = Arc::new(TimeGrid::uniform(1.0, 4).unwrap());
        let paths = (0..10u64)
            .map(|i| SamplePath {
                grid: Arc::clone(&grid),
                origin: 0.0,
                values: vec![i as f64 + offset; 4],
                increments: vec![],
                seed: Some(SeedTag::new(1, i)),
            })
            .collect();
        Ensemble::from_paths(1, paths)
    }

    #[test]
    fn identical_and_shifted_ensembles() {
        let a = ensemble(0.0);
        let r = l2_distance(&a, &a, 4).unwrap();
        assert_eq!((r.estimate, r.std_error), (0.0, 0.0));
        let b = ensemble(0.5);
        let r = l2_distance(&a, &b, 2).unwrap();
        assert_eq!((r.estimate, r.std_error), (0.25, 0.0));
    }

    #[test]
    fn unpaired_ensembles_rejected() {
        let a = ensemble(0.0);
        let mut b = ensemble(0.0);
        b.paths[3].seed = Some(SeedTag::new(2, 3));
        assert!(matches!(l2_distance(&a, &b, 1), Err(Error::MismatchedEnsembles(_))));
    }
}
