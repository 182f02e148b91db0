//! One function per command. Each composes the core library and returns
//! the report rows, verdicts and (a prefix of) the paths it produced.

use std::sync::Arc;

use rayon::prelude::*;
use volterra_core::drifts::{DriftSpec, MollifierShape};
use volterra_core::ensemble::Ensemble;
use volterra_core::kernels::{verify_kernel_lower_bound, BoundReport, KernelSpec};
use volterra_core::paths::{ExactSampler, SamplePath, TimeGrid, VolterraSampler};
use volterra_core::rng::SeedTag;
use volterra_core::solver::{euler_solve, residual, sup_distance, CgpWindow, MixedModel, MollifiedLadder, SolverConfig};
use volterra_core::special::normal_cdf;
use volterra_core::stats::{besov_norm, convergence_study, normality_check, small_ball_probability, tree_sum, McReport};

use crate::config::{Command, DriftConfig, ExperimentConfig, KernelConfig};

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub quantity: String,
    pub label: String,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// Paths written to `paths.csv`; `None` for commands without paths.
    pub paths: Option<Ensemble>,
    pub rows: Vec<ReportRow>,
    pub verdicts: Vec<Verdict>,
}

impl Outcome {
    fn row(&mut self, quantity: &str, label: impl ToString, value: f64) {
        self.rows.push(ReportRow { quantity: quantity.into(), label: label.to_string(), value, std_error: None });
    }

    fn report(&mut self, quantity: &str, label: impl ToString, r: &McReport) {
        self.rows.push(ReportRow {
            quantity: quantity.into(),
            label: label.to_string(),
            value: r.estimate,
            std_error: Some(r.std_error),
        });
    }

    fn verdict(&mut self, name: &str, pass: bool, detail: String) {
        self.verdicts.push(Verdict { name: name.into(), pass, detail });
    }
}

type CoreResult<T> = volterra_core::Result<T>;

pub fn execute(config: &ExperimentConfig) -> CoreResult<Outcome> {
    match config.command {
        Command::Paths => paths(config),
        Command::Solve => solve(config),
        Command::VerifyKernel => verify_kernel(config),
        Command::SmallBall => small_ball(config),
        Command::Dirichlet => dirichlet(config),
        Command::MixedConvergence => mixed_convergence(config),
        Command::Besov => besov(config),
        Command::CgpCheck => cgp_check(config),
    }
}

fn grid_of(config: &ExperimentConfig, n_points: usize) -> CoreResult<Arc<TimeGrid>> {
    Ok(Arc::new(TimeGrid::uniform(config.grid.horizon, n_points)?))
}

fn kernel_spec(config: &ExperimentConfig) -> CoreResult<KernelSpec> {
    config.kernel.as_ref().expect("validated: kernel present").spec(config.grid.horizon)
}

fn drift_spec(config: &ExperimentConfig) -> CoreResult<DriftSpec> {
    config.drift.as_ref().expect("validated: drift present").spec()
}

/// Exponent used by verdicts that compare against a power of `ε` or `α`.
fn bound_hurst(config: &ExperimentConfig) -> f64 {
    config.params.bound_hurst.expect("validated: resolved with the kernel")
}

/// `f` for every path index, in index order.
fn per_path<T, F>(seed: u64, n_paths: usize, f: F) -> CoreResult<Vec<T>>
where
    T: Send,
    F: Fn(SeedTag) -> CoreResult<T> + Sync,
{
    (0..n_paths as u64).into_par_iter().map(|i| f(SeedTag::new(seed, i))).collect()
}

/// The first `csv_paths` of the given paths, as an ensemble for export.
fn head(config: &ExperimentConfig, paths: impl IntoIterator<Item = SamplePath>) -> Ensemble {
    Ensemble::from_paths(config.mc.master_seed, paths.into_iter().take(config.mc.csv_paths).collect())
}

fn mean(values: &[f64]) -> f64 {
    tree_sum(values) / values.len() as f64
}

fn z_score(a: &McReport, target: f64) -> f64 {
    if a.std_error == 0.0 {
        if a.estimate == target { 0.0 } else { f64::INFINITY }
    } else {
        (a.estimate - target).abs() / a.std_error
    }
}

fn paths(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (mc, p, k) = (&config.mc, &config.params, config.tolerances.se_k);
    let grid = grid_of(config, config.grid.n_points)?;
    let spec = kernel_spec(config)?;
    let sampler = VolterraSampler::new(spec.clone(), Arc::clone(&grid))?;
    let ensemble = Ensemble::generate(mc.master_seed, mc.n_paths, |t| Ok(sampler.sample(t)))?;
    let last = grid.len();
    let horizon = config.grid.horizon;

    let mut out = Outcome::default();
    let mut worst_mean = 0.0f64;
    for node in 1..=last {
        let m = ensemble.mean_at(node)?;
        worst_mean = worst_mean.max(z_score(&m, 0.0));
        out.report("mean", grid.node_time(node), &m);
        out.report("variance", grid.node_time(node), &ensemble.second_moment(node, node)?);
    }
    let mean_t = ensemble.mean_at(last)?;
    out.verdict("centered", mean_t.within(0.0, k), format!("mean at T = {:.3e}, {:.2} SE; worst node {worst_mean:.2} SE", mean_t.estimate, z_score(&mean_t, 0.0)));
    let var_t = ensemble.second_moment(last, last)?;
    let target = spec.covariance(horizon, horizon)?;
    out.verdict("variance_at_T", var_t.within(target, k), format!("{:.5} vs {target:.5}, {:.2} SE", var_t.estimate, z_score(&var_t, target)));

    if p.cross_check {
        // the oracle draws from the Gaussian-vector stream, independent of the Brownian one
        let exact = ExactSampler::new(&spec, Arc::clone(&grid))?;
        let oracle = Ensemble::generate(mc.master_seed, mc.n_paths, |t| Ok(exact.sample(t)))?;
        let mut pairs: Vec<(usize, usize)> = (1..=last).map(|i| (i, i)).collect();
        pairs.push((p.cross_node, last));
        let (mut worst_pair, mut worst_closed) = (0.0f64, 0.0f64);
        for &(i, j) in &pairs {
            let a = ensemble.second_moment(i, j)?;
            let b = oracle.second_moment(i, j)?;
            let closed = spec.covariance(grid.node_time(i), grid.node_time(j))?;
            let label = format!("{}:{}", grid.node_time(i), grid.node_time(j));
            out.report("volterra_covariance", &label, &a);
            out.report("exact_covariance", &label, &b);
            out.row("closed_form_covariance", &label, closed);
            worst_pair = worst_pair.max((a.estimate - b.estimate).abs() / a.std_error.hypot(b.std_error));
            worst_closed = worst_closed.max(z_score(&a, closed)).max(z_score(&b, closed));
        }
        out.verdict("samplers_agree", worst_pair <= k, format!("worst combined z = {worst_pair:.3} over {} moments", pairs.len()));
        out.verdict("closed_form_covariance", worst_closed <= k, format!("worst z = {worst_closed:.3}"));
    }
    out.paths = Some(head(config, ensemble.paths));
    Ok(out)
}

struct SolvedPath {
    path: SamplePath,
    residual: f64,
    ladder: Option<(bool, f64, f64)>,
}

fn solve(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (mc, p, tol) = (&config.mc, &config.params, &config.tolerances);
    let grid = grid_of(config, config.grid.n_points)?;
    let sampler = VolterraSampler::new(kernel_spec(config)?, Arc::clone(&grid))?;
    let drift = drift_spec(config)?;
    let solver = SolverConfig::new(Arc::clone(&grid), p.x0, drift.clone())?;
    let ladders = if p.levels.is_empty() {
        None
    } else {
        Some((
            MollifiedLadder::new(&drift, &p.levels, MollifierShape::Symmetric)?,
            MollifiedLadder::new(&drift, &p.levels, MollifierShape::OneSided)?,
        ))
    };
    let solved = per_path(mc.master_seed, mc.n_paths, |tag| {
        let noise = sampler.sample(tag);
        let path = euler_solve(&solver, &noise)?;
        let residual = residual(&path, &solver, &noise)?;
        let ladder = ladders.as_ref().map(|(sym, one)| {
            let a = sym.solve(p.x0, &noise);
            let b = one.solve(p.x0, &noise);
            let finest_gap = *a.trace.last().unwrap_or(&0.0);
            (a.trace_strictly_decreasing(), sup_distance(a.finest(), b.finest()), finest_gap)
        });
        Ok(SolvedPath { path, residual, ladder })
    })?;

    let mut out = Outcome::default();
    let last = grid.len();
    let terminal: Vec<f64> = solved.iter().map(|s| s.path.at_node(last)).collect();
    out.report("mean_X_T", config.grid.horizon, &McReport::from_samples(&terminal, Some(mc.master_seed))?);
    let worst = solved.iter().map(|s| s.residual).fold(0.0, f64::max);
    out.row("max_residual", "", worst);
    out.verdict("residual", worst <= tol.residual, format!("max residual {worst:.3e}"));

    if ladders.is_some() {
        let ladder: Vec<(bool, f64, f64)> = solved.iter().filter_map(|s| s.ladder).collect();
        let fraction = ladder.iter().filter(|l| l.0).count() as f64 / ladder.len() as f64;
        let shape_gap = mean(&ladder.iter().map(|l| l.1).collect::<Vec<_>>());
        let finest = mean(&ladder.iter().map(|l| l.2).collect::<Vec<_>>());
        out.row("ladder_decreasing_fraction", "", fraction);
        out.row("mean_shape_distance", "", shape_gap);
        out.row("mean_finest_self_difference", p.levels.last().unwrap(), finest);
        out.verdict("ladder_decreasing", fraction >= tol.ladder_fraction, format!("{:.1}% of paths strictly decreasing", 100.0 * fraction));
        out.verdict(
            "mollifier_shapes",
            shape_gap <= tol.shape_factor * finest,
            format!("mean shape distance {shape_gap:.4e} vs {} x finest self-difference {finest:.4e}", tol.shape_factor),
        );
    }
    out.paths = Some(head(config, solved.into_iter().map(|s| s.path)));
    Ok(out)
}

fn bound_rows(out: &mut Outcome, prefix: &str, report: &BoundReport) {
    for r in &report.rows {
        let label = format!("t={};eps={}", r.t, r.epsilon);
        out.row(&format!("{prefix}kappa"), &label, r.kappa);
        out.row(&format!("{prefix}ratio"), &label, r.ratio);
    }
    for &(t, s) in &report.slopes_by_t {
        out.row(&format!("{prefix}slope_at_t"), t, s);
    }
    out.row(&format!("{prefix}inf_ratio"), "", report.inf_ratio);
    out.row(&format!("{prefix}pooled_slope"), "", report.slope());
}

fn verify_kernel(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (p, tol) = (&config.params, &config.tolerances);
    let spec = kernel_spec(config)?;
    let hurst = bound_hurst(config);
    let report = verify_kernel_lower_bound(&spec, hurst, &p.epsilons, &p.t_grid)?;
    let mut out = Outcome::default();
    bound_rows(&mut out, "", &report);
    let positive = format!("inf kappa/eps^{hurst} = {:.6}", report.inf_ratio);
    match config.kernel.as_ref().expect("validated") {
        KernelConfig::Mixture { .. } => {
            // (κ^N)² >= ∫ K_H², so the mixture inherits the bound of its H component
            let alone = verify_kernel_lower_bound(&KernelSpec::fbm(hurst, config.grid.horizon)?, hurst, &p.epsilons, &p.t_grid)?;
            bound_rows(&mut out, "component_", &alone);
            out.verdict(
                "positive_infimum",
                report.inf_ratio > 0.0 && report.inf_ratio >= alone.inf_ratio,
                format!("{positive}, component alone {:.6}", alone.inf_ratio),
            );
            out.verdict(
                "slope_bound",
                report.slope() <= hurst + tol.slope_tol,
                format!("pooled slope {:.4} <= {hurst} + {}", report.slope(), tol.slope_tol),
            );
        }
        _ => {
            out.verdict("positive_infimum", report.inf_ratio > 0.0, positive);
            out.verdict(
                "slope",
                (report.slope() - hurst).abs() <= tol.slope_tol,
                format!("pooled slope {:.4} vs {hurst} ± {}", report.slope(), tol.slope_tol),
            );
        }
    }
    Ok(out)
}

fn small_ball(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (mc, p, tol) = (&config.mc, &config.params, &config.tolerances);
    let grid = grid_of(config, config.grid.n_points)?;
    let spec = kernel_spec(config)?;
    let sampler = VolterraSampler::new(spec.clone(), Arc::clone(&grid))?;
    let solver = SolverConfig::new(Arc::clone(&grid), p.x0, drift_spec(config)?)?;
    let node = grid.node_of(p.t).expect("validated: t on the grid");
    let keep = mc.csv_paths as u64;
    // only X_t (and the noise value for the control) is kept per path
    let draws = per_path(mc.master_seed, mc.n_paths, |tag| {
        let noise = sampler.sample(tag);
        let x = euler_solve(&solver, &noise)?;
        let control = p.x0 + noise.at_node(node);
        let value = x.at_node(node);
        Ok((value, control, (tag.path_index < keep).then_some(x)))
    })?;
    let samples: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let hurst = bound_hurst(config);
    let study = small_ball_probability(&samples, p.x, &p.alphas, Some(mc.master_seed))?;
    let ratios = study.bound_ratios(p.t, hurst);
    let growth = study.bound_ratio_growth(p.t, hurst);

    let mut out = Outcome::default();
    for ((a, r), (h, q)) in p.alphas.iter().zip(&study.reports).zip(study.hits.iter().zip(&ratios)) {
        out.report("probability", a, r);
        out.row("hits", a, *h as f64);
        out.row("bound_ratio", a, *q);
    }
    out.row("slope", "", study.fit.slope);
    out.row("bound_ratio_growth", "", growth);
    let floor = (1.0 - hurst) - tol.small_ball_margin;
    out.verdict("slope", study.fit.slope >= floor, format!("fitted slope {:.4} >= {floor:.4}", study.fit.slope));
    out.verdict("bound_ratio", growth <= tol.bound_ratio_factor, format!("max ratio growth {growth:.4} <= {}", tol.bound_ratio_factor));

    if p.control {
        let controls: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let control = small_ball_probability(&controls, p.x, &p.alphas, Some(mc.master_seed))?;
        let sigma = spec.covariance(p.t, p.t)?.sqrt();
        let mut worst = 0.0f64;
        for (a, r) in p.alphas.iter().zip(&control.reports) {
            let exact = normal_cdf((p.x + a - p.x0) / sigma) - normal_cdf((p.x - p.x0) / sigma);
            out.report("control_probability", a, r);
            out.row("control_oracle", a, exact);
            // binomial standard error of the oracle probability
            let se = (exact * (1.0 - exact) / mc.n_paths as f64).sqrt();
            worst = worst.max((r.estimate - exact).abs() / se);
        }
        out.verdict("zero_drift_control", worst <= tol.se_k, format!("worst deviation {worst:.3} binomial SE"));
    }
    out.paths = Some(head(config, draws.into_iter().filter_map(|d| d.2)));
    Ok(out)
}

fn dirichlet(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (mc, p, tol) = (&config.mc, &config.params, &config.tolerances);
    let grid = grid_of(config, config.grid.n_points)?;
    let sampler = VolterraSampler::new(kernel_spec(config)?, Arc::clone(&grid))?;
    let solver = SolverConfig::new(Arc::clone(&grid), p.x0, drift_spec(config)?)?;
    // the explicit solution is x0 + B, plus b̃·t off the finite set
    let (shift, allowed, name) = match config.drift.as_ref().expect("validated") {
        DriftConfig::IndicatorComplement { inner, .. } => (*inner, tol.indicator_steps * grid.step(), "indicator_complement_identity"),
        _ => (0.0, tol.dirichlet, "dirichlet_identity"),
    };
    let solved = per_path(mc.master_seed, mc.n_paths, |tag| {
        let noise = sampler.sample(tag);
        let x = euler_solve(&solver, &noise)?;
        let gap = (1..=grid.len())
            .map(|k| (x.at_node(k) - (p.x0 + noise.at_node(k) + shift * grid.node_time(k))).abs())
            .fold(0.0, f64::max);
        Ok((x, gap))
    })?;
    let worst = solved.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.row("max_gap", "", worst);
    out.row("allowed_gap", "", allowed);
    out.verdict(name, worst <= allowed, format!("max |X - explicit| = {worst:.3e} <= {allowed:.3e}"));
    out.paths = Some(head(config, solved.into_iter().map(|s| s.0)));
    Ok(out)
}

/// The equation for the largest `N`, for export.
fn mixed_head(config: &ExperimentConfig, drift: DriftSpec, grid: Arc<TimeGrid>, n: u32) -> CoreResult<Ensemble> {
    let p = &config.params;
    let model = MixedModel::new(drift, p.h1, p.h2, grid, p.x0)?;
    let count = config.mc.csv_paths.min(config.mc.n_paths);
    let paths = per_path(config.mc.master_seed, count, |tag| Ok(model.solve(n, tag)?.0))?;
    Ok(Ensemble::from_paths(config.mc.master_seed, paths))
}

fn mixed_convergence(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (mc, p, tol) = (&config.mc, &config.params, &config.tolerances);
    let grid = grid_of(config, config.grid.n_points)?;
    let drift = drift_spec(config)?;
    let study = convergence_study(&drift, p.h1, p.h2, &p.ns, Arc::clone(&grid), mc.n_paths, p.beta, mc.master_seed, p.x0)?;
    let mut out = Outcome::default();
    for r in &study.rows {
        out.report("l2", r.stabilization, &r.l2);
        out.row("besov_difference", r.stabilization, r.besov.norm_value);
    }
    out.report("rough_second_moment", config.grid.horizon, &study.rough_second_moment);
    if let Some(fit) = &study.fit {
        out.row("l2_slope", "", fit.slope);
    }
    let slope = study.fit.as_ref().map_or(f64::NAN, |f| f.slope);

    if config.drift.as_ref().is_some_and(DriftConfig::is_zero) {
        // X^N - X^∞ = B^{H1}/N on every path
        let m2 = study.rough_second_moment.estimate;
        let worst = study
            .rows
            .iter()
            .map(|r| (r.l2.estimate * (r.stabilization as f64).powi(2) - m2).abs() / m2)
            .fold(0.0, f64::max);
        out.verdict("l2_identity", worst <= tol.identity, format!("max relative |N^2 l2 - E[(B_T^H1)^2]| = {worst:.3e}"));
        out.verdict("l2_slope", (slope + 2.0).abs() <= tol.identity.max(1e-9), format!("slope {slope:.12}"));
        let target = config.grid.horizon.powf(2.0 * p.h1);
        out.verdict(
            "rough_second_moment",
            study.rough_second_moment.within(target, tol.se_k),
            format!("{:.5} vs T^(2 H1) = {target:.5}", study.rough_second_moment.estimate),
        );
    } else {
        out.verdict("l2_monotone", study.l2_nonincreasing(), format!("l2 = {:?}", study.rows.iter().map(|r| r.l2.estimate).collect::<Vec<_>>()));
        out.verdict(
            "besov_monotone",
            study.besov_nonincreasing(),
            format!("besov = {:?}", study.rows.iter().map(|r| r.besov.norm_value).collect::<Vec<_>>()),
        );
        if drift.is_smooth() {
            out.verdict("l2_slope", slope <= tol.l2_slope_max, format!("slope {slope:.4} <= {}", tol.l2_slope_max));
        }
    }
    out.paths = Some(mixed_head(config, drift, grid, *p.ns.last().expect("validated"))?);
    Ok(out)
}

fn besov(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (mc, p, tol) = (&config.mc, &config.params, &config.tolerances);
    let drift = drift_spec(config)?;
    let horizon = config.grid.horizon;
    let mut out = Outcome::default();

    let finest = *p.refinements.last().expect("validated");
    let fine_grid = grid_of(config, finest)?;
    let line = SamplePath { grid: Arc::clone(&fine_grid), origin: 0.0, values: fine_grid.points().to_vec(), increments: vec![], seed: None };
    let linear = besov_norm(&Ensemble::from_paths(mc.master_seed, vec![line]), p.oracle_beta)?.norm_value;
    // ∫_0^t (t-s)^{-β} ds = t^{1-β}/(1-β), and both terms increase in t
    let beta = p.oracle_beta;
    let exact = horizon * horizon + (horizon.powf(1.0 - beta) / (1.0 - beta)).powi(2);
    out.row("linear_path_norm", finest, linear);
    out.row("linear_path_oracle", finest, exact);
    out.verdict(
        "linear_oracle",
        (linear / exact - 1.0).abs() <= tol.linear_oracle,
        format!("{linear:.6} vs {exact:.6} at {finest} points"),
    );

    let mut stable = Vec::new();
    let mut growing = Vec::new();
    let mut exported = None;
    for &n in &p.refinements {
        let grid = grid_of(config, n)?;
        let model = MixedModel::new(drift.clone(), p.h1, p.h2, grid, p.x0)?;
        let e = Ensemble::generate(mc.master_seed, mc.n_paths, |tag| Ok(model.solve(p.stabilization, tag)?.0))?;
        stable.push(besov_norm(&e, p.stable_beta)?.norm_value);
        growing.push(besov_norm(&e, p.growth_beta)?.norm_value);
        out.row("besov_stable", n, *stable.last().unwrap());
        out.row("besov_growth", n, *growing.last().unwrap());
        if n == finest {
            exported = Some(head(config, e.paths));
        }
    }
    let ratios = |v: &[f64]| v.windows(2).map(|w| w[1] / w[0]).collect::<Vec<_>>();
    let (rs, rg) = (ratios(&stable), ratios(&growing));
    let worst_stable = rs.iter().fold(1.0f64, |m, r| m.max(*r).max(1.0 / r));
    out.verdict(
        "stable_under_refinement",
        worst_stable <= tol.besov_stable_ratio,
        format!("beta = {}: ratios {rs:.4?} within {}", p.stable_beta, tol.besov_stable_ratio),
    );
    let least_growth = rg.iter().fold(f64::INFINITY, |m, r| m.min(*r));
    out.verdict(
        "growth_under_refinement",
        least_growth >= tol.besov_growth_ratio,
        format!("beta = {}: ratios {rg:.4?} >= {}", p.growth_beta, tol.besov_growth_ratio),
    );

    let grid = grid_of(config, config.grid.n_points)?;
    let study = convergence_study(&drift, p.h1, p.h2, &p.ns, grid, mc.n_paths, p.stable_beta, mc.master_seed, p.x0)?;
    let diffs: Vec<f64> = study.rows.iter().map(|r| r.besov.norm_value).collect();
    for r in &study.rows {
        out.row("besov_difference", r.stabilization, r.besov.norm_value);
    }
    out.verdict("difference_monotone", study.besov_nonincreasing(), format!("beta = {}: {diffs:.4?}", p.stable_beta));
    out.paths = exported;
    Ok(out)
}

fn cgp_check(config: &ExperimentConfig) -> CoreResult<Outcome> {
    let (mc, p, tol) = (&config.mc, &config.params, &config.tolerances);
    let grid = grid_of(config, config.grid.n_points)?;
    let sampler = VolterraSampler::new(kernel_spec(config)?, Arc::clone(&grid))?;
    let solver = SolverConfig::new(Arc::clone(&grid), p.x0, drift_spec(config)?)?;
    let window = CgpWindow::new(&sampler, p.t, p.epsilon)?;
    let keep = mc.csv_paths as u64;
    let draws = per_path(mc.master_seed, mc.n_paths, |tag| {
        let noise = sampler.sample(tag);
        let x = euler_solve(&solver, &noise)?;
        let d = window.decompose(&sampler, &x, &noise)?;
        Ok((d, (tag.path_index < keep).then_some(x)))
    })?;
    let z: Vec<f64> = draws.iter().map(|d| d.0.standardized()).collect();
    let report = normality_check(&z)?;
    let first = draws[0].0;

    let mut out = Outcome::default();
    out.row("kappa_sq", "continuous", first.kappa_sq);
    out.row("kappa_sq", "discrete", first.discrete_kappa_sq);
    out.rows.push(ReportRow { quantity: "mean".into(), label: String::new(), value: report.mean.value, std_error: Some(report.mean.std_error) });
    out.rows.push(ReportRow { quantity: "variance".into(), label: String::new(), value: report.variance.value, std_error: Some(report.variance.std_error) });
    for (name, m) in [("skewness", report.skewness), ("excess_kurtosis", report.excess_kurtosis)] {
        if let Some(m) = m {
            out.rows.push(ReportRow { quantity: name.into(), label: String::new(), value: m.value, std_error: Some(m.std_error) });
        }
    }
    let mean_v = report.mean.value;
    let var_v = report.variance.value;
    let kurt = report.excess_kurtosis.map_or(f64::NAN, |m| m.value);
    out.verdict("mean", mean_v.abs() < tol.cgp_mean, format!("|mean| = {:.4} < {}", mean_v.abs(), tol.cgp_mean));
    out.verdict("variance", (var_v - 1.0).abs() <= tol.cgp_variance, format!("variance {var_v:.4} in 1 ± {}", tol.cgp_variance));
    out.verdict("excess_kurtosis", kurt.abs() < tol.cgp_kurtosis, format!("|excess kurtosis| = {:.4} < {}", kurt.abs(), tol.cgp_kurtosis));
    out.paths = Some(head(config, draws.into_iter().filter_map(|d| d.1)));
    Ok(out)
}
