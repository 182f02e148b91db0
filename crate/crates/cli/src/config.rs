//! Experiment configuration in a sectioned `key = value` text format.
//!
//! ```text
//! [run]
//! command = small-ball
//!
//! [kernel]
//! kind = fbm
//! hurst = 0.75
//!
//! [drift]
//! kind = sign
//!
//! [mc]
//! master_seed = 42
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key not given takes its
//! documented default, except `master_seed`, which is mandatory. Parsing
//! collects every problem it finds instead of stopping at the first.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use volterra_core::drifts::{DirichletTerm, DriftFn, DriftSpec, FiniteSetApprox};
use volterra_core::kernels::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Paths,
    Solve,
    VerifyKernel,
    SmallBall,
    Dirichlet,
    MixedConvergence,
    Besov,
    CgpCheck,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Paths,
        Command::Solve,
        Command::VerifyKernel,
        Command::SmallBall,
        Command::Dirichlet,
        Command::MixedConvergence,
        Command::Besov,
        Command::CgpCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Paths => "paths",
            Command::Solve => "solve",
            Command::VerifyKernel => "verify-kernel",
            Command::SmallBall => "small-ball",
            Command::Dirichlet => "dirichlet",
            Command::MixedConvergence => "mixed-convergence",
            Command::Besov => "besov",
            Command::CgpCheck => "cgp-check",
        }
    }

    fn needs_kernel(self) -> bool {
        !matches!(self, Command::MixedConvergence | Command::Besov)
    }

    fn needs_drift(self) -> bool {
        !matches!(self, Command::Paths | Command::VerifyKernel)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelConfig {
    Fbm { hurst: f64 },
    RiemannLiouville { hurst: f64 },
    /// Weighted fBm kernels `(weight, hurst)`.
    Mixture { components: Vec<(f64, f64)> },
}

impl KernelConfig {
    pub fn spec(&self, horizon: f64) -> volterra_core::Result<KernelSpec> {
        match self {
            KernelConfig::Fbm { hurst } => KernelSpec::fbm(*hurst, horizon),
            KernelConfig::RiemannLiouville { hurst } => KernelSpec::riemann_liouville(*hurst, horizon),
            KernelConfig::Mixture { components } => KernelSpec::fbm_mixture(components, horizon),
        }
    }

    /// The exponent the kernel bound is tested against by default: the
    /// kernel's own `H`, or the largest component `H` of a mixture.
    fn default_bound_hurst(&self) -> f64 {
        match self {
            KernelConfig::Fbm { hurst } | KernelConfig::RiemannLiouville { hurst } => *hurst,
            KernelConfig::Mixture { components } => components.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftConfig {
    Zero,
    Constant { value: f64 },
    /// `scale · sign(x - center)`
    Sign { scale: f64, center: f64 },
    /// `scale · tanh(rate x)`
    Tanh { scale: f64, rate: f64 },
    /// `clamp(slope x + intercept, lo, hi)`
    ClampedLinear { slope: f64, intercept: f64, lo: f64, hi: f64 },
    /// `left` below `breakpoint`, `right` from it on.
    Step { breakpoint: f64, left: f64, right: f64 },
    /// `value · 1_M(x)` for the rationals `p/q`, `|p| <= max_numerator`, `q <= max_denominator`.
    Dirichlet { value: f64, max_numerator: u32, max_denominator: u32, delta: f64 },
    /// `inner · 1_{ℝ∖F}(x)` for the finite set `F = points`.
    IndicatorComplement { points: Vec<f64>, delta: f64, inner: f64 },
}

impl DriftConfig {
    pub fn spec(&self) -> volterra_core::Result<DriftSpec> {
        Ok(match self {
            DriftConfig::Zero => DriftSpec::zero(),
            DriftConfig::Constant { value } => DriftSpec::constant(*value),
            DriftConfig::Sign { scale, center } => DriftSpec::scaled_sign(*scale, *center),
            DriftConfig::Tanh { scale, rate } => {
                DriftSpec::smooth(DriftFn::Tanh { scale: *scale, rate: *rate }, (scale * rate).abs())?
            }
            DriftConfig::ClampedLinear { slope, intercept, lo, hi } => DriftSpec::smooth(
                DriftFn::ClampedAffine { slope: *slope, intercept: *intercept, lo: *lo, hi: *hi },
                slope.abs(),
            )?,
            DriftConfig::Step { breakpoint, left, right } => DriftSpec::piecewise(
                vec![*breakpoint],
                vec![DriftFn::Constant(*left), DriftFn::Constant(*right)],
                left.abs().max(right.abs()),
            )?,
            DriftConfig::Dirichlet { value, max_numerator, max_denominator, delta } => {
                let set = FiniteSetApprox::rationals(*max_numerator, *max_denominator, *delta)?;
                DriftSpec::dirichlet(vec![DirichletTerm { f: DriftFn::Constant(*value), q: f64::INFINITY, set }])?
            }
            DriftConfig::IndicatorComplement { points, delta, inner } => DriftSpec::indicator_complement(
                FiniteSetApprox::new(points.clone(), *delta)?,
                Some(DriftSpec::constant(*inner)),
            ),
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DriftConfig::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub horizon: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub master_seed: u64,
    /// Number of leading paths written to `paths.csv`.
    pub csv_paths: usize,
}

/// Command-specific parameters; each command reads only the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub x0: f64,
    pub t: f64,
    pub epsilon: f64,
    /// Small-ball base point.
    pub x: f64,
    pub alphas: Vec<f64>,
    /// Zero-drift control run alongside the small-ball study.
    pub control: bool,
    /// Mollification ladder of the solve command; empty means plain Euler.
    pub levels: Vec<u32>,
    pub ns: Vec<u32>,
    pub h1: f64,
    pub h2: f64,
    /// `N` of the mixed equation in the Besov refinement study.
    pub stabilization: u32,
    pub beta: f64,
    pub stable_beta: f64,
    pub growth_beta: f64,
    /// `β` of the deterministic linear-path check `Y_t = t`.
    pub oracle_beta: f64,
    pub refinements: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub bound_hurst: Option<f64>,
    /// Compare the Volterra sampler against the Cholesky sampler.
    pub cross_check: bool,
    /// Node paired with the last node for the off-diagonal check.
    pub cross_node: usize,
}

/// Verdict thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Standard errors allowed in Monte Carlo comparisons.
    pub se_k: f64,
    pub slope_tol: f64,
    pub small_ball_margin: f64,
    pub bound_ratio_factor: f64,
    pub cgp_mean: f64,
    pub cgp_variance: f64,
    pub cgp_kurtosis: f64,
    pub ladder_fraction: f64,
    pub shape_factor: f64,
    pub l2_slope_max: f64,
    pub besov_stable_ratio: f64,
    pub besov_growth_ratio: f64,
    pub linear_oracle: f64,
    pub residual: f64,
    pub dirichlet: f64,
    /// Allowed gap of the indicator-complement identity, in grid steps.
    pub indicator_steps: f64,
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            se_k: 3.0,
            slope_tol: 0.02,
            small_ball_margin: 0.15,
            bound_ratio_factor: 2.0,
            cgp_mean: 0.04,
            cgp_variance: 0.05,
            cgp_kurtosis: 0.15,
            ladder_fraction: 0.95,
            shape_factor: 5.0,
            l2_slope_max: -1.8,
            besov_stable_ratio: 1.2,
            besov_growth_ratio: 1.3,
            linear_oracle: 0.02,
            residual: 1e-12,
            dirichlet: 0.0,
            indicator_steps: 2.0,
            identity: 1e-12,
        }
    }
}

/// Knobs that do not change results and are left out of the config hash.
#[derive(Debug, Clone, PartialEq)]
pub struct Runtime {
    pub output_dir: PathBuf,
    /// Worker threads; 0 means the machine's parallelism.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub kernel: Option<KernelConfig>,
    pub drift: Option<DriftConfig>,
    pub grid: GridConfig,
    pub mc: McConfig,
    pub params: Params,
    pub tolerances: Tolerances,
    pub runtime: Runtime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Validation(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Validation(message) => write!(f, "invalid config: {message}"),
        }
    }
}

/// Every problem found in one config text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

const SECTIONS: [&str; 8] = ["run", "kernel", "drift", "grid", "mc", "params", "tolerances", "output"];

struct Entry {
    value: String,
    line: usize,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn split_lines(text: &str, errors: &mut Vec<ConfigError>) -> Sections {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                errors.push(ConfigError::Parse { line, message: format!("malformed section header `{content}`") });
                continue;
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                errors.push(ConfigError::Parse { line, message: format!("unknown section [{name}]") });
                current = None;
                continue;
            }
            sections.entry(name.to_string()).or_default();
            current = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError::Parse { line, message: format!("expected `key = value`, got `{content}`") });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = &current else {
            errors.push(ConfigError::Parse { line, message: format!("key `{key}` outside any section") });
            continue;
        };
        let map = sections.get_mut(section).expect("section registered");
        if let Some(prev) = map.get(key) {
            errors.push(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}` in [{section}] (first on line {})", prev.line),
            });
            continue;
        }
        map.insert(key.to_string(), Entry { value: value.to_string(), line });
    }
    sections
}

/// Typed access to the raw entries; consumed keys are removed so leftovers
/// can be reported as unknown.
struct Reader {
    sections: Sections,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.sections.get_mut(section).and_then(|m| m.remove(key))
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn parsed<T: FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        let entry = self.take(section, key)?;
        match entry.value.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(ConfigError::Parse {
                    line: entry.line,
                    message: format!("[{section}] {key}: expected {what}, got `{}`", entry.value),
                });
                None
            }
        }
    }

    fn list<T: FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<Vec<T>> {
        let entry = self.take(section, key)?;
        if entry.value.is_empty() {
            return Some(Vec::new());
        }
        let mut out = Vec::new();
        for item in entry.value.split(',') {
            match item.trim().parse() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.errors.push(ConfigError::Parse {
                        line: entry.line,
                        message: format!("[{section}] {key}: expected a comma-separated list of {what}, bad item `{}`", item.trim()),
                    });
                    return None;
                }
            }
        }
        Some(out)
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> f64 {
        self.parsed(section, key, "a number").unwrap_or(default)
    }

    fn required_f64(&mut self, section: &str, key: &str) -> f64 {
        match self.parsed(section, key, "a number") {
            Some(v) => v,
            None => {
                self.missing(section, key);
                f64::NAN
            }
        }
    }

    fn missing(&mut self, section: &str, key: &str) {
        // a present but unparsable value has already been reported
        if !self.errors.iter().any(|e| matches!(e, ConfigError::Parse { message, .. } if message.starts_with(&format!("[{section}] {key}:")))) {
            self.errors.push(ConfigError::Validation(format!("missing required key `{key}` in [{section}]")));
        }
    }

    fn leftovers(&mut self) {
        for (section, map) in &self.sections {
            for (key, entry) in map {
                self.errors.push(ConfigError::Parse {
                    line: entry.line,
                    message: format!("unknown key `{key}` in [{section}]"),
                });
            }
        }
    }
}

fn default_alphas() -> Vec<f64> {
    (3..=8).map(|k| 2f64.powi(-k)).collect()
}

fn default_epsilons() -> Vec<f64> {
    (2..=10).map(|k| 2f64.powi(-k)).collect()
}

fn parse_kernel(r: &mut Reader) -> Option<KernelConfig> {
    if !r.has_section("kernel") {
        return None;
    }
    let kind: String = r.parsed("kernel", "kind", "a kernel kind").unwrap_or_default();
    match kind.as_str() {
        "fbm" => Some(KernelConfig::Fbm { hurst: r.required_f64("kernel", "hurst") }),
        "rl" | "riemann-liouville" => Some(KernelConfig::RiemannLiouville { hurst: r.required_f64("kernel", "hurst") }),
        "mixture" => {
            let Some(entry) = r.take("kernel", "components") else {
                r.missing("kernel", "components");
                return None;
            };
            let mut components = Vec::new();
            for item in entry.value.split(',') {
                let parsed = item.split_once(':').and_then(|(w, h)| Some((w.trim().parse().ok()?, h.trim().parse().ok()?)));
                match parsed {
                    Some(c) => components.push(c),
                    None => {
                        r.errors.push(ConfigError::Parse {
                            line: entry.line,
                            message: format!("[kernel] components: expected `weight:hurst` items, bad item `{}`", item.trim()),
                        });
                        return None;
                    }
                }
            }
            Some(KernelConfig::Mixture { components })
        }
        "" => {
            r.missing("kernel", "kind");
            None
        }
        other => {
            r.errors.push(ConfigError::Validation(format!("unknown kernel kind `{other}` (expected fbm, rl or mixture)")));
            None
        }
    }
}

fn parse_drift(r: &mut Reader) -> Option<DriftConfig> {
    if !r.has_section("drift") {
        return None;
    }
    let kind: String = r.parsed("drift", "kind", "a drift kind").unwrap_or_default();
    let d = "drift";
    Some(match kind.as_str() {
        "zero" => DriftConfig::Zero,
        "constant" => DriftConfig::Constant { value: r.required_f64(d, "value") },
        "sign" => DriftConfig::Sign { scale: r.f64_or(d, "scale", 1.0), center: r.f64_or(d, "center", 0.0) },
        "tanh" => DriftConfig::Tanh { scale: r.f64_or(d, "scale", 1.0), rate: r.f64_or(d, "rate", 1.0) },
        "clamped-linear" => DriftConfig::ClampedLinear {
            slope: r.required_f64(d, "slope"),
            intercept: r.f64_or(d, "intercept", 0.0),
            lo: r.required_f64(d, "lo"),
            hi: r.required_f64(d, "hi"),
        },
        "step" => DriftConfig::Step {
            breakpoint: r.f64_or(d, "breakpoint", 0.0),
            left: r.required_f64(d, "left"),
            right: r.required_f64(d, "right"),
        },
        "dirichlet" => DriftConfig::Dirichlet {
            value: r.f64_or(d, "value", 1.0),
            max_numerator: r.parsed(d, "max_numerator", "a nonnegative integer").unwrap_or(8),
            max_denominator: r.parsed(d, "max_denominator", "a positive integer").unwrap_or(8),
            delta: r.f64_or(d, "delta", 0.0),
        },
        "indicator-complement" => DriftConfig::IndicatorComplement {
            points: r.list(d, "points", "numbers").unwrap_or_else(|| vec![0.0]),
            delta: r.f64_or(d, "delta", 0.0),
            inner: r.f64_or(d, "inner", 1.0),
        },
        "" => {
            r.missing(d, "kind");
            return None;
        }
        other => {
            r.errors.push(ConfigError::Validation(format!(
                "unknown drift kind `{other}` (expected zero, constant, sign, tanh, clamped-linear, step, dirichlet or indicator-complement)"
            )));
            return None;
        }
    })
}

/// Parses and validates a config. `command` comes from the command line
/// and must agree with `[run] command` when both are given.
pub fn parse_config(text: &str, command: Option<Command>) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let sections = split_lines(text, &mut errors);
    let mut r = Reader { sections, errors };

    let from_file: Option<String> = r.parsed("run", "command", "a command name");
    let command = match (from_file.map(|s| s.parse::<Command>()), command) {
        (Some(Err(e)), _) => {
            r.errors.push(ConfigError::Validation(e));
            None
        }
        (Some(Ok(a)), Some(b)) if a != b => {
            r.errors.push(ConfigError::Validation(format!("config is for `{a}` but `{b}` was requested")));
            None
        }
        (Some(Ok(a)), _) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => {
            r.errors.push(ConfigError::Validation("no command given on the command line or in [run]".into()));
            None
        }
    };
    let threads = r.parsed("run", "threads", "a nonnegative integer").unwrap_or(0);
    let output_dir = PathBuf::from(r.parsed::<String>("run", "output_dir", "a path").unwrap_or_else(|| "runs".into()));

    let kernel = parse_kernel(&mut r);
    let drift = parse_drift(&mut r);
    let grid = GridConfig {
        horizon: r.f64_or("grid", "horizon", 1.0),
        n_points: r.parsed("grid", "n_points", "a positive integer").unwrap_or(512),
    };
    let master_seed = r.parsed("mc", "master_seed", "an unsigned integer");
    if master_seed.is_none() {
        r.missing("mc", "master_seed");
    }
    let mc = McConfig {
        n_paths: r.parsed("mc", "n_paths", "a positive integer").unwrap_or(10_000),
        master_seed: master_seed.unwrap_or(0),
        csv_paths: r.parsed("mc", "csv_paths", "a nonnegative integer").unwrap_or(100),
    };

    let p = "params";
    let bound_hurst = r.parsed(p, "bound_hurst", "a number").or_else(|| kernel.as_ref().map(KernelConfig::default_bound_hurst));
    let params = Params {
        x0: r.f64_or(p, "x0", 0.0),
        t: r.f64_or(p, "t", grid.horizon),
        epsilon: r.f64_or(p, "epsilon", 0.0625),
        x: r.f64_or(p, "x", 0.0),
        alphas: r.list(p, "alphas", "numbers").unwrap_or_else(default_alphas),
        control: r.parsed(p, "control", "true or false").unwrap_or(true),
        levels: r.list(p, "levels", "positive integers").unwrap_or_default(),
        ns: r.list(p, "ns", "positive integers").unwrap_or_else(|| vec![2, 4, 8, 16, 32, 64]),
        h1: r.f64_or(p, "h1", 0.3),
        h2: r.f64_or(p, "h2", 0.75),
        stabilization: r.parsed(p, "stabilization", "a positive integer").unwrap_or(1),
        beta: r.f64_or(p, "beta", 0.2),
        stable_beta: r.f64_or(p, "stable_beta", 0.2),
        growth_beta: r.f64_or(p, "growth_beta", 0.8),
        oracle_beta: r.f64_or(p, "oracle_beta", 0.5),
        refinements: r.list(p, "refinements", "positive integers").unwrap_or_else(|| vec![128, 256, 512, 1024]),
        epsilons: r.list(p, "epsilons", "numbers").unwrap_or_else(default_epsilons),
        t_grid: r.list(p, "t_grid", "numbers").unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]),
        bound_hurst,
        cross_check: r.parsed(p, "cross_check", "true or false").unwrap_or(false),
        cross_node: r.parsed(p, "cross_node", "a node index").unwrap_or(grid.n_points.div_ceil(2)),
    };

    let d = Tolerances::default();
    let s = "tolerances";
    let tolerances = Tolerances {
        se_k: r.f64_or(s, "se_k", d.se_k),
        slope_tol: r.f64_or(s, "slope_tol", d.slope_tol),
        small_ball_margin: r.f64_or(s, "small_ball_margin", d.small_ball_margin),
        bound_ratio_factor: r.f64_or(s, "bound_ratio_factor", d.bound_ratio_factor),
        cgp_mean: r.f64_or(s, "cgp_mean", d.cgp_mean),
        cgp_variance: r.f64_or(s, "cgp_variance", d.cgp_variance),
        cgp_kurtosis: r.f64_or(s, "cgp_kurtosis", d.cgp_kurtosis),
        ladder_fraction: r.f64_or(s, "ladder_fraction", d.ladder_fraction),
        shape_factor: r.f64_or(s, "shape_factor", d.shape_factor),
        l2_slope_max: r.f64_or(s, "l2_slope_max", d.l2_slope_max),
        besov_stable_ratio: r.f64_or(s, "besov_stable_ratio", d.besov_stable_ratio),
        besov_growth_ratio: r.f64_or(s, "besov_growth_ratio", d.besov_growth_ratio),
        linear_oracle: r.f64_or(s, "linear_oracle", d.linear_oracle),
        residual: r.f64_or(s, "residual", d.residual),
        dirichlet: r.f64_or(s, "dirichlet", d.dirichlet),
        indicator_steps: r.f64_or(s, "indicator_steps", d.indicator_steps),
        identity: r.f64_or(s, "identity", d.identity),
    };
    r.leftovers();
    let mut errors = r.errors;

    let Some(command) = command else {
        return Err(ConfigErrors(errors));
    };
    let config = ExperimentConfig {
        command,
        kernel,
        drift,
        grid,
        mc,
        params,
        tolerances,
        runtime: Runtime { output_dir, threads },
    };
    validate(&config, &mut errors);
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn strictly_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn hurst_ok(h: f64) -> bool {
    h > 0.0 && h < 1.0
}

fn validate(c: &ExperimentConfig, errors: &mut Vec<ConfigError>) {
    let mut fail = |msg: String| errors.push(ConfigError::Validation(msg));
    let p = &c.params;
    let g = &c.grid;
    if !(g.horizon > 0.0 && g.horizon.is_finite()) {
        fail(format!("horizon must be positive, got {}", g.horizon));
    }
    if g.n_points == 0 {
        fail("n_points must be at least 1".into());
    }
    if c.mc.n_paths < 2 {
        fail(format!("n_paths must be at least 2, got {}", c.mc.n_paths));
    }

    if c.command.needs_kernel() {
        match &c.kernel {
            None => fail(format!("command `{}` needs a [kernel] section", c.command)),
            Some(KernelConfig::Fbm { hurst } | KernelConfig::RiemannLiouville { hurst }) if !hurst_ok(*hurst) => {
                fail(format!("Hurst parameter must lie in (0,1), got {hurst}"))
            }
            Some(KernelConfig::Mixture { components }) => {
                if components.is_empty() {
                    fail("a mixture kernel needs at least one component".into());
                }
                for &(w, h) in components {
                    if !hurst_ok(h) {
                        fail(format!("Hurst parameter must lie in (0,1), got {h}"));
                    }
                    if !w.is_finite() {
                        fail(format!("mixture weight {w} is not finite"));
                    }
                }
            }
            Some(_) => {}
        }
        if let Some(h) = p.bound_hurst {
            if !hurst_ok(h) {
                fail(format!("Hurst parameter must lie in (0,1), got bound_hurst = {h}"));
            }
        }
    }
    if c.command.needs_drift() {
        match &c.drift {
            None => fail(format!("command `{}` needs a [drift] section", c.command)),
            Some(d) => {
                if let Err(e) = d.spec() {
                    fail(format!("drift: {e}"));
                }
            }
        }
    }
    if !p.x0.is_finite() {
        fail("x0 must be finite".into());
    }

    let on_grid = |t: f64| g.n_points > 0 && TimeGridCheck { horizon: g.horizon, n: g.n_points }.node_of(t).is_some();
    match c.command {
        Command::SmallBall => {
            if !(p.t > 0.0 && p.t <= g.horizon && on_grid(p.t)) {
                fail(format!("small-ball time t = {} must be a positive grid point in (0, {}]", p.t, g.horizon));
            }
            if p.alphas.is_empty() || p.alphas.iter().any(|&a| !(a > 0.0)) || !p.alphas.windows(2).all(|w| w[1] < w[0]) {
                fail("alphas must be positive and strictly decreasing".into());
            }
        }
        Command::CgpCheck => {
            if !(p.epsilon > 0.0 && p.epsilon < p.t && p.t <= g.horizon && on_grid(p.t) && on_grid(p.t - p.epsilon)) {
                fail(format!("cgp-check needs grid points 0 < t - ε < t <= T, got t = {}, ε = {}", p.t, p.epsilon));
            }
        }
        Command::Solve => {
            if !strictly_increasing(&p.levels) || p.levels.first() == Some(&0) {
                fail("levels must be positive and strictly increasing".into());
            }
        }
        Command::Dirichlet => {
            if !matches!(c.drift, Some(DriftConfig::Dirichlet { .. } | DriftConfig::IndicatorComplement { .. }) | None) {
                fail("the dirichlet command needs a dirichlet or indicator-complement drift".into());
            }
        }
        Command::VerifyKernel => {
            if p.epsilons.is_empty() || p.t_grid.is_empty() {
                fail("epsilons and t_grid must be nonempty".into());
            }
            if p.epsilons.len() < 3 {
                fail("the slope fit needs at least 3 epsilons".into());
            }
            for &t in &p.t_grid {
                if !(t > 0.0 && t <= g.horizon) {
                    fail(format!("t_grid entry {t} must lie in (0, {}]", g.horizon));
                }
                for &e in &p.epsilons {
                    if !(e > 0.0 && e <= t) {
                        fail(format!("window ε = {e} must lie in (0, t] for t = {t}"));
                    }
                }
            }
        }
        Command::Paths => {
            if p.cross_check && !(p.cross_node >= 1 && p.cross_node < g.n_points) {
                fail(format!("cross_node must lie in [1, {}), got {}", g.n_points, p.cross_node));
            }
        }
        Command::MixedConvergence | Command::Besov => {
            if !(p.h1 > 0.0 && p.h1 <= 0.5) {
                fail(format!("H1 must lie in (0, 1/2], got {}", p.h1));
            }
            if !(p.h2 > 0.5 && p.h2 < 1.0) {
                fail(format!("H2 must lie in (1/2, 1), got {}", p.h2));
            }
            if p.ns.is_empty() || p.ns[0] == 0 || !strictly_increasing(&p.ns) {
                fail("ns must be positive and strictly increasing".into());
            }
            if let Some(Err(_) | Ok(None)) = c.drift.as_ref().map(|d| d.spec().map(|s| s.sup_bound())) {
                fail("the mixed equation needs a bounded drift".into());
            }
            if c.command == Command::MixedConvergence && !(p.beta > 0.0 && p.beta < p.h1) {
                fail(format!("Besov parameter must lie in (0, H1) = (0, {}), got {}", p.h1, p.beta));
            }
            if c.command == Command::Besov {
                if !(p.stable_beta > 0.0 && p.stable_beta < p.h1) {
                    fail(format!("stable_beta must lie in (0, H1) = (0, {}), got {}", p.h1, p.stable_beta));
                }
                if !(p.growth_beta > p.h1 && p.growth_beta < 1.0) {
                    fail(format!("growth_beta must lie in (H1, 1) = ({}, 1), got {}", p.h1, p.growth_beta));
                }
                if p.refinements.len() < 2 || p.refinements[0] == 0 || !strictly_increasing(&p.refinements) {
                    fail("refinements must hold at least two strictly increasing grid sizes".into());
                }
                if !(p.oracle_beta > 0.0 && p.oracle_beta < 1.0) {
                    fail(format!("oracle_beta must lie in (0,1), got {}", p.oracle_beta));
                }
                if p.stabilization == 0 {
                    fail("stabilization must be a positive integer".into());
                }
            }
        }
    }
}

/// Grid-point test without building the grid.
struct TimeGridCheck {
    horizon: f64,
    n: usize,
}

impl TimeGridCheck {
    fn node_of(&self, t: f64) -> Option<usize> {
        volterra_core::paths::TimeGrid::uniform(self.horizon, self.n).ok()?.node_of(t)
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Full text form; `parse_config(serialize())` gives back `self`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[run]\ncommand = {}\nthreads = {}\noutput_dir = {}\n", self.command, self.runtime.threads, self.runtime.output_dir.display());
        out.push_str(&self.canonical_body());
        out
    }

    /// Everything that determines the results, in a fixed order with all
    /// defaults spelled out.
    pub fn canonical(&self) -> String {
        format!("[run]\ncommand = {}\n\n{}", self.command, self.canonical_body())
    }

    /// First 16 hex digits of the SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }

    fn canonical_body(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        if let Some(k) = &self.kernel {
            let _ = writeln!(w, "[kernel]");
            let _ = match k {
                KernelConfig::Fbm { hurst } => writeln!(w, "kind = fbm\nhurst = {hurst}"),
                KernelConfig::RiemannLiouville { hurst } => writeln!(w, "kind = rl\nhurst = {hurst}"),
                KernelConfig::Mixture { components } => {
                    let items: Vec<String> = components.iter().map(|(a, h)| format!("{a}:{h}")).collect();
                    writeln!(w, "kind = mixture\ncomponents = {}", items.join(", "))
                }
            };
            let _ = writeln!(w);
        }
        if let Some(d) = &self.drift {
            let _ = writeln!(w, "[drift]");
            let _ = match d {
                DriftConfig::Zero => writeln!(w, "kind = zero"),
                DriftConfig::Constant { value } => writeln!(w, "kind = constant\nvalue = {value}"),
                DriftConfig::Sign { scale, center } => writeln!(w, "kind = sign\nscale = {scale}\ncenter = {center}"),
                DriftConfig::Tanh { scale, rate } => writeln!(w, "kind = tanh\nscale = {scale}\nrate = {rate}"),
                DriftConfig::ClampedLinear { slope, intercept, lo, hi } => {
                    writeln!(w, "kind = clamped-linear\nslope = {slope}\nintercept = {intercept}\nlo = {lo}\nhi = {hi}")
                }
                DriftConfig::Step { breakpoint, left, right } => {
                    writeln!(w, "kind = step\nbreakpoint = {breakpoint}\nleft = {left}\nright = {right}")
                }
                DriftConfig::Dirichlet { value, max_numerator, max_denominator, delta } => writeln!(
                    w,
                    "kind = dirichlet\nvalue = {value}\nmax_numerator = {max_numerator}\nmax_denominator = {max_denominator}\ndelta = {delta}"
                ),
                DriftConfig::IndicatorComplement { points, delta, inner } => {
                    writeln!(w, "kind = indicator-complement\npoints = {}\ndelta = {delta}\ninner = {inner}", join(points))
                }
            };
            let _ = writeln!(w);
        }
        let g = &self.grid;
        let _ = writeln!(w, "[grid]\nhorizon = {}\nn_points = {}\n", g.horizon, g.n_points);
        let m = &self.mc;
        let _ = writeln!(w, "[mc]\nn_paths = {}\nmaster_seed = {}\ncsv_paths = {}\n", m.n_paths, m.master_seed, m.csv_paths);
        let p = &self.params;
        let _ = writeln!(w, "[params]");
        let _ = writeln!(w, "x0 = {}\nt = {}\nepsilon = {}\nx = {}", p.x0, p.t, p.epsilon, p.x);
        let _ = writeln!(w, "alphas = {}\ncontrol = {}\nlevels = {}\nns = {}", join(&p.alphas), p.control, join(&p.levels), join(&p.ns));
        let _ = writeln!(w, "h1 = {}\nh2 = {}\nstabilization = {}\nbeta = {}", p.h1, p.h2, p.stabilization, p.beta);
        let _ = writeln!(w, "stable_beta = {}\ngrowth_beta = {}\noracle_beta = {}\nrefinements = {}", p.stable_beta, p.growth_beta, p.oracle_beta, join(&p.refinements));
        let _ = writeln!(w, "epsilons = {}\nt_grid = {}", join(&p.epsilons), join(&p.t_grid));
        if let Some(h) = p.bound_hurst {
            let _ = writeln!(w, "bound_hurst = {h}");
        }
        let _ = writeln!(w, "cross_check = {}\ncross_node = {}\n", p.cross_check, p.cross_node);
        let t = &self.tolerances;
        let _ = writeln!(w, "[tolerances]");
        for (k, v) in [
            ("se_k", t.se_k),
            ("slope_tol", t.slope_tol),
            ("small_ball_margin", t.small_ball_margin),
            ("bound_ratio_factor", t.bound_ratio_factor),
            ("cgp_mean", t.cgp_mean),
            ("cgp_variance", t.cgp_variance),
            ("cgp_kurtosis", t.cgp_kurtosis),
            ("ladder_fraction", t.ladder_fraction),
            ("shape_factor", t.shape_factor),
            ("l2_slope_max", t.l2_slope_max),
            ("besov_stable_ratio", t.besov_stable_ratio),
            ("besov_growth_ratio", t.besov_growth_ratio),
            ("linear_oracle", t.linear_oracle),
            ("residual", t.residual),
            ("dirichlet", t.dirichlet),
            ("indicator_steps", t.indicator_steps),
            ("identity", t.identity),
        ] {
            let _ = writeln!(w, "{k} = {v}");
        }
        out
    }
}
