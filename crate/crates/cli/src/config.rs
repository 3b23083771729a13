//! Experiment configuration: an INI-like text format, its parser, and the
//! fully resolved [`ExperimentConfig`].
//!
//! Grammar: `[section]` headers, `key = value` assignments, `#` starts a
//! comment anywhere on a line, blank lines ignored. Lists are
//! comma-separated. The parser collects every problem it finds (with line
//! numbers) instead of stopping at the first.
//!
//! Sections and keys:
//!
//! ```text
//! [experiment]  model (required: normal | ma1 | toad)
//!               method = bsl | rbsl-mean | rbsl-var | bsl-is   (default bsl)
//!               m = 50   iterations = 10000   burn_in = iterations/5
//!               thin = 1   seed = 1   output = out
//! [data]        file = path            (mutually exclusive with source)
//!               source = contaminated-normal | ma1 | sv | toad
//!               per-source keys: theta_true, n, omega, sigma, rho,
//!               sigma_v, n_toads, n_days; seed (defaults to experiment seed)
//! [prior]       kind = normal (means, variances) | uniform (lower, upper)
//! [gamma]       kind = laplace | exponential (optional)
//!               scale = 0.5 (laplace scale)   mean = 0.5 (exponential mean)
//! [proposal]    variance = 0.01 | variances = list
//!               tune = false   tune_rounds = 8
//! [init]        theta = list | mle     (default: prior center)
//! [grid]        parameter = <data key>   values = list
//!               replicates = 1   methods = list
//! [is]          draws = 10000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use rbsl_core::mcmc::{MethodKind, ProposalCov};
use rbsl_core::models::normal::contamination_scale_for_sd;
use rbsl_core::{AdjustmentKind, GammaPrior, ThetaPrior};

/// One configuration problem, tied to a source line when one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Render a batch of configuration errors, one per line.
pub fn format_errors(errors: &[ConfigError]) -> String {
    errors
        .iter()
        .map(ConfigError::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Simulation model selector; sizes come from the data at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelId {
    Normal,
    Ma1,
    Toad,
}

impl ModelId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(ModelId::Normal),
            "ma1" => Some(ModelId::Ma1),
            "toad" => Some(ModelId::Toad),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Normal => "normal",
            ModelId::Ma1 => "ma1",
            ModelId::Toad => "toad",
        }
    }

    pub fn d_theta(self) -> usize {
        match self {
            ModelId::Normal | ModelId::Ma1 => 1,
            ModelId::Toad => 3,
        }
    }

    pub fn d_eta(self) -> usize {
        match self {
            ModelId::Normal => 2,
            ModelId::Ma1 => 3,
            ModelId::Toad => 48,
        }
    }
}

/// What to run at each grid cell: an MCMC chain, or prior importance
/// sampling of the plain synthetic-likelihood posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMethod {
    Chain(MethodKind),
    Importance,
}

impl RunMethod {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "bsl-is" {
            return Some(RunMethod::Importance);
        }
        MethodKind::from_str(s).ok().map(RunMethod::Chain)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RunMethod::Chain(k) => k.as_str(),
            RunMethod::Importance => "bsl-is",
        }
    }

    pub fn adjustment_kind(&self) -> Option<AdjustmentKind> {
        match self {
            RunMethod::Chain(k) => k.adjustment_kind(),
            RunMethod::Importance => None,
        }
    }
}

/// Where the observed data comes from: a file on disk, or one of the
/// built-in generators with its true-DGP parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    /// n draws from ω·N(θ,1) + (1−ω)·N(θ,σ_ε²), affinely rescaled so the
    /// sample mean is exactly θ and the sample sd exactly `sigma`.
    ContaminatedNormal {
        theta_true: f64,
        n: usize,
        omega: f64,
        sigma: f64,
    },
    /// First-order moving average series of length n.
    Ma1 { theta_true: f64, n: usize },
    /// Stochastic-volatility returns of length n; deliberately outside
    /// the moving-average model family.
    Sv {
        omega: f64,
        rho: f64,
        sigma_v: f64,
        n: usize,
    },
    /// Individual-movement simulation: (alpha, delta, p0) over an
    /// `n_days` x `n_toads` displacement matrix.
    Toad {
        theta_true: [f64; 3],
        n_toads: usize,
        n_days: usize,
    },
}

impl DataSource {
    pub fn source_str(&self) -> &'static str {
        match self {
            DataSource::File(_) => "file",
            DataSource::ContaminatedNormal { .. } => "contaminated-normal",
            DataSource::Ma1 { .. } => "ma1",
            DataSource::Sv { .. } => "sv",
            DataSource::Toad { .. } => "toad",
        }
    }

    /// Keys that may be swept by a [grid] over this source.
    pub fn grid_parameters(&self) -> &'static [&'static str] {
        match self {
            DataSource::File(_) | DataSource::Toad { .. } => &[],
            DataSource::ContaminatedNormal { .. } => &["sigma", "omega", "theta_true"],
            DataSource::Ma1 { .. } => &["theta_true"],
            DataSource::Sv { .. } => &["omega", "rho", "sigma_v"],
        }
    }

    /// A copy with one scalar generator parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<DataSource, String> {
        let mut out = self.clone();
        match (&mut out, name) {
            (DataSource::ContaminatedNormal { sigma, .. }, "sigma") => *sigma = value,
            (DataSource::ContaminatedNormal { omega, .. }, "omega") => *omega = value,
            (DataSource::ContaminatedNormal { theta_true, .. }, "theta_true") => {
                *theta_true = value
            }
            (DataSource::Ma1 { theta_true, .. }, "theta_true") => *theta_true = value,
            (DataSource::Sv { omega, .. }, "omega") => *omega = value,
            (DataSource::Sv { rho, .. }, "rho") => *rho = value,
            (DataSource::Sv { sigma_v, .. }, "sigma_v") => *sigma_v = value,
            _ => {
                return Err(format!(
                    "grid parameter `{name}` is not a parameter of data source `{}`",
                    self.source_str()
                ))
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Generator-parameter sanity; reused for every grid value.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            DataSource::File(_) => Ok(()),
            DataSource::ContaminatedNormal { n, omega, sigma, .. } => {
                if *n < 2 {
                    return Err(format!("n must be at least 2, got {n}"));
                }
                if !(*omega > 0.0 && *omega < 1.0) {
                    return Err(format!("omega must lie in (0,1), got {omega}"));
                }
                contamination_scale_for_sd(*omega, *sigma)
                    .map(|_| ())
                    .map_err(|e| e.to_string())
            }
            DataSource::Ma1 { theta_true, n } => {
                if *n < 3 {
                    return Err(format!("n must be at least 3, got {n}"));
                }
                if theta_true.abs() >= 1.0 {
                    return Err(format!(
                        "theta_true must lie in (-1,1), got {theta_true}"
                    ));
                }
                Ok(())
            }
            DataSource::Sv { rho, sigma_v, n, .. } => {
                if *n < 3 {
                    return Err(format!("n must be at least 3, got {n}"));
                }
                if rho.abs() >= 1.0 {
                    return Err(format!("rho must lie in (-1,1), got {rho}"));
                }
                if !(*sigma_v > 0.0) {
                    return Err(format!("sigma_v must be positive, got {sigma_v}"));
                }
                Ok(())
            }
            DataSource::Toad {
                theta_true,
                n_toads,
                n_days,
            } => {
                if *n_toads == 0 {
                    return Err("n_toads must be positive".into());
                }
                if *n_days < 2 {
                    return Err(format!("n_days must be at least 2, got {n_days}"));
                }
                let [alpha, delta, p0] = theta_true;
                if !(*alpha > 1.0 && *alpha <= 2.0) {
                    return Err(format!("alpha must lie in (1,2], got {alpha}"));
                }
                if !(*delta > 0.0) {
                    return Err(format!("delta must be positive, got {delta}"));
                }
                if !(*p0 >= 0.0 && *p0 < 1.0) {
                    return Err(format!("p0 must lie in [0,1), got {p0}"));
                }
                Ok(())
            }
        }
    }

    /// The value point estimates are judged against in repeated-sampling
    /// tables. For the stochastic-volatility generator this is the value
    /// the fitted moving-average parameter concentrates on (zero), not a
    /// parameter of the generator itself.
    pub fn pseudo_true(&self) -> Option<Vec<f64>> {
        match self {
            DataSource::File(_) => None,
            DataSource::ContaminatedNormal { theta_true, .. }
            | DataSource::Ma1 { theta_true, .. } => Some(vec![*theta_true]),
            DataSource::Sv { .. } => Some(vec![0.0]),
            DataSource::Toad { theta_true, .. } => Some(theta_true.to_vec()),
        }
    }
}

/// Prior over the model parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    Normal { means: Vec<f64>, variances: Vec<f64> },
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
}

impl PriorSpec {
    pub fn dim(&self) -> usize {
        match self {
            PriorSpec::Normal { means, .. } => means.len(),
            PriorSpec::Uniform { lower, .. } => lower.len(),
        }
    }

    pub fn build(&self) -> rbsl_core::Result<ThetaPrior> {
        match self {
            PriorSpec::Normal { means, variances } => {
                let pairs: Vec<(f64, f64)> =
                    means.iter().copied().zip(variances.iter().copied()).collect();
                ThetaPrior::normal(&pairs)
            }
            PriorSpec::Uniform { lower, upper } => {
                let pairs: Vec<(f64, f64)> =
                    lower.iter().copied().zip(upper.iter().copied()).collect();
                ThetaPrior::uniform_box(&pairs)
            }
        }
    }

    /// Default chain start: the mean (normal) or box midpoint (uniform).
    pub fn center(&self) -> Vec<f64> {
        match self {
            PriorSpec::Normal { means, .. } => means.clone(),
            PriorSpec::Uniform { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        }
    }
}

/// Hyperparameters for the adjustment prior. Both families are kept so a
/// grid can mix the two robust methods; each method picks its own.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSpec {
    /// Family as written in the config, when pinned explicitly.
    pub kind: Option<AdjustmentKind>,
    pub laplace_scale: f64,
    pub exponential_mean: f64,
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec {
            kind: None,
            laplace_scale: 0.5,
            exponential_mean: 0.5,
        }
    }
}

impl GammaSpec {
    /// The adjustment prior a given method needs, sized to the summary
    /// dimension; `None` for methods without adjustments.
    pub fn build_for(
        &self,
        method: RunMethod,
        d_eta: usize,
    ) -> rbsl_core::Result<Option<GammaPrior>> {
        match method.adjustment_kind() {
            None => Ok(None),
            Some(AdjustmentKind::MeanShift) => {
                GammaPrior::laplace(self.laplace_scale, d_eta).map(Some)
            }
            Some(AdjustmentKind::VarianceInflation) => {
                GammaPrior::exponential(self.exponential_mean, d_eta).map(Some)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProposalVariances {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

/// Random-walk proposal covariance plus optional pilot tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSpec {
    pub variances: ProposalVariances,
    pub tune: bool,
    pub tune_rounds: u32,
}

impl Default for ProposalSpec {
    fn default() -> Self {
        ProposalSpec {
            variances: ProposalVariances::Scalar(0.01),
            tune: false,
            tune_rounds: 8,
        }
    }
}

impl ProposalSpec {
    pub fn build(&self, dim: usize) -> rbsl_core::Result<ProposalCov> {
        match &self.variances {
            ProposalVariances::Scalar(v) => ProposalCov::scalar(*v, dim),
            ProposalVariances::Diagonal(vs) => ProposalCov::diagonal(vs),
        }
    }
}

/// Chain starting point.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    PriorCenter,
    /// Conditional-sum-of-squares estimate from the observed series
    /// (moving-average model only).
    Mle,
    Theta(Vec<f64>),
}

/// Optional sweep: a generator parameter over a value list, independent
/// replicate data sets, and the methods to run at every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub parameter: Option<String>,
    pub values: Vec<f64>,
    pub replicates: usize,
    pub methods: Option<Vec<RunMethod>>,
}

/// A fully validated experiment description with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelId,
    pub method: RunMethod,
    pub m: usize,
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub output: PathBuf,
    pub data: DataSource,
    /// Seed for observed-data generation (synthetic sources only).
    pub data_seed: u64,
    pub prior: PriorSpec,
    pub gamma: GammaSpec,
    pub proposal: ProposalSpec,
    pub init: InitSpec,
    pub grid: Option<GridSpec>,
    pub is_draws: usize,
}

impl ExperimentConfig {
    /// The methods each grid cell runs: the grid list when given,
    /// otherwise the single configured method.
    pub fn methods(&self) -> Vec<RunMethod> {
        match &self.grid {
            Some(GridSpec {
                methods: Some(ms), ..
            }) => ms.clone(),
            _ => vec![self.method],
        }
    }

    /// Grid values as options: a single `None` when there is no sweep.
    pub fn grid_values(&self) -> Vec<Option<f64>> {
        match &self.grid {
            Some(GridSpec {
                parameter: Some(_),
                values,
                ..
            }) => values.iter().copied().map(Some).collect(),
            _ => vec![None],
        }
    }

    pub fn replicates(&self) -> usize {
        self.grid.as_ref().map_or(1, |g| g.replicates)
    }

    /// Deterministic re-rendering with every default resolved; parses
    /// back to an equal config.
    pub fn canonical_ini(&self) -> String {
        let mut s = String::new();
        let join = |xs: &[f64]| {
            xs.iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        s.push_str("[experiment]\n");
        s.push_str(&format!("model = {}\n", self.model.as_str()));
        s.push_str(&format!("method = {}\n", self.method.as_str()));
        s.push_str(&format!("m = {}\n", self.m));
        s.push_str(&format!("iterations = {}\n", self.iterations));
        s.push_str(&format!("burn_in = {}\n", self.burn_in));
        s.push_str(&format!("thin = {}\n", self.thin));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("output = {}\n", self.output.display()));

        s.push_str("\n[data]\n");
        match &self.data {
            DataSource::File(p) => s.push_str(&format!("file = {}\n", p.display())),
            DataSource::ContaminatedNormal {
                theta_true,
                n,
                omega,
                sigma,
            } => {
                s.push_str("source = contaminated-normal\n");
                s.push_str(&format!("theta_true = {theta_true}\n"));
                s.push_str(&format!("n = {n}\n"));
                s.push_str(&format!("omega = {omega}\n"));
                s.push_str(&format!("sigma = {sigma}\n"));
                s.push_str(&format!("seed = {}\n", self.data_seed));
            }
            DataSource::Ma1 { theta_true, n } => {
                s.push_str("source = ma1\n");
                s.push_str(&format!("theta_true = {theta_true}\n"));
                s.push_str(&format!("n = {n}\n"));
                s.push_str(&format!("seed = {}\n", self.data_seed));
            }
            DataSource::Sv {
                omega,
                rho,
                sigma_v,
                n,
            } => {
                s.push_str("source = sv\n");
                s.push_str(&format!("omega = {omega}\n"));
                s.push_str(&format!("rho = {rho}\n"));
                s.push_str(&format!("sigma_v = {sigma_v}\n"));
                s.push_str(&format!("n = {n}\n"));
                s.push_str(&format!("seed = {}\n", self.data_seed));
            }
            DataSource::Toad {
                theta_true,
                n_toads,
                n_days,
            } => {
                s.push_str("source = toad\n");
                s.push_str(&format!("theta_true = {}\n", join(theta_true)));
                s.push_str(&format!("n_toads = {n_toads}\n"));
                s.push_str(&format!("n_days = {n_days}\n"));
                s.push_str(&format!("seed = {}\n", self.data_seed));
            }
        }

        s.push_str("\n[prior]\n");
        match &self.prior {
            PriorSpec::Normal { means, variances } => {
                s.push_str("kind = normal\n");
                s.push_str(&format!("means = {}\n", join(means)));
                s.push_str(&format!("variances = {}\n", join(variances)));
            }
            PriorSpec::Uniform { lower, upper } => {
                s.push_str("kind = uniform\n");
                s.push_str(&format!("lower = {}\n", join(lower)));
                s.push_str(&format!("upper = {}\n", join(upper)));
            }
        }

        if self.methods().iter().any(|m| m.adjustment_kind().is_some()) {
            s.push_str("\n[gamma]\n");
            if let Some(kind) = self.gamma.kind {
                let name = match kind {
                    AdjustmentKind::MeanShift => "laplace",
                    AdjustmentKind::VarianceInflation => "exponential",
                };
                s.push_str(&format!("kind = {name}\n"));
            }
            s.push_str(&format!("scale = {}\n", self.gamma.laplace_scale));
            s.push_str(&format!("mean = {}\n", self.gamma.exponential_mean));
        }

        s.push_str("\n[proposal]\n");
        match &self.proposal.variances {
            ProposalVariances::Scalar(v) => s.push_str(&format!("variance = {v}\n")),
            ProposalVariances::Diagonal(vs) => {
                s.push_str(&format!("variances = {}\n", join(vs)))
            }
        }
        s.push_str(&format!("tune = {}\n", self.proposal.tune));
        s.push_str(&format!("tune_rounds = {}\n", self.proposal.tune_rounds));

        s.push_str("\n[init]\n");
        match &self.init {
            InitSpec::PriorCenter => s.push_str(&format!(
                "# theta defaults to the prior center: {}\n",
                join(&self.prior.center())
            )),
            InitSpec::Mle => s.push_str("theta = mle\n"),
            InitSpec::Theta(t) => s.push_str(&format!("theta = {}\n", join(t))),
        }

        if let Some(grid) = &self.grid {
            s.push_str("\n[grid]\n");
            if let Some(p) = &grid.parameter {
                s.push_str(&format!("parameter = {p}\n"));
                s.push_str(&format!("values = {}\n", join(&grid.values)));
            }
            s.push_str(&format!("replicates = {}\n", grid.replicates));
            s.push_str(&format!(
                "methods = {}\n",
                self.methods()
                    .iter()
                    .map(|m| m.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }

        if self.methods().contains(&RunMethod::Importance) {
            s.push_str("\n[is]\n");
            s.push_str(&format!("draws = {}\n", self.is_draws));
        }
        s
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "experiment",
        &[
            "model",
            "method",
            "m",
            "iterations",
            "burn_in",
            "thin",
            "seed",
            "output",
        ],
    ),
    (
        "data",
        &[
            "file",
            "source",
            "theta_true",
            "n",
            "omega",
            "sigma",
            "rho",
            "sigma_v",
            "n_toads",
            "n_days",
            "seed",
        ],
    ),
    ("prior", &["kind", "means", "variances", "lower", "upper"]),
    ("gamma", &["kind", "scale", "mean"]),
    ("proposal", &["variance", "variances", "tune", "tune_rounds"]),
    ("init", &["theta"]),
    ("grid", &["parameter", "values", "replicates", "methods"]),
    ("is", &["draws"]),
];

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Default)]
struct Raw {
    map: BTreeMap<(String, String), Entry>,
    section_lines: BTreeMap<String, usize>,
    errors: Vec<ConfigError>,
}

impl Raw {
    fn err(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            message: message.into(),
        });
    }

    fn has_section(&self, sec: &str) -> bool {
        self.section_lines.contains_key(sec)
    }

    fn entry(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.map.get(&(sec.to_string(), key.to_string()))
    }

    fn line_of(&self, sec: &str, key: &str) -> Option<usize> {
        self.entry(sec, key).map(|e| e.line)
    }

    /// Fetch and convert one value; a conversion failure is recorded and
    /// reported as `None`, so later checks can keep running.
    fn take<T>(
        &mut self,
        sec: &str,
        key: &str,
        what: &str,
        parse: impl FnOnce(&str) -> Option<T>,
    ) -> Option<(usize, T)> {
        let e = self.entry(sec, key)?.clone();
        match parse(&e.value) {
            Some(v) => Some((e.line, v)),
            None => {
                self.err(
                    Some(e.line),
                    format!("[{sec}] {key}: expected {what}, got {:?}", e.value),
                );
                None
            }
        }
    }

    fn f64_(&mut self, sec: &str, key: &str) -> Option<(usize, f64)> {
        self.take(sec, key, "a finite number", |s| {
            s.parse::<f64>().ok().filter(|v| v.is_finite())
        })
    }

    fn u64_(&mut self, sec: &str, key: &str) -> Option<(usize, u64)> {
        self.take(sec, key, "a nonnegative integer", |s| s.parse::<u64>().ok())
    }

    fn usize_(&mut self, sec: &str, key: &str) -> Option<(usize, usize)> {
        self.take(sec, key, "a nonnegative integer", |s| {
            s.parse::<usize>().ok()
        })
    }

    fn bool_(&mut self, sec: &str, key: &str) -> Option<(usize, bool)> {
        self.take(sec, key, "true or false", |s| s.parse::<bool>().ok())
    }

    fn string(&mut self, sec: &str, key: &str) -> Option<(usize, String)> {
        self.take(sec, key, "a value", |s| {
            if s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        })
    }

    fn list_f64(&mut self, sec: &str, key: &str) -> Option<(usize, Vec<f64>)> {
        self.take(sec, key, "a comma-separated list of numbers", |s| {
            let parts: Option<Vec<f64>> = s
                .split(',')
                .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            parts.filter(|v| !v.is_empty())
        })
    }
}

fn first_pass(text: &str) -> Raw {
    let mut raw = Raw::default();
    let mut section: Option<String> = None;
    let mut section_known = false;
    for (idx, full_line) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = match full_line.find('#') {
            Some(i) => &full_line[..i],
            None => full_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) if !name.trim().is_empty() => {
                    let name = name.trim().to_string();
                    section_known = SECTIONS.iter().any(|(s, _)| *s == name);
                    if !section_known {
                        let names = SECTIONS
                            .iter()
                            .map(|(s, _)| *s)
                            .collect::<Vec<_>>()
                            .join(", ");
                        raw.err(Some(ln), format!("unknown section [{name}]; expected one of: {names}"));
                    }
                    raw.section_lines.entry(name.clone()).or_insert(ln);
                    section = Some(name);
                }
                _ => raw.err(Some(ln), format!("malformed section header {line:?}")),
            }
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            raw.err(
                Some(ln),
                format!("expected `key = value` or `[section]`, got {line:?}"),
            );
            continue;
        };
        let key = k.trim().to_string();
        let value = v.trim().to_string();
        let Some(sec) = section.clone() else {
            raw.err(
                Some(ln),
                format!("key `{key}` appears before any [section] header"),
            );
            continue;
        };
        if !section_known {
            continue; // the unknown-section error already covers these keys
        }
        let allowed = SECTIONS
            .iter()
            .find(|(s, _)| *s == sec)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            raw.err(
                Some(ln),
                format!(
                    "unknown key `{key}` in [{sec}]; expected one of: {}",
                    allowed.join(", ")
                ),
            );
            continue;
        }
        if raw.map.contains_key(&(sec.clone(), key.clone())) {
            raw.err(Some(ln), format!("duplicate key `{key}` in [{sec}]"));
            continue;
        }
        raw.map.insert((sec, key), Entry { line: ln, value });
    }
    raw
}

/// Parse and fully validate a config text. On failure returns every
/// problem found, each tied to its source line where one exists.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut raw = first_pass(text);

    // [experiment]
    let model = match raw.string("experiment", "model") {
        Some((ln, s)) => match ModelId::parse(&s) {
            Some(m) => Some(m),
            None => {
                raw.err(
                    Some(ln),
                    format!("unknown model `{s}`; expected normal, ma1 or toad"),
                );
                None
            }
        },
        None => {
            if raw.entry("experiment", "model").is_none() {
                raw.err(None, "missing required key `model` in [experiment]");
            }
            None
        }
    };
    let method_entry = raw.string("experiment", "method");
    let method_line = method_entry.as_ref().map(|(ln, _)| *ln);
    let method = match method_entry {
        Some((ln, s)) => match RunMethod::parse(&s) {
            Some(m) => m,
            None => {
                raw.err(
                    Some(ln),
                    format!("unknown method `{s}`; expected bsl, rbsl-mean, rbsl-var or bsl-is"),
                );
                RunMethod::Chain(MethodKind::Bsl)
            }
        },
        None => RunMethod::Chain(MethodKind::Bsl),
    };
    let (m_line, m) = match raw.usize_("experiment", "m") {
        Some((ln, v)) => (Some(ln), v),
        None => (None, 50),
    };
    if m < 2 {
        raw.err(m_line, format!("m must be at least 2, got {m}"));
    }
    if let Some(model) = model {
        // The sample covariance of m summaries has rank at most m−1; the
        // synthetic likelihood needs it full-rank.
        if m < model.d_eta() + 1 {
            raw.err(
                m_line,
                format!(
                    "m = {m} cannot estimate a full-rank covariance for {} summaries; need m >= {}",
                    model.d_eta(),
                    model.d_eta() + 1
                ),
            );
        }
    }
    let iterations = match raw.u64_("experiment", "iterations") {
        Some((_, v)) => v,
        None => 10_000,
    };
    let (burn_line, burn_in) = match raw.u64_("experiment", "burn_in") {
        Some((ln, v)) => (Some(ln), v),
        None => (None, iterations / 5),
    };
    if burn_in > iterations {
        raw.err(
            burn_line,
            format!("burn_in ({burn_in}) exceeds iterations ({iterations})"),
        );
    }
    let (thin_line, thin) = match raw.u64_("experiment", "thin") {
        Some((ln, v)) => (Some(ln), v),
        None => (None, 1),
    };
    if thin == 0 {
        raw.err(thin_line, "thin must be at least 1");
    }
    let seed = raw.u64_("experiment", "seed").map_or(1, |(_, v)| v);
    let output = raw
        .string("experiment", "output")
        .map_or_else(|| PathBuf::from("out"), |(_, s)| PathBuf::from(s));

    // [data]
    let data = build_data_source(&mut raw, model);
    let data_seed = raw.u64_("data", "seed").map_or(seed, |(_, v)| v);

    // [prior]
    let prior = build_prior(&mut raw, model);

    // [gamma]
    let gamma_kind_entry = raw.string("gamma", "kind");
    let gamma_kind_line = gamma_kind_entry.as_ref().map(|(ln, _)| *ln);
    let gamma_kind = match gamma_kind_entry {
        Some((ln, s)) => match s.as_str() {
            "laplace" => Some(AdjustmentKind::MeanShift),
            "exponential" => Some(AdjustmentKind::VarianceInflation),
            _ => {
                raw.err(
                    Some(ln),
                    format!("unknown adjustment prior `{s}`; expected laplace or exponential"),
                );
                None
            }
        },
        None => None,
    };
    let (scale_line, laplace_scale) = match raw.f64_("gamma", "scale") {
        Some((ln, v)) => (Some(ln), v),
        None => (None, 0.5),
    };
    if !(laplace_scale > 0.0) {
        raw.err(
            scale_line,
            format!("adjustment prior scale must be positive, got {laplace_scale}"),
        );
    }
    let (mean_line, exponential_mean) = match raw.f64_("gamma", "mean") {
        Some((ln, v)) => (Some(ln), v),
        None => (None, 0.5),
    };
    if !(exponential_mean > 0.0) {
        raw.err(
            mean_line,
            format!("adjustment prior mean must be positive, got {exponential_mean}"),
        );
    }
    let gamma = GammaSpec {
        kind: gamma_kind,
        laplace_scale,
        exponential_mean,
    };

    // [proposal]
    let proposal = build_proposal(&mut raw, model);

    // [init]
    let init = build_init(&mut raw, model, prior.as_ref());

    // [grid]
    let grid = build_grid(&mut raw, data.as_ref(), method);

    // [is]
    let (draws_line, is_draws) = match raw.usize_("is", "draws") {
        Some((ln, v)) => (Some(ln), v),
        None => (None, 10_000),
    };
    if is_draws == 0 {
        raw.err(draws_line, "importance sampling needs at least one draw");
    }

    // Method / adjustment-prior consistency across everything that will run.
    let methods: Vec<RunMethod> = match &grid {
        Some(GridSpec {
            methods: Some(ms), ..
        }) => ms.clone(),
        _ => vec![method],
    };
    let any_robust = methods.iter().any(|m| m.adjustment_kind().is_some());
    if raw.has_section("gamma") && !any_robust {
        let ln = raw.section_lines.get("gamma").copied();
        raw.err(
            ln,
            "[gamma] is configured but no selected method uses an adjustment",
        );
    }
    if let Some(kind) = gamma_kind {
        for m in &methods {
            if let Some(required) = m.adjustment_kind() {
                if required != kind {
                    let (given, wanted) = match kind {
                        AdjustmentKind::MeanShift => ("laplace", "exponential"),
                        AdjustmentKind::VarianceInflation => ("exponential", "laplace"),
                    };
                    raw.err(
                        gamma_kind_line,
                        format!(
                            "[gamma] kind = {given} conflicts with method = {} (line {}): \
                             that method uses a {wanted} prior",
                            m.as_str(),
                            method_line
                                .or_else(|| raw.line_of("grid", "methods"))
                                .map_or("?".to_string(), |n| n.to_string()),
                        ),
                    );
                }
            }
        }
    }

    if !raw.errors.is_empty() {
        return Err(raw.errors);
    }
    Ok(ExperimentConfig {
        model: model.expect("validated"),
        method,
        m,
        iterations,
        burn_in,
        thin,
        seed,
        output,
        data: data.expect("validated"),
        data_seed,
        prior: prior.expect("validated"),
        gamma,
        proposal,
        init,
        grid,
        is_draws,
    })
}

fn build_data_source(raw: &mut Raw, model: Option<ModelId>) -> Option<DataSource> {
    if !raw.has_section("data") {
        raw.err(None, "missing [data] section; give either `file` or `source`");
        return None;
    }
    let file = raw.string("data", "file");
    let source = raw.string("data", "source");
    let section_line = raw.section_lines.get("data").copied();

    let allowed_keys: &[&str] = match (&file, &source) {
        (Some((f_line, _)), Some(_)) => {
            raw.err(
                Some(*f_line),
                "data `file` and `source` are mutually exclusive",
            );
            return None;
        }
        (None, None) => {
            raw.err(
                section_line,
                "[data] needs either `file` (observed data on disk) or `source` (a generator)",
            );
            return None;
        }
        (Some(_), None) => &["file"],
        (None, Some((src_line, s))) => {
            let keys: Option<&[&str]> = match s.as_str() {
                "contaminated-normal" => Some(&["source", "theta_true", "n", "omega", "sigma", "seed"]),
                "ma1" => Some(&["source", "theta_true", "n", "seed"]),
                "sv" => Some(&["source", "omega", "rho", "sigma_v", "n", "seed"]),
                "toad" => Some(&["source", "theta_true", "n_toads", "n_days", "seed"]),
                _ => {
                    raw.err(
                        Some(*src_line),
                        format!(
                            "unknown data source `{s}`; expected contaminated-normal, ma1, sv or toad"
                        ),
                    );
                    None
                }
            };
            keys?
        }
    };

    // Keys belonging to other sources are typos worth flagging.
    let present: Vec<(String, usize)> = raw
        .map
        .iter()
        .filter(|((sec, _), _)| sec == "data")
        .map(|((_, key), e)| (key.clone(), e.line))
        .collect();
    for (key, line) in present {
        if !allowed_keys.contains(&key.as_str()) && key != "file" {
            let label = source
                .as_ref()
                .map_or("file".to_string(), |(_, s)| s.clone());
            raw.err(
                Some(line),
                format!("[data] key `{key}` is not used by source `{label}`"),
            );
        }
    }

    let built = match &source {
        None => {
            let (_, path) = file.as_ref().expect("checked above");
            Some(DataSource::File(PathBuf::from(path)))
        }
        Some((_, s)) => match s.as_str() {
            "contaminated-normal" => {
                let theta_true = scalar_theta_true(raw).unwrap_or(1.0);
                let n = raw.usize_("data", "n").map_or(100, |(_, v)| v);
                let omega = raw.f64_("data", "omega").map_or(0.8, |(_, v)| v);
                let sigma = raw.f64_("data", "sigma").map_or(1.0, |(_, v)| v);
                Some(DataSource::ContaminatedNormal {
                    theta_true,
                    n,
                    omega,
                    sigma,
                })
            }
            "ma1" => {
                let theta_true = scalar_theta_true(raw).unwrap_or(0.0);
                let n = raw.usize_("data", "n").map_or(100, |(_, v)| v);
                Some(DataSource::Ma1 { theta_true, n })
            }
            "sv" => {
                let omega = raw.f64_("data", "omega").map_or(-0.76, |(_, v)| v);
                let rho = raw.f64_("data", "rho").map_or(0.9, |(_, v)| v);
                let sigma_v = raw.f64_("data", "sigma_v").map_or(0.36, |(_, v)| v);
                let n = raw.usize_("data", "n").map_or(100, |(_, v)| v);
                Some(DataSource::Sv {
                    omega,
                    rho,
                    sigma_v,
                    n,
                })
            }
            "toad" => {
                let theta_true = match raw.list_f64("data", "theta_true") {
                    Some((ln, v)) => {
                        if v.len() == 3 {
                            [v[0], v[1], v[2]]
                        } else {
                            raw.err(
                                Some(ln),
                                format!(
                                    "toad theta_true needs 3 values (alpha, delta, p0), got {}",
                                    v.len()
                                ),
                            );
                            [1.8, 45.0, 0.6]
                        }
                    }
                    None => [1.8, 45.0, 0.6],
                };
                let n_toads = raw.usize_("data", "n_toads").map_or(66, |(_, v)| v);
                let n_days = raw.usize_("data", "n_days").map_or(63, |(_, v)| v);
                Some(DataSource::Toad {
                    theta_true,
                    n_toads,
                    n_days,
                })
            }
            _ => None,
        },
    };

    let built = built?;
    if let Err(msg) = built.validate() {
        raw.err(section_line, format!("[data] {msg}"));
        return None;
    }
    if let Some(model) = model {
        let compatible = matches!(
            (model, &built),
            (ModelId::Normal, DataSource::ContaminatedNormal { .. })
                | (ModelId::Ma1, DataSource::Ma1 { .. })
                | (ModelId::Ma1, DataSource::Sv { .. })
                | (ModelId::Toad, DataSource::Toad { .. })
                | (_, DataSource::File(_))
        );
        if !compatible {
            raw.err(
                raw.line_of("data", "source"),
                format!(
                    "data source `{}` does not produce data for model `{}`",
                    built.source_str(),
                    model.as_str()
                ),
            );
            return None;
        }
    }
    Some(built)
}

fn scalar_theta_true(raw: &mut Raw) -> Option<f64> {
    let (ln, v) = raw.list_f64("data", "theta_true")?;
    if v.len() != 1 {
        raw.err(
            Some(ln),
            format!("theta_true must be a single value for this source, got {}", v.len()),
        );
        return None;
    }
    Some(v[0])
}

fn build_prior(raw: &mut Raw, model: Option<ModelId>) -> Option<PriorSpec> {
    if !raw.has_section("prior") {
        raw.err(None, "missing [prior] section (kind = normal or uniform)");
        return None;
    }
    let section_line = raw.section_lines.get("prior").copied();
    let kind = match raw.string("prior", "kind") {
        Some((ln, s)) => match s.as_str() {
            "normal" | "uniform" => Some((ln, s)),
            _ => {
                raw.err(
                    Some(ln),
                    format!("unknown prior kind `{s}`; expected normal or uniform"),
                );
                None
            }
        },
        None => {
            if raw.entry("prior", "kind").is_none() {
                raw.err(section_line, "missing key `kind` in [prior]");
            }
            None
        }
    };
    let (_, kind) = kind?;

    let forbid = |raw: &mut Raw, key: &str| {
        if let Some(ln) = raw.line_of("prior", key) {
            raw.err(
                Some(ln),
                format!("[prior] key `{key}` is not used by kind `{kind}`"),
            );
        }
    };
    let spec = if kind == "normal" {
        forbid(raw, "lower");
        forbid(raw, "upper");
        let means = raw.list_f64("prior", "means");
        let variances = raw.list_f64("prior", "variances");
        match (means, variances) {
            (Some((_, means)), Some((v_line, variances))) => {
                if means.len() != variances.len() {
                    raw.err(
                        Some(v_line),
                        format!(
                            "prior means ({}) and variances ({}) differ in length",
                            means.len(),
                            variances.len()
                        ),
                    );
                    None
                } else if let Some(bad) = variances.iter().find(|v| !(**v > 0.0)) {
                    raw.err(
                        Some(v_line),
                        format!("prior variances must be positive, got {bad}"),
                    );
                    None
                } else {
                    Some(PriorSpec::Normal { means, variances })
                }
            }
            _ => {
                if raw.entry("prior", "means").is_none() {
                    raw.err(section_line, "normal prior needs `means`");
                }
                if raw.entry("prior", "variances").is_none() {
                    raw.err(section_line, "normal prior needs `variances`");
                }
                None
            }
        }
    } else {
        forbid(raw, "means");
        forbid(raw, "variances");
        let lower = raw.list_f64("prior", "lower");
        let upper = raw.list_f64("prior", "upper");
        match (lower, upper) {
            (Some((_, lower)), Some((u_line, upper))) => {
                if lower.len() != upper.len() {
                    raw.err(
                        Some(u_line),
                        format!(
                            "prior lower ({}) and upper ({}) differ in length",
                            lower.len(),
                            upper.len()
                        ),
                    );
                    None
                } else if let Some((lo, hi)) =
                    lower.iter().zip(&upper).find(|(lo, hi)| lo >= hi)
                {
                    raw.err(
                        Some(u_line),
                        format!("prior bounds must satisfy lower < upper, got [{lo}, {hi}]"),
                    );
                    None
                } else {
                    Some(PriorSpec::Uniform { lower, upper })
                }
            }
            _ => {
                if raw.entry("prior", "lower").is_none() {
                    raw.err(section_line, "uniform prior needs `lower`");
                }
                if raw.entry("prior", "upper").is_none() {
                    raw.err(section_line, "uniform prior needs `upper`");
                }
                None
            }
        }
    };

    let spec = spec?;
    if let Some(model) = model {
        if spec.dim() != model.d_theta() {
            raw.err(
                section_line,
                format!(
                    "prior dimension {} does not match model `{}` ({} parameters)",
                    spec.dim(),
                    model.as_str(),
                    model.d_theta()
                ),
            );
            return None;
        }
    }
    Some(spec)
}

fn build_proposal(raw: &mut Raw, model: Option<ModelId>) -> ProposalSpec {
    let scalar = raw.f64_("proposal", "variance");
    let diagonal = raw.list_f64("proposal", "variances");
    let variances = match (scalar, diagonal) {
        (Some((ln, _)), Some(_)) => {
            raw.err(
                Some(ln),
                "[proposal] `variance` and `variances` are mutually exclusive",
            );
            ProposalVariances::Scalar(0.01)
        }
        (Some((ln, v)), None) => {
            if !(v > 0.0) {
                raw.err(Some(ln), format!("proposal variance must be positive, got {v}"));
            }
            ProposalVariances::Scalar(v)
        }
        (None, Some((ln, vs))) => {
            if let Some(bad) = vs.iter().find(|v| !(**v > 0.0)) {
                raw.err(
                    Some(ln),
                    format!("proposal variances must be positive, got {bad}"),
                );
            }
            if let Some(model) = model {
                if vs.len() != model.d_theta() {
                    raw.err(
                        Some(ln),
                        format!(
                            "proposal needs {} variances for model `{}`, got {}",
                            model.d_theta(),
                            model.as_str(),
                            vs.len()
                        ),
                    );
                }
            }
            ProposalVariances::Diagonal(vs)
        }
        (None, None) => ProposalVariances::Scalar(0.01),
    };
    let tune = raw.bool_("proposal", "tune").map_or(false, |(_, v)| v);
    let (rounds_line, tune_rounds) = match raw.u64_("proposal", "tune_rounds") {
        Some((ln, v)) => (Some(ln), v as u32),
        None => (None, 8),
    };
    if tune && tune_rounds == 0 {
        raw.err(rounds_line, "tune_rounds must be at least 1 when tune = true");
    }
    ProposalSpec {
        variances,
        tune,
        tune_rounds,
    }
}

fn build_init(raw: &mut Raw, model: Option<ModelId>, prior: Option<&PriorSpec>) -> InitSpec {
    let Some(entry) = raw.entry("init", "theta").cloned() else {
        return InitSpec::PriorCenter;
    };
    if entry.value == "mle" {
        if let Some(model) = model {
            if model != ModelId::Ma1 {
                raw.err(
                    Some(entry.line),
                    format!(
                        "init theta = mle is only available for model `ma1`, not `{}`",
                        model.as_str()
                    ),
                );
            }
        }
        return InitSpec::Mle;
    }
    let Some((ln, theta)) = raw.list_f64("init", "theta") else {
        return InitSpec::PriorCenter;
    };
    if let Some(model) = model {
        if theta.len() != model.d_theta() {
            raw.err(
                Some(ln),
                format!(
                    "init theta needs {} values for model `{}`, got {}",
                    model.d_theta(),
                    model.as_str(),
                    theta.len()
                ),
            );
            return InitSpec::PriorCenter;
        }
    }
    if let Some(prior) = prior {
        if let Ok(p) = prior.build() {
            if p.dim() == theta.len() && !p.log_density(&theta).is_finite() {
                raw.err(
                    Some(ln),
                    format!("init theta {theta:?} lies outside the prior support"),
                );
            }
        }
    }
    InitSpec::Theta(theta)
}

fn build_grid(raw: &mut Raw, data: Option<&DataSource>, _method: RunMethod) -> Option<GridSpec> {
    if !raw.has_section("grid") {
        return None;
    }
    let section_line = raw.section_lines.get("grid").copied();
    let parameter = raw.string("grid", "parameter").map(|(ln, s)| (ln, s));
    let values = raw.list_f64("grid", "values");
    match (&parameter, &values) {
        (Some((ln, _)), None) => {
            if raw.entry("grid", "values").is_none() {
                raw.err(Some(*ln), "grid `parameter` needs a `values` list");
            }
        }
        (None, Some((ln, _))) => {
            raw.err(Some(*ln), "grid `values` given without a `parameter`");
        }
        _ => {}
    }
    let (rep_line, replicates) = match raw.usize_("grid", "replicates") {
        Some((ln, v)) => (Some(ln), v),
        None => (None, 1),
    };
    if replicates == 0 {
        raw.err(rep_line, "grid replicates must be at least 1");
    }
    let methods = match raw.string("grid", "methods") {
        Some((ln, s)) => {
            let mut out = Vec::new();
            for part in s.split(',') {
                let name = part.trim();
                match RunMethod::parse(name) {
                    Some(m) if out.contains(&m) => {
                        raw.err(Some(ln), format!("duplicate method `{name}` in grid list"));
                    }
                    Some(m) => out.push(m),
                    None => raw.err(
                        Some(ln),
                        format!(
                            "unknown method `{name}`; expected bsl, rbsl-mean, rbsl-var or bsl-is"
                        ),
                    ),
                }
            }
            if out.is_empty() {
                None
            } else {
                Some(out)
            }
        }
        None => None,
    };

    if let (Some((p_line, pname)), Some(data)) = (&parameter, data) {
        let allowed = data.grid_parameters();
        if !allowed.contains(&pname.as_str()) {
            let hint = if allowed.is_empty() {
                format!("data source `{}` has no sweepable parameters", data.source_str())
            } else {
                format!(
                    "data source `{}` allows: {}",
                    data.source_str(),
                    allowed.join(", ")
                )
            };
            raw.err(Some(*p_line), format!("cannot sweep `{pname}`; {hint}"));
        } else if let Some((v_line, vals)) = &values {
            for v in vals {
                if let Err(msg) = data.with_parameter(pname, *v) {
                    raw.err(Some(*v_line), format!("grid value {v}: {msg}"));
                }
            }
        }
    }

    if parameter.is_none() && values.is_none() && replicates == 1 && methods.is_none() {
        raw.err(
            section_line,
            "[grid] is empty; give a parameter sweep, replicates > 1, or a methods list",
        );
    }

    Some(GridSpec {
        parameter: parameter.map(|(_, s)| s),
        values: values.map(|(_, v)| v).unwrap_or_default(),
        replicates,
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[experiment]
model = normal

[data]
source = contaminated-normal

[prior]
kind = normal
means = 0
variances = 10
";

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = parse_config(MINIMAL).expect("minimal config should parse");
        assert_eq!(cfg.model, ModelId::Normal);
        assert_eq!(cfg.method, RunMethod::Chain(MethodKind::Bsl));
        assert_eq!(cfg.m, 50);
        assert_eq!(cfg.iterations, 10_000);
        assert_eq!(cfg.burn_in, 2_000);
        assert_eq!(cfg.thin, 1);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.data_seed, 1);
        assert_eq!(cfg.output, PathBuf::from("out"));
        assert_eq!(
            cfg.data,
            DataSource::ContaminatedNormal {
                theta_true: 1.0,
                n: 100,
                omega: 0.8,
                sigma: 1.0
            }
        );
        assert_eq!(cfg.init, InitSpec::PriorCenter);
        assert_eq!(cfg.proposal, ProposalSpec::default());
        assert_eq!(cfg.gamma, GammaSpec::default());
        assert!(cfg.grid.is_none());
        assert_eq!(cfg.is_draws, 10_000);
        assert_eq!(cfg.methods(), vec![RunMethod::Chain(MethodKind::Bsl)]);
        assert_eq!(cfg.grid_values(), vec![None]);
    }

    #[test]
    fn canonical_rendering_round_trips() {
        let text = "\
[experiment]
model = ma1
method = rbsl-var
m = 60
iterations = 400
burn_in = 100
seed = 11

[data]
source = sv
n = 150

[prior]
kind = uniform
lower = -1
upper = 1

[gamma]
mean = 0.4

[init]
theta = mle

[grid]
replicates = 3
methods = rbsl-var, bsl-is

[is]
draws = 500
";
        let cfg = parse_config(text).expect("should parse");
        let echoed = parse_config(&cfg.canonical_ini()).expect("echo should re-parse");
        assert_eq!(cfg, echoed);
    }

    #[test]
    fn mismatched_gamma_kind_names_both_keys() {
        let text = format!(
            "{MINIMAL}
[gamma]
kind = laplace
"
        )
        .replace("model = normal", "model = normal\nmethod = rbsl-var");
        let errs = parse_config(&text).unwrap_err();
        let msg = format_errors(&errs);
        assert!(msg.contains("kind = laplace"), "{msg}");
        assert!(msg.contains("method = rbsl-var"), "{msg}");
        assert!(msg.contains("exponential"), "{msg}");
    }

    #[test]
    fn burn_in_beyond_iterations_is_rejected() {
        let text = MINIMAL.replace(
            "model = normal",
            "model = normal\niterations = 100\nburn_in = 101",
        );
        let errs = parse_config(&text).unwrap_err();
        assert!(format_errors(&errs).contains("burn_in (101) exceeds iterations (100)"));
        // The error points at the burn_in line.
        assert!(errs.iter().any(|e| e.line == Some(4)));
    }

    #[test]
    fn all_errors_are_collected_not_just_the_first() {
        let text = "\
[experiment]
model = martian
m = 1
thin = 0

[data]
source = contaminated-normal
omega = 1.5

[prior]
kind = normal
means = 0, 0
variances = 10
";
        let errs = parse_config(text).unwrap_err();
        let msg = format_errors(&errs);
        for needle in [
            "unknown model `martian`",
            "m must be at least 2",
            "thin must be at least 1",
            "omega must lie in (0,1)",
            "differ in length",
        ] {
            assert!(msg.contains(needle), "missing {needle:?} in:\n{msg}");
        }
        assert!(errs.len() >= 5);
    }

    #[test]
    fn line_numbers_point_at_the_offending_assignment() {
        let text = "\
# leading comment
[experiment]
model = normal
m = one

[data]
source = contaminated-normal

[prior]
kind = normal
means = 0
variances = 10
";
        let errs = parse_config(text).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].line, Some(4));
        assert!(errs[0].message.contains("expected a nonnegative integer"));
    }

    #[test]
    fn unknown_sections_keys_and_duplicates_are_flagged() {
        let text = "\
[experiment]
model = normal
model = ma1
banana = 3

[plots]
dpi = 300

[data]
source = contaminated-normal
rho = 0.5

[prior]
kind = normal
means = 0
variances = 10
stray
";
        let errs = parse_config(text).unwrap_err();
        let msg = format_errors(&errs);
        for needle in [
            "duplicate key `model`",
            "unknown key `banana`",
            "unknown section [plots]",
            "not used by source `contaminated-normal`",
            "expected `key = value`",
        ] {
            assert!(msg.contains(needle), "missing {needle:?} in:\n{msg}");
        }
        // Keys under an unknown section produce no extra noise.
        assert!(!msg.contains("dpi"));
    }

    #[test]
    fn file_and_source_are_mutually_exclusive() {
        let text = MINIMAL.replace(
            "source = contaminated-normal",
            "source = contaminated-normal\nfile = obs.txt",
        );
        let errs = parse_config(&text).unwrap_err();
        assert!(format_errors(&errs).contains("mutually exclusive"));
    }

    #[test]
    fn model_and_source_must_match() {
        let text = MINIMAL.replace("source = contaminated-normal", "source = sv");
        let errs = parse_config(&text).unwrap_err();
        assert!(format_errors(&errs)
            .contains("data source `sv` does not produce data for model `normal`"));
    }

    #[test]
    fn covariance_rank_guard_scales_with_the_summary_dimension() {
        let text = "\
[experiment]
model = toad
m = 48

[data]
source = toad

[prior]
kind = uniform
lower = 1, 0, 0
upper = 2, 100, 0.9
";
        let errs = parse_config(text).unwrap_err();
        assert!(format_errors(&errs).contains("need m >= 49"));
        let ok = text.replace("m = 48", "m = 49");
        parse_config(&ok).expect("m = 49 suffices");
    }

    #[test]
    fn grid_values_outside_the_generator_domain_are_reported() {
        let text = format!(
            "{MINIMAL}
[grid]
parameter = sigma
values = 1.0, 0.5
"
        );
        let errs = parse_config(&text).unwrap_err();
        // sd 0.5 is unreachable: the clean mixture component alone has sd 1.
        assert!(format_errors(&errs).contains("grid value 0.5"));
    }

    #[test]
    fn grid_parameter_must_belong_to_the_source() {
        let text = format!(
            "{MINIMAL}
[grid]
parameter = rho
values = 0.5
"
        );
        let errs = parse_config(&text).unwrap_err();
        let msg = format_errors(&errs);
        assert!(msg.contains("cannot sweep `rho`"), "{msg}");
        assert!(msg.contains("sigma, omega, theta_true"), "{msg}");
    }

    #[test]
    fn init_outside_the_prior_support_is_rejected() {
        let text = "\
[experiment]
model = ma1

[data]
source = ma1

[prior]
kind = uniform
lower = -1
upper = 1

[init]
theta = 1.5
";
        let errs = parse_config(text).unwrap_err();
        assert!(format_errors(&errs).contains("outside the prior support"));
    }

    #[test]
    fn mle_start_is_ma1_only() {
        let text = MINIMAL.to_string()
            + "
[init]
theta = mle
";
        let errs = parse_config(&text).unwrap_err();
        assert!(format_errors(&errs).contains("only available for model `ma1`"));
    }

    #[test]
    fn gamma_section_without_a_robust_method_is_an_error() {
        let text = format!(
            "{MINIMAL}
[gamma]
scale = 0.5
"
        );
        let errs = parse_config(&text).unwrap_err();
        assert!(format_errors(&errs)
            .contains("no selected method uses an adjustment"));
    }

    #[test]
    fn inline_comments_and_whitespace_are_tolerated() {
        let text = "\
[experiment]   # which experiment
model = normal # the simple one
  m   =   12

[data]
source = contaminated-normal
sigma = 1.5    # misspecified target

[prior]
kind = normal
means = 0
variances = 10
";
        let cfg = parse_config(text).expect("should parse");
        assert_eq!(cfg.m, 12);
        assert_eq!(
            cfg.data,
            DataSource::ContaminatedNormal {
                theta_true: 1.0,
                n: 100,
                omega: 0.8,
                sigma: 1.5
            }
        );
    }

    #[test]
    fn grid_methods_list_drives_methods_and_echo() {
        let text = format!(
            "{MINIMAL}
[grid]
parameter = sigma
values = 1.0, 1.5, 2.0
replicates = 2
methods = bsl, rbsl-mean, rbsl-var
"
        );
        let cfg = parse_config(&text).expect("should parse");
        assert_eq!(
            cfg.methods(),
            vec![
                RunMethod::Chain(MethodKind::Bsl),
                RunMethod::Chain(MethodKind::RbslMean),
                RunMethod::Chain(MethodKind::RbslVariance),
            ]
        );
        assert_eq!(cfg.grid_values(), vec![Some(1.0), Some(1.5), Some(2.0)]);
        assert_eq!(cfg.replicates(), 2);
        let echoed = parse_config(&cfg.canonical_ini()).expect("echo should re-parse");
        assert_eq!(cfg, echoed);
    }
}
