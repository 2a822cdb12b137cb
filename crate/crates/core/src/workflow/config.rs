use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::benchmarks;
use crate::design::SequentialDesign;
use crate::domain::{Dimension, InputSpace};
use crate::kernels::KernelFamily;
use crate::stopping::IndexFamily;
use crate::surrogate::{FitMode, ThetaSharing};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SimulatorSpec {
    Builtin(String),
    /// Shell command speaking the line protocol of
    /// [`ExternalSimulator`](super::ExternalSimulator).
    External { command: String, timeout_secs: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    Mean,
    Max,
    /// `max_i Var_i` without the division by `d`.
    MaxUndivided,
    /// Cross-validated RRSE of the surrogate.
    Rrse,
    /// Cross-validated BEEQ of the surrogate.
    Beeq,
}

impl CriterionKind {
    pub fn key(&self) -> &'static str {
        match self {
            CriterionKind::Mean => "mean",
            CriterionKind::Max => "max",
            CriterionKind::MaxUndivided => "max_undivided",
            CriterionKind::Rrse => "rrse",
            CriterionKind::Beeq => "beeq",
        }
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(CriterionKind::Mean),
            "max" => Ok(CriterionKind::Max),
            "max_undivided" | "max-undivided" => Ok(CriterionKind::MaxUndivided),
            "rrse" => Ok(CriterionKind::Rrse),
            "beeq" => Ok(CriterionKind::Beeq),
            other => Err(Error::Config(format!("unknown criterion {:?}", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingConfig {
    pub criterion: CriterionKind,
    pub family: IndexFamily,
    pub threshold: f64,
    pub folds: usize,
    /// Iterations in a row that must be below the threshold.
    pub consecutive: usize,
}

/// How the cross-validation surrogates get their hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldStrategy {
    /// Reuse the full-data hyperparameters; only the weights are refit.
    Shared,
    /// Run the full hyperparameter search on every fold.
    Refit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub space: InputSpace,
    pub simulator: SimulatorSpec,
    pub kernel: KernelFamily,
    pub mode: FitMode,
    pub sharing: ThetaSharing,
    pub initial_size: usize,
    pub batch: usize,
    pub budget: usize,
    pub design: SequentialDesign,
    pub stopping: StoppingConfig,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub quad_order: usize,
    pub fold_strategy: FoldStrategy,
    /// Local searches for the hyperparameters on the first iteration.
    pub restarts: usize,
    /// Random local searches added to the warm start on later iterations.
    pub warm_restarts: usize,
    pub max_evals: usize,
    /// Interaction subsets (zero-based) to report.
    pub interactions: Vec<Vec<usize>>,
    /// Reuse evaluations found in the output directory.
    pub resume: bool,
}

/// Default initial design size: `max(20, 2(d+1))`, enough for the local
/// linear fits of LOLA-Voronoi and for 10-fold cross-validation.
pub fn default_initial_size(d: usize) -> usize {
    20.max(2 * (d + 1))
}

impl RunConfig {
    /// Defaults for a built-in benchmark. The stopping threshold is
    /// mandatory and has no default.
    pub fn for_builtin(name: &str, threshold: f64) -> Result<Self> {
        let bench = benchmarks::builtin(name)?;
        let space = bench.space();
        let d = space.dim();
        let cfg = RunConfig {
            space,
            simulator: SimulatorSpec::Builtin(bench.name().to_string()),
            kernel: KernelFamily::Matern32,
            mode: FitMode::Interpolating,
            sharing: ThetaSharing::Auto,
            initial_size: default_initial_size(d),
            batch: 10,
            budget: 300,
            design: SequentialDesign::LolaVoronoi,
            stopping: StoppingConfig {
                criterion: CriterionKind::Mean,
                family: IndexFamily::SobolMain,
                threshold,
                folds: 10,
                consecutive: 2,
            },
            seed: 0,
            output_dir: None,
            quad_order: crate::analytic::DEFAULT_QUAD_ORDER,
            fold_strategy: FoldStrategy::Shared,
            restarts: 8,
            warm_restarts: 7,
            max_evals: 200,
            interactions: Vec::new(),
            resume: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.space.dim();
        let fail = |m: String| Err(Error::Config(m));
        if self.initial_size < d + 2 {
            return fail(format!("initial size {} must be at least d + 2 = {}", self.initial_size, d + 2));
        }
        if self.batch == 0 {
            return fail("batch size must be at least 1".into());
        }
        if self.budget < self.initial_size {
            return fail(format!("budget {} is below the initial size {}", self.budget, self.initial_size));
        }
        if !(self.stopping.threshold > 0.0) {
            return fail(format!("stopping threshold must be positive, got {}", self.stopping.threshold));
        }
        if self.stopping.folds < 2 {
            return fail("at least 2 folds are required".into());
        }
        if self.stopping.consecutive == 0 {
            return fail("consecutive must be at least 1".into());
        }
        if self.quad_order < crate::analytic::MIN_QUAD_ORDER {
            return fail(format!("quadrature order must be at least {}", crate::analytic::MIN_QUAD_ORDER));
        }
        if self.restarts == 0 || self.max_evals == 0 {
            return fail("restarts and max_evals must be positive".into());
        }
        for u in &self.interactions {
            if u.is_empty() || u.iter().any(|&l| l >= d) {
                return fail(format!("invalid interaction subset {:?}", u));
            }
        }
        if let SimulatorSpec::Builtin(name) = &self.simulator {
            let b = benchmarks::builtin(name)?;
            if b.space() != self.space {
                return fail(format!("builtin {} has a fixed input space", name));
            }
        }
        Ok(())
    }

    /// Reads a flat `key = value` file (TOML scalars), applies `overrides`
    /// on top, and builds the configuration.
    pub fn from_file_and_overrides(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            pairs = parse_flat(&text)?;
        }
        for (k, v) in overrides {
            pairs.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&pairs)
    }

    /// Builds a configuration from string key/value pairs. Recognized keys:
    ///
    /// `function`, `command`, `dims`, `timeout`, `kernel`, `mode`, `gamma`,
    /// `theta_sharing`, `initial`, `batch`, `budget`, `design`, `criterion`,
    /// `family`, `threshold`, `folds`, `consecutive`, `seed`, `output`,
    /// `quad_order`, `fold_hyperparameters`, `restarts`, `warm_restarts`,
    /// `max_evals`, `interactions`, `resume`.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        const KNOWN: &[&str] = &[
            "function", "command", "dims", "timeout", "kernel", "mode", "gamma", "theta_sharing", "initial",
            "batch", "budget", "design", "criterion", "family", "threshold", "folds", "consecutive", "seed",
            "output", "quad_order", "fold_hyperparameters", "restarts", "warm_restarts", "max_evals",
            "interactions", "resume",
        ];
        if let Some(k) = pairs.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown configuration key {:?}", k)));
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);
        fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("invalid value {:?} for {}", v, key)))
        }

        let threshold: f64 = match get("threshold") {
            Some(v) => parse("threshold", v)?,
            None => return Err(Error::Config("threshold is required".into())),
        };
        let mut cfg = match (get("function"), get("command")) {
            (Some(_), Some(_)) => return Err(Error::Config("give either function or command, not both".into())),
            (Some(name), None) => {
                if get("dims").is_some() {
                    return Err(Error::Config("dims cannot be set for a builtin function".into()));
                }
                Self::for_builtin(name, threshold)?
            }
            (None, Some(cmd)) => {
                let dims = get("dims").ok_or_else(|| Error::Config("dims is required with command".into()))?;
                let space = parse_dims(dims)?;
                let d = space.dim();
                let mut cfg = Self::for_builtin("ishigami", threshold)?;
                cfg.space = space;
                cfg.simulator = SimulatorSpec::External {
                    command: cmd.to_string(),
                    timeout_secs: match get("timeout") {
                        Some(v) => parse("timeout", v)?,
                        None => 3600,
                    },
                };
                cfg.initial_size = default_initial_size(d);
                cfg
            }
            (None, None) => return Err(Error::Config("either function or command is required".into())),
        };
        if let Some(v) = get("kernel") {
            cfg.kernel = v.parse()?;
        }
        if let Some(v) = get("mode") {
            cfg.mode = match v {
                "kriging" | "interpolating" => FitMode::Interpolating,
                "ls-svm" | "lssvm" | "regularized" => FitMode::Regularized {
                    gamma: get("gamma").map(|g| parse("gamma", g)).transpose()?,
                },
                other => return Err(Error::Config(format!("unknown mode {:?}", other))),
            };
        }
        if let Some(v) = get("theta_sharing") {
            cfg.sharing = match v {
                "auto" => ThetaSharing::Auto,
                "ard" | "per-dimension" => ThetaSharing::PerDimension,
                "shared" => ThetaSharing::Shared,
                other => return Err(Error::Config(format!("unknown theta_sharing {:?}", other))),
            };
        }
        if let Some(v) = get("initial") {
            cfg.initial_size = parse("initial", v)?;
        }
        if let Some(v) = get("batch") {
            cfg.batch = parse("batch", v)?;
        }
        if let Some(v) = get("budget") {
            cfg.budget = parse("budget", v)?;
        }
        if let Some(v) = get("design") {
            cfg.design = v.parse()?;
        }
        if let Some(v) = get("criterion") {
            cfg.stopping.criterion = v.parse()?;
        }
        if let Some(v) = get("family") {
            cfg.stopping.family = v.parse()?;
        }
        if let Some(v) = get("folds") {
            cfg.stopping.folds = parse("folds", v)?;
        }
        if let Some(v) = get("consecutive") {
            cfg.stopping.consecutive = parse("consecutive", v)?;
        }
        if let Some(v) = get("seed") {
            cfg.seed = parse("seed", v)?;
        }
        if let Some(v) = get("output") {
            cfg.output_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = get("quad_order") {
            cfg.quad_order = parse("quad_order", v)?;
        }
        if let Some(v) = get("fold_hyperparameters") {
            cfg.fold_strategy = match v {
                "shared" => FoldStrategy::Shared,
                "refit" => FoldStrategy::Refit,
                other => return Err(Error::Config(format!("unknown fold_hyperparameters {:?}", other))),
            };
        }
        if let Some(v) = get("restarts") {
            cfg.restarts = parse("restarts", v)?;
        }
        if let Some(v) = get("warm_restarts") {
            cfg.warm_restarts = parse("warm_restarts", v)?;
        }
        if let Some(v) = get("max_evals") {
            cfg.max_evals = parse("max_evals", v)?;
        }
        if let Some(v) = get("interactions") {
            cfg.interactions = parse_interactions(v)?;
        }
        if let Some(v) = get("resume") {
            cfg.resume = parse("resume", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `key = value` lines. Values are TOML scalars; `#` starts a
/// comment. Nested tables are rejected.
pub(crate) fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config file: {}", e)))?;
    table
        .into_iter()
        .map(|(k, v)| {
            let s = match v {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => return Err(Error::Config(format!("key {} must be a scalar, got {}", k, other.type_str()))),
            };
            Ok((k, s))
        })
        .collect()
}

/// `name:lower:upper` entries separated by commas.
pub(crate) fn parse_dims(s: &str) -> Result<InputSpace> {
    let dims = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let parts: Vec<&str> = p.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!("dimension {:?} must be name:lower:upper", p)));
            }
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid bound {:?} in {:?}", v, p)))
            };
            Ok(Dimension { name: parts[0].to_string(), lower: num(parts[1])?, upper: num(parts[2])? })
        })
        .collect::<Result<Vec<_>>>()?;
    InputSpace::new(dims)
}

/// `1-3;2-3` style (one-based) subset list.
pub(crate) fn parse_interactions(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split('-')
                .map(|v| match v.trim().parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(Error::Config(format!("invalid interaction subset {:?}", p))),
                })
                .collect()
        })
        .collect()
}
