//! Command-line front end.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use senseq::analytic;
use senseq::benchmarks;
use senseq::design::initial_lhs;
use senseq::domain::{InputSpace, SensitivityReport};
use senseq::kernels::KernelFamily;
use senseq::mc_oracle::saltelli_estimate;
use senseq::surrogate::{fit, FitConfig};
use senseq::workflow::{read_design_csv, run, RunConfig};

#[derive(Parser)]
#[command(name = "senseq", version, about = "Sequential surrogate-based global sensitivity analysis")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full sequential loop.
    Run(RunArgs),
    /// Indices of a surrogate fit to an existing design file.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo Sobol estimates of a builtin benchmark.
    Oracle(OracleArgs),
    /// Writes an initial maximin LHS in original coordinates.
    Design(DesignArgs),
}

/// Every flag mirrors the config key of the same name (dashes become
/// underscores). Flags win over the file.
#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    command: Option<String>,
    /// `name:lower:upper,...`
    #[arg(long)]
    dims: Option<String>,
    /// Seconds per simulator batch.
    #[arg(long)]
    timeout: Option<u64>,
    #[arg(long)]
    kernel: Option<String>,
    /// `kriging` or `ls-svm`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    /// `auto`, `ard` or `shared`.
    #[arg(long)]
    theta_sharing: Option<String>,
    #[arg(long)]
    initial: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    /// `lola-voronoi` or `density`.
    #[arg(long)]
    design: Option<String>,
    /// `mean`, `max`, `max_undivided`, `rrse` or `beeq`.
    #[arg(long)]
    criterion: Option<String>,
    /// `sobol-main`, `sobol-total`, `dgsm` or `dgsm-normalized`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    consecutive: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    quad_order: Option<usize>,
    /// `shared` or `refit`.
    #[arg(long)]
    fold_hyperparameters: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    warm_restarts: Option<usize>,
    #[arg(long)]
    max_evals: Option<usize>,
    /// One-based subsets such as `1-3;2-3`.
    #[arg(long)]
    interactions: Option<String>,
    /// Reuse evaluations from the output directory's design file.
    #[arg(long)]
    resume: bool,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("function", self.function.clone());
        put("command", self.command.clone());
        put("dims", self.dims.clone());
        put("timeout", self.timeout.map(|v| v.to_string()));
        put("kernel", self.kernel.clone());
        put("mode", self.mode.clone());
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("theta_sharing", self.theta_sharing.clone());
        put("initial", self.initial.map(|v| v.to_string()));
        put("batch", self.batch.map(|v| v.to_string()));
        put("budget", self.budget.map(|v| v.to_string()));
        put("design", self.design.clone());
        put("criterion", self.criterion.clone());
        put("family", self.family.clone());
        put("threshold", self.threshold.map(|v| v.to_string()));
        put("folds", self.folds.map(|v| v.to_string()));
        put("consecutive", self.consecutive.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("output", self.output.as_ref().map(|p| p.display().to_string()));
        put("quad_order", self.quad_order.map(|v| v.to_string()));
        put("fold_hyperparameters", self.fold_hyperparameters.clone());
        put("restarts", self.restarts.map(|v| v.to_string()));
        put("warm_restarts", self.warm_restarts.map(|v| v.to_string()));
        put("max_evals", self.max_evals.map(|v| v.to_string()));
        put("interactions", self.interactions.clone());
        if self.resume {
            put("resume", Some("true".into()));
        }
        m
    }
}

#[derive(Args)]
struct SpaceArgs {
    /// Builtin benchmark whose input box to use.
    #[arg(long, conflicts_with = "dims")]
    function: Option<String>,
    /// `name:lower:upper,...`
    #[arg(long)]
    dims: Option<String>,
}

impl SpaceArgs {
    fn space(&self) -> Result<InputSpace> {
        match (&self.function, &self.dims) {
            (Some(f), _) => Ok(benchmarks::builtin(f)?.space()),
            (None, Some(d)) => {
                let mut pairs = BTreeMap::new();
                pairs.insert("command".to_string(), "true".to_string());
                pairs.insert("dims".to_string(), d.clone());
                pairs.insert("threshold".to_string(), "1".to_string());
                Ok(RunConfig::from_pairs(&pairs)?.space)
            }
            (None, None) => bail!("give --function or --dims"),
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Design table: dimension columns then `y`, optional leading `provenance`.
    design: PathBuf,
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, default_value = "matern32")]
    kernel: KernelFamily,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report as JSON here instead of printing a table.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// `ishigami`, `gfunction` or `moon`.
    function: String,
    /// Base sample size (power of two).
    #[arg(long, default_value_t = 1 << 16)]
    base: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn print_report(names: &[String], r: &SensitivityReport) {
    println!("variance {:.6e}", r.variance);
    println!("{:<12} {:>10} {:>10} {:>12} {:>10}", "input", "S", "ST", "nu", "bound");
    for (i, name) in names.iter().enumerate() {
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>12.4} {:>10.4}",
            name, r.main[i], r.total[i], r.dgsm[i], r.dgsm_bound[i]
        );
    }
    for s in &r.interactions {
        let label: Vec<String> = s.subset.iter().map(|&l| names[l].clone()).collect();
        println!("{:<12} {:>10.4}", label.join("-"), s.index);
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = RunConfig::from_file_and_overrides(args.config.as_deref(), &args.overrides())?;
    let out = run(&config)?;
    let names: Vec<String> = config.space.names().map(String::from).collect();
    println!("stopped: {} after {} iterations, N = {}", out.stop_reason, out.trace.len(), out.data.len());
    print_report(&names, &out.report);
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let space = args.space.space()?;
    let data = read_design_csv(&args.design, &space)?;
    let mut fc = FitConfig::kriging(args.kernel);
    fc.search.seed = args.seed;
    let result = fit(&data, &fc)?;
    let table = analytic::build_integral_table(&result.model, analytic::DEFAULT_QUAD_ORDER, true)?;
    let report = analytic::analyze(&result.model, &table, &[])?.with_dgsm_scale(space.dgsm_scale());
    match &args.json {
        Some(path) => write_json(path, &report)?,
        None => print_report(&space.names().map(String::from).collect::<Vec<_>>(), &report),
    }
    Ok(())
}

fn write_json(path: &Path, report: &SensitivityReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let bench = benchmarks::builtin(&args.function)?;
    let f = benchmarks::on_unit(bench.as_ref());
    let est = saltelli_estimate(&f, bench.dim(), args.base, args.seed)?;
    println!("variance {:.6e} (se {:.2e})", est.variance, est.variance_se);
    let Some(ix) = est.indices else {
        bail!("variance is zero; indices undefined");
    };
    println!("{:<12} {:>10} {:>10} {:>10} {:>10}", "input", "S", "se", "ST", "se");
    for (i, name) in bench.space().names().enumerate() {
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            name, ix.main[i], ix.main_se[i], ix.total[i], ix.total_se[i]
        );
    }
    Ok(())
}

fn cmd_design(args: &DesignArgs) -> Result<()> {
    let space = args.space.space()?;
    let unit = initial_lhs(space.dim(), args.n, args.seed);
    let mut text = space.names().collect::<Vec<_>>().join(",");
    text.push('\n');
    for u in &unit {
        let x = space.denormalize(u)?;
        let row: Vec<String> = x.iter().map(|v| format!("{:?}", v)).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match &args.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Design(a) => cmd_design(a),
    }
}
