use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use log::{info, warn};

use super::config::{FoldStrategy, RunConfig, SimulatorSpec};
use super::output::{read_design_csv, OutputFiles, ReportDocument};
use super::simulator::{BuiltinSimulator, ExternalSimulator, Simulator};
use crate::analytic;
use crate::design::{density_batch, initial_lhs, lola_voronoi_batch, SequentialDesign};
use crate::domain::{DesignData, IterationRecord, Provenance, SensitivityReport, StoppingTrace};
use crate::rng::derive_seed;
use crate::stopping::{cross_validate, FoldHyperparameters, IndexFamily};
use crate::surrogate::{fit, FitConfig, FitMode, FitResult, HyperSearch, MAX_RELATIVE_JITTER};
use crate::{Error, Result};

const TAG_LHS: u64 = 1;
const TAG_FIT: u64 = 2;
const TAG_FOLDS: u64 = 3;
const TAG_DESIGN: u64 = 4;

/// Table self-check discrepancy above which a warning is logged.
const SELF_CHECK_WARN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The criterion stayed below the threshold long enough.
    Converged,
    Budget,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::Budget => "budget",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: SensitivityReport,
    pub trace: StoppingTrace,
    pub data: DesignData,
    pub stop_reason: StopReason,
    /// Full-data fit of the last iteration.
    pub fit: FitResult,
}

/// Runs the loop with the simulator named in the configuration.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let mut sim: Box<dyn Simulator> = match &config.simulator {
        SimulatorSpec::Builtin(name) => Box::new(BuiltinSimulator::new(name)?),
        SimulatorSpec::External { command, timeout_secs } => {
            Box::new(ExternalSimulator::new(command.clone(), Duration::from_secs(*timeout_secs)))
        }
    };
    run_with(config, sim.as_mut())
}

/// Bit-exact lookup of responses already on disk.
struct EvaluationCache {
    known: HashMap<Vec<u64>, f64>,
}

impl EvaluationCache {
    fn key(p: &[f64]) -> Vec<u64> {
        p.iter().map(|v| v.to_bits()).collect()
    }

    fn load(config: &RunConfig, files: Option<&OutputFiles>) -> Result<Self> {
        let mut known = HashMap::new();
        if let (true, Some(files)) = (config.resume, files) {
            let path = files.design_path();
            if path.exists() {
                let data = read_design_csv(&path, &config.space)?;
                for (p, y) in data.points().iter().zip(data.responses()) {
                    known.insert(Self::key(p), *y);
                }
                info!("resuming with {} cached evaluations", known.len());
            }
        }
        Ok(EvaluationCache { known })
    }

    fn evaluate(&mut self, sim: &mut dyn Simulator, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let missing: Vec<usize> = (0..points.len())
            .filter(|&i| !self.known.contains_key(&Self::key(&points[i])))
            .collect();
        if !missing.is_empty() {
            let batch: Vec<Vec<f64>> = missing.iter().map(|&i| points[i].clone()).collect();
            let y = sim.evaluate(&batch)?;
            if y.len() != batch.len() {
                return Err(Error::evaluation(format!("expected {} responses, got {}", batch.len(), y.len())));
            }
            for (p, v) in batch.iter().zip(y) {
                self.known.insert(Self::key(p), v);
            }
        }
        Ok(points.iter().map(|p| self.known[&Self::key(p)]).collect())
    }
}

fn fit_config(config: &RunConfig, iteration: usize, warm: Option<&[f64]>) -> FitConfig {
    let starts = if warm.is_some() { config.warm_restarts + 1 } else { config.restarts };
    FitConfig {
        family: config.kernel,
        mode: config.mode,
        sharing: config.sharing,
        search: HyperSearch {
            starts,
            max_evals: config.max_evals,
            seed: derive_seed(config.seed, TAG_FIT, iteration as u64),
            warm_start: warm.map(<[f64]>::to_vec),
            ..HyperSearch::default()
        },
        jitter_floor: 1e-10,
    }
}

/// One retry with a nugget beyond the normal jitter ladder.
fn fit_with_retry(data: &DesignData, mut fc: FitConfig) -> Result<FitResult> {
    match fit(data, &fc) {
        Ok(r) => Ok(r),
        Err(e) => {
            warn!("surrogate fit failed ({}); retrying with escalated jitter", e);
            fc.jitter_floor = 100.0 * MAX_RELATIVE_JITTER;
            fit(data, &fc)
        }
    }
}

pub fn run_with(config: &RunConfig, sim: &mut dyn Simulator) -> Result<RunOutcome> {
    config.validate()?;
    let space = &config.space;
    let d = space.dim();
    let files = config.output_dir.as_ref().map(OutputFiles::create).transpose()?;
    let mut cache = EvaluationCache::load(config, files.as_ref())?;

    let unit = initial_lhs(d, config.initial_size, derive_seed(config.seed, TAG_LHS, 0));
    let points = unit.iter().map(|u| space.denormalize(u)).collect::<Result<Vec<_>>>()?;
    let y = cache.evaluate(sim, &points)?;
    let n0 = points.len();
    let mut data = DesignData::new(space.clone(), points, y, vec![Provenance::Initial; n0])?;

    let mut trace = StoppingTrace::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut below = 0;
    let mut iteration = 0;
    loop {
        iteration += 1;
        let n = data.len();
        let result = fit_with_retry(&data, fit_config(config, iteration, warm.as_deref()))?;
        let model = &result.model;
        let thetas = model.kernel().thetas(d);
        warm = Some(thetas.clone());

        let table = analytic::build_integral_table(model, config.quad_order, true)?;
        let check = analytic::self_check(model.kernel(), model.centers(), &table);
        if check > SELF_CHECK_WARN {
            warn!("integral table self-check discrepancy {:e} at N = {}", check, n);
        }
        let report = analytic::analyze(model, &table, &config.interactions)?.with_dgsm_scale(space.dgsm_scale());

        let mut criteria: BTreeMap<String, f64> =
            ["mean", "max", "max_undivided", "rrse", "beeq"].iter().map(|k| (k.to_string(), f64::NAN)).collect();
        let mut fold_indices = BTreeMap::new();
        if n >= 2 * config.stopping.folds {
            let hyper = match config.fold_strategy {
                FoldStrategy::Shared => FoldHyperparameters::Fixed {
                    kernel: model.kernel().clone(),
                    mode: match config.mode {
                        FitMode::Interpolating => FitMode::Interpolating,
                        FitMode::Regularized { .. } => FitMode::Regularized { gamma: result.gamma },
                    },
                    jitter_floor: 1e-10,
                },
                FoldStrategy::Refit => FoldHyperparameters::Refit(fit_config(config, iteration, Some(&thetas))),
            };
            let seed = derive_seed(config.seed, TAG_FOLDS, iteration as u64);
            match cross_validate(&data, &hyper, config.stopping.folds, seed, config.quad_order, Some(&table)) {
                Ok(cv) => {
                    let fc = cv.criteria(config.stopping.family)?;
                    criteria.insert("mean".into(), fc.mean);
                    criteria.insert("max".into(), fc.max);
                    criteria.insert("max_undivided".into(), fc.max_undivided);
                    criteria.insert("rrse".into(), cv.rrse);
                    criteria.insert("beeq".into(), cv.beeq.value);
                    if cv.beeq.dropped > 0 {
                        info!("BEEQ dropped {} terms with zero denominator", cv.beeq.dropped);
                    }
                    for family in IndexFamily::ALL {
                        fold_indices.insert(family, cv.fold_indices(family));
                    }
                }
                Err(Error::FoldFit { fold, source }) => {
                    warn!("failed fold {} at N = {}: {}", fold, n, source);
                }
                Err(e) => return Err(e),
            }
        }

        let value = criteria[config.stopping.criterion.key()];
        info!(
            "iteration {} N = {} {} = {:e} S = {:?} ST = {:?} nu = {:?}",
            iteration,
            n,
            config.stopping.criterion.key(),
            value,
            report.main,
            report.total,
            report.dgsm
        );
        trace.push(IterationRecord {
            iteration,
            sample_count: n,
            criteria: criteria.clone(),
            fold_indices,
            report: report.clone(),
            lengthscales: thetas.clone(),
        })?;
        if let Some(files) = &files {
            files.write_design(&data)?;
            files.write_trace(&trace, space)?;
        }

        below = if value < config.stopping.threshold { below + 1 } else { 0 };
        let stop = if below >= config.stopping.consecutive {
            Some(StopReason::Converged)
        } else if n >= config.budget {
            Some(StopReason::Budget)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            if let Some(files) = &files {
                files.write_report(&ReportDocument {
                    dimensions: space.names().map(String::from).collect(),
                    sample_count: n,
                    iterations: iteration,
                    stop_reason: stop_reason.to_string(),
                    lengthscales: &thetas,
                    criteria: &criteria,
                    report: &report,
                })?;
            }
            info!("stopped ({}) after {} iterations with N = {}", stop_reason, iteration, n);
            return Ok(RunOutcome { report, trace, data, stop_reason, fit: result });
        }

        let batch = config.batch.min(config.budget - n);
        let seed = derive_seed(config.seed, TAG_DESIGN, iteration as u64);
        let proposal = match config.design {
            SequentialDesign::LolaVoronoi if n >= 2 * (d + 1) => lola_voronoi_batch(&data, batch, seed)?,
            _ => density_batch(&data, batch, seed)?,
        };
        if proposal.points.len() < batch {
            warn!("design proposed {} of {} points", proposal.points.len(), batch);
        }
        if proposal.points.is_empty() {
            return Err(Error::Degenerate("sequential design found no admissible point".into()));
        }
        let points = proposal.points.iter().map(|u| space.denormalize(u)).collect::<Result<Vec<_>>>()?;
        let y = cache.evaluate(sim, &points)?;
        let m = points.len();
        data = data.extended(points, y, vec![Provenance::Sequential(iteration); m])?;
    }
}
