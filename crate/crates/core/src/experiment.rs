//! Baseline-versus-SCOPE trials and their statistical comparison.
//!
//! A trial evolves one policy layout with the steady-state GA on a single
//! persistent simulator. Fitness is the distance walked in one episode by
//! the candidate; the robot carries on from wherever the previous candidate
//! left it.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dct::{sparsify, BlockCompressor, TruncationSpec};
use crate::error::{Error, Result};
use crate::gait::{normalize_params, GaitConfig, GaitParams, JointLimits};
use crate::policy::{evaluate_baseline, evaluate_scope, Chromosome, Layout, OUTPUTS};
use crate::rng::trial_stream;
use crate::sim::{EpisodeResult, SimConfig, Simulator, StateHistory, HISTORY_LEN, LEGS, POSE_COLS};
use crate::ssga::{run_with_rng, GaConfig, GenerationRecord};
use crate::stats::{mann_whitney_u, summarize, Alternative, PValueMethod, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// GA settings; `ga.seed` is the master seed shared by all trials.
    pub ga: GaConfig,
    pub sim: SimConfig,
    pub gait: GaitConfig,
    pub limits: JointLimits,
    pub truncation: TruncationSpec,
    /// Fraction of retained coefficients zeroed by magnitude; 0 disables it.
    pub sparsify: f64,
    /// Start every evaluation on a freshly built robot instead of carrying
    /// the simulation over.
    pub fresh_state: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ga: GaConfig::default(),
            sim: SimConfig::default(),
            gait: GaitConfig::default(),
            limits: JointLimits::default(),
            truncation: TruncationSpec { k1: 6, k2: 9 },
            sparsify: 0.0,
            fresh_state: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        self.sim.validate()?;
        self.gait.validate()?;
        JointLimits::new(self.limits.coxa, self.limits.femur, self.limits.tibia)?;
        TruncationSpec::new(self.truncation.k1, self.truncation.k2)?;
        self.truncation.check_fits(LEGS, POSE_COLS * HISTORY_LEN)?;
        if self.truncation.len() != OUTPUTS {
            return Err(Error::Dimension(format!(
                "truncated block must hold {OUTPUTS} coefficients, {}x{} holds {}",
                self.truncation.k1,
                self.truncation.k2,
                self.truncation.len()
            )));
        }
        if !(0.0..1.0).contains(&self.sparsify) {
            return Err(Error::InvalidParameter(format!(
                "sparsify fraction must lie in [0, 1), got {}",
                self.sparsify
            )));
        }
        Ok(())
    }
}

/// Turns a state history into gait parameters with one fixed chromosome.
#[derive(Debug, Clone)]
pub struct PolicyController {
    chrom: Chromosome,
    compressor: Option<BlockCompressor>,
    sparsify: f64,
    limits: JointLimits,
}

impl PolicyController {
    pub fn new(chrom: Chromosome, cfg: &ExperimentConfig) -> Result<Self> {
        let compressor = match chrom.layout() {
            Layout::Scope => Some(BlockCompressor::new(
                LEGS,
                POSE_COLS * HISTORY_LEN,
                cfg.truncation,
            )?),
            Layout::Baseline => None,
        };
        Ok(Self {
            chrom,
            compressor,
            sparsify: cfg.sparsify,
            limits: cfg.limits,
        })
    }

    pub fn chromosome(&self) -> &Chromosome {
        &self.chrom
    }

    /// The matrix the policy actually reads: the retained coefficient block
    /// for SCOPE, the raw history for the baseline.
    pub fn policy_input(&self, history: &StateHistory) -> Result<crate::matrix::RealMatrix> {
        let raw = history.materialize();
        match &self.compressor {
            Some(c) => {
                let block = c.compress(&raw)?;
                if self.sparsify > 0.0 {
                    sparsify(&block, self.sparsify)
                } else {
                    Ok(block)
                }
            }
            None => Ok(raw),
        }
    }

    pub fn gait_params(&self, history: &StateHistory) -> Result<GaitParams> {
        let input = self.policy_input(history)?;
        let out = match self.chrom.layout() {
            Layout::Scope => evaluate_scope(&self.chrom, &input)?,
            Layout::Baseline => evaluate_baseline(&self.chrom, &input)?,
        };
        normalize_params(&out, &self.limits)
    }
}

pub fn new_simulator(cfg: &ExperimentConfig) -> Result<Simulator> {
    Simulator::new(cfg.sim, cfg.gait, cfg.limits)
}

/// Runs one fitness episode of `chrom` on `sim`.
pub fn evaluate_on(
    sim: &mut Simulator,
    chrom: Chromosome,
    cfg: &ExperimentConfig,
) -> Result<EpisodeResult> {
    let controller = PolicyController::new(chrom, cfg)?;
    sim.run_episode(|h| controller.gait_params(h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub mode: Layout,
    pub trial: u64,
    /// Master seed; the trial draws from stream `trial` of it.
    pub seed: u64,
    /// Best-so-far fitness after each generation.
    pub best_series: Vec<f64>,
    pub final_best: f64,
    pub best: Chromosome,
    pub history: Vec<GenerationRecord>,
    pub evaluations: u64,
    pub wall_time: Duration,
}

/// Evolves one policy of the given layout. Same (mode, trial, config) gives
/// the same record apart from wall time.
pub fn run_trial(mode: Layout, trial: u64, cfg: &ExperimentConfig) -> Result<TrialRecord> {
    cfg.validate()?;
    let started = Instant::now();
    let mut sim = new_simulator(cfg)?;
    let evaluator = |genes: &[f64]| -> Result<f64> {
        let chrom = Chromosome::new(mode, genes.to_vec())?;
        if cfg.fresh_state {
            sim = new_simulator(cfg)?;
        }
        Ok(evaluate_on(&mut sim, chrom, cfg)?.fitness)
    };
    let run = run_with_rng(
        &cfg.ga,
        mode.genes(),
        evaluator,
        trial_stream(cfg.ga.seed, trial),
    )?;
    let best_series = run.best_series();
    Ok(TrialRecord {
        mode,
        trial,
        seed: cfg.ga.seed,
        final_best: run.best.fitness,
        best: Chromosome::new(mode, run.best.genes)?,
        best_series,
        history: run.history,
        evaluations: run.evaluations,
        wall_time: started.elapsed(),
    })
}

/// Runs `trials` trials of every mode on a pool of `jobs` threads. Records
/// come back ordered by mode, then trial index, whatever the scheduling.
pub fn run_trials(
    modes: &[Layout],
    trials: u64,
    cfg: &ExperimentConfig,
    jobs: usize,
) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let work: Vec<(Layout, u64)> = modes
        .iter()
        .flat_map(|&m| (0..trials).map(move |t| (m, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        work.par_iter()
            .map(|&(mode, t)| run_trial(mode, t, cfg))
            .collect::<Result<Vec<_>>>()
    })
}

/// Minimal per-trial data needed for a comparison; what `trials.csv` stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub mode: Layout,
    pub trial: u64,
    pub seed: u64,
    pub final_best: f64,
    pub best_series: Vec<f64>,
}

impl From<&TrialRecord> for TrialSummary {
    fn from(r: &TrialRecord) -> Self {
        Self {
            mode: r.mode,
            trial: r.trial,
            seed: r.seed,
            final_best: r.final_best,
            best_series: r.best_series.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub generation: usize,
    pub mode: Layout,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCurveRow {
    pub generation: usize,
    pub scope: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scope: Summary,
    pub baseline: Summary,
    /// U of SCOPE final fitness against baseline final fitness.
    pub u_statistic: f64,
    /// One-sided p-value for "SCOPE is greater".
    pub p_value: f64,
    pub method: PValueMethod,
    pub alternative: Alternative,
    pub mean_curve: Vec<MeanCurveRow>,
}

fn by_mode(trials: &[TrialSummary], mode: Layout) -> Vec<&TrialSummary> {
    let mut v: Vec<&TrialSummary> = trials.iter().filter(|t| t.mode == mode).collect();
    v.sort_by(|a, b| {
        (a.trial, a.seed)
            .cmp(&(b.trial, b.seed))
            .then(a.final_best.total_cmp(&b.final_best))
    });
    v
}

fn series_len(trials: &[&TrialSummary]) -> Result<usize> {
    let g = trials[0].best_series.len();
    if trials.iter().any(|t| t.best_series.len() != g) {
        return Err(Error::InvalidInput(
            "trials have different generation counts".into(),
        ));
    }
    Ok(g)
}

/// Mean and standard deviation of best-so-far per generation and mode.
pub fn curves(trials: &[TrialSummary]) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for mode in [Layout::Scope, Layout::Baseline] {
        let group = by_mode(trials, mode);
        if group.is_empty() {
            continue;
        }
        let g = series_len(&group)?;
        for gen in 0..g {
            let values: Vec<f64> = group.iter().map(|t| t.best_series[gen]).collect();
            let s = summarize(&values)?;
            out.push(CurvePoint {
                generation: gen + 1,
                mode,
                mean: s.mean,
                std: s.std,
            });
        }
    }
    Ok(out)
}

/// Summary statistics per mode, one-sided U test of SCOPE over baseline on
/// final best fitness, and the mean best-so-far curve of each mode.
pub fn compare(trials: &[TrialSummary]) -> Result<ComparisonReport> {
    let scope = by_mode(trials, Layout::Scope);
    let baseline = by_mode(trials, Layout::Baseline);
    for (mode, group) in [(Layout::Scope, &scope), (Layout::Baseline, &baseline)] {
        if group.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "comparison needs at least 2 {mode} trials, found {}",
                group.len()
            )));
        }
    }
    let x: Vec<f64> = scope.iter().map(|t| t.final_best).collect();
    let y: Vec<f64> = baseline.iter().map(|t| t.final_best).collect();
    let test = mann_whitney_u(&x, &y, Alternative::Greater)?;

    let g = series_len(&scope)?;
    if series_len(&baseline)? != g {
        return Err(Error::InvalidInput(
            "modes have different generation counts".into(),
        ));
    }
    let mean_at = |group: &[&TrialSummary], gen: usize| {
        group.iter().map(|t| t.best_series[gen]).sum::<f64>() / group.len() as f64
    };
    let mean_curve = (0..g)
        .map(|gen| MeanCurveRow {
            generation: gen + 1,
            scope: mean_at(&scope, gen),
            baseline: mean_at(&baseline, gen),
        })
        .collect();

    Ok(ComparisonReport {
        scope: summarize(&x)?,
        baseline: summarize(&y)?,
        u_statistic: test.u,
        p_value: test.p_value,
        method: test.method,
        alternative: Alternative::Greater,
        mean_curve,
    })
}
