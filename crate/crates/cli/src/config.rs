//! Effective run configuration: defaults, then a key-value config file,
//! then command-line flags.

use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use scope_core::dct::TruncationSpec;
use scope_core::experiment::ExperimentConfig;
use scope_core::gait::{GaitConfig, JointLimits, Range};
use scope_core::policy::Layout;
use scope_core::sim::SimConfig;
use scope_core::ssga::GaConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Scope,
    Baseline,
    Both,
}

impl ModeSelection {
    pub fn layouts(self) -> Vec<Layout> {
        match self {
            ModeSelection::Scope => vec![Layout::Scope],
            ModeSelection::Baseline => vec![Layout::Baseline],
            ModeSelection::Both => vec![Layout::Scope, Layout::Baseline],
        }
    }
}

/// Every tunable of a run, as written to `config.toml` in the output
/// directory. Joint limits are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: ModeSelection,
    pub trials: u64,
    pub generations: usize,
    pub population: usize,
    pub tournament: usize,
    pub mutation_rate: f64,
    pub mutation_scale: f64,
    pub k1: usize,
    pub k2: usize,
    pub sparsify: f64,
    pub gain: f64,
    pub stance_fraction: f64,
    pub frames_per_subepisode: usize,
    pub subepisodes_per_episode: usize,
    pub frame_dt: f64,
    pub dtheta_max: f64,
    pub slices: usize,
    pub coxa_limits: [f64; 2],
    pub femur_limits: [f64; 2],
    pub tibia_limits: [f64; 2],
    pub fresh_state: bool,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ga = GaConfig::default();
        let sim = SimConfig::default();
        let gait = GaitConfig::default();
        Self {
            mode: ModeSelection::Both,
            trials: 20,
            generations: 500,
            population: ga.population,
            tournament: ga.tournament,
            mutation_rate: ga.mutation_rate,
            mutation_scale: ga.mutation_scale,
            k1: 6,
            k2: 9,
            sparsify: 0.0,
            gain: sim.gain,
            stance_fraction: sim.stance_fraction,
            frames_per_subepisode: sim.frames_per_subepisode,
            subepisodes_per_episode: sim.subepisodes_per_episode,
            frame_dt: sim.frame_dt,
            dtheta_max: gait.dtheta_max,
            slices: gait.slices,
            coxa_limits: [-15.0, 15.0],
            femur_limits: [40.0, 80.0],
            tibia_limits: [-150.0, -105.0],
            fresh_state: false,
            seed: 0,
            jobs: 1,
        }
    }
}

/// A config file: any subset of [`RunConfig`] keys. Unknown keys are errors.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<ModeSelection>,
    pub trials: Option<u64>,
    pub generations: Option<usize>,
    pub population: Option<usize>,
    pub tournament: Option<usize>,
    pub mutation_rate: Option<f64>,
    pub mutation_scale: Option<f64>,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub sparsify: Option<f64>,
    pub gain: Option<f64>,
    pub stance_fraction: Option<f64>,
    pub frames_per_subepisode: Option<usize>,
    pub subepisodes_per_episode: Option<usize>,
    pub frame_dt: Option<f64>,
    pub dtheta_max: Option<f64>,
    pub slices: Option<usize>,
    pub coxa_limits: Option<[f64; 2]>,
    pub femur_limits: Option<[f64; 2]>,
    pub tibia_limits: Option<[f64; 2]>,
    pub fresh_state: Option<bool>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow::anyhow!("bad config {}: {e}", path.display()))
    }
}

/// Simulator and policy flags shared by `run` and `inspect`.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    /// Retained DCT rows.
    #[arg(long)]
    pub k1: Option<usize>,
    /// Retained DCT columns.
    #[arg(long)]
    pub k2: Option<usize>,
    /// Fraction of retained coefficients zeroed by magnitude (0 = off).
    #[arg(long)]
    pub sparsify: Option<f64>,
    /// Metres of travel per radian of stance coxa sweep.
    #[arg(long)]
    pub gain: Option<f64>,
    /// Lower fraction of the femur range counted as stance.
    #[arg(long)]
    pub stance_fraction: Option<f64>,
    #[arg(long)]
    pub frames_per_subepisode: Option<usize>,
    #[arg(long = "subepisodes")]
    pub subepisodes_per_episode: Option<usize>,
    /// Seconds per simulation frame.
    #[arg(long)]
    pub frame_dt: Option<f64>,
    /// Largest joint change per frame, radians.
    #[arg(long)]
    pub dtheta_max: Option<f64>,
    /// Sub-steps per frame.
    #[arg(long)]
    pub slices: Option<usize>,
}

/// GA and harness flags for `run`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    #[arg(long, value_enum)]
    pub mode: Option<ModeSelection>,
    /// Trials per mode.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub tournament: Option<usize>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub mutation_scale: Option<f64>,
    /// Build a fresh robot for every evaluation.
    #[arg(long)]
    pub fresh_state: bool,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for independent trials.
    #[arg(long)]
    pub jobs: Option<usize>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),+ $(,)?) => {
        $( if let Some(v) = $src.$field { $dst.$field = v; } )+
    };
}

impl RunConfig {
    pub fn apply_file(&mut self, f: &FileConfig) {
        overlay!(
            self,
            f.clone(),
            mode,
            trials,
            generations,
            population,
            tournament,
            mutation_rate,
            mutation_scale,
            k1,
            k2,
            sparsify,
            gain,
            stance_fraction,
            frames_per_subepisode,
            subepisodes_per_episode,
            frame_dt,
            dtheta_max,
            slices,
            coxa_limits,
            femur_limits,
            tibia_limits,
            fresh_state,
            seed,
            jobs,
        );
    }

    pub fn apply_model_flags(&mut self, f: &ModelFlags) {
        overlay!(
            self,
            f.clone(),
            k1,
            k2,
            sparsify,
            gain,
            stance_fraction,
            frames_per_subepisode,
            subepisodes_per_episode,
            frame_dt,
            dtheta_max,
            slices,
        );
    }

    pub fn apply_run_flags(&mut self, f: &RunFlags) {
        overlay!(
            self,
            f.clone(),
            mode,
            trials,
            generations,
            population,
            tournament,
            mutation_rate,
            mutation_scale,
            seed,
            jobs,
        );
        if f.fresh_state {
            self.fresh_state = true;
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let [c0, c1] = self.coxa_limits;
        let [f0, f1] = self.femur_limits;
        let [t0, t1] = self.tibia_limits;
        ExperimentConfig {
            ga: GaConfig {
                population: self.population,
                tournament: self.tournament,
                mutation_rate: self.mutation_rate,
                mutation_scale: self.mutation_scale,
                generations: self.generations,
                seed: self.seed,
            },
            sim: SimConfig {
                gain: self.gain,
                stance_fraction: self.stance_fraction,
                frames_per_subepisode: self.frames_per_subepisode,
                subepisodes_per_episode: self.subepisodes_per_episode,
                frame_dt: self.frame_dt,
            },
            gait: GaitConfig {
                dtheta_max: self.dtheta_max,
                slices: self.slices,
            },
            limits: JointLimits {
                coxa: Range::from_degrees(c0, c1),
                femur: Range::from_degrees(f0, f1),
                tibia: Range::from_degrees(t0, t1),
            },
            truncation: TruncationSpec {
                k1: self.k1,
                k2: self.k2,
            },
            sparsify: self.sparsify,
            fresh_state: self.fresh_state,
        }
    }

    /// Checks every value against the preconditions of the modules it feeds.
    pub fn validate(&self) -> anyhow::Result<ExperimentConfig> {
        if self.jobs == 0 {
            anyhow::bail!("jobs must be at least 1");
        }
        let exp = self.experiment();
        exp.validate()?;
        Ok(exp)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }
}
