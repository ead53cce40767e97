//! `scope`: evolve hexapod gait policies, compare modes, inspect checkpoints.

mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::{FileConfig, ModelFlags, RunConfig, RunFlags};
use scope_core::dct::{dct2, truncate};
use scope_core::experiment::{self, ComparisonReport, TrialSummary};
use scope_core::output;

#[derive(Debug, Parser)]
#[command(
    name = "scope",
    version,
    about = "Evolve compressed-state gait controllers for a hexapod"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve policies for one or both modes and write per-trial results.
    Run {
        /// Key-value config file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        model: ModelFlags,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize trials.csv files and test SCOPE against the baseline.
    Compare {
        #[arg(required = true)]
        trials: Vec<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a checkpoint for one episode and dump its state matrices.
    Inspect {
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Bad input or configuration (exit 2) versus failure while running (exit 1).
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            run,
            model,
            out,
        } => cmd_run(config.as_deref(), &run, &model, &out),
        Command::Compare { trials, out } => cmd_compare(&trials, out.as_deref()),
        Command::Inspect {
            checkpoint,
            config,
            model,
            out,
        } => cmd_inspect(&checkpoint, config.as_deref(), &model, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn base_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        cfg.apply_file(&FileConfig::load(p).usage()?);
    }
    Ok(cfg)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cmd_run(
    config: Option<&Path>,
    run: &RunFlags,
    model: &ModelFlags,
    out: &Path,
) -> Result<(), Failure> {
    let mut cfg = base_config(config)?;
    cfg.apply_model_flags(model);
    cfg.apply_run_flags(run);
    let exp = cfg.validate().usage()?;

    fs::create_dir_all(out.join("checkpoints"))
        .with_context(|| format!("cannot create {}", out.display()))
        .runtime()?;
    fs::write(out.join("config.toml"), cfg.to_toml().runtime()?).runtime()?;

    let modes = cfg.mode.layouts();
    eprintln!(
        "running {} trial(s) x {} mode(s), {} generations, {} job(s)",
        cfg.trials,
        modes.len(),
        cfg.generations,
        cfg.jobs
    );
    let records = experiment::run_trials(&modes, cfg.trials, &exp, cfg.jobs).runtime()?;
    let summaries: Vec<TrialSummary> = records.iter().map(TrialSummary::from).collect();

    output::write_trials_csv(create(&out.join("trials.csv")).runtime()?, &summaries).runtime()?;
    output::write_curves_csv(
        create(&out.join("curves.csv")).runtime()?,
        &experiment::curves(&summaries).runtime()?,
    )
    .runtime()?;
    output::write_history_csv(create(&out.join("history.csv")).runtime()?, &records).runtime()?;
    output::write_timing_csv(create(&out.join("timing.csv")).runtime()?, &records).runtime()?;
    for r in &records {
        let path = out
            .join("checkpoints")
            .join(format!("{}_trial{}.json", r.mode, r.trial));
        output::write_checkpoint(&path, &r.best).runtime()?;
    }
    for r in &records {
        println!("{} trial {}: best {:.6}", r.mode, r.trial, r.final_best);
    }
    if cfg.trials >= 2 && modes.len() == 2 {
        let report = experiment::compare(&summaries).runtime()?;
        write_report(&out.join("report.json"), &report)?;
        print_report(&report);
    }
    Ok(())
}

fn write_report(path: &Path, report: &ComparisonReport) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).runtime()?;
    fs::write(path, json + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
        .runtime()
}

fn print_report(r: &ComparisonReport) {
    println!(
        "scope mean {:.6} (n={}), baseline mean {:.6} (n={}), U={} p={:.4e}",
        r.scope.mean, r.scope.count, r.baseline.mean, r.baseline.count, r.u_statistic, r.p_value
    );
}

fn cmd_compare(files: &[PathBuf], out: Option<&Path>) -> Result<(), Failure> {
    let mut trials = Vec::new();
    for f in files {
        let file = File::open(f)
            .with_context(|| format!("cannot open {}", f.display()))
            .usage()?;
        let rows = output::read_trials_csv(file)
            .with_context(|| format!("in {}", f.display()))
            .usage()?;
        trials.extend(rows);
    }
    let report = experiment::compare(&trials).usage()?;
    if let Some(path) = out {
        write_report(path, &report)?;
    }
    print_report(&report);
    Ok(())
}

fn cmd_inspect(
    checkpoint: &Path,
    config: Option<&Path>,
    model: &ModelFlags,
    out: &Path,
) -> Result<(), Failure> {
    let mut cfg = base_config(config)?;
    cfg.apply_model_flags(model);
    let exp = cfg.validate().usage()?;
    let chrom = output::read_checkpoint(checkpoint)
        .with_context(|| format!("in {}", checkpoint.display()))
        .usage()?;
    let layout = chrom.layout();

    let mut sim = experiment::new_simulator(&exp).runtime()?;
    sim.enable_trace();
    let episode = experiment::evaluate_on(&mut sim, chrom, &exp).runtime()?;
    let trace = sim.take_trace();

    let raw = episode.history.materialize();
    let coeffs = dct2(&raw).runtime()?;
    let block = truncate(&coeffs, exp.truncation).runtime()?;

    fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .runtime()?;
    output::write_matrix_csv(create(&out.join("raw.csv")).runtime()?, &raw).runtime()?;
    output::write_matrix_csv(create(&out.join("dct.csv")).runtime()?, &coeffs).runtime()?;
    output::write_matrix_csv(create(&out.join("truncated.csv")).runtime()?, &block).runtime()?;
    output::write_trace_csv(create(&out.join("trace.csv")).runtime()?, &trace).runtime()?;
    println!(
        "{layout} policy: fitness {:.6} over {} frames",
        episode.fitness, episode.frames
    );
    Ok(())
}
