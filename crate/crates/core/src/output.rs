//! File formats: trial tables, curves, per-generation history, checkpoints
//! and matrix dumps. Floats are written in Rust's shortest round-trip form,
//! so equal values always produce equal bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{CurvePoint, TrialRecord, TrialSummary};
use crate::matrix::RealMatrix;
use crate::policy::{Chromosome, Layout};
use crate::sim::TraceRow;

pub const TRIALS_HEADER: [&str; 6] = [
    "mode",
    "trial",
    "seed",
    "generations",
    "final_best",
    "best_series",
];

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_trials_csv<W: Write>(out: W, trials: &[TrialSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_HEADER)?;
    for t in trials {
        w.write_record([
            t.mode.to_string(),
            t.trial.to_string(),
            t.seed.to_string(),
            t.best_series.len().to_string(),
            t.final_best.to_string(),
            join(&t.best_series),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    line: u64,
) -> Result<T> {
    let raw = record.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        Error::InvalidInput(format!(
            "line {line}: cannot parse {} from '{raw}'",
            TRIALS_HEADER[idx]
        ))
    })
}

pub fn read_trials_csv<R: Read>(input: R) -> Result<Vec<TrialSummary>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TRIALS_HEADER {
        return Err(Error::InvalidInput(format!(
            "unexpected trials header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let mode: Layout = rec.get(0).unwrap_or("").parse()?;
        let generations: usize = parse_field(&rec, 3, line)?;
        let series_raw = rec.get(5).unwrap_or("").trim();
        let best_series = if series_raw.is_empty() {
            Vec::new()
        } else {
            series_raw
                .split(';')
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            Error::InvalidInput(format!("line {line}: bad series value '{s}'"))
                        })
                })
                .collect::<Result<Vec<_>>>()?
        };
        if best_series.len() != generations {
            return Err(Error::InvalidInput(format!(
                "line {line}: {generations} generations but {} series values",
                best_series.len()
            )));
        }
        let final_best: f64 = parse_field(&rec, 4, line)?;
        if !final_best.is_finite() {
            return Err(Error::InvalidInput(format!(
                "line {line}: non-finite final_best"
            )));
        }
        out.push(TrialSummary {
            mode,
            trial: parse_field(&rec, 1, line)?,
            seed: parse_field(&rec, 2, line)?,
            final_best,
            best_series,
        });
    }
    Ok(out)
}

pub fn write_curves_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generation", "mode", "mean", "std"])?;
    for p in points {
        w.write_record([
            p.generation.to_string(),
            p.mode.to_string(),
            p.mean.to_string(),
            p.std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-generation rows: mode, trial, generation, both offspring fitnesses
/// and the best so far.
pub fn write_history_csv<W: Write>(out: W, trials: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "trial",
        "generation",
        "offspring1_fitness",
        "offspring2_fitness",
        "best_so_far",
    ])?;
    for t in trials {
        for g in &t.history {
            w.write_record([
                t.mode.to_string(),
                t.trial.to_string(),
                g.generation.to_string(),
                g.offspring[0].to_string(),
                g.offspring[1].to_string(),
                g.best_so_far.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Wall-clock time per trial. Kept apart from `trials.csv` so that file
/// stays byte-for-byte reproducible.
pub fn write_timing_csv<W: Write>(out: W, trials: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "trial", "wall_time_s"])?;
    for t in trials {
        w.write_record([
            t.mode.to_string(),
            t.trial.to_string(),
            format!("{:.3}", t.wall_time.as_secs_f64()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv<W: Write>(out: W, m: &RealMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in 0..m.rows() {
        w.write_record(m.row(r).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<RealMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad matrix entry '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    RealMatrix::from_rows(&rows)
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["frame".to_string(), "x".into(), "y".into()];
    header.extend((0..18).map(|m| format!("angle{m}")));
    w.write_record(&header)?;
    for row in trace {
        let mut rec = vec![row.frame.to_string(), row.x.to_string(), row.y.to_string()];
        rec.extend(row.angles.iter().map(|a| a.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Checkpoints are a single JSON object: `{"layout": ..., "genes": [...]}`.
pub fn write_checkpoint(path: &Path, chrom: &Chromosome) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, chrom)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Chromosome> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r)
        .map_err(|e| Error::InvalidInput(format!("malformed checkpoint: {e}")))
}
