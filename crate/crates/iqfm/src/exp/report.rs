//! Result tables and exports: the per-run report CSV, the grouped summary
//! with trial statistics, and the plain-text exports (embeddings, kernel
//! matrices, loss traces).
//!
//! One report row is one trained-and-evaluated run. The column set is
//! fixed — `run_id,task,method,L,var_depth,M,shots,noise_p,seed,accuracy,`
//! `retention,wall_time` — and `shots = 0` means exact expectations.
//! `retention` is only populated by noise sweeps, where it is the accuracy
//! divided by the same trial's accuracy at zero noise. Floats are written
//! with the shortest representation that round-trips, except embeddings,
//! which use 17 significant digits so exported features are bit-faithful.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::exp::config::{Method, Task};
use crate::spinchain::write_bytes_atomic;

/// Column names of the per-run report, in file order.
pub const REPORT_HEADER: &str =
    "run_id,task,method,L,var_depth,M,shots,noise_p,seed,accuracy,retention,wall_time";

/// One trained-and-evaluated run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Sortable identifier, `{task}-{method}-p{point}-t{trial}`.
    pub run_id: String,
    pub task: Task,
    pub method: Method,
    /// Feature-map layer count `L`.
    pub layers: usize,
    /// Conv-block repetitions (variational circuit methods; 0 otherwise).
    pub var_depth: usize,
    /// Modular width `M` (image tasks; 0 otherwise).
    pub width: usize,
    /// Shots per basis; `None` = exact.
    pub shots: Option<u64>,
    pub noise_p: f64,
    /// Trial seed actually used (derived from the master seed).
    pub seed: u64,
    pub accuracy: f64,
    /// Accuracy divided by the same trial's zero-noise accuracy; only set
    /// by noise sweeps.
    pub retention: Option<f64>,
    /// Seconds spent training and evaluating this run.
    pub wall_time: f64,
}

/// Rows plus any per-run failures (runs that errored produce a note here
/// instead of a row, and the rest of the sweep continues).
#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub errors: Vec<String>,
}

fn format_row(row: &ReportRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{:.6}",
        row.run_id,
        row.task,
        row.method,
        row.layers,
        row.var_depth,
        row.width,
        row.shots.unwrap_or(0),
        row.noise_p,
        row.seed,
        row.accuracy,
        row.retention.map(|r| r.to_string()).unwrap_or_default(),
        row.wall_time,
    )
}

/// Render the report as CSV text (header + one line per row).
pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    out
}

/// Write `report.csv` atomically; run failures, if any, go to a sibling
/// `errors.log` so the CSV stays machine-clean.
pub fn write_report(path: &Path, report: &ExperimentReport) -> Result<()> {
    write_bytes_atomic(path, report_to_csv(report).as_bytes())?;
    if !report.errors.is_empty() {
        let log = path.with_extension("errors.log");
        write_bytes_atomic(&log, (report.errors.join("\n") + "\n").as_bytes())?;
    }
    Ok(())
}

fn field<'a>(parts: &[&'a str], idx: usize, path: &Path, line: usize) -> Result<&'a str> {
    parts.get(idx).copied().ok_or_else(|| {
        Error::format(
            path.display().to_string(),
            0,
            format!("line {line}: expected 12 fields, found {}", parts.len()),
        )
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    s.parse().map_err(|_| {
        Error::format(
            path.display().to_string(),
            0,
            format!("line {line}: cannot parse {what} from {s:?}"),
        )
    })
}

/// Read a report CSV back. The header must match [`REPORT_HEADER`] exactly.
pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == REPORT_HEADER => {}
        Some((_, header)) => {
            return Err(Error::format(
                path.display().to_string(),
                0,
                format!("unexpected header {header:?}"),
            ))
        }
        None => {
            return Err(Error::format(
                path.display().to_string(),
                0,
                "empty report file",
            ))
        }
    }
    let mut report = ExperimentReport::default();
    for (number, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let line = number + 1;
        let parts: Vec<&str> = raw.split(',').collect();
        let shots: u64 = parse_num(field(&parts, 6, path, line)?, "shots", path, line)?;
        let retention_field = field(&parts, 10, path, line)?;
        report.rows.push(ReportRow {
            run_id: field(&parts, 0, path, line)?.to_string(),
            task: Task::parse(field(&parts, 1, path, line)?)?,
            method: Method::parse(field(&parts, 2, path, line)?)?,
            layers: parse_num(field(&parts, 3, path, line)?, "L", path, line)?,
            var_depth: parse_num(field(&parts, 4, path, line)?, "var_depth", path, line)?,
            width: parse_num(field(&parts, 5, path, line)?, "M", path, line)?,
            shots: (shots > 0).then_some(shots),
            noise_p: parse_num(field(&parts, 7, path, line)?, "noise_p", path, line)?,
            seed: parse_num(field(&parts, 8, path, line)?, "seed", path, line)?,
            accuracy: parse_num(field(&parts, 9, path, line)?, "accuracy", path, line)?,
            retention: if retention_field.is_empty() {
                None
            } else {
                Some(parse_num(retention_field, "retention", path, line)?)
            },
            wall_time: parse_num(field(&parts, 11, path, line)?, "wall_time", path, line)?,
        });
    }
    Ok(report)
}

/// Per-configuration statistics over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub task: Task,
    pub method: Method,
    pub layers: usize,
    pub var_depth: usize,
    pub width: usize,
    pub shots: Option<u64>,
    pub noise_p: f64,
    /// Trials aggregated into this row.
    pub n: usize,
    pub accuracy_mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single trial.
    pub accuracy_std: f64,
    pub retention_mean: Option<f64>,
    pub wall_time_mean: f64,
    /// Set when only one trial backs the row, so the zero std is not read
    /// as a real spread.
    pub degenerate: bool,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Group rows by everything except the trial (run id and seed) and reduce
/// each group to mean/std statistics. Output order is deterministic.
pub fn compute_metrics(rows: &[ReportRow]) -> Vec<SummaryRow> {
    // noise_p keys through its bit pattern: sweep values come from config
    // text, so equal points are bitwise equal.
    let mut groups: BTreeMap<(String, String, usize, usize, usize, u64, u64), Vec<&ReportRow>> =
        BTreeMap::new();
    for row in rows {
        groups
            .entry((
                row.task.to_string(),
                row.method.to_string(),
                row.layers,
                row.var_depth,
                row.width,
                row.shots.unwrap_or(0),
                row.noise_p.to_bits(),
            ))
            .or_default()
            .push(row);
    }
    groups
        .into_values()
        .map(|group| {
            let accuracies: Vec<f64> = group.iter().map(|r| r.accuracy).collect();
            let retentions: Vec<f64> = group.iter().filter_map(|r| r.retention).collect();
            let first = group[0];
            SummaryRow {
                task: first.task,
                method: first.method,
                layers: first.layers,
                var_depth: first.var_depth,
                width: first.width,
                shots: first.shots,
                noise_p: first.noise_p,
                n: group.len(),
                accuracy_mean: mean(&accuracies),
                accuracy_std: sample_std(&accuracies),
                retention_mean: (!retentions.is_empty()).then(|| mean(&retentions)),
                wall_time_mean: mean(&group.iter().map(|r| r.wall_time).collect::<Vec<_>>()),
                degenerate: group.len() == 1,
            }
        })
        .collect()
}

/// Render summary rows as CSV.
pub fn summary_to_csv(summaries: &[SummaryRow]) -> String {
    let mut out = String::from(
        "task,method,L,var_depth,M,shots,noise_p,n,accuracy_mean,accuracy_std,\
         retention_mean,wall_time_mean,single_trial\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.6},{}\n",
            s.task,
            s.method,
            s.layers,
            s.var_depth,
            s.width,
            s.shots.unwrap_or(0),
            s.noise_p,
            s.n,
            s.accuracy_mean,
            s.accuracy_std,
            s.retention_mean.map(|r| r.to_string()).unwrap_or_default(),
            s.wall_time_mean,
            s.degenerate,
        ));
    }
    out
}

/// Write labeled feature vectors as CSV (`label,c0,c1,...`) with 17
/// significant digits per component, enough for an exact `f64` round trip.
pub fn export_embeddings(path: &Path, labels: &[u32], embeddings: &[Vec<f64>]) -> Result<()> {
    if labels.len() != embeddings.len() {
        return Err(Error::Dimension {
            context: "embedding labels",
            expected: embeddings.len(),
            actual: labels.len(),
        });
    }
    let dim = embeddings.first().map_or(0, Vec::len);
    let mut out = String::from("label");
    for c in 0..dim {
        out.push_str(&format!(",c{c}"));
    }
    out.push('\n');
    for (label, row) in labels.iter().zip(embeddings) {
        if row.len() != dim {
            return Err(Error::Dimension {
                context: "embedding width",
                expected: dim,
                actual: row.len(),
            });
        }
        out.push_str(&label.to_string());
        for value in row {
            out.push_str(&format!(",{value:.16e}"));
        }
        out.push('\n');
    }
    write_bytes_atomic(path, out.as_bytes())
}

/// Read an embeddings CSV back into labels and feature vectors.
pub fn read_embeddings(path: &Path) -> Result<(Vec<u32>, Vec<Vec<f64>>)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| {
        Error::format(path.display().to_string(), 0, "empty embeddings file")
    })?;
    let dim = header.split(',').count() - 1;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (number, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let label = parse_num(parts.next().unwrap_or(""), "label", path, number + 2)?;
        let row: Vec<f64> = parts
            .map(|v| parse_num(v, "component", path, number + 2))
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(Error::Dimension {
                context: "embedding width",
                expected: dim,
                actual: row.len(),
            });
        }
        labels.push(label);
        rows.push(row);
    }
    Ok((labels, rows))
}

/// Write a square kernel matrix as a headerless numeric CSV, 17 significant
/// digits per entry.
pub fn export_gram_csv(path: &Path, gram: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for row in gram.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_bytes_atomic(path, out.as_bytes())
}

/// Write a layer-wise loss trace (`layer,outer_epoch,inner_epoch,mean_loss`).
pub fn export_loss_trace(path: &Path, trace: &[crate::learn::LossTraceRow]) -> Result<()> {
    let mut out = String::from("layer,outer_epoch,inner_epoch,mean_loss\n");
    for row in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.layer, row.outer_epoch, row.inner_epoch, row.mean_loss
        ));
    }
    write_bytes_atomic(path, out.as_bytes())
}
