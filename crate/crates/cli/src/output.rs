//! CSV emission for run rows, summaries and design tables.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use hetbandit_core::ident::{psi_star, ComplexityReport};
use thiserror::Error;

use crate::presets::IdentPreset;
use crate::suite::{Row, SummaryLine};

pub const SCHEMA_LINE: &str = "# schema_version=1";

pub const ROW_HEADER: [&str; 10] = [
    "preset",
    "algorithm",
    "seed",
    "metric_name",
    "metric_value",
    "correct",
    "rounds",
    "burn_in",
    "wall_ms",
    "status",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Model(#[from] hetbandit_core::Error),
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn with_path<T>(path: &Path, r: Result<T, csv::Error>) -> Result<T, OutputError> {
    r.map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<File, OutputError> {
    let mut f = File::create(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(f, "{SCHEMA_LINE}").map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(f)
}

fn write_table(path: &Path, header: &[&str], records: Vec<Vec<String>>) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    with_path(path, w.write_record(header))?;
    for r in records {
        with_path(path, w.write_record(&r))?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn row_record(r: &Row) -> Vec<String> {
    vec![
        r.preset.clone(),
        r.algorithm.clone(),
        r.seed.to_string(),
        r.metric_name.clone(),
        opt(r.metric_value),
        opt(r.correct),
        opt(r.rounds),
        opt(r.burn_in),
        format!("{:.3}", r.wall_ms),
        r.status.clone(),
    ]
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<(), OutputError> {
    write_table(path, &ROW_HEADER, rows.iter().map(row_record).collect())
}

pub const SUMMARY_HEADER: [&str; 7] = ["algorithm", "metric_name", "n", "failed", "mean", "sem", "correct"];

pub fn summary_record(s: &SummaryLine) -> Vec<String> {
    vec![
        s.algorithm.clone(),
        s.metric_name.clone(),
        s.n.to_string(),
        s.failed.to_string(),
        s.mean.to_string(),
        s.sem.to_string(),
        opt(s.correct),
    ]
}

pub fn write_summary(path: &Path, lines: &[SummaryLine]) -> Result<(), OutputError> {
    write_table(path, &SUMMARY_HEADER, lines.iter().map(summary_record).collect())
}

/// `results.csv` -> `results_summary.csv` next to it.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_summary.csv"))
}

pub fn format_summary(lines: &[SummaryLine]) -> String {
    let mut out = String::new();
    for s in lines {
        out.push_str(&format!(
            "{:<11} {:<14} n={:<3} mean={:<14.6e} sem={:<12.4e}",
            s.algorithm, s.metric_name, s.n, s.mean, s.sem
        ));
        if let Some(c) = s.correct {
            out.push_str(&format!(" correct={c}/{}", s.n + s.failed));
        }
        if s.failed > 0 {
            out.push_str(&format!(" failed={}", s.failed));
        }
        out.push('\n');
    }
    out
}

/// Oracle design weights per arm under the preset's variances and under the
/// homoskedastic bound.
pub fn design_table(preset: &IdentPreset) -> Result<(ComplexityReport, Vec<Vec<String>>), OutputError> {
    let report = psi_star(&preset.task, &preset.design_variances)?;
    let arms = preset.task.instance().arms();
    let records = arms
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let coords: Vec<String> = x.iter().map(|c| c.to_string()).collect();
            vec![
                i.to_string(),
                coords.join(";"),
                preset.design_variances[i].to_string(),
                report.psi_design.weights[i].to_string(),
                report.rho_design.weights[i].to_string(),
            ]
        })
        .collect();
    Ok((report, records))
}

pub const DESIGN_HEADER: [&str; 5] = ["arm", "x", "variance", "weight_het", "weight_hom"];

pub fn write_design_table(path: &Path, preset: &IdentPreset) -> Result<ComplexityReport, OutputError> {
    let (report, records) = design_table(preset)?;
    write_table(path, &DESIGN_HEADER, records)?;
    Ok(report)
}

pub fn format_complexity(report: &ComplexityReport, delta: f64) -> String {
    format!(
        "psi* = {:.6e}\nrho* = {:.6e}\npsi*/rho* = {:.6}\nlower bound (delta = {delta}) = {:.6e} samples\n",
        report.psi_star,
        report.rho_star,
        report.ratio,
        report.lower_bound_samples(delta)
    )
}
