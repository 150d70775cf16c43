//! CSV tables and the run manifest.
//!
//! Mean estimation writes `mean_raw.csv` (`q,mechanism,trial,mse`) and
//! `mean_summary.csv` (`q,mechanism,median,p25,p75`). Least squares writes
//! `ols_raw.csv` (`q,n,mechanism,trial,excess_risk`) and `ols_summary.csv`
//! (`q,n,mechanism,median,p25,p75`). Each run also writes `manifest.toml`
//! with the crate version, the seed and the full configuration.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Kind};
use crate::harness::experiment::ExperimentOutput;

#[derive(Serialize)]
struct MeanRaw<'a> {
    q: f64,
    mechanism: &'a str,
    trial: usize,
    mse: f64,
}

#[derive(Serialize)]
struct MeanSummary<'a> {
    q: f64,
    mechanism: &'a str,
    median: f64,
    p25: f64,
    p75: f64,
}

#[derive(Serialize)]
struct OlsRaw<'a> {
    q: f64,
    n: usize,
    mechanism: &'a str,
    trial: usize,
    excess_risk: f64,
}

#[derive(Serialize)]
struct OlsSummary<'a> {
    q: f64,
    n: usize,
    mechanism: &'a str,
    median: f64,
    p25: f64,
    p75: f64,
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: impl Iterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_raw<W: Write>(kind: Kind, output: &ExperimentOutput, out: W) -> Result<()> {
    let rows = output.records.iter();
    match kind {
        Kind::OlsSim => write_rows(
            out,
            rows.map(|r| OlsRaw {
                q: r.q,
                n: r.n,
                mechanism: r.mechanism.name(),
                trial: r.trial,
                excess_risk: r.error,
            }),
        ),
        _ => write_rows(
            out,
            rows.map(|r| MeanRaw {
                q: r.q,
                mechanism: r.mechanism.name(),
                trial: r.trial,
                mse: r.error,
            }),
        ),
    }
}

pub fn write_summary<W: Write>(kind: Kind, output: &ExperimentOutput, out: W) -> Result<()> {
    let rows = output.summary.iter();
    match kind {
        Kind::OlsSim => write_rows(
            out,
            rows.map(|s| OlsSummary {
                q: s.q,
                n: s.n,
                mechanism: s.mechanism.name(),
                median: s.median,
                p25: s.p25,
                p75: s.p75,
            }),
        ),
        _ => write_rows(
            out,
            rows.map(|s| MeanSummary {
                q: s.q,
                mechanism: s.mechanism.name(),
                median: s.median,
                p25: s.p25,
                p75: s.p75,
            }),
        ),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    kind: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
}

pub fn manifest(kind: Kind, config: &ExperimentConfig) -> Result<String> {
    let m = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        kind: kind.name(),
        seed: config.seed()?,
        config,
    };
    toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))
}

/// Writes the raw table, the summary and the manifest into `dir`, creating
/// it if needed. Returns the paths written.
pub fn write_all(dir: &Path, kind: Kind, config: &ExperimentConfig, output: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let prefix = if kind == Kind::OlsSim { "ols" } else { "mean" };
    let raw = dir.join(format!("{prefix}_raw.csv"));
    let summary = dir.join(format!("{prefix}_summary.csv"));
    let manifest_path = dir.join("manifest.toml");
    let create = |p: &Path| std::fs::File::create(p).map_err(|e| Error::io(p, e));
    write_raw(kind, output, std::io::BufWriter::new(create(&raw)?))?;
    write_summary(kind, output, std::io::BufWriter::new(create(&summary)?))?;
    std::fs::write(&manifest_path, manifest(kind, config)?).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(vec![raw, summary, manifest_path])
}
