//! Report and table emission.
//!
//! Every subcommand writes `report.json` under the output directory; table
//! producers add `tables/*.csv`. Rationals are serialized as exact `p/q`
//! strings; the optional approx column is decimal and explicitly lossy.
//! Output bytes depend only on the inputs (no timestamps, no map iteration
//! order), so identical configurations produce identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fint::ConvergenceReport;
use serde_json::Value;

pub struct OutputWriter {
    out_dir: PathBuf,
    approx: bool,
}

impl OutputWriter {
    pub fn new(out_dir: &Path, approx: bool) -> Self {
        OutputWriter {
            out_dir: out_dir.to_path_buf(),
            approx,
        }
    }


    /// Writes `report.json` (pretty, trailing newline).
    pub fn write_report(&self, report: &Value) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        let path = self.out_dir.join("report.json");
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Writes a JSON artifact under `artifacts/`.
    pub fn write_artifact(&self, name: &str, value: &Value) -> Result<PathBuf> {
        let dir = self.out_dir.join("artifacts");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    /// Writes the per-index table of a convergence report as
    /// `tables/<name>.csv`.
    pub fn write_convergence_csv(&self, name: &str, report: &ConvergenceReport) -> Result<PathBuf> {
        let dir = self.out_dir.join("tables");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{name}.csv"));
        let mut writer = csv::Writer::from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        let mut header = vec!["index", "n_samples", "min", "max", "mean", "width"];
        if self.approx {
            header.push("mean_approx_lossy");
        }
        writer.write_record(&header)?;
        for stats in &report.indices {
            let mut record = vec![
                stats.index.to_string(),
                stats.n_samples.to_string(),
                stats.min.to_string(),
                stats.max.to_string(),
                stats.mean.to_string(),
                stats.width().to_string(),
            ];
            if self.approx {
                record.push(format!("{:.12e}", stats.mean.to_f64_lossy()));
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(path)
    }
}
