//! Run manifests and the `compare` summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::curve_csv::{read_curve, CurveRow};
use crate::error::{CliError, Result};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerEntry {
    pub index: usize,
    pub algorithm: String,
    /// Curve file, relative to the manifest's directory.
    pub csv: String,
    pub wall_clock_seconds: f64,
    /// Time inside learner updates, summed over replicas.
    pub update_seconds: f64,
    pub failed_updates: usize,
    pub max_projection_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    /// The configuration that was run, with every default filled in.
    pub config: ConfigFile,
    pub learners: Vec<LearnerEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadInput {
            path: path.to_path_buf(),
            source,
        })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: format!("{}: {}", e.path(), e.inner()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub manifest: PathBuf,
    pub learner: String,
    pub final_kl: f64,
    /// Trapezoidal area under the mean KL curve over `p`.
    pub auc: f64,
    pub wall_clock_seconds: f64,
    pub update_seconds: f64,
}

pub fn area_under(rows: &[CurveRow]) -> f64 {
    rows.windows(2)
        .map(|w| 0.5 * (w[0].kl_mean + w[1].kl_mean) * (w[1].p - w[0].p) as f64)
        .sum()
}

fn learner_label(e: &LearnerEntry) -> String {
    format!("{}#{}", e.algorithm, e.index)
}

/// Summarizes the learners of two or more compatible manifests, in argument
/// order and then learner order.
pub fn compare(paths: &[PathBuf]) -> Result<Vec<SummaryRow>> {
    if paths.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least 2 manifests, got {}",
            paths.len()
        )));
    }
    let manifests: Vec<RunManifest> = paths.iter().map(|p| RunManifest::load(p)).collect::<Result<_>>()?;
    let first = &manifests[0].config;
    for (path, m) in paths.iter().zip(&manifests).skip(1) {
        let c = &m.config;
        if c.dims != first.dims {
            return Err(CliError::Incompatible(format!(
                "{} has dims {:?}, expected {:?}",
                path.display(),
                c.dims,
                first.dims
            )));
        }
        if c.drift != first.drift || c.sequences != first.sequences {
            return Err(CliError::Incompatible(format!(
                "{} has schedule {:?} over {} sequences, expected {:?} over {}",
                path.display(),
                c.drift,
                c.sequences,
                first.drift,
                first.sequences
            )));
        }
    }
    let mut rows = Vec::new();
    for (path, m) in paths.iter().zip(&manifests) {
        let dir = path.parent().unwrap_or(Path::new("."));
        for e in &m.learners {
            let curve = read_curve(&dir.join(&e.csv))?;
            rows.push(SummaryRow {
                manifest: path.clone(),
                learner: learner_label(e),
                final_kl: curve.last().map_or(f64::NAN, |r| r.kl_mean),
                auc: area_under(&curve),
                wall_clock_seconds: e.wall_clock_seconds,
                update_seconds: e.update_seconds,
            });
        }
    }
    Ok(rows)
}

pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "manifest\tlearner\tfinal_kl\tauc\twall_clock_s\tupdate_s");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6e}\t{:.6e}\t{:.3}\t{:.3}",
            r.manifest.display(),
            r.learner,
            r.final_kl,
            r.auc,
            r.wall_clock_seconds,
            r.update_seconds
        );
    }
    out
}
