//! Learning-curve CSV files.
//!
//! Columns `p,kl_mean,kl_stderr,inf_flag`, followed, when snapshots are
//! enabled, by `pi_i`, `A_ij`, `B_ia` holding replica 0's parameters on
//! snapshot rows (empty elsewhere). An infinite mean is written as
//! [`INF_SENTINEL`] with `inf_flag = 1`.

use std::path::Path;

use online_hmm::harness::AveragedCurve;
use online_hmm::{HmmParams, ModelDims};

use crate::error::{CliError, Result};
use crate::runner::LearnerRun;

pub const INF_SENTINEL: f64 = 1e9;

pub const BASE_COLUMNS: [&str; 4] = ["p", "kl_mean", "kl_stderr", "inf_flag"];

pub fn snapshot_columns(dims: ModelDims) -> Vec<String> {
    let ModelDims { n, m, .. } = dims;
    let mut cols: Vec<String> = (0..n).map(|i| format!("pi_{i}")).collect();
    cols.extend((0..n).flat_map(|i| (0..n).map(move |j| format!("A_{i}{j}"))));
    cols.extend((0..n).flat_map(|i| (0..m).map(move |a| format!("B_{i}{a}"))));
    cols
}

fn snapshot_values(p: &HmmParams) -> impl Iterator<Item = f64> + '_ {
    p.pi().iter().chain(p.a_flat()).chain(p.b_flat()).copied()
}

/// Shortest text that parses back to the same `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

pub fn write_curve(path: &Path, run: &LearnerRun, dims: ModelDims, snapshots: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(write_err(path))?;
    let extra = if snapshots { snapshot_columns(dims) } else { Vec::new() };
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(extra.iter().cloned());
    w.write_record(&header).map_err(write_err(path))?;

    for (pt, raw) in run.averaged.points.iter().zip(&run.trace.points) {
        let inf = pt.mean.is_infinite();
        let mut record = vec![
            pt.p.to_string(),
            fmt_f64(if inf { INF_SENTINEL } else { pt.mean }),
            fmt_f64(pt.stderr),
            u8::from(inf).to_string(),
        ];
        if snapshots {
            match &raw.snapshot {
                Some(s) => record.extend(snapshot_values(s).map(fmt_f64)),
                None => record.extend(extra.iter().map(|_| String::new())),
            }
        }
        w.write_record(&record).map_err(write_err(path))?;
    }
    w.flush().map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub p: usize,
    /// `+inf` when the row is flagged.
    pub kl_mean: f64,
    pub kl_stderr: f64,
}

/// Reads the base columns of a curve file.
pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let parse_err = |message: String| CliError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::ReaderBuilder::new().from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::ReadInput {
            path: path.to_path_buf(),
            source,
        },
        other => parse_err(format!("{other:?}")),
    })?;
    let header = r.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if header.iter().take(4).ne(BASE_COLUMNS) {
        return Err(parse_err(format!("unexpected header {:?}", header)));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let field = |k: usize| -> Result<&str> {
            record
                .get(k)
                .ok_or_else(|| parse_err(format!("row {}: missing column {}", line + 2, BASE_COLUMNS[k])))
        };
        let num = |k: usize| -> Result<f64> {
            field(k)?
                .parse::<f64>()
                .map_err(|e| parse_err(format!("row {}: {}: {e}", line + 2, BASE_COLUMNS[k])))
        };
        let p = field(0)?
            .parse::<usize>()
            .map_err(|e| parse_err(format!("row {}: p: {e}", line + 2)))?;
        let flagged = field(3)? == "1";
        rows.push(CurveRow {
            p,
            kl_mean: if flagged { f64::INFINITY } else { num(1)? },
            kl_stderr: num(2)?,
        });
    }
    Ok(rows)
}

/// Mean KL per point of an averaged curve, for tests and summaries.
pub fn rows_of(curve: &AveragedCurve) -> Vec<CurveRow> {
    curve
        .points
        .iter()
        .map(|pt| CurveRow {
            p: pt.p,
            kl_mean: pt.mean,
            kl_stderr: pt.stderr,
        })
        .collect()
}
