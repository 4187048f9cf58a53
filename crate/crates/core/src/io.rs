//! Plain-text snapshot and series files.
//!
//! A snapshot file is a header `# t=<float> N=<int>` followed by N lines `x,y`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsSeries;
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowHistory, FlowMode, Snapshot, StepRecord};
use crate::geometry::{ClosedCurve, Point};

pub const SERIES_HEADER: &str =
    "t,length,area,kappa_bar,i2,psi,diam,iso_ratio,max_abs_kappa,ddiam_dt";

pub fn format_snapshot(curve: &ClosedCurve) -> String {
    let mut out = format!("# t={} N={}\n", curve.time, curve.len());
    for p in curve.vertices() {
        let _ = writeln!(out, "{},{}", p.x, p.y);
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<ClosedCurve> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    let rest = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?;
    let mut time = None;
    let mut count = None;
    for field in rest.split_whitespace() {
        if let Some(v) = field.strip_prefix("t=") {
            time = Some(parse_f64(v)?);
        } else if let Some(v) = field.strip_prefix("N=") {
            count = Some(
                v.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad vertex count {v:?}")))?,
            );
        }
    }
    let (time, count) = match (time, count) {
        (Some(t), Some(n)) => (t, n),
        _ => return Err(Error::Parse(format!("bad header {header:?}"))),
    };
    let mut vertices = Vec::with_capacity(count);
    for line in lines {
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad vertex line {line:?}")))?;
        vertices.push(Point::new(parse_f64(x)?, parse_f64(y)?));
    }
    if vertices.len() != count {
        return Err(Error::Parse(format!(
            "header announces {count} vertices, found {}",
            vertices.len()
        )));
    }
    ClosedCurve::new(vertices, time)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

pub fn write_snapshot(path: &Path, curve: &ClosedCurve) -> Result<()> {
    fs::write(path, format_snapshot(curve))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<ClosedCurve> {
    parse_snapshot(&fs::read_to_string(path)?)
}

pub fn format_series(series: &DiagnosticsSeries) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for r in &series.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.length,
            r.area,
            r.kappa_bar,
            r.i2,
            r.psi,
            r.diam,
            r.iso_ratio,
            r.max_abs_kappa,
            r.ddiam_dt
        );
    }
    out
}

pub fn write_series(path: &Path, series: &DiagnosticsSeries) -> Result<()> {
    fs::write(path, format_series(series))?;
    Ok(())
}

/// Writes `snap_<k>.csv` for every snapshot.
pub fn write_snapshots(dir: &Path, history: &FlowHistory) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, s) in history.snapshots.iter().enumerate() {
        write_snapshot(&dir.join(format!("snap_{k}.csv")), &s.curve)?;
    }
    Ok(())
}

fn snapshot_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(k) = name
            .strip_prefix("snap_")
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|k| k.parse::<usize>().ok())
        {
            files.push((k, path));
        }
    }
    files.sort();
    Ok(files)
}

/// Rebuilds a history from a run directory.
///
/// Step records come from `series.csv` when present (its `kappa_bar` column
/// is the nonlocal term of the flow), otherwise from the snapshots. Vertex
/// correspondence between snapshots is not recoverable from files, so every
/// snapshot gets its own generation.
pub fn load_history(dir: &Path, config: FlowConfig) -> Result<FlowHistory> {
    let files = snapshot_files(dir)?;
    if files.is_empty() {
        return Err(Error::Parse(format!(
            "no snap_<k>.csv files in {}",
            dir.display()
        )));
    }
    let mut snapshots = Vec::with_capacity(files.len());
    for (generation, (k, path)) in files.iter().enumerate() {
        snapshots.push(Snapshot::new(read_snapshot(path)?, *k, generation)?);
    }
    snapshots.sort_by(|a, b| a.time().total_cmp(&b.time()));

    let series_path = dir.join("series.csv");
    let steps = if series_path.exists() {
        parse_series_records(&fs::read_to_string(series_path)?)?
    } else {
        snapshots
            .iter()
            .map(|s| {
                let hbar = match config.mode {
                    FlowMode::Mcf => 0.0,
                    FlowMode::Vpmcf => s.cache.kappa_bar,
                };
                StepRecord {
                    t: s.time(),
                    dt: 0.0,
                    multiplier: hbar,
                    kappa_bar: s.cache.kappa_bar,
                    hbar,
                    length: s.cache.length,
                    area: s.cache.area,
                    resampled: false,
                }
            })
            .collect()
    };
    Ok(FlowHistory {
        config,
        snapshots,
        steps,
        singular_time: None,
    })
}

fn parse_series_records(text: &str) -> Result<Vec<StepRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SERIES_HEADER => {}
        other => return Err(Error::Parse(format!("bad series header {other:?}"))),
    }
    let mut steps: Vec<StepRecord> = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<f64> = line.split(',').map(parse_f64).collect::<Result<_>>()?;
        if cols.len() != 10 {
            return Err(Error::Parse(format!("bad series line {line:?}")));
        }
        let dt = steps.last().map_or(0.0, |p| cols[0] - p.t);
        steps.push(StepRecord {
            t: cols[0],
            dt,
            multiplier: cols[3],
            kappa_bar: cols[3],
            hbar: cols[3],
            length: cols[1],
            area: cols[2],
            resampled: false,
        });
    }
    Ok(steps)
}
