//! Scenario configuration files and the `run` command.
//!
//! A configuration is one flat JSON object: the scenario, every field of
//! [`FlowConfig`], and the run-level keys below. Unknown keys are rejected.
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vpmcf_core::diagnostics::{series, DiagnosticsSeries};
use vpmcf_core::flow::run;
use vpmcf_core::io::{write_series, write_snapshots};
use vpmcf_core::scenario::{make_scenario, perturb, Perturbation, Scenario};
use vpmcf_core::{Error, FlowConfig, FlowError, FlowHistory};

use crate::Failure;

const RUN_KEYS: [&str; 5] = ["scenario", "output", "seed", "series_every", "perturbation"];

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub flow: FlowConfig,
    pub output: PathBuf,
    pub seed: u64,
    /// Keep a `series.csv` row every this many accepted steps; defaults to `snapshot_every`.
    pub series_every: usize,
    pub perturbation: Option<Perturbation>,
}

fn config_error(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("config: {msg}"))
}

fn take<T: serde::de::DeserializeOwned>(
    map: &mut Map<String, Value>,
    key: &str,
) -> Result<Option<T>, Failure> {
    match map.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| config_error(format!("{key}: {e}"))),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, Failure> {
        let value: Value = serde_json::from_str(text).map_err(config_error)?;
        let Value::Object(mut map) = value else {
            return Err(config_error("expected a JSON object"));
        };
        let mut run_part = Map::new();
        for key in RUN_KEYS {
            if let Some(v) = map.remove(key) {
                run_part.insert(key.to_string(), v);
            }
        }
        let flow: FlowConfig = serde_json::from_value(Value::Object(map)).map_err(config_error)?;
        let mut scenario: Scenario =
            take(&mut run_part, "scenario")?.ok_or_else(|| config_error("missing scenario"))?;
        let output: PathBuf =
            take(&mut run_part, "output")?.ok_or_else(|| config_error("missing output"))?;
        if let Scenario::File { path } = &mut scenario {
            *path = base.join(&*path);
        }
        let config = Self {
            scenario,
            output: base.join(output),
            seed: take(&mut run_part, "seed")?.unwrap_or(0),
            series_every: take(&mut run_part, "series_every")?.unwrap_or(flow.snapshot_every),
            perturbation: take(&mut run_part, "perturbation")?,
            flow,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn validate(&self) -> Result<(), Failure> {
        self.flow.validate().map_err(config_error)?;
        if self.series_every == 0 || !self.series_every.is_multiple_of(self.flow.snapshot_every) {
            return Err(config_error(format!(
                "series_every = {} must be a positive multiple of snapshot_every = {}",
                self.series_every, self.flow.snapshot_every
            )));
        }
        if let Some(p) = &self.perturbation {
            if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) || p.modes < 2 {
                return Err(config_error(
                    "perturbation needs amplitude >= 0 and modes >= 2",
                ));
            }
        }
        Ok(())
    }
}

/// Written next to the snapshots as `run.json`; read back by the analysis commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub flow: FlowConfig,
    pub seed: u64,
    pub series_every: usize,
    pub perturbation: Option<Perturbation>,
    /// `completed`, `singular` or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub t_final: Option<f64>,
    pub singular_time: Option<f64>,
    pub accepted_steps: usize,
    pub snapshots: usize,
    pub runtime_seconds: f64,
}

impl RunSummary {
    fn new(config: &ScenarioConfig) -> Self {
        Self {
            scenario: config.scenario.clone(),
            flow: config.flow.clone(),
            seed: config.seed,
            series_every: config.series_every,
            perturbation: config.perturbation,
            status: "failed".into(),
            error: None,
            t_final: None,
            singular_time: None,
            accepted_steps: 0,
            snapshots: 0,
            runtime_seconds: 0.0,
        }
    }

    pub fn read(dir: &Path) -> Result<Option<Self>, Failure> {
        let path = dir.join("run.json");
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| Failure::from(Error::Io(e)))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }

    fn write(&self, dir: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("summary serializes");
        fs::write(dir.join("run.json"), text + "\n").map_err(|e| Failure::from(Error::Io(e)))
    }
}

/// Rows at multiples of `every` accepted steps, plus the first and last rows.
fn thin_series(full: DiagnosticsSeries, history: &FlowHistory, every: usize) -> DiagnosticsSeries {
    let last = full.rows.len() - 1;
    let rows = full
        .rows
        .iter()
        .zip(&history.snapshots)
        .enumerate()
        .filter(|(i, (_, s))| *i == 0 || *i == last || s.step.is_multiple_of(every))
        .map(|(_, (r, _))| *r)
        .collect();
    DiagnosticsSeries { rows, ..full }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunSummary, Failure> {
    let mut curve = make_scenario(&config.scenario, config.flow.n)?;
    if let Some(p) = &config.perturbation {
        curve = perturb(&curve, p, config.seed)?;
    }
    fs::create_dir_all(&config.output).map_err(|e| Failure::from(Error::Io(e)))?;
    let mut summary = RunSummary::new(config);
    let start = Instant::now();
    let history = match run(&curve, &config.flow) {
        Ok(h) => {
            summary.status = "completed".into();
            h
        }
        Err(FlowError::SingularityReached {
            history,
            t_estimate,
        }) => {
            summary.status = "singular".into();
            summary.singular_time = Some(t_estimate);
            *history
        }
        Err(FlowError::Numerical(e)) => {
            summary.runtime_seconds = start.elapsed().as_secs_f64();
            summary.error = Some(e.to_string());
            summary.write(&config.output)?;
            return Err(e.into());
        }
    };
    summary.runtime_seconds = start.elapsed().as_secs_f64();
    summary.t_final = Some(history.last().time());
    summary.accepted_steps = history.steps.len().saturating_sub(1);
    summary.snapshots = history.snapshots.len();

    write_snapshots(&config.output, &history)?;
    let rows = thin_series(series(&history), &history, config.series_every);
    write_series(&config.output.join("series.csv"), &rows)?;
    summary.write(&config.output)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, Failure> {
        ScenarioConfig::parse(text, Path::new("/base"))
    }

    #[test]
    fn flat_config_with_defaults() {
        let c = parse(
            r#"{"scenario": {"kind": "ellipse", "a": 2, "b": 1}, "mode": "vpmcf",
                "dt": 1e-4, "t_end": 0.1, "N": 128, "output": "out"}"#,
        )
        .unwrap();
        assert_eq!(c.output, PathBuf::from("/base/out"));
        assert_eq!(c.seed, 0);
        assert_eq!(c.series_every, c.flow.snapshot_every);
        assert_eq!(c.flow.n, 128);
    }

    #[test]
    fn unknown_and_missing_keys_are_errors() {
        let base = r#""scenario": {"kind": "circle", "radius": 1}, "mode": "mcf",
                      "dt": 1e-4, "t_end": 0.1, "N": 64"#;
        assert!(parse(&format!(r#"{{{base}, "output": "o", "dtt": 1}}"#)).is_err());
        assert!(parse(&format!("{{{base}}}")).is_err());
        assert!(parse(
            r#"{"scenario": {"kind": "circle", "radius": 1, "r": 2}, "mode": "mcf",
                "dt": 1e-4, "t_end": 0.1, "N": 64, "output": "o"}"#
        )
        .is_err());
        assert!(parse(&format!(
            r#"{{{base}, "output": "o", "snapshot_every": 10, "series_every": 15}}"#
        ))
        .is_err());
        assert!(parse(&format!(r#"{{{base}, "output": "o", "dt": -1}}"#)).is_err());
    }
}
