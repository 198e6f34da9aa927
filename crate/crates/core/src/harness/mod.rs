//! Scenario configuration, presets, and the run-and-report driver behind the
//! command line.

mod config;
mod output;
mod presets;

pub use config::{parse_config, ConfigError, ConfigIssue, EnvelopeRequest, OutputSpec, ScenarioConfig};
pub use output::{write_outputs, Manifest};
pub use presets::{list_presets, preset, preset_source};

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    envelope_ergodic, envelope_semidiscrete, envelope_spectral, flocking_envelope, spectral_tail_bound,
    DiagnosticsError, DiagnosticsSeries, EnvelopeReport, FlockParams,
};
use crate::dynamics::{run, DynamicsError, RunOutput, RunParams};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("initial conditions: {0}")]
    Init(DynamicsError),
    #[error("envelope evaluation: {0}")]
    Envelope(#[from] DiagnosticsError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Violation,
    Error,
}

/// Outcome of a scenario: run status plus every envelope report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub steps: usize,
    pub t_reached: f64,
    pub envelopes: Vec<EnvelopeReport>,
}

impl Verdict {
    /// 0 pass, 1 envelope violation, 3 run error.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Violation => 1,
            Status::Error => 3,
        }
    }
}

/// Evaluate the requested envelopes on a series.
pub fn evaluate_envelopes(
    config: &ScenarioConfig,
    series: &DiagnosticsSeries,
) -> Result<Vec<EnvelopeReport>, DiagnosticsError> {
    let mut out = Vec::new();
    for req in &config.envelopes {
        match *req {
            EnvelopeRequest::Spectral { tol } => out.push(envelope_spectral(series, tol)?),
            EnvelopeRequest::Ergodic { tol } => out.push(envelope_ergodic(series, tol)?),
            EnvelopeRequest::Semidiscrete { tol } => out.push(envelope_semidiscrete(series, tol)?),
            EnvelopeRequest::Flock { tol, t0_fraction } => {
                let beta = config.model.kernel().powerlaw_beta().ok_or_else(|| {
                    DiagnosticsError::Unsupported("flock envelope needs a metric_powerlaw kernel".into())
                })?;
                out.extend(flocking_envelope(
                    series,
                    &FlockParams {
                        beta,
                        t0_fraction,
                        tolerance: tol,
                    },
                )?);
            }
            EnvelopeRequest::HeavyTail { tol } => {
                let beta = config.model.kernel().powerlaw_beta().ok_or_else(|| {
                    DiagnosticsError::Unsupported("heavy_tail check needs a metric_powerlaw kernel".into())
                })?;
                out.push(spectral_tail_bound(series, beta, tol)?);
            }
        }
    }
    Ok(out)
}

/// Draw the initial state, run, and judge the envelopes. No files are
/// touched.
pub fn simulate(config: &ScenarioConfig) -> Result<(RunOutput, Verdict), HarnessError> {
    config.validate()?;
    let dom = &config.domain;
    let initial = config
        .init
        .generate(config.n, dom, config.seed)
        .map_err(HarnessError::Init)?;
    let snapshot_every = if config.outputs.trajectory {
        Some(config.outputs.snapshot_every.unwrap_or(1))
    } else {
        None
    };
    let params = RunParams {
        t_final: config.t_final,
        step: config.step,
        record_stride: config.record_stride,
        snapshot_every,
        max_steps: config.max_steps,
    };
    let out = run(&initial, &config.model, dom, &params);
    let envelopes = if out.series.records.is_empty() {
        Vec::new()
    } else {
        evaluate_envelopes(config, &out.series)?
    };
    let status = if out.error.is_some() {
        Status::Error
    } else if envelopes.iter().any(|e| e.violated) {
        Status::Violation
    } else {
        Status::Pass
    };
    let verdict = Verdict {
        name: config.name.clone(),
        status,
        error: out.error.as_ref().map(|e| e.to_string()),
        steps: out.steps,
        t_reached: out.final_state.t,
        envelopes,
    };
    Ok((out, verdict))
}

/// Result of [`run_scenario`].
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub verdict: Verdict,
    pub output: RunOutput,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl ScenarioOutcome {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

/// Run a scenario and write its telemetry, verdict and manifest into
/// `dir` (or `outputs.dir`, or `runs/<name>`).
pub fn run_scenario(config: &ScenarioConfig, dir: Option<PathBuf>) -> Result<ScenarioOutcome, HarnessError> {
    let started = Instant::now();
    let (output, verdict) = simulate(config)?;
    let wall = started.elapsed().as_secs_f64();
    let dir = dir
        .or_else(|| config.outputs.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(&config.name));
    let files = write_outputs(&dir, config, &output, &verdict, wall)?;
    Ok(ScenarioOutcome {
        verdict,
        output,
        dir,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consensus_preset_passes() {
        let c = preset("consensus").unwrap().unwrap();
        let (out, v) = simulate(&c).unwrap();
        assert_eq!(v.status, Status::Pass, "{v:?}");
        assert!(out.series.records.iter().all(|r| r.d_e == 0.0));
    }

    #[test]
    fn cfl_violation_is_a_run_error() {
        let mut c = preset("two_agent_worked").unwrap().unwrap();
        c.step = crate::dynamics::StepPolicy::Fixed { dt: 1.0 };
        let (out, v) = simulate(&c).unwrap();
        assert_eq!(v.exit_code(), 3);
        assert!(v.error.unwrap().contains("CFL"));
        assert_eq!(out.series.records.len(), 1);
    }

    #[test]
    fn empty_run_has_one_record() {
        let mut c = preset("two_agent_worked").unwrap().unwrap();
        c.t_final = 0.0;
        let (out, v) = simulate(&c).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert_eq!(out.series.records.len(), 1);
        assert_eq!(out.steps, 0);
    }
}
