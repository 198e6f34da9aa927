use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::dynamics::{InitSpec, MassInit, ModelSpec, PotentialSpec, StepPolicy};
use crate::kernels::KernelSpec;

fn one() -> usize {
    1
}

fn default_max_steps() -> usize {
    10_000_000
}

fn tol_1e8() -> f64 {
    1e-8
}

fn tol_1e6() -> f64 {
    1e-6
}

fn t0_fraction() -> f64 {
    0.2
}

/// An envelope to check after the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeRequest {
    Spectral {
        #[serde(default = "tol_1e8")]
        tol: f64,
    },
    Ergodic {
        #[serde(default = "tol_1e8")]
        tol: f64,
    },
    Semidiscrete {
        #[serde(default = "tol_1e6")]
        tol: f64,
    },
    Flock {
        #[serde(default = "tol_1e8")]
        tol: f64,
        #[serde(default = "t0_fraction")]
        t0_fraction: f64,
    },
    HeavyTail {
        #[serde(default = "tol_1e8")]
        tol: f64,
    },
}

impl EnvelopeRequest {
    pub fn name(&self) -> &'static str {
        match self {
            EnvelopeRequest::Spectral { .. } => "spectral",
            EnvelopeRequest::Ergodic { .. } => "ergodic",
            EnvelopeRequest::Semidiscrete { .. } => "semidiscrete",
            EnvelopeRequest::Flock { .. } => "flock",
            EnvelopeRequest::HeavyTail { .. } => "heavy_tail",
        }
    }

    pub fn tol(&self) -> f64 {
        match *self {
            EnvelopeRequest::Spectral { tol }
            | EnvelopeRequest::Ergodic { tol }
            | EnvelopeRequest::Semidiscrete { tol }
            | EnvelopeRequest::Flock { tol, .. }
            | EnvelopeRequest::HeavyTail { tol } => tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory; defaults to `runs/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Write `trajectory.jsonl`.
    #[serde(default)]
    pub trajectory: bool,
    /// Steps between trajectory snapshots (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// Write `moments.csv` for the final state at this many cells per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments_resolution: Option<usize>,
}

/// A complete, reproducible scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub domain: Domain,
    #[serde(rename = "N")]
    pub n: usize,
    /// Optional; must equal the domain dimension when given.
    #[serde(rename = "d", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    pub model: ModelSpec,
    pub step: StepPolicy,
    #[serde(rename = "T_final")]
    pub t_final: f64,
    #[serde(default = "one")]
    pub record_stride: usize,
    pub init: InitSpec,
    #[serde(default)]
    pub envelopes: Vec<EnvelopeRequest>,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

/// One validation failure, tagged with the offending path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> Vec<ConfigIssue> {
        match self {
            ConfigError::Parse { path, message } => vec![ConfigIssue {
                path: path.clone(),
                message: message.clone(),
            }],
            ConfigError::Invalid(v) => v.clone(),
        }
    }
}

/// Parse and validate a JSON scenario. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Parse {
            path: if path == "." { "$".into() } else { format!("$.{path}") },
            message: e.into_inner().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn uniform_unit_masses(m: &MassInit, n: usize) -> bool {
    match m {
        MassInit::Uniform { total } => *total == 1.0,
        MassInit::Explicit { values } => values.iter().all(|x| (x * n as f64 - 1.0).abs() <= 1e-12),
        MassInit::Dirichlet { .. } => false,
    }
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Every semantic check, collected rather than stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut push = |path: &str, message: String| {
            issues.push(ConfigIssue {
                path: path.to_string(),
                message,
            })
        };
        if self.name.trim().is_empty() {
            push("$.name", "must not be empty".into());
        }
        let domain_ok = match self.domain.validate() {
            Ok(()) => true,
            Err(e) => {
                push("$.domain", e.to_string());
                false
            }
        };
        if self.n == 0 {
            push("$.N", "need at least one agent".into());
        }
        if let Some(d) = self.d {
            if d != self.domain.dim() {
                push(
                    "$.d",
                    format!("d = {d} but the domain has dimension {}", self.domain.dim()),
                );
            }
        }
        if let Err(e) = self.model.validate() {
            push("$.model", e.to_string());
        }
        if let Err(e) = self.step.validate() {
            push("$.step", e.to_string());
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            push("$.T_final", "must be finite and nonnegative".into());
        }
        if self.record_stride == 0 {
            push("$.record_stride", "must be at least 1".into());
        }
        if self.max_steps == 0 {
            push("$.max_steps", "must be at least 1".into());
        }
        if domain_ok && self.n > 0 {
            if let Err(e) = self.init.validate(self.n, &self.domain) {
                push("$.init", e.to_string());
            }
        }
        if self.model.requires_uniform_masses() && !uniform_unit_masses(&self.init.masses, self.n) {
            push(
                "$.init.masses",
                format!("{} is stated for uniform masses 1/N", self.model.name()),
            );
        }
        if self.outputs.snapshot_every == Some(0) {
            push("$.outputs.snapshot_every", "must be at least 1".into());
        }
        if self.outputs.moments_resolution == Some(0) {
            push("$.outputs.moments_resolution", "must be at least 1".into());
        }
        for (k, env) in self.envelopes.iter().enumerate() {
            let path = format!("$.envelopes[{k}]");
            if !(env.tol().is_finite() && env.tol() >= 0.0) {
                push(&path, "tol must be nonnegative".into());
            }
            if let Some(msg) = self.envelope_problem(env) {
                push(&path, msg);
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }

    /// Why an envelope does not apply to this scenario, if it does not.
    fn envelope_problem(&self, env: &EnvelopeRequest) -> Option<String> {
        let m = &self.model;
        let kernel = m.kernel();
        let potential_free = match m {
            ModelSpec::Anticipation { potential, .. } => *potential == PotentialSpec::Zero,
            _ => true,
        };
        let name = env.name();
        if !potential_free {
            return Some(format!(
                "{name} envelope does not apply to anticipation with a nonzero potential"
            ));
        }
        match env {
            EnvelopeRequest::Spectral { .. } => {
                if !m.is_discrete() {
                    Some(format!(
                        "spectral envelope is for explicit variants; {} is integrated with RK4 (use semidiscrete)",
                        m.name()
                    ))
                } else if m.has_time_dependent_masses() {
                    Some("spectral envelope assumes constant masses; mt has time-dependent masses (use ergodic)".into())
                } else if !kernel.is_symmetric() {
                    Some("spectral envelope needs a symmetric kernel".into())
                } else {
                    None
                }
            }
            EnvelopeRequest::Semidiscrete { .. } => {
                if m.is_discrete() {
                    Some(format!(
                        "semidiscrete envelope is for RK4-integrated variants, not {}",
                        m.name()
                    ))
                } else if !kernel.is_symmetric() {
                    Some("semidiscrete envelope needs a symmetric kernel".into())
                } else {
                    None
                }
            }
            EnvelopeRequest::Ergodic { .. } => None,
            EnvelopeRequest::Flock { t0_fraction, .. } => {
                if !(0.0..=1.0).contains(t0_fraction) {
                    return Some("t0_fraction must lie in [0, 1]".into());
                }
                long_range_problem(kernel, "flock")
            }
            EnvelopeRequest::HeavyTail { .. } => {
                if m.has_time_dependent_masses() {
                    return Some("heavy_tail check assumes constant masses".into());
                }
                long_range_problem(kernel, "heavy_tail")
            }
        }
    }
}

fn long_range_problem(kernel: &KernelSpec, what: &str) -> Option<String> {
    match kernel.powerlaw_beta() {
        None => Some(format!("{what} envelope needs a metric_powerlaw kernel (1 + r)^-beta")),
        Some(b) if b > 1.0 => Some(format!(
            "{what} envelope needs a long-range kernel with beta <= 1; got beta = {b}"
        )),
        _ => None,
    }
}
