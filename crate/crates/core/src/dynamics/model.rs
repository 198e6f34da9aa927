use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::kernels::KernelSpec;

/// Model variant plus its variant-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    CsDiscrete {
        kernel: KernelSpec,
    },
    CsUniform {
        kernel: KernelSpec,
    },
    Mt {
        kernel: KernelSpec,
        /// Mass scale `L`; `None` means `sum_i deg_i(0)`, fixed at the start
        /// of a run.
        #[serde(rename = "L_scale", default, skip_serializing_if = "Option::is_none")]
        l_scale: Option<f64>,
    },
    SemiDiscreteCs {
        kernel: KernelSpec,
    },
    Anticipation {
        kernel: KernelSpec,
        potential: PotentialSpec,
        tau_anticipation: f64,
    },
}

impl ModelSpec {
    pub fn kernel(&self) -> &KernelSpec {
        match self {
            ModelSpec::CsDiscrete { kernel }
            | ModelSpec::CsUniform { kernel }
            | ModelSpec::Mt { kernel, .. }
            | ModelSpec::SemiDiscreteCs { kernel }
            | ModelSpec::Anticipation { kernel, .. } => kernel,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::CsDiscrete { .. } => "cs_discrete",
            ModelSpec::CsUniform { .. } => "cs_uniform",
            ModelSpec::Mt { .. } => "mt",
            ModelSpec::SemiDiscreteCs { .. } => "semi_discrete_cs",
            ModelSpec::Anticipation { .. } => "anticipation",
        }
    }

    /// Explicit alignment step (as opposed to an RK4-integrated ODE).
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            ModelSpec::CsDiscrete { .. } | ModelSpec::CsUniform { .. } | ModelSpec::Mt { .. }
        )
    }

    /// Masses evolve with the configuration.
    pub fn has_time_dependent_masses(&self) -> bool {
        matches!(self, ModelSpec::Mt { .. })
    }

    /// The model is stated for `m_i = 1/N`.
    pub fn requires_uniform_masses(&self) -> bool {
        matches!(self, ModelSpec::CsUniform { .. } | ModelSpec::Anticipation { .. })
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.kernel().validate()?;
        match self {
            ModelSpec::Mt { l_scale: Some(l), .. } if !(l.is_finite() && *l > 0.0) => {
                Err(DynamicsError::InvalidModel("l_scale must be positive".into()))
            }
            ModelSpec::Anticipation {
                potential,
                tau_anticipation,
                ..
            } => {
                if !(tau_anticipation.is_finite() && *tau_anticipation > 0.0) {
                    return Err(DynamicsError::InvalidModel("tau_anticipation must be positive".into()));
                }
                potential.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Radial pair potential `U(r)` with `U(0) = U'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// `U(r) = a r^2 / 2`.
    Quadratic {
        a: f64,
    },
    /// `U(r) = a w^2 (sqrt(1 + (r/w)^2) - 1)`: convex, confining, with
    /// `0 < U'' <= a`.
    SmoothWell {
        a: f64,
        width: f64,
    },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Quadratic { a } if ok(a) => Ok(()),
            PotentialSpec::SmoothWell { a, width } if ok(a) && ok(width) => Ok(()),
            _ => Err(DynamicsError::InvalidModel(
                "potential parameters must be positive".into(),
            )),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialSpec::Zero)
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { a } => 0.5 * a * r * r,
            PotentialSpec::SmoothWell { a, width } => {
                let s = r / width;
                // sqrt(1 + s^2) - 1 without cancellation
                a * width * width * (s * s / ((1.0 + s * s).sqrt() + 1.0))
            }
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { a } => a * r,
            PotentialSpec::SmoothWell { a, width } => {
                let s = r / width;
                a * r / (1.0 + s * s).sqrt()
            }
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { a } => a,
            PotentialSpec::SmoothWell { a, width } => {
                let s = r / width;
                a / (1.0 + s * s).powf(1.5)
            }
        }
    }
}

fn default_safety() -> f64 {
    0.9
}

/// How the time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepPolicy {
    Fixed {
        #[serde(rename = "dt_fixed")]
        dt: f64,
    },
    CflAdaptive {
        dt_max: f64,
        #[serde(default = "default_safety")]
        safety: f64,
    },
}

impl StepPolicy {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        match *self {
            StepPolicy::Fixed { dt } if dt.is_finite() && dt > 0.0 => Ok(()),
            StepPolicy::Fixed { .. } => Err(DynamicsError::InvalidModel("dt must be positive".into())),
            StepPolicy::CflAdaptive { dt_max, safety } => {
                if !(dt_max.is_finite() && dt_max > 0.0) {
                    Err(DynamicsError::InvalidModel("dt_max must be positive".into()))
                } else if !(safety > 0.0 && safety <= 1.0) {
                    Err(DynamicsError::InvalidModel("safety must lie in (0, 1]".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}
