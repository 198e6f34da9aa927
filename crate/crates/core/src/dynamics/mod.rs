//! Agent state and the model variants that advance it.
//!
//! Five variants share one state type:
//!
//! * `cs_discrete`: explicit alignment step with general constant masses;
//! * `cs_uniform`: the same with `m_i = 1/N`;
//! * `mt`: degree-normalized alignment, equivalent to a symmetric weighted
//!   model with time-dependent masses `m_i = deg_i / L`;
//! * `semi_discrete_cs`: the continuous-time limit, integrated with RK4;
//! * `anticipation`: pairwise potential forces plus a scaled alignment term,
//!   integrated with RK4.

mod init;
mod model;
mod rhs;
mod run;
mod step;

pub use init::{InitSpec, MassInit, PositionInit, VelocityInit};
pub use model::{ModelSpec, PotentialSpec, StepPolicy};
pub use rhs::{acceleration, alignment_rhs, anticipation_rhs, interaction, mt_masses, Interaction};
pub use run::{prepare, run, RunOutput, RunParams, Snapshot, TrajectoryLog, TrajectoryRow};
pub use step::{cfl_step, cfl_step_from_degree, discrete_step, discrete_step_with, rk4_step};

use thiserror::Error;

use crate::domain::{GeometryError, Points};
use crate::kernels::KernelError;
use crate::spectral::{MassVector, SpectralError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("agent {i} is isolated (zero degree) under degree normalization")]
    IsolatedAgent { i: usize },
    #[error("CFL violated at t = {t}: dt = {dt} with deg+ = {deg_plus} gives dt*deg+ = {} > 1/2", dt * deg_plus)]
    CflViolation { t: f64, dt: f64, deg_plus: f64 },
    #[error("degree normalization scale L has not been resolved")]
    UnresolvedScale,
    #[error("state has {positions} positions, {velocities} velocities and {masses} masses")]
    InconsistentState {
        positions: usize,
        velocities: usize,
        masses: usize,
    },
    #[error("step limit {steps} reached at t = {t} before t_final = {t_final}")]
    StepLimit { steps: usize, t: f64, t_final: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Positions, velocities and masses of `N` agents at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub t: f64,
    pub positions: Points,
    pub velocities: Points,
    pub masses: MassVector,
}

impl AgentState {
    pub fn new(positions: Points, velocities: Points, masses: MassVector) -> Result<Self, DynamicsError> {
        if positions.len() != velocities.len() || positions.len() != masses.len() || positions.dim() != velocities.dim()
        {
            return Err(DynamicsError::InconsistentState {
                positions: positions.len(),
                velocities: velocities.len(),
                masses: masses.len(),
            });
        }
        Ok(AgentState {
            t: 0.0,
            positions,
            velocities,
            masses,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn dim(&self) -> usize {
        self.positions.dim()
    }
}
