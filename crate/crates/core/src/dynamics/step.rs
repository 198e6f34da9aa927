use super::rhs::{acceleration_from, interaction, Interaction};
use super::{AgentState, DynamicsError, ModelSpec, StepPolicy};
use crate::domain::{Domain, Points};
use crate::spectral::max_weighted_degree;

/// Relative slack on the `dt * deg+ <= 1/2` test for fixed steps.
const CFL_SLACK: f64 = 1e-12;

/// Step size from a known maximal weighted degree.
///
/// Explicit variants assert the CFL bound for fixed steps; RK4-integrated
/// variants use the fixed step as given.
pub fn cfl_step_from_degree(
    deg_plus: f64,
    t: f64,
    spec: &ModelSpec,
    policy: &StepPolicy,
) -> Result<f64, DynamicsError> {
    match *policy {
        StepPolicy::Fixed { dt } => {
            if spec.is_discrete() && dt * deg_plus > 0.5 * (1.0 + CFL_SLACK) {
                Err(DynamicsError::CflViolation { t, dt, deg_plus })
            } else {
                Ok(dt)
            }
        }
        StepPolicy::CflAdaptive { dt_max, safety } => {
            if deg_plus > 0.0 {
                Ok(dt_max.min(safety * 0.5 / deg_plus))
            } else {
                Ok(dt_max)
            }
        }
    }
}

/// Time step satisfying `dt * max_i sum_j phi_ij m_j <= 1/2` at the current
/// state. For `mt` the weights and masses are the degree-normalized pair.
pub fn cfl_step(state: &AgentState, spec: &ModelSpec, policy: &StepPolicy, dom: &Domain) -> Result<f64, DynamicsError> {
    let inter = interaction(state, spec, dom)?;
    let deg_plus = max_weighted_degree(&inter.effective, &inter.masses)?;
    cfl_step_from_degree(deg_plus, state.t, spec, policy)
}

/// One explicit step: `x <- x + dt v`, `v <- v + dt a(x, v)`, everything on
/// the right evaluated at the pre-step state. `mt` masses are refreshed from
/// the new positions afterwards.
pub fn discrete_step(state: &AgentState, spec: &ModelSpec, dom: &Domain, dt: f64) -> Result<AgentState, DynamicsError> {
    let inter = interaction(state, spec, dom)?;
    discrete_step_with(state, spec, dom, dt, &inter)
}

/// [`discrete_step`] reusing an interaction already computed at `state`.
pub fn discrete_step_with(
    state: &AgentState,
    spec: &ModelSpec,
    dom: &Domain,
    dt: f64,
    inter: &Interaction,
) -> Result<AgentState, DynamicsError> {
    let accel = acceleration_from(inter, state, spec, dom)?;
    let mut positions = state.positions.axpy(dt, &state.velocities);
    fold_all(&mut positions, dom);
    let velocities = state.velocities.axpy(dt, &accel);
    let mut next = AgentState {
        t: state.t + dt,
        positions,
        velocities,
        masses: state.masses.clone(),
    };
    if spec.has_time_dependent_masses() {
        next.masses = super::mt_masses(&next, spec, dom)?;
    }
    Ok(next)
}

fn fold_all(p: &mut Points, dom: &Domain) {
    if dom.is_periodic() {
        for i in 0..p.len() {
            dom.fold(p.row_mut(i));
        }
    }
}

/// Classical four-stage Runge-Kutta step of `x' = v`, `v' = rhs(x, v)`.
/// Masses are held fixed across the stages.
pub fn rk4_step<F>(state: &AgentState, rhs: F, dt: f64, dom: &Domain) -> Result<AgentState, DynamicsError>
where
    F: Fn(&AgentState) -> Result<Points, DynamicsError>,
{
    let stage = |x: &Points, v: &Points| AgentState {
        t: state.t,
        positions: x.clone(),
        velocities: v.clone(),
        masses: state.masses.clone(),
    };
    let x0 = &state.positions;
    let v0 = &state.velocities;

    let k1x = v0.clone();
    let k1v = rhs(state)?;

    let x2 = x0.axpy(0.5 * dt, &k1x);
    let v2 = v0.axpy(0.5 * dt, &k1v);
    let k2v = rhs(&AgentState {
        t: state.t + 0.5 * dt,
        ..stage(&x2, &v2)
    })?;
    let k2x = v2;

    let x3 = x0.axpy(0.5 * dt, &k2x);
    let v3 = v0.axpy(0.5 * dt, &k2v);
    let k3v = rhs(&AgentState {
        t: state.t + 0.5 * dt,
        ..stage(&x3, &v3)
    })?;
    let k3x = v3;

    let x4 = x0.axpy(dt, &k3x);
    let v4 = v0.axpy(dt, &k3v);
    let k4v = rhs(&AgentState {
        t: state.t + dt,
        ..stage(&x4, &v4)
    })?;
    let k4x = v4;

    let combine = |y0: &Points, k1: &Points, k2: &Points, k3: &Points, k4: &Points| {
        let mut out = y0.clone();
        let h = dt / 6.0;
        for (idx, o) in out.as_mut_slice().iter_mut().enumerate() {
            let s = k1.as_slice()[idx] + 2.0 * k2.as_slice()[idx] + 2.0 * k3.as_slice()[idx] + k4.as_slice()[idx];
            *o += h * s;
        }
        out
    };
    let mut positions = combine(x0, &k1x, &k2x, &k3x, &k4x);
    fold_all(&mut positions, dom);
    let velocities = combine(v0, &k1v, &k2v, &k3v, &k4v);
    Ok(AgentState {
        t: state.t + dt,
        positions,
        velocities,
        masses: state.masses.clone(),
    })
}
