use rayon::prelude::*;

use super::{AgentState, DynamicsError, ModelSpec};
use crate::domain::{Domain, Points};
use crate::kernels::{build_adjacency, AdjacencyMatrix};
use crate::spectral::MassVector;

/// Adjacency and masses at one instant, in the symmetric weighted form
/// `a_i = sum_j m_j phi_ij (v_j - v_i)`.
///
/// `raw` is the kernel evaluated at the positions. `effective` and `masses`
/// are what the spectral and ergodic diagnostics see: for `mt` they are
/// `phi_ij / (L m_i m_j)` with `m_i = deg_i / L`; for `anticipation` the
/// weights are scaled by `tau` and the masses are `1/N`.
#[derive(Debug, Clone)]
pub struct Interaction {
    pub raw: AdjacencyMatrix,
    pub effective: AdjacencyMatrix,
    pub masses: MassVector,
}

pub fn interaction(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<Interaction, DynamicsError> {
    let raw = build_adjacency(spec.kernel(), &state.positions, dom)?;
    let n = state.n();
    Ok(match spec {
        ModelSpec::CsDiscrete { .. } | ModelSpec::SemiDiscreteCs { .. } => Interaction {
            effective: raw.clone(),
            masses: state.masses.clone(),
            raw,
        },
        ModelSpec::CsUniform { .. } => Interaction {
            effective: raw.clone(),
            masses: MassVector::uniform(n),
            raw,
        },
        ModelSpec::Mt { l_scale, .. } => {
            let l = l_scale.ok_or(DynamicsError::UnresolvedScale)?;
            let masses = masses_from_degrees(&raw, l)?;
            let m = masses.as_slice();
            let effective = raw.scaled(|i, j| 1.0 / (l * (m[i] * m[j])));
            Interaction { raw, effective, masses }
        }
        ModelSpec::Anticipation { tau_anticipation, .. } => {
            let tau = *tau_anticipation;
            Interaction {
                effective: raw.scaled(|_, _| tau),
                masses: MassVector::uniform(n),
                raw,
            }
        }
    })
}

fn masses_from_degrees(raw: &AdjacencyMatrix, l: f64) -> Result<MassVector, DynamicsError> {
    let deg = raw.degrees();
    if let Some(i) = deg.iter().position(|d| *d <= 0.0) {
        return Err(DynamicsError::IsolatedAgent { i });
    }
    Ok(MassVector::new(deg.into_iter().map(|d| d / l).collect())?)
}

/// `m_i = deg_i / L` at the current positions.
pub fn mt_masses(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<MassVector, DynamicsError> {
    match spec {
        ModelSpec::Mt { kernel, l_scale } => {
            let l = l_scale.ok_or(DynamicsError::UnresolvedScale)?;
            let raw = build_adjacency(kernel, &state.positions, dom)?;
            masses_from_degrees(&raw, l)
        }
        other => Err(DynamicsError::InvalidModel(format!(
            "degree masses are defined for mt only, not {}",
            other.name()
        ))),
    }
}

/// `out_i = scale_i * sum_j coef(i, j) (v_j - v_i)`, rows in parallel with
/// `j` ascending inside each row.
fn align_rows(
    velocities: &Points,
    coef: impl Fn(usize, usize) -> f64 + Sync,
    scale: impl Fn(usize) -> f64 + Sync,
) -> Points {
    let n = velocities.len();
    let d = velocities.dim();
    let mut out = Points::zeros(n, d);
    out.as_mut_slice().par_chunks_mut(d).enumerate().for_each(|(i, acc)| {
        let vi = velocities.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let c = coef(i, j);
            if c == 0.0 {
                continue;
            }
            let vj = velocities.row(j);
            for k in 0..d {
                acc[k] += c * (vj[k] - vi[k]);
            }
        }
        let s = scale(i);
        for a in acc.iter_mut() {
            *a *= s;
        }
    });
    out
}

/// Alignment acceleration from a precomputed [`Interaction`].
pub(crate) fn alignment_from(
    inter: &Interaction,
    spec: &ModelSpec,
    velocities: &Points,
) -> Result<Points, DynamicsError> {
    let n = velocities.len();
    let raw = &inter.raw;
    Ok(match spec {
        ModelSpec::CsDiscrete { .. } | ModelSpec::SemiDiscreteCs { .. } => {
            let m = inter.masses.as_slice();
            align_rows(velocities, |i, j| m[j] * raw.get(i, j), |_| 1.0)
        }
        ModelSpec::CsUniform { .. } => {
            let inv_n = 1.0 / n as f64;
            align_rows(velocities, |i, j| raw.get(i, j), |_| inv_n)
        }
        ModelSpec::Mt { .. } => {
            let deg = raw.degrees();
            if let Some(i) = deg.iter().position(|d| *d <= 0.0) {
                return Err(DynamicsError::IsolatedAgent { i });
            }
            align_rows(velocities, |i, j| raw.get(i, j), |i| 1.0 / deg[i])
        }
        ModelSpec::Anticipation { tau_anticipation, .. } => {
            let s = tau_anticipation / n as f64;
            align_rows(velocities, |i, j| raw.get(i, j), |_| s)
        }
    })
}

/// Alignment acceleration of every agent:
///
/// * C-S variants: `a_i = sum_j m_j phi_ij (v_j - v_i)` (`m_j = 1/N` for
///   `cs_uniform`);
/// * `mt`: `a_i = (1/deg_i) sum_j phi_ij (v_j - v_i)`;
/// * `anticipation`: the alignment part `(tau/N) sum_j phi_ij (v_j - v_i)`.
pub fn alignment_rhs(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<Points, DynamicsError> {
    let inter = interaction(state, spec, dom)?;
    alignment_from(&inter, spec, &state.velocities)
}

/// Pair-potential force `-(1/N) sum_j grad U(|x_j - x_i|)`, with the
/// gradient taken as `U'(r) (x_i - x_j) / r` and zero at `r = 0`.
fn potential_force(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Points {
    let n = state.n();
    let d = state.dim();
    let mut out = Points::zeros(n, d);
    let ModelSpec::Anticipation { potential, .. } = spec else {
        return out;
    };
    if potential.is_zero() {
        return out;
    }
    let inv_n = 1.0 / n as f64;
    let x = &state.positions;
    out.as_mut_slice().par_chunks_mut(d).enumerate().for_each(|(i, acc)| {
        let mut disp = vec![0.0; d];
        for j in 0..n {
            if j == i {
                continue;
            }
            // disp = x_j - x_i
            dom.displacement_into(x.row(i), x.row(j), &mut disp);
            let r = disp.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r == 0.0 {
                continue;
            }
            let w = potential.derivative(r) / r;
            for k in 0..d {
                acc[k] += w * disp[k];
            }
        }
        for a in acc.iter_mut() {
            *a *= inv_n;
        }
    });
    out
}

/// Full right side of the anticipation model: potential force plus
/// `tau`-scaled alignment, for uniform masses.
pub fn anticipation_rhs(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<Points, DynamicsError> {
    if !matches!(spec, ModelSpec::Anticipation { .. }) {
        return Err(DynamicsError::InvalidModel(format!(
            "anticipation_rhs called for {}",
            spec.name()
        )));
    }
    let align = alignment_rhs(state, spec, dom)?;
    let force = potential_force(state, spec, dom);
    Ok(force.axpy(1.0, &align))
}

/// The velocity right side for any variant.
pub fn acceleration(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<Points, DynamicsError> {
    match spec {
        ModelSpec::Anticipation { .. } => anticipation_rhs(state, spec, dom),
        _ => alignment_rhs(state, spec, dom),
    }
}

pub(crate) fn acceleration_from(
    inter: &Interaction,
    state: &AgentState,
    spec: &ModelSpec,
    dom: &Domain,
) -> Result<Points, DynamicsError> {
    let align = alignment_from(inter, spec, &state.velocities)?;
    Ok(match spec {
        ModelSpec::Anticipation { .. } => potential_force(state, spec, dom).axpy(1.0, &align),
        _ => align,
    })
}
