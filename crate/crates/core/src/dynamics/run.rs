use serde::{Deserialize, Serialize};

use super::rhs::{interaction, Interaction};
use super::step::{cfl_step_from_degree, discrete_step_with, rk4_step};
use super::{acceleration, AgentState, DynamicsError, ModelSpec, StepPolicy};
use crate::diagnostics::{
    anticipation_energy, energy_fluctuation, enstrophy_with, mean_velocity, momentum, position_diameter,
    velocity_diameter, DiagnosticsRecord, DiagnosticsSeries,
};
use crate::domain::Domain;
use crate::kernels::build_adjacency;
use crate::spectral::{
    default_gap_tolerance, ergodicity_coefficient, max_weighted_degree, spectral_gap, weighted_laplacian, MassVector,
};

/// Time-stepping controls for [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub t_final: f64,
    pub step: StepPolicy,
    /// Record every `record_stride`-th step; the final state is always recorded.
    pub record_stride: usize,
    /// Keep a trajectory snapshot every this many steps (and at the end).
    pub snapshot_every: Option<usize>,
    pub max_steps: usize,
}

/// Positions, velocities and masses at one recorded instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
}

impl Snapshot {
    pub fn of(step: usize, s: &AgentState) -> Self {
        Snapshot {
            step,
            t: s.t,
            positions: s.positions.to_rows(),
            velocities: s.velocities.to_rows(),
            masses: s.masses.as_slice().to_vec(),
        }
    }
}

/// Snapshots in increasing time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub snapshots: Vec<Snapshot>,
}

/// One trajectory row `(t, i, x_i, v_i, m_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow<'a> {
    pub t: f64,
    pub i: usize,
    pub x: &'a [f64],
    pub v: &'a [f64],
    pub m: f64,
}

impl TrajectoryLog {
    pub fn rows(&self) -> impl Iterator<Item = TrajectoryRow<'_>> {
        self.snapshots.iter().flat_map(|s| {
            (0..s.masses.len()).map(move |i| TrajectoryRow {
                t: s.t,
                i,
                x: &s.positions[i],
                v: &s.velocities[i],
                m: s.masses[i],
            })
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: DiagnosticsSeries,
    pub trajectory: TrajectoryLog,
    pub final_state: AgentState,
    /// The model with every default resolved (e.g. the `mt` scale `L`).
    pub model: ModelSpec,
    pub steps: usize,
    /// The error that stopped the run early, if any.
    pub error: Option<DynamicsError>,
}

/// Fill in `L = sum_i deg_i(0)` for `mt` and set the initial masses from the
/// degrees. Uniform-mass variants must start with equal masses.
pub fn prepare(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<(AgentState, ModelSpec), DynamicsError> {
    spec.validate()?;
    let mut state = state.clone();
    let mut spec = spec.clone();
    if let ModelSpec::Mt { kernel, l_scale } = &mut spec {
        if l_scale.is_none() {
            let raw = build_adjacency(kernel, &state.positions, dom)?;
            *l_scale = Some(raw.degrees().iter().sum());
        }
    }
    if spec.has_time_dependent_masses() {
        state.masses = super::mt_masses(&state, &spec, dom)?;
    }
    if spec.requires_uniform_masses() {
        let n = state.n();
        let m0 = 1.0 / n as f64;
        if state.masses.as_slice().iter().any(|m| (m - m0).abs() > 1e-12 * m0) {
            return Err(DynamicsError::InvalidModel(format!(
                "{} requires uniform masses 1/N",
                spec.name()
            )));
        }
        state.masses = MassVector::uniform(n);
    }
    Ok((state, spec))
}

/// Scalars computed at the pre-step state.
struct Probe {
    inter: Interaction,
    lambda2: f64,
    erg: f64,
    deg_plus: f64,
}

fn probe(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<Probe, DynamicsError> {
    let inter = interaction(state, spec, dom)?;
    let lap = if inter.effective.is_symmetric() {
        weighted_laplacian(&inter.effective, &inter.masses)?
    } else {
        weighted_laplacian(&inter.effective.symmetric_part(), &inter.masses)?
    };
    let lambda2 = spectral_gap(&lap, default_gap_tolerance(&lap))?;
    let erg = ergodicity_coefficient(&inter.effective, &inter.masses)?;
    let deg_plus = max_weighted_degree(&inter.effective, &inter.masses)?;
    Ok(Probe {
        inter,
        lambda2,
        erg,
        deg_plus,
    })
}

struct Totals {
    lambda2: f64,
    lambda2_trap: f64,
    erg: f64,
    mass: f64,
}

fn record(
    step: usize,
    state: &AgentState,
    spec: &ModelSpec,
    dom: &Domain,
    p: &Probe,
    dt: f64,
    cum: &Totals,
) -> Result<DiagnosticsRecord, DynamicsError> {
    let diag = |e: crate::diagnostics::DiagnosticsError| DynamicsError::InvalidModel(e.to_string());
    let d_e_potential = match spec {
        ModelSpec::Anticipation { .. } => Some(anticipation_energy(state, spec, dom).map_err(diag)?),
        _ => None,
    };
    Ok(DiagnosticsRecord {
        step,
        t: state.t,
        d_e: energy_fluctuation(state).map_err(diag)?,
        d_v: velocity_diameter(state),
        diameter: position_diameter(state, dom),
        enstrophy: enstrophy_with(&state.velocities, &p.inter.masses, &p.inter.effective).map_err(diag)?,
        lambda2: p.lambda2,
        erg: p.erg,
        deg_plus: p.deg_plus,
        dt_used: dt,
        cum_lambda2: cum.lambda2,
        cum_lambda2_trap: cum.lambda2_trap,
        cum_erg: cum.erg,
        cum_mass: cum.mass,
        total_mass: state.masses.total(),
        d_e_potential,
        momentum: momentum(&state.velocities, &state.masses),
        mean_velocity: mean_velocity(&state.velocities, &state.masses),
    })
}

/// Alternate diagnose and step until `t_final`.
///
/// Each record carries the scalars of the state it describes and the step
/// taken from it. An error stops the run; the records gathered so far, plus
/// the last fully diagnosed state, are kept.
pub fn run(initial: &AgentState, spec: &ModelSpec, dom: &Domain, params: &RunParams) -> RunOutput {
    let stride = params.record_stride.max(1);
    let dim = initial.dim();
    let mut out = RunOutput {
        series: DiagnosticsSeries {
            dim,
            n: initial.n(),
            time_dependent_masses: spec.has_time_dependent_masses(),
            records: Vec::new(),
        },
        trajectory: TrajectoryLog::default(),
        final_state: initial.clone(),
        model: spec.clone(),
        steps: 0,
        error: None,
    };
    let (mut state, spec) = match prepare(initial, spec, dom) {
        Ok(x) => x,
        Err(e) => {
            out.error = Some(e);
            return out;
        }
    };
    out.model = spec.clone();
    let mut cum = Totals {
        lambda2: 0.0,
        lambda2_trap: 0.0,
        erg: 0.0,
        mass: 0.0,
    };
    let mut prev: Option<(f64, f64)> = None; // (lambda2, dt) of the previous step
    let mut pending: Option<DiagnosticsRecord> = None;
    let mut step = 0usize;

    let result: Result<(), DynamicsError> = (|| loop {
        let p = probe(&state, &spec, dom)?;
        if let Some((l_prev, dt_prev)) = prev {
            cum.lambda2_trap += 0.5 * (l_prev + p.lambda2) * dt_prev;
        }
        let remaining = params.t_final - state.t;
        let mut dt = match cfl_step_from_degree(p.deg_plus, state.t, &spec, &params.step) {
            Ok(dt) => dt,
            Err(e) => {
                out.series
                    .records
                    .push(record(step, &state, &spec, dom, &p, 0.0, &cum)?);
                pending = None;
                return Err(e);
            }
        };
        let finished = remaining <= 1e-9 * dt;
        let limited = !finished && step >= params.max_steps;
        let done = finished || limited;
        if done {
            dt = 0.0;
        } else if dt >= remaining * (1.0 - 1e-9) {
            dt = remaining;
        }
        let rec = record(step, &state, &spec, dom, &p, dt, &cum)?;
        if let Some(k) = params.snapshot_every {
            if step.is_multiple_of(k.max(1)) || done {
                out.trajectory.snapshots.push(Snapshot::of(step, &state));
            }
        }
        if step.is_multiple_of(stride) || done {
            out.series.records.push(rec);
            pending = None;
        } else {
            pending = Some(rec);
        }
        if limited {
            return Err(DynamicsError::StepLimit {
                steps: step,
                t: state.t,
                t_final: params.t_final,
            });
        }
        if done {
            return Ok(());
        }

        let next = if spec.is_discrete() {
            discrete_step_with(&state, &spec, dom, dt, &p.inter)?
        } else {
            rk4_step(&state, |st: &AgentState| acceleration(st, &spec, dom), dt, dom)?
        };
        cum.lambda2 += p.lambda2 * dt;
        cum.erg += p.erg * dt;
        cum.mass += state.masses.total() * dt;
        prev = Some((p.lambda2, dt));
        state = next;
        step += 1;
    })();

    if let Err(e) = result {
        if let Some(r) = pending.take() {
            out.series.records.push(r);
        }
        out.error = Some(e);
    }
    out.final_state = state;
    out.steps = step;
    out
}
