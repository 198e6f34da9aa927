//! Fluctuation functionals, per-step diagnostics records and the decay
//! envelopes they are checked against.

mod envelopes;

pub use envelopes::{
    envelope_ergodic, envelope_semidiscrete, envelope_spectral, flocking_envelope, spectral_tail_bound, EnvelopeKind,
    EnvelopeReport, FlockParams,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, Points};
use crate::dynamics::{AgentState, ModelSpec};
use crate::kernels::AdjacencyMatrix;
use crate::spectral::MassVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("energy fluctuation forms disagree: pairwise {pairwise:e}, mean-deviation {mean:e}")]
    Inconsistent { pairwise: f64, mean: f64 },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("flocking envelope needs beta <= 1 (long-range hypothesis), got {0}")]
    BetaOutOfRange(f64),
    #[error("empty diagnostics series")]
    EmptySeries,
    #[error("{0}")]
    Unsupported(String),
}

/// `sum_i m_i v_i`.
pub fn momentum(v: &Points, m: &MassVector) -> Vec<f64> {
    let mut p = vec![0.0; v.dim()];
    for (i, row) in v.rows().enumerate() {
        for (pk, vk) in p.iter_mut().zip(row) {
            *pk += m.get(i) * vk;
        }
    }
    p
}

/// `sum_i m_i v_i / M`.
pub fn mean_velocity(v: &Points, m: &MassVector) -> Vec<f64> {
    let mut p = momentum(v, m);
    for x in p.iter_mut() {
        *x /= m.total();
    }
    p
}

/// Shortest round-trip text for a float; scientific notation outside
/// `[1e-4, 1e15)`.
pub(crate) fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(1/M) sum_i m_i |v_i - vbar|^2`.
pub fn energy_fluctuation_mean_form(v: &Points, m: &MassVector) -> f64 {
    let bar = mean_velocity(v, m);
    v.rows()
        .enumerate()
        .map(|(i, r)| m.get(i) * sq_dist(r, &bar))
        .sum::<f64>()
        / m.total()
}

/// `(1/2M^2) sum_{i,j} m_i m_j |v_i - v_j|^2`.
pub fn energy_fluctuation_pairwise(v: &Points, m: &MassVector) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let vi = v.row(i);
        let mut row = 0.0;
        for j in i + 1..n {
            row += m.get(j) * sq_dist(vi, v.row(j));
        }
        s += m.get(i) * row;
    }
    s / (m.total() * m.total())
}

/// Energy fluctuation with both forms cross-checked. The pairwise value is
/// returned.
///
/// The forms agree to `1e-12` relative, plus an absolute floor of a few ulps
/// of the kinetic energy `sum m |v|^2 / M`: once the fluctuation is far below
/// the squared mean velocity, subtracting the mean loses that many digits.
pub fn energy_fluctuation_with(v: &Points, m: &MassVector) -> Result<f64, DiagnosticsError> {
    if v.len() != m.len() {
        return Err(DiagnosticsError::SizeMismatch(format!(
            "{} velocities, {} masses",
            v.len(),
            m.len()
        )));
    }
    let pairwise = energy_fluctuation_pairwise(v, m);
    let mean = energy_fluctuation_mean_form(v, m);
    let kinetic = v
        .rows()
        .enumerate()
        .map(|(i, r)| m.get(i) * sq_dist(r, &vec![0.0; r.len()]))
        .sum::<f64>()
        / m.total();
    let allowed = 1e-12 * pairwise.max(mean) + 64.0 * f64::EPSILON * kinetic;
    if (pairwise - mean).abs() > allowed {
        return Err(DiagnosticsError::Inconsistent { pairwise, mean });
    }
    Ok(pairwise)
}

pub fn energy_fluctuation(state: &AgentState) -> Result<f64, DiagnosticsError> {
    energy_fluctuation_with(&state.velocities, &state.masses)
}

fn diameter(p: &Points, dist: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let n = p.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(dist(p.row(i), p.row(j)));
        }
    }
    best
}

/// `max_{i,j} |v_i - v_j|`.
pub fn velocity_diameter(state: &AgentState) -> f64 {
    diameter(&state.velocities, |a, b| sq_dist(a, b).sqrt())
}

/// `max_{i,j} |x_i - x_j|` in the domain metric.
pub fn position_diameter(state: &AgentState, dom: &Domain) -> f64 {
    diameter(&state.positions, |a, b| dom.distance_unchecked(a, b))
}

/// `(1/M) sum_{i,j} phi_ij |v_i - v_j|^2 m_i m_j`.
pub fn enstrophy_with(v: &Points, m: &MassVector, a: &AdjacencyMatrix) -> Result<f64, DiagnosticsError> {
    let n = v.len();
    if a.n() != n || m.len() != n {
        return Err(DiagnosticsError::SizeMismatch(format!(
            "{} velocities, {} masses, {}x{} adjacency",
            n,
            m.len(),
            a.n(),
            a.n()
        )));
    }
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                row += a.get(i, j) * m.get(j) * sq_dist(v.row(i), v.row(j));
            }
        }
        s += m.get(i) * row;
    }
    Ok(s / m.total())
}

pub fn enstrophy(state: &AgentState, a: &AdjacencyMatrix) -> Result<f64, DiagnosticsError> {
    enstrophy_with(&state.velocities, &state.masses, a)
}

/// `(1/2N) sum_i |v_i - vbar|^2 + (1/2N^2) sum_{i,j} U(|x_i - x_j|)`.
pub fn anticipation_energy(state: &AgentState, spec: &ModelSpec, dom: &Domain) -> Result<f64, DiagnosticsError> {
    let ModelSpec::Anticipation { potential, .. } = spec else {
        return Err(DiagnosticsError::Unsupported(format!(
            "anticipation energy is defined for the anticipation model, not {}",
            spec.name()
        )));
    };
    let n = state.n();
    let uniform = MassVector::uniform(n);
    let kinetic = 0.5 * energy_fluctuation_mean_form(&state.velocities, &uniform);
    let mut pot = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pot += potential.value(dom.distance_unchecked(state.positions.row(i), state.positions.row(j)));
        }
    }
    // the double sum counts every unordered pair twice
    Ok(kinetic + pot / (n * n) as f64)
}

/// Rate `-(tau/2N^2) sum_{i,j} phi_ij |v_i - v_j|^2` at which alignment
/// dissipates the anticipation energy.
pub fn anticipation_dissipation(
    state: &AgentState,
    spec: &ModelSpec,
    phi: &AdjacencyMatrix,
) -> Result<f64, DiagnosticsError> {
    let ModelSpec::Anticipation { tau_anticipation, .. } = spec else {
        return Err(DiagnosticsError::Unsupported(
            "dissipation rate needs the anticipation model".into(),
        ));
    };
    let n = state.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += phi.get(i, j) * sq_dist(state.velocities.row(i), state.velocities.row(j));
            }
        }
    }
    Ok(-tau_anticipation * s / (2.0 * (n * n) as f64))
}

/// One row of telemetry, recorded before the step taken from time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub d_e: f64,
    pub d_v: f64,
    pub diameter: f64,
    pub enstrophy: f64,
    pub lambda2: f64,
    pub erg: f64,
    pub deg_plus: f64,
    /// Step taken from this record to the next state (0 on the last record).
    pub dt_used: f64,
    /// `sum_{k<n} lambda2(t_k) dt_k`.
    pub cum_lambda2: f64,
    /// Trapezoidal `int_0^t lambda2`.
    pub cum_lambda2_trap: f64,
    /// `sum_{k<n} erg(t_k) dt_k`.
    pub cum_erg: f64,
    /// `sum_{k<n} M(t_k) dt_k`.
    pub cum_mass: f64,
    pub total_mass: f64,
    pub d_e_potential: Option<f64>,
    pub momentum: Vec<f64>,
    pub mean_velocity: Vec<f64>,
}

impl DiagnosticsRecord {
    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut h: Vec<String> = [
            "step",
            "t",
            "dE",
            "dV",
            "D",
            "enstrophy",
            "lambda2",
            "erg",
            "deg_plus",
            "dt_used",
            "cum_lambda2",
            "cum_lambda2_trap",
            "cum_erg",
            "cum_mass",
            "total_mass",
            "dE_potential",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend((0..dim).map(|k| format!("momentum_{k}")));
        h.extend((0..dim).map(|k| format!("mean_velocity_{k}")));
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![
            self.step.to_string(),
            fmt_f64(self.t),
            fmt_f64(self.d_e),
            fmt_f64(self.d_v),
            fmt_f64(self.diameter),
            fmt_f64(self.enstrophy),
            fmt_f64(self.lambda2),
            fmt_f64(self.erg),
            fmt_f64(self.deg_plus),
            fmt_f64(self.dt_used),
            fmt_f64(self.cum_lambda2),
            fmt_f64(self.cum_lambda2_trap),
            fmt_f64(self.cum_erg),
            fmt_f64(self.cum_mass),
            fmt_f64(self.total_mass),
            self.d_e_potential.map(fmt_f64).unwrap_or_default(),
        ];
        r.extend(self.momentum.iter().map(|x| fmt_f64(*x)));
        r.extend(self.mean_velocity.iter().map(|x| fmt_f64(*x)));
        r
    }
}

/// Records of one run, ordered by time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub dim: usize,
    pub n: usize,
    pub time_dependent_masses: bool,
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsSeries {
    pub fn first(&self) -> Result<&DiagnosticsRecord, DiagnosticsError> {
        self.records.first().ok_or(DiagnosticsError::EmptySeries)
    }

    pub fn last(&self) -> Result<&DiagnosticsRecord, DiagnosticsError> {
        self.records.last().ok_or(DiagnosticsError::EmptySeries)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(DiagnosticsRecord::csv_header(self.dim))?;
        for r in &self.records {
            wr.write_record(r.csv_row())?;
        }
        wr.flush()?;
        Ok(())
    }
}
