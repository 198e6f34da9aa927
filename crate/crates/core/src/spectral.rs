//! Mass-weighted graph Laplacian and the connectivity functionals built on
//! the adjacency matrix: spectral gap, coefficient of ergodicity and maximal
//! weighted degree.
//!
//! For masses `m` and weights `phi`, the Laplacian is
//!
//! ```text
//! L_ab = -phi_ab * sqrt(m_a m_b)        a != b
//! L_aa = sum_{c != a} phi_ac * m_c
//! ```
//!
//! It is symmetric positive semidefinite and annihilates `(sqrt(m_1), ...,
//! sqrt(m_N))`. Its second eigenvalue bounds the enstrophy from below.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::AdjacencyMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("mass {index} = {value} is not positive and finite")]
    NonPositiveMass { index: usize, value: f64 },
    #[error("mass vector is empty")]
    EmptyMasses,
    #[error("adjacency is {adjacency}x{adjacency} but there are {masses} masses")]
    SizeMismatch { adjacency: usize, masses: usize },
    #[error("adjacency matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("ergodicity coefficient needs at least two agents")]
    TooFewAgents,
    #[error("symmetric eigensolver did not converge")]
    NoConvergence,
}

/// Positive agent masses together with their total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassVector {
    m: Vec<f64>,
    total: f64,
}

impl MassVector {
    pub fn new(m: Vec<f64>) -> Result<Self, SpectralError> {
        if m.is_empty() {
            return Err(SpectralError::EmptyMasses);
        }
        if let Some(index) = m.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(SpectralError::NonPositiveMass { index, value: m[index] });
        }
        let total = m.iter().sum();
        Ok(MassVector { m, total })
    }

    /// `m_i = 1/N`.
    pub fn uniform(n: usize) -> Self {
        let w = 1.0 / n as f64;
        MassVector {
            m: vec![w; n],
            total: w * n as f64,
        }
        .retotal()
    }

    fn retotal(mut self) -> Self {
        self.total = self.m.iter().sum();
        self
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.m
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.m[i]
    }

    pub fn sqrt(&self) -> Vec<f64> {
        self.m.iter().map(|x| x.sqrt()).collect()
    }
}

impl TryFrom<Vec<f64>> for MassVector {
    type Error = SpectralError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        MassVector::new(v)
    }
}

impl From<MassVector> for Vec<f64> {
    fn from(m: MassVector) -> Self {
        m.m
    }
}

/// The symmetric matrix `Delta_m A`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacian {
    entries: DMatrix<f64>,
}

impl WeightedLaplacian {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (&self.entries * v).iter().copied().collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }
}

fn check_sizes(a: &AdjacencyMatrix, m: &MassVector) -> Result<(), SpectralError> {
    if a.n() != m.len() {
        return Err(SpectralError::SizeMismatch {
            adjacency: a.n(),
            masses: m.len(),
        });
    }
    Ok(())
}

/// Build `Delta_m A`. Rejects non-symmetric adjacency.
pub fn weighted_laplacian(a: &AdjacencyMatrix, m: &MassVector) -> Result<WeightedLaplacian, SpectralError> {
    check_sizes(a, m)?;
    let n = a.n();
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (a.get(i, j), a.get(j, i));
            if (x - y).abs() > 1e-14 * x.abs().max(y.abs()) {
                return Err(SpectralError::NotSymmetric { i, j });
            }
        }
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = a.get(i.min(j), i.max(j));
            diag += w * m.get(j);
            l[(i, j)] = -w * (m.get(i) * m.get(j)).sqrt();
        }
        l[(i, i)] = diag;
    }
    Ok(WeightedLaplacian { entries: l })
}

fn eigen(l: &WeightedLaplacian) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, SpectralError> {
    SymmetricEigen::try_new(l.entries.clone(), f64::EPSILON, 0).ok_or(SpectralError::NoConvergence)
}

/// Default absolute tolerance: `1e-10` times the max-norm of the matrix.
pub fn default_gap_tolerance(l: &WeightedLaplacian) -> f64 {
    1e-10 * l.max_norm()
}

/// All eigenvalues in ascending order.
pub fn eigenvalues(l: &WeightedLaplacian) -> Result<Vec<f64>, SpectralError> {
    let mut ev: Vec<f64> = eigen(l)?.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Second-smallest eigenvalue of `l`; values below `tol` are reported as 0.
/// A single agent has no gap and yields 0.
pub fn spectral_gap(l: &WeightedLaplacian, tol: f64) -> Result<f64, SpectralError> {
    if l.n() < 2 {
        return Ok(0.0);
    }
    let ev = eigenvalues(l)?;
    Ok(if ev[1] < tol { 0.0 } else { ev[1] })
}

/// `lambda_2` together with a unit eigenvector of `l`.
pub fn fiedler_pair(l: &WeightedLaplacian) -> Result<(f64, Vec<f64>), SpectralError> {
    if l.n() < 2 {
        return Err(SpectralError::TooFewAgents);
    }
    let e = eigen(l)?;
    let mut idx: Vec<usize> = (0..l.n()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let k = idx[1];
    Ok((e.eigenvalues[k], e.eigenvectors.column(k).iter().copied().collect()))
}

/// `min_{p != q} sum_j m_j min(phi_pj, phi_qj)`.
///
/// The per-column minimum is taken for each pair, and the worst pair is
/// reported. This is the contraction factor of one explicit step for the
/// velocity diameter.
pub fn ergodicity_coefficient(a: &AdjacencyMatrix, m: &MassVector) -> Result<f64, SpectralError> {
    check_sizes(a, m)?;
    let n = a.n();
    if n < 2 {
        return Err(SpectralError::TooFewAgents);
    }
    let mw = m.as_slice();
    let mut best = f64::INFINITY;
    for p in 0..n {
        let rp = a.row(p);
        for q in p + 1..n {
            let rq = a.row(q);
            let s: f64 = rp.iter().zip(rq).zip(mw).map(|((x, y), w)| w * x.min(*y)).sum();
            best = best.min(s);
        }
    }
    Ok(best)
}

/// `sum_j m_j min_p phi_pj`: the weaker reading with the pair minimum pulled
/// inside the sum. Never larger than [`ergodicity_coefficient`].
pub fn ergodicity_coefficient_columnwise(a: &AdjacencyMatrix, m: &MassVector) -> Result<f64, SpectralError> {
    check_sizes(a, m)?;
    let n = a.n();
    if n < 2 {
        return Err(SpectralError::TooFewAgents);
    }
    Ok((0..n)
        .map(|j| m.get(j) * (0..n).map(|p| a.get(p, j)).fold(f64::INFINITY, f64::min))
        .sum())
}

/// `max_i sum_j phi_ij m_j`, the diagonal term included.
pub fn max_weighted_degree(a: &AdjacencyMatrix, m: &MassVector) -> Result<f64, SpectralError> {
    check_sizes(a, m)?;
    Ok((0..a.n())
        .map(|i| a.row(i).iter().zip(m.as_slice()).map(|(p, w)| p * w).sum::<f64>())
        .fold(0.0, f64::max))
}
