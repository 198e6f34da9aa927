//! Spatial domains and packed point sets.
//!
//! Agents live either in free space `R^d` or on a periodic box (a flat
//! torus). Distances on the torus use the minimal-image convention, axis by
//! axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by geometric helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point buffer of length {len} is not a multiple of dimension {dim}")]
    RaggedBuffer { len: usize, dim: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}

/// The spatial domain of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    /// Free space `R^d`.
    Free { dim: usize },
    /// Periodic box `[0, period_k)` along every axis.
    Torus { period: Vec<f64> },
}

impl Domain {
    pub fn free(dim: usize) -> Self {
        Domain::Free { dim }
    }

    pub fn torus(period: Vec<f64>) -> Self {
        Domain::Torus { period }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Free { dim } => *dim,
            Domain::Torus { period } => period.len(),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Domain::Free { dim } if *dim == 0 => {
                Err(GeometryError::InvalidDomain("dimension must be at least 1".into()))
            }
            Domain::Torus { period } if period.is_empty() => {
                Err(GeometryError::InvalidDomain("torus needs at least one axis".into()))
            }
            Domain::Torus { period } => match period.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                Some(k) => Err(GeometryError::InvalidDomain(format!(
                    "torus period on axis {k} must be positive and finite"
                ))),
                None => Ok(()),
            },
            Domain::Free { .. } => Ok(()),
        }
    }

    fn check(&self, x: &[f64], y: &[f64]) -> Result<(), GeometryError> {
        let d = self.dim();
        for p in [x, y] {
            if p.len() != d {
                return Err(GeometryError::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
        }
        Ok(())
    }

    /// Distance between `x` and `y` (minimal image on the torus).
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
        self.check(x, y)?;
        Ok(self.distance_unchecked(x, y))
    }

    /// Distance without the dimension check. Symmetric bit-for-bit in its
    /// arguments, since it only looks at `|x_k - y_k|`.
    #[inline]
    pub(crate) fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        match self {
            Domain::Free { .. } => {
                for (a, b) in x.iter().zip(y) {
                    let d = a - b;
                    acc += d * d;
                }
            }
            Domain::Torus { period } => {
                for ((a, b), p) in x.iter().zip(y).zip(period) {
                    let d = min_image_abs((a - b).abs(), *p);
                    acc += d * d;
                }
            }
        }
        acc.sqrt()
    }

    /// Displacement `y - x`, taken along the shortest periodic image.
    pub(crate) fn displacement_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match self {
            Domain::Free { .. } => {
                for k in 0..x.len() {
                    out[k] = y[k] - x[k];
                }
            }
            Domain::Torus { period } => {
                for k in 0..x.len() {
                    let p = period[k];
                    let mut d = (y[k] - x[k]).rem_euclid(p);
                    if d > 0.5 * p {
                        d -= p;
                    }
                    out[k] = d;
                }
            }
        }
    }

    pub fn displacement(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check(x, y)?;
        let mut out = vec![0.0; x.len()];
        self.displacement_into(x, y, &mut out);
        Ok(out)
    }

    /// Fold a point into the fundamental cell (no-op in free space).
    pub fn fold(&self, x: &mut [f64]) {
        if let Domain::Torus { period } = self {
            for (c, p) in x.iter_mut().zip(period) {
                let mut w = c.rem_euclid(*p);
                // rem_euclid can round up to exactly p for tiny negative inputs
                if w >= *p {
                    w = 0.0;
                }
                *c = w;
            }
        }
    }
}

#[inline]
fn min_image_abs(a: f64, p: f64) -> f64 {
    let r = a % p;
    r.min(p - r)
}

/// Free-function form of [`Domain::distance`].
pub fn pairwise_distance(x: &[f64], y: &[f64], dom: &Domain) -> Result<f64, GeometryError> {
    dom.distance(x, y)
}

/// `n` points in `R^dim`, stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self, GeometryError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(GeometryError::RaggedBuffer { len: data.len(), dim });
        }
        Ok(Points { dim, data })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Points {
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self, GeometryError> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Points { dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// `self + scale * other`, componentwise.
    pub fn axpy(&self, scale: f64, other: &Points) -> Points {
        debug_assert_eq!(self.data.len(), other.data.len());
        Points {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + scale * b).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_distance_is_pythagorean() {
        let d = pairwise_distance(&[0.0, 0.0], &[3.0, 4.0], &Domain::free(2)).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn torus_uses_minimal_image() {
        let dom = Domain::torus(vec![10.0]);
        assert_eq!(pairwise_distance(&[0.5], &[9.5], &dom).unwrap(), 1.0);
        assert_eq!(dom.displacement(&[0.5], &[9.5]).unwrap(), vec![-1.0]);
        assert_eq!(dom.displacement(&[9.5], &[0.5]).unwrap(), vec![1.0]);
    }

    #[test]
    fn identical_points_have_zero_distance() {
        let x = [1.25, -3.0, 7.5];
        assert_eq!(pairwise_distance(&x, &x, &Domain::free(3)).unwrap(), 0.0);
        let dom = Domain::torus(vec![2.0, 2.0, 2.0]);
        assert_eq!(
            pairwise_distance(&[0.0, 0.0, 0.0], &[2.0, 4.0, -2.0], &dom).unwrap(),
            0.0
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = pairwise_distance(&[0.0], &[1.0, 2.0], &Domain::free(2)).unwrap_err();
        assert_eq!(err, GeometryError::DimensionMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn fold_wraps_into_cell() {
        let dom = Domain::torus(vec![10.0, 1.0]);
        let mut x = [-0.5, 3.25];
        dom.fold(&mut x);
        assert_eq!(x, [9.5, 0.25]);
        let mut tiny = [-1e-300, 0.0];
        dom.fold(&mut tiny);
        assert!(tiny[0] >= 0.0 && tiny[0] < 10.0);
    }

    #[test]
    fn torus_validation_rejects_nonpositive_period() {
        assert!(Domain::torus(vec![1.0, 0.0]).validate().is_err());
        assert!(Domain::free(0).validate().is_err());
        assert!(Domain::torus(vec![1.0]).validate().is_ok());
    }
}
