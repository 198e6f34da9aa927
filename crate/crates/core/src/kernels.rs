//! Communication kernels and the adjacency matrix they induce.
//!
//! Families:
//!
//! | family              | weight                                    |
//! |---------------------|-------------------------------------------|
//! | `metric_powerlaw`   | `(1 + r)^-beta`                           |
//! | `metric_indicator`  | `lambda * 1[r <= r0]`                     |
//! | `heterophilious`    | `lambda * r / r0` on `[0, r0]`, else 0    |
//! | `singular_powerlaw` | `r^-beta`, guarded by `epsilon_collision` |
//! | `topological`       | `(1 + mu(x_i, x_j))^-beta`                |
//! | `mt_topological`    | `(1 + r)^-beta / mu(B_r0(x_i))`           |
//!
//! `mu` is the fraction of the crowd inside a communication region. Singular
//! kernels zero the diagonal; every other family evaluates `phi(x_i, x_i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, GeometryError, Points};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("collision between agents {i} and {j}: distance {r:e} below guard {epsilon:e}")]
    Collision { i: usize, j: usize, r: f64, epsilon: f64 },
    #[error("empty communication region around agent {i}")]
    DegenerateRegion { i: usize },
    #[error("index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
}

/// Communication region used by the topological kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopologicalRegion {
    /// Closed ball centred at `x` with radius `|x - y|`. Not symmetric.
    BallAtX,
    /// Closed ball centred at `(x + y) / 2` with radius `|x - y| / 2`.
    #[default]
    BallAtMidpoint,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    1e-8
}

/// Kernel family plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    MetricPowerlaw {
        beta: f64,
    },
    MetricIndicator {
        r0: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    Heterophilious {
        r0: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    SingularPowerlaw {
        beta: f64,
        #[serde(default = "default_epsilon")]
        epsilon_collision: f64,
    },
    Topological {
        beta: f64,
        #[serde(default)]
        region: TopologicalRegion,
    },
    MtTopological {
        beta: f64,
        r0: f64,
    },
}

/// Whether `phi_ii` was evaluated at `r = 0` or forced to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalConvention {
    Evaluated,
    Zeroed,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), KernelError> {
        let bad = |m: &str| Err(KernelError::InvalidParameter(m.to_string()));
        let nonneg = |b: f64| b.is_finite() && b >= 0.0;
        let pos = |b: f64| b.is_finite() && b > 0.0;
        match *self {
            KernelSpec::MetricPowerlaw { beta } | KernelSpec::Topological { beta, .. } if !nonneg(beta) => {
                bad("beta must be finite and nonnegative")
            }
            KernelSpec::MetricIndicator { r0, lambda } | KernelSpec::Heterophilious { r0, lambda } => {
                if !pos(r0) {
                    bad("r0 must be positive")
                } else if !pos(lambda) {
                    bad("lambda must be positive")
                } else {
                    Ok(())
                }
            }
            KernelSpec::SingularPowerlaw {
                beta,
                epsilon_collision,
            } => {
                if !nonneg(beta) {
                    bad("beta must be finite and nonnegative")
                } else if !pos(epsilon_collision) {
                    bad("epsilon_collision must be positive")
                } else {
                    Ok(())
                }
            }
            KernelSpec::MtTopological { beta, r0 } => {
                if !nonneg(beta) {
                    bad("beta must be finite and nonnegative")
                } else if !pos(r0) {
                    bad("r0 must be positive")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// `phi(x, y) = phi(y, x)` for this family.
    pub fn is_symmetric(&self) -> bool {
        !matches!(
            self,
            KernelSpec::MtTopological { .. }
                | KernelSpec::Topological {
                    region: TopologicalRegion::BallAtX,
                    ..
                }
        )
    }

    pub fn diagonal_convention(&self) -> DiagonalConvention {
        match self {
            KernelSpec::SingularPowerlaw { .. } => DiagonalConvention::Zeroed,
            _ => DiagonalConvention::Evaluated,
        }
    }

    /// Exponent of the heavy-tail lower bound when the kernel is exactly
    /// `(1 + r)^-beta`.
    pub fn powerlaw_beta(&self) -> Option<f64> {
        match self {
            KernelSpec::MetricPowerlaw { beta } => Some(*beta),
            _ => None,
        }
    }

    /// Profile of the metric families as a function of distance.
    /// `None` for the topological families and for singular collisions.
    pub fn radial(&self, r: f64) -> Option<f64> {
        match *self {
            KernelSpec::MetricPowerlaw { beta } => Some((1.0 + r).powf(-beta)),
            KernelSpec::MetricIndicator { r0, lambda } => Some(if r <= r0 { lambda } else { 0.0 }),
            KernelSpec::Heterophilious { r0, lambda } => Some(if r <= r0 { lambda * r / r0 } else { 0.0 }),
            KernelSpec::SingularPowerlaw {
                beta,
                epsilon_collision,
            } => (r >= epsilon_collision).then(|| r.powf(-beta)),
            KernelSpec::Topological { .. } | KernelSpec::MtTopological { .. } => None,
        }
    }
}

/// Relative slack on region radii so that agents sitting exactly on the
/// boundary are counted despite rounding in the centre computation.
const REGION_SLACK: f64 = 1e-12;

/// Fraction of `positions` inside the communication region `C(x, y)`.
pub fn topological_measure(x: &[f64], y: &[f64], positions: &Points, dom: &Domain, region: TopologicalRegion) -> f64 {
    let n = positions.len();
    if n == 0 {
        return 0.0;
    }
    let r = dom.distance_unchecked(x, y);
    let count = match region {
        TopologicalRegion::BallAtX => count_in_ball(x, r, positions, dom),
        TopologicalRegion::BallAtMidpoint => {
            let mut c = vec![0.0; x.len()];
            dom.displacement_into(x, y, &mut c);
            for (ck, xk) in c.iter_mut().zip(x) {
                *ck = xk + 0.5 * *ck;
            }
            count_in_ball(&c, 0.5 * r, positions, dom)
        }
    };
    count as f64 / n as f64
}

fn count_in_ball(center: &[f64], radius: f64, positions: &Points, dom: &Domain) -> usize {
    let bound = radius * (1.0 + REGION_SLACK);
    positions
        .rows()
        .filter(|p| dom.distance_unchecked(center, p) <= bound)
        .count()
}

/// Weight `phi_ij` for agents `i`, `j` at the given positions.
pub fn eval_kernel(
    spec: &KernelSpec,
    i: usize,
    j: usize,
    positions: &Points,
    dom: &Domain,
) -> Result<f64, KernelError> {
    let n = positions.len();
    for index in [i, j] {
        if index >= n {
            return Err(KernelError::IndexOutOfRange { index, n });
        }
    }
    if positions.dim() != dom.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: dom.dim(),
            got: positions.dim(),
        }
        .into());
    }
    eval_unchecked(spec, i, j, positions, dom, None)
}

fn eval_unchecked(
    spec: &KernelSpec,
    i: usize,
    j: usize,
    positions: &Points,
    dom: &Domain,
    ball_mass: Option<f64>,
) -> Result<f64, KernelError> {
    let xi = positions.row(i);
    let xj = positions.row(j);
    let r = dom.distance_unchecked(xi, xj);
    match *spec {
        KernelSpec::Topological { beta, region } => {
            let mu = topological_measure(xi, xj, positions, dom, region);
            Ok((1.0 + mu).powf(-beta))
        }
        KernelSpec::MtTopological { beta, r0 } => {
            let mu = match ball_mass {
                Some(mu) => mu,
                None => count_in_ball(xi, r0, positions, dom) as f64 / positions.len() as f64,
            };
            if mu <= 0.0 {
                return Err(KernelError::DegenerateRegion { i });
            }
            Ok((1.0 + r).powf(-beta) / mu)
        }
        KernelSpec::SingularPowerlaw { epsilon_collision, .. } => spec.radial(r).ok_or(KernelError::Collision {
            i,
            j,
            r,
            epsilon: epsilon_collision,
        }),
        _ => Ok(spec.radial(r).expect("metric family")),
    }
}

/// Dense `N x N` matrix of pair weights `phi_ij`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    weights: Vec<f64>,
    diagonal: DiagonalConvention,
}

impl AdjacencyMatrix {
    /// Wrap raw weights. Entries must be finite and nonnegative.
    pub fn from_weights(n: usize, weights: Vec<f64>, diagonal: DiagonalConvention) -> Result<Self, KernelError> {
        if weights.len() != n * n {
            return Err(KernelError::InvalidParameter(format!(
                "expected {} weights, got {}",
                n * n,
                weights.len()
            )));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(KernelError::InvalidParameter(format!(
                "weight ({}, {}) = {} is not finite and nonnegative",
                k / n,
                k % n,
                weights[k]
            )));
        }
        Ok(AdjacencyMatrix { n, weights, diagonal })
    }

    pub fn from_fn(
        n: usize,
        diagonal: DiagonalConvention,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, KernelError> {
        let mut w = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                w.push(f(i, j));
            }
        }
        Self::from_weights(n, w, diagonal)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diagonal_convention(&self) -> DiagonalConvention {
        self.diagonal
    }

    /// Exact entrywise symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `(A + A^T) / 2`.
    pub fn symmetric_part(&self) -> AdjacencyMatrix {
        let n = self.n;
        let mut w = self.weights.clone();
        for i in 0..n {
            for j in i + 1..n {
                let s = 0.5 * (self.get(i, j) + self.get(j, i));
                w[i * n + j] = s;
                w[j * n + i] = s;
            }
        }
        AdjacencyMatrix {
            n,
            weights: w,
            diagonal: self.diagonal,
        }
    }

    /// Entrywise `phi_ij * f(i, j)`.
    pub fn scaled(&self, f: impl Fn(usize, usize) -> f64) -> AdjacencyMatrix {
        let n = self.n;
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * f(k / n, k % n))
            .collect();
        AdjacencyMatrix {
            n,
            weights,
            diagonal: self.diagonal,
        }
    }

    /// `max_ij phi_ij` and `min_ij phi_ij`, diagonal included.
    pub fn min_max(&self) -> (f64, f64) {
        self.weights
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
                (lo.min(*w), hi.max(*w))
            })
    }

    /// `deg_i = sum_k phi_ik`, diagonal included.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }
}

/// Evaluate `phi_ij` at every pair.
///
/// Symmetric families evaluate the unordered pair once with the lower index
/// first, so the result is symmetric bit for bit. Rows are filled in
/// parallel; each entry is an independent computation, so the output does
/// not depend on the thread count.
pub fn build_adjacency(spec: &KernelSpec, positions: &Points, dom: &Domain) -> Result<AdjacencyMatrix, KernelError> {
    spec.validate()?;
    if positions.dim() != dom.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: dom.dim(),
            got: positions.dim(),
        }
        .into());
    }
    let n = positions.len();
    let symmetric = spec.is_symmetric();
    let diagonal = spec.diagonal_convention();
    let ball_mass: Option<Vec<f64>> = match *spec {
        KernelSpec::MtTopological { r0, .. } => Some(
            positions
                .rows()
                .map(|x| count_in_ball(x, r0, positions, dom) as f64 / n as f64)
                .collect(),
        ),
        _ => None,
    };
    let mut weights = vec![0.0; n * n];
    if n > 0 {
        weights
            .par_chunks_mut(n)
            .enumerate()
            .try_for_each(|(i, row)| -> Result<(), KernelError> {
                for (j, w) in row.iter_mut().enumerate() {
                    if i == j && diagonal == DiagonalConvention::Zeroed {
                        *w = 0.0;
                        continue;
                    }
                    let (a, b) = if symmetric && j < i { (j, i) } else { (i, j) };
                    let mu = ball_mass.as_ref().map(|m| m[a]);
                    *w = eval_unchecked(spec, a, b, positions, dom, mu)?;
                }
                Ok(())
            })?;
    }
    AdjacencyMatrix::from_weights(n, weights, diagonal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(xs: &[f64]) -> Points {
        Points::new(1, xs.to_vec()).unwrap()
    }

    // brute-force region membership, written independently of the module
    fn brute_measure(center: f64, radius: f64, xs: &[f64]) -> f64 {
        xs.iter().filter(|&&x| (x - center).abs() <= radius).count() as f64 / xs.len() as f64
    }

    #[test]
    fn powerlaw_arithmetic() {
        let k = KernelSpec::MetricPowerlaw { beta: 0.5 };
        let p = line(&[0.0, 3.0]);
        assert_eq!(eval_kernel(&k, 0, 1, &p, &Domain::free(1)).unwrap(), 0.5);
    }

    #[test]
    fn topological_collinear_pair() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let p = line(&xs);
        let dom = Domain::free(1);
        let at_x = topological_measure(&[0.0], &[3.0], &p, &dom, TopologicalRegion::BallAtX);
        assert_eq!(at_x, brute_measure(0.0, 3.0, &xs));
        assert_eq!(at_x, 1.0);
        let mid = topological_measure(&[0.0], &[3.0], &p, &dom, TopologicalRegion::BallAtMidpoint);
        assert_eq!(mid, brute_measure(1.5, 1.5, &xs));
        assert_eq!(mid, 1.0);

        let k = KernelSpec::Topological {
            beta: 1.0,
            region: TopologicalRegion::BallAtX,
        };
        assert_eq!(eval_kernel(&k, 0, 3, &p, &dom).unwrap(), 0.5);
    }

    #[test]
    fn topological_degenerate_region_counts_coincident_agents() {
        let p = line(&[0.0, 0.0, 2.0]);
        let mu = topological_measure(&[0.0], &[0.0], &p, &Domain::free(1), TopologicalRegion::BallAtX);
        assert_relative_eq!(mu, 2.0 / 3.0);
        let mu = topological_measure(&[2.0], &[2.0], &p, &Domain::free(1), TopologicalRegion::BallAtMidpoint);
        assert!(mu >= 1.0 / 3.0);
    }

    #[test]
    fn topological_partial_counts_match_brute_force() {
        let xs = [0.0, 0.4, 1.1, 2.5, 2.6, 7.0];
        let p = line(&xs);
        let dom = Domain::free(1);
        for (a, b) in [(0usize, 2usize), (1, 4), (3, 5), (5, 0)] {
            let (x, y) = (xs[a], xs[b]);
            let got = topological_measure(&[x], &[y], &p, &dom, TopologicalRegion::BallAtX);
            assert_eq!(got, brute_measure(x, (x - y).abs(), &xs));
            let got = topological_measure(&[x], &[y], &p, &dom, TopologicalRegion::BallAtMidpoint);
            assert_eq!(got, brute_measure(0.5 * (x + y), 0.5 * (x - y).abs(), &xs));
        }
    }

    #[test]
    fn singular_collision_is_an_error() {
        let k = KernelSpec::SingularPowerlaw {
            beta: 2.0,
            epsilon_collision: 1e-8,
        };
        let p = line(&[1.0, 1.0]);
        let err = eval_kernel(&k, 0, 1, &p, &Domain::free(1)).unwrap_err();
        assert!(matches!(err, KernelError::Collision { i: 0, j: 1, .. }));
        assert!(matches!(
            build_adjacency(&k, &p, &Domain::free(1)),
            Err(KernelError::Collision { .. })
        ));
    }

    #[test]
    fn singular_diagonal_is_zeroed() {
        let k = KernelSpec::SingularPowerlaw {
            beta: 1.0,
            epsilon_collision: 1e-8,
        };
        let a = build_adjacency(&k, &line(&[0.0, 2.0]), &Domain::free(1)).unwrap();
        assert_eq!(a.weights(), &[0.0, 0.5, 0.5, 0.0]);
        assert_eq!(a.diagonal_convention(), DiagonalConvention::Zeroed);
    }

    #[test]
    fn constant_kernel_gives_all_ones() {
        let k = KernelSpec::MetricPowerlaw { beta: 0.0 };
        let a = build_adjacency(&k, &line(&[0.0, 5.0]), &Domain::free(1)).unwrap();
        assert_eq!(a.weights(), &[1.0; 4]);
    }

    #[test]
    fn indicator_disconnected_triangle() {
        let s = 3f64.sqrt();
        let p = Points::from_rows(2, &[[0.0, 0.0], [2.0, 0.0], [1.0, s]]).unwrap();
        let k = KernelSpec::MetricIndicator { r0: 1.5, lambda: 1.0 };
        let a = build_adjacency(&k, &p, &Domain::free(2)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn collinear_powerlaw_matches_pair_loop() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let k = KernelSpec::MetricPowerlaw { beta: 1.0 };
        let a = build_adjacency(&k, &line(&xs), &Domain::free(1)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = 1.0 / (1.0 + (i as f64 - j as f64).abs());
                assert_relative_eq!(a.get(i, j), expected, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn heterophilious_ramps_up_then_cuts_off() {
        let k = KernelSpec::Heterophilious { r0: 2.0, lambda: 1.0 };
        assert_eq!(k.radial(0.0), Some(0.0));
        assert_eq!(k.radial(1.0), Some(0.5));
        assert_eq!(k.radial(2.0), Some(1.0));
        assert_eq!(k.radial(2.5), Some(0.0));
    }

    #[test]
    fn mt_topological_normalizes_by_ball_mass() {
        let xs = [0.0, 0.5, 3.0];
        let k = KernelSpec::MtTopological { beta: 0.0, r0: 1.0 };
        let a = build_adjacency(&k, &line(&xs), &Domain::free(1)).unwrap();
        // agent 0 sees {0, 0.5} inside radius 1, agent 2 sees only itself
        assert_relative_eq!(a.get(0, 2), 1.0 / (2.0 / 3.0));
        assert_relative_eq!(a.get(2, 0), 1.0 / (1.0 / 3.0));
        assert!(!a.is_symmetric());
        assert_eq!(
            eval_kernel(&k, 2, 0, &line(&xs), &Domain::free(1)).unwrap(),
            a.get(2, 0)
        );
    }

    #[test]
    fn symmetric_families_build_symmetric_matrices() {
        let p = Points::from_rows(2, &[[0.1, 0.2], [1.3, -0.4], [2.2, 0.9], [-0.7, 1.6], [0.4, 0.45]]).unwrap();
        let dom = Domain::free(2);
        for k in [
            KernelSpec::MetricPowerlaw { beta: 0.7 },
            KernelSpec::MetricIndicator { r0: 1.5, lambda: 2.0 },
            KernelSpec::Heterophilious { r0: 2.0, lambda: 1.0 },
            KernelSpec::SingularPowerlaw {
                beta: 1.5,
                epsilon_collision: 1e-8,
            },
            KernelSpec::Topological {
                beta: 1.0,
                region: TopologicalRegion::BallAtMidpoint,
            },
        ] {
            let a = build_adjacency(&k, &p, &dom).unwrap();
            assert!(a.is_symmetric(), "{k:?}");
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::MetricPowerlaw { beta: -1.0 }.validate().is_err());
        assert!(KernelSpec::MetricIndicator { r0: 0.0, lambda: 1.0 }.validate().is_err());
        assert!(KernelSpec::SingularPowerlaw {
            beta: 1.0,
            epsilon_collision: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn spec_json_shape() {
        let k: KernelSpec = serde_json::from_str(r#"{"family":"metric_indicator","r0":2.0}"#).unwrap();
        assert_eq!(k, KernelSpec::MetricIndicator { r0: 2.0, lambda: 1.0 });
        let k: KernelSpec = serde_json::from_str(r#"{"family":"topological","beta":1}"#).unwrap();
        assert_eq!(
            k,
            KernelSpec::Topological {
                beta: 1.0,
                region: TopologicalRegion::BallAtMidpoint
            }
        );
        assert!(serde_json::from_str::<KernelSpec>(r#"{"family":"metric_powerlaw","beta":1,"bogus":2}"#).is_err());
    }
}
