//! Seeded initial-condition generators.
//!
//! Random draws come from ChaCha8 seeded with the scenario seed, consumed in
//! the order positions, masses, velocities. ChaCha output is specified
//! independently of platform, so a seed fixes the initial data everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use super::{AgentState, DynamicsError};
use crate::domain::{Domain, Points};
use crate::spectral::MassVector;

pub fn scenario_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PositionInit {
    /// Independent uniform coordinates in `[lo, hi)` per axis. On the torus
    /// both bounds default to the fundamental cell.
    UniformBox {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    /// Agent `i` goes to cluster `i mod k`, uniform within `half_width` of
    /// the cluster centre on every axis.
    Clusters {
        centers: Vec<Vec<f64>>,
        half_width: f64,
    },
    Explicit {
        values: Vec<Vec<f64>>,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityInit {
    /// Independent normal components with standard deviation `std`. With
    /// `center` the mass-weighted sample mean is removed before `mean` is
    /// added.
    Gaussian {
        std: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        #[serde(default = "default_true")]
        center: bool,
    },
    Explicit {
        values: Vec<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassInit {
    /// `m_i = total / N`.
    Uniform {
        #[serde(default = "one")]
        total: f64,
    },
    /// Symmetric Dirichlet weights scaled to `total`.
    Dirichlet {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        total: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

impl Default for MassInit {
    fn default() -> Self {
        MassInit::Uniform { total: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub positions: PositionInit,
    pub velocities: VelocityInit,
    #[serde(default)]
    pub masses: MassInit,
}

fn bad(msg: impl Into<String>) -> DynamicsError {
    DynamicsError::InvalidModel(msg.into())
}

fn explicit_rows(values: &[Vec<f64>], n: usize, dim: usize, what: &str) -> Result<Points, DynamicsError> {
    if values.len() != n {
        return Err(bad(format!("{what}: expected {n} rows, got {}", values.len())));
    }
    if values.iter().flatten().any(|x| !x.is_finite()) {
        return Err(bad(format!("{what}: values must be finite")));
    }
    Ok(Points::from_rows(dim, values)?)
}

impl InitSpec {
    /// Shape checks that do not need random draws.
    pub fn validate(&self, n: usize, dom: &Domain) -> Result<(), DynamicsError> {
        let dim = dom.dim();
        match &self.positions {
            PositionInit::UniformBox { lo, hi } => match (lo, hi, dom) {
                (Some(lo), Some(hi), _) if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                    return Err(bad("positions: need lo < hi"))
                }
                (None, _, Domain::Free { .. }) | (_, None, Domain::Free { .. }) => {
                    return Err(bad("positions: free space needs both lo and hi"))
                }
                _ => {}
            },
            PositionInit::Clusters { centers, half_width } => {
                if centers.is_empty() || centers.iter().any(|c| c.len() != dim) {
                    return Err(bad(format!(
                        "positions: cluster centers must be nonempty {dim}-vectors"
                    )));
                }
                if !(half_width.is_finite() && *half_width >= 0.0) {
                    return Err(bad("positions: half_width must be nonnegative"));
                }
            }
            PositionInit::Explicit { values } => {
                explicit_rows(values, n, dim, "positions")?;
            }
        }
        match &self.velocities {
            VelocityInit::Gaussian { std, mean, .. } => {
                if !(std.is_finite() && *std >= 0.0) {
                    return Err(bad("velocities: std must be nonnegative"));
                }
                if mean.as_ref().is_some_and(|m| m.len() != dim) {
                    return Err(bad(format!("velocities: mean must have {dim} components")));
                }
            }
            VelocityInit::Explicit { values } => {
                explicit_rows(values, n, dim, "velocities")?;
            }
        }
        match &self.masses {
            MassInit::Uniform { total } if !(total.is_finite() && *total > 0.0) => {
                Err(bad("masses: total must be positive"))
            }
            MassInit::Dirichlet { alpha, total }
                if !(alpha.is_finite() && *alpha > 0.0 && total.is_finite() && *total > 0.0) =>
            {
                Err(bad("masses: alpha and total must be positive"))
            }
            MassInit::Explicit { values } if values.len() != n => {
                Err(bad(format!("masses: expected {n} values, got {}", values.len())))
            }
            MassInit::Explicit { values } => MassVector::new(values.clone()).map(|_| ()).map_err(Into::into),
            _ => Ok(()),
        }
    }

    /// Draw the initial state.
    pub fn generate(&self, n: usize, dom: &Domain, seed: u64) -> Result<AgentState, DynamicsError> {
        self.validate(n, dom)?;
        let dim = dom.dim();
        let mut rng = scenario_rng(seed);

        let mut positions = match &self.positions {
            PositionInit::UniformBox { lo, hi } => {
                let mut p = Points::zeros(n, dim);
                for i in 0..n {
                    for (k, c) in p.row_mut(i).iter_mut().enumerate() {
                        let (a, b) = match dom {
                            Domain::Torus { period } => (lo.unwrap_or(0.0), hi.unwrap_or(period[k])),
                            Domain::Free { .. } => (lo.unwrap(), hi.unwrap()),
                        };
                        *c = a + (b - a) * rng.random::<f64>();
                    }
                }
                p
            }
            PositionInit::Clusters { centers, half_width } => {
                let mut p = Points::zeros(n, dim);
                for i in 0..n {
                    let c = &centers[i % centers.len()];
                    for (k, x) in p.row_mut(i).iter_mut().enumerate() {
                        *x = c[k] + half_width * (2.0 * rng.random::<f64>() - 1.0);
                    }
                }
                p
            }
            PositionInit::Explicit { values } => explicit_rows(values, n, dim, "positions")?,
        };
        for i in 0..n {
            dom.fold(positions.row_mut(i));
        }

        let masses = match &self.masses {
            MassInit::Uniform { total } => MassVector::new(vec![total / n as f64; n])?,
            MassInit::Dirichlet { alpha, total } => {
                let g = Gamma::new(*alpha, 1.0).map_err(|e| bad(e.to_string()))?;
                let mut w: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
                // a draw can underflow to zero for tiny alpha
                for x in w.iter_mut() {
                    *x = x.max(f64::MIN_POSITIVE);
                }
                let s: f64 = w.iter().sum();
                MassVector::new(w.into_iter().map(|x| total * x / s).collect())?
            }
            MassInit::Explicit { values } => MassVector::new(values.clone())?,
        };

        let velocities = match &self.velocities {
            VelocityInit::Gaussian { std, mean, center } => {
                let normal = Normal::new(0.0, *std).map_err(|e| bad(e.to_string()))?;
                let mut v = Points::zeros(n, dim);
                for x in v.as_mut_slice() {
                    *x = normal.sample(&mut rng);
                }
                if *center {
                    let bar = crate::diagnostics::mean_velocity(&v, &masses);
                    for i in 0..n {
                        for (x, b) in v.row_mut(i).iter_mut().zip(&bar) {
                            *x -= b;
                        }
                    }
                }
                if let Some(m) = mean {
                    for i in 0..n {
                        for (x, mk) in v.row_mut(i).iter_mut().zip(m) {
                            *x += mk;
                        }
                    }
                }
                v
            }
            VelocityInit::Explicit { values } => explicit_rows(values, n, dim, "velocities")?,
        };

        AgentState::new(positions, velocities, masses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> InitSpec {
        InitSpec {
            positions: PositionInit::UniformBox {
                lo: Some(-1.0),
                hi: Some(1.0),
            },
            velocities: VelocityInit::Gaussian {
                std: 1.0,
                mean: None,
                center: true,
            },
            masses: MassInit::Dirichlet { alpha: 1.0, total: 2.0 },
        }
    }

    #[test]
    fn same_seed_same_state() {
        let dom = Domain::free(2);
        let a = spec().generate(16, &dom, 42).unwrap();
        let b = spec().generate(16, &dom, 42).unwrap();
        let c = spec().generate(16, &dom, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn centered_velocities_have_zero_momentum() {
        let s = spec().generate(32, &Domain::free(3), 7).unwrap();
        assert!((s.masses.total() - 2.0).abs() < 1e-14);
        for k in 0..3 {
            let p: f64 = (0..32).map(|i| s.masses.get(i) * s.velocities.row(i)[k]).sum();
            assert!(p.abs() < 1e-14);
        }
        assert!(s.positions.as_slice().iter().all(|x| (-1.0..1.0).contains(x)));
    }

    #[test]
    fn torus_box_defaults_to_cell() {
        let sp = InitSpec {
            positions: PositionInit::UniformBox { lo: None, hi: None },
            ..spec()
        };
        let s = sp.generate(50, &Domain::torus(vec![3.0, 0.5]), 1).unwrap();
        for r in s.positions.rows() {
            assert!((0.0..3.0).contains(&r[0]) && (0.0..0.5).contains(&r[1]));
        }
        assert!(sp.validate(4, &Domain::free(2)).is_err());
    }

    #[test]
    fn explicit_shapes_checked() {
        let sp = InitSpec {
            positions: PositionInit::Explicit {
                values: vec![vec![0.0], vec![1.0]],
            },
            velocities: VelocityInit::Explicit {
                values: vec![vec![1.0], vec![-1.0]],
            },
            masses: MassInit::Explicit { values: vec![0.5, 0.5] },
        };
        let s = sp.generate(2, &Domain::free(1), 0).unwrap();
        assert_eq!(s.velocities.as_slice(), &[1.0, -1.0]);
        assert!(sp.validate(3, &Domain::free(1)).is_err());
        assert!(sp.validate(2, &Domain::free(2)).is_err());
    }
}
