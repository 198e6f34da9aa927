//! Histogram density and momentum fields of the empirical distribution.

use thiserror::Error;

use crate::diagnostics::fmt_f64;
use crate::domain::Domain;
use crate::dynamics::AgentState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentsError {
    #[error("resolution must be at least 1 cell per axis")]
    ZeroResolution,
    #[error("state has dimension {state}, domain has {domain}")]
    DimensionMismatch { state: usize, domain: usize },
}

/// Cell densities on a regular grid, cells numbered with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    pub dim: usize,
    pub resolution: usize,
    /// Lower corner of the grid.
    pub origin: Vec<f64>,
    /// Cell width per axis.
    pub width: Vec<f64>,
    pub rho: Vec<f64>,
    /// `rho u`, row-major with `dim` entries per cell.
    pub rho_u: Vec<f64>,
}

impl MomentField {
    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.width.iter().product()
    }

    /// Multi-index of cell `c`.
    pub fn cell_index(&self, c: usize) -> Vec<usize> {
        let mut rest = c;
        (0..self.dim)
            .map(|_| {
                let k = rest % self.resolution;
                rest /= self.resolution;
                k
            })
            .collect()
    }

    pub fn cell_center(&self, c: usize) -> Vec<f64> {
        self.cell_index(c)
            .iter()
            .enumerate()
            .map(|(a, &k)| self.origin[a] + (k as f64 + 0.5) * self.width[a])
            .collect()
    }

    /// `sum_cells rho * volume`.
    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.cell_volume()
    }

    /// `sum_cells rho u * volume`.
    pub fn total_momentum(&self) -> Vec<f64> {
        let vol = self.cell_volume();
        let mut p = vec![0.0; self.dim];
        for cell in self.rho_u.chunks_exact(self.dim) {
            for (pk, c) in p.iter_mut().zip(cell) {
                *pk += c;
            }
        }
        p.iter().map(|x| x * vol).collect()
    }

    /// Columns: `cell`, `i_0..`, `x_0..`, `rho`, `rho_u_0..`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["cell".to_string()];
        header.extend((0..self.dim).map(|k| format!("i_{k}")));
        header.extend((0..self.dim).map(|k| format!("x_{k}")));
        header.push("rho".into());
        header.extend((0..self.dim).map(|k| format!("rho_u_{k}")));
        wr.write_record(&header)?;
        for c in 0..self.cells() {
            let mut row = vec![c.to_string()];
            row.extend(self.cell_index(c).iter().map(|k| k.to_string()));
            row.extend(self.cell_center(c).iter().map(|x| fmt_f64(*x)));
            row.push(fmt_f64(self.rho[c]));
            row.extend(self.rho_u[c * self.dim..(c + 1) * self.dim].iter().map(|x| fmt_f64(*x)));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Grid along one axis: `(origin, width)`.
fn axis_grid(lo: f64, hi: f64, res: usize) -> (f64, f64) {
    let extent = hi - lo;
    let h = if extent <= 0.0 {
        1.0
    } else if res == 1 {
        2.0 * extent
    } else {
        // the bounding box plus one cell, centred
        extent / (res - 1) as f64
    };
    (lo - (res as f64 * h - extent) / 2.0, h)
}

/// Deposit `m_i` and `m_i v_i` into the cell containing `x_i` and divide by
/// the cell volume.
///
/// Free space uses the bounding box of the positions grown by one cell; the
/// torus uses its fundamental cell. Intervals are closed below and open
/// above.
pub fn empirical_moments(state: &AgentState, dom: &Domain, resolution: usize) -> Result<MomentField, MomentsError> {
    if resolution == 0 {
        return Err(MomentsError::ZeroResolution);
    }
    let dim = state.dim();
    if dim != dom.dim() {
        return Err(MomentsError::DimensionMismatch {
            state: dim,
            domain: dom.dim(),
        });
    }
    let (origin, width): (Vec<f64>, Vec<f64>) = match dom {
        Domain::Torus { period } => period.iter().map(|p| (0.0, p / resolution as f64)).unzip(),
        Domain::Free { .. } => (0..dim)
            .map(|a| {
                let (lo, hi) = state
                    .positions
                    .rows()
                    .map(|r| r[a])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                axis_grid(lo, hi, resolution)
            })
            .unzip(),
    };
    let cells = resolution.pow(dim as u32);
    let mut mass = vec![0.0; cells];
    let mut mom = vec![0.0; cells * dim];
    for (i, x) in state.positions.rows().enumerate() {
        let mut c = 0;
        let mut stride = 1;
        for a in 0..dim {
            let f = ((x[a] - origin[a]) / width[a]).floor();
            let k = if dom.is_periodic() {
                (f as i64).rem_euclid(resolution as i64) as usize
            } else {
                f.clamp(0.0, (resolution - 1) as f64) as usize
            };
            c += k * stride;
            stride *= resolution;
        }
        let m = state.masses.get(i);
        mass[c] += m;
        for (k, v) in state.velocities.row(i).iter().enumerate() {
            mom[c * dim + k] += m * v;
        }
    }
    let vol: f64 = width.iter().product();
    Ok(MomentField {
        dim,
        resolution,
        origin,
        width,
        rho: mass.into_iter().map(|m| m / vol).collect(),
        rho_u: mom.into_iter().map(|p| p / vol).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Points;
    use crate::spectral::MassVector;

    fn state(x: Vec<f64>, v: Vec<f64>, m: Vec<f64>, dim: usize) -> AgentState {
        AgentState::new(
            Points::new(dim, x).unwrap(),
            Points::new(dim, v).unwrap(),
            MassVector::new(m).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_cell_holds_everything() {
        let s = state(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, -0.5], vec![0.2, 0.3, 0.5], 1);
        let f = empirical_moments(&s, &Domain::free(1), 1).unwrap();
        assert_eq!(f.cells(), 1);
        assert!((f.total_mass() - 1.0).abs() < 1e-15);
        assert!((f.total_momentum()[0] - (0.2 + 0.6 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn separated_agents_land_in_separate_cells() {
        let s = state(vec![0.0, 1.0], vec![1.0, -1.0], vec![0.5, 0.5], 1);
        let f = empirical_moments(&s, &Domain::free(1), 2).unwrap();
        let vol = f.cell_volume();
        assert_eq!(f.rho.iter().map(|r| r * vol).collect::<Vec<_>>(), vec![0.5, 0.5]);
    }

    #[test]
    fn torus_wraps_and_uses_lower_closed_cells() {
        let s = state(vec![0.0, 2.5, 9.999], vec![1.0, 1.0, 1.0], vec![0.25, 0.25, 0.5], 1);
        let f = empirical_moments(&s, &Domain::torus(vec![10.0]), 4).unwrap();
        let mass: Vec<f64> = f.rho.iter().map(|r| r * f.cell_volume()).collect();
        assert_eq!(mass, vec![0.25, 0.25, 0.0, 0.5]);
    }

    #[test]
    fn two_dimensional_indexing() {
        let s = state(vec![0.0, 0.0, 1.0, 1.0], vec![0.0; 4], vec![0.5, 0.5], 2);
        let f = empirical_moments(&s, &Domain::free(2), 2).unwrap();
        assert_eq!(f.cell_index(3), vec![1, 1]);
        assert!(f.rho[0] > 0.0 && f.rho[3] > 0.0 && f.rho[1] == 0.0);
        assert_eq!(f.cell_center(0), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_zero_resolution() {
        let s = state(vec![0.0], vec![0.0], vec![1.0], 1);
        assert_eq!(
            empirical_moments(&s, &Domain::free(1), 0).unwrap_err(),
            MomentsError::ZeroResolution
        );
    }
}
