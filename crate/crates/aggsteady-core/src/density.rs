//! Radially decreasing densities sampled on a radial grid.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::scalar::{fl, Real};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct RadialDensity<S: Real> {
    pub grid: Arc<RadialGrid<S>>,
    pub values: Vec<S>,
    mass: S,
    linf: S,
    /// largest node radius with a strictly positive value
    support_radius: S,
}

/// Relative tolerance for the non-increasing check.
const MONOTONE_TOL: f64 = 1e-12;

impl<S: Real> RadialDensity<S> {
    pub fn new(grid: Arc<RadialGrid<S>>, values: Vec<S>) -> Result<Self> {
        Self::with_tolerance(grid, values, MONOTONE_TOL)
    }

    /// Like `new` but with a caller-chosen relative monotonicity tolerance;
    /// used for profiles produced by the finite-volume scheme, whose moving
    /// front carries wiggles above round-off.
    pub fn with_tolerance(
        grid: Arc<RadialGrid<S>>,
        mut values: Vec<S>,
        tol_rel: f64,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "value count {} does not match grid ({})",
                values.len(),
                grid.len()
            )));
        }
        let linf = values.iter().copied().fold(S::zero(), S::max);
        let tol = fl::<S>(tol_rel) * linf.max(S::one());
        // measure rises against the running minimum, not the neighbor: a
        // gradual bump of many sub-tolerance increments is still a bump
        let mut run_min = S::infinity();
        for (i, v) in values.iter().enumerate() {
            if *v > run_min + tol {
                return Err(Error::NonMonotoneDensity {
                    index: i,
                    delta: (*v - run_min).to_f64().unwrap_or(f64::NAN),
                });
            }
            run_min = run_min.min(*v);
        }
        // clamp away round-off negatives and tiny monotonicity violations
        let mut run_min = S::infinity();
        for v in values.iter_mut() {
            if *v < S::zero() {
                *v = S::zero();
            }
            run_min = run_min.min(*v);
            *v = run_min;
        }
        let mass = grid.integrate(&values);
        let support_radius = values
            .iter()
            .rposition(|&v| v > S::zero())
            .map(|i| grid.nodes[i])
            .unwrap_or(S::zero());
        Ok(Self { grid, values, mass, linf, support_radius })
    }

    /// Build and rescale to unit mass.
    pub fn normalized(grid: Arc<RadialGrid<S>>, values: Vec<S>) -> Result<Self> {
        let d = Self::new(grid, values)?;
        if d.mass <= S::zero() {
            return Err(Error::InvalidParameter("cannot normalize a zero density".into()));
        }
        let scale = S::one() / d.mass;
        let values = d.values.iter().map(|&v| v * scale).collect();
        Self::new(d.grid, values)
    }

    pub fn mass(&self) -> S {
        self.mass
    }

    pub fn linf(&self) -> S {
        self.linf
    }

    pub fn support_radius(&self) -> S {
        self.support_radius
    }

    /// Support radius with the last positive segment extrapolated to its zero
    /// crossing; sharper than the node-based radius for profiles vanishing
    /// linearly at the edge.
    pub fn support_radius_interp(&self) -> S {
        let vals = &self.values;
        match vals.iter().rposition(|&v| v > S::zero()) {
            None => S::zero(),
            Some(i) if i + 1 == vals.len() => self.grid.nodes[i],
            Some(i) => {
                let (r0, r1) = (self.grid.nodes[i], self.grid.nodes[i + 1]);
                let (v0, v1) = (vals[i], vals[i + 1]);
                // v1 == 0 here; local slope from the previous cell gives the crossing
                if i == 0 || vals[i - 1] <= v0 {
                    r0 + v0 / (v0 - v1).max(fl(1e-300)) * (r1 - r0)
                } else {
                    let slope = (vals[i - 1] - v0) / (self.grid.nodes[i] - self.grid.nodes[i - 1]);
                    (r0 + v0 / slope).min(r1)
                }
            }
        }
    }

    /// Linear interpolation in r; zero outside the grid.
    pub fn value_at(&self, r: S) -> S {
        let nodes = &self.grid.nodes;
        if r <= nodes[0] {
            return self.values[0];
        }
        if r >= *nodes.last().unwrap() {
            return S::zero();
        }
        let i = match nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let w = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.values[i] * (S::one() - w) + self.values[i + 1] * w
    }

    /// ( int rho^p dV )^{1/p}; p >= 1.
    pub fn lp_norm(&self, p: S) -> Result<S> {
        if p < S::one() {
            return Err(Error::InvalidParameter(format!("lp_norm needs p >= 1, got {p}")));
        }
        let f: Vec<S> = self.values.iter().map(|&v| v.powf(p)).collect();
        Ok(self.grid.integrate(&f).powf(S::one() / p))
    }

    /// int rho |x|^order dV.
    pub fn moment(&self, order: u32) -> S {
        let f: Vec<S> = self
            .values
            .iter()
            .zip(&self.grid.nodes)
            .map(|(&v, &r)| v * r.powi(order as i32))
            .collect();
        self.grid.integrate(&f)
    }

    /// int rho^p dV without the root (handy for tracking d/dt of the p-energy).
    pub fn lp_energy(&self, p: S) -> S {
        let f: Vec<S> = self.values.iter().map(|&v| v.powf(p)).collect();
        self.grid.integrate(&f)
    }

    /// True when the profile is strictly decreasing inside its support
    /// (no interior plateau wider than the noise floor).
    pub fn strictly_decreasing(&self, floor: S) -> bool {
        let mut inside = false;
        for w in self.values.windows(2).rev() {
            if w[1] > S::zero() {
                inside = true;
            }
            if inside && w[0] - w[1] < floor && w[0] > S::zero() {
                return false;
            }
        }
        true
    }

    /// L1 distance to another density; the other is interpolated onto this grid.
    pub fn l1_distance(&self, other: &Self) -> S {
        let f: Vec<S> = self
            .values
            .iter()
            .zip(&self.grid.nodes)
            .map(|(&v, &r)| (v - other.value_at(r)).abs())
            .collect();
        self.grid.integrate(&f)
    }

    /// Interpolate onto another grid (and renormalize to the current mass).
    pub fn resample(&self, grid: Arc<RadialGrid<S>>) -> Result<Self> {
        let values: Vec<S> = grid.nodes.iter().map(|&r| self.value_at(r)).collect();
        let d = Self::new(grid, values)?;
        if d.mass > S::zero() {
            let scale = self.mass / d.mass;
            let values = d.values.iter().map(|&v| v * scale).collect();
            Self::new(d.grid, values)
        } else {
            Ok(d)
        }
    }
}

/// Tent profile (1-|x|)_+ scaled to the given support radius, unit mass in 1-D.
pub fn tent<S: Real>(grid: Arc<RadialGrid<S>>, support: S) -> Result<RadialDensity<S>> {
    let values = grid
        .nodes
        .iter()
        .map(|&r| (S::one() - r / support).max(S::zero()) / support)
        .collect();
    RadialDensity::new(grid, values)
}

/// Quadratic cap (L^2 - r^2)_+ / 4; unit mass in 1-D when L = 3^{1/3}.
pub fn quadratic_cap<S: Real>(grid: Arc<RadialGrid<S>>, l: S) -> Result<RadialDensity<S>> {
    let values = grid
        .nodes
        .iter()
        .map(|&r| ((l * l - r * r) / fl(4.0)).max(S::zero()))
        .collect();
    RadialDensity::new(grid, values)
}

/// Uniform probability density on the ball of radius R in dimension n.
pub fn uniform<S: Real>(grid: Arc<RadialGrid<S>>, radius: S) -> Result<RadialDensity<S>> {
    let cn: S = crate::scalar::ball_volume(grid.dim);
    let h = S::one() / (cn * radius.powi(grid.dim as i32));
    let values = grid
        .nodes
        .iter()
        .map(|&r| if r <= radius { h } else { S::zero() })
        .collect();
    RadialDensity::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tent_mass_and_moment() {
        let g = RadialGrid::uniform(1, 2.0, 4096).unwrap();
        let t = tent(g, 1.0).unwrap();
        assert_relative_eq!(t.mass(), 1.0, epsilon = 1e-7);
        // first moment of the 1-D tent: 2 * int_0^1 (1-x) x dx = 1/3
        assert_relative_eq!(t.moment(1), 1.0 / 3.0, epsilon = 1e-7);
        assert_relative_eq!(t.support_radius_interp(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_l2_norm() {
        let g = RadialGrid::uniform(1, 1.5, 2048).unwrap();
        let u = uniform(g, 1.0).unwrap();
        // int (1/2)^2 over [-1,1] = 1/2
        assert_relative_eq!(u.lp_energy(2.0), 0.5, epsilon = 1e-3);
        assert_relative_eq!(u.moment(0), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn quadratic_cap_unit_mass_at_cbrt3() {
        let l = 3f64.powf(1.0 / 3.0);
        let g = RadialGrid::uniform(1, 2.0, 8192).unwrap();
        let q = quadratic_cap(g, l).unwrap();
        assert_relative_eq!(q.mass(), 1.0, epsilon = 1e-8);
        assert_relative_eq!(q.linf(), l * l / 4.0, epsilon = 1e-8);
    }

    #[test]
    fn rejects_increasing_profile() {
        let g = RadialGrid::uniform(1, 1.0, 8).unwrap();
        let vals = vec![0.1, 0.2, 0.3, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0];
        assert!(RadialDensity::new(g, vals).is_err());
    }
}
