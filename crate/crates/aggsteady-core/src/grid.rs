//! Radial grids and shell-weighted quadrature.

use crate::error::{Error, Result};
use crate::scalar::{ball_volume, fl, sphere_area, Real};
use std::sync::Arc;

/// A 1-D grid of radii together with the n-dimensional shell volume of each
/// cell [r_i, r_{i+1}].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<S: Real> {
    pub dim: u32,
    pub nodes: Vec<S>,
    /// shell_volumes[i] = c_n (r_{i+1}^n - r_i^n), length nodes.len()-1
    pub shell_volumes: Vec<S>,
}

impl<S: Real> RadialGrid<S> {
    pub fn new(dim: u32, nodes: Vec<S>) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter("need at least two radii".into()));
        }
        if nodes[0] < S::zero() {
            return Err(Error::InvalidParameter("radii must be >= 0".into()));
        }
        for w in nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
            }
        }
        let cn: S = ball_volume(dim);
        let p = |r: S| r.powi(dim as i32);
        let shell_volumes = nodes
            .windows(2)
            .map(|w| cn * (p(w[1]) - p(w[0])))
            .collect();
        Ok(Arc::new(Self { dim, nodes, shell_volumes }))
    }

    /// Uniform grid on [0, r_max] with `cells` cells (cells+1 nodes).
    pub fn uniform(dim: u32, r_max: S, cells: usize) -> Result<Arc<Self>> {
        let h = r_max / fl(cells as f64);
        let nodes = (0..=cells).map(|i| fl::<S>(i as f64) * h).collect();
        Self::new(dim, nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r_max(&self) -> S {
        *self.nodes.last().unwrap()
    }

    pub fn spacing_min(&self) -> S {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(S::infinity(), |a, b| a.min(b))
    }

    /// Trapezoid quadrature of int f dV = omega_n int f(r) r^{n-1} dr
    /// for node-sampled f.
    pub fn integrate(&self, f: &[S]) -> S {
        assert_eq!(f.len(), self.nodes.len());
        let wn: S = sphere_area(self.dim);
        let half = fl::<S>(0.5);
        let mut acc = S::zero();
        for i in 0..self.nodes.len() - 1 {
            let (r0, r1) = (self.nodes[i], self.nodes[i + 1]);
            let g0 = f[i] * r0.powi(self.dim as i32 - 1);
            let g1 = f[i + 1] * r1.powi(self.dim as i32 - 1);
            acc = acc + half * (g0 + g1) * (r1 - r0);
        }
        wn * acc
    }

    /// Total volume covered by the grid shells.
    pub fn total_volume(&self) -> S {
        self.shell_volumes.iter().copied().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shell_volumes_telescope_to_ball_volume() {
        for dim in 1..=3 {
            let g = RadialGrid::<f64>::uniform(dim, 2.5, 777).unwrap();
            let expect = ball_volume::<f64>(dim) * 2.5f64.powi(dim as i32);
            assert_relative_eq!(g.total_volume(), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn integrate_constant_gives_ball_volume() {
        for dim in 1..=3 {
            let g = RadialGrid::<f64>::uniform(dim, 1.0, 4096).unwrap();
            let ones = vec![1.0; g.len()];
            // trapezoid of r^{n-1} is exact for n<=2 and second order for n=3
            let tol = if dim < 3 { 1e-12 } else { 1e-7 };
            assert_relative_eq!(g.integrate(&ones), ball_volume::<f64>(dim), max_relative = tol);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialGrid::<f64>::new(1, vec![0.0, 0.0, 1.0]).is_err());
        assert!(RadialGrid::<f64>::new(0, vec![0.0, 1.0]).is_err());
        assert!(RadialGrid::<f64>::new(1, vec![-0.5, 1.0]).is_err());
    }
}
