//! Sphere-averaged interaction kernels for radial densities, cached as a
//! symmetric matrix per (grid, potential), plus convolution and the
//! interaction energy in physical space.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::potentials::Potential;
use crate::quad::{adaptive_simpson, gauss};
use crate::scalar::{fl, sphere_area, Real};
use rayon::prelude::*;

/// Average of W(|r1 e - r2 omega|) over omega uniform on the unit sphere.
pub fn sphere_avg<S: Real>(w: &Potential<S>, dim: u32, r1: S, r2: S) -> Result<S> {
    if w.k_exponent() <= -(dim as f64) {
        return Err(Error::UnsupportedPotential(
            "kernel not locally integrable in this dimension".into(),
        ));
    }
    let tiny = fl::<S>(1e-14);
    if r1 < tiny || r2 < tiny {
        return w.w(r1.max(r2).max(tiny));
    }
    if let Potential::Step { a } = w {
        // closed-form fraction of the sphere with |r1 e - r2 omega| >= a,
        // i.e. cos(angle) <= ustar
        let ustar = ((r1 * r1 + r2 * r2 - *a * *a) / (fl::<S>(2.0) * r1 * r2))
            .max(-S::one())
            .min(S::one());
        return Ok(match dim {
            1 => {
                let near = if (r1 - r2).abs() >= *a { S::one() } else { S::zero() };
                let far = if r1 + r2 >= *a { S::one() } else { S::zero() };
                (near + far) * fl(0.5)
            }
            2 => (fl::<S>(std::f64::consts::PI) - ustar.acos()) / fl(std::f64::consts::PI),
            _ => (S::one() + ustar) * fl(0.5),
        });
    }
    match dim {
        1 => Ok((w.w((r1 - r2).abs().max(tiny))? + w.w(r1 + r2)?) * fl(0.5)),
        2 => {
            let scale = w.w(r1 + r2)?.abs() + S::one();
            let f = |theta: S| -> S {
                let d2 = r1 * r1 + r2 * r2
                    - fl::<S>(2.0) * r1 * r2 * theta.cos();
                w.w(d2.max(tiny * tiny).sqrt()).unwrap_or(S::zero())
            };
            let v = adaptive_simpson(S::zero(), fl(std::f64::consts::PI), scale * fl(1e-11), f);
            Ok(v / fl(std::f64::consts::PI))
        }
        3 => {
            let (a, b) = ((r1 - r2).abs(), r1 + r2);
            let int = match w {
                Potential::Riesz { k } if *k != S::zero() => {
                    let p = *k + fl(2.0);
                    (b.powf(p) - a.powf(p)) / (*k * p)
                }
                Potential::Riesz { .. } => {
                    // log kernel: int d ln d = d^2/2 ln d - d^2/4
                    let f = |d: S| {
                        if d <= S::zero() {
                            S::zero()
                        } else {
                            d * d * fl::<S>(0.5) * d.ln() - d * d * fl::<S>(0.25)
                        }
                    };
                    f(b) - f(a)
                }
                Potential::Quadratic => (b.powi(4) - a.powi(4)) / fl(8.0),
                _ => gauss(a, b, 8, |d: S| w.w(d).unwrap_or(S::zero()) * d),
            };
            Ok(int / (fl::<S>(2.0) * r1 * r2))
        }
        _ => Err(Error::UnsupportedPotential(format!(
            "sphere-averaged kernel implemented for dimensions 1-3, got {dim}"
        ))),
    }
}

/// Cached symmetric kernel matrix on a grid, with trapezoid weights folded in
/// so convolution is a plain matrix-vector product.
#[derive(Debug, Clone)]
pub struct KernelMatrix<S: Real> {
    pub n: usize,
    /// row-major K(r_i, r_j)
    pub values: Vec<S>,
    /// quadrature weight of node j: omega_n r_j^{n-1} * trapezoid width
    pub weights: Vec<S>,
}

pub fn node_weights<S: Real>(grid: &RadialGrid<S>) -> Vec<S> {
    let wn: S = sphere_area(grid.dim);
    let m = grid.len();
    let half = fl::<S>(0.5);
    (0..m)
        .map(|j| {
            let left = if j > 0 { grid.nodes[j] - grid.nodes[j - 1] } else { S::zero() };
            let right = if j + 1 < m { grid.nodes[j + 1] - grid.nodes[j] } else { S::zero() };
            wn * grid.nodes[j].powi(grid.dim as i32 - 1) * half * (left + right)
        })
        .collect()
}

impl<S: Real> KernelMatrix<S> {
    pub fn build(grid: &RadialGrid<S>, w: &Potential<S>) -> Result<Self> {
        let m = grid.len();
        let rows: Vec<Vec<S>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (0..m)
                    .map(|j| {
                        if j < i {
                            S::nan() // filled from symmetry below
                        } else {
                            sphere_avg(w, grid.dim, grid.nodes[i], grid.nodes[j])
                                .unwrap_or(S::zero())
                        }
                    })
                    .collect()
            })
            .collect();
        let mut values = vec![S::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                values[i * m + j] = if j >= i { rows[i][j] } else { rows[j][i] };
            }
        }
        Ok(Self { n: m, values, weights: node_weights(grid) })
    }

    /// (W * rho)(r_i) for all nodes.
    pub fn convolve(&self, rho: &[S]) -> Vec<S> {
        assert_eq!(rho.len(), self.n);
        let scaled: Vec<S> = rho.iter().zip(&self.weights).map(|(&v, &w)| v * w).collect();
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let row = &self.values[i * self.n..(i + 1) * self.n];
                row.iter().zip(&scaled).map(|(&k, &v)| k * v).sum()
            })
            .collect()
    }
}

/// Streaming convolution without a cached matrix (cheap kernels, big grids).
pub fn convolve_direct<S: Real>(
    w: &Potential<S>,
    grid: &RadialGrid<S>,
    rho: &[S],
) -> Result<Vec<S>> {
    let weights = node_weights(grid);
    let scaled: Vec<S> = rho.iter().zip(&weights).map(|(&v, &wt)| v * wt).collect();
    let support_hint = rho.iter().rposition(|&v| v > S::zero()).map(|i| i + 1).unwrap_or(0);
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = S::zero();
            for j in 0..support_hint {
                if scaled[j] != S::zero() {
                    acc = acc + sphere_avg(w, grid.dim, grid.nodes[i], grid.nodes[j])? * scaled[j];
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Interaction energy (1/2) int rho (W * rho) via the cached kernel.
pub fn interaction_energy<S: Real>(
    grid: &RadialGrid<S>,
    rho: &[S],
    conv: &[S],
) -> S {
    let f: Vec<S> = rho.iter().zip(conv).map(|(&a, &b)| a * b).collect();
    grid.integrate(&f) * fl(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::uniform;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_kernel_closed_form_all_dims() {
        // mean of |x-y|^2/2 over the sphere is (r1^2 + r2^2)/2 in every dim
        let w = Potential::Quadratic;
        for dim in 1..=3u32 {
            for &(r1, r2) in &[(0.3f64, 0.9f64), (1.0, 1.0), (2.0, 0.1)] {
                let k = sphere_avg(&w, dim, r1, r2).unwrap();
                assert_relative_eq!(k, (r1 * r1 + r2 * r2) / 2.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn riesz1_kernel_3d_closed_form() {
        // n=3, W=|x|: mean distance = r> + r<^2/(3 r>)
        let w = Potential::Riesz { k: 1.0f64 };
        let (r1, r2) = (0.4, 1.1);
        let k = sphere_avg(&w, 3, r1, r2).unwrap();
        assert_relative_eq!(k, 1.1 + 0.16 / 3.3, max_relative = 1e-12);
    }

    #[test]
    fn uniform_quadratic_interaction() {
        // I = M2 / 2 = 1/6 for the uniform density on [-1,1]
        let g = RadialGrid::uniform(1, 1.5, 2048).unwrap();
        let u = uniform(g.clone(), 1.0).unwrap();
        let w = Potential::Quadratic;
        let km = KernelMatrix::build(&g, &w).unwrap();
        let conv = km.convolve(&u.values);
        let i = interaction_energy(&g, &u.values, &conv);
        assert_relative_eq!(i, 1.0 / 6.0, max_relative = 2e-3);
    }

    #[test]
    fn step_kernel_vanishes_when_far() {
        let w = Potential::Step { a: 5.0f64 };
        for dim in 1..=3u32 {
            assert_eq!(sphere_avg(&w, dim, 1.0, 1.0).unwrap(), 0.0);
        }
        let near = Potential::Step { a: 0.1f64 };
        for dim in 1..=3u32 {
            let v = sphere_avg(&near, dim, 2.0, 0.5).unwrap();
            assert_eq!(v, 1.0, "dim {dim}");
        }
    }

    #[test]
    fn matrix_and_direct_convolutions_agree() {
        let g = RadialGrid::uniform(2, 2.0, 200).unwrap();
        let u = uniform(g.clone(), 1.0).unwrap();
        let w = Potential::Riesz { k: 0.5f64 };
        let km = KernelMatrix::build(&g, &w).unwrap();
        let a = km.convolve(&u.values);
        let b = convolve_direct(&w, &g, &u.values).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_non_integrable_kernel() {
        let w = Potential::Riesz { k: -1.5f64 };
        assert!(sphere_avg(&w, 1, 0.5, 0.5).is_err());
    }
}
