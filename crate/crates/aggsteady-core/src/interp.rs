//! The height-linear interpolation curve between two radially decreasing
//! densities, its transport field, and transport-distance diagnostics.
//! This is neither linear interpolation of densities nor the Wasserstein
//! geodesic: the *height functions* are interpolated linearly.

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::height::{density_from_height, height_from_density, HeightFunction};
use crate::scalar::{ball_volume, fl, Real};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct InterpolationCurve<S: Real> {
    pub h0: HeightFunction<S>,
    pub h1: HeightFunction<S>,
    pub dim: u32,
}

impl<S: Real> InterpolationCurve<S> {
    pub fn new(h0: HeightFunction<S>, h1: HeightFunction<S>, dim: u32) -> Result<Self> {
        if h0.s.len() != h1.s.len()
            || h0.s.iter().zip(&h1.s).any(|(a, b)| (*a - *b).abs() > fl(1e-14))
        {
            return Err(Error::MassGridMismatch);
        }
        h0.validate()?;
        h1.validate()?;
        Ok(Self { h0, h1, dim })
    }

    pub fn from_densities(
        rho0: &RadialDensity<S>,
        rho1: &RadialDensity<S>,
        mass_grid: &[S],
    ) -> Result<Self> {
        if rho0.grid.dim != rho1.grid.dim {
            return Err(Error::InvalidParameter("dimension mismatch".into()));
        }
        let h0 = height_from_density(rho0, mass_grid)?;
        let h1 = height_from_density(rho1, mass_grid)?;
        Self::new(h0, h1, rho0.grid.dim)
    }

    /// h_t = (1-t) h0 + t h1, including the exact endpoint anchors.
    pub fn height_at(&self, t: S) -> HeightFunction<S> {
        let u = S::one() - t;
        let lerp = |a: &[S], b: &[S]| -> Vec<S> {
            a.iter().zip(b).map(|(&x, &y)| u * x + t * y).collect()
        };
        HeightFunction {
            s: self.h0.s.clone(),
            h: lerp(&self.h0.h, &self.h1.h),
            hp: lerp(&self.h0.hp, &self.h1.hp),
            hp_at_zero: u * self.h0.hp_at_zero + t * self.h1.hp_at_zero,
            h_at_one: u * self.h0.h_at_one + t * self.h1.h_at_one,
        }
    }

    /// Support radius R_t = ((1-t) R0^{-n} + t R1^{-n})^{-1/n}.
    pub fn support_radius_at(&self, t: S) -> S {
        self.height_at(t).support_radius(self.dim)
    }

    pub fn curve_at(&self, t: S, grid: Arc<RadialGrid<S>>) -> Result<RadialDensity<S>> {
        if t < S::zero() || t > S::one() {
            return Err(Error::InvalidParameter(format!("t must lie in [0,1], got {t}")));
        }
        density_from_height(&self.height_at(t), grid)
    }

    fn require_strict(&self) -> Result<()> {
        if !self.h0.strictly_convex() || !self.h1.strictly_convex() {
            return Err(Error::PlateauEndpoint);
        }
        Ok(())
    }

    /// Mass coordinate s_{r,t} with h_t'(s_{r,t}) = (c_n r^n)^{-1}.
    pub fn solve_srt(&self, r: S, t: S) -> Result<S> {
        self.require_strict()?;
        let rt = self.support_radius_at(t);
        if r <= S::zero() || r >= rt {
            return Err(Error::OutsideSupport {
                r: r.to_f64().unwrap_or(f64::NAN),
                support: rt.to_f64().unwrap_or(f64::NAN),
            });
        }
        let cn: S = ball_volume(self.dim);
        let x = S::one() / (cn * r.powi(self.dim as i32));
        Ok(self.height_at(t).invert_hp(x))
    }

    /// Radial velocity of the curve's transport field:
    /// v(r,t) = r (h0 - h1)(s_{r,t}) / (n h_t(s_{r,t})).
    pub fn transport_field(&self, r: S, t: S) -> Result<S> {
        let s = self.solve_srt(r, t)?;
        let ht = self.height_at(t);
        Ok(r * (self.h0.eval_h(s) - self.h1.eval_h(s)) / (fl::<S>(self.dim as f64) * ht.eval_h(s)))
    }

    /// The t-independent constant with |v(r,t)| <= C r:
    /// C = sup_s max(h0/h1, h1/h0) / n.
    pub fn velocity_ratio_bound(&self) -> S {
        let mut sup = S::zero();
        for (&a, &b) in self.h0.h.iter().zip(&self.h1.h) {
            sup = sup.max(a / b).max(b / a);
        }
        sup = sup
            .max(self.h0.h_at_one / self.h1.h_at_one)
            .max(self.h1.h_at_one / self.h0.h_at_one);
        sup / fl(self.dim as f64)
    }

    /// Kinetic energy of the transport field at time t:
    /// int |V|^2 d rho_t = int_0^1 v(r(s), t)^2 ds in the mass coordinate.
    pub fn kinetic_energy(&self, t: S) -> S {
        let ht = self.height_at(t);
        let cn: S = ball_volume(self.dim);
        let n_inv = S::one() / fl::<S>(self.dim as f64);
        let mut acc = S::zero();
        let mut prev_s = S::zero();
        let mut prev_v2 = {
            // s -> 0 limit: r -> R_t, (h0-h1)/h_t -> ratio of slopes at 0
            let r = ht.support_radius(self.dim);
            let dv = (self.h0.hp_at_zero - self.h1.hp_at_zero) / ht.hp_at_zero;
            let v = r * dv * n_inv;
            v * v
        };
        let half = fl::<S>(0.5);
        for ((&s, &h0v), (&h1v, &htp)) in self
            .h0
            .s
            .iter()
            .zip(&self.h0.h)
            .zip(self.h1.h.iter().zip(&ht.hp))
        {
            let htv = ht.eval_h(s);
            let r = (S::one() / (cn * htp)).powf(S::one() / fl(self.dim as f64));
            let v = r * (h0v - h1v) / (fl::<S>(self.dim as f64) * htv);
            let v2 = v * v;
            acc = acc + half * (prev_v2 + v2) * (s - prev_s);
            prev_s = s;
            prev_v2 = v2;
        }
        // top panel: v -> 0 as s -> 1 (r -> 0, heights stay bounded)
        acc + half * prev_v2 * (S::one() - prev_s)
    }

    /// Benamou-Brenier style upper bound on d2(rho_{t1}, rho_{t2}):
    /// returns (quadrature bound, crude C max(R0,R1) |t2-t1| bound).
    pub fn wasserstein_lipschitz_bound(&self, t1: S, t2: S) -> Result<(S, S)> {
        self.require_strict()?;
        let dt = (t2 - t1).abs();
        if dt == S::zero() {
            return Ok((S::zero(), S::zero()));
        }
        let samples = 17;
        let mut sup = S::zero();
        for i in 0..=samples {
            let t = t1 + (t2 - t1) * fl(i as f64 / samples as f64);
            sup = sup.max(self.kinetic_energy(t));
        }
        let tight = sup.sqrt() * dt;
        let r_max = self
            .h0
            .support_radius(self.dim)
            .max(self.h1.support_radius(self.dim));
        let crude = self.velocity_ratio_bound() * r_max * dt;
        Ok((tight, crude.max(tight)))
    }
}

/// Exact 1-D 2-Wasserstein distance between symmetric-decreasing densities via
/// quantile functions: d2^2 = int_0^1 (Q0 - Q1)^2 dw on the half line.
pub fn quantile_distance_1d<S: Real>(
    rho0: &RadialDensity<S>,
    rho1: &RadialDensity<S>,
    panels: usize,
) -> Result<S> {
    if rho0.grid.dim != 1 || rho1.grid.dim != 1 {
        return Err(Error::InvalidParameter("quantile distance is 1-D only".into()));
    }
    let cum = |rho: &RadialDensity<S>| -> Vec<S> {
        // half-line cumulative mass (total 1/2 for a unit-mass density)
        let mut c = vec![S::zero(); rho.grid.len()];
        for i in 1..rho.grid.len() {
            let dr = rho.grid.nodes[i] - rho.grid.nodes[i - 1];
            c[i] = c[i - 1] + fl::<S>(0.5) * (rho.values[i] + rho.values[i - 1]) * dr;
        }
        c
    };
    let (c0, c1) = (cum(rho0), cum(rho1));
    let quantile = |c: &[S], grid: &RadialGrid<S>, target: S| -> S {
        let total = *c.last().unwrap();
        let target = target.min(total);
        let mut lo = 0usize;
        let mut hi = c.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if c[mid] < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let span = c[hi] - c[lo];
        if span <= S::zero() {
            return grid.nodes[lo];
        }
        grid.nodes[lo] + (target - c[lo]) / span * (grid.nodes[hi] - grid.nodes[lo])
    };
    let half_mass0 = *c0.last().unwrap();
    let half_mass1 = *c1.last().unwrap();
    let mut acc = S::zero();
    let h = S::one() / fl(panels as f64);
    for i in 0..panels {
        let w = (fl::<S>(i as f64) + fl(0.5)) * h;
        let q0 = quantile(&c0, &rho0.grid, w * half_mass0);
        let q1 = quantile(&c1, &rho1.grid, w * half_mass1);
        acc = acc + (q0 - q1) * (q0 - q1) * h;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{tent, uniform};
    use crate::height::mass_grid_clustered;
    use approx::assert_relative_eq;

    fn tent_pair(scale: f64) -> (InterpolationCurve<f64>, Arc<RadialGrid<f64>>) {
        let g = RadialGrid::uniform(1, 3.0, 4096).unwrap();
        let t0 = tent(g.clone(), 1.0).unwrap();
        let t1 = tent(g.clone(), scale).unwrap();
        let sg = mass_grid_clustered::<f64>(2048);
        (InterpolationCurve::from_densities(&t0, &t1, &sg).unwrap(), g)
    }

    #[test]
    fn degenerate_curve_is_constant() {
        let (c, g) = tent_pair(1.0);
        let mid = c.curve_at(0.5, g.clone()).unwrap();
        let t0 = tent(g, 1.0).unwrap();
        assert!(mid.l1_distance(&t0) < 1e-5);
        for i in 1..10 {
            let r = i as f64 * 0.09;
            assert!(c.transport_field(r, 0.5).unwrap().abs() < 1e-9);
        }
        let (bb, crude) = c.wasserstein_lipschitz_bound(0.1, 0.9).unwrap();
        assert!(bb < 1e-9);
        assert!(crude >= bb);
    }

    #[test]
    fn support_radius_formula() {
        let g = RadialGrid::uniform(1, 3.0, 2048).unwrap();
        let u0 = uniform(g.clone(), 1.0).unwrap();
        let u1 = uniform(g.clone(), 2.0).unwrap();
        let sg = crate::height::mass_grid_uniform::<f64>(512);
        let c = InterpolationCurve::from_densities(&u0, &u1, &sg).unwrap();
        // n=1, R0=1, R1=2, t=1/2 -> 1/R = (1/2)(1 + 1/2) = 3/4 -> R = 4/3
        // endpoint supports are only known to within one grid cell
        assert_relative_eq!(c.support_radius_at(0.5), 4.0 / 3.0, epsilon = 1e-2);
        // uniform endpoints interpolate to a uniform on B(0, R_t)
        let mid = c.curve_at(0.5, g).unwrap();
        assert_relative_eq!(mid.value_at(0.5), 1.0 / (2.0 * 4.0 / 3.0), epsilon = 1e-3);
        assert_relative_eq!(mid.mass(), 1.0, epsilon = 1e-3);
        // an exactly flat height slope (true plateau) rejects the transport
        // field; the grid-sampled uniform above has a thin decreasing edge
        // cell, so build the degenerate profile by hand
        let s: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let h: Vec<f64> = s.iter().map(|v| v / 2.0).collect();
        let flat = crate::height::HeightFunction {
            s,
            h,
            hp: vec![0.5; 9],
            hp_at_zero: 0.5,
            h_at_one: 0.5,
        };
        let degenerate = InterpolationCurve::new(flat.clone(), flat, 1).unwrap();
        assert!(matches!(degenerate.solve_srt(0.5, 0.5), Err(Error::PlateauEndpoint)));
    }

    #[test]
    fn srt_matches_level_set_inversion() {
        let (c, g) = tent_pair(1.7);
        let t = 0.4;
        let rho_t = c.curve_at(t, g).unwrap();
        for r in [0.2, 0.5, 0.8, 1.0] {
            let s = c.solve_srt(r, t).unwrap();
            // consistency rho_t(r) = h_t(s_{r,t})
            let ht = c.height_at(t);
            assert_relative_eq!(rho_t.value_at(r), ht.eval_h(s), epsilon = 1e-5);
            // independent oracle: s from the level-set radius of rho_t
            let v = rho_t.value_at(r);
            let r_back = crate::height::level_radius(&rho_t, v);
            assert_relative_eq!(r_back, r, epsilon = 1e-4);
        }
        // r -> 0+ pushes s -> 1
        let s_small = c.solve_srt(1e-4, t).unwrap();
        assert!(s_small > 0.999);
    }

    #[test]
    fn outward_flow_when_target_is_flatter() {
        let (c, _) = tent_pair(1.8); // rho1 flatter and wider: h1 < h0
        for r in [0.2, 0.6, 0.9] {
            assert!(c.transport_field(r, 0.5).unwrap() > 0.0);
        }
        // velocity ratio bound holds pointwise
        let cb = c.velocity_ratio_bound();
        for i in 1..40 {
            let r = i as f64 * 0.025;
            let t = 0.3;
            if r < c.support_radius_at(t) {
                let v = c.transport_field(r, t).unwrap();
                assert!(v.abs() <= cb * r * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn continuity_equation_residual_shrinks() {
        let (c, g) = tent_pair(1.6);
        let t = 0.5;
        let dt = 1e-4;
        let rho_p = c.curve_at(t + dt, g.clone()).unwrap();
        let rho_m = c.curve_at(t - dt, g.clone()).unwrap();
        let rho = c.curve_at(t, g).unwrap();
        // residual of d rho/dt + (1/r^{n-1}) d_r (r^{n-1} v rho) at mid radii
        let dr = 1e-3;
        let mut max_res: f64 = 0.0;
        for i in 4..10 {
            let r = i as f64 * 0.1;
            let drho_dt = (rho_p.value_at(r) - rho_m.value_at(r)) / (2.0 * dt);
            let flux = |rr: f64| c.transport_field(rr, t).unwrap() * rho.value_at(rr);
            let div = (flux(r + dr) - flux(r - dr)) / (2.0 * dr);
            max_res = max_res.max((drho_dt + div).abs());
        }
        assert!(max_res < 5e-2, "continuity residual {max_res}");
    }

    #[test]
    fn bb_bound_dominates_exact_distance() {
        let (c, g) = tent_pair(1.9);
        for (t1, t2) in [(0.0, 1.0), (0.2, 0.7), (0.45, 0.55)] {
            let r0 = c.curve_at(t1, g.clone()).unwrap();
            let r1 = c.curve_at(t2, g.clone()).unwrap();
            let exact = quantile_distance_1d(&r0, &r1, 4000).unwrap();
            let (bb, crude) = c.wasserstein_lipschitz_bound(t1, t2).unwrap();
            assert!(exact <= bb * (1.0 + 1e-2), "exact {exact} vs bb {bb}");
            assert!(bb <= crude * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mismatched_mass_grids_rejected() {
        let g = RadialGrid::uniform(1, 2.0, 256).unwrap();
        let t0 = tent(g.clone(), 1.0).unwrap();
        let h0 = height_from_density(&t0, &mass_grid_clustered::<f64>(64)).unwrap();
        let h1 = height_from_density(&t0, &mass_grid_clustered::<f64>(65)).unwrap();
        assert!(matches!(
            InterpolationCurve::new(h0, h1, 1),
            Err(Error::MassGridMismatch)
        ));
    }
}
