//! The height-function transform for radially decreasing densities and its
//! inverse. h(s) is the cutting height under which the density holds mass s;
//! h'(s) is the reciprocal of the volume of the super-level set at that height.

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::scalar::{ball_volume, fl, Real};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct HeightFunction<S: Real> {
    /// interior mass nodes, strictly increasing in (0,1)
    pub s: Vec<S>,
    /// heights h(s_j) > 0, strictly increasing
    pub h: Vec<S>,
    /// derivative samples h'(s_j) = 1 / |super-level set volume|
    pub hp: Vec<S>,
    /// exact limit h'(0+) = 1 / (volume of the support)
    pub hp_at_zero: S,
    /// exact limit h(1-) = ess-sup of the density
    pub h_at_one: S,
}

/// Mass grid with nodes clustered towards s = 1, where h' blows up:
/// s_j = sin(pi j / (2 (J+1))), j = 1..J.
pub fn mass_grid_clustered<S: Real>(count: usize) -> Vec<S> {
    let denom = 2.0 * (count as f64 + 1.0);
    (1..=count)
        .map(|j| fl((std::f64::consts::PI * j as f64 / denom).sin()))
        .collect()
}

pub fn mass_grid_uniform<S: Real>(count: usize) -> Vec<S> {
    (1..=count)
        .map(|j| fl(j as f64 / (count as f64 + 1.0)))
        .collect()
}

/// Radius at which the (linearly interpolated) density crosses height v,
/// i.e. the radius of the super-level set {rho > v}.
pub fn level_radius<S: Real>(rho: &RadialDensity<S>, v: S) -> S {
    let nodes = &rho.grid.nodes;
    let vals = &rho.values;
    if v >= rho.linf() {
        return S::zero();
    }
    if v <= S::zero() {
        return rho.support_radius_interp();
    }
    // vals is non-increasing: find the last index with vals[i] > v
    let (mut lo, mut hi) = (0usize, vals.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if vals[mid] > v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (v0, v1) = (vals[lo], vals[hi]);
    if v0 <= v1 {
        return nodes[lo];
    }
    nodes[lo] + (v0 - v) / (v0 - v1) * (nodes[hi] - nodes[lo])
}

/// Mass held below the cutting height whose level-set radius is r_star:
/// s = h * |{rho > h}| + int_{rho <= h} rho, with h = rho(r_star).
fn mass_below_cut<S: Real>(
    rho: &RadialDensity<S>,
    tail: &[S],
    r_star: S,
) -> (S, S) {
    let grid = &rho.grid;
    let nodes = &grid.nodes;
    let cn: S = ball_volume(grid.dim);
    let wn: S = crate::scalar::sphere_area(grid.dim);
    let half = fl::<S>(0.5);
    let h = rho.value_at(r_star);
    // locate the cell holding r_star
    let i = match nodes.binary_search_by(|x| x.partial_cmp(&r_star).unwrap()) {
        Ok(i) => i,
        Err(i) => (i - 1).min(nodes.len() - 2),
    };
    let tail_int = if i + 1 < nodes.len() {
        let r1 = nodes[i + 1];
        let g0 = h * r_star.powi(grid.dim as i32 - 1);
        let g1 = rho.values[i + 1] * r1.powi(grid.dim as i32 - 1);
        tail[i + 1] + wn * half * (g0 + g1) * (r1 - r_star)
    } else {
        S::zero()
    };
    (h * cn * r_star.powi(grid.dim as i32) + tail_int, h)
}

/// Forward transform. `mass_grid` holds the interior s-nodes in (0,1).
pub fn height_from_density<S: Real>(
    rho: &RadialDensity<S>,
    mass_grid: &[S],
) -> Result<HeightFunction<S>> {
    for &s in mass_grid {
        if s <= S::zero() || s >= S::one() {
            return Err(Error::BadMassCoordinate(s.to_f64().unwrap_or(f64::NAN)));
        }
    }
    let grid = &rho.grid;
    let nodes = &grid.nodes;
    let cn: S = ball_volume(grid.dim);
    let wn: S = crate::scalar::sphere_area(grid.dim);
    let half = fl::<S>(0.5);
    let total = rho.mass();
    if total <= S::zero() {
        return Err(Error::InvalidParameter("zero-mass density".into()));
    }

    // suffix integrals tail[i] = int_{r_i}^{r_M} rho dV, same trapezoid rule
    // as RadialGrid::integrate so that tail[0] == mass exactly
    let m = nodes.len();
    let mut tail = vec![S::zero(); m];
    for i in (0..m - 1).rev() {
        let g0 = rho.values[i] * nodes[i].powi(grid.dim as i32 - 1);
        let g1 = rho.values[i + 1] * nodes[i + 1].powi(grid.dim as i32 - 1);
        tail[i] = tail[i + 1] + wn * half * (g0 + g1) * (nodes[i + 1] - nodes[i]);
    }

    let mut h_out = Vec::with_capacity(mass_grid.len());
    let mut hp_out = Vec::with_capacity(mass_grid.len());
    for &s in mass_grid {
        let target = s * total;
        // mass_below_cut is non-increasing in r_star: total at 0, ~0 at the
        // edge; run the bisection down to rounding so h' is sharp
        let (mut lo, mut hi) = (S::zero(), grid.r_max());
        for _ in 0..110 {
            let mid = half * (lo + hi);
            let (sv, _) = mass_below_cut(rho, &tail, mid);
            if sv > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r_star = half * (lo + hi);
        let (_, h_val) = mass_below_cut(rho, &tail, r_star);
        h_out.push(h_val);
        hp_out.push(S::one() / (cn * r_star.powi(grid.dim as i32)));
    }

    // grid resolution can make neighboring samples collide (tight mass nodes
    // against one density cell); nudge so the structural invariants hold
    for i in 1..h_out.len() {
        let floor = h_out[i - 1] * (S::one() + fl(4.0 * f64::EPSILON));
        if h_out[i] <= floor {
            h_out[i] = floor + S::min_positive_value();
        }
        if hp_out[i] < hp_out[i - 1] {
            hp_out[i] = hp_out[i - 1];
        }
    }

    let support = rho.support_radius_interp();
    Ok(HeightFunction {
        s: mass_grid.to_vec(),
        h: h_out,
        hp: hp_out,
        hp_at_zero: S::one() / (cn * support.powi(grid.dim as i32)),
        h_at_one: rho.linf(),
    })
}

impl<S: Real> HeightFunction<S> {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Support radius of the reconstructed density: (c_n h'(0+))^{-1/n}.
    pub fn support_radius(&self, dim: u32) -> S {
        let cn: S = ball_volume(dim);
        (S::one() / (cn * self.hp_at_zero)).powf(S::one() / fl(dim as f64))
    }

    /// True when h' is strictly increasing (no plateau in the source profile).
    pub fn strictly_convex(&self) -> bool {
        let tol = fl::<S>(1e-12) * self.hp_at_zero.max(S::one());
        let mut prev = self.hp_at_zero;
        for &p in &self.hp {
            if p <= prev + tol {
                return false;
            }
            prev = p;
        }
        true
    }

    /// Check the structural invariants: h > 0 strictly increasing, h' > 0
    /// non-decreasing, discrete convexity of h.
    pub fn validate(&self) -> Result<()> {
        if self.hp_at_zero <= S::zero() || self.h_at_one <= S::zero() {
            return Err(Error::InvalidParameter("height limits must be positive".into()));
        }
        let mut prev_h = S::zero();
        let mut prev_hp = S::zero();
        for ((&s, &h), &p) in self.s.iter().zip(&self.h).zip(&self.hp) {
            if s <= S::zero() || s >= S::one() {
                return Err(Error::BadMassCoordinate(s.to_f64().unwrap_or(f64::NAN)));
            }
            if h <= prev_h {
                return Err(Error::InvalidParameter(format!(
                    "h must be strictly increasing (h({s}) = {h} after {prev_h})"
                )));
            }
            if p <= S::zero() || p + fl::<S>(1e-10) * p.max(S::one()) < prev_hp {
                return Err(Error::InvalidParameter("h' must be positive and non-decreasing".into()));
            }
            prev_h = h;
            prev_hp = p;
        }
        Ok(())
    }

    /// Piecewise-linear h(s) on the extended node set {0} U s U {1}.
    pub fn eval_h(&self, s: S) -> S {
        if s <= S::zero() {
            return S::zero();
        }
        if s >= S::one() {
            return self.h_at_one;
        }
        match self.locate(s) {
            Segment::Below => self.h[0] * s / self.s[0],
            Segment::Above => {
                let s_last = *self.s.last().unwrap();
                let h_last = *self.h.last().unwrap();
                h_last + (self.h_at_one - h_last) * (s - s_last) / (S::one() - s_last)
            }
            Segment::In(i, w) => self.h[i] * (S::one() - w) + self.h[i + 1] * w,
        }
    }

    /// Piecewise-linear h'(s) anchored at the exact s = 0 limit.
    pub fn eval_hp(&self, s: S) -> S {
        if s <= S::zero() {
            return self.hp_at_zero;
        }
        match self.locate(s) {
            Segment::Below => {
                let w = s / self.s[0];
                self.hp_at_zero * (S::one() - w) + self.hp[0] * w
            }
            Segment::Above => *self.hp.last().unwrap(),
            Segment::In(i, w) => self.hp[i] * (S::one() - w) + self.hp[i + 1] * w,
        }
    }

    fn locate(&self, s: S) -> Segment<S> {
        if s < self.s[0] {
            return Segment::Below;
        }
        if s > *self.s.last().unwrap() {
            return Segment::Above;
        }
        let i = match self.s.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(i) if i + 1 == self.s.len() => return Segment::Above,
            Ok(i) => return Segment::In(i, S::zero()),
            Err(i) => i - 1,
        };
        let w = (s - self.s[i]) / (self.s[i + 1] - self.s[i]);
        Segment::In(i, w)
    }

    /// Find s with h'(s) = x on the extended monotone samples. Returns the
    /// mass coordinate; callers outside the range get the clamped endpoint.
    pub fn invert_hp(&self, x: S) -> S {
        if x <= self.hp_at_zero {
            return S::zero();
        }
        if x >= *self.hp.last().unwrap() {
            return *self.s.last().unwrap();
        }
        if x <= self.hp[0] {
            let w = (x - self.hp_at_zero) / (self.hp[0] - self.hp_at_zero);
            return w * self.s[0];
        }
        let (mut lo, mut hi) = (0usize, self.hp.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.hp[mid] < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (x - self.hp[lo]) / (self.hp[hi] - self.hp[lo]);
        self.s[lo] + w * (self.s[hi] - self.s[lo])
    }
}

enum Segment<S> {
    Below,
    Above,
    In(usize, S),
}

/// Inverse transform: rebuild the density on `grid` from a height function.
/// At radius r the density equals h(s*) where h'(s*) = (c_n r^n)^{-1}.
pub fn density_from_height<S: Real>(
    h: &HeightFunction<S>,
    grid: Arc<RadialGrid<S>>,
) -> Result<RadialDensity<S>> {
    h.validate()?;
    let cn: S = ball_volume(grid.dim);
    let dim = grid.dim as i32;
    let values: Vec<S> = grid
        .nodes
        .iter()
        .map(|&r| {
            if r <= S::zero() {
                return h.h_at_one;
            }
            let x = S::one() / (cn * r.powi(dim));
            if x <= h.hp_at_zero {
                return S::zero(); // outside the support
            }
            if x >= *h.hp.last().unwrap() {
                return h.h_at_one; // deep inside; h' samples exhausted
            }
            h.eval_h(h.invert_hp(x))
        })
        .collect();
    RadialDensity::new(grid, values)
}

/// Least-squares fit of p in h'(s) ~ (1-s)^{-p} over the window
/// one_minus_s in [lo, hi].
pub fn fit_singularity_exponent<S: Real>(h: &HeightFunction<S>, lo: S, hi: S) -> S {
    let mut n = S::zero();
    let (mut sx, mut sy, mut sxx, mut sxy) = (S::zero(), S::zero(), S::zero(), S::zero());
    for (&s, &p) in h.s.iter().zip(&h.hp) {
        let oms = S::one() - s;
        if oms >= lo && oms <= hi {
            let x = -oms.ln();
            let y = p.ln();
            n = n + S::one();
            sx = sx + x;
            sy = sy + y;
            sxx = sxx + x * x;
            sxy = sxy + x * y;
        }
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{quadratic_cap, tent, uniform};
    use approx::assert_relative_eq;

    #[test]
    fn uniform_height_is_linear() {
        let g = RadialGrid::uniform(1, 2.0, 4096).unwrap();
        let u = uniform(g, 1.0).unwrap();
        let sg = mass_grid_uniform::<f64>(99);
        let h = height_from_density(&u, &sg).unwrap();
        // grid-sampled uniform has an O(dr) edge cell, so tolerances are
        // discretization-limited, not solver-limited
        for (s, hv) in h.s.iter().zip(&h.h) {
            assert_relative_eq!(*hv, s / 2.0, epsilon = 1e-4);
        }
        for hp in &h.hp {
            assert_relative_eq!(*hp, 0.5, epsilon = 1e-3);
        }
        // the sampled profile has a thin decreasing edge cell, so h' picks up
        // a strict (if tiny) increase; an exactly flat slope is degenerate
        let flat = HeightFunction {
            s: vec![0.25, 0.5, 0.75],
            h: vec![0.125, 0.25, 0.375],
            hp: vec![0.5; 3],
            hp_at_zero: 0.5,
            h_at_one: 0.5,
        };
        assert!(!flat.strictly_convex());
    }

    #[test]
    fn tent_height_closed_form() {
        // tent: s(h) = 1 - (1-h)^2, so h(s) = 1 - sqrt(1-s), h' = 1/(2 sqrt(1-s))
        let g = RadialGrid::uniform(1, 1.5, 4096).unwrap();
        let t = tent(g, 1.0).unwrap();
        let sg = mass_grid_clustered::<f64>(512);
        let h = height_from_density(&t, &sg).unwrap();
        h.validate().unwrap();
        for ((s, hv), hp) in h.s.iter().zip(&h.h).zip(&h.hp) {
            assert_relative_eq!(*hv, 1.0 - (1.0 - s).sqrt(), epsilon = 2e-6);
            assert_relative_eq!(*hp, 0.5 / (1.0 - s).sqrt(), max_relative = 2e-4);
        }
        assert_relative_eq!(h.hp_at_zero, 0.5, max_relative = 1e-6);
        assert!(h.strictly_convex());
    }

    #[test]
    fn tent_round_trip() {
        let g = RadialGrid::uniform(1, 1.5, 4096).unwrap();
        let t = tent(g.clone(), 1.0).unwrap();
        let sg = mass_grid_clustered::<f64>(2048);
        let h = height_from_density(&t, &sg).unwrap();
        let back = density_from_height(&h, g).unwrap();
        assert!(t.l1_distance(&back) < 1e-6);
        assert_relative_eq!(back.mass(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn uniform_from_constant_hprime() {
        // h(s) = s / (c_n R^n) reconstructs the uniform density on B(0,R)
        let dim = 3u32;
        let radius = 1.3f64;
        let cn = ball_volume::<f64>(dim);
        let hp = 1.0 / (cn * radius.powi(3));
        let sg = mass_grid_uniform::<f64>(200);
        let h = HeightFunction {
            s: sg.clone(),
            h: sg.iter().map(|s| s * hp).collect(),
            hp: vec![hp; sg.len()],
            hp_at_zero: hp,
            h_at_one: hp,
        };
        let g = RadialGrid::uniform(dim, 2.0, 1024).unwrap();
        let rho = density_from_height(&h, g).unwrap();
        for (&r, &v) in rho.grid.nodes.iter().zip(&rho.values) {
            let expect = if r < radius { hp } else { 0.0 };
            assert!((v - expect).abs() < 1e-10 || (r - radius).abs() < 2e-3);
        }
        assert_relative_eq!(rho.mass(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn two_layer_hprime_gives_two_step_density() {
        // h' piecewise constant on two mass layers -> two concentric uniform layers
        let dim = 1u32;
        let (p1, p2) = (0.25, 1.0); // level-set radii 2 and 0.5 in 1-D
        let sg = mass_grid_uniform::<f64>(400);
        let h: Vec<f64> = sg
            .iter()
            .map(|&s| if s < 0.5 { s * p1 } else { 0.5 * p1 + (s - 0.5) * p2 })
            .collect();
        let hf = HeightFunction {
            s: sg.clone(),
            h,
            hp: sg.iter().map(|&s| if s < 0.5 { p1 } else { p2 }).collect(),
            hp_at_zero: p1,
            h_at_one: 0.5 * p1 + 0.5 * p2,
        };
        let g = RadialGrid::uniform(dim, 3.0, 3000).unwrap();
        let rho = density_from_height(&hf, g).unwrap();
        // inner value p1*0.5 + ... step at r=0.5 and support edge at r=2
        assert_relative_eq!(rho.value_at(0.25), 0.625, epsilon = 1e-2);
        assert_relative_eq!(rho.value_at(1.0), 0.125, epsilon = 1e-2);
        assert_relative_eq!(rho.value_at(2.5), 0.0, epsilon = 1e-12);
        assert_relative_eq!(rho.mass(), 1.0, epsilon = 1e-2);
    }

    #[test]
    fn hprime_identity_against_level_sets() {
        let g = RadialGrid::uniform(2, 2.0, 4096).unwrap();
        let l = 1.1f64;
        let q = crate::density::RadialDensity::normalized(
            g.clone(),
            g.nodes.iter().map(|&r| (l * l - r * r).max(0.0)).collect(),
        )
        .unwrap();
        let sg = mass_grid_clustered::<f64>(512);
        let h = height_from_density(&q, &sg).unwrap();
        let cn = ball_volume::<f64>(2);
        for (hv, hp) in h.h.iter().zip(&h.hp) {
            let r = level_radius(&q, *hv);
            let oracle = 1.0 / (cn * r * r);
            assert_relative_eq!(*hp, oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn quadratic_cap_singularity_exponent() {
        for dim in 1..=3u32 {
            let g = RadialGrid::uniform(dim, 1.5, 4096).unwrap();
            let q = crate::density::RadialDensity::normalized(
                g.clone(),
                g.nodes.iter().map(|&r| (1.0f64 - r * r).max(0.0)).collect(),
            )
            .unwrap();
            let sg = mass_grid_clustered::<f64>(4096);
            let h = height_from_density(&q, &sg).unwrap();
            let p = fit_singularity_exponent(&h, 1e-5, 1e-2);
            let expect = dim as f64 / (dim as f64 + 2.0);
            assert!(
                (p - expect).abs() / expect < 0.1,
                "dim {dim}: fitted {p}, expected {expect}"
            );
        }
    }

    #[test]
    fn rejects_bad_mass_coordinates() {
        let g = RadialGrid::uniform(1, 1.5, 64).unwrap();
        let t = tent(g, 1.0).unwrap();
        assert!(height_from_density(&t, &[0.0]).is_err());
        assert!(height_from_density(&t, &[1.0]).is_err());
        let _ = quadratic_cap::<f64>(RadialGrid::uniform(1, 2.0, 64).unwrap(), 1.0).unwrap();
    }
}
