//! Entropy and interaction functionals, their restriction to height-linear
//! interpolation curves, and the convexity certificate built from discrete
//! second differences in t.

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::geometry::{ball_intersection_two, classify_rect, rect_integrand, RectCase};
use crate::grid::RadialGrid;
use crate::height::HeightFunction;
use crate::interp::InterpolationCurve;
use crate::kernel::{interaction_energy, KernelMatrix};
use crate::potentials::Potential;
use crate::quad::gauss;
use crate::scalar::{ball_volume, fl, sphere_area, Real};
use rayon::prelude::*;
use serde::Serialize;

/// (1/(m-1)) int rho^m, physical-space route.
pub fn entropy<S: Real>(rho: &RadialDensity<S>, m: S) -> Result<S> {
    if m <= S::one() {
        return Err(Error::InvalidParameter(format!("entropy needs m > 1, got {m}")));
    }
    let powered: Vec<S> = rho.values.iter().map(|&v| v.powf(m)).collect();
    Ok(rho.grid.integrate(&powered) / (m - S::one()))
}

/// Same functional through the height representation:
/// (m/(m-1)) int_0^1 h^{m-1} ds.
pub fn entropy_height<S: Real>(h: &HeightFunction<S>, m: S) -> Result<S> {
    if m <= S::one() {
        return Err(Error::InvalidParameter(format!("entropy needs m > 1, got {m}")));
    }
    let p = m - S::one();
    let mut acc = S::zero();
    let mut prev_s = S::zero();
    let mut prev_v = S::zero(); // h(0) = 0
    for (&s, &hv) in h.s.iter().zip(&h.h) {
        let v = hv.powf(p);
        acc = acc + (s - prev_s) * (v + prev_v) * fl(0.5);
        prev_s = s;
        prev_v = v;
    }
    let top = h.h_at_one.powf(p);
    acc = acc + (S::one() - prev_s) * (top + prev_v) * fl(0.5);
    Ok(acc * m / p)
}

pub fn entropy_on_curve<S: Real>(c: &InterpolationCurve<S>, t: S, m: S) -> Result<S> {
    entropy_height(&c.height_at(t), m)
}

/// Interaction energy (1/2) int rho (W * rho), building a kernel cache for
/// the density's grid. Callers that already hold a cache should use
/// `kernel::interaction_energy` directly.
pub fn interaction<S: Real>(rho: &RadialDensity<S>, w: &Potential<S>) -> Result<S> {
    let km = KernelMatrix::build(&rho.grid, w)?;
    let conv = km.convolve(&rho.values);
    Ok(interaction_energy(&rho.grid, &rho.values, &conv))
}

/// Mean of W(|x-y|) over x uniform in a ball of radius r1 and y uniform in a
/// ball of radius r2 (concentric centers). Smooth in (r1, r2), which is what
/// makes curve evaluations differentiable in t.
pub fn pair_mean<S: Real>(w: &Potential<S>, dim: u32, r1: S, r2: S) -> Result<S> {
    if w.k_exponent() <= -(dim as f64) {
        return Err(Error::UnsupportedPotential(
            "kernel not locally integrable in this dimension".into(),
        ));
    }
    let cn: S = ball_volume(dim);
    let wn: S = sphere_area(dim);
    let ni = dim as i32;
    let (rmin, rmax) = (r1.min(r2), r1.max(r2));
    let tiny = fl::<S>(1e-12);
    let shell = |s: S| -> S {
        if s <= S::zero() {
            S::zero()
        } else {
            w.w(s).unwrap_or(S::zero()) * wn * s.powi(ni - 1)
        }
    };
    if rmax < tiny {
        return w.w(tiny);
    }
    if rmin < tiny * rmax {
        // point against a ball: mean of W over one ball
        let v = gauss(S::zero(), rmax.sqrt(), 6, |u| {
            let s = u * u;
            shell(s) * fl::<S>(2.0) * u
        });
        return Ok(v / (cn * rmax.powi(ni)));
    }
    let d = (r1 - r2).abs();
    let b = r1 + r2;
    // full containment region: overlap volume is the whole small ball
    let low = if d > tiny {
        let v = gauss(S::zero(), d.sqrt(), 6, |u| {
            let s = u * u;
            shell(s) * fl::<S>(2.0) * u
        });
        v * cn * rmin.powi(ni)
    } else {
        S::zero()
    };
    // partial overlap: substitute out the half-power endpoint behavior
    let mid = (d + b) * fl::<S>(0.5);
    let f = |s: S| shell(s) * ball_intersection_two(dim, r1, r2, s);
    let left = gauss(S::zero(), (mid - d).max(S::zero()).sqrt(), 8, |u| {
        f(d + u * u) * fl::<S>(2.0) * u
    });
    let right = gauss(S::zero(), (b - mid).max(S::zero()).sqrt(), 8, |u| {
        f(b - u * u) * fl::<S>(2.0) * u
    });
    Ok((low + left + right) / (cn * cn * r1.powi(ni) * r2.powi(ni)))
}

/// Quadrature nodes in mass coordinate for curve interaction: the level radii
/// r_t(s) = (c_n h_t'(s))^{-1/n} and trapezoid weights, with the final gap up
/// to s=1 (where r -> 0) folded into the last node.
fn curve_level_radii<S: Real>(h: &HeightFunction<S>, dim: u32) -> (Vec<S>, Vec<S>) {
    let cn: S = ball_volume(dim);
    let inv_n = S::one() / fl::<S>(dim as f64);
    let mut s_ext = Vec::with_capacity(h.s.len() + 1);
    let mut radii = Vec::with_capacity(h.s.len() + 1);
    s_ext.push(S::zero());
    radii.push((cn * h.hp_at_zero).powf(-inv_n).min(fl(1e12)));
    for (&s, &hp) in h.s.iter().zip(&h.hp) {
        s_ext.push(s);
        radii.push((cn * hp).powf(-inv_n));
    }
    let m = s_ext.len();
    let mut weights = vec![S::zero(); m];
    for j in 0..m {
        let left = if j > 0 { s_ext[j] - s_ext[j - 1] } else { S::zero() };
        let right = if j + 1 < m { s_ext[j + 1] - s_ext[j] } else { S::one() - s_ext[j] };
        let right = if j + 1 < m { right * fl(0.5) } else { right };
        weights[j] = left * fl::<S>(0.5) + right;
    }
    (radii, weights)
}

/// Interaction along the curve at parameter t via the mass-coordinate double
/// integral of the smooth pair mean: every level set is a ball, so
/// I = (1/2) double-int pair_mean(r_t(s1), r_t(s2)) ds1 ds2.
pub fn interaction_on_curve<S: Real>(
    c: &InterpolationCurve<S>,
    t: S,
    w: &Potential<S>,
) -> Result<S> {
    if let (1, Potential::Step { a }) = (c.dim, w) {
        return interaction_on_curve_1d(c, t, *a).map(|r| r.value);
    }
    let h = c.height_at(t);
    let (radii, weights) = curve_level_radii(&h, c.dim);
    let m = radii.len();
    let rows: Result<Vec<S>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = S::zero();
            for j in 0..=i {
                let e = pair_mean(w, c.dim, radii[i], radii[j])?;
                let scale = if j == i { S::one() } else { fl(2.0) };
                acc = acc + scale * weights[i] * weights[j] * e;
            }
            Ok(acc)
        })
        .collect();
    Ok(rows?.into_iter().sum::<S>() * fl(0.5))
}

#[derive(Debug, Clone, Copy)]
pub struct CurveInteraction1d<S> {
    pub value: S,
    /// fraction of (s1,s2) samples that landed on a case boundary
    pub boundary_fraction: f64,
}

/// 1-D step-potential interaction along the curve, assembled by closed-form
/// case dispatch on each (s1, s2) rectangle of the level-set geometry.
pub fn interaction_on_curve_1d<S: Real>(
    c: &InterpolationCurve<S>,
    t: S,
    a: S,
) -> Result<CurveInteraction1d<S>> {
    if c.dim != 1 {
        return Err(Error::InvalidParameter(
            "closed-form case dispatch is one-dimensional".into(),
        ));
    }
    let h = c.height_at(t);
    let mut s_ext = vec![S::zero()];
    let mut hp_ext = vec![h.hp_at_zero];
    s_ext.extend_from_slice(&h.s);
    hp_ext.extend_from_slice(&h.hp);
    let m = s_ext.len();
    let mut weights = vec![S::zero(); m];
    for j in 0..m {
        let left = if j > 0 { s_ext[j] - s_ext[j - 1] } else { S::zero() };
        let right = if j + 1 < m {
            (s_ext[j + 1] - s_ext[j]) * fl(0.5)
        } else {
            S::one() - s_ext[j]
        };
        weights[j] = left * fl::<S>(0.5) + right;
    }
    let mut acc = S::zero();
    let mut boundary_hits = 0usize;
    let mut samples = 0usize;
    for i in 0..m {
        for j in 0..=i {
            let f = hp_ext[i];
            let mut g = hp_ext[j];
            samples += 1;
            if classify_rect(f, g, a) == RectCase::Boundary {
                boundary_hits += 1;
                g = g * (S::one() + fl(1e-9));
            }
            let (_, v) = rect_integrand(f, g, a);
            let scale = if j == i { S::one() } else { fl(2.0) };
            acc = acc + scale * weights[i] * weights[j] * v;
        }
    }
    Ok(CurveInteraction1d {
        value: acc * fl(0.5),
        boundary_fraction: boundary_hits as f64 / samples as f64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub entropy: f64,
    pub interaction: f64,
    pub total: f64,
    pub m: f64,
    pub potential: String,
    pub quadrature: String,
}

pub fn energy_report<S: Real>(
    rho: &RadialDensity<S>,
    w: &Potential<S>,
    m: S,
) -> Result<EnergyReport> {
    let s_val = entropy(rho, m)?;
    let i_val = interaction(rho, w)?;
    Ok(EnergyReport {
        entropy: s_val.to_f64().unwrap(),
        interaction: i_val.to_f64().unwrap(),
        total: (s_val + i_val).to_f64().unwrap(),
        m: m.to_f64().unwrap(),
        potential: format!("{w:?}"),
        quadrature: format!(
            "radial grid {} nodes, sphere-averaged kernel matrix",
            rho.grid.len()
        ),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityCertificate {
    pub t: Vec<f64>,
    pub entropy: Vec<f64>,
    pub interaction: Vec<f64>,
    pub total: Vec<f64>,
    pub d2_entropy_min: f64,
    pub d2_interaction_min: f64,
    pub d2_total_min: f64,
    pub scale: f64,
    pub m: f64,
    pub pass: bool,
    pub zero_variation: bool,
    pub entropy_concave: bool,
    pub boundary_fraction: f64,
}

/// Evaluate S, I, E on a uniform t-grid and certify convexity from second
/// differences. PASS means the interaction second differences are strictly
/// positive and the total stays above -tol; identical endpoints degenerate to
/// a zero-variation PASS.
pub fn certify_convexity<S: Real>(
    c: &InterpolationCurve<S>,
    m: S,
    w: &Potential<S>,
    t_points: usize,
) -> Result<ConvexityCertificate> {
    if t_points < 3 {
        return Err(Error::InvalidParameter("need at least 3 t-grid points".into()));
    }
    let zero_variation = c
        .h0
        .h
        .iter()
        .zip(&c.h1.h)
        .map(|(&x, &y)| (x - y).abs())
        .fold(S::zero(), S::max)
        < fl(1e-13);
    let dt = 1.0 / (t_points - 1) as f64;
    let step_1d = matches!((c.dim, w), (1, Potential::Step { .. }));
    let rows: Result<Vec<(S, S, f64)>> = (0..t_points)
        .into_par_iter()
        .map(|j| {
            let t = fl::<S>(j as f64 * dt);
            let s_val = entropy_on_curve(c, t, m)?;
            if step_1d {
                let a = match w {
                    Potential::Step { a } => *a,
                    _ => unreachable!(),
                };
                let r = interaction_on_curve_1d(c, t, a)?;
                Ok((s_val, r.value, r.boundary_fraction))
            } else {
                Ok((s_val, interaction_on_curve(c, t, w)?, 0.0))
            }
        })
        .collect();
    let rows = rows?;
    let s: Vec<f64> = rows.iter().map(|r| r.0.to_f64().unwrap()).collect();
    let i: Vec<f64> = rows.iter().map(|r| r.1.to_f64().unwrap()).collect();
    let e: Vec<f64> = s.iter().zip(&i).map(|(a, b)| a + b).collect();
    let boundary_fraction =
        rows.iter().map(|r| r.2).sum::<f64>() / t_points as f64;
    let d2min = |v: &[f64]| {
        v.windows(3)
            .map(|w3| (w3[2] - 2.0 * w3[1] + w3[0]) / (dt * dt))
            .fold(f64::INFINITY, f64::min)
    };
    let (d2s, d2i, d2e) = (d2min(&s), d2min(&i), d2min(&e));
    let scale = i.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-12);
    let pass = if zero_variation {
        true
    } else {
        d2i > 1e-10 * scale && d2e > -1e-7 * scale
    };
    Ok(ConvexityCertificate {
        t: (0..t_points).map(|j| j as f64 * dt).collect(),
        entropy: s,
        interaction: i,
        total: e,
        d2_entropy_min: d2s,
        d2_interaction_min: d2i,
        d2_total_min: d2e,
        scale,
        m: m.to_f64().unwrap(),
        pass,
        zero_variation,
        entropy_concave: d2s < -1e-10 * scale,
        boundary_fraction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DilationRow {
    pub lambda: f64,
    pub entropy: f64,
    pub interaction: f64,
    pub total: f64,
}

/// Energies of the dilates rho_lambda(x) = lambda^n rho(lambda x).
pub fn dilation_scan<S: Real>(
    rho: &RadialDensity<S>,
    m: S,
    w: &Potential<S>,
    lambdas: &[S],
) -> Result<Vec<DilationRow>> {
    let mut out = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        if lam <= S::zero() {
            return Err(Error::InvalidParameter("dilation factor must be positive".into()));
        }
        let nodes: Vec<S> = rho.grid.nodes.iter().map(|&r| r / lam).collect();
        let grid = RadialGrid::new(rho.grid.dim, nodes)?;
        let scale = lam.powi(rho.grid.dim as i32);
        let values: Vec<S> = rho.values.iter().map(|&v| v * scale).collect();
        let scaled = RadialDensity::new(grid, values)?;
        let s_val = entropy(&scaled, m)?;
        let i_val = interaction(&scaled, w)?;
        out.push(DilationRow {
            lambda: lam.to_f64().unwrap(),
            entropy: s_val.to_f64().unwrap(),
            interaction: i_val.to_f64().unwrap(),
            total: (s_val + i_val).to_f64().unwrap(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{quadratic_cap, tent, uniform};
    use crate::families::random_densities;
    use crate::height::{height_from_density, mass_grid_clustered};
    use approx::assert_relative_eq;

    fn uniform_density_1d() -> RadialDensity<f64> {
        let g = RadialGrid::uniform(1, 1.5, 1500).unwrap();
        uniform(g, 1.0).unwrap()
    }

    #[test]
    fn entropy_uniform_closed_form() {
        let u = uniform_density_1d();
        // int rho^2 = 1/2 on [-1,1]; height route h(s) = s/2 gives the same
        assert_relative_eq!(entropy(&u, 2.0).unwrap(), 0.5, max_relative = 1e-3);
        let h = height_from_density(&u, &mass_grid_clustered(400)).unwrap();
        assert_relative_eq!(entropy_height(&h, 2.0).unwrap(), 0.5, max_relative = 1e-3);
    }

    #[test]
    fn entropy_routes_agree_on_random_profiles() {
        let g = RadialGrid::uniform(2, 2.5, 3000).unwrap();
        let mg = mass_grid_clustered(500);
        for rho in random_densities(11, 5, g.clone(), &mg).unwrap() {
            let h = height_from_density(&rho, &mg).unwrap();
            for &m in &[1.5, 2.0, 2.7] {
                let a = entropy(&rho, m).unwrap();
                let b = entropy_height(&h, m).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn entropy_trichotomy_on_curves() {
        let g = RadialGrid::uniform(1, 2.0, 2000).unwrap();
        let mg = mass_grid_clustered(300);
        let flat = uniform(g.clone(), 1.8).unwrap();
        let peaked = tent(g.clone(), 0.9).unwrap();
        let c = InterpolationCurve::from_densities(&flat, &peaked, &mg).unwrap();
        let dt = 0.05f64;
        let second = |m: f64| {
            let f = |t: f64| entropy_on_curve(&c, t, m).unwrap();
            (f(0.5 + dt) - 2.0 * f(0.5) + f(0.5 - dt)) / (dt * dt)
        };
        assert!(second(2.5) > 1e-6);
        assert!(second(1.5) < -1e-6);
        assert!(second(2.0).abs() < 1e-8 * entropy_on_curve(&c, 0.5, 2.0).unwrap().abs() / (dt * dt));
    }

    #[test]
    fn pair_mean_quadratic_closed_form() {
        let w = Potential::Quadratic;
        for dim in 1..=3u32 {
            for &(r1, r2) in &[(0.5f64, 0.5f64), (0.3, 1.2), (2.0, 0.05)] {
                let got = pair_mean(&w, dim, r1, r2).unwrap();
                let expect = dim as f64 * (r1 * r1 + r2 * r2) / (2.0 * (dim as f64 + 2.0));
                assert_relative_eq!(got, expect, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn curve_interaction_matches_physical_space() {
        let g = RadialGrid::uniform(1, 2.0, 3000).unwrap();
        let mg = mass_grid_clustered(400);
        // the curve parametrizes mass fractions, so compare at unit mass
        let cap = quadratic_cap(g.clone(), 1.0).unwrap();
        let rho = RadialDensity::normalized(g.clone(), cap.values.clone()).unwrap();
        let c = InterpolationCurve::from_densities(&rho, &rho, &mg).unwrap();
        for w in [Potential::Quadratic, Potential::Riesz { k: 1.0 }] {
            let direct = interaction(&rho, &w).unwrap();
            let via_curve = interaction_on_curve(&c, 0.0, &w).unwrap();
            assert_relative_eq!(direct, via_curve, max_relative = 2e-3);
        }
    }

    #[test]
    fn step_interaction_vanishes_for_wide_band() {
        let g = RadialGrid::uniform(1, 1.5, 800).unwrap();
        let mg = mass_grid_clustered(200);
        let rho = uniform(g.clone(), 1.0).unwrap();
        let c = InterpolationCurve::from_densities(&rho, &rho, &mg).unwrap();
        let r = interaction_on_curve_1d(&c, 0.0, 10.0).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn certificate_identical_endpoints_degenerate_pass() {
        let g = RadialGrid::uniform(1, 2.0, 800).unwrap();
        let mg = mass_grid_clustered(150);
        let rho = tent(g.clone(), 1.0).unwrap();
        let c = InterpolationCurve::from_densities(&rho, &rho, &mg).unwrap();
        let cert = certify_convexity(&c, 2.0, &Potential::Quadratic, 11).unwrap();
        assert!(cert.pass && cert.zero_variation);
    }

    #[test]
    fn certificate_m2_quadratic_passes() {
        let g = RadialGrid::uniform(1, 2.5, 1200).unwrap();
        let mg = mass_grid_clustered(250);
        let flat = uniform(g.clone(), 2.0).unwrap();
        let peaked = tent(g.clone(), 0.8).unwrap();
        let c = InterpolationCurve::from_densities(&flat, &peaked, &mg).unwrap();
        let cert = certify_convexity(&c, 2.0, &Potential::Quadratic, 21).unwrap();
        assert!(cert.pass, "d2I={} d2E={}", cert.d2_interaction_min, cert.d2_total_min);
        assert!(cert.d2_entropy_min.abs() < 1e-6 * cert.scale.max(1.0));
    }

    #[test]
    fn dilation_entropy_scaling_law() {
        let rho = uniform_density_1d();
        let lambdas = [0.5f64, 1.0, 2.0];
        let rows = dilation_scan(&rho, 2.0, &Potential::Step { a: 0.25 }, &lambdas).unwrap();
        let base = rows[1].entropy;
        for row in &rows {
            assert_relative_eq!(row.entropy, row.lambda * base, max_relative = 1e-8);
        }
    }
}
