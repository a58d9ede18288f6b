//! Steady-state solver: damped fixed-point iteration on
//! rho = ((m-1)/m (C - W*rho))_+^{1/(m-1)}, with the multiplier C pinned by
//! unit mass each sweep, plus verification and a multi-init uniqueness scan.

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::kernel::{convolve_direct, KernelMatrix};
use crate::potentials::Potential;
use crate::scalar::{fl, Real};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub residual_tol: f64,
    pub l1_tol: f64,
    pub damping: f64,
    /// grow the domain when the support reaches this fraction of it
    pub regrid_fraction: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 4000,
            residual_tol: 1e-8,
            l1_tol: 1e-10,
            damping: 0.5,
            regrid_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState<S: Real> {
    pub density: RadialDensity<S>,
    pub multiplier: S,
    /// sup over the support of |(m/(m-1)) rho^{m-1} + W*rho - C|
    pub residual: S,
    /// discrete Laplacian at the origin; negative for genuine steady states
    pub laplacian_at_zero: S,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

fn support_threshold<S: Real>(rho: &RadialDensity<S>) -> S {
    rho.linf() * fl(1e-8)
}

/// Sup residual of the multiplier identity over the support, for a given
/// convolution field and C.
fn sup_residual<S: Real>(rho: &[S], conv: &[S], m: S, c: S, floor: S) -> S {
    let coef = m / (m - S::one());
    rho.iter()
        .zip(conv)
        .filter(|(&v, _)| v > floor)
        .map(|(&v, &cv)| (coef * v.powf(m - S::one()) + cv - c).abs())
        .fold(S::zero(), S::max)
}

/// Candidate profile for a trial multiplier.
fn candidate<S: Real>(conv: &[S], m: S, c: S) -> Vec<S> {
    let coef = (m - S::one()) / m;
    let expo = S::one() / (m - S::one());
    conv.iter()
        .map(|&cv| {
            let arg = coef * (c - cv);
            if arg > S::zero() { arg.powf(expo) } else { S::zero() }
        })
        .collect()
}

/// Multiplier making the candidate a unit-mass profile; mass is continuous
/// and strictly increasing in C, so bracket growth + bisection.
fn solve_multiplier<S: Real>(grid: &RadialGrid<S>, conv: &[S], m: S) -> Result<S> {
    let mass_of = |c: S| grid.integrate(&candidate(conv, m, c));
    let mut lo = conv.iter().cloned().fold(S::infinity(), S::min);
    let mut hi = lo + S::one();
    let mut grow = S::one();
    for _ in 0..200 {
        if mass_of(hi) >= S::one() {
            break;
        }
        grow = grow * fl(2.0);
        hi = hi + grow;
    }
    if mass_of(hi) < S::one() {
        return Err(Error::BracketFailure {
            lo: lo.to_f64().unwrap(),
            hi: hi.to_f64().unwrap(),
        });
    }
    for _ in 0..200 {
        let mid = (lo + hi) * fl(0.5);
        if mass_of(mid) < S::one() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (mass_of(mid) - S::one()).abs() < fl(1e-12) {
            return Ok(mid);
        }
    }
    Ok((lo + hi) * fl(0.5))
}

/// Discrete Laplacian of a radial profile at the origin, 2n(rho_1-rho_0)/r_1^2.
pub fn laplacian_at_zero<S: Real>(rho: &RadialDensity<S>) -> S {
    let n = fl::<S>(rho.grid.dim as f64);
    let (r0, r1) = (rho.grid.nodes[0], rho.grid.nodes[1]);
    if r0 == S::zero() {
        fl::<S>(2.0) * n * (rho.values[1] - rho.values[0]) / (r1 * r1)
    } else {
        // grid not anchored at 0; one-sided second difference
        let dr = r1 - r0;
        fl::<S>(2.0) * n * (rho.values[1] - rho.values[0]) / (dr * dr)
    }
}

pub fn solve_steady<S: Real>(
    w: &Potential<S>,
    m: S,
    init: &RadialDensity<S>,
    opts: &SolveOptions,
) -> Result<SteadyState<S>> {
    if m <= S::one() {
        return Err(Error::InvalidParameter(format!("need m > 1, got {m}")));
    }
    let mut grid = init.grid.clone();
    let mut km = KernelMatrix::build(&grid, w)?;
    let mut rho = RadialDensity::normalized(grid.clone(), init.values.clone())?;
    let mut tau = fl::<S>(opts.damping);
    let mut prev_res = S::infinity();
    let mut history = Vec::new();
    for iter in 0..opts.max_iters {
        let conv = km.convolve(&rho.values);
        let c = solve_multiplier(&grid, &conv, m)?;
        let res = sup_residual(&rho.values, &conv, m, c, support_threshold(&rho));
        history.push(res.to_f64().unwrap());
        if res > prev_res {
            tau = (tau * fl(0.5)).max(fl(1e-3));
        }
        prev_res = res;
        let fixed = candidate(&conv, m, c);
        let mixed: Vec<S> = rho
            .values
            .iter()
            .zip(&fixed)
            .map(|(&a, &b)| (S::one() - tau) * a + tau * b)
            .collect();
        let next = RadialDensity::normalized(grid.clone(), mixed)?;
        let l1 = rho.l1_distance(&next);
        rho = next;
        if res < fl(opts.residual_tol) && l1 < fl(opts.l1_tol) {
            return Ok(SteadyState {
                laplacian_at_zero: laplacian_at_zero(&rho),
                multiplier: c,
                residual: res,
                density: rho,
                iterations: iter + 1,
                residual_history: history,
            });
        }
        // domain growth when the support closes in on the boundary
        let rmax = *grid.nodes.last().unwrap();
        if rho.support_radius() > fl::<S>(opts.regrid_fraction) * rmax {
            let cells = grid.len() - 1;
            grid = RadialGrid::uniform(grid.dim, rmax * fl(2.0), cells * 2)?;
            km = KernelMatrix::build(&grid, w)?;
            rho = rho.resample(grid.clone())?;
            prev_res = S::infinity();
        }
    }
    Err(Error::NonConvergence {
        iters: opts.max_iters,
        residual: *history.last().unwrap_or(&f64::NAN),
    })
}

/// Newton iteration on the multiplier identity with the mass constraint as an
/// extra row. The damped Picard map above is structurally unstable on flat
/// branches of deep-well potentials with m < 2 (the linearized map has a gain
/// above one that no damping factor removes), while the Newton step inverts
/// that mode directly. Internally runs in f64.
pub fn solve_steady_newton<S: Real>(
    w: &Potential<S>,
    m: S,
    init: &RadialDensity<S>,
    opts: &SolveOptions,
) -> Result<SteadyState<S>> {
    let mf = m.to_f64().unwrap();
    if mf <= 1.0 {
        return Err(Error::InvalidParameter(format!("need m > 1, got {mf}")));
    }
    let grid = init.grid.clone();
    let km = KernelMatrix::build(&grid, w)?;
    let nn = grid.len();
    let kf: Vec<f64> = km.values.iter().map(|v| v.to_f64().unwrap()).collect();
    let wf: Vec<f64> = km.weights.iter().map(|v| v.to_f64().unwrap()).collect();
    let mut rho: Vec<f64> = init.values.iter().map(|v| v.to_f64().unwrap()).collect();
    let mass: f64 = rho.iter().zip(&wf).map(|(a, b)| a * b).sum();
    for v in rho.iter_mut() {
        *v /= mass;
    }
    let coef = mf / (mf - 1.0);
    // work in u = rho^{m-1}: the identity coef*u + W*u^p = C is smooth in u at
    // the free boundary for m <= 2 (p = 1/(m-1) >= 1), so the active set does
    // not chatter the way it does in the rho variable
    let p = 1.0 / (mf - 1.0);
    let mut u: Vec<f64> = rho.iter().map(|&v| v.powf(mf - 1.0)).collect();
    let convolve = |u: &[f64]| -> Vec<f64> {
        let scaled: Vec<f64> = u.iter().zip(&wf).map(|(a, b)| a.powf(p) * b).collect();
        (0..nn)
            .map(|i| kf[i * nn..(i + 1) * nn].iter().zip(&scaled).map(|(a, b)| a * b).sum())
            .collect()
    };
    // initial multiplier: midrange of the identity over the support
    let mut conv = convolve(&u);
    let floor_of = |u: &[f64]| u.iter().cloned().fold(0.0, f64::max) * 1e-9;
    let mut c = {
        let floor = floor_of(&u);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, &v) in u.iter().enumerate() {
            if v > floor {
                let xi = coef * v + conv[i];
                lo = lo.min(xi);
                hi = hi.max(xi);
            }
        }
        0.5 * (lo + hi)
    };
    let sup_res = |u: &[f64], conv: &[f64], c: f64| -> f64 {
        let floor = floor_of(u);
        let mut worst: f64 = 0.0;
        for (&v, &cv) in u.iter().zip(conv) {
            if v > floor {
                worst = worst.max((coef * v + cv - c).abs());
            }
        }
        let mass: f64 = u.iter().zip(&wf).map(|(a, b)| a.powf(p) * b).sum();
        worst.max((mass - 1.0).abs())
    };
    let mut history = Vec::new();
    for iter in 0..opts.max_iters.min(200) {
        let res = sup_res(&u, &conv, c);
        history.push(res);
        if res < opts.residual_tol {
            let values: Vec<S> = u.iter().map(|&v| fl(v.powf(p))).collect();
            let density = RadialDensity::with_tolerance(grid.clone(), values, 1e-8)?;
            return Ok(SteadyState {
                laplacian_at_zero: laplacian_at_zero(&density),
                multiplier: fl(c),
                residual: fl(res),
                density,
                iterations: iter,
                residual_history: history,
            });
        }
        // active set: current support plus nodes the identity wants positive
        let mut active = Vec::new();
        for i in 0..nn {
            if u[i] > 0.0 || conv[i] < c {
                active.push(i);
            }
        }
        let k = active.len();
        if k == 0 {
            return Err(Error::InvalidParameter("empty support in Newton solve".into()));
        }
        let mut a = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut b = nalgebra::DVector::<f64>::zeros(k + 1);
        for (pi, &i) in active.iter().enumerate() {
            for (q, &j) in active.iter().enumerate() {
                let du = if u[j] > 0.0 { p * u[j].powf(p - 1.0) } else { 0.0 };
                a[(pi, q)] = kf[i * nn + j] * wf[j] * du;
            }
            a[(pi, pi)] += coef;
            a[(pi, k)] = -1.0;
            b[pi] = -(coef * u[i] + conv[i] - c);
        }
        for (q, &j) in active.iter().enumerate() {
            let du = if u[j] > 0.0 { p * u[j].powf(p - 1.0) } else { 0.0 };
            a[(k, q)] = wf[j] * du;
        }
        let mass: f64 = u.iter().zip(&wf).map(|(x, y)| x.powf(p) * y).sum();
        b[k] = 1.0 - mass;
        let delta = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidParameter("singular Newton system".into()))?;
        // backtracking on the sup residual
        let mut step = 1.0f64;
        loop {
            let mut trial = u.clone();
            for (pi, &i) in active.iter().enumerate() {
                trial[i] = (u[i] + step * delta[pi]).max(0.0);
            }
            let trial_c = c + step * delta[k];
            let trial_conv = convolve(&trial);
            if sup_res(&trial, &trial_conv, trial_c) < res || step < 1.0 / 32.0 {
                u = trial;
                c = trial_c;
                conv = trial_conv;
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::NonConvergence {
        iters: opts.max_iters.min(200),
        residual: *history.last().unwrap(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub multiplier: f64,
    /// sup of the pointwise identity residual over the support
    pub sup_residual: f64,
    /// worst normalized weak-form residual over the test family
    pub weak_residual: f64,
    pub support_radius: f64,
    pub laplacian_at_zero: f64,
}

/// Check steadiness of a given profile without iterating: pick the best
/// constant C, report the pointwise residual plus a weak (integrated) form
/// against Gaussian test functions.
pub fn verify_steady<S: Real>(
    rho: &RadialDensity<S>,
    w: &Potential<S>,
    m: S,
) -> Result<VerifyReport> {
    let grid = &rho.grid;
    let conv = convolve_direct(w, grid, &rho.values)?;
    let coef = m / (m - S::one());
    let floor = support_threshold(rho);
    let xi: Vec<S> = rho
        .values
        .iter()
        .zip(&conv)
        .map(|(&v, &cv)| coef * v.powf(m - S::one()) + cv)
        .collect();
    let (mut lo, mut hi) = (S::infinity(), S::neg_infinity());
    for (i, &v) in rho.values.iter().enumerate() {
        if v > floor {
            lo = lo.min(xi[i]);
            hi = hi.max(xi[i]);
        }
    }
    if !lo.is_finite() {
        return Err(Error::InvalidParameter("empty support".into()));
    }
    let c = (lo + hi) * fl(0.5);
    let sup = (hi - lo) * fl(0.5);

    // weak form: int ( -rho^m Lap(phi) + rho d_r(W*rho) d_r(phi) ) dx = 0
    let n = fl::<S>(grid.dim as f64);
    let mut dconv = vec![S::zero(); grid.len()];
    for i in 1..grid.len() - 1 {
        dconv[i] = (conv[i + 1] - conv[i - 1]) / (grid.nodes[i + 1] - grid.nodes[i - 1]);
    }
    let support = rho.support_radius();
    let mut worst = S::zero();
    for &frac in &[0.35, 0.7, 1.1, 1.6] {
        let sigma = support * fl::<S>(frac);
        let mut resid = vec![S::zero(); grid.len()];
        let mut scale_f = vec![S::zero(); grid.len()];
        for i in 0..grid.len() {
            let r = grid.nodes[i];
            let x = r / sigma;
            let phi = (-x * x).exp();
            let dphi = -fl::<S>(2.0) * r / (sigma * sigma) * phi;
            let d2phi = (fl::<S>(4.0) * x * x - fl(2.0)) / (sigma * sigma) * phi;
            let lap = if r > S::zero() {
                d2phi + (n - S::one()) / r * dphi
            } else {
                n * d2phi
            };
            let rho_m = rho.values[i].powf(m);
            resid[i] = -rho_m * lap + rho.values[i] * dconv[i] * dphi;
            scale_f[i] = rho_m * lap.abs();
        }
        let raw = grid.integrate(&resid).abs();
        let scale = grid.integrate(&scale_f).max(fl(1e-14));
        worst = worst.max(raw / scale);
    }
    Ok(VerifyReport {
        multiplier: c.to_f64().unwrap(),
        sup_residual: sup.to_f64().unwrap(),
        weak_residual: worst.to_f64().unwrap(),
        support_radius: support.to_f64().unwrap(),
        laplacian_at_zero: laplacian_at_zero(rho).to_f64().unwrap(),
    })
}

#[derive(Debug, Serialize)]
pub struct ScanReport {
    /// indices of the init family, grouped by limit profile
    pub clusters: Vec<Vec<usize>>,
    pub failures: Vec<(usize, String)>,
    pub l1_threshold: f64,
}

/// Run the solver from every initialization and group the limits by L1
/// distance. Non-converged members are reported, never dropped.
pub fn uniqueness_scan<S: Real>(
    w: &Potential<S>,
    m: S,
    inits: &[RadialDensity<S>],
    l1_threshold: S,
    opts: &SolveOptions,
) -> (Vec<SteadyState<S>>, ScanReport) {
    let results: Vec<Result<SteadyState<S>>> = inits
        .par_iter()
        .map(|init| solve_steady(w, m, init, opts))
        .collect();
    let mut converged: Vec<(usize, SteadyState<S>)> = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => converged.push((i, s)),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    // compare on a shared uniform grid wide enough for every limit
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut reps: Vec<RadialDensity<S>> = Vec::new();
    if !converged.is_empty() {
        let dim = converged[0].1.density.grid.dim;
        let rmax = converged
            .iter()
            .map(|(_, s)| *s.density.grid.nodes.last().unwrap())
            .fold(S::zero(), S::max);
        let common = RadialGrid::uniform(dim, rmax, 2048).unwrap();
        for (idx, s) in &converged {
            let here = s.density.resample(common.clone()).unwrap();
            let mut placed = false;
            for (ci, rep) in reps.iter().enumerate() {
                if rep.l1_distance(&here) < l1_threshold {
                    clusters[ci].push(*idx);
                    placed = true;
                    break;
                }
            }
            if !placed {
                clusters.push(vec![*idx]);
                reps.push(here);
            }
        }
    }
    let states = converged.into_iter().map(|(_, s)| s).collect();
    (
        states,
        ScanReport {
            clusters,
            failures,
            l1_threshold: l1_threshold.to_f64().unwrap(),
        },
    )
}

/// A spread of initializations with varying support radius and flatness:
/// uniforms, caps, tents and seeded random strictly-decreasing profiles.
pub fn scan_inits<S: Real>(
    seed: u64,
    count: usize,
    grid: Arc<RadialGrid<S>>,
) -> Result<Vec<RadialDensity<S>>> {
    use crate::density::{quadratic_cap, tent, uniform};
    use crate::height::mass_grid_clustered;
    let rmax = *grid.nodes.last().unwrap();
    let mut out: Vec<RadialDensity<S>> = Vec::with_capacity(count);
    let fracs = [0.15, 0.3, 0.5, 0.7, 0.85];
    for (i, &f) in fracs.iter().enumerate() {
        if out.len() >= count {
            break;
        }
        let r = rmax * fl::<S>(f);
        out.push(match i % 3 {
            0 => uniform(grid.clone(), r)?,
            1 => quadratic_cap(grid.clone(), r)?,
            _ => tent(grid.clone(), r)?,
        });
    }
    if out.len() < count {
        let mg = mass_grid_clustered::<S>(400);
        let extra =
            crate::families::random_densities(seed, count - out.len(), grid.clone(), &mg)?;
        out.extend(extra);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{quadratic_cap, uniform};
    use approx::assert_relative_eq;

    // Analytic reference for W=|x|^2/2, m=2, n=1, unit mass:
    // W*rho = x^2/2 + M2/2, so rho = (C' - x^2/2)/2 on its support and the
    // mass constraint pins the edge at L = 3^{1/3}, rho(0) = 3^{2/3}/4.
    const L_QUAD: f64 = 1.4422495703074083; // 3^(1/3)
    const RHO0_QUAD: f64 = 0.5200209361477796; // 3^(2/3)/4

    #[test]
    fn quadratic_cap_profile_is_steady() {
        let g = RadialGrid::uniform(1, 2.0, 4000).unwrap();
        let rho = quadratic_cap(g, L_QUAD).unwrap();
        assert_relative_eq!(rho.values[0], RHO0_QUAD, max_relative = 1e-6);
        let rep = verify_steady(&rho, &Potential::Quadratic, 2.0).unwrap();
        assert!(rep.sup_residual < 1e-6, "sup residual {}", rep.sup_residual);
        assert!(rep.laplacian_at_zero < 0.0);
    }

    #[test]
    fn solver_recovers_quadratic_cap() {
        let g = RadialGrid::uniform(1, 2.5, 1500).unwrap();
        let init = uniform(g.clone(), 1.0).unwrap();
        let s = solve_steady(&Potential::Quadratic, 2.0, &init, &SolveOptions::default())
            .unwrap();
        assert!(s.residual < 1e-8);
        assert_relative_eq!(
            s.density.support_radius_interp(),
            L_QUAD,
            max_relative = 2e-3
        );
        assert_relative_eq!(s.density.values[0], RHO0_QUAD, max_relative = 1e-3);
        assert!(s.laplacian_at_zero < 0.0);
        assert!(s.density.strictly_decreasing(1e-10));
    }

    #[test]
    fn random_profile_is_not_steady() {
        let g = RadialGrid::uniform(1, 2.0, 800).unwrap();
        let rho = crate::density::tent(g, 1.0).unwrap();
        let rep = verify_steady(&rho, &Potential::Quadratic, 2.0).unwrap();
        assert!(rep.sup_residual > 0.05);
    }

    #[test]
    fn scan_finds_single_cluster_for_supercritical_m() {
        let g = RadialGrid::uniform(1, 3.0, 600).unwrap();
        let inits = scan_inits(5, 4, g).unwrap();
        let (_, report) = uniqueness_scan(
            &Potential::Riesz { k: 2.0 },
            2.5,
            &inits,
            1e-3,
            &SolveOptions::default(),
        );
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        assert_eq!(report.clusters.len(), 1);
    }

    #[test]
    fn mass_preserved_each_iteration() {
        let g = RadialGrid::uniform(1, 2.5, 800).unwrap();
        let init = uniform(g.clone(), 1.5).unwrap();
        let s = solve_steady(&Potential::Quadratic, 2.0, &init, &SolveOptions::default())
            .unwrap();
        assert_relative_eq!(s.density.mass(), 1.0, epsilon = 1e-11);
    }
}
