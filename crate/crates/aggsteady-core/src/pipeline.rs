//! Iterated tail-forging pipeline: starting from a base attractive potential
//! with a known steady state, modify the tail so a second, much flatter
//! steady state appears, demonstrated by a flat-data evolution that keeps its
//! (3-m)-norm below a threshold and settles onto the new state.

use crate::density::{uniform, RadialDensity};
use crate::error::{Error, Result};
use crate::evolve::{
    extract_steady, run_evolution_from, track_flatness, EvolveOptions, ExtractOptions,
};
use crate::grid::RadialGrid;
use crate::kernel::convolve_direct;
use crate::potentials::{forge_tail, Potential};
use crate::scalar::{fl, Real};
use crate::steady::{solve_steady, solve_steady_newton, verify_steady, SolveOptions, SteadyState};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct ForgeOptions {
    pub max_levels: usize,
    /// dyadic tail slopes tried in order; first success wins
    pub eps_candidates: Vec<f64>,
    /// horizon of the flat-data demonstration run
    pub horizon: f64,
    /// cells for evolution grids
    pub cells: usize,
    pub residual_tol: f64,
}

impl Default for ForgeOptions {
    fn default() -> Self {
        Self {
            max_levels: 1,
            eps_candidates: (5..=10).map(|j| 0.5f64.powi(j)).collect(),
            horizon: 30.0,
            cells: 1024,
            residual_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub radius: f64,
    pub epsilon: f64,
    pub delta0: f64,
    pub norm3m: f64,
    pub support_radius: f64,
    pub residual: f64,
    /// sup of the (3-m)-norm over the demonstration run
    pub sup_norm_run: f64,
    /// residuals of all earlier steady states re-checked under this potential
    pub prior_residuals: Vec<f64>,
    /// L1 gap between the evolution-extracted state and the fixed-point probe
    pub basin_gap: f64,
}

#[derive(Debug)]
pub struct ForgeOutcome<S: Real> {
    pub base_steady: SteadyState<S>,
    pub potential: Potential<S>,
    pub steadies: Vec<SteadyState<S>>,
    pub rows: Vec<LevelRow>,
}

fn norm3m<S: Real>(rho: &RadialDensity<S>, m: S) -> S {
    rho.lp_norm(fl::<S>(3.0) - m).unwrap_or(S::nan())
}

/// Empirical stand-in for the flatness-smallness constant of the inward
/// transport term: on wide caps rho, the derivative budget of int rho^{3-m}
/// picks up |I| = |int rho^{2-m} rho' (W*rho)' dx| beyond its diffusive part;
/// the threshold condition used below is C * delta^{2-m} < m/4.
fn flatness_constant<S: Real>(w: &Potential<S>, m: S, dim: u32, radius: S) -> Result<f64> {
    let mut worst = 1e-3f64;
    for &mult in &[2.0, 4.0, 8.0, 16.0] {
        let l = radius * fl::<S>(mult);
        let grid = RadialGrid::uniform(dim, l * fl(1.25), 600)?;
        let rho = quadratic_cap_support(grid, l)?;
        let conv = convolve_direct(w, &rho.grid, &rho.values)?;
        let nodes = &rho.grid.nodes;
        let mcount = nodes.len();
        let mut cross = vec![S::zero(); mcount];
        let mut grad2 = vec![S::zero(); mcount];
        for i in 1..mcount - 1 {
            let denom = nodes[i + 1] - nodes[i - 1];
            let drho = (rho.values[i + 1] - rho.values[i - 1]) / denom;
            let dc = (conv[i + 1] - conv[i - 1]) / denom;
            grad2[i] = drho * drho;
            if rho.values[i] > S::zero() {
                cross[i] = rho.values[i].powf(fl::<S>(2.0) - m) * drho * dc;
            }
        }
        let i_term = rho.grid.integrate(&cross).abs();
        let g = rho.grid.integrate(&grad2);
        let diffusive = m * m * fl::<S>(0.5) * g;
        let excess = (i_term - diffusive).max(S::zero());
        let f = norm3m(&rho, m).powf(fl::<S>(3.0) - m);
        let ratio = (excess / f.max(fl(1e-14))).to_f64().unwrap();
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Quadratic cap with prescribed support radius and unit mass, any dimension.
fn quadratic_cap_support<S: Real>(
    grid: std::sync::Arc<RadialGrid<S>>,
    l: S,
) -> Result<RadialDensity<S>> {
    let vals: Vec<S> = grid
        .nodes
        .iter()
        .map(|&r| (S::one() - (r / l) * (r / l)).max(S::zero()))
        .collect();
    RadialDensity::normalized(grid, vals)
}

/// Largest dyadic threshold below the norm floor that also satisfies the
/// empirical smallness condition.
fn pick_delta0(c_emp: f64, m: f64, a: f64) -> Result<f64> {
    for j in 1..40 {
        let d = 0.5f64.powi(j);
        if d < a && c_emp * d.powf(2.0 - m) < m / 4.0 {
            return Ok(d);
        }
    }
    Err(Error::SlopeSearchFailed { eps: 0.0 })
}

pub fn forge_iterate<S: Real>(
    base: &Potential<S>,
    m: S,
    dim: u32,
    opts: &ForgeOptions,
) -> Result<ForgeOutcome<S>> {
    let mf = m.to_f64().unwrap();
    if !(1.0 < mf && mf < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "the flat-state construction needs m in (1,2), got {mf}"
        )));
    }
    // base steady state
    let g0 = RadialGrid::uniform(dim, fl(4.0), opts.cells.min(1200))?;
    let init0 = quadratic_cap_support(g0, fl(1.0))?;
    let base_steady = solve_steady(base, m, &init0, &SolveOptions::default())?;

    let mut current = base.clone();
    let mut steadies: Vec<SteadyState<S>> = vec![base_steady.clone()];
    let mut rows = Vec::new();

    for level in 1..=opts.max_levels {
        let norms: Vec<f64> = steadies
            .iter()
            .map(|s| norm3m(&s.density, m).to_f64().unwrap())
            .collect();
        let a = 0.5 * norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let radius = steadies
            .iter()
            .map(|s| s.density.support_radius_interp().to_f64().unwrap())
            .fold(2.0f64.powi(steadies.len() as i32), f64::max);
        let rad_s = fl::<S>(radius);

        let mut accepted = None;
        let mut last_eps = f64::NAN;
        for &eps in &opts.eps_candidates {
            last_eps = eps;
            let forged = forge_tail(current.clone(), rad_s, fl(eps))?;
            let c_emp = flatness_constant(&forged, m, dim, rad_s)?;
            let delta0 = pick_delta0(c_emp, mf, a)?;

            // demonstration: evolve genuinely flat data and watch the norm.
            // (The fixed-point map cannot reach the flat branch from scratch:
            // far from the solution the m < 2 exponent 1/(m-1) > 1 amplifies
            // the deep well of w1 at the origin into a divergent spike. The
            // gradient flow is the reliable route; the solver confirms later,
            // seeded at the extracted state.)
            let l_est = 2.65 * eps.powf(-2.0 / 3.0) * radius / 2.0;
            let run_grid = RadialGrid::uniform(dim, fl(2.2 * l_est), opts.cells)?;
            let run_init = uniform(run_grid, fl(l_est))?;
            if norm3m(&run_init, m).to_f64().unwrap() >= delta0 {
                continue;
            }
            let evo_opts = EvolveOptions {
                t_max: opts.horizon,
                sample_every: opts.horizon / 120.0,
                snapshot_every: opts.horizon / 12.0,
                ..Default::default()
            };
            // run in horizon-length segments: the time to settle grows as the
            // tail slope shrinks, and there is no point committing to the
            // worst case up front
            let mut segment_grid = run_init.grid.clone();
            let mut segment_values = run_init.values.clone();
            let mut sup_norm_run = 0.0f64;
            let mut extracted = None;
            let mut flat_broken = false;
            for _segment in 0..4 {
                let traj = match run_evolution_from(
                    Some(&forged),
                    m,
                    segment_grid.clone(),
                    segment_values.clone(),
                    &evo_opts,
                ) {
                    Ok(t) => t,
                    Err(_) => {
                        flat_broken = true;
                        break;
                    }
                };
                let flat = track_flatness(&traj, mf, delta0)?;
                sup_norm_run = sup_norm_run.max(flat.sup_norm3m);
                if !flat.up_crossings.is_empty() || flat.sup_norm3m >= delta0 {
                    flat_broken = true;
                    break;
                }
                match extract_steady(
                    &traj,
                    &forged,
                    m,
                    &ExtractOptions { dissipation_tol: 1e-3, ..Default::default() },
                ) {
                    Ok(e) => {
                        extracted = Some(e);
                        break;
                    }
                    Err(_) => {
                        segment_grid = traj.grid.clone();
                        segment_values = traj.final_values.clone();
                    }
                }
            }
            if flat_broken {
                continue;
            }
            let extracted = match extracted {
                Some(e) => e,
                None => continue,
            };
            let new_state = extracted.state;
            let new_norm = norm3m(&new_state.density, m).to_f64().unwrap();
            let new_sup = new_state.density.support_radius_interp().to_f64().unwrap();
            let resid = new_state.residual.to_f64().unwrap();
            if !(resid < opts.residual_tol && new_norm <= a && new_norm < 0.95 * delta0) {
                continue;
            }
            // independent confirmation: Newton on the pressure variable,
            // seeded at the extracted state, must converge without leaving the
            // flat basin (the plain fixed-point map is unstable on this branch
            // for m < 2 and cannot serve as a check)
            let probe =
                match solve_steady_newton(&forged, m, &new_state.density, &SolveOptions::default())
                {
                    Ok(p) => p,
                    Err(_) => continue,
                };
            if norm3m(&probe.density, m).to_f64().unwrap() > a {
                continue;
            }
            // flatter state at fixed mass must spread
            let prev_sup_max = steadies
                .iter()
                .map(|s| s.density.support_radius_interp().to_f64().unwrap())
                .fold(0.0, f64::max);
            if new_sup <= prev_sup_max {
                continue;
            }
            // earlier steady states must survive the tail change
            let mut prior_residuals = Vec::new();
            let mut priors_ok = true;
            for s in &steadies {
                let rep = verify_steady(&s.density, &forged, m)?;
                prior_residuals.push(rep.sup_residual);
                if rep.sup_residual >= opts.residual_tol {
                    priors_ok = false;
                }
            }
            if !priors_ok {
                continue;
            }
            let basin_gap = probe
                .density
                .resample(new_state.density.grid.clone())?
                .l1_distance(&new_state.density)
                .to_f64()
                .unwrap();
            rows.push(LevelRow {
                level,
                radius,
                epsilon: eps,
                delta0,
                norm3m: new_norm,
                support_radius: new_sup,
                residual: resid,
                sup_norm_run,
                prior_residuals,
                basin_gap,
            });
            accepted = Some((forged, new_state));
            break;
        }
        match accepted {
            Some((forged, state)) => {
                current = forged;
                steadies.push(state);
            }
            None => return Err(Error::SlopeSearchFailed { eps: last_eps }),
        }
    }
    steadies.remove(0);
    Ok(ForgeOutcome { base_steady, potential: current, steadies, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    // the full level-1 pipeline is exercised by the acceptance suite; here we
    // only cover the cheap helpers
    #[test]
    fn delta0_is_dyadic_and_below_floor() {
        let d = pick_delta0(0.2, 1.5, 0.349).unwrap();
        assert_eq!(d, 0.25);
        let tight = pick_delta0(50.0, 1.5, 0.349).unwrap();
        assert!(tight < 0.25 && 50.0 * tight.powf(0.5) < 0.375);
    }

    #[test]
    fn flatness_constant_is_modest_for_forged_tail() {
        let forged = forge_tail(Potential::Quadratic, 2.0f64, 0.01).unwrap();
        let c = flatness_constant(&forged, 1.5, 1, 2.0).unwrap();
        assert!(c < 5.0, "empirical constant {c}");
    }
}
