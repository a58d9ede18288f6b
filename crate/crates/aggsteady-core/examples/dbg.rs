use aggsteady_core::density::uniform;
use aggsteady_core::evolve::{run_evolution_from, EvolveOptions};
use aggsteady_core::grid::RadialGrid;
use aggsteady_core::potentials::{forge_tail, Potential};

fn main() {
    let m = 1.5f64;
    let radius = 2.0203f64;
    let eps: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.5f64.powi(6));
    let cells: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1024);
    let forged = forge_tail(Potential::Quadratic, radius, eps).unwrap();
    let l_est = 2.65 * eps.powf(-2.0 / 3.0) * radius / 2.0;
    let grid = RadialGrid::uniform(1, 2.2 * l_est, cells).unwrap();
    let init = uniform(grid.clone(), l_est).unwrap();
    println!(
        "eps {eps:.4e} cells {cells} init: mass {:.6} linf {:.4e} norm3m {:.4}",
        init.mass(),
        init.linf(),
        init.lp_norm(1.5).unwrap()
    );
    let mut g = grid;
    let mut vals = init.values.clone();
    let mut t_total = 0.0;
    for seg in 0..10 {
        let horizon = 100.0;
        let traj = run_evolution_from(
            Some(&forged),
            m,
            g.clone(),
            vals.clone(),
            &EvolveOptions {
                t_max: horizon,
                sample_every: horizon / 4.0,
                snapshot_every: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        t_total += traj.final_time;
        g = traj.grid.clone();
        vals = traj.final_values.clone();
        let last = traj.rows.last().unwrap();
        println!(
            "seg {seg} t {t_total:6.0} steps {} mass {:.6} drift {:.2e} norm3m {:.4} linf {:.4e} support {:.2} dissip {:.3e} monoviol {:.3e}",
            traj.steps,
            last.mass,
            traj.max_mass_drift,
            last.norm3m,
            last.linf,
            last.support_radius,
            last.dissipation,
            traj.max_monotonicity_violation,
        );
    }
    for i in (0..g.len()).step_by((g.len() / 24).max(1)) {
        println!("r {:8.2} rho {:.4e}", g.nodes[i], vals[i]);
    }
}
