use aggsteady_core::families::random_densities;
use aggsteady_core::grid::RadialGrid;
use aggsteady_core::height::{density_from_height, height_from_density, mass_grid_clustered};

fn main() {
    let mg = mass_grid_clustered::<f64>(3072);
    for (n, count, seeds) in [
        (1u32, 4usize, vec![11u64, 14, 17, 23, 29, 31]),
        (2, 3, vec![12, 15, 18, 24]),
        (3, 3, vec![13, 16, 19, 25]),
    ] {
        for seed in seeds {
            let g = RadialGrid::uniform(n, 2.0, 4096).unwrap();
            let fam = random_densities(seed, count, g, &mg).unwrap();
            let mut worst = 0.0f64;
            for rho in &fam {
                let h = height_from_density(rho, &mg).unwrap();
                let back = density_from_height(&h, rho.grid.clone()).unwrap();
                worst = worst.max(rho.l1_distance(&back));
            }
            println!("n {n} seed {seed}: worst l1 {worst:.3e}");
        }
    }
}
