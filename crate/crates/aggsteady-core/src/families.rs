//! Seeded generators for valid test densities. Profiles are parameterized
//! through the height function (any positive increasing h' yields a strictly
//! decreasing density of unit mass), so every sample is admissible by
//! construction.

use crate::density::RadialDensity;
use crate::error::Result;
use crate::grid::RadialGrid;
use crate::height::{density_from_height, HeightFunction};
use crate::scalar::{ball_volume, fl, Real};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Parameters drawn for one random profile.
#[derive(Debug, Clone)]
pub struct ProfileParams {
    pub support: f64,
    /// polynomial coefficients of the increasing factor 1 + sum a_k s^k
    pub poly: [f64; 4],
    /// exponent of the (1-s)^{-gamma} blow-up factor, gamma in (0, 0.8)
    pub gamma: f64,
}

pub fn sample_params(rng: &mut ChaCha8Rng) -> ProfileParams {
    ProfileParams {
        support: rng.gen_range(0.6..1.8),
        poly: [
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
        ],
        gamma: rng.gen_range(0.1..0.7),
    }
}

/// Build the height function for the given parameters:
/// h'(s) = A (1 + sum a_k s^k) (1-s)^{-gamma}, A fixed by the support radius.
pub fn height_for_params<S: Real>(
    p: &ProfileParams,
    dim: u32,
    mass_grid: &[S],
) -> HeightFunction<S> {
    let cn: S = ball_volume(dim);
    let a = S::one() / (cn * fl::<S>(p.support).powi(dim as i32));
    // take 1-s as its own argument: near s = 1 the subtraction would round to
    // zero and the blow-up factor to infinity
    let hp_parts = |s: S, oms: S| -> S {
        let mut poly = S::one();
        let mut sk = S::one();
        for &c in &p.poly {
            sk = sk * s;
            poly = poly + fl::<S>(c) * sk;
        }
        a * poly * oms.powf(-fl::<S>(p.gamma))
    };
    let hp_of = |s: S| hp_parts(s, S::one() - s);
    // integrate h' with the trapezoid rule over the extended node set
    let mut h = Vec::with_capacity(mass_grid.len());
    let mut hp = Vec::with_capacity(mass_grid.len());
    let mut acc = S::zero();
    let mut prev_s = S::zero();
    let mut prev_hp = hp_of(S::zero());
    let half = fl::<S>(0.5);
    for &s in mass_grid {
        let p_here = hp_of(s);
        acc = acc + half * (prev_hp + p_here) * (s - prev_s);
        h.push(acc);
        hp.push(p_here);
        prev_s = s;
        prev_hp = p_here;
    }
    // closed-form top value of h(1): finish the integral with a fine tail sum
    let s_last = *mass_grid.last().unwrap();
    let mut h_top = acc;
    let steps = 2000;
    let mut ps = prev_hp;
    for i in 1..=steps {
        // substitute 1-s = (1-s_last) u^{1/(1-gamma)} to tame the endpoint
        let u = 1.0 - i as f64 / steps as f64;
        let oms = (S::one() - s_last) * fl::<S>(u.powf(1.0 / (1.0 - p.gamma)));
        let s = S::one() - oms;
        let pv = if oms > S::zero() { hp_parts(s, oms) } else { S::zero() };
        let prev_oms = (S::one() - s_last)
            * fl::<S>((1.0 - (i - 1) as f64 / steps as f64).powf(1.0 / (1.0 - p.gamma)));
        let ds = prev_oms - oms;
        h_top = h_top + half * (ps + pv) * ds;
        ps = pv;
    }
    HeightFunction {
        s: mass_grid.to_vec(),
        h,
        hp,
        hp_at_zero: hp_of(S::zero()),
        h_at_one: h_top,
    }
}

/// Draw `count` strictly decreasing unit-mass densities on `grid`.
pub fn random_densities<S: Real>(
    seed: u64,
    count: usize,
    grid: Arc<RadialGrid<S>>,
    mass_grid: &[S],
) -> Result<Vec<RadialDensity<S>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = sample_params(&mut rng);
            let h = height_for_params::<S>(&p, grid.dim, mass_grid);
            density_from_height(&h, grid.clone())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::height::mass_grid_clustered;

    #[test]
    fn random_profiles_are_valid_probability_densities() {
        let sg = mass_grid_clustered::<f64>(1024);
        for dim in 1..=3u32 {
            let grid = RadialGrid::uniform(dim, 2.5, 2048).unwrap();
            let family = random_densities(42, 6, grid, &sg).unwrap();
            for rho in &family {
                assert!((rho.mass() - 1.0).abs() < 1e-3, "mass {}", rho.mass());
                assert!(rho.strictly_decreasing(0.0) || rho.linf() > 0.0);
                assert!(rho.support_radius() < 2.0);
            }
        }
    }

    #[test]
    fn same_seed_same_family() {
        let sg = mass_grid_clustered::<f64>(256);
        let grid = RadialGrid::uniform(1, 2.5, 512).unwrap();
        let a = random_densities(7, 3, grid.clone(), &sg).unwrap();
        let b = random_densities(7, 3, grid, &sg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values, y.values);
        }
    }
}
