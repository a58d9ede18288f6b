//! Scalar abstraction so the whole toolkit runs in f32 or f64.

use num_traits::{Float, FromPrimitive};

/// Floating point scalar the solvers are generic over.
pub trait Real:
    Float
    + FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for pulling an f64 literal into the generic scalar type.
#[inline]
pub fn fl<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("literal conversion")
}

/// Volume of the unit ball in dimension n, via the recurrence
/// c_0 = 1, c_1 = 2, c_n = c_{n-2} * 2*pi / n.
pub fn ball_volume<S: Real>(n: u32) -> S {
    match n {
        0 => S::one(),
        1 => fl(2.0),
        _ => ball_volume::<S>(n - 2) * fl(2.0 * std::f64::consts::PI) / fl(n as f64),
    }
}

/// Surface area of the unit sphere in dimension n: omega_n = n * c_n.
pub fn sphere_area<S: Real>(n: u32) -> S {
    fl::<S>(n as f64) * ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes_match_closed_forms() {
        assert_relative_eq!(ball_volume::<f64>(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(ball_volume::<f64>(2), PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume::<f64>(3), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area::<f64>(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area::<f64>(3), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn works_in_f32() {
        let c2: f32 = ball_volume(2);
        assert!((c2 - std::f32::consts::PI).abs() < 1e-5);
    }
}
