//! Closed-form geometry used by the interaction-convexity machinery:
//! ball-intersection volumes and their partials, the Heron quantity, the
//! normalized two-ball exclusion measure I(R,r) with its second-derivative
//! bundle, and the 1-D rectangle-case integrand with its discriminant.

use crate::quad::gauss;
use crate::scalar::{ball_volume, fl, sphere_area, Real};

/// J_n(a,b) = int_a^b (1-y^2)^{(n-1)/2} dy, arguments clamped to [-1,1].
pub fn slice_integral<S: Real>(n: u32, a: S, b: S) -> S {
    let a = a.max(-S::one()).min(S::one());
    let b = b.max(-S::one()).min(S::one());
    if b <= a {
        return S::zero();
    }
    match n {
        1 => b - a,
        2 => {
            let f = |y: S| (y * (S::one() - y * y).max(S::zero()).sqrt() + y.asin()) * fl::<S>(0.5);
            f(b) - f(a)
        }
        3 => {
            let f = |y: S| y - y * y * y / fl::<S>(3.0);
            f(b) - f(a)
        }
        _ => {
            let p = fl::<S>((n - 1) as f64 / 2.0);
            gauss(a, b, 4, |y: S| (S::one() - y * y).max(S::zero()).powf(p))
        }
    }
}

/// Foot of the chord plane between a ball of radius r centered at distance s
/// and the unit ball at the origin.
pub fn chord_foot<S: Real>(r: S, s: S) -> S {
    (s * s + r * r - S::one()) / (fl::<S>(2.0) * s)
}

/// Half-length of the intersection chord; only meaningful in the
/// partial-overlap regime.
pub fn chord_half_length<S: Real>(r: S, s: S) -> S {
    let s1 = chord_foot(r, s);
    (r * r - s1 * s1).max(S::zero()).sqrt()
}

/// Volume of the intersection of a ball of radius r (center at distance s)
/// with the unit ball, in dimension n.
pub fn ball_intersection<S: Real>(n: u32, r: S, s: S) -> S {
    let cn: S = ball_volume(n);
    let cn1: S = ball_volume(n - 1);
    if s >= r + S::one() {
        return S::zero();
    }
    if s <= (S::one() - r).abs() {
        return cn * r.min(S::one()).powi(n as i32);
    }
    let s1 = chord_foot(r, s);
    cn1 * (slice_integral(n, s - s1, S::one())
        + r.powi(n as i32) * slice_integral(n, s1 / r, S::one()))
}

/// Closed-form partial derivative in the center distance s:
/// A_s = -c_{n-1} l^{n-1}.
pub fn ball_intersection_ds<S: Real>(n: u32, r: S, s: S) -> S {
    if s >= r + S::one() || s <= (S::one() - r).abs() {
        return S::zero();
    }
    let cn1: S = ball_volume(n - 1);
    -cn1 * chord_half_length(r, s).powi(n as i32 - 1)
}

/// Closed-form partial derivative in the moving radius r.
pub fn ball_intersection_dr<S: Real>(n: u32, r: S, s: S) -> S {
    let cn1: S = ball_volume(n - 1);
    if s >= r + S::one() {
        return S::zero();
    }
    if s <= (S::one() - r).abs() {
        return if r < S::one() {
            sphere_area::<S>(n) * r.powi(n as i32 - 1)
        } else {
            S::zero()
        };
    }
    let s1 = chord_foot(r, s);
    let l = chord_half_length(r, s);
    cn1 * l.powi(n as i32 - 1) * s1 / r
        + cn1 * fl::<S>(n as f64) * r.powi(n as i32 - 1) * slice_integral(n, s1 / r, S::one())
}

/// Intersection volume for two arbitrary radii at center distance s, obtained
/// by scaling the unit-second-ball form.
pub fn ball_intersection_two<S: Real>(n: u32, r1: S, r2: S, s: S) -> S {
    r2.powi(n as i32) * ball_intersection(n, r1 / r2, s / r2)
}

/// Heron quantity S(R,r) = (R+r+1)(-R+r+1)(R-r+1)(R+r-1);
/// positive exactly when R, r, 1 form a genuine triangle.
pub fn heron<S: Real>(big_r: S, r: S) -> S {
    (big_r + r + S::one())
        * (r + S::one() - big_r)
        * (big_r + S::one() - r)
        * (big_r + r - S::one())
}

/// c~_n = n c_{n-1} / (2^{n-1} c_n), the constant in the closed forms of the
/// second-derivative bundle. (Equal to c_{n-1} omega_n / (2^{n-1} c_n^2).)
pub fn c_tilde<S: Real>(n: u32) -> S {
    fl::<S>(n as f64) * ball_volume::<S>(n - 1)
        / (fl::<S>(2f64.powi(n as i32 - 1)) * ball_volume::<S>(n))
}

#[derive(Debug, Clone, Copy)]
pub struct GeometryBundle<S> {
    /// normalized measure of {x in B_R, y in B_r, |x-y| > 1}
    pub i_value: S,
    pub heron: S,
    /// coefficients of the quadratic form n^2 d^2I/dt^2 = u a^2 + 2 v a b + w b^2
    /// in a = d(R^{-n})/dt, b = d(r^{-n})/dt; present only in the
    /// triangle (partial-overlap) regime
    pub uvw: Option<(S, S, S)>,
}

/// I(R,r) by quadrature of the unit-exclusion identity, together with the
/// closed-form second-derivative bundle.
pub fn interaction_geometry<S: Real>(n: u32, big_r: S, r: S) -> GeometryBundle<S> {
    let sq = heron(big_r, r);
    let i_value = i_of(n, big_r, r);
    let uvw = if sq > S::zero() {
        let ct: S = c_tilde(n);
        let pow = sq.powf(fl((n as f64 - 1.0) / 2.0));
        let u_cap = ct * big_r * r * pow;
        let v = -ct * fl::<S>(0.5) * (big_r * big_r + r * r - S::one()) * pow;
        let ratio = (big_r / r).powi(n as i32 + 1);
        Some((ratio * u_cap, v, u_cap / ratio))
    } else {
        None
    };
    GeometryBundle { i_value, heron: sq, uvw }
}

fn i_of<S: Real>(n: u32, big_r: S, r: S) -> S {
    if big_r + r <= S::one() {
        return S::zero();
    }
    let cn: S = ball_volume(n);
    let wn: S = sphere_area(n);
    let lo = big_r;
    let hi = r + S::one();
    let mut integral = S::zero();
    if lo < hi {
        // A is constant up to the containment seam |1-r|, then enters the
        // partial-overlap regime with half-integer-power behavior at both the
        // seam and the closure distance r+1; substitute s = end -/+ u^2 there
        // so the quadrature sees an analytic integrand.
        let seam = (S::one() - r).abs();
        let f = |s: S| ball_intersection(n, r, s) * wn * s.powi(n as i32 - 1);
        let a = lo.max(seam);
        if lo < seam {
            let a_const = cn * r.min(S::one()).powi(n as i32);
            integral = integral + a_const * cn * (seam.min(hi).powi(n as i32) - lo.powi(n as i32));
        }
        if a < hi {
            let mid = (a + hi) * fl::<S>(0.5);
            let two = fl::<S>(2.0);
            integral = integral
                + if seam >= lo {
                    // left endpoint sits exactly on the seam
                    let span = (mid - a).sqrt();
                    gauss(S::zero(), span, 8, |u: S| f(a + u * u) * two * u)
                } else {
                    gauss(a, mid, 8, f)
                };
            let span = (hi - mid).sqrt();
            integral = integral + gauss(S::zero(), span, 8, |u: S| f(hi - u * u) * two * u);
        }
    }
    S::one() - big_r.powi(-(n as i32))
        + integral / (cn * cn * big_r.powi(n as i32) * r.powi(n as i32))
}

// ---------- 1-D rectangle cases ----------

/// Which configuration a rectangle of width 1/f, height 1/g takes against the
/// diagonal band |x-y| < a.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectCase {
    /// a vertex lies on the band boundary (measure-zero tie)
    Boundary,
    /// rectangle inside the band: integrand 0
    Inside,
    /// band crosses the short direction: integrand 1 - 2 a min(f,g)
    Crossing,
    /// band clips two corners: the rational closed form
    Corner,
}

pub fn classify_rect<S: Real>(f: S, g: S, a: S) -> RectCase {
    let half_f = fl::<S>(0.5) / f;
    let half_g = fl::<S>(0.5) / g;
    let outer = half_f + half_g;
    let inner = (half_f - half_g).abs();
    let tie = fl::<S>(1e-14) * outer.max(a);
    if (outer - a).abs() <= tie || (inner - a).abs() <= tie {
        RectCase::Boundary
    } else if outer < a {
        RectCase::Inside
    } else if inner > a {
        RectCase::Crossing
    } else {
        RectCase::Corner
    }
}

/// Normalized area of {|x| <= 1/(2f), |y| <= 1/(2g), |x-y| >= a} relative to
/// the rectangle area; equals h'(s1) h'(s2) times the raw measure.
pub fn rect_integrand<S: Real>(f: S, g: S, a: S) -> (RectCase, S) {
    let case = classify_rect(f, g, a);
    let value = match case {
        RectCase::Inside => S::zero(),
        RectCase::Crossing => S::one() - fl::<S>(2.0) * a * f.min(g),
        RectCase::Corner | RectCase::Boundary => {
            let quarter = fl::<S>(0.25);
            (f / g) * quarter + (g / f) * quarter + a * a * f * g - a * f - a * g + fl(0.5)
        }
    };
    (case, value.max(S::zero()))
}

/// d^2/dt^2 of the corner-case integrand along a curve with linear h':
/// quadratic form in (f', g').
pub fn rect_second_derivative<S: Real>(f: S, g: S, fp: S, gp: S, a: S) -> S {
    let two = fl::<S>(2.0);
    let qff = g / (two * f * f * f);
    let qgg = f / (two * g * g * g);
    let qfg = a * a - S::one() / (fl::<S>(4.0) * g * g) - S::one() / (fl::<S>(4.0) * f * f);
    qff * fp * fp + two * qfg * fp * gp + qgg * gp * gp
}

/// Discriminant of that quadratic form; strictly negative in the corner case:
/// 4 (a - 1/2f + 1/2g)(a + 1/2f - 1/2g)(a + 1/2f + 1/2g)(a - 1/2f - 1/2g).
pub fn rect_discriminant<S: Real>(f: S, g: S, a: S) -> S {
    let hf = fl::<S>(0.5) / f;
    let hg = fl::<S>(0.5) / g;
    fl::<S>(4.0) * (a - hf + hg) * (a + hf - hg) * (a + hf + hg) * (a - hf - hg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn lens_area_matches_classical_formula() {
        // two unit disks at center distance 1
        let a = ball_intersection::<f64>(2, 1.0, 1.0);
        let expect = 2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0;
        assert_relative_eq!(a, expect, epsilon = 1e-6);
    }

    #[test]
    fn intersection_limits() {
        assert_eq!(ball_intersection::<f64>(3, 0.5, 2.0), 0.0);
        assert_relative_eq!(
            ball_intersection::<f64>(3, 0.5, 0.2),
            ball_volume::<f64>(3) * 0.125,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            ball_intersection::<f64>(2, 3.0, 1.5),
            ball_volume::<f64>(2),
            epsilon = 1e-12
        );
        // 1-D overlap of [-r,r] and [s-1, s+1]
        assert_relative_eq!(ball_intersection::<f64>(1, 0.8, 1.2), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn partials_match_finite_differences() {
        let h = 1e-6;
        for n in 1..=3u32 {
            for &(r, s) in &[(0.8f64, 1.1f64), (1.3, 0.9), (0.6, 1.3), (1.0, 1.0)] {
                let ds = (ball_intersection::<f64>(n, r, s + h) - ball_intersection::<f64>(n, r, s - h)) / (2.0 * h);
                assert_relative_eq!(ball_intersection_ds::<f64>(n, r, s), ds, epsilon = 1e-6, max_relative = 1e-6);
                let dr = (ball_intersection::<f64>(n, r + h, s) - ball_intersection::<f64>(n, r - h, s)) / (2.0 * h);
                assert_relative_eq!(ball_intersection_dr::<f64>(n, r, s), dr, epsilon = 1e-6, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn heron_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let big_r = rng.gen_range(0.1..3.0);
            let r = rng.gen_range(0.1..3.0);
            let lhs = 4.0 * big_r * big_r * r * r
                - (big_r * big_r + r * r - 1.0) * (big_r * big_r + r * r - 1.0);
            assert_relative_eq!(lhs, heron::<f64>(big_r, r), epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn determinant_identity_uw_minus_v2() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in 1..=3u32 {
            let ct = c_tilde::<f64>(n);
            let mut found = 0;
            while found < 2000 {
                let big_r = rng.gen_range(0.1..2.5);
                let r = rng.gen_range(0.1..2.5);
                let b = interaction_geometry::<f64>(n, big_r, r);
                if let Some((u, v, w)) = b.uvw {
                    found += 1;
                    let expect = ct * ct / 4.0 * b.heron.powi(n as i32);
                    assert_relative_eq!(u * w - v * v, expect, epsilon = 1e-10, max_relative = 1e-10);
                    assert!(u > 0.0 && w > 0.0);
                }
            }
        }
    }

    #[test]
    fn i_closed_forms_in_degenerate_regimes() {
        // far-separated small ball inside the admissible region: I = 1 - R^{-n}
        for n in 1..=3u32 {
            let b = interaction_geometry::<f64>(n, 3.0, 0.5);
            assert_relative_eq!(b.i_value, 1.0 - 3.0f64.powi(-(n as i32)), epsilon = 1e-10);
            let c = interaction_geometry::<f64>(n, 0.3, 0.4);
            assert!(c.i_value.abs() < 1e-10, "expected 0, got {}", c.i_value);
        }
    }

    #[test]
    fn uvw_match_finite_differences_of_i() {
        // oracle: U = d/dR [ R^{n+1} r^{n+1} dI/dR ], etc., by nested
        // central differences of the quadrature-based I
        let h = 1e-4;
        for n in 1..=3u32 {
            let (big_r, r) = (1.2f64, 0.9f64);
            let i_r = |rr: f64, r2: f64| {
                (i_of::<f64>(n, rr + h, r2) - i_of::<f64>(n, rr - h, r2)) / (2.0 * h)
            };
            let i_rr = |rr: f64, r2: f64| {
                (i_of::<f64>(n, rr, r2 + h) - i_of::<f64>(n, rr, r2 - h)) / (2.0 * h)
            };
            let p = (n + 1) as i32;
            let u_fd = ((big_r + h).powi(p) * r.powi(p) * i_r(big_r + h, r)
                - (big_r - h).powi(p) * r.powi(p) * i_r(big_r - h, r))
                / (2.0 * h);
            let v_fd = big_r.powi(p) * r.powi(p) * (i_r(big_r, r + h) - i_r(big_r, r - h)) / (2.0 * h);
            let w_fd = (big_r.powi(p) * (r + h).powi(p) * i_rr(big_r, r + h)
                - big_r.powi(p) * (r - h).powi(p) * i_rr(big_r, r - h))
                / (2.0 * h);
            let ct = c_tilde::<f64>(n);
            let sq = heron::<f64>(big_r, r);
            let pow = sq.powf((n as f64 - 1.0) / 2.0);
            let u_cap = ct * big_r * r * pow;
            let v = -ct / 2.0 * (big_r * big_r + r * r - 1.0) * pow;
            // u_fd is the mixed capital quantity U; compare all three
            assert_relative_eq!(u_fd, u_cap, max_relative = 1e-4);
            assert_relative_eq!(v_fd, v, max_relative = 1e-4);
            assert_relative_eq!(w_fd, u_cap, max_relative = 1e-4);
        }
    }

    #[test]
    fn rect_cases_partition_and_discriminant_sign() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut corner = 0;
        let mut tries = 0;
        while corner < 1000 && tries < 200_000 {
            tries += 1;
            let f = rng.gen_range(0.2..4.0);
            let g = rng.gen_range(0.2..4.0);
            let a = rng.gen_range(0.05..3.0);
            match classify_rect::<f64>(f, g, a) {
                RectCase::Corner => {
                    corner += 1;
                    assert!(rect_discriminant::<f64>(f, g, a) < 0.0);
                    let fp = rng.gen_range(-1.0..1.0);
                    let gp = rng.gen_range(-1.0..1.0);
                    assert!(rect_second_derivative::<f64>(f, g, fp, gp, a) >= -1e-14);
                }
                RectCase::Inside => {
                    assert_eq!(rect_integrand::<f64>(f, g, a).1, 0.0);
                }
                RectCase::Crossing => {
                    let v = rect_integrand::<f64>(f, g, a).1;
                    assert!(v >= 0.0 && v <= 1.0);
                }
                RectCase::Boundary => {}
            }
        }
        assert!(corner >= 1000);
    }

    #[test]
    fn crossing_case_value() {
        // wide flat rectangle fully crossed by the band
        let (case, v) = rect_integrand::<f64>(0.25, 4.0, 0.5);
        assert_eq!(case, RectCase::Crossing);
        assert_relative_eq!(v, 1.0 - 2.0 * 0.5 * 0.25, epsilon = 1e-14);
    }
}
