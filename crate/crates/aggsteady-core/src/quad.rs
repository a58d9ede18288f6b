//! Small 1-D quadrature helpers: fixed Gauss-Legendre panels and adaptive
//! Simpson for kernels with mild endpoint trouble.

use crate::scalar::{fl, Real};

/// 16-point Gauss-Legendre nodes/weights on [-1, 1].
const GL16: [(f64, f64); 16] = [
    (-0.9894009349916499, 0.027152459411754096),
    (-0.9445750230732326, 0.06225352393864789),
    (-0.8656312023878318, 0.09515851168249278),
    (-0.755404408355003, 0.12462897125553387),
    (-0.6178762444026438, 0.14959598881657673),
    (-0.45801677765722737, 0.16915651939500254),
    (-0.2816035507792589, 0.18260341504492358),
    (-0.09501250983763744, 0.1894506104550685),
    (0.09501250983763744, 0.1894506104550685),
    (0.2816035507792589, 0.18260341504492358),
    (0.45801677765722737, 0.16915651939500254),
    (0.6178762444026438, 0.14959598881657673),
    (0.755404408355003, 0.12462897125553387),
    (0.8656312023878318, 0.09515851168249278),
    (0.9445750230732326, 0.06225352393864789),
    (0.9894009349916499, 0.027152459411754096),
];

/// Gauss-Legendre on [a, b] split into `panels` equal panels.
pub fn gauss<S: Real, F: FnMut(S) -> S>(a: S, b: S, panels: usize, mut f: F) -> S {
    if b <= a {
        return S::zero();
    }
    let width = (b - a) / fl(panels as f64);
    let half = width * fl::<S>(0.5);
    let mut acc = S::zero();
    for p in 0..panels {
        let mid = a + width * (fl::<S>(p as f64) + fl(0.5));
        for &(x, w) in GL16.iter() {
            acc = acc + fl::<S>(w) * f(mid + half * fl::<S>(x));
        }
    }
    acc * half
}

/// Adaptive Simpson with absolute tolerance.
pub fn adaptive_simpson<S: Real, F: Fn(S) -> S + Copy>(a: S, b: S, tol: S, f: F) -> S {
    fn simpson<S: Real>(fa: S, fm: S, fb: S, h: S) -> S {
        h / fl::<S>(6.0) * (fa + fl::<S>(4.0) * fm + fb)
    }
    fn recurse<S: Real, F: Fn(S) -> S + Copy>(
        a: S,
        b: S,
        fa: S,
        fm: S,
        fb: S,
        whole: S,
        tol: S,
        depth: u32,
        f: F,
    ) -> S {
        let m = (a + b) * fl::<S>(0.5);
        let lm = (a + m) * fl::<S>(0.5);
        let rm = (m + b) * fl::<S>(0.5);
        let flm = f(lm);
        let frm = f(rm);
        let h = m - a;
        let left = simpson(fa, flm, fm, h);
        let right = simpson(fm, frm, fb, h);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= fl::<S>(15.0) * tol {
            return left + right + delta / fl(15.0);
        }
        let half_tol = tol * fl(0.5);
        recurse(a, m, fa, flm, fm, left, half_tol, depth - 1, f)
            + recurse(m, b, fm, frm, fb, right, half_tol, depth - 1, f)
    }
    if b <= a {
        return S::zero();
    }
    let m = (a + b) * fl::<S>(0.5);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(a, b, fa, fm, fb, whole, tol, 28, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let v = gauss::<f64, _>(0.0, 2.0, 1, |x| x.powi(7) - 3.0 * x * x + 1.0);
        assert_relative_eq!(v, 256.0 / 8.0 - 8.0 + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn simpson_handles_sqrt_endpoint() {
        let v = adaptive_simpson::<f64, _>(0.0, 1.0, 1e-11, |x: f64| x.sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-7);
    }
}
