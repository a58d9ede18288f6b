//! Attractive radial interaction potentials: built-in kinds, the smoothstep
//! tail cutoff, the tail-modified ("forged") potential with a prescribed
//! asymptotic slope, and the step-potential decomposition.

use crate::error::{Error, Result};
use crate::scalar::{fl, Real};
use serde::{Deserialize, Serialize};

/// Smoothstep ramp: 0 below 0, 1 above 1, 6x^5-15x^4+10x^3 between.
/// Max slope 15/8, attained at x = 1/2.
pub fn eta<S: Real>(x: S) -> S {
    if x <= S::zero() {
        S::zero()
    } else if x >= S::one() {
        S::one()
    } else {
        ((fl::<S>(6.0) * x - fl(15.0)) * x + fl(10.0)) * x * x * x
    }
}

pub fn eta_prime<S: Real>(x: S) -> S {
    if x <= S::zero() || x >= S::one() {
        S::zero()
    } else {
        fl::<S>(30.0) * x * x * (S::one() - x) * (S::one() - x)
    }
}

/// Antiderivative of eta with P(0) = 0.
pub fn eta_integral<S: Real>(x: S) -> S {
    if x <= S::zero() {
        S::zero()
    } else if x >= S::one() {
        x - fl(0.5)
    } else {
        ((x - fl(3.0)) * x + fl(2.5)) * x * x * x * x
    }
}

/// Monotone (Fritsch-Carlson) cubic interpolant; used for tabulated W' so a
/// positive table stays positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic<S: Real> {
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub m: Vec<S>,
    /// cumulative exact integrals of the cubic up to each node
    pub cum: Vec<S>,
}

impl<S: Real> MonotoneCubic<S> {
    pub fn new(x: Vec<S>, y: Vec<S>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() {
            return Err(Error::InvalidParameter("table needs matching x/y, length >= 2".into()));
        }
        let n = x.len();
        let mut d = vec![S::zero(); n - 1];
        for i in 0..n - 1 {
            if x[i + 1] <= x[i] {
                return Err(Error::InvalidParameter("table abscissae must increase".into()));
            }
            d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        }
        let mut m = vec![S::zero(); n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            m[i] = if d[i - 1] * d[i] <= S::zero() {
                S::zero()
            } else {
                fl::<S>(0.5) * (d[i - 1] + d[i])
            };
        }
        // clamp tangents to keep monotone segments monotone
        for i in 0..n - 1 {
            if d[i] == S::zero() {
                m[i] = S::zero();
                m[i + 1] = S::zero();
            } else {
                let (a, b) = (m[i] / d[i], m[i + 1] / d[i]);
                let norm = (a * a + b * b).sqrt();
                if norm > fl(3.0) {
                    let t = fl::<S>(3.0) / norm;
                    m[i] = t * a * d[i];
                    m[i + 1] = t * b * d[i];
                }
            }
        }
        let mut cum = vec![S::zero(); n];
        for i in 0..n - 1 {
            let h = x[i + 1] - x[i];
            // exact integral of the Hermite cubic over the segment
            cum[i + 1] = cum[i]
                + h * fl::<S>(0.5) * (y[i] + y[i + 1])
                + h * h * (m[i] - m[i + 1]) / fl(12.0);
        }
        Ok(Self { x, y, m, cum })
    }

    fn segment(&self, r: S) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, r: S) -> S {
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let t = ((r - self.x[i]) / h).max(S::zero()).min(S::one());
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = fl::<S>(2.0) * t3 - fl::<S>(3.0) * t2 + S::one();
        let h10 = t3 - fl::<S>(2.0) * t2 + t;
        let h01 = -fl::<S>(2.0) * t3 + fl::<S>(3.0) * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h * h10 * self.m[i] + h01 * self.y[i + 1] + h * h11 * self.m[i + 1]
    }

    /// Integral of the interpolant from x[0] to r (clamped to the table).
    pub fn integral(&self, r: S) -> S {
        let r = r.max(self.x[0]).min(*self.x.last().unwrap());
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let t = (r - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        // antiderivatives of the Hermite basis in t, times h
        let ih00 = fl::<S>(0.5) * t4 - t3 + t;
        let ih10 = fl::<S>(0.25) * t4 - fl::<S>(2.0 / 3.0) * t3 + fl::<S>(0.5) * t2;
        let ih01 = -fl::<S>(0.5) * t4 + t3;
        let ih11 = fl::<S>(0.25) * t4 - fl::<S>(1.0 / 3.0) * t3;
        self.cum[i]
            + h * (ih00 * self.y[i]
                + h * ih10 * self.m[i]
                + ih01 * self.y[i + 1]
                + h * ih11 * self.m[i + 1])
    }
}

#[derive(Debug, Clone)]
pub enum Potential<S: Real> {
    /// W(r) = r^k / k for k != 0; log r at k = 0.
    Riesz { k: S },
    /// W(r) = r^2 / 2 (same as riesz(2); kept as its own kind).
    Quadratic,
    /// W_a(r) = 1 for r >= a, 0 otherwise. Derivative is distributional.
    Step { a: S },
    /// Monotone-cubic interpolation of a sampled W'; k is metadata for the
    /// near-origin singularity exponent.
    Tabulated { wprime: MonotoneCubic<S>, k: f64 },
    Modified(ModifiedPotential<S>),
}

/// The forged potential W_{R,eps}: identical derivative to the base on
/// (0, 2R], constant slope eps beyond 3R, smoothstep blend between.
#[derive(Debug, Clone)]
pub struct ModifiedPotential<S: Real> {
    pub base: Box<Potential<S>>,
    pub radius: S,
    pub eps: S,
    /// cumulative table of w1 on [2R, 3R] with w1(3R) = 0
    w1_blend: Vec<S>,
    w1_at_2r: S,
    base_at_2r: S,
}

const W1_TABLE: usize = 1024;

impl<S: Real> Potential<S> {
    /// W'(r) for r > 0.
    pub fn wprime(&self, r: S) -> Result<S> {
        if r <= S::zero() {
            return Err(Error::InvalidParameter(format!("wprime needs r > 0, got {r}")));
        }
        match self {
            Potential::Riesz { k } => Ok(r.powf(*k - S::one())),
            Potential::Quadratic => Ok(r),
            Potential::Step { .. } => Err(Error::StepDerivative),
            Potential::Tabulated { wprime, .. } => Ok(wprime.eval(r)),
            Potential::Modified(m) => {
                let x = (r - fl::<S>(2.0) * m.radius) / m.radius;
                let e = eta(x);
                let w1p = if e >= S::one() {
                    S::zero()
                } else {
                    m.base.wprime(r)? * (S::one() - e)
                };
                Ok(w1p + m.eps * e)
            }
        }
    }

    /// W(r) up to the kind's natural anchoring constant.
    pub fn w(&self, r: S) -> Result<S> {
        if r < S::zero() {
            return Err(Error::InvalidParameter("radius must be >= 0".into()));
        }
        match self {
            Potential::Riesz { k } => {
                if *k == S::zero() {
                    if r == S::zero() {
                        return Err(Error::InvalidParameter("log potential diverges at 0".into()));
                    }
                    Ok(r.ln())
                } else {
                    Ok(r.powf(*k) / *k)
                }
            }
            Potential::Quadratic => Ok(r * r * fl(0.5)),
            Potential::Step { a } => Ok(if r >= *a { S::one() } else { S::zero() }),
            Potential::Tabulated { wprime, .. } => Ok(wprime.integral(r)),
            Potential::Modified(m) => Ok(m.w1(r)? + m.w2(r)),
        }
    }

    /// Near-origin singularity exponent metadata (W' <= C r^{k-1}).
    pub fn k_exponent(&self) -> f64 {
        match self {
            Potential::Riesz { k } => k.to_f64().unwrap_or(f64::NAN),
            Potential::Quadratic => 2.0,
            Potential::Step { .. } => f64::INFINITY,
            Potential::Tabulated { k, .. } => *k,
            Potential::Modified(m) => m.base.k_exponent(),
        }
    }

    /// Limit of W at r -> 0+ when finite (used by the step decomposition).
    pub fn w_at_origin(&self) -> Option<S> {
        match self {
            Potential::Riesz { k } if *k > S::zero() => Some(S::zero()),
            Potential::Riesz { .. } => None,
            Potential::Quadratic => Some(S::zero()),
            Potential::Step { a } => Some(if *a <= S::zero() { S::one() } else { S::zero() }),
            Potential::Tabulated { .. } => Some(S::zero()),
            Potential::Modified(m) => {
                // for r <= 2R, w(r) = base.w(r) - base.w(2R) + w1(2R)
                let base0 = m.base.w_at_origin()?;
                Some(base0 - m.base_at_2r + m.w1_at_2r)
            }
        }
    }

    /// Spot-check attractiveness on a sample of radii.
    pub fn check_attractive(&self, radii: &[S]) -> Result<()> {
        for &r in radii {
            let wp = self.wprime(r)?;
            if wp < S::zero() {
                return Err(Error::UnsupportedPotential(format!(
                    "W'({r}) = {wp} < 0; potential is not attractive"
                )));
            }
        }
        Ok(())
    }
}

impl<S: Real> ModifiedPotential<S> {
    pub fn w1(&self, r: S) -> Result<S> {
        let two_r = fl::<S>(2.0) * self.radius;
        let three_r = fl::<S>(3.0) * self.radius;
        if r >= three_r {
            return Ok(S::zero());
        }
        if r <= two_r {
            // w1' = W' here, so w1 = W(r) - W(2R) + w1(2R)
            return Ok(self.base.w(r)? - self.base_at_2r + self.w1_at_2r);
        }
        let t = (r - two_r) / self.radius * fl((W1_TABLE - 1) as f64);
        let i = t.floor().to_f64().unwrap_or(0.0) as usize;
        let i = i.min(W1_TABLE - 2);
        let w = t - fl(i as f64);
        Ok(self.w1_blend[i] * (S::one() - w) + self.w1_blend[i + 1] * w)
    }

    pub fn w2(&self, r: S) -> S {
        self.eps * self.radius * eta_integral((r - fl::<S>(2.0) * self.radius) / self.radius)
    }

    /// Closed-form Laplacian of w2 in dimension n.
    pub fn laplacian_w2(&self, r: S, dim: u32) -> S {
        if r <= S::zero() {
            return S::zero();
        }
        let x = (r - fl::<S>(2.0) * self.radius) / self.radius;
        self.eps * eta_prime(x) / self.radius + fl::<S>((dim - 1) as f64) * self.eps * eta(x) / r
    }
}

/// Build W_{R,eps} from an attractive base potential.
pub fn forge_tail<S: Real>(base: Potential<S>, radius: S, eps: S) -> Result<Potential<S>> {
    if eps <= S::zero() || eps >= S::one() {
        return Err(Error::InvalidParameter(format!("slope must lie in (0,1), got {eps}")));
    }
    if radius <= S::zero() {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if matches!(base, Potential::Step { .. }) {
        return Err(Error::UnsupportedPotential("cannot forge a step potential".into()));
    }
    let two_r = fl::<S>(2.0) * radius;
    let three_r = fl::<S>(3.0) * radius;
    // cumulative Simpson of w1' = W'(r)(1 - eta) on [2R, 3R], anchored so
    // that w1(3R) = 0: integrate backwards from 3R
    let n = W1_TABLE;
    let h = (three_r - two_r) / fl((n - 1) as f64);
    let wp = |r: S| -> Result<S> {
        let e = eta((r - two_r) / radius);
        Ok(base.wprime(r)? * (S::one() - e))
    };
    let mut blend = vec![S::zero(); n];
    for i in (0..n - 1).rev() {
        let r0 = two_r + h * fl(i as f64);
        let r1 = r0 + h;
        let rm = r0 + h * fl(0.5);
        let seg = h / fl::<S>(6.0) * (wp(r0)? + fl::<S>(4.0) * wp(rm)? + wp(r1)?);
        blend[i] = blend[i + 1] - seg;
    }
    let w1_at_2r = blend[0];
    let base_at_2r = base.w(two_r)?;
    Ok(Potential::Modified(ModifiedPotential {
        base: Box::new(base),
        radius,
        eps,
        w1_blend: blend,
        w1_at_2r,
        base_at_2r,
    }))
}

/// Step decomposition of W on (0, a_max): W(r) ~ sum_j weight_j W_{a_j}(r) + w0
/// with weight_j the trapezoid quadrature of W'(a) da.
pub struct StepDecomposition<S: Real> {
    pub nodes: Vec<(S, S)>, // (a_j, weight_j)
    pub w0: S,
}

pub fn step_decompose<S: Real>(
    w: &Potential<S>,
    a_max: S,
    count: usize,
) -> Result<StepDecomposition<S>> {
    if let Potential::Step { a } = w {
        // already a single step: a point mass of weight 1 at a
        return Ok(StepDecomposition { nodes: vec![(*a, S::one())], w0: S::zero() });
    }
    let w0 = w.w_at_origin().ok_or_else(|| {
        Error::UnsupportedPotential(
            "potential unbounded below near 0; use the truncated variant".into(),
        )
    })?;
    if count < 2 {
        return Err(Error::InvalidParameter("need at least 2 quadrature nodes".into()));
    }
    let h = a_max / fl(count as f64);
    let mut nodes = Vec::with_capacity(count);
    for j in 0..count {
        // midpoint rule in a avoids the a = 0 endpoint where W' may blow up
        let a = h * (fl::<S>(j as f64) + fl(0.5));
        nodes.push((a, w.wprime(a)? * h));
    }
    Ok(StepDecomposition { nodes, w0 })
}

/// Reconstruct W(r) from its step decomposition.
pub fn step_reconstruct<S: Real>(d: &StepDecomposition<S>, r: S) -> S {
    let mut acc = d.w0;
    for &(a, weight) in &d.nodes {
        if r >= a {
            acc = acc + weight;
        }
    }
    acc
}

/// Truncated potential W_eps = max(W, -1/eps) realized as a tabulated kind;
/// needed to decompose potentials unbounded below (k <= 0).
pub fn truncate_below<S: Real>(w: &Potential<S>, eps: S, r_max: S, samples: usize) -> Result<Potential<S>> {
    if eps <= S::zero() {
        return Err(Error::InvalidParameter("truncation eps must be positive".into()));
    }
    let floor = -S::one() / eps;
    let h = r_max / fl(samples as f64);
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for i in 1..=samples {
        let r = h * fl(i as f64);
        xs.push(r);
        ys.push(if w.w(r)? > floor { w.wprime(r)? } else { S::zero() });
    }
    Ok(Potential::Tabulated { wprime: MonotoneCubic::new(xs, ys)?, k: w.k_exponent() })
}

// ---------- JSON spec ----------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    Riesz { k: f64 },
    Quadratic,
    Step { params: StepParams },
    Tabulated { k: f64, table: Table },
    Modified { params: ModifiedParams, base: Box<PotentialSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepParams {
    pub a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table {
    pub r: Vec<f64>,
    pub wprime: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModifiedParams {
    #[serde(rename = "R")]
    pub radius: f64,
    pub epsilon: f64,
}

impl PotentialSpec {
    pub fn build<S: Real>(&self) -> Result<Potential<S>> {
        match self {
            PotentialSpec::Riesz { k } => Ok(Potential::Riesz { k: fl(*k) }),
            PotentialSpec::Quadratic => Ok(Potential::Quadratic),
            PotentialSpec::Step { params } => Ok(Potential::Step { a: fl(params.a) }),
            PotentialSpec::Tabulated { k, table } => {
                let xs = table.r.iter().map(|&v| fl(v)).collect();
                let ys = table.wprime.iter().map(|&v| fl(v)).collect();
                Ok(Potential::Tabulated { wprime: MonotoneCubic::new(xs, ys)?, k: *k })
            }
            PotentialSpec::Modified { params, base } => {
                forge_tail(base.build()?, fl(params.radius), fl(params.epsilon))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eta_shape() {
        assert_eq!(eta::<f64>(-1.0), 0.0);
        assert_eq!(eta::<f64>(2.0), 1.0);
        assert_relative_eq!(eta::<f64>(0.5), 0.5, epsilon = 1e-14);
        // densely sampled numerical derivative stays below 2
        let mut max_slope: f64 = 0.0;
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            max_slope = max_slope.max(eta_prime::<f64>(x));
        }
        assert!(max_slope < 2.0);
        assert_relative_eq!(max_slope, 15.0 / 8.0, epsilon = 1e-6);
        // antiderivative consistency
        assert_relative_eq!(eta_integral::<f64>(1.0), 0.5, epsilon = 1e-14);
        assert_relative_eq!(eta_integral::<f64>(3.0), 2.5, epsilon = 1e-14);
    }

    #[test]
    fn riesz_derivatives() {
        let w = Potential::Riesz { k: 2.0f64 };
        assert_relative_eq!(w.wprime(3.0).unwrap(), 3.0);
        let logw = Potential::Riesz { k: 0.0f64 };
        assert_relative_eq!(logw.wprime(2.0).unwrap(), 0.5);
        assert!(Potential::Step { a: 1.0f64 }.wprime(0.5).is_err());
        assert!(w.wprime(0.0).is_err());
    }

    #[test]
    fn forge_matches_base_inside_and_slope_outside() {
        let base = Potential::Quadratic;
        let w = forge_tail::<f64>(base, 1.5, 0.01).unwrap();
        for r in [0.3, 1.0, 1.5, 2.9, 3.0] {
            assert_relative_eq!(w.wprime(r).unwrap(), r, epsilon = 1e-14);
        }
        for r in [4.5, 6.0, 10.0] {
            assert_relative_eq!(w.wprime(r).unwrap(), 0.01, epsilon = 1e-14);
        }
        // continuity at the seams
        for seam in [3.0f64, 4.5] {
            let lo = w.wprime(seam - 1e-9).unwrap();
            let hi = w.wprime(seam + 1e-9).unwrap();
            assert!((hi - lo).abs() < 1e-7);
        }
        // derivative nonnegative everywhere sampled
        for i in 1..2000 {
            let r = i as f64 * 0.005;
            assert!(w.wprime(r).unwrap() >= 0.0);
        }
        // w1(3R) = 0 anchoring and value continuity of w
        if let Potential::Modified(m) = &w {
            assert_relative_eq!(m.w1(4.5).unwrap(), 0.0);
            let lo = m.w1(4.5 - 1e-6).unwrap();
            assert!(lo.abs() < 1e-5);
        } else {
            panic!("expected modified potential");
        }
        let lo = w.w(2.9999).unwrap();
        let hi = w.w(3.0001).unwrap();
        assert!((hi - lo).abs() < 1e-3);
    }

    #[test]
    fn laplacian_w2_bound() {
        // provable bound: eps (||eta'|| + (n-1)/2) / R on [2R, infinity)
        let r_cap = 2.0f64;
        let eps = 0.125f64;
        let w = forge_tail::<f64>(Potential::Quadratic, r_cap, eps).unwrap();
        let m = match &w {
            Potential::Modified(m) => m,
            _ => unreachable!(),
        };
        for dim in 1..=3u32 {
            let bound = eps * (15.0 / 8.0 + (dim as f64 - 1.0) / 2.0) / r_cap;
            let mut sup: f64 = 0.0;
            for i in 0..=4000 {
                let r = 2.0 * r_cap + i as f64 * (2.0 * r_cap) / 4000.0;
                sup = sup.max(m.laplacian_w2(r, dim).abs());
            }
            assert!(sup <= bound * (1.0 + 1e-12), "dim {dim}: {sup} vs {bound}");
            if dim >= 3 {
                // the n eps / R form only holds once n covers the eta' overshoot
                assert!(sup <= dim as f64 * eps / r_cap);
            }
        }
    }

    #[test]
    fn step_decomposition_reconstructs_quadratic() {
        let w = Potential::Quadratic;
        let d = step_decompose::<f64>(&w, 2.0, 2000).unwrap();
        let mut max_err: f64 = 0.0;
        for i in 0..=200 {
            let r = i as f64 / 100.0;
            let got = step_reconstruct(&d, r);
            max_err = max_err.max((got - r * r / 2.0).abs());
        }
        assert!(max_err < 1e-5, "max reconstruction error {max_err}");
    }

    #[test]
    fn step_potential_decomposes_to_itself() {
        let w = Potential::Step { a: 0.7f64 };
        let d = step_decompose(&w, 2.0, 100).unwrap();
        assert_eq!(d.nodes.len(), 1);
        assert_eq!(d.nodes[0].0, 0.7);
        assert_eq!(d.nodes[0].1, 1.0);
    }

    #[test]
    fn unbounded_below_requires_truncation() {
        let w = Potential::Riesz { k: -0.5f64 };
        assert!(step_decompose(&w, 2.0, 100).is_err());
        let trunc = truncate_below(&w, 0.25, 3.0, 600).unwrap();
        // truncated version decomposes fine
        let d = step_decompose(&trunc, 2.0, 400).unwrap();
        assert!(d.w0 == 0.0);
        assert!(!d.nodes.is_empty());
    }

    #[test]
    fn tabulated_monotone_cubic_preserves_positivity() {
        let xs: Vec<f64> = (1..=50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x / (1.0 + x * x)).collect();
        let w = Potential::Tabulated { wprime: MonotoneCubic::new(xs, ys).unwrap(), k: 2.0 };
        for i in 10..500 {
            let r = i as f64 * 0.01;
            assert!(w.wprime(r).unwrap() >= 0.0);
        }
        // integral is increasing
        assert!(w.w(3.0).unwrap() > w.w(1.0).unwrap());
    }

    #[test]
    fn spec_round_trip() {
        let spec = PotentialSpec::Modified {
            params: ModifiedParams { radius: 2.0, epsilon: 0.0625 },
            base: Box::new(PotentialSpec::Riesz { k: 1.0 }),
        };
        let text = serde_json::to_string(&spec).unwrap();
        let parsed: PotentialSpec = serde_json::from_str(&text).unwrap();
        let w: Potential<f64> = parsed.build().unwrap();
        assert_relative_eq!(w.wprime(1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(w.wprime(10.0).unwrap(), 0.0625, epsilon = 1e-14);
    }

    #[test]
    fn forge_rejects_bad_slope() {
        assert!(forge_tail::<f64>(Potential::Quadratic, 1.0, 0.0).is_err());
        assert!(forge_tail::<f64>(Potential::Quadratic, 1.0, 1.0).is_err());
        assert!(forge_tail::<f64>(Potential::Quadratic, -1.0, 0.5).is_err());
    }
}
