//! Spectral densities of the Toeplitz families, the Hurwitz zeta function
//! they need, and Fourier coefficients of `1/φ` (the asymptotic entries of
//! `G⁻¹` away from its top-left corner).
//!
//! Conventions: `γ(k) = ∫₀¹ e^{2πikθ} φ(θ) dθ` and
//! `φ(θ) = Σ_k γ(k) e^{-2πikθ}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::quadrature::CompositeRule;

/// Gauss order per cell of the graded rule used for fGn integrals.
pub const GRADED_ORDER: usize = 24;

/// `B_{2k} / (2k)!` for `k = 1..=5`.
const BERNOULLI_OVER_FACTORIAL: [f64; 5] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{n≥0} (n + a)^{-s}` for `s > 1`, `a > 0`.
///
/// Direct summation of the first `N` terms plus the Euler–Maclaurin tail with
/// four Bernoulli corrections. `N` grows until the first omitted correction
/// is below `1e-17` of the tail integral.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain(format!("Hurwitz zeta needs s > 1, got s = {s}")));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("Hurwitz zeta needs a > 0, got a = {a}")));
    }
    let omitted = |x: f64| {
        // B10/10! · s(s+1)…(s+8) · x^{-s-9}
        let rising: f64 = (0..9).map(|i| s + i as f64).product();
        (BERNOULLI_OVER_FACTORIAL[4] * rising * x.powf(-s - 9.0)).abs()
    };
    let mut n = 9usize;
    while n < 100_000 {
        let x = n as f64 + a;
        let tail = x.powf(1.0 - s) / (s - 1.0);
        if omitted(x) <= 1e-17 * tail {
            break;
        }
        n += 1;
    }
    let x = n as f64 + a;
    let mut sum = 0.0;
    for i in (0..n).rev() {
        sum += (i as f64 + a).powf(-s);
    }
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Σ_k B_{2k}/(2k)! · s(s+1)…(s+2k-2) · x^{-s-2k+1}
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    for (k, coef) in BERNOULLI_OVER_FACTORIAL[..4].iter().enumerate() {
        sum += coef * rising * xpow;
        let m = 2 * k as i32 + 1;
        rising *= (s + m as f64) * (s + m as f64 + 1.0);
        xpow /= x * x;
    }
    Ok(sum)
}

/// `ζ(-2h)` through the functional equation,
/// `ζ(-2h) = -2 (2π)^{-2h-1} sin(πh) Γ(1+2h) ζ(1+2h)`, so that only the
/// convergent range `s > 1` of the series is ever evaluated.
pub fn riemann_zeta_at_minus_2h(h: f64) -> Result<f64> {
    check_h(h)?;
    let z = hurwitz_zeta(1.0 + 2.0 * h, 1.0)?;
    Ok(-2.0 * (2.0 * PI).powf(-2.0 * h - 1.0) * (PI * h).sin() * gamma(1.0 + 2.0 * h) * z)
}

/// Normalizing constant `C(h) = -ζ(-2h) / (2 ζ(1+2h))` of the fGn density.
pub fn normalizing_c(h: f64) -> Result<f64> {
    check_h(h)?;
    let z = hurwitz_zeta(1.0 + 2.0 * h, 1.0)?;
    Ok(-riemann_zeta_at_minus_2h(h)? / (2.0 * z))
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("Hurst index must satisfy 0 < h < 1, got h = {h}")))
    }
}

/// Spectral density evaluator. Precomputes `C(h)` for fGn.
#[derive(Clone, Copy, Debug)]
pub struct SpectralDensity {
    spec: ModelSpec,
    fgn_c: f64,
}

impl SpectralDensity {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let fgn_c = match spec {
            ModelSpec::Fgn { h } => normalizing_c(h)?,
            _ => 0.0,
        };
        Ok(SpectralDensity { spec, fgn_c })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// `φ(θ)`, with `θ` read modulo 1. The fGn branch reduces `θ` to
    /// `(-1/2, 1/2]` and uses the symmetry `φ(θ) = φ(-θ)`, so arguments just
    /// below `0` keep their full precision.
    ///
    /// At `θ ∈ {0, 1}` the fGn density takes its one-sided limit: `0` for
    /// `h < 1/2`, `1` for `h = 1/2` and `+∞` for `h > 1/2` (it behaves like
    /// `θ^{1-2h}` there).
    pub fn eval(&self, theta: f64) -> f64 {
        let t = theta - theta.round();
        match self.spec {
            ModelSpec::Identity => 1.0,
            ModelSpec::Tridiagonal { q } => 1.0 + 2.0 * q * (2.0 * PI * t).cos(),
            ModelSpec::Kms { q } => {
                let e = Complex64::from_polar(1.0, -2.0 * PI * t);
                (1.0 - q.norm_sqr()) / (Complex64::new(1.0, 0.0) - q * e).norm_sqr()
            }
            ModelSpec::Fgn0 => 1.0 - (2.0 * PI * t).cos(),
            ModelSpec::Fgn { h } => {
                let t = t.abs();
                if t == 0.0 {
                    return if h < 0.5 {
                        0.0
                    } else if h == 0.5 {
                        1.0
                    } else {
                        f64::INFINITY
                    };
                }
                let s = 2.0 * h + 1.0;
                // Arguments are in (0, 1) here, so the zeta calls cannot fail.
                let z = hurwitz_zeta(s, t).unwrap_or(f64::NAN) + hurwitz_zeta(s, 1.0 - t).unwrap_or(f64::NAN);
                let sin = (PI * t).sin();
                4.0 * self.fgn_c * sin * sin * z
            }
        }
    }

    /// `∫₀¹ e^{2πikθ} φ(θ) dθ`, which should reproduce `γ(k)`.
    pub fn fourier_coefficient(&self, k: i64) -> Complex64 {
        let rule = self.rule_for(4096, GRADED_ORDER);
        let w = 2.0 * PI * k as f64;
        rule.integrate_complex(|t| Complex64::from_polar(self.eval(t), w * t))
    }

    fn rule_for(&self, uniform_nodes: usize, graded_order: usize) -> CompositeRule {
        match self.spec {
            ModelSpec::Fgn { .. } => CompositeRule::graded_period(graded_order),
            _ => {
                // Periodic trapezoid: spectrally accurate for smooth φ.
                let n = uniform_nodes.max(1);
                CompositeRule {
                    nodes: (0..n).map(|j| j as f64 / n as f64 - 0.5).collect(),
                    weights: vec![1.0 / n as f64; n],
                }
            }
        }
    }
}

/// `φ(θ)` for the family.
pub fn density(spec: &ModelSpec, theta: f64) -> Result<f64> {
    Ok(SpectralDensity::new(*spec)?.eval(theta))
}

/// `∫₀¹ e^{-2πikt} / φ(t) dt`, the limit of `(G⁻¹)_{m+k, m}` as `m → ∞`.
///
/// Smooth densities use the periodic trapezoid rule with `quadrature_nodes`
/// points. The fGn density has an algebraic endpoint singularity; there
/// `quadrature_nodes` is the Gauss order per cell of the geometrically graded
/// rule. The `h = 0` limit vanishes quadratically at `t = 0`, so `1/φ` is not
/// integrable and the call fails.
pub fn inv_density_fourier(spec: &ModelSpec, k: i64, quadrature_nodes: usize) -> Result<Complex64> {
    let d = SpectralDensity::new(*spec)?;
    if matches!(spec, ModelSpec::Fgn0) {
        return Err(Error::Unsupported("1/φ is not integrable for the h = 0 fGn limit".into()));
    }
    if quadrature_nodes == 0 {
        return Err(Error::domain("quadrature needs at least one node"));
    }
    let rule = d.rule_for(quadrature_nodes, quadrature_nodes);
    let w = -2.0 * PI * k as f64;
    Ok(rule.integrate_complex(|t| Complex64::from_polar(1.0 / d.eval(t), w * t)))
}
