//! Complex Gaussian coefficient vectors with covariance `G_n⁻¹` or `G_n`,
//! per-replicate random streams, and the Schur-complement conditioning of
//! the inverse covariance.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{solve_lower_adjoint, CMatrix};
use crate::model::{CovarianceMode, ModelSpec};
use crate::output::fmt_f64;
use crate::toeplitz::{build_finite, cholesky, LowerFactor};

/// Random stream of replicate `replicate` under master seed `seed`. Streams
/// are independent of each other and of the order in which they are used.
pub fn stream_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// `n` i.i.d. standard complex Gaussians: real and imaginary parts are
/// independent `N(0, 1/2)`, so `E|ξ|² = 1` and `E ξ² = 0`. Box–Muller, two
/// uniforms per entry.
pub fn sample_std_complex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let u1 = 1.0 - rng.random::<f64>();
            let u2 = rng.random::<f64>();
            Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * std::f64::consts::PI * u2)
        })
        .collect()
}

/// One coefficient vector `(ξ_1, …, ξ_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientDraw {
    pub spec: ModelSpec,
    pub mode: CovarianceMode,
    pub n: usize,
    pub values: Vec<Complex64>,
    pub replicate_id: u64,
    pub seed: u64,
}

/// Cholesky factor of `G_n`, reused across draws.
#[derive(Clone, Debug)]
pub struct CoefficientSampler {
    spec: ModelSpec,
    mode: CovarianceMode,
    factor: LowerFactor,
}

impl CoefficientSampler {
    pub fn new(spec: ModelSpec, mode: CovarianceMode, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("need at least one coefficient"));
        }
        let factor = cholesky(&build_finite(&spec, n)?)?;
        Ok(CoefficientSampler { spec, mode, factor })
    }

    pub fn n(&self) -> usize {
        self.factor.n()
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }

    /// Maps a standard vector `χ` to `L^{-*} χ` (inverse mode) or `L χ`
    /// (direct mode). In both cases the first `m` coefficients are built
    /// from the first `m` entries of `χ` in the sense that truncating `χ`
    /// truncates `f`: `f = Σ χ_k conj(P_k)` resp. `ξ_m = (L χ)_m`.
    pub fn transform(&self, chi: &[Complex64]) -> Vec<Complex64> {
        let l = self.factor.matrix();
        match self.mode {
            CovarianceMode::Inverse => solve_lower_adjoint(l, chi),
            CovarianceMode::Direct => l.matvec(chi),
        }
    }

    pub fn draw_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        self.transform(&sample_std_complex(rng, self.n()))
    }

    /// Draw for `(seed, replicate)`; a pure function of those and the sampler.
    pub fn draw(&self, seed: u64, replicate: u64) -> CoefficientDraw {
        let mut rng = stream_rng(seed, replicate);
        CoefficientDraw {
            spec: self.spec,
            mode: self.mode,
            n: self.n(),
            values: self.draw_with(&mut rng),
            replicate_id: replicate,
            seed,
        }
    }
}

/// Coefficients with covariance `G_n⁻¹`: `ξ = L^{-*} χ` with `G_n = L L*`.
pub fn sample_inverse_cov<R: Rng + ?Sized>(spec: &ModelSpec, n: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    Ok(CoefficientSampler::new(*spec, CovarianceMode::Inverse, n)?.draw_with(rng))
}

/// Coefficients with covariance `G_n`: `ξ = L χ`.
pub fn sample_direct_cov<R: Rng + ?Sized>(spec: &ModelSpec, n: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    Ok(CoefficientSampler::new(*spec, CovarianceMode::Direct, n)?.draw_with(rng))
}

/// Covariance of `(ξ_{k+1}, …, ξ_n)` given `ξ_1 = … = ξ_k = 0` when
/// `Cov ξ = G_n⁻¹`: the Schur complement `Σ₂₂ - Σ₂₁ Σ₁₁⁻¹ Σ₁₂` of `Σ = G_n⁻¹`.
pub fn schur_conditional_cov(spec: &ModelSpec, n: usize, k: usize) -> Result<CMatrix> {
    if k == 0 || k >= n {
        return Err(Error::domain(format!("conditioning needs 1 ≤ k < n, got k = {k}, n = {n}")));
    }
    let sigma = crate::toeplitz::invert_dense(&build_finite(spec, n)?)?;
    let s11 = sigma.principal_block(0, k);
    let s12 = sigma.block(0, k, k, n - k);
    let s21 = sigma.block(k, 0, n - k, k);
    let s22 = sigma.principal_block(k, n - k);
    let s11_inv = s11.hermitian_part().hpd_inverse()?;
    Ok(&s22 - &s21.matmul(&s11_inv).matmul(&s12))
}

/// Sample covariance `E ξ ξ*` and pseudo-covariance `E ξ ξ^T` of zero-mean draws.
pub fn empirical_covariance(draws: &[Vec<Complex64>]) -> (CMatrix, CMatrix) {
    let n = draws.first().map_or(0, |d| d.len());
    let mut cov = CMatrix::zeros(n, n);
    let mut pseudo = CMatrix::zeros(n, n);
    for d in draws {
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] += d[i] * d[j].conj();
                pseudo[(i, j)] += d[i] * d[j];
            }
        }
    }
    let m = Complex64::new(draws.len().max(1) as f64, 0.0);
    (cov.scale(m.inv()), pseudo.scale(m.inv()))
}

/// CSV with columns `replicate,index,re,im` (index from 1).
pub fn draws_to_csv(draws: &[CoefficientDraw], header: &str) -> String {
    let mut s = String::new();
    if !header.is_empty() {
        s.push_str(header);
        s.push('\n');
    }
    s.push_str("replicate,index,re,im\n");
    for d in draws {
        for (i, v) in d.values.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", d.replicate_id, i + 1, fmt_f64(v.re), fmt_f64(v.im));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toeplitz::invert_finite;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn draws(spec: ModelSpec, mode: CovarianceMode, n: usize, m: usize, seed: u64) -> Vec<Vec<Complex64>> {
        let s = CoefficientSampler::new(spec, mode, n).unwrap();
        (0..m as u64).map(|r| s.draw(seed, r).values).collect()
    }

    #[test]
    fn standard_complex_moments() {
        let m = 100_000;
        let mut rng = stream_rng(11, 0);
        let x = sample_std_complex(&mut rng, m);
        let mean: Complex64 = x.iter().sum::<Complex64>() / m as f64;
        let second: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / m as f64;
        let pseudo: Complex64 = x.iter().map(|v| v * v).sum::<Complex64>() / m as f64;
        let tol = 3.0 / (m as f64).sqrt();
        assert!(mean.norm() < 4.0 * 10f64.powf(-2.5));
        assert!((second - 1.0).abs() < tol);
        assert!(pseudo.norm() < tol);
        let re_var: f64 = x.iter().map(|v| v.re * v.re).sum::<f64>() / m as f64;
        assert!((re_var - 0.5).abs() < tol);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_std_complex(&mut stream_rng(5, 3), 8);
        let b = sample_std_complex(&mut stream_rng(5, 3), 8);
        let other = sample_std_complex(&mut stream_rng(5, 4), 8);
        assert_eq!(a, b);
        assert_ne!(a, other);
        // A longer draw extends a shorter one.
        let long = sample_std_complex(&mut stream_rng(5, 3), 16);
        assert_eq!(&long[..8], &a[..]);
    }

    #[test]
    fn identity_draw_is_standard() {
        let s = CoefficientSampler::new(ModelSpec::Identity, CovarianceMode::Inverse, 5).unwrap();
        let d = s.draw(1, 2);
        assert_eq!(d.values, sample_std_complex(&mut stream_rng(1, 2), 5));
        let s = CoefficientSampler::new(ModelSpec::Identity, CovarianceMode::Direct, 5).unwrap();
        assert_eq!(s.draw(1, 2).values, d.values);
    }

    fn check_cov(spec: ModelSpec, mode: CovarianceMode, target: CMatrix, m: usize, k: f64) {
        let (cov, pseudo) = empirical_covariance(&draws(spec, mode, target.rows(), m, 42));
        let tol = k / (m as f64).sqrt();
        assert!(cov.max_abs_diff(&target) < tol, "{spec} {mode}: {:?}", cov);
        assert!(pseudo.max_abs() < tol);
    }

    #[test]
    fn inverse_covariance_2x2() {
        let m = 100_000;
        let t = CMatrix::from_real_rows(&[&[1.0, 1.0 / 3.0], &[1.0 / 3.0, 1.0]]).scale(c(9.0 / 8.0, 0.0));
        check_cov(ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Inverse, t, m, 5.0);
        let t = CMatrix::from_real_rows(&[&[1.0, -0.5], &[-0.5, 1.0]]).scale(c(4.0 / 3.0, 0.0));
        check_cov(ModelSpec::Kms { q: c(0.5, 0.0) }, CovarianceMode::Inverse, t, m, 5.0);
    }

    #[test]
    fn direct_covariance_2x2() {
        let t = CMatrix::from_real_rows(&[&[1.0, -1.0 / 3.0], &[-1.0 / 3.0, 1.0]]);
        check_cov(ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Direct, t, 100_000, 5.0);
    }

    #[test]
    fn covariance_error_shrinks_at_monte_carlo_rate() {
        let spec = ModelSpec::Kms { q: c(0.3, 0.4) };
        let target = invert_finite(&build_finite(&spec, 3).unwrap()).unwrap();
        let err = |m: usize| {
            // Average over independent seeds to tame the fluctuation of a single run.
            (0..8u64)
                .map(|s| empirical_covariance(&draws(spec, CovarianceMode::Inverse, 3, m, 100 + s)).0.max_abs_diff(&target))
                .sum::<f64>()
                / 8.0
        };
        let (e4, e5) = (err(10_000), err(100_000));
        assert!(e5 / e4 < 0.5, "{e4} {e5}");
    }

    #[test]
    fn inverse_mode_truncations_are_nested() {
        // ξ^{(40)} - ξ^{(20)} = Σ_{20<k≤40} χ_k conj(coefficients of P_k).
        let spec = ModelSpec::Tridiagonal { q: -1.0 / 3.0 };
        let a = CoefficientSampler::new(spec, CovarianceMode::Inverse, 20).unwrap().draw(3, 1).values;
        let b = CoefficientSampler::new(spec, CovarianceMode::Inverse, 40).unwrap().draw(3, 1).values;
        let chi = sample_std_complex(&mut stream_rng(3, 1), 40);
        let basis = crate::orthopoly::gram_basis(&spec, 40).unwrap();
        for i in 0..40 {
            let mut expected = if i < 20 { a[i] } else { c(0.0, 0.0) };
            for k in 20..40 {
                expected += chi[k] * basis.coeffs[(k, i)].conj();
            }
            assert!((b[i] - expected).norm() < 1e-12);
        }
        let d = CoefficientSampler::new(spec, CovarianceMode::Direct, 20).unwrap().draw(3, 1).values;
        let e = CoefficientSampler::new(spec, CovarianceMode::Direct, 40).unwrap().draw(3, 1).values;
        assert_eq!(&d[..], &e[..20]);
    }

    #[test]
    fn schur_complement_is_shorter_inverse() {
        let s = schur_conditional_cov(&ModelSpec::Identity, 5, 2).unwrap();
        assert!(s.max_abs_diff(&CMatrix::identity(3)) < 1e-14);
        let q = ModelSpec::Tridiagonal { q: -1.0 / 3.0 };
        let s = schur_conditional_cov(&q, 6, 2).unwrap();
        assert!(s.max_abs_diff(&invert_finite(&build_finite(&q, 4).unwrap()).unwrap()) < 1e-10);
        let k = ModelSpec::Kms { q: c(0.5, 0.0) };
        let s = schur_conditional_cov(&k, 8, 3).unwrap();
        assert!(s.max_abs_diff(&invert_finite(&build_finite(&k, 5).unwrap()).unwrap()) < 1e-10);
        assert!(schur_conditional_cov(&k, 4, 4).is_err());
        assert!(schur_conditional_cov(&k, 4, 0).is_err());
    }

    #[test]
    fn draws_csv_layout() {
        let s = CoefficientSampler::new(ModelSpec::Identity, CovarianceMode::Inverse, 3).unwrap();
        let csv = draws_to_csv(&[s.draw(1, 0), s.draw(1, 1)], "# h");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2 + 6);
        assert!(lines[2].starts_with("0,1,"));
        assert!(lines[7].starts_with("1,3,"));
    }
}
