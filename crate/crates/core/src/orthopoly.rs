//! Polynomials orthonormal for `⟨z^a, z^b⟩ = γ(a - b)`, obtained by
//! inverting the Cholesky factor of `G_m`, and the explicit `h = 0` family.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{lower_triangular_inverse, CMatrix};
use crate::model::ModelSpec;
use crate::output::fmt_f64;
use crate::toeplitz::{build_finite, cholesky};

/// Largest basis size accepted by `gram_basis`.
pub const MAX_DEGREE: usize = 512;
/// Ratio of extreme diagonal entries of `L` above which a warning is raised.
pub const SPREAD_WARNING: f64 = 1e8;

/// `P_1, …, P_m`; row `k-1` of `coeffs` holds the monomial coefficients of `P_k`.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    pub spec: ModelSpec,
    pub m: usize,
    pub coeffs: CMatrix,
    diagonal_spread: f64,
}

pub fn gram_basis(spec: &ModelSpec, m: usize) -> Result<OrthoBasis> {
    if m == 0 || m > MAX_DEGREE {
        return Err(Error::domain(format!("basis size must be in 1..={MAX_DEGREE}, got {m}")));
    }
    let l = cholesky(&build_finite(spec, m)?)?;
    let coeffs = lower_triangular_inverse(l.matrix());
    Ok(OrthoBasis { spec: *spec, m, coeffs, diagonal_spread: l.diagonal_spread() })
}

impl OrthoBasis {
    /// `max L_kk / min L_kk` of the Cholesky factor.
    pub fn diagonal_spread(&self) -> f64 {
        self.diagonal_spread
    }

    pub fn conditioning_warning(&self) -> Option<String> {
        (self.diagonal_spread > SPREAD_WARNING).then(|| {
            format!(
                "Cholesky diagonal of G_{} for {} spans a factor {:.3e}; basis coefficients may be inaccurate",
                self.m, self.spec, self.diagonal_spread
            )
        })
    }

    /// `P_k(z)` for `1 ≤ k ≤ m`.
    pub fn eval_p(&self, k: usize, z: Complex64) -> Result<Complex64> {
        if k == 0 || k > self.m {
            return Err(Error::domain(format!("P_k needs 1 ≤ k ≤ {}, got {k}", self.m)));
        }
        let row = &self.coeffs.row(k - 1)[..k];
        Ok(row.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c))
    }

    /// `Σ_{k≤m} P_k(z) conj P_k(w)`.
    pub fn kernel_partial_sum(&self, m: usize, z: Complex64, w: Complex64) -> Result<Complex64> {
        if m > self.m {
            return Err(Error::domain(format!("basis holds {} polynomials, asked for {m}", self.m)));
        }
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=m {
            s += self.eval_p(k, z)? * self.eval_p(k, w)?.conj();
        }
        Ok(s)
    }

    /// CSV with one row per polynomial: `k,j,re,im` for each coefficient of `z^j`.
    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::new();
        if !header.is_empty() {
            s.push_str(header);
            s.push('\n');
        }
        s.push_str("k,power,re,im\n");
        for k in 0..self.m {
            for (j, c) in self.coeffs.row(k)[..=k].iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", k + 1, j, fmt_f64(c.re), fmt_f64(c.im));
            }
        }
        s
    }
}

pub fn eval_p(basis: &OrthoBasis, k: usize, z: Complex64) -> Result<Complex64> {
    basis.eval_p(k, z)
}

pub fn kernel_partial_sum(basis: &OrthoBasis, m: usize, z: Complex64, w: Complex64) -> Result<Complex64> {
    basis.kernel_partial_sum(m, z, w)
}

/// `P_n(z) = (2/(n(n+1)))^{1/2} (1 + 2z + … + n z^{n-1})`.
pub fn fgn0_p(n: usize, z: Complex64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::domain("P_n is indexed from n = 1"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        acc = acc * z + k as f64;
    }
    Ok(acc * (2.0 / (n as f64 * (n as f64 + 1.0))).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kg_closed_kms, kg_closed_tridiag, kg_fgn0};
    use crate::quadrature::CompositeRule;
    use crate::spectral::SpectralDensity;
    use crate::toeplitz::gamma_of;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Modified Gram–Schmidt on `1, z, z², …` under `⟨z^a, z^b⟩ = γ(a-b)`.
    fn mgs_oracle(spec: &ModelSpec, m: usize) -> Vec<Vec<Complex64>> {
        let g = |a: usize, b: usize| gamma_of(spec, a as i64 - b as i64).unwrap();
        let inner = |p: &[Complex64], q: &[Complex64]| {
            let mut s = c(0.0, 0.0);
            for (a, pa) in p.iter().enumerate() {
                for (b, qb) in q.iter().enumerate() {
                    s += pa * qb.conj() * g(a, b);
                }
            }
            s
        };
        let mut basis: Vec<Vec<Complex64>> = Vec::new();
        for k in 0..m {
            let mut v = vec![c(0.0, 0.0); m];
            v[k] = c(1.0, 0.0);
            for p in &basis {
                let proj = inner(&v, p);
                for (vi, pi) in v.iter_mut().zip(p) {
                    *vi -= proj * pi;
                }
            }
            let norm = inner(&v, &v).re.sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        basis
    }

    #[test]
    fn identity_gives_monomials() {
        let b = gram_basis(&ModelSpec::Identity, 6).unwrap();
        assert!((b.eval_p(3, c(0.5, 0.0)).unwrap() - 0.25).norm() < 1e-15);
        for k in 1..=6 {
            let z = c(0.3, -0.7);
            assert!((b.eval_p(k, z).unwrap() - z.powi(k as i32 - 1)).norm() < 1e-15);
        }
    }

    #[test]
    fn tridiagonal_second_polynomial() {
        let q = -1.0 / 3.0;
        let b = gram_basis(&ModelSpec::Tridiagonal { q }, 5).unwrap();
        let z = c(0.2, 0.4);
        let expected = (z - q) / (1.0 - q * q).sqrt();
        assert!((b.eval_p(2, z).unwrap() - expected).norm() < 1e-14);
        assert!((b.eval_p(2, c(0.0, 0.0)).unwrap().re - 0.353553).abs() < 1e-6);
        assert!((b.eval_p(1, z).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn first_polynomial_is_one_for_every_family() {
        for spec in [ModelSpec::Fgn { h: 0.3 }, ModelSpec::Kms { q: c(0.2, 0.5) }, ModelSpec::Fgn0] {
            let b = gram_basis(&spec, 4).unwrap();
            assert!((b.eval_p(1, c(0.4, 0.1)).unwrap() - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_gram_schmidt_oracle() {
        for spec in [ModelSpec::Tridiagonal { q: 0.3 }, ModelSpec::Kms { q: c(0.3, 0.4) }, ModelSpec::Fgn { h: 0.7 }] {
            let b = gram_basis(&spec, 10).unwrap();
            let oracle = mgs_oracle(&spec, 10);
            for k in 0..10 {
                for j in 0..10 {
                    assert!((b.coeffs[(k, j)] - oracle[k][j]).norm() < 1e-10, "{spec} ({k},{j})");
                }
            }
        }
    }

    #[test]
    fn fgn0_basis_matches_explicit_polynomials() {
        let b = gram_basis(&ModelSpec::Fgn0, 10).unwrap();
        for k in 1..=10 {
            for z in [c(0.0, 0.0), c(0.5, 0.0), c(-0.3, 0.6)] {
                assert!((b.eval_p(k, z).unwrap() - fgn0_p(k, z).unwrap()).norm() < 1e-10);
            }
        }
        assert_eq!(fgn0_p(1, c(0.7, 0.2)).unwrap(), c(1.0, 0.0));
        assert!((fgn0_p(2, c(0.0, 0.0)).unwrap().re - 0.577350).abs() < 1e-6);
    }

    #[test]
    fn fgn0_origin_partial_sums_telescope() {
        // Σ_{n≤m} 2/(n(n+1)) = 2 - 2/(m+1).
        for m in [1usize, 10, 200] {
            let s: f64 = (1..=m).map(|n| fgn0_p(n, c(0.0, 0.0)).unwrap().norm_sqr()).sum();
            assert!((s - (2.0 - 2.0 / (m as f64 + 1.0))).abs() < 1e-13);
        }
        assert_eq!(kg_fgn0(c(0.0, 0.0), c(0.0, 0.0)), c(2.0, 0.0));
    }

    #[test]
    fn fgn0_partial_sum_gap_is_the_exact_tail() {
        // K₀ - K_m = Σ_{n>m} |P_n(z)|², which decays only like 1/m.
        let b = gram_basis(&ModelSpec::Fgn0, 200).unwrap();
        let z = c(0.5, 0.0);
        // Σ_{k≤n} k z^{k-1} = (1 - (n+1) zⁿ + n z^{n+1}) / (1 - z)²
        let p2 = |n: usize| {
            let nf = n as f64;
            let s = (1.0 - (nf + 1.0) * z.powi(n as i32) + nf * z.powi(n as i32 + 1)) / ((1.0 - z) * (1.0 - z));
            2.0 / (nf * (nf + 1.0)) * s.norm_sqr()
        };
        assert!((p2(7) - fgn0_p(7, z).unwrap().norm_sqr()).abs() < 1e-14);
        let tail: f64 = (201..200_000).map(p2).sum::<f64>() + 32.0 / 200_000.0;
        let gap = kg_fgn0(z, z).re - b.kernel_partial_sum(200, z, z).unwrap().re;
        assert!((gap - tail).abs() < 1e-6, "{gap} {tail}");
    }

    #[test]
    fn orthonormal_under_gram_matrix() {
        for spec in [ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, ModelSpec::Kms { q: c(0.5, 0.0) }, ModelSpec::Fgn { h: 0.75 }] {
            let b = gram_basis(&spec, 200).unwrap();
            let g = build_finite(&spec, 200).unwrap().to_dense();
            let id = b.coeffs.matmul(&g).matmul(&b.coeffs.adjoint());
            assert!(id.max_abs_diff(&CMatrix::identity(200)) < 1e-8, "{spec}");
        }
    }

    #[test]
    fn orthonormal_under_spectral_measure() {
        for spec in [ModelSpec::Tridiagonal { q: 0.3 }, ModelSpec::Kms { q: c(0.4, -0.3) }, ModelSpec::Fgn { h: 0.75 }] {
            let d = SpectralDensity::new(spec).unwrap();
            let b = gram_basis(&spec, 6).unwrap();
            let rule = CompositeRule::graded_period(24);
            for k in 1..=6 {
                for j in 1..=6 {
                    let ip = rule.integrate_complex(|t| {
                        let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t);
                        b.eval_p(k, e).unwrap() * b.eval_p(j, e).unwrap().conj() * d.eval(t)
                    });
                    let target = if k == j { 1.0 } else { 0.0 };
                    assert!((ip - target).norm() < 1e-6, "{spec} {k} {j}: {ip}");
                }
            }
        }
    }

    #[test]
    fn partial_sums_converge_to_closed_forms() {
        let q = -1.0 / 3.0;
        let b = gram_basis(&ModelSpec::Tridiagonal { q }, 200).unwrap();
        let z = c(0.3, 0.0);
        let d = (b.kernel_partial_sum(200, z, z).unwrap() - kg_closed_tridiag(q, z, z).unwrap()).norm();
        assert!(d < 1e-6);
        let kq = c(0.5, 0.0);
        let b = gram_basis(&ModelSpec::Kms { q: kq }, 200).unwrap();
        let (z, w) = (c(0.7, 0.0), c(-0.2, 0.6));
        let d = (b.kernel_partial_sum(200, z, w).unwrap() - kg_closed_kms(kq, z, w).unwrap()).norm();
        assert!(d < 1e-6);
    }

    #[test]
    fn complex_kms_partial_sums_give_conjugate_parameter_kernel() {
        // Σ P_k(z) conj P_k(w) = Z^T (G⁻¹)^T W̄, which for complex q is the
        // kernel of the family with parameter conj(q).
        let q = c(0.3, 0.4);
        let b = gram_basis(&ModelSpec::Kms { q }, 200).unwrap();
        let (z, w) = (c(0.5, 0.1), c(-0.2, 0.4));
        let s = b.kernel_partial_sum(200, z, w).unwrap();
        assert!((s - kg_closed_kms(q.conj(), z, w).unwrap()).norm() < 1e-10);
        assert!((s - kg_closed_kms(q, z, w).unwrap()).norm() > 1e-2);
    }

    #[test]
    fn partial_sums_increase() {
        let b = gram_basis(&ModelSpec::Tridiagonal { q: 0.3 }, 60).unwrap();
        let z = c(0.6, 0.2);
        let mut prev = 0.0;
        for m in 1..=60 {
            let s = b.kernel_partial_sum(m, z, z).unwrap().re;
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn rejects_oversized_basis() {
        assert!(gram_basis(&ModelSpec::Identity, MAX_DEGREE + 1).is_err());
        assert!(gram_basis(&ModelSpec::Identity, 0).is_err());
        let b = gram_basis(&ModelSpec::Identity, 3).unwrap();
        assert!(b.eval_p(4, c(0.0, 0.0)).is_err());
        assert!(b.conditioning_warning().is_none());
    }

    #[test]
    fn csv_lists_lower_triangle() {
        let b = gram_basis(&ModelSpec::Tridiagonal { q: 0.2 }, 4).unwrap();
        let csv = b.to_csv("");
        assert_eq!(csv.lines().count(), 1 + 10);
    }
}
