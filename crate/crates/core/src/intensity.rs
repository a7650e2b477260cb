//! Joint intensities of GAF zeros from the kernel and its derivatives,
//! `p(z_1..z_n) = perm(C - B A⁻¹ B*) / (πⁿ det A)`, and the targets they are
//! compared with.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{bergman, KernelEval};
use crate::linalg::CMatrix;
use crate::model::{CovarianceMode, ModelSpec};
use crate::quadrature::CompositeRule;

/// Largest matrix accepted by `permanent`.
pub const MAX_PERMANENT: usize = 12;

/// Permanent by Ryser's formula with Gray-code updates, `O(2ⁿ n)`.
pub fn permanent(m: &CMatrix) -> Result<Complex64> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::domain("permanent needs a square matrix"));
    }
    if n > MAX_PERMANENT {
        return Err(Error::domain(format!("permanent limited to n ≤ {MAX_PERMANENT}, got {n}")));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1 << n) {
        let next = k ^ (k >> 1);
        let j = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << j) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += m[(i, j)];
            } else {
                *s -= m[(i, j)];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if (n - next.count_ones() as usize) % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// `A = (K(z_k, z_j))`, `B = (∂_z K(z_k, z_j))`, `C = (∂_z ∂_w̄ K(z_k, z_j))`.
#[derive(Clone, Debug)]
pub struct IntensityMatrices {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
}

pub fn build_intensity_matrices(k: &KernelEval, points: &[Complex64]) -> Result<IntensityMatrices> {
    if let Some(z) = points.iter().find(|z| !(z.norm() < 1.0)) {
        return Err(Error::domain(format!("point {z} is not inside the unit disc")));
    }
    let n = points.len();
    Ok(IntensityMatrices {
        a: CMatrix::from_fn(n, n, |i, j| k.eval(points[i], points[j])),
        b: CMatrix::from_fn(n, n, |i, j| k.dz(points[i], points[j])),
        c: CMatrix::from_fn(n, n, |i, j| k.dz_dwbar(points[i], points[j])),
    })
}

/// Relative size of `det A` (against the product of its diagonal) below
/// which the points are considered too close.
pub const DET_TOL: f64 = 1e-12;

impl IntensityMatrices {
    /// `C - B A⁻¹ B*`.
    pub fn schur(&self) -> Result<CMatrix> {
        let a_inv = self.a.hermitian_part().hpd_inverse()?;
        Ok(&self.c - &self.b.matmul(&a_inv).matmul(&self.b.adjoint()))
    }

    pub fn intensity(&self) -> Result<f64> {
        let n = self.a.rows();
        let det = self.a.hermitian_part().determinant().re;
        let diag: f64 = (0..n).map(|i| self.a[(i, i)].re).product();
        if !(det > DET_TOL * diag) {
            return Err(Error::IllConditioned(format!(
                "det A = {det:.3e} relative to its diagonal {diag:.3e}; separate the points"
            )));
        }
        let p = permanent(&self.schur()?)? / (PI.powi(n as i32) * det);
        if p.im.abs() > 1e-10 * p.re.abs().max(1.0) {
            return Err(Error::IllConditioned(format!("intensity has imaginary part {:.3e}", p.im)));
        }
        Ok(p.re)
    }
}

/// `perm(C - B A⁻¹ B*) / (πⁿ det A)`.
pub fn joint_intensity_numeric(k: &KernelEval, points: &[Complex64]) -> Result<f64> {
    if points.is_empty() || points.len() > MAX_PERMANENT {
        return Err(Error::domain(format!("need 1..={MAX_PERMANENT} points, got {}", points.len())));
    }
    build_intensity_matrices(k, points)?.intensity()
}

/// `(C - |B|²/A) / (π A)`, the `n = 1` case written out.
pub fn one_point_intensity(k: &KernelEval, z: Complex64) -> f64 {
    let a = k.eval(z, z).re;
    let b = k.dz(z, z);
    let c = k.dz_dwbar(z, z).re;
    (c - b.norm_sqr() / a) / (PI * a)
}

/// `det(1/(π(1 - z_k z̄_j)²))`.
pub fn bergman_determinant(points: &[Complex64]) -> f64 {
    let n = points.len();
    CMatrix::from_fn(n, n, |i, j| bergman(points[i], points[j])).determinant().re
}

/// Intensity of the zeros when the coefficients have the tridiagonal `G`
/// itself as covariance:
/// `(1/(π(1-|z|²)²)) (1 - q²(1-|z|²)² / (1 + q z + q z̄)²)`.
pub fn counterexample_intensity(q: f64, z: Complex64) -> Result<f64> {
    ModelSpec::Tridiagonal { q }.validate()?;
    if !(z.norm() < 1.0) {
        return Err(Error::domain(format!("point {z} is not inside the unit disc")));
    }
    let s = 1.0 - z.norm_sqr();
    let d = 1.0 + 2.0 * q * z.re;
    Ok((1.0 - q * q * s * s / (d * d)) / (PI * s * s))
}

/// Expected number of zeros in `|z| < r` under the Bergman law, `r²/(1-r²)`.
pub fn expected_count_disc(r: f64) -> f64 {
    r * r / (1.0 - r * r)
}

/// `∫∫_{lo ≤ |z| < hi} p(z) dA` by Gauss–Legendre in the radius and the
/// trapezoid rule in the angle.
pub fn integrate_over_annulus(lo: f64, hi: f64, mut p: impl FnMut(Complex64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    const ANGLES: usize = 128;
    let cells: Vec<f64> = (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect();
    let radial = CompositeRule::from_breakpoints(&cells, 20);
    radial.integrate(|s| {
        let ring: f64 = (0..ANGLES)
            .map(|j| p(Complex64::from_polar(s, 2.0 * PI * j as f64 / ANGLES as f64)))
            .sum::<f64>();
        ring * 2.0 * PI / ANGLES as f64 * s
    })
}

/// Expected zero count in `lo ≤ |z| < hi` for a coefficient model: the
/// Bergman value for the inverse mode (and for i.i.d. coefficients), the
/// integrated one-point intensity otherwise. `n_series` is the truncation used
/// when the direct-mode kernel has no closed form.
pub fn expected_count_annulus(spec: &ModelSpec, mode: CovarianceMode, lo: f64, hi: f64, n_series: usize) -> Result<f64> {
    spec.validate()?;
    if !(0.0 <= lo && lo <= hi && hi < 1.0) {
        return Err(Error::domain(format!("annulus [{lo}, {hi}) must lie in [0, 1)")));
    }
    match (spec, mode) {
        (_, CovarianceMode::Inverse) | (ModelSpec::Identity, _) => Ok(expected_count_disc(hi) - expected_count_disc(lo)),
        (ModelSpec::Tridiagonal { q }, CovarianceMode::Direct) => {
            let q = *q;
            Ok(integrate_over_annulus(lo, hi, |z| counterexample_intensity(q, z).unwrap_or(f64::NAN)))
        }
        (_, CovarianceMode::Direct) => {
            let k = KernelEval::new(*spec, mode, n_series)?;
            Ok(integrate_over_annulus(lo, hi, |z| one_point_intensity(&k, z)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn brute_permanent(m: &CMatrix) -> Complex64 {
        fn rec(m: &CMatrix, row: usize, used: &mut Vec<bool>) -> Complex64 {
            if row == m.rows() {
                return c(1.0, 0.0);
            }
            let mut s = c(0.0, 0.0);
            for j in 0..m.cols() {
                if !used[j] {
                    used[j] = true;
                    s += m[(row, j)] * rec(m, row + 1, used);
                    used[j] = false;
                }
            }
            s
        }
        rec(m, 0, &mut vec![false; m.cols()])
    }

    #[test]
    fn permanent_examples() {
        assert_eq!(permanent(&CMatrix::identity(3)).unwrap(), c(1.0, 0.0));
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(permanent(&m).unwrap(), c(10.0, 0.0));
        let ones = CMatrix::from_fn(3, 3, |_, _| c(1.0, 0.0));
        assert_eq!(permanent(&ones).unwrap(), c(6.0, 0.0));
        assert!(permanent(&CMatrix::identity(13)).is_err());
    }

    #[test]
    fn permanent_matches_brute_force() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in 1..=6 {
            let m = CMatrix::from_fn(n, n, |_, _| c(next(), next()));
            let d = (permanent(&m).unwrap() - brute_permanent(&m)).norm();
            assert!(d < 1e-12, "n={n}: {d}");
        }
    }

    #[test]
    fn identity_matrices_at_origin() {
        let k = KernelEval::closed_form(ModelSpec::Identity, CovarianceMode::Inverse).unwrap();
        let m = build_intensity_matrices(&k, &[c(0.0, 0.0)]).unwrap();
        assert_eq!((m.a[(0, 0)], m.b[(0, 0)], m.c[(0, 0)]), (c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)));
        assert!((joint_intensity_numeric(&k, &[c(0.0, 0.0)]).unwrap() - 1.0 / PI).abs() < 1e-15);
        for z in [c(0.3, 0.2), c(-0.6, 0.1), c(0.0, 0.85)] {
            let p = joint_intensity_numeric(&k, &[z]).unwrap();
            assert!((p - bergman(z, z).re).abs() < 1e-12 * p);
        }
    }

    #[test]
    fn matrices_are_hermitian_where_expected() {
        let k = KernelEval::closed_form(ModelSpec::Kms { q: c(0.3, 0.4) }, CovarianceMode::Inverse).unwrap();
        let pts = [c(0.1, 0.2), c(-0.4, 0.3), c(0.5, -0.5)];
        let m = build_intensity_matrices(&k, &pts).unwrap();
        assert!(m.a.hermitian_defect() < 1e-14);
        assert!(m.c.hermitian_defect() < 1e-13);
        let s = m.schur().unwrap();
        assert!(s.hermitian_defect() < 1e-12);
        assert!(s.is_psd(1e-9));
        // B is not hermitian, but B_{kj} = conj ∂_w̄ K(z_j, z_k).
        let h = 1e-6;
        let fd = (k.eval(pts[0] + h, pts[1]) - k.eval(pts[0] - h, pts[1])) / (2.0 * h);
        assert!((fd - m.b[(0, 1)]).norm() < 1e-8);
    }

    #[test]
    fn two_points_match_bergman_for_tridiagonal() {
        let k = KernelEval::closed_form(ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Inverse).unwrap();
        let pts = [c(0.2, 0.0), c(0.0, -0.3)];
        let p = joint_intensity_numeric(&k, &pts).unwrap();
        let b = bergman_determinant(&pts);
        assert!((p - b).abs() < 1e-6 * b);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let k = KernelEval::closed_form(ModelSpec::Identity, CovarianceMode::Inverse).unwrap();
        let r = joint_intensity_numeric(&k, &[c(0.1, 0.1), c(0.1, 0.1)]);
        assert!(matches!(r, Err(Error::IllConditioned(_)) | Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn bergman_determinant_values() {
        assert!((bergman_determinant(&[c(0.0, 0.0)]) - 1.0 / PI).abs() < 1e-15);
        assert!(bergman_determinant(&[c(0.0, 0.0), c(0.0, 0.0)]).abs() < 1e-15);
        // (1/π²)(1 · 1/(1-0.25)² - 1 · 1) = (1/π²)(16/9 - 1)
        let v = bergman_determinant(&[c(0.0, 0.0), c(0.5, 0.0)]);
        assert!((v - (16.0 / 9.0 - 1.0) / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn counterexample_values() {
        let q = -1.0 / 3.0;
        let p0 = counterexample_intensity(q, c(0.0, 0.0)).unwrap();
        assert!((p0 - 8.0 / (9.0 * PI)).abs() < 1e-15);
        assert!((p0 - 0.282942).abs() < 1e-6);
        let z = c(0.3, -0.4);
        assert!((counterexample_intensity(1e-9, z).unwrap() - bergman(z, z).re).abs() < 1e-12);
        let k = KernelEval::closed_form(ModelSpec::Tridiagonal { q }, CovarianceMode::Direct).unwrap();
        for z in [c(0.0, 0.0), c(0.4, 0.1), c(-0.5, 0.5)] {
            let numeric = joint_intensity_numeric(&k, &[z]).unwrap();
            assert!((numeric - counterexample_intensity(q, z).unwrap()).abs() < 1e-8);
            assert!((numeric - one_point_intensity(&k, z)).abs() < 1e-12 * numeric);
        }
        assert!(counterexample_intensity(0.5, z).is_err());
    }

    #[test]
    fn disc_counts() {
        assert!((expected_count_disc(0.6) - 0.5625).abs() < 1e-15);
        assert_eq!(expected_count_disc(0.0), 0.0);
        assert!((expected_count_disc(0.8) - 16.0 / 9.0).abs() < 1e-14);
        // Oracle: quadrature of the Bergman one-point intensity.
        for r in [0.3, 0.6, 0.8] {
            let q = integrate_over_annulus(0.0, r, |z| bergman(z, z).re);
            assert!((q - expected_count_disc(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_targets_sit_below_bergman() {
        let spec = ModelSpec::Tridiagonal { q: -1.0 / 3.0 };
        let t = expected_count_annulus(&spec, CovarianceMode::Direct, 0.0, 0.6, 0).unwrap();
        assert!(t < 0.5625 && t > 0.4, "{t}");
        // Same target through the generic kernel path.
        let k = KernelEval::closed_form(spec, CovarianceMode::Direct).unwrap();
        let g = integrate_over_annulus(0.0, 0.6, |z| one_point_intensity(&k, z));
        assert!((g - t).abs() < 1e-10);
        let inv = expected_count_annulus(&spec, CovarianceMode::Inverse, 0.0, 0.6, 0).unwrap();
        assert!((inv - 0.5625).abs() < 1e-15);
        for r in [0.2, 0.4, 0.6, 0.8] {
            let d = expected_count_annulus(&spec, CovarianceMode::Direct, 0.0, r, 0).unwrap();
            assert!(d < expected_count_disc(r));
        }
    }
}
