//! Covariance kernels `K(z, w) = E f(z) conj f(w)` of the truncated and
//! limiting GAFs, the Szegő and Bergman kernels, Möbius maps and the
//! one-point conditioning of a kernel.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaf::truncation_order_for_bound;
use crate::linalg::CMatrix;
use crate::model::{CovarianceMode, ModelSpec};
use crate::toeplitz::{build_finite, invert_finite};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A point of the open unit disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscPoint(Complex64);

impl DiscPoint {
    pub fn new(value: Complex64) -> Result<Self> {
        if value.is_finite() && value.norm() < 1.0 {
            Ok(DiscPoint(value))
        } else {
            Err(Error::domain(format!("point {value} is not inside the unit disc")))
        }
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

/// `1 / (1 - z w̄)`.
pub fn szego(z: Complex64, w: Complex64) -> Complex64 {
    ONE / (ONE - z * w.conj())
}

/// `1 / (π (1 - z w̄)²)`.
pub fn bergman(z: Complex64, w: Complex64) -> Complex64 {
    let d = ONE - z * w.conj();
    ONE / (std::f64::consts::PI * d * d)
}

/// Disc automorphism `T_w(z) = (z - w) / (1 - z w̄)`.
pub fn mobius(w: Complex64, z: Complex64) -> Complex64 {
    (z - w) / (ONE - z * w.conj())
}

/// `T_z'(z) = 1 / (1 - |z|²)`.
pub fn mobius_derivative_at_fixed_point(z: Complex64) -> f64 {
    1.0 / (1.0 - z.norm_sqr())
}

/// `∏ T_{w_i}(z)`.
pub fn mobius_product(ws: &[Complex64], z: Complex64) -> Complex64 {
    ws.iter().map(|&w| mobius(w, z)).product()
}

/// Constants `(a, b)` with `ψ(z) = (2/|q|)^{1/2} / (a + b z)`.
fn tridiag_ab(q: f64) -> Result<(f64, f64)> {
    if !(q.abs() < 0.5) || q == 0.0 {
        return Err(Error::domain(format!("ψ for the tridiagonal family needs 0 < |q| < 1/2, got q = {q}")));
    }
    let a = (1.0 / q.abs() + (1.0 / (q * q) - 4.0).sqrt()).sqrt();
    Ok((a, 2.0 / a * q.signum()))
}

/// Outer factor of the tridiagonal kernel, `(2/|q|)^{1/2} / (a + b z)`.
pub fn psi_tridiag(q: f64, z: Complex64) -> Result<Complex64> {
    let (a, b) = tridiag_ab(q)?;
    Ok((2.0 / q.abs()).sqrt() / (a + b * z))
}

/// `ψ(z) conj ψ(w) / (1 - z w̄)` for the tridiagonal family.
pub fn kg_closed_tridiag(q: f64, z: Complex64, w: Complex64) -> Result<Complex64> {
    Ok(psi_tridiag(q, z)? * psi_tridiag(q, w)?.conj() * szego(z, w))
}

/// `(1 - q z) / √(1 - |q|²)`.
pub fn psi_kms(q: Complex64, z: Complex64) -> Result<Complex64> {
    if !(q.norm() < 1.0) {
        return Err(Error::domain(format!("ψ for the KMS family needs |q| < 1, got |q| = {}", q.norm())));
    }
    Ok((ONE - q * z) / (1.0 - q.norm_sqr()).sqrt())
}

pub fn kg_closed_kms(q: Complex64, z: Complex64, w: Complex64) -> Result<Complex64> {
    Ok(psi_kms(q, z)? * psi_kms(q, w)?.conj() * szego(z, w))
}

/// `2 / ((1 - z)(1 - w̄)(1 - z w̄))`, the kernel of the `h = 0` fGn limit.
pub fn kg_fgn0(z: Complex64, w: Complex64) -> Complex64 {
    2.0 * szego(z, w) / ((ONE - z) * (ONE - w.conj()))
}

/// `Z^T G W̄ = (1 + q z + q w̄) / (1 - z w̄)` for tridiagonal `G`.
pub fn kg_direct_tridiag(q: f64, z: Complex64, w: Complex64) -> Complex64 {
    (ONE + q * z + q * w.conj()) * szego(z, w)
}

/// Value of a truncated series kernel together with its tail bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    /// `B (r^N / (1 - r))²` with `r = max(|z|, |w|)`.
    pub tail_bound: f64,
}

/// `Σ_{k,j<N} M_{kj} z^k w̄^j` for a fixed `N × N` matrix `M`.
#[derive(Clone, Debug)]
pub struct SeriesKernel {
    matrix: CMatrix,
    sup_bound: f64,
}

impl SeriesKernel {
    /// `M = G_N⁻¹` for the inverse mode, `M = G_N` for the direct mode.
    pub fn new(spec: &ModelSpec, mode: CovarianceMode, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("series kernel needs N ≥ 1"));
        }
        let t = build_finite(spec, n)?;
        let matrix = match mode {
            CovarianceMode::Inverse => invert_finite(&t)?.hermitian_part(),
            CovarianceMode::Direct => t.to_dense(),
        };
        Ok(Self::from_matrix(matrix))
    }

    pub fn from_matrix(matrix: CMatrix) -> Self {
        let sup_bound = matrix.max_abs();
        SeriesKernel { matrix, sup_bound }
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Largest entry modulus `B` of the coefficient matrix.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn tail_bound(&self, z: Complex64, w: Complex64) -> f64 {
        let r = z.norm().max(w.norm());
        let t = r.powi(self.n() as i32) / (1.0 - r);
        self.sup_bound * t * t
    }

    /// Sum `u^T M v`.
    fn bilinear(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let n = self.n();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            if u[k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = self.matrix.row(k);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += row[j] * v[j];
            }
            acc += u[k] * s;
        }
        acc
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.bilinear(&powers(z, self.n()), &powers(w.conj(), self.n()))
    }

    pub fn eval_with_bound(&self, z: Complex64, w: Complex64) -> SeriesValue {
        SeriesValue { value: self.eval(z, w), tail_bound: self.tail_bound(z, w) }
    }

    /// Evaluates and fails when the tail bound exceeds `tol`, naming the
    /// order that would meet it.
    pub fn eval_checked(&self, z: Complex64, w: Complex64, tol: f64) -> Result<SeriesValue> {
        let v = self.eval_with_bound(z, w);
        if v.tail_bound > tol {
            let r = z.norm().max(w.norm());
            let required = truncation_order_for_bound(r, tol, self.sup_bound)?;
            return Err(Error::TruncationTooSmall { given: self.n(), required });
        }
        Ok(v)
    }

    pub fn dz(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.bilinear(&derivative_powers(z, self.n()), &powers(w.conj(), self.n()))
    }

    pub fn dz_dwbar(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.bilinear(&derivative_powers(z, self.n()), &derivative_powers(w.conj(), self.n()))
    }
}

fn powers(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    let mut p = ONE;
    for _ in 0..n {
        out.push(p);
        p *= z;
    }
    out
}

/// `d/dz z^k = k z^{k-1}` for `k < n`.
fn derivative_powers(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    out.push(Complex64::new(0.0, 0.0));
    let mut p = ONE;
    for k in 1..n {
        out.push(p * k as f64);
        p *= z;
    }
    out
}

/// Partial double sum `Σ_{k,j≤N} (G⁻¹)_{kj} z^{k-1} w̄^{j-1}`.
pub fn kg_series(spec: &ModelSpec, z: Complex64, w: Complex64, n: usize) -> Result<SeriesValue> {
    Ok(SeriesKernel::new(spec, CovarianceMode::Inverse, n)?.eval_with_bound(z, w))
}

/// Outer factor `ψ` of a kernel `ψ(z) conj ψ(w) / (1 - z w̄)`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Psi {
    One,
    Tridiag { scale: f64, a: f64, b: f64 },
    Kms { q: Complex64, scale: f64 },
    Fgn0,
}

impl Psi {
    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        match *self {
            Psi::One => (ONE, Complex64::new(0.0, 0.0)),
            Psi::Tridiag { scale, a, b } => {
                let d = a + b * z;
                let v = scale / d;
                (v, -v * b / d)
            }
            Psi::Kms { q, scale } => ((ONE - q * z) * scale, -q * scale),
            Psi::Fgn0 => {
                let s = std::f64::consts::SQRT_2;
                let d = ONE - z;
                (s / d, s / (d * d))
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Psi { psi: Psi, perturbation: f64 },
    DirectTridiag { q: f64 },
    Series(SeriesKernel),
}

/// Evaluator for a covariance kernel and its derivatives `∂_z K` and
/// `∂_z ∂_w̄ K`, in closed form or as a truncated series.
#[derive(Clone, Debug)]
pub struct KernelEval {
    spec: ModelSpec,
    mode: CovarianceMode,
    repr: Repr,
}

impl KernelEval {
    /// Closed form when the family has one, otherwise the series of order `n_series`.
    pub fn new(spec: ModelSpec, mode: CovarianceMode, n_series: usize) -> Result<Self> {
        match Self::closed_form(spec, mode) {
            Ok(k) => Ok(k),
            Err(Error::Unsupported(_)) => Self::series(spec, mode, n_series),
            Err(e) => Err(e),
        }
    }

    pub fn closed_form(spec: ModelSpec, mode: CovarianceMode) -> Result<Self> {
        spec.validate()?;
        let repr = match (spec, mode) {
            (ModelSpec::Identity, _) => Repr::Psi { psi: Psi::One, perturbation: 0.0 },
            (ModelSpec::Tridiagonal { q }, CovarianceMode::Inverse) => {
                let psi = if q == 0.0 {
                    Psi::One
                } else {
                    let (a, b) = tridiag_ab(q)?;
                    Psi::Tridiag { scale: (2.0 / q.abs()).sqrt(), a, b }
                };
                Repr::Psi { psi, perturbation: 0.0 }
            }
            (ModelSpec::Tridiagonal { q }, CovarianceMode::Direct) => Repr::DirectTridiag { q },
            (ModelSpec::Kms { q }, CovarianceMode::Inverse) => {
                Repr::Psi { psi: Psi::Kms { q, scale: 1.0 / (1.0 - q.norm_sqr()).sqrt() }, perturbation: 0.0 }
            }
            (ModelSpec::Fgn0, CovarianceMode::Inverse) => Repr::Psi { psi: Psi::Fgn0, perturbation: 0.0 },
            (ModelSpec::Fgn0, CovarianceMode::Direct) => Repr::DirectTridiag { q: -0.5 },
            _ => {
                return Err(Error::Unsupported(format!("no closed-form {mode} kernel for {spec}")));
            }
        };
        Ok(KernelEval { spec, mode, repr })
    }

    pub fn series(spec: ModelSpec, mode: CovarianceMode, n: usize) -> Result<Self> {
        Ok(KernelEval { spec, mode, repr: Repr::Series(SeriesKernel::new(&spec, mode, n)?) })
    }

    /// Replaces `ψ` by `ψ(z)(1 + eps z)`. Only meaningful for closed forms
    /// of product type; used to check that the verification suites notice a
    /// wrong kernel.
    pub fn with_psi_perturbation(mut self, eps: f64) -> Self {
        if let Repr::Psi { perturbation, .. } = &mut self.repr {
            *perturbation = eps;
        }
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }

    pub fn is_series(&self) -> bool {
        matches!(self.repr, Repr::Series(_))
    }

    /// Truncation order of a series kernel.
    pub fn truncation(&self) -> Option<usize> {
        match &self.repr {
            Repr::Series(s) => Some(s.n()),
            _ => None,
        }
    }

    pub fn series_kernel(&self) -> Option<&SeriesKernel> {
        match &self.repr {
            Repr::Series(s) => Some(s),
            _ => None,
        }
    }

    fn psi_at(psi: &Psi, eps: f64, z: Complex64) -> (Complex64, Complex64) {
        let (p, dp) = psi.value_and_derivative(z);
        if eps == 0.0 {
            (p, dp)
        } else {
            (p * (ONE + eps * z), dp * (ONE + eps * z) + p * eps)
        }
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        match &self.repr {
            Repr::Psi { psi, perturbation } => {
                let (pz, _) = Self::psi_at(psi, *perturbation, z);
                let (pw, _) = Self::psi_at(psi, *perturbation, w);
                pz * pw.conj() * szego(z, w)
            }
            Repr::DirectTridiag { q } => kg_direct_tridiag(*q, z, w),
            Repr::Series(s) => s.eval(z, w),
        }
    }

    /// `∂_z K(z, w)`.
    pub fn dz(&self, z: Complex64, w: Complex64) -> Complex64 {
        let (s, s_z, _, _) = szego_jet(z, w);
        match &self.repr {
            Repr::Psi { psi, perturbation } => {
                let (pz, dpz) = Self::psi_at(psi, *perturbation, z);
                let (pw, _) = Self::psi_at(psi, *perturbation, w);
                pw.conj() * (dpz * s + pz * s_z)
            }
            Repr::DirectTridiag { q } => {
                let num = ONE + *q * z + *q * w.conj();
                *q * s + num * s_z
            }
            Repr::Series(k) => k.dz(z, w),
        }
    }

    /// `∂_z ∂_w̄ K(z, w)`.
    pub fn dz_dwbar(&self, z: Complex64, w: Complex64) -> Complex64 {
        let (s, s_z, s_wbar, s_zwbar) = szego_jet(z, w);
        match &self.repr {
            Repr::Psi { psi, perturbation } => {
                let (pz, dpz) = Self::psi_at(psi, *perturbation, z);
                let (pw, dpw) = Self::psi_at(psi, *perturbation, w);
                let (pw, dpw) = (pw.conj(), dpw.conj());
                dpz * dpw * s + dpz * pw * s_wbar + pz * dpw * s_z + pz * pw * s_zwbar
            }
            Repr::DirectTridiag { q } => {
                let num = ONE + *q * z + *q * w.conj();
                *q * s_wbar + *q * s_z + num * s_zwbar
            }
            Repr::Series(k) => k.dz_dwbar(z, w),
        }
    }
}

/// `S`, `∂_z S`, `∂_w̄ S`, `∂_z ∂_w̄ S` for the Szegő kernel.
fn szego_jet(z: Complex64, w: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let wb = w.conj();
    let zw = z * wb;
    let s = ONE / (ONE - zw);
    let s2 = s * s;
    (s, wb * s2, z * s2, (ONE + zw) * s2 * s)
}

pub fn kernel_dz(k: &KernelEval, z: Complex64, w: Complex64) -> Complex64 {
    k.dz(z, w)
}

pub fn kernel_dzdwbar(k: &KernelEval, z: Complex64, w: Complex64) -> Complex64 {
    k.dz_dwbar(z, w)
}

/// Threshold on `K(w, w)` below which conditioning on `f(w) = 0` is refused.
pub const DEGENERATE_KWW: f64 = 1e-14;

/// `K₁(z, y) = K(z, y) - K(z, w) K(w, y) / K(w, w)`: the covariance of `f`
/// given `f(w) = 0`.
pub fn conditioned_kernel(k: &KernelEval, w: Complex64, z: Complex64, y: Complex64) -> Result<Complex64> {
    let kww = k.eval(w, w);
    if !(kww.re > DEGENERATE_KWW) {
        return Err(Error::DegenerateConditioning(kww.re));
    }
    Ok(k.eval(z, y) - k.eval(z, w) * k.eval(w, y) / kww)
}

/// `K₂(z, y) = T_w(z) K(z, y) conj T_w(y)`.
pub fn mobius_conjugated_kernel(k: &KernelEval, w: Complex64, z: Complex64, y: Complex64) -> Complex64 {
    mobius(w, z) * k.eval(z, y) * mobius(w, y).conj()
}
