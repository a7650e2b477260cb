//! Autocovariance sequences, finite Toeplitz truncations `G_n`, their
//! Cholesky factors and inverses, and the closed-form inverses known for the
//! tridiagonal and Kac–Murdock–Szegő families.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{lower_triangular_inverse, CMatrix};
use crate::model::ModelSpec;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative Levinson pivot below which the structured inverse gives way to
/// dense Cholesky inversion.
pub const TRENCH_PIVOT_TOL: f64 = 1e-12;

/// Autocovariance `γ(k)` of the family at lag `k`.
///
/// `γ(0) = 1` throughout and `γ(-k) = conj γ(k)`.
pub fn gamma_of(spec: &ModelSpec, k: i64) -> Result<Complex64> {
    spec.validate()?;
    Ok(gamma_unchecked(spec, k))
}

fn gamma_unchecked(spec: &ModelSpec, k: i64) -> Complex64 {
    let real = |x: f64| Complex64::new(x, 0.0);
    match *spec {
        ModelSpec::Identity => real(if k == 0 { 1.0 } else { 0.0 }),
        ModelSpec::Tridiagonal { q } => real(match k.abs() {
            0 => 1.0,
            1 => q,
            _ => 0.0,
        }),
        ModelSpec::Kms { q } => {
            let m = k.unsigned_abs();
            let p = q.powu(m as u32);
            if k >= 0 {
                p
            } else {
                p.conj()
            }
        }
        ModelSpec::Fgn { h } => {
            let a = k.unsigned_abs() as f64;
            let e = 2.0 * h;
            real(0.5 * (a + 1.0).powf(e) + 0.5 * (a - 1.0).abs().powf(e) - a.powf(e))
        }
        // Stated directly as the limit matrix; plugging h = 0 into the fGn
        // formula would hit 0^0.
        ModelSpec::Fgn0 => real(match k.abs() {
            0 => 1.0,
            1 => -0.5,
            _ => 0.0,
        }),
    }
}

/// The map `k ↦ γ(k)` of a validated family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutocovSequence {
    spec: ModelSpec,
}

impl AutocovSequence {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(AutocovSequence { spec })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn at(&self, k: i64) -> Complex64 {
        gamma_unchecked(&self.spec, k)
    }
}

/// The leading `n × n` block `G_n` of the infinite Toeplitz matrix, stored by
/// its first column `γ(0), …, γ(n-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteToeplitz {
    first_column: Vec<Complex64>,
}

impl FiniteToeplitz {
    /// Hermitian Toeplitz matrix with the given first column. `first_column[0]`
    /// must be real.
    pub fn from_first_column(first_column: Vec<Complex64>) -> Result<Self> {
        match first_column.first() {
            None => Err(Error::domain("Toeplitz matrix needs n >= 1")),
            Some(c) if c.im != 0.0 => Err(Error::domain("hermitian Toeplitz diagonal must be real")),
            Some(_) => Ok(FiniteToeplitz { first_column }),
        }
    }

    pub fn n(&self) -> usize {
        self.first_column.len()
    }

    pub fn first_column(&self) -> &[Complex64] {
        &self.first_column
    }

    /// Entry `(k, j)`, 0-based: `γ(k - j)`.
    pub fn entry(&self, k: usize, j: usize) -> Complex64 {
        if k >= j {
            self.first_column[k - j]
        } else {
            self.first_column[j - k].conj()
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        CMatrix::from_fn(self.n(), self.n(), |k, j| self.entry(k, j))
    }

    /// Leading `m × m` block, itself `G_m`.
    pub fn leading(&self, m: usize) -> FiniteToeplitz {
        FiniteToeplitz { first_column: self.first_column[..m].to_vec() }
    }
}

/// `G_n` for the family.
pub fn build_finite(spec: &ModelSpec, n: usize) -> Result<FiniteToeplitz> {
    if n == 0 {
        return Err(Error::domain("truncation order n must be >= 1"));
    }
    let seq = AutocovSequence::new(*spec)?;
    FiniteToeplitz::from_first_column((0..n as i64).map(|k| seq.at(k)).collect())
}

/// Lower-triangular `L` with `L L* = G_n` and positive real diagonal.
#[derive(Clone, Debug)]
pub struct LowerFactor {
    l: CMatrix,
}

impl LowerFactor {
    pub fn n(&self) -> usize {
        self.l.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.l
    }

    /// `L L*`.
    pub fn reconstruct(&self) -> CMatrix {
        self.l.matmul(&self.l.adjoint())
    }

    /// `L⁻¹`, again lower triangular.
    pub fn inverse(&self) -> CMatrix {
        lower_triangular_inverse(&self.l)
    }

    /// Ratio of the largest to the smallest diagonal entry of `L`; a cheap
    /// conditioning indicator (its square bounds `cond(G_n)` from below).
    pub fn diagonal_spread(&self) -> f64 {
        let d: Vec<f64> = (0..self.n()).map(|i| self.l[(i, i)].re).collect();
        let max = d.iter().copied().fold(0.0, f64::max);
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

pub fn cholesky(t: &FiniteToeplitz) -> Result<LowerFactor> {
    Ok(LowerFactor { l: t.to_dense().cholesky()? })
}

/// Which algorithm produced an inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InversionPath {
    Trench,
    DenseCholesky,
}

/// `G_n⁻¹`, by the O(n²) Trench recursion when the Levinson pivots stay
/// healthy and by dense Cholesky otherwise.
pub fn invert_finite(t: &FiniteToeplitz) -> Result<CMatrix> {
    invert_finite_with_path(t).map(|(m, _)| m)
}

pub fn invert_finite_with_path(t: &FiniteToeplitz) -> Result<(CMatrix, InversionPath)> {
    match invert_trench(t) {
        Ok(m) => Ok((m, InversionPath::Trench)),
        Err(_) => invert_dense(t).map(|m| (m, InversionPath::DenseCholesky)),
    }
}

/// Dense inverse `L^{-*} L^{-1}`.
pub fn invert_dense(t: &FiniteToeplitz) -> Result<CMatrix> {
    t.to_dense().hpd_inverse()
}

/// First column `x = G_n⁻¹ e₀` by the Levinson–Durbin recursion.
///
/// Fails with [`Error::NotPositiveDefinite`] when a prediction-error pivot
/// drops below `TRENCH_PIVOT_TOL · ‖first column‖`.
pub fn levinson_first_column(t: &FiniteToeplitz) -> Result<Vec<Complex64>> {
    let g = t.first_column();
    let n = g.len();
    let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let floor = TRENCH_PIVOT_TOL * norm;

    // a: prediction-error filter with a[0] = 1 and G_k a = (e, 0, …, 0).
    let mut a = vec![Complex64::new(1.0, 0.0)];
    let mut e = g[0].re;
    if !(e > floor) {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: e });
    }
    let mut next = Vec::with_capacity(n);
    for k in 1..n {
        let delta: Complex64 = (0..k).map(|j| g[k - j] * a[j]).sum();
        let kappa = delta / e;
        next.clear();
        next.resize(k + 1, ZERO);
        for i in 0..=k {
            let fwd = if i < k { a[i] } else { ZERO };
            // Backward filter J·conj(a), shifted down by one.
            let bwd = if i >= 1 { a[k - i].conj() } else { ZERO };
            next[i] = fwd - kappa * bwd;
        }
        e -= (kappa * delta.conj()).re;
        if !(e > floor) {
            return Err(Error::NotPositiveDefinite { index: k, pivot: e });
        }
        std::mem::swap(&mut a, &mut next);
    }
    Ok(a.into_iter().map(|v| v / e).collect())
}

/// Trench's O(n²) inverse of a hermitian positive-definite Toeplitz matrix.
///
/// With `x` the first column of `B = G⁻¹`, persymmetry gives the last column
/// as `J·conj(x)` and the Gohberg–Semencul displacement identity yields
/// `B[i+1][j+1] = B[i][j] + (x[i+1]·conj(x[j+1]) − conj(x[n-1-i])·x[n-1-j]) / x[0]`.
pub fn invert_trench(t: &FiniteToeplitz) -> Result<CMatrix> {
    let x = levinson_first_column(t)?;
    let n = x.len();
    let x0 = x[0].re;
    let mut b = CMatrix::zeros(n, n);
    for j in 0..n {
        b[(0, j)] = x[j].conj();
        b[(j, 0)] = x[j];
    }
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let upd = (x[i + 1] * x[j + 1].conj() - x[n - 1 - i].conj() * x[n - 1 - j]) / x0;
            b[(i + 1, j + 1)] = b[(i, j)] + upd;
        }
    }
    Ok(b)
}

/// Chebyshev polynomial of the second kind, `U_k(x)`, by its three-term
/// recurrence.
pub fn chebyshev_u(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn check_tridiag_q(q: f64) -> Result<()> {
    if q != 0.0 && q.abs() < 0.5 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("closed-form tridiagonal inverse needs 0 < |q| < 1/2, got q = {q}")))
    }
}

/// `U_{k-1}(α) U_{n-j}(α) / U_n(α)` for `α > 1`.
///
/// Uses the recurrence values directly while `U_n(α)` is representable and
/// the scaled closed form `U_m(α) = (ρ^{m+1} − ρ^{-(m+1)})/(ρ − ρ⁻¹)`,
/// `ρ = α + √(α²−1)`, beyond that.
fn chebyshev_ratio(alpha: f64, n: usize, k: usize, j: usize) -> f64 {
    let un = chebyshev_u(n, alpha);
    if un.is_finite() && un < 1e280 {
        return chebyshev_u(k - 1, alpha) * chebyshev_u(n - j, alpha) / un;
    }
    let rho = alpha + (alpha * alpha - 1.0).sqrt();
    let r2 = rho.powi(-2);
    let a = k as i32;
    let b = (n - j + 1) as i32;
    let c = (n + 1) as i32;
    rho.powi(a + b - c) * (1.0 - r2.powi(a)) * (1.0 - r2.powi(b)) / ((1.0 - r2.powi(c)) * (rho - 1.0 / rho))
}

/// Entry `(k, j)` (1-based) of `G_n⁻¹` for the tridiagonal family, from the
/// Chebyshev closed form with `α = 1/(2|q|)`.
pub fn tridiag_inverse_entry(q: f64, n: usize, k: usize, j: usize) -> Result<f64> {
    check_tridiag_q(q)?;
    if k == 0 || j == 0 || k > n || j > n {
        return Err(Error::domain(format!("indices ({k}, {j}) outside 1..={n}")));
    }
    if k > j {
        // Real symmetric; conj of the swapped entry is the entry itself.
        return tridiag_inverse_entry(q, n, j, k);
    }
    let alpha = 1.0 / (2.0 * q.abs());
    // (-1)^{k+j} q^{j-k} / |q|^{j-k+1} = (-1)^{k+j} sign(q)^{j-k} / |q|
    let d = j - k;
    let mut sign = if (k + j) % 2 == 0 { 1.0 } else { -1.0 };
    if q < 0.0 && d % 2 == 1 {
        sign = -sign;
    }
    Ok(sign / q.abs() * chebyshev_ratio(alpha, n, k, j))
}

/// Entry `(k, j)` (1-based) of the inverse of the infinite tridiagonal `G`.
pub fn tridiag_infinite_inverse_entry(q: f64, k: usize, j: usize) -> Result<f64> {
    if !(q.abs() < 0.5) {
        return Err(Error::domain(format!("tridiagonal inverse needs |q| < 1/2, got q = {q}")));
    }
    if k == 0 || j == 0 {
        return Err(Error::domain("indices are 1-based"));
    }
    let (k, j) = if k <= j { (k, j) } else { (j, k) };
    let s = (1.0 - 4.0 * q * q).sqrt();
    let d = (j - k) as i32;
    // (1+s)^{-j} ((1+s)^k − (1−s)^k) = (1+s)^{k-j} (1 − ((1−s)/(1+s))^k)
    let ratio = (1.0 - s) / (1.0 + s);
    let body = (1.0 + s).powi(-d) * (1.0 - ratio.powi(k as i32));
    Ok((-2.0 * q).powi(d) * body / s)
}

/// Entry `(k, j)` (1-based) of the inverse of the infinite KMS matrix:
/// a tridiagonal band.
pub fn kms_inverse_entry(q: Complex64, k: usize, j: usize) -> Result<Complex64> {
    if !(q.norm() < 1.0) {
        return Err(Error::domain(format!("KMS inverse needs |q| < 1, got |q| = {}", q.norm())));
    }
    if k == 0 || j == 0 {
        return Err(Error::domain("indices are 1-based"));
    }
    let s = 1.0 / (1.0 - q.norm_sqr());
    let v = match k as i64 - j as i64 {
        0 if k == 1 => Complex64::new(s, 0.0),
        0 => Complex64::new((1.0 + q.norm_sqr()) * s, 0.0),
        1 => -q * s,
        -1 => -q.conj() * s,
        _ => ZERO,
    };
    Ok(v)
}
