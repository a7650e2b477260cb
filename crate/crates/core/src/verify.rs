//! Named identity checks grouped into suites, run by `gafzeros verify`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::intensity::{bergman_determinant, counterexample_intensity, joint_intensity_numeric, one_point_intensity};
use crate::kernels::{conditioned_kernel, kg_series, mobius_conjugated_kernel, KernelEval};
use crate::linalg::CMatrix;
use crate::model::{CovarianceMode, ModelSpec};
use crate::orthopoly::gram_basis;
use crate::sampling::{schur_conditional_cov, stream_rng};
use crate::spectral::{normalizing_c, SpectralDensity};
use crate::toeplitz::{
    build_finite, gamma_of, invert_dense, invert_finite, invert_trench, kms_inverse_entry, tridiag_inverse_entry,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Kernels,
    Schur,
    Orthopoly,
    Intensity,
    Spectral,
    Toeplitz,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] =
        [Suite::Kernels, Suite::Schur, Suite::Orthopoly, Suite::Intensity, Suite::Spectral, Suite::Toeplitz];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Schur => "schur",
            Suite::Orthopoly => "orthopoly",
            Suite::Intensity => "intensity",
            Suite::Spectral => "spectral",
            Suite::Toeplitz => "toeplitz",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|x| x.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}` (expected kernels|schur|orthopoly|intensity|spectral|toeplitz|all)")))
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Replaces `ψ` by `ψ(z)(1 + ε z)` in the closed-form kernels under test.
    pub psi_perturbation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(suite: Suite, name: impl Into<String>, err: Result<f64>, tol: f64) -> CheckOutcome {
    let name = name.into();
    match err {
        Ok(e) => CheckOutcome { suite, name, passed: e < tol, detail: format!("max error {e:.3e}, tolerance {tol:.0e}") },
        Err(e) => CheckOutcome { suite, name, passed: false, detail: format!("error: {e}") },
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `count` tuples of `n` points, uniform in `|z| ≤ radius` and pairwise at
/// least `separation` apart, from random stream `(seed, n)`.
pub fn separated_tuples(n: usize, count: usize, radius: f64, separation: f64, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = stream_rng(seed, n as u64);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut pts: Vec<Complex64> = Vec::with_capacity(n);
        while pts.len() < n {
            let s = radius * rng.random::<f64>().sqrt();
            let z = Complex64::from_polar(s, 2.0 * std::f64::consts::PI * rng.random::<f64>());
            if pts.iter().all(|p| (p - z).norm() >= separation) {
                pts.push(z);
            }
        }
        out.push(pts);
    }
    out
}

/// The 125 triples `(z, y, w)` drawn from five points `0.2 i e^{1.3 i i}`, `i < 5`.
pub fn conditioning_grid() -> Vec<Complex64> {
    (0..5).map(|i| Complex64::from_polar(0.2 * i as f64, 1.3 * i as f64)).collect()
}

/// `max |K₁ - K₂|` over the 125-point grid.
pub fn conditioning_defect(k: &KernelEval) -> Result<f64> {
    let grid = conditioning_grid();
    let mut worst: f64 = 0.0;
    for &w in &grid {
        for &z in &grid {
            for &y in &grid {
                let d = (conditioned_kernel(k, w, z, y)? - mobius_conjugated_kernel(k, w, z, y)).norm();
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

fn max_over<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for v in it {
        let v = v?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        worst = worst.max(v);
    }
    Ok(worst)
}

fn product_kernels() -> Vec<(String, ModelSpec)> {
    vec![
        ("tridiag(-1/3)".into(), ModelSpec::Tridiagonal { q: -1.0 / 3.0 }),
        ("tridiag(0.3)".into(), ModelSpec::Tridiagonal { q: 0.3 }),
        ("kms(0.5)".into(), ModelSpec::Kms { q: c(0.5, 0.0) }),
        ("kms(0.3+0.4i)".into(), ModelSpec::Kms { q: c(0.3, 0.4) }),
    ]
}

/// Series order for the fGn kernel checks.
pub const FGN_SERIES_ORDER: usize = 1200;

fn kernels_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let s = Suite::Kernels;
    let mut out = Vec::new();
    let pts = separated_tuples(8, 1, 0.7, 0.05, 3).remove(0);
    for (label, spec) in product_kernels() {
        let k = match KernelEval::closed_form(spec, CovarianceMode::Inverse) {
            Ok(k) => k.with_psi_perturbation(opts.psi_perturbation),
            Err(e) => {
                out.push(outcome(s, format!("closed form exists, {label}"), Err(e), 0.0));
                continue;
            }
        };
        let series = max_over(pts.iter().flat_map(|&z| {
            let k = &k;
            pts.iter().map(move |&w| Ok((k.eval(z, w) - kg_series(&spec, z, w, 200)?.value).norm()))
        }));
        out.push(outcome(s, format!("closed form equals inverse-Toeplitz series, {label}"), series, 1e-10));
        let herm = max_over(
            pts.iter().flat_map(|&z| pts.iter().map(move |&w| (z, w))).map(|(z, w)| Ok((k.eval(z, w) - k.eval(w, z).conj()).norm())),
        );
        out.push(outcome(s, format!("hermitian symmetry, {label}"), herm, 1e-13));
        let gram = CMatrix::from_fn(pts.len(), pts.len(), |i, j| k.eval(pts[i], pts[j]));
        let psd = if gram.is_psd(1e-10) { Ok(0.0) } else { Ok(1.0) };
        out.push(outcome(s, format!("Gram matrix is positive semidefinite, {label}"), psd, 0.5));
        out.push(outcome(s, format!("conditioning equals Möbius conjugation, {label}"), conditioning_defect(&k), 1e-10));
        let h = 1e-5;
        let fd = max_over(pts.iter().take(4).flat_map(|&z| pts.iter().take(4).map(move |&w| (z, w))).map(|(z, w)| {
            let dz = (k.eval(z + h, w) - k.eval(z - h, w) - (k.eval(z + c(0.0, h), w) - k.eval(z - c(0.0, h), w)) * c(0.0, 1.0))
                / (4.0 * h);
            Ok((dz - k.dz(z, w)).norm() / k.dz(z, w).norm().max(1.0))
        }));
        out.push(outcome(s, format!("derivative matches finite differences, {label}"), fd, 1e-6));
    }
    let direct = KernelEval::closed_form(ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Direct).and_then(|k| {
        let series = KernelEval::series(ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Direct, 200)?;
        max_over(pts.iter().flat_map(|&z| pts.iter().map(move |&w| (z, w))).map(|(z, w)| Ok((k.eval(z, w) - series.eval(z, w)).norm())))
    });
    out.push(outcome(s, "direct closed form equals series, tridiag(-1/3)", direct, 1e-10));
    let fgn = KernelEval::series(ModelSpec::Fgn { h: 0.75 }, CovarianceMode::Inverse, FGN_SERIES_ORDER)
        .and_then(|k| conditioning_defect(&k));
    out.push(outcome(s, format!("conditioning equals Möbius conjugation, fgn(0.75) series N={FGN_SERIES_ORDER}"), fgn, 1e-6));
    out
}

fn schur_specs() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Identity,
        ModelSpec::Tridiagonal { q: -1.0 / 3.0 },
        ModelSpec::Tridiagonal { q: 0.45 },
        ModelSpec::Kms { q: c(0.5, 0.0) },
        ModelSpec::Kms { q: c(-0.3, 0.6) },
        ModelSpec::Fgn { h: 0.25 },
        ModelSpec::Fgn { h: 0.75 },
        ModelSpec::Fgn0,
    ]
}

/// `max_k ‖Cov(ξ_{k+1..n} | ξ_{1..k} = 0) - G_{n-k}⁻¹‖_max` for `Cov ξ = G_n⁻¹`.
pub fn schur_defect(spec: &ModelSpec, n: usize) -> Result<f64> {
    max_over((1..n).map(|k| {
        let cond = schur_conditional_cov(spec, n, k)?;
        let target = invert_dense(&build_finite(spec, n - k)?)?;
        Ok(cond.max_abs_diff(&target))
    }))
}

fn schur_suite() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for spec in schur_specs() {
        for n in [8, 32] {
            out.push(outcome(Suite::Schur, format!("conditional covariance equals G⁻¹ block, {spec}, n={n}"), schur_defect(&spec, n), 1e-10));
        }
    }
    out
}

fn orthopoly_suite() -> Vec<CheckOutcome> {
    let s = Suite::Orthopoly;
    let mut out = Vec::new();
    let m = 200;
    for spec in [ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, ModelSpec::Kms { q: c(0.5, 0.0) }, ModelSpec::Fgn { h: 0.75 }] {
        let err = gram_basis(&spec, m).and_then(|b| {
            let g = build_finite(&spec, m)?.to_dense();
            Ok(b.coeffs.matmul(&g).matmul(&b.coeffs.adjoint()).max_abs_diff(&CMatrix::identity(m)))
        });
        out.push(outcome(s, format!("orthonormal under the Gram matrix, {spec}, m={m}"), err, 1e-8));
    }
    let pts: Vec<Complex64> = (0..8).map(|i| Complex64::from_polar(0.7 * (i as f64 / 7.0).sqrt(), 2.1 * i as f64)).collect();
    for (label, spec) in product_kernels().into_iter().filter(|(_, s)| s.is_real()) {
        let err = gram_basis(&spec, m).and_then(|b| {
            let k = KernelEval::closed_form(spec, CovarianceMode::Inverse)?;
            max_over(pts.iter().flat_map(|&z| pts.iter().map(move |&w| (z, w))).map(|(z, w)| Ok((b.kernel_partial_sum(m, z, w)? - k.eval(z, w)).norm())))
        });
        out.push(outcome(s, format!("kernel partial sums reach the closed form, {label}, m={m}"), err, 1e-6));
    }
    let mono = gram_basis(&ModelSpec::Tridiagonal { q: 0.3 }, 60).and_then(|b| {
        let z = c(0.6, 0.2);
        let mut prev = 0.0;
        let mut worst: f64 = 0.0;
        for j in 1..=60 {
            let v = b.kernel_partial_sum(j, z, z)?.re;
            worst = worst.max(prev - v);
            prev = v;
        }
        Ok(worst)
    });
    out.push(outcome(s, "diagonal partial sums are nondecreasing, tridiag(0.3)", mono, 1e-14));
    out
}

fn intensity_suite() -> Vec<CheckOutcome> {
    let s = Suite::Intensity;
    let mut out = Vec::new();
    let specs = [ModelSpec::Identity, ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, ModelSpec::Kms { q: c(0.5, 0.0) }];
    for spec in specs {
        let k = match KernelEval::closed_form(spec, CovarianceMode::Inverse) {
            Ok(k) => k,
            Err(e) => {
                out.push(outcome(s, format!("kernel for {spec}"), Err(e), 0.0));
                continue;
            }
        };
        for n in 1..=3 {
            let err = max_over(separated_tuples(n, 5, 0.7, 0.1, 11).iter().map(|pts| {
                let p = joint_intensity_numeric(&k, pts)?;
                let b = bergman_determinant(pts);
                Ok((p - b).abs() / b.abs())
            }));
            out.push(outcome(s, format!("joint intensity equals Bergman determinant, {spec}, n={n}"), err, 1e-6));
        }
    }
    let q = -1.0 / 3.0;
    let direct = KernelEval::closed_form(ModelSpec::Tridiagonal { q }, CovarianceMode::Direct).and_then(|k| {
        max_over((0..10).map(|i| {
            let z = Complex64::from_polar(0.08 * i as f64, 0.9 * i as f64);
            let f = counterexample_intensity(q, z)?;
            Ok((one_point_intensity(&k, z) - f).abs() / f)
        }))
    });
    out.push(outcome(s, "direct tridiagonal intensity equals counterexample formula", direct, 1e-8));
    let ratio = counterexample_intensity(q, c(0.0, 0.0)).map(|p| (p * std::f64::consts::PI - (1.0 - q * q)).abs());
    out.push(outcome(s, "counterexample intensity at the origin is (1-q²)/π", ratio, 1e-12));
    out
}

fn all_specs() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Identity,
        ModelSpec::Tridiagonal { q: -1.0 / 3.0 },
        ModelSpec::Kms { q: c(0.3, 0.4) },
        ModelSpec::Fgn { h: 0.25 },
        ModelSpec::Fgn { h: 0.75 },
        ModelSpec::Fgn0,
    ]
}

fn spectral_suite() -> Vec<CheckOutcome> {
    let s = Suite::Spectral;
    let mut out = Vec::new();
    let flat = SpectralDensity::new(ModelSpec::Fgn { h: 0.5 })
        .map(|d| (1..=1000).map(|i| (d.eval(i as f64 / 1001.0) - 1.0).abs()).fold(0.0, f64::max));
    out.push(outcome(s, "fgn(0.5) density is flat", flat, 1e-8));
    out.push(outcome(s, "C(0.5) = 1/(4π²)", normalizing_c(0.5).map(|v| (v - 0.25 / (std::f64::consts::PI.powi(2))).abs()), 1e-10));
    for spec in all_specs() {
        let err = SpectralDensity::new(spec)
            .and_then(|d| max_over((-10..=10).map(|k| Ok((d.fourier_coefficient(k) - gamma_of(&spec, k)?).norm()))));
        out.push(outcome(s, format!("Fourier coefficients reproduce γ, {spec}"), err, 1e-7));
    }
    out
}

fn toeplitz_suite() -> Vec<CheckOutcome> {
    let s = Suite::Toeplitz;
    let mut out = Vec::new();
    for q in [0.1, -0.1, 0.3, -0.3, -1.0 / 3.0] {
        let err = max_over([2usize, 5, 20, 100].into_iter().map(|n| {
            let num = invert_dense(&build_finite(&ModelSpec::Tridiagonal { q }, n)?)?;
            max_over((1..=n).flat_map(|k| (1..=n).map(move |j| (k, j))).map(|(k, j)| {
                Ok((num[(k - 1, j - 1)] - tridiag_inverse_entry(q, n, k, j)?).norm())
            }))
        }));
        out.push(outcome(s, format!("tridiagonal closed-form inverse, q={q:.4}"), err, 1e-8));
    }
    for q in [c(0.5, 0.0), c(-0.7, 0.0), c(0.3, 0.4)] {
        let n = 200;
        let err = invert_finite(&build_finite(&ModelSpec::Kms { q }, n).unwrap_or_else(|_| unreachable!())).and_then(|num| {
            max_over((10..=n - 10).flat_map(|k| (10..=n - 10).map(move |j| (k, j))).map(|(k, j)| {
                Ok((num[(k - 1, j - 1)] - kms_inverse_entry(q, k, j)?).norm())
            }))
        });
        out.push(outcome(s, format!("KMS infinite inverse in the interior, q={q}"), err, 1e-6));
    }
    for spec in all_specs() {
        let err = build_finite(&spec, 64).and_then(|t| Ok(invert_trench(&t)?.max_abs_diff(&invert_dense(&t)?)));
        out.push(outcome(s, format!("Trench and dense inverses agree, {spec}, n=64"), err, 1e-8));
    }
    out
}

/// Runs one suite (or all of them) and returns the outcomes in a fixed order.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<CheckOutcome> {
    match suite {
        Suite::Kernels => kernels_suite(opts),
        Suite::Schur => schur_suite(),
        Suite::Orthopoly => orthopoly_suite(),
        Suite::Intensity => intensity_suite(),
        Suite::Spectral => spectral_suite(),
        Suite::Toeplitz => toeplitz_suite(),
        Suite::All => Suite::EACH.iter().flat_map(|&s| run_suite(s, opts)).collect(),
    }
}

/// One `PASS`/`FAIL` line per check.
pub fn format_table(outcomes: &[CheckOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&format!("{} [{}] {}: {}\n", if o.passed { "PASS" } else { "FAIL" }, o.suite, o.name, o.detail));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    s.push_str(&format!("{} checks, {} failed\n", outcomes.len(), failed));
    s
}
