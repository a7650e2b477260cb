//! Truncated GAFs `f(z) = Σ ξ_n z^{n-1}`, truncation orders from the tail
//! bound, and zero finding inside a working disc.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CovarianceMode, ModelSpec};
use crate::output::fmt_f64;
use crate::toeplitz::{build_finite, invert_finite};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Zeros closer than this are merged.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Minimum distance between the contour `|z| = r` and any root for the
/// argument-principle check to run.
pub const CONTOUR_CLEARANCE: f64 = 1e-4;
/// Relative residual bound every reported zero must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-9;
const MAX_ABERTH_SWEEPS: usize = 500;

/// Smallest `N` with `B r^{2N} / (1-r)² ≤ ε`.
pub fn truncation_order_for_bound(r: f64, eps: f64, b: f64) -> Result<usize> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("working radius must satisfy 0 < r < 1, got {r}")));
    }
    if !(eps > 0.0) || !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain(format!("need ε > 0 and a finite bound B > 0, got ε = {eps}, B = {b}")));
    }
    let bound = |n: usize| b * r.powi(2 * n as i32) / ((1.0 - r) * (1.0 - r));
    let est = ((eps.ln() + 2.0 * (1.0 - r).ln() - b.ln()) / (2.0 * r.ln())).ceil();
    let mut n = if est.is_finite() && est > 1.0 { est as usize } else { 1 };
    // Guard against rounding in the logarithms.
    while n > 1 && bound(n - 1) <= eps {
        n -= 1;
    }
    while bound(n) > eps {
        n += 1;
    }
    Ok(n)
}

/// Truncation order for a model: `B` is the largest entry of the covariance
/// block `G_N⁻¹` (or `G_N`) at the order being tested, iterated until the
/// order is consistent with its own bound.
pub fn truncation_order(spec: &ModelSpec, mode: CovarianceMode, r: f64, eps: f64) -> Result<usize> {
    spec.validate()?;
    let mut n = truncation_order_for_bound(r, eps, 1.0)?;
    for _ in 0..32 {
        let t = build_finite(spec, n)?;
        let b = match mode {
            CovarianceMode::Inverse => invert_finite(&t)?.max_abs(),
            CovarianceMode::Direct => t.to_dense().max_abs(),
        };
        let next = truncation_order_for_bound(r, eps, b)?;
        if next <= n {
            return Ok(n);
        }
        n = next;
    }
    Err(Error::NoConvergence { iterations: 32, max_correction: f64::NAN })
}

/// Polynomial `Σ_{n=1}^{N} ξ_n z^{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedGaf {
    coeffs: Vec<Complex64>,
}

impl TruncatedGaf {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::domain("a truncated GAF needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite coefficient"));
        }
        Ok(TruncatedGaf { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Number of coefficients `N`.
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn eval_prime(&self, z: Complex64) -> Complex64 {
        let n = self.coeffs.len();
        let mut acc = ZERO;
        for k in (1..n).rev() {
            acc = acc * z + self.coeffs[k] * k as f64;
        }
        acc
    }

    /// `max_k |ξ_k| r^{k-1}`, the scale against which residuals are judged.
    pub fn scale(&self, r: f64) -> f64 {
        let mut p = 1.0;
        let mut m: f64 = 0.0;
        for c in &self.coeffs {
            m = m.max(c.norm() * p);
            p *= r;
        }
        m
    }

    /// Degree after dropping leading coefficients below `1e-14` of the largest one.
    pub fn effective_degree(&self) -> usize {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        let mut d = self.coeffs.len() - 1;
        while d > 0 && self.coeffs[d].norm() <= 1e-14 * max {
            d -= 1;
        }
        d
    }
}

pub fn eval_f(gaf: &TruncatedGaf, z: Complex64) -> Complex64 {
    gaf.eval(z)
}

pub fn eval_f_prime(gaf: &TruncatedGaf, z: Complex64) -> Complex64 {
    gaf.eval_prime(z)
}

/// Outcome of the argument-principle check on `|z| = r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CountCheck {
    Matched(usize),
    Mismatch { listed: usize, contour: usize },
    /// Some root lies within `CONTOUR_CLEARANCE` of the contour.
    Skipped { clearance: f64 },
}

/// A zero with its residual `|f(z)|` and multiplicity after clustering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zero {
    pub z: Complex64,
    pub residual: f64,
    pub multiplicity: usize,
}

/// Zeros of a truncated GAF inside `|z| ≤ radius`.
#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub radius: f64,
    pub truncation: usize,
    /// Every root of the polynomial, inside the disc or not.
    pub all_roots: Vec<Complex64>,
    pub count_check: CountCheck,
    /// Number of merges performed while clustering (anomalies for Gaussian coefficients).
    pub merged: usize,
    pub sweeps: usize,
    /// `max_k |ξ_k| r^{k-1}`.
    pub scale: f64,
}

impl ZeroSet {
    /// Zero count with multiplicity.
    pub fn count(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.zeros.iter().map(|z| z.z).collect()
    }

    pub fn max_relative_residual(&self) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.zeros.iter().map(|z| z.residual / self.scale).fold(0.0, f64::max)
    }

    /// CSV with columns `re,im,residual`, preceded by `header` if non-empty.
    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::new();
        if !header.is_empty() {
            s.push_str(header);
            s.push('\n');
        }
        s.push_str("re,im,residual\n");
        for z in &self.zeros {
            for _ in 0..z.multiplicity {
                let _ = writeln!(s, "{},{},{}", fmt_f64(z.z.re), fmt_f64(z.z.im), fmt_f64(z.residual));
            }
        }
        s
    }

    pub fn to_svg(&self, title: &str) -> String {
        crate::output::svg_scatter(&self.points(), Some(self.radius), title)
    }
}

/// `p/p'` at `z`, evaluated through the reversed polynomial when `|z| > 1`.
fn newton_ratio(a: &[Complex64], z: Complex64) -> Complex64 {
    let d = a.len() - 1;
    if z.norm() <= 1.0 {
        let mut p = a[d];
        let mut dp = ZERO;
        for k in (0..d).rev() {
            dp = dp * z + p;
            p = p * z + a[k];
        }
        if p == ZERO {
            return ZERO;
        }
        p / dp
    } else {
        // R(u) = Σ a_k u^{d-k}; p(z) = z^d R(1/z); p/p' = 1 / (u (d - u R'/R)).
        let u = ONE / z;
        let mut r = a[0];
        let mut dr = ZERO;
        for k in 1..=d {
            dr = dr * u + r;
            r = r * u + a[k];
        }
        if r == ZERO {
            return ZERO;
        }
        ONE / (u * (d as f64 - u * dr / r))
    }
}

/// All roots of `Σ a_k z^k` (`a_d ≠ 0`) by Aberth–Ehrlich iteration.
/// Returns the roots and the number of sweeps used.
pub fn aberth_roots(a: &[Complex64]) -> Result<(Vec<Complex64>, usize)> {
    let d = a.len().saturating_sub(1);
    if d == 0 {
        return Ok((Vec::new(), 0));
    }
    if a[d] == ZERO {
        return Err(Error::domain("leading coefficient is zero"));
    }
    if d == 1 {
        return Ok((vec![-a[0] / a[1]], 0));
    }
    // Start on a circle whose radius is the geometric mean of the root moduli
    // (capped by the Cauchy bound), with an offset that avoids symmetric stalls.
    let lead = a[d].norm();
    let cauchy = 1.0 + a[..d].iter().map(|c| c.norm() / lead).fold(0.0, f64::max);
    let gm = if a[0] == ZERO { 0.5 } else { (a[0].norm() / lead).powf(1.0 / d as f64) };
    let rho = gm.clamp(1e-3, cauchy);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(rho, 2.0 * PI * k as f64 / d as f64 + 0.4))
        .collect();
    let mut done = vec![false; d];
    let mut last_max = f64::INFINITY;
    for sweep in 1..=MAX_ABERTH_SWEEPS {
        let mut max_rel: f64 = 0.0;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let ratio = newton_ratio(a, z[i]);
            if ratio == ZERO {
                done[i] = true;
                continue;
            }
            if !ratio.is_finite() {
                // Critical point of p: nudge off it.
                z[i] *= Complex64::from_polar(1.0 + 1e-7, 1e-7);
                continue;
            }
            let mut sum = ZERO;
            for j in 0..d {
                if j != i {
                    sum += ONE / (z[i] - z[j]);
                }
            }
            let step = ratio / (ONE - ratio * sum);
            let step = if step.is_finite() { step } else { ratio };
            z[i] -= step;
            let rel = step.norm() / z[i].norm().max(1e-300);
            max_rel = max_rel.max(rel);
            if rel < 4.0 * f64::EPSILON {
                done[i] = true;
            }
        }
        if done.iter().all(|&x| x) {
            return Ok((z, sweep));
        }
        last_max = max_rel;
    }
    Err(Error::NoConvergence { iterations: MAX_ABERTH_SWEEPS, max_correction: last_max })
}

/// Winding number of `f` around `|z| = r`, by tracking `arg f` on a
/// bisection-refined grid of the circle.
pub fn argument_principle_count(gaf: &TruncatedGaf, r: f64) -> f64 {
    let n0 = (8 * gaf.order()).max(256);
    let at = |t: f64| gaf.eval(Complex64::from_polar(r, 2.0 * PI * t));
    let mut total = 0.0;
    let mut stack = Vec::new();
    for k in (0..n0).rev() {
        let (t0, t1) = (k as f64 / n0 as f64, (k + 1) as f64 / n0 as f64);
        stack.push((t0, t1, 0u32));
    }
    let mut cache_t = f64::NAN;
    let mut cache_v = ZERO;
    while let Some((t0, t1, depth)) = stack.pop() {
        let f0 = if t0 == cache_t { cache_v } else { at(t0) };
        let f1 = at(t1);
        let dphi = (f1 / f0).arg();
        if dphi.abs() > 0.5 && depth < 48 {
            let mid = 0.5 * (t0 + t1);
            stack.push((mid, t1, depth + 1));
            stack.push((t0, mid, depth + 1));
            cache_t = t0;
            cache_v = f0;
            continue;
        }
        total += dphi;
        cache_t = t1;
        cache_v = f1;
    }
    total / (2.0 * PI)
}

/// Zeros of `gaf` in `|z| ≤ r`: Aberth–Ehrlich on the full polynomial,
/// Newton polishing, clustering at `CLUSTER_TOL`, and an argument-principle
/// count on `|z| = r` when every root keeps `CONTOUR_CLEARANCE` from it.
pub fn find_zeros(gaf: &TruncatedGaf, r: f64) -> Result<ZeroSet> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("working radius must satisfy 0 < r < 1, got {r}")));
    }
    let d = gaf.effective_degree();
    let a = &gaf.coeffs()[..=d];
    let scale = gaf.scale(r);
    let (mut roots, sweeps) = if scale == 0.0 {
        (Vec::new(), 0)
    } else {
        aberth_roots(a)?
    };
    for z in roots.iter_mut() {
        if z.norm() <= 1.0 {
            for _ in 0..3 {
                let step = newton_ratio(a, *z);
                if !step.is_finite() {
                    break;
                }
                *z -= step;
                if step.norm() <= f64::EPSILON * z.norm() {
                    break;
                }
            }
        }
    }
    let clearance = roots.iter().map(|z| (z.norm() - r).abs()).fold(f64::INFINITY, f64::min);
    let mut zeros: Vec<Zero> = Vec::new();
    let mut merged = 0;
    let mut inside: Vec<Complex64> = roots.iter().copied().filter(|z| z.norm() <= r).collect();
    inside.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    for z in inside {
        if let Some(existing) = zeros.iter_mut().find(|e| (e.z - z).norm() < CLUSTER_TOL) {
            existing.multiplicity += 1;
            merged += 1;
            continue;
        }
        zeros.push(Zero { z, residual: gaf.eval(z).norm(), multiplicity: 1 });
    }
    let listed: usize = zeros.iter().map(|z| z.multiplicity).sum();
    let count_check = if scale == 0.0 {
        CountCheck::Matched(0)
    } else if clearance < CONTOUR_CLEARANCE {
        CountCheck::Skipped { clearance }
    } else {
        let w = argument_principle_count(gaf, r);
        let contour = w.round().max(0.0) as usize;
        if (w - w.round()).abs() < 0.1 && contour == listed {
            CountCheck::Matched(listed)
        } else {
            CountCheck::Mismatch { listed, contour }
        }
    };
    Ok(ZeroSet { zeros, radius: r, truncation: gaf.order(), all_roots: roots, count_check, merged, sweeps, scale })
}

/// Counts per annulus `[e_i, e_{i+1})`, the last one closed, with multiplicity.
pub fn count_in_annuli(zs: &ZeroSet, edges: &[f64]) -> Vec<usize> {
    count_points_in_annuli(zs.zeros.iter().map(|z| (z.z.norm(), z.multiplicity)), edges)
}

pub(crate) fn count_points_in_annuli(moduli: impl Iterator<Item = (f64, usize)>, edges: &[f64]) -> Vec<usize> {
    let bins = edges.len().saturating_sub(1);
    let mut counts = vec![0; bins];
    for (m, mult) in moduli {
        for i in 0..bins {
            let last = i + 1 == bins;
            if m >= edges[i] && (m < edges[i + 1] || (last && m == edges[i + 1])) {
                counts[i] += mult;
                break;
            }
        }
    }
    counts
}

/// Hausdorff distance between two finite point sets (`∞` if exactly one is empty).
pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let directed = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Distance between the zero sets of two truncations inside the working
/// disc: each zero inside is matched to the nearest root of the other
/// polynomial, so a root that sits right on `|z| = r` and crosses it under the
/// perturbation does not count as missing.
pub fn truncation_discrepancy(a: &ZeroSet, b: &ZeroSet) -> f64 {
    let directed = |x: &ZeroSet, y: &ZeroSet| {
        x.zeros
            .iter()
            .map(|p| y.all_roots.iter().map(|q| (p.z - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
