//! Shared fixtures for the criterion benches.

use gafzeros_core::sampling::stream_rng;
use gafzeros_core::sampling::sample_std_complex;
use gafzeros_core::CMatrix;
use num_complex::Complex64;

/// Standard complex Gaussian polynomial coefficients of length `n`.
pub fn gaussian_coeffs(n: usize, seed: u64) -> Vec<Complex64> {
    sample_std_complex(&mut stream_rng(seed, 0), n)
}

/// A dense `n × n` matrix of standard complex Gaussians.
pub fn gaussian_matrix(n: usize, seed: u64) -> CMatrix {
    let v = gaussian_coeffs(n * n, seed);
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(gaussian_coeffs(8, 1), gaussian_coeffs(8, 1));
        assert_eq!(gaussian_matrix(3, 2).rows(), 3);
    }
}
