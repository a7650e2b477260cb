//! Zeros found by the simultaneous iteration against eigenvalues of the
//! companion matrix.

use gafzeros_core::gaf::{find_zeros, hausdorff_distance, CountCheck, TruncatedGaf};
use gafzeros_core::sampling::{stream_rng, CoefficientSampler};
use gafzeros_core::{Complex64, CovarianceMode, ModelSpec};
use nalgebra::DMatrix;

fn companion_roots(a: &[Complex64]) -> Vec<Complex64> {
    let d = a.len() - 1;
    let lead = a[d];
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            -a[d - 1 - j] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    m.schur().eigenvalues().expect("complex Schur form").iter().copied().collect()
}

fn compare(a: Vec<Complex64>, r: f64) {
    let oracle = companion_roots(&a);
    let zs = find_zeros(&TruncatedGaf::new(a).unwrap(), r).unwrap();
    // Skip sets with a root right at the boundary, where membership is ambiguous.
    if oracle.iter().any(|z| (z.norm() - r).abs() < 1e-6) {
        return;
    }
    let inside: Vec<Complex64> = oracle.into_iter().filter(|z| z.norm() <= r).collect();
    assert_eq!(inside.len(), zs.count());
    assert!(hausdorff_distance(&inside, &zs.points()) < 1e-8);
    if let CountCheck::Mismatch { listed, contour } = zs.count_check {
        panic!("argument principle disagrees: {listed} vs {contour}");
    }
}

#[test]
fn random_polynomials_up_to_degree_100() {
    use rand::Rng;
    let mut rng = stream_rng(99, 0);
    for d in [2usize, 5, 13, 40, 70, 100] {
        for _ in 0..4 {
            let a: Vec<Complex64> = (0..=d).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            compare(a, 0.8);
        }
    }
}

#[test]
fn sampled_functions_match_oracle() {
    let models = [
        (ModelSpec::Identity, CovarianceMode::Inverse),
        (ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Inverse),
        (ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Direct),
        (ModelSpec::Kms { q: Complex64::new(0.3, 0.4) }, CovarianceMode::Inverse),
        (ModelSpec::Fgn { h: 0.75 }, CovarianceMode::Inverse),
    ];
    for (spec, mode) in models {
        let s = CoefficientSampler::new(spec, mode, 100).unwrap();
        for rep in 0..5 {
            compare(s.draw(3, rep).values, 0.6);
        }
    }
}
