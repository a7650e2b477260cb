//! Coefficient models: which Toeplitz family, and whether the coefficients
//! carry `G⁻¹` or `G` itself as covariance.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A hermitian positive-definite Toeplitz family, normalized so that `γ(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    /// `G = I`: i.i.d. coefficients.
    Identity,
    /// `γ(±1) = q`, zero beyond lag one. Requires real `0 < |q| < 1/2` (or `q = 0`).
    Tridiagonal { q: f64 },
    /// Kac–Murdock–Szegő: `γ(n) = qⁿ` for `n ≥ 0`, `|q| < 1`.
    Kms { q: Complex64 },
    /// Fractional Gaussian noise with Hurst index `0 < h < 1`.
    Fgn { h: f64 },
    /// The `h → 0` limit of fGn: `γ(±1) = -1/2`.
    Fgn0,
}

/// Which matrix the coefficient vector uses as covariance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum CovarianceMode {
    /// `Cov(ξ) = G⁻¹`, the setting in which zeros follow the Bergman law.
    #[default]
    Inverse,
    /// `Cov(ξ) = G`.
    Direct,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Identity | ModelSpec::Fgn0 => Ok(()),
            ModelSpec::Tridiagonal { q } => {
                if q.is_finite() && q.abs() < 0.5 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("tridiagonal model needs |q| < 1/2, got q = {q}")))
                }
            }
            ModelSpec::Kms { q } => {
                if q.is_finite() && q.norm() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("KMS model needs |q| < 1, got |q| = {}", q.norm())))
                }
            }
            ModelSpec::Fgn { h } => {
                if h > 0.0 && h < 1.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("fGn model needs 0 < h < 1, got h = {h}")))
                }
            }
        }
    }

    /// Short family name as used on the command line.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Identity => "iid",
            ModelSpec::Tridiagonal { .. } => "tridiag",
            ModelSpec::Kms { .. } => "kms",
            ModelSpec::Fgn { .. } => "fgn",
            ModelSpec::Fgn0 => "fgn0",
        }
    }

    /// True when every autocovariance is real.
    pub fn is_real(&self) -> bool {
        !matches!(self, ModelSpec::Kms { q } if q.im != 0.0)
    }

    /// True when `γ(k)` vanishes for `|k| ≥ 2`, so `G` is banded.
    pub fn is_banded(&self) -> bool {
        matches!(self, ModelSpec::Identity | ModelSpec::Tridiagonal { .. } | ModelSpec::Fgn0)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelSpec::Identity => write!(f, "iid"),
            ModelSpec::Tridiagonal { q } => write!(f, "tridiag(q={q})"),
            ModelSpec::Kms { q } if q.im == 0.0 => write!(f, "kms(q={})", q.re),
            ModelSpec::Kms { q } => write!(f, "kms(q={},{})", q.re, q.im),
            ModelSpec::Fgn { h } => write!(f, "fgn(h={h})"),
            ModelSpec::Fgn0 => write!(f, "fgn0"),
        }
    }
}

impl CovarianceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CovarianceMode::Inverse => "inverse",
            CovarianceMode::Direct => "direct",
        }
    }
}

impl fmt::Display for CovarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CovarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inverse" => Ok(CovarianceMode::Inverse),
            "direct" => Ok(CovarianceMode::Direct),
            other => Err(Error::Config(format!("unknown covariance mode `{other}` (expected inverse|direct)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_bounds() {
        assert!(ModelSpec::Tridiagonal { q: -1.0 / 3.0 }.validate().is_ok());
        assert!(ModelSpec::Tridiagonal { q: 0.5 }.validate().is_err());
        assert!(ModelSpec::Kms { q: Complex64::new(0.6, 0.7) }.validate().is_ok());
        assert!(ModelSpec::Kms { q: Complex64::new(0.8, 0.7) }.validate().is_err());
        assert!(ModelSpec::Fgn { h: 0.0 }.validate().is_err());
        assert!(ModelSpec::Fgn { h: 1.0 }.validate().is_err());
        assert!(ModelSpec::Fgn { h: 0.75 }.validate().is_ok());
    }

    #[test]
    fn display_round() {
        assert_eq!(ModelSpec::Kms { q: Complex64::new(0.5, 0.0) }.to_string(), "kms(q=0.5)");
        assert_eq!("direct".parse::<CovarianceMode>().unwrap(), CovarianceMode::Direct);
        assert!("both".parse::<CovarianceMode>().is_err());
    }
}
