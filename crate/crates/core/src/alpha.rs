//! Reparametrizations `α` with `α(0) = 0` and invertible linear part.

use num_complex::Complex64;

use crate::combin::factorial;
use crate::error::{check_dim, Error, Result};
use crate::jets::VectorJet;

#[derive(Debug, Clone, PartialEq)]
pub enum Alpha {
    Identity,
    /// `log(1 + θ_i)` in every coordinate.
    Log1p,
    /// `exp(θ_i) - 1` in every coordinate.
    Expm1,
    /// Arbitrary truncated series.
    Jet(VectorJet),
}

impl Alpha {
    pub fn name(&self) -> &'static str {
        match self {
            Alpha::Identity => "id",
            Alpha::Log1p => "log1p",
            Alpha::Expm1 => "expm1",
            Alpha::Jet(_) => "jet",
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Alpha::Identity)
    }

    /// Kernels `α^{(n)}(0)` up to `degree`.
    pub fn jet(&self, dim: usize, degree: usize) -> Result<VectorJet> {
        match self {
            Alpha::Identity => Ok(VectorJet::identity(dim, degree)),
            Alpha::Log1p => Ok(VectorJet::coordinatewise(dim, degree, |n| {
                let s = if n % 2 == 1 { 1.0 } else { -1.0 };
                s * factorial(n - 1)
            })),
            Alpha::Expm1 => Ok(VectorJet::coordinatewise(dim, degree, |_| 1.0)),
            Alpha::Jet(j) => {
                check_dim(dim, j.dim())?;
                if degree > j.degree() {
                    return Err(Error::DegreeOverflow {
                        requested: degree,
                        available: j.degree(),
                    });
                }
                Ok(j.truncated(degree))
            }
        }
    }

    /// Pointwise value at a complex argument. Series-backed maps evaluate
    /// their truncation.
    pub fn eval_complex(&self, theta: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            Alpha::Identity => Ok(theta.to_vec()),
            Alpha::Log1p => Ok(theta.iter().map(|t| (t + 1.0).ln()).collect()),
            Alpha::Expm1 => Ok(theta.iter().map(|t| t.exp() - 1.0).collect()),
            Alpha::Jet(j) => {
                check_dim(j.dim(), theta.len())?;
                j.eval_complex(theta)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn presets_match_closed_forms() {
        let t = [Complex64::new(0.1, 0.05), Complex64::new(-0.2, 0.0)];
        for a in [Alpha::Identity, Alpha::Log1p, Alpha::Expm1] {
            let jet = a.jet(2, 24).unwrap();
            let exact = a.eval_complex(&t).unwrap();
            let series = jet.eval_complex(&t).unwrap();
            for (x, y) in exact.iter().zip(&series) {
                assert_relative_eq!(x.re, y.re, epsilon = 1e-14);
                assert_relative_eq!(x.im, y.im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn log1p_and_expm1_are_inverse() {
        let a = Alpha::Log1p.jet(2, 6).unwrap();
        let g = Alpha::Expm1.jet(2, 6).unwrap();
        assert!(a.invert().unwrap().max_abs_diff(&g).unwrap() < 1e-12);
    }

    #[test]
    fn jet_alpha_limits() {
        let j = Alpha::Jet(VectorJet::identity(2, 3));
        assert!(j.jet(2, 4).is_err());
        assert!(j.jet(3, 2).is_err());
        assert_eq!(j.jet(2, 2).unwrap(), VectorJet::identity(2, 2));
    }
}
