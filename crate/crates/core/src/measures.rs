//! Measure models: Laplace-transform jets (moment kernels), samplers,
//! 1D densities and the non-degeneracy check.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::combin::{factorial, index_space, merge_sorted};
use crate::error::{Error, Result};
use crate::jets::ScalarJet;
use crate::symtensor::{HilbertScale, SymTensor};

/// Samples drawn from one RNG stream before moving to the next.
pub const SAMPLE_BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureModel {
    /// Centered Gaussian with covariance `cov`: `l(θ) = exp(½<θ, Σθ>)`.
    Gaussian { cov: DMatrix<f64> },
    /// Independent Poisson coordinates with intensities `nu`:
    /// `l(θ) = exp(Σ_i ν_i (e^{θ_i} - 1))`.
    Poisson { nu: Vec<f64> },
    /// Point mass at the origin, `l ≡ 1`.
    Delta { dim: usize },
    /// Moment kernels read from a fixture; exact checks only.
    Moments { moments: ScalarJet },
}

impl MeasureModel {
    pub fn standard_gaussian(dim: usize) -> Self {
        MeasureModel::Gaussian {
            cov: DMatrix::identity(dim, dim),
        }
    }

    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || cov.nrows() == 0 {
            return Err(Error::config("cov", "covariance must be a non-empty square matrix"));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 * (1.0 + cov.amax()) {
            return Err(Error::config("cov", "covariance must be symmetric"));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if cov.clone().cholesky().is_none() {
            return Err(Error::config("cov", "covariance must be positive definite"));
        }
        Ok(MeasureModel::Gaussian { cov })
    }

    pub fn poisson(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() || nu.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("nu", "intensities must be positive and finite"));
        }
        Ok(MeasureModel::Poisson { nu })
    }

    pub fn from_moments(moments: ScalarJet) -> Result<Self> {
        if (moments.constant_term() - 1.0).abs() > 1e-12 {
            return Err(Error::config("moments", "zeroth moment must equal 1"));
        }
        Ok(MeasureModel::Moments { moments })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureModel::Gaussian { .. } => "gaussian",
            MeasureModel::Poisson { .. } => "poisson",
            MeasureModel::Delta { .. } => "delta",
            MeasureModel::Moments { .. } => "moments",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureModel::Gaussian { cov } => cov.nrows(),
            MeasureModel::Poisson { nu } => nu.len(),
            MeasureModel::Delta { dim } => *dim,
            MeasureModel::Moments { moments } => moments.dim(),
        }
    }

    /// Highest degree for which moment kernels are available.
    pub fn max_degree(&self) -> Option<usize> {
        match self {
            MeasureModel::Moments { moments } => Some(moments.degree()),
            _ => None,
        }
    }

    /// Laplace-transform jet: kernels are the moment kernels `M_n`.
    pub fn moment_kernels(&self, degree: usize) -> Result<ScalarJet> {
        let d = self.dim();
        match self {
            MeasureModel::Gaussian { cov } => {
                let mut f = ScalarJet::zero(d, degree);
                if degree >= 2 {
                    *f.kernel_mut(2) = SymTensor::from_symmetric_matrix(d, |i, j| cov[(i, j)]);
                }
                Ok(f.exp())
            }
            MeasureModel::Poisson { nu } => {
                let mut f = ScalarJet::zero(d, degree);
                for n in 1..=degree {
                    let k = f.kernel_mut(n);
                    for (i, &v) in nu.iter().enumerate() {
                        k.set(&vec![i; n], v);
                    }
                }
                Ok(f.exp())
            }
            MeasureModel::Delta { .. } => Ok(ScalarJet::unit(d, degree)),
            MeasureModel::Moments { moments } => {
                if degree > moments.degree() {
                    return Err(Error::DegreeOverflow {
                        requested: degree,
                        available: moments.degree(),
                    });
                }
                Ok(moments.truncated(degree))
            }
        }
    }

    /// Laplace transform at a complex point. Fixture-backed models use
    /// their truncated series.
    pub fn laplace(&self, theta: &[Complex64]) -> Result<Complex64> {
        crate::error::check_dim(self.dim(), theta.len())?;
        match self {
            MeasureModel::Gaussian { cov } => {
                let mut q = Complex64::new(0.0, 0.0);
                for i in 0..theta.len() {
                    for j in 0..theta.len() {
                        q += theta[i] * cov[(i, j)] * theta[j];
                    }
                }
                Ok((q * 0.5).exp())
            }
            MeasureModel::Poisson { nu } => {
                let s: Complex64 = nu
                    .iter()
                    .zip(theta)
                    .map(|(&v, t)| (t.exp() - 1.0) * v)
                    .sum();
                Ok(s.exp())
            }
            MeasureModel::Delta { .. } => Ok(Complex64::new(1.0, 0.0)),
            MeasureModel::Moments { moments } => moments.eval_complex(theta),
        }
    }

    pub fn has_sampler(&self) -> bool {
        !matches!(self, MeasureModel::Moments { .. })
    }

    /// `count` i.i.d. draws, reproducible for a fixed seed and independent of
    /// the number of worker threads: block `b` always uses stream `b`.
    pub fn sample_batch(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if !self.has_sampler() {
            return Err(Error::Unsupported(format!(
                "measure `{}` has no sampler",
                self.name()
            )));
        }
        let chol = match self {
            MeasureModel::Gaussian { cov } => Some(
                cov.clone()
                    .cholesky()
                    .ok_or_else(|| Error::Singular("covariance is not positive definite".into()))?
                    .l(),
            ),
            _ => None,
        };
        let blocks = count.div_ceil(SAMPLE_BLOCK);
        let out: Vec<Vec<Vec<f64>>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let len = SAMPLE_BLOCK.min(count - b * SAMPLE_BLOCK);
                (0..len).map(|_| self.draw(&mut rng, chol.as_ref())).collect()
            })
            .collect();
        Ok(out.into_iter().flatten().collect())
    }

    fn draw(&self, rng: &mut ChaCha8Rng, chol: Option<&DMatrix<f64>>) -> Vec<f64> {
        match self {
            MeasureModel::Gaussian { .. } => {
                let l = chol.expect("cholesky factor computed for gaussian");
                let z: Vec<f64> = (0..l.nrows()).map(|_| StandardNormal.sample(rng)).collect();
                (0..l.nrows())
                    .map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum())
                    .collect()
            }
            MeasureModel::Poisson { nu } => nu
                .iter()
                .map(|&v| Poisson::new(v).expect("positive intensity").sample(rng))
                .collect(),
            MeasureModel::Delta { dim } => vec![0.0; *dim],
            MeasureModel::Moments { .. } => unreachable!("no sampler"),
        }
    }

    /// Derivatives `ρ^{(k)}(x)`, `k = 0..=up_to`, of a one-dimensional
    /// Gaussian density, via `ρ^{(k)} = q_k ρ` with
    /// `q_{k+1} = q_k' - (x/σ²) q_k`.
    pub fn density_derivatives(&self, x: f64, up_to: usize) -> Result<Vec<f64>> {
        let var = match self {
            MeasureModel::Gaussian { cov } if cov.nrows() == 1 => cov[(0, 0)],
            _ => {
                return Err(Error::Unsupported(format!(
                    "density derivatives need a one-dimensional gaussian, got `{}`",
                    self.name()
                )))
            }
        };
        let rho = (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        // q as ascending polynomial coefficients
        let mut q = vec![1.0];
        let mut out = Vec::with_capacity(up_to + 1);
        for _ in 0..=up_to {
            let val: f64 = q.iter().rev().fold(0.0, |acc, c| acc * x + c);
            out.push(val * rho);
            let mut next = vec![0.0; q.len() + 1];
            for (i, &c) in q.iter().enumerate() {
                if i > 0 {
                    next[i - 1] += i as f64 * c;
                }
                next[i + 1] -= c / var;
            }
            q = next;
        }
        Ok(out)
    }

    /// Probability mass at `k` of a one-dimensional Poisson measure.
    pub fn pmf(&self, k: u64) -> Result<f64> {
        let nu = match self {
            MeasureModel::Poisson { nu } if nu.len() == 1 => nu[0],
            _ => {
                return Err(Error::Unsupported(format!(
                    "pmf needs a one-dimensional poisson measure, got `{}`",
                    self.name()
                )))
            }
        };
        let logp = k as f64 * nu.ln() - nu - ln_factorial(k);
        Ok(logp.exp())
    }

    /// Gram matrix of all monomials of degree `<= degree` under the measure
    /// and its smallest eigenvalue.
    pub fn nondegeneracy_check(&self, degree: usize) -> Result<NondegeneracyReport> {
        let d = self.dim();
        let moments = self.moment_kernels(2 * degree)?;
        let monomials: Vec<Vec<usize>> = (0..=degree)
            .flat_map(|n| index_space(d, n).tuples.clone())
            .collect();
        let size = monomials.len();
        let gram = DMatrix::from_fn(size, size, |r, c| {
            let idx = merge_sorted(&monomials[r], &monomials[c]);
            moments.kernel(idx.len()).get(&idx)
        });
        let eig = SymmetricEigen::new(gram);
        let min_eigenvalue = eig.eigenvalues.min();
        Ok(NondegeneracyReport {
            measure: self.name().to_string(),
            degree,
            size,
            min_eigenvalue,
            passes: min_eigenvalue > NONDEGENERACY_TOL,
        })
    }

    /// Fits `C` in `|<M_n, θ^{⊗n}>| <= n! C^n |θ|_p^n` over random
    /// directions, `1 <= n <= degree`.
    pub fn moment_growth(&self, degree: usize, p: f64, samples: usize, seed: u64) -> Result<MomentGrowthReport> {
        use rand::Rng;
        let d = self.dim();
        let moments = self.moment_kernels(degree)?;
        let scale = HilbertScale::new(d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fitted: f64 = 0.0;
        for _ in 0..samples {
            let theta: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = scale.vector_norm(&theta, p);
            if norm == 0.0 {
                continue;
            }
            for n in 1..=degree {
                let v = moments.kernel(n).eval_power(&theta)?.abs();
                let c = (v / factorial(n)).powf(1.0 / n as f64) / norm;
                fitted = fitted.max(c);
            }
        }
        Ok(MomentGrowthReport {
            measure: self.name().to_string(),
            degree,
            p,
            fitted_constant: fitted,
            passes: fitted.is_finite(),
        })
    }
}

pub const NONDEGENERACY_TOL: f64 = 1e-10;

fn ln_factorial(k: u64) -> f64 {
    if (k as usize) < 171 {
        factorial(k as usize).ln()
    } else {
        (1..=k).map(|i| (i as f64).ln()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub measure: String,
    pub degree: usize,
    pub size: usize,
    pub min_eigenvalue: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentGrowthReport {
    pub measure: String,
    pub degree: usize,
    pub p: f64,
    pub fitted_constant: f64,
    pub passes: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn values1(j: &ScalarJet) -> Vec<f64> {
        j.kernels().iter().map(|k| k.coeffs()[0]).collect()
    }

    #[test]
    fn delta_moments_are_trivial() {
        let m = MeasureModel::Delta { dim: 2 }.moment_kernels(4).unwrap();
        assert_eq!(m, ScalarJet::unit(2, 4));
    }

    #[test]
    fn gaussian_moments_are_double_factorials() {
        let m = MeasureModel::standard_gaussian(1).moment_kernels(8).unwrap();
        let want = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0];
        assert_eq!(values1(&m), want);

        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let m = MeasureModel::gaussian(cov).unwrap().moment_kernels(5).unwrap();
        for n in (1..=5).step_by(2) {
            assert!(m.kernel(n).is_zero());
        }
        // E[x1^2 x2^2] = Σ11 Σ22 + 2 Σ12^2
        assert_relative_eq!(m.kernel(4).get(&[0, 0, 1, 1]), 2.0 + 0.5, max_relative = 1e-12);
    }

    #[test]
    fn poisson_moments_are_bell_numbers() {
        let m = MeasureModel::poisson(vec![1.0]).unwrap().moment_kernels(7).unwrap();
        assert_eq!(values1(&m), [1.0, 1.0, 2.0, 5.0, 15.0, 52.0, 203.0, 877.0]);
    }

    #[test]
    fn fixture_model_limits() {
        let jet = MeasureModel::standard_gaussian(1).moment_kernels(4).unwrap();
        let model = MeasureModel::from_moments(jet).unwrap();
        assert!(model.moment_kernels(5).is_err());
        assert!(model.sample_batch(3, 1).is_err());
        assert!(MeasureModel::from_moments(ScalarJet::constant(1, 2, 2.0)).is_err());
    }

    #[test]
    fn sampler_statistics() {
        let pts = MeasureModel::Delta { dim: 2 }.sample_batch(10, 3).unwrap();
        assert!(pts.iter().all(|p| p == &vec![0.0, 0.0]));

        let n = 100_000;
        let g = MeasureModel::standard_gaussian(1).sample_batch(n, 11).unwrap();
        let mean: f64 = g.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());

        let p = MeasureModel::poisson(vec![2.0]).unwrap().sample_batch(n, 12).unwrap();
        let mean: f64 = p.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn sampler_is_deterministic() {
        let m = MeasureModel::poisson(vec![1.0, 3.0]).unwrap();
        let a = m.sample_batch(10_000, 5).unwrap();
        let b = m.sample_batch(10_000, 5).unwrap();
        assert_eq!(a, b);
        // a shorter batch is a prefix of a longer one
        let c = m.sample_batch(5_000, 5).unwrap();
        assert_eq!(&a[..5_000], &c[..]);
        assert_ne!(a, m.sample_batch(10_000, 6).unwrap());
    }

    #[test]
    fn gaussian_density_derivatives() {
        let g = MeasureModel::standard_gaussian(1);
        let at0 = g.density_derivatives(0.0, 2).unwrap();
        let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(at0[0], inv, max_relative = 1e-15);
        assert_relative_eq!(at0[2], -inv, max_relative = 1e-15);
        let at1 = g.density_derivatives(1.0, 1).unwrap();
        assert_relative_eq!(at1[1], -at1[0], max_relative = 1e-15);
        assert!(MeasureModel::poisson(vec![1.0]).unwrap().density_derivatives(0.0, 1).is_err());
    }

    #[test]
    fn nondegeneracy() {
        let r = MeasureModel::Delta { dim: 1 }.nondegeneracy_check(1).unwrap();
        assert!(!r.passes);
        let r = MeasureModel::standard_gaussian(1).nondegeneracy_check(3).unwrap();
        assert!(r.passes, "{r:?}");
        let r = MeasureModel::poisson(vec![1.0]).unwrap().nondegeneracy_check(3).unwrap();
        assert!(r.passes, "{r:?}");
        let r = MeasureModel::poisson(vec![1.0, 0.5]).unwrap().nondegeneracy_check(2).unwrap();
        assert_eq!(r.size, 6);
        assert!(r.passes);
    }

    #[test]
    fn laplace_matches_jet_and_monte_carlo() {
        let models = [
            MeasureModel::standard_gaussian(2),
            MeasureModel::poisson(vec![1.0, 0.5, 2.0]).unwrap(),
        ];
        for m in &models {
            let d = m.dim();
            let theta: Vec<f64> = (0..d).map(|i| 0.03 * (i as f64 + 1.0)).collect();
            let c: Vec<Complex64> = theta.iter().map(|&t| Complex64::new(t, 0.0)).collect();
            let exact = m.laplace(&c).unwrap().re;
            let jet = m.moment_kernels(14).unwrap().eval(&theta).unwrap();
            assert_relative_eq!(exact, jet, max_relative = 1e-9);

            let n = 100_000;
            let vals: Vec<f64> = m
                .sample_batch(n, 99)
                .unwrap()
                .iter()
                .map(|x| x.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>().exp())
                .collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - exact).abs() < 3.0 * se, "{} {mean} {exact} {se}", m.name());
        }
    }

    #[test]
    fn growth_fit_is_finite() {
        let r = MeasureModel::poisson(vec![1.0, 2.0])
            .unwrap()
            .moment_growth(6, 1.0, 64, 3)
            .unwrap();
        assert!(r.passes && r.fitted_constant > 0.0);
    }
}
