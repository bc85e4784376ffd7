//! Independent expectation engines: exact moments, Monte Carlo and
//! one-dimensional quadrature or pmf summation.

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;

use crate::appell::{AppellBasis, Basis, KernelSeq};
use crate::combin::{binomial, multiplicity};
use crate::error::{check_dim, Error, Result};
use crate::measures::MeasureModel;
use crate::symtensor::SymTensor;

/// `𝔼_μ f = Σ <M_n, f_n>` for a monomial polynomial.
pub fn exact_expectation(model: &MeasureModel, f: &KernelSeq) -> Result<f64> {
    f.require(Basis::Monomial)?;
    check_dim(model.dim(), f.dim())?;
    let deg = f.effective_degree();
    let m = model.moment_kernels(deg)?;
    let mut acc = 0.0;
    for n in 0..=deg {
        acc += m.kernel(n).pairing(f.kernel(n))?;
    }
    Ok(acc)
}

/// `𝔼_μ[φ ψ]` for two test functions of the same Appell basis.
pub fn exact_product_expectation(basis: &AppellBasis, phi: &KernelSeq, psi: &KernelSeq) -> Result<f64> {
    let prod = basis.to_monomial(phi)?.poly_mul(&basis.to_monomial(psi)?)?;
    basis.expect_monomial(&prod)
}

/// Monomial kernels of `x ↦ f(x + s)`.
pub fn shift_monomial(f: &KernelSeq, s: &[f64]) -> Result<KernelSeq> {
    f.require(Basis::Monomial)?;
    check_dim(f.dim(), s.len())?;
    let mut out = KernelSeq::zero(Basis::Monomial, 0, f.dim(), f.degree());
    for n in 0..=f.degree() {
        let c = f.kernel(n);
        if c.is_zero() {
            continue;
        }
        for k in 0..=n {
            let t = c.partial_pairing(&SymTensor::outer_power(s, n - k))?;
            out.kernel_mut(k).axpy(binomial(n, k), &t)?;
        }
    }
    Ok(out)
}

/// A monomial polynomial flattened to `Σ c_t Π x_{t_i}` over sorted index
/// tuples, for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct PolyEval {
    terms: Vec<(Vec<usize>, f64)>,
}

impl PolyEval {
    pub fn new(f: &KernelSeq) -> Result<Self> {
        f.require(Basis::Monomial)?;
        let terms = f
            .kernels()
            .iter()
            .flat_map(|k| k.entries())
            .filter(|(_, v)| *v != 0.0)
            .map(|(t, v)| {
                let c = v * multiplicity(&t);
                (t, c)
            })
            .collect();
        Ok(PolyEval { terms })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(t, c)| c * t.iter().map(|&i| x[i]).product::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Sample mean and standard error of `f` under `μ`.
pub fn mc_expectation<F>(model: &MeasureModel, f: F, count: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let pts = model.sample_batch(count, seed)?;
    Ok(mc_from_samples(&pts, f))
}

/// Same as [`mc_expectation`] on a fixed batch of samples.
pub fn mc_from_samples<F>(pts: &[Vec<f64>], f: F) -> McEstimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let vals: Vec<f64> = pts.par_iter().map(|x| f(x)).collect();
    let n = vals.len();
    if n == 0 {
        return McEstimate {
            mean: f64::NAN,
            stderr: f64::NAN,
            count: 0,
        };
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    McEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        count: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinements, or the pmf tail bound.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Gauss–Legendre order per panel.
const QUAD_ORDER: usize = 20;
const QUAD_MAX_PANELS: usize = 1 << 12;
const QUAD_TOL: f64 = 1e-12;
const PMF_TAIL: f64 = 1e-14;

/// `∫ f dμ` for a one-dimensional Gaussian (composite Gauss–Legendre on
/// `[-12σ, 12σ]`, panels doubled until successive estimates agree to
/// `1e-12`) or `Σ_k f(k) pmf(k)` for a one-dimensional Poisson measure
/// (summed until the remaining mass is below `1e-14`).
pub fn quad_1d<F: Fn(f64) -> f64>(model: &MeasureModel, f: F) -> Result<QuadResult> {
    match model {
        MeasureModel::Gaussian { cov } if cov.nrows() == 1 => {
            let sigma = cov[(0, 0)].sqrt();
            let l = 12.0 * sigma;
            let rule = GaussLegendre::new(QUAD_ORDER)
                .map_err(|e| Error::Unsupported(format!("quadrature rule: {e}")))?;
            let density = |x: f64| {
                (-0.5 * x * x / (sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            };
            let integrate = |panels: usize| -> f64 {
                let h = 2.0 * l / panels as f64;
                (0..panels)
                    .map(|i| {
                        let a = -l + i as f64 * h;
                        rule.integrate(a, a + h, |x| f(x) * density(x))
                    })
                    .sum()
            };
            let mut panels = 8;
            let mut prev = integrate(panels);
            let mut evaluations = panels * QUAD_ORDER;
            loop {
                panels *= 2;
                let cur = integrate(panels);
                evaluations += panels * QUAD_ORDER;
                let diff = (cur - prev).abs();
                if diff < QUAD_TOL * cur.abs().max(1.0) || panels >= QUAD_MAX_PANELS {
                    return Ok(QuadResult {
                        value: cur,
                        error_estimate: diff,
                        evaluations,
                    });
                }
                prev = cur;
            }
        }
        MeasureModel::Poisson { nu } if nu.len() == 1 => {
            let nu = nu[0];
            let mut sum = 0.0;
            let mut mass = 0.0;
            let mut k: u64 = 0;
            loop {
                let p = model.pmf(k)?;
                let term = f(k as f64) * p;
                sum += term;
                mass += p;
                // beyond the mode the tail is bounded by a geometric series
                let kf = k as f64;
                let tail = if kf + 1.0 > nu {
                    p * nu / (kf + 1.0 - nu)
                } else {
                    f64::INFINITY
                };
                if (tail < PMF_TAIL && term.abs() < PMF_TAIL * sum.abs().max(1.0)) || k > 100_000 {
                    return Ok(QuadResult {
                        value: sum,
                        error_estimate: tail.max((1.0 - mass).abs()),
                        evaluations: k as usize + 1,
                    });
                }
                k += 1;
            }
        }
        _ => Err(Error::Unsupported(format!(
            "one-dimensional quadrature needs a 1D gaussian or poisson measure, got `{}` in dimension {}",
            model.name(),
            model.dim()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::Alpha;
    use approx::assert_relative_eq;

    fn mono1(vals: &[f64]) -> KernelSeq {
        KernelSeq::monomial(
            1,
            vals.iter()
                .enumerate()
                .map(|(n, &v)| SymTensor::from_fn(1, n, |_| v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_moment_examples() {
        let g = MeasureModel::standard_gaussian(1);
        assert_eq!(exact_expectation(&g, &mono1(&[7.0])).unwrap(), 7.0);
        assert_eq!(exact_expectation(&g, &mono1(&[0.0, 0.0, 0.0, 0.0, 1.0])).unwrap(), 3.0);
        let p = MeasureModel::poisson(vec![1.0]).unwrap();
        assert_eq!(exact_expectation(&p, &mono1(&[0.0, 0.0, 0.0, 1.0])).unwrap(), 5.0);
    }

    #[test]
    fn product_expectation_examples() {
        let g = AppellBasis::new(MeasureModel::standard_gaussian(1), Alpha::Identity, 3).unwrap();
        let grade = |b: &AppellBasis, n: usize| {
            b.test_function(
                (0..=n)
                    .map(|k| SymTensor::from_fn(1, k, |_| if k == n { 1.0 } else { 0.0 }))
                    .collect(),
            )
            .unwrap()
        };
        let one = grade(&g, 0);
        assert_eq!(exact_product_expectation(&g, &one, &one).unwrap(), 1.0);
        assert_relative_eq!(exact_product_expectation(&g, &grade(&g, 2), &grade(&g, 2)).unwrap(), 2.0);
        let c = AppellBasis::new(MeasureModel::poisson(vec![1.0]).unwrap(), Alpha::Log1p, 3).unwrap();
        assert!(exact_product_expectation(&c, &grade(&c, 2), &grade(&c, 3)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_examples() {
        let g = MeasureModel::standard_gaussian(1);
        let c = mc_expectation(&g, |_| 7.0, 1000, 1).unwrap();
        assert_eq!((c.mean, c.stderr), (7.0, 0.0));
        let e = mc_expectation(&g, |x| x[0] * x[0], 100_000, 2).unwrap();
        assert!((e.mean - 1.0).abs() < 3.0 * e.stderr);
        assert!(mc_expectation(&MeasureModel::from_moments(g.moment_kernels(2).unwrap()).unwrap(), |_| 1.0, 10, 1).is_err());
    }

    #[test]
    fn shift_and_flat_eval() {
        let f = KernelSeq::monomial(
            2,
            (0..=3).map(|n| SymTensor::from_fn(2, n, |t| 1.0 + t.iter().sum::<usize>() as f64)).collect(),
        )
        .unwrap();
        let s = [0.4, -1.1];
        let g = shift_monomial(&f, &s).unwrap();
        let fast = PolyEval::new(&f).unwrap();
        for x in [[0.0, 0.0], [1.5, -0.3], [-2.0, 0.7]] {
            let xs = [x[0] + s[0], x[1] + s[1]];
            assert_relative_eq!(g.eval_monomial(&x).unwrap(), f.eval_monomial(&xs).unwrap(), epsilon = 1e-12);
            assert_relative_eq!(fast.eval(&x), f.eval_monomial(&x).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_examples() {
        let g = MeasureModel::standard_gaussian(1);
        assert_relative_eq!(quad_1d(&g, |_| 1.0).unwrap().value, 1.0, epsilon = 1e-12);
        let he2 = |x: f64| x * x - 1.0;
        assert_relative_eq!(quad_1d(&g, |x| he2(x) * he2(x)).unwrap().value, 2.0, epsilon = 1e-12);
        let p = MeasureModel::poisson(vec![1.0]).unwrap();
        let c1 = |x: f64| x - 1.0;
        assert_relative_eq!(quad_1d(&p, |x| c1(x) * c1(x)).unwrap().value, 1.0, epsilon = 1e-13);
        assert!(quad_1d(&MeasureModel::standard_gaussian(2), |_| 1.0).is_err());
    }
}
