//! Change of measure between two Appell contexts sharing `α`, and change of
//! `α` for a fixed measure.

use crate::appell::{AppellBasis, Basis, KernelSeq};
use crate::combin::{binomial, factorial};
use crate::error::{Error, Result};
use crate::jets::ScalarJet;
use crate::symtensor::SymTensor;

fn check_compatible(mu: &AppellBasis, tilde: &AppellBasis) -> Result<()> {
    crate::error::check_dim(mu.dim(), tilde.dim())?;
    if mu.degree() != tilde.degree() {
        return Err(Error::DegreeOverflow {
            requested: tilde.degree(),
            available: mu.degree(),
        });
    }
    if mu.alpha_key() != tilde.alpha_key() {
        return Err(Error::BasisMismatch(
            "measure transport needs the same α on both sides; convert α first".into(),
        ));
    }
    Ok(())
}

/// Kernels of `l_{μ̃}(α(θ)) / l_μ(α(θ))`: grade `r` is
/// `Σ_{m+l=r} r!/(m!l!) P_m^{μ,α}(0) ⊗̂ M_l^{μ̃,α}`.
pub fn transfer_jet(mu: &AppellBasis, tilde: &AppellBasis) -> Result<ScalarJet> {
    check_compatible(mu, tilde)?;
    let u = ScalarJet::from_kernels(mu.dim(), mu.alpha_constants().to_vec())?;
    u.mul(tilde.alpha_moments())
}

/// Both sides of
/// `P_n^{μ,α}(x) = Σ_{k+m+l=n} n!/(k!m!l!) P_k^{μ̃,α}(x) ⊗̂ P_m^{μ,α}(0) ⊗̂ M_l^{μ̃,α}`.
pub fn p_relation(
    mu: &AppellBasis,
    tilde: &AppellBasis,
    n: usize,
    x: &[f64],
) -> Result<(SymTensor, SymTensor)> {
    check_compatible(mu, tilde)?;
    let lhs = mu.gen_appell_eval(n, x)?;
    let pt = tilde.gen_appell_jet(x)?;
    let u = mu.alpha_constants();
    let mt = tilde.alpha_moments();
    let mut rhs = SymTensor::zeros(mu.dim(), n);
    for k in 0..=n {
        for m in 0..=n - k {
            let l = n - k - m;
            let c = factorial(n) / (factorial(k) * factorial(m) * factorial(l));
            let t = pt
                .kernel(k)
                .sym_product_unchecked(&u[m])
                .sym_product_unchecked(mt.kernel(l));
            rhs.axpy_unchecked(c, &t);
        }
    }
    Ok((lhs, rhs))
}

/// Re-expands a `P^{μ,α}` test function in the `P^{μ̃,α}` basis:
/// `φ̃_n = Σ_{m,l} (n+m+l)!/(n!m!l!) (P_m^{μ,α}(0) ⊗̂ M_l^{μ̃,α}, φ_{n+m+l})`.
pub fn reorder_test(mu: &AppellBasis, tilde: &AppellBasis, phi: &KernelSeq) -> Result<KernelSeq> {
    let k = transfer_jet(mu, tilde)?;
    phi.require(Basis::Appell)?;
    if phi.owner() != mu.key() {
        return Err(Error::BasisMismatch("test function is not in the source basis".into()));
    }
    let deg = mu.degree();
    let phi = phi.with_degree(deg);
    let mut kernels: Vec<SymTensor> = (0..=deg).map(|n| SymTensor::zeros(mu.dim(), n)).collect();
    for j in 0..=deg {
        let pj = phi.kernel(j);
        if pj.is_zero() {
            continue;
        }
        for (n, out) in kernels.iter_mut().enumerate().take(j + 1) {
            out.axpy_unchecked(binomial(j, n), &pj.partial_pairing_unchecked(k.kernel(j - n)));
        }
    }
    tilde.test_function(kernels)
}

/// Moves a `Q^{μ̃,α}` distribution to the `Q^{μ,α}` basis:
/// `Φ_n = Σ_{k+m+l=n} 1/(m!l!) Φ̃_k ⊗̂ P_m^{μ,α}(0) ⊗̂ M_l^{μ̃,α}`.
pub fn transport_dist(tilde: &AppellBasis, mu: &AppellBasis, phi_tilde: &KernelSeq) -> Result<KernelSeq> {
    let k = transfer_jet(mu, tilde)?;
    phi_tilde.require(Basis::Dual)?;
    if phi_tilde.owner() != tilde.key() {
        return Err(Error::BasisMismatch("distribution is not in the source basis".into()));
    }
    let deg = mu.degree();
    let src = phi_tilde.with_degree(deg);
    let kernels = (0..=deg)
        .map(|n| {
            let mut acc = SymTensor::zeros(mu.dim(), n);
            for j in 0..=n {
                let pj = src.kernel(j);
                if !pj.is_zero() {
                    let r = n - j;
                    acc.axpy_unchecked(1.0 / factorial(r), &pj.sym_product_unchecked(k.kernel(r)));
                }
            }
            acc
        })
        .collect();
    mu.distribution(kernels)
}

fn check_same_measure(from: &AppellBasis, to: &AppellBasis) -> Result<()> {
    if from.measure_key() != to.measure_key() || from.degree() != to.degree() {
        return Err(Error::BasisMismatch(
            "α conversion needs the same measure and degree".into(),
        ));
    }
    Ok(())
}

/// Re-expresses a `Q^{μ,α}` distribution in the `Q^{μ,β}` basis of the same
/// measure by matching S-transforms.
pub fn change_alpha_dist(from: &AppellBasis, to: &AppellBasis, phi: &KernelSeq) -> Result<KernelSeq> {
    check_same_measure(from, to)?;
    to.s_inverse(&from.s_transform(phi)?)
}

/// Re-expresses a `P^{μ,α}` test function in another Appell basis through
/// its monomial form.
pub fn change_basis_test(from: &AppellBasis, to: &AppellBasis, phi: &KernelSeq) -> Result<KernelSeq> {
    to.to_appell(&from.to_monomial(phi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::Alpha;
    use crate::measures::MeasureModel;

    fn v1(t: &SymTensor) -> f64 {
        t.coeffs()[0]
    }

    #[test]
    fn gaussian_to_delta_hand_case() {
        let g = AppellBasis::new(MeasureModel::standard_gaussian(1), Alpha::Identity, 4).unwrap();
        let d = AppellBasis::new(MeasureModel::Delta { dim: 1 }, Alpha::Identity, 4).unwrap();
        let (l, r) = p_relation(&g, &d, 2, &[1.5]).unwrap();
        assert!((v1(&l) - (1.5f64 * 1.5 - 1.0)).abs() < 1e-14);
        assert!((v1(&l) - v1(&r)).abs() < 1e-14);

        // He_2 becomes x^2 - 1 in monomials
        let mut k: Vec<SymTensor> = (0..=4).map(|n| SymTensor::zeros(1, n)).collect();
        k[2] = SymTensor::from_vector(&[1.0]).sym_product(&SymTensor::from_vector(&[1.0])).unwrap();
        let he2 = g.test_function(k).unwrap();
        let mono = reorder_test(&g, &d, &he2).unwrap();
        let got: Vec<f64> = mono.kernels().iter().map(v1).collect();
        assert_eq!(got, [-1.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn alpha_mismatch_is_refused() {
        let a = AppellBasis::new(MeasureModel::standard_gaussian(1), Alpha::Identity, 3).unwrap();
        let b = AppellBasis::new(MeasureModel::poisson(vec![1.0]).unwrap(), Alpha::Log1p, 3).unwrap();
        assert!(matches!(p_relation(&a, &b, 1, &[0.0]), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn same_measure_transport_is_identity() {
        let a = AppellBasis::new(MeasureModel::poisson(vec![2.0]).unwrap(), Alpha::Log1p, 4).unwrap();
        let phi = a
            .distribution((0..=4).map(|n| SymTensor::from_fn(1, n, |_| n as f64 - 1.5)).collect())
            .unwrap();
        assert!(transport_dist(&a, &a, &phi).unwrap().max_abs_diff(&phi).unwrap() < 1e-13);
    }
}
