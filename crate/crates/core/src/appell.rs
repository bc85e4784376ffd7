//! Generalized Appell systems `(P^{μ,α}, Q^{μ,α})` at finite dimension and
//! truncation degree: polynomials, dual kernels, basis changes, transforms,
//! pairings and norms.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::alpha::Alpha;
use crate::combin::{binomial, factorial, index_space};
use crate::error::{check_dim, Error, Result};
use crate::jets::{CompKernels, ScalarJet, VectorJet};
use crate::measures::MeasureModel;
use crate::symtensor::{HilbertScale, SymTensor};

/// Which expansion a kernel sequence refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `φ(z) = Σ <z^{⊗n}, φ_n>`.
    Monomial,
    /// `φ(z) = Σ <P_n^{μ,α}(z), φ_n>`.
    Appell,
    /// `Φ = Σ Q_n^{μ,α}(Φ_n)`.
    Dual,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Monomial => "monomial",
            Basis::Appell => "appell",
            Basis::Dual => "dual",
        }
    }
}

/// Graded kernels `k_0, …, k_N` (rank `n` at position `n`) together with the
/// basis they refer to. `owner` identifies the Appell context for the
/// `Appell` and `Dual` tags and is `0` for monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSeq {
    basis: Basis,
    owner: u64,
    dim: usize,
    kernels: Vec<SymTensor>,
}

impl KernelSeq {
    pub fn new(basis: Basis, owner: u64, dim: usize, kernels: Vec<SymTensor>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Unsupported("kernel sequence needs a grade-0 kernel".into()));
        }
        for (n, k) in kernels.iter().enumerate() {
            check_dim(dim, k.dim())?;
            if k.rank() != n {
                return Err(Error::RankMismatch {
                    left: n,
                    right: k.rank(),
                });
            }
        }
        let owner = if basis == Basis::Monomial { 0 } else { owner };
        Ok(KernelSeq {
            basis,
            owner,
            dim,
            kernels,
        })
    }

    pub fn monomial(dim: usize, kernels: Vec<SymTensor>) -> Result<Self> {
        Self::new(Basis::Monomial, 0, dim, kernels)
    }

    pub fn zero(basis: Basis, owner: u64, dim: usize, degree: usize) -> Self {
        KernelSeq {
            basis,
            owner: if basis == Basis::Monomial { 0 } else { owner },
            dim,
            kernels: (0..=degree).map(|n| SymTensor::zeros(dim, n)).collect(),
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn owner(&self) -> u64 {
        self.owner
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.kernels.len() - 1
    }

    pub fn kernel(&self, n: usize) -> &SymTensor {
        &self.kernels[n]
    }

    pub fn get(&self, n: usize) -> Option<&SymTensor> {
        self.kernels.get(n)
    }

    pub fn kernels(&self) -> &[SymTensor] {
        &self.kernels
    }

    pub fn kernel_mut(&mut self, n: usize) -> &mut SymTensor {
        &mut self.kernels[n]
    }

    /// Highest grade with a non-zero kernel (0 for the zero sequence).
    pub fn effective_degree(&self) -> usize {
        self.kernels.iter().rposition(|k| !k.is_zero()).unwrap_or(0)
    }

    /// Truncated or zero-padded copy.
    pub fn with_degree(&self, degree: usize) -> Self {
        let kernels = (0..=degree)
            .map(|n| {
                self.kernels
                    .get(n)
                    .cloned()
                    .unwrap_or_else(|| SymTensor::zeros(self.dim, n))
            })
            .collect();
        KernelSeq {
            kernels,
            ..self.clone()
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        if self.basis != other.basis || self.owner != other.owner {
            return Err(Error::BasisMismatch(format!(
                "{} vs {} kernel sequence from different contexts",
                self.basis.name(),
                other.basis.name()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let deg = self.degree().max(other.degree());
        let mut out = self.with_degree(deg);
        for (n, k) in other.kernels.iter().enumerate() {
            out.kernels[n].axpy_unchecked(1.0, k);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        KernelSeq {
            kernels: self.kernels.iter().map(|k| k.scaled(s)).collect(),
            ..self.clone()
        }
    }

    /// Largest coefficient difference, treating missing grades as zero.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        let deg = self.degree().max(other.degree());
        let (a, b) = (self.with_degree(deg), other.with_degree(deg));
        let mut worst: f64 = 0.0;
        for (x, y) in a.kernels.iter().zip(&b.kernels) {
            worst = worst.max(x.max_abs_diff(y)?);
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.kernels.iter().map(SymTensor::max_abs).fold(0.0, f64::max)
    }

    /// `Σ <z^{⊗n}, k_n>` for a monomial sequence.
    pub fn eval_monomial(&self, z: &[f64]) -> Result<f64> {
        self.require(Basis::Monomial)?;
        let mut acc = 0.0;
        for k in &self.kernels {
            acc += k.eval_power(z)?;
        }
        Ok(acc)
    }

    /// Pointwise product of two monomial polynomials.
    pub fn poly_mul(&self, other: &Self) -> Result<Self> {
        self.require(Basis::Monomial)?;
        other.require(Basis::Monomial)?;
        check_dim(self.dim, other.dim)?;
        let mut out = KernelSeq::zero(Basis::Monomial, 0, self.dim, self.degree() + other.degree());
        for (a, ka) in self.kernels.iter().enumerate() {
            if ka.is_zero() {
                continue;
            }
            for (b, kb) in other.kernels.iter().enumerate() {
                if !kb.is_zero() {
                    out.kernels[a + b].axpy_unchecked(1.0, &ka.sym_product_unchecked(kb));
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn require(&self, basis: Basis) -> Result<()> {
        if self.basis == basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch(format!(
                "expected a {} sequence, got {}",
                basis.name(),
                self.basis.name()
            )))
        }
    }
}

fn fingerprint<T: std::fmt::Debug>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    format!("{value:?}").hash(&mut h);
    h.finish()
}

/// Cached data for one choice of `(μ, α, d, N)`.
#[derive(Debug, Clone)]
pub struct AppellBasis {
    model: MeasureModel,
    alpha: Alpha,
    degree: usize,
    scale: HilbertScale,
    measure_key: u64,
    alpha_key: u64,
    key: u64,
    /// `M_n^μ` up to `2N` when the model allows it.
    moments: ScalarJet,
    m_jet: ScalarJet,
    /// `P_n^μ(0)`: kernels of `1/l_μ`.
    u_jet: ScalarJet,
    m_alpha: ScalarJet,
    /// `P_n^{μ,α}(0)`: kernels of `1/l_μ∘α`.
    u_alpha: ScalarJet,
    alpha_jet: VectorJet,
    g_jet: VectorJet,
    a: CompKernels,
    b: CompKernels,
}

impl AppellBasis {
    pub fn new(model: MeasureModel, alpha: Alpha, degree: usize) -> Result<Self> {
        let d = model.dim();
        let ext = match model.max_degree() {
            Some(avail) if avail < degree => {
                return Err(Error::DegreeOverflow {
                    requested: degree,
                    available: avail,
                })
            }
            Some(avail) => avail.min(2 * degree),
            None => 2 * degree,
        };
        let moments = model.moment_kernels(ext)?;
        let m_jet = moments.truncated(degree);
        let u_jet = m_jet.recip()?;
        let alpha_jet = alpha.jet(d, degree)?;
        let g_jet = alpha_jet.invert()?;
        let a = CompKernels::new(&alpha_jet);
        let b = CompKernels::new(&g_jet);
        let m_alpha = m_jet.compose_with(&a);
        let u_alpha = m_alpha.recip()?;
        let measure_key = fingerprint(&model);
        let alpha_key = fingerprint(&alpha_jet);
        let key = fingerprint(&(measure_key, alpha_key, degree));
        Ok(AppellBasis {
            model,
            alpha,
            degree,
            scale: HilbertScale::new(d),
            measure_key,
            alpha_key,
            key,
            moments,
            m_jet,
            u_jet,
            m_alpha,
            u_alpha,
            alpha_jet,
            g_jet,
            a,
            b,
        })
    }

    pub fn with_scale(mut self, scale: HilbertScale) -> Result<Self> {
        check_dim(self.dim(), scale.dim())?;
        self.scale = scale;
        Ok(self)
    }

    pub fn model(&self) -> &MeasureModel {
        &self.model
    }

    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn scale(&self) -> &HilbertScale {
        &self.scale
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn measure_key(&self) -> u64 {
        self.measure_key
    }

    pub fn alpha_key(&self) -> u64 {
        self.alpha_key
    }

    /// Moment kernels `M_n^μ`, up to twice the truncation degree when known.
    pub fn moments(&self) -> &ScalarJet {
        &self.moments
    }

    /// Moment kernels of `l_μ∘α`.
    pub fn alpha_moments(&self) -> &ScalarJet {
        &self.m_alpha
    }

    pub fn alpha_jet(&self) -> &VectorJet {
        &self.alpha_jet
    }

    pub fn inverse_alpha_jet(&self) -> &VectorJet {
        &self.g_jet
    }

    /// Tensor-power kernels `A_n^m` of `α`.
    pub fn a_kernels(&self) -> &CompKernels {
        &self.a
    }

    /// Tensor-power kernels `B_n^m` of `α^{-1}`.
    pub fn b_kernels(&self) -> &CompKernels {
        &self.b
    }

    fn check_grade(&self, n: usize) -> Result<()> {
        if n > self.degree {
            Err(Error::DegreeOverflow {
                requested: n,
                available: self.degree,
            })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        check_dim(self.dim(), z.len())?;
        if z.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    fn check_owned(&self, f: &KernelSeq, basis: Basis) -> Result<()> {
        f.require(basis)?;
        check_dim(self.dim(), f.dim())?;
        if f.owner() != self.key {
            return Err(Error::BasisMismatch(
                "kernel sequence belongs to a different measure or α; transport it first".into(),
            ));
        }
        if f.effective_degree() > self.degree {
            return Err(Error::DegreeOverflow {
                requested: f.effective_degree(),
                available: self.degree,
            });
        }
        Ok(())
    }

    /// Test function `Σ <P_n^{μ,α}, φ_n>` with the given kernels.
    pub fn test_function(&self, kernels: Vec<SymTensor>) -> Result<KernelSeq> {
        let f = KernelSeq::new(Basis::Appell, self.key, self.dim(), kernels)?;
        self.check_owned(&f, Basis::Appell)?;
        Ok(f.with_degree(self.degree))
    }

    /// Distribution `Σ Q_n^{μ,α}(Φ_n)` with the given kernels.
    pub fn distribution(&self, kernels: Vec<SymTensor>) -> Result<KernelSeq> {
        let f = KernelSeq::new(Basis::Dual, self.key, self.dim(), kernels)?;
        self.check_owned(&f, Basis::Dual)?;
        Ok(f.with_degree(self.degree))
    }

    /// `P_n^μ(0)`, `n = 0..=N`.
    pub fn appell_constants(&self) -> &[SymTensor] {
        self.u_jet.kernels()
    }

    /// `P_n^{μ,α}(0)`, `n = 0..=N`.
    pub fn alpha_constants(&self) -> &[SymTensor] {
        self.u_alpha.kernels()
    }

    /// Generating jet `exp<z,θ>/l_μ(θ)`; its kernels are `P_n^μ(z)`.
    pub fn appell_jet(&self, z: &[f64]) -> Result<ScalarJet> {
        self.check_point(z)?;
        Ok(ScalarJet::exp_linear(z, self.degree).mul_unchecked(&self.u_jet))
    }

    /// Generating jet `exp<z,α(θ)>/l_μ(α(θ))`; its kernels are `P_n^{μ,α}(z)`.
    pub fn gen_appell_jet(&self, z: &[f64]) -> Result<ScalarJet> {
        Ok(self.appell_jet(z)?.compose_with(&self.a))
    }

    /// Generating jet `exp<w,α(θ)>`; its kernels are `P_n^{δ_0,α}(w)`.
    pub fn delta_appell_jet(&self, w: &[f64]) -> Result<ScalarJet> {
        self.check_point(w)?;
        Ok(ScalarJet::exp_linear(w, self.degree).compose_with(&self.a))
    }

    pub fn appell_eval(&self, n: usize, z: &[f64]) -> Result<SymTensor> {
        self.check_grade(n)?;
        Ok(self.appell_jet(z)?.kernel(n).clone())
    }

    pub fn gen_appell_eval(&self, n: usize, z: &[f64]) -> Result<SymTensor> {
        self.check_grade(n)?;
        Ok(self.gen_appell_jet(z)?.kernel(n).clone())
    }

    pub fn delta_appell_eval(&self, n: usize, w: &[f64]) -> Result<SymTensor> {
        self.check_grade(n)?;
        Ok(self.delta_appell_jet(w)?.kernel(n).clone())
    }

    /// Monomial kernels of `x ↦ <P_m^μ(x), h>`.
    pub fn appell_mu_to_monomial(&self, h: &SymTensor) -> Result<KernelSeq> {
        let m = h.rank();
        self.check_grade(m)?;
        check_dim(self.dim(), h.dim())?;
        let mut out = KernelSeq::zero(Basis::Monomial, 0, self.dim(), m);
        for k in 0..=m {
            let u = self.u_jet.kernel(m - k);
            out.kernels[k].axpy_unchecked(binomial(m, k), &h.partial_pairing_unchecked(u));
        }
        Ok(out)
    }

    /// Rewrites `Σ <P_n^{μ,α}, f_n>` in monomials.
    pub fn to_monomial(&self, f: &KernelSeq) -> Result<KernelSeq> {
        self.check_owned(f, Basis::Appell)?;
        let d = self.dim();
        let mut out = KernelSeq::zero(Basis::Monomial, 0, d, self.degree);
        for n in 0..=f.effective_degree() {
            let fnk = f.kernel(n);
            if fnk.is_zero() {
                continue;
            }
            for m in 0..=n {
                let h = self.a.contract_inputs(n, m, fnk);
                if h.is_zero() {
                    continue;
                }
                let s = 1.0 / factorial(m);
                for k in 0..=m {
                    let u = self.u_jet.kernel(m - k);
                    out.kernels[k].axpy_unchecked(s * binomial(m, k), &h.partial_pairing_unchecked(u));
                }
            }
        }
        Ok(out)
    }

    /// Rewrites a monomial polynomial of degree `<= N` in the `P^{μ,α}` basis.
    pub fn to_appell(&self, c: &KernelSeq) -> Result<KernelSeq> {
        c.require(Basis::Monomial)?;
        check_dim(self.dim(), c.dim())?;
        let deg = c.effective_degree();
        self.check_grade(deg)?;
        let mut out = KernelSeq::zero(Basis::Appell, self.key, self.dim(), self.degree);
        for n in 0..=deg {
            let cn = c.kernel(n);
            if cn.is_zero() {
                continue;
            }
            for k in 0..=n {
                let t = cn.partial_pairing_unchecked(self.m_jet.kernel(n - k));
                if t.is_zero() {
                    continue;
                }
                let bnk = binomial(n, k);
                for m in 0..=k {
                    let s = bnk / factorial(m);
                    out.kernels[m].axpy_unchecked(s, &self.b.contract_inputs(k, m, &t));
                }
            }
        }
        Ok(out)
    }

    /// `<ξ, g_α(∇)> f` on a monomial polynomial of degree `<= N`.
    pub fn g_nabla_apply(&self, xi: &[f64], f: &KernelSeq) -> Result<KernelSeq> {
        check_dim(self.dim(), xi.len())?;
        f.require(Basis::Monomial)?;
        let deg = f.effective_degree();
        self.check_grade(deg)?;
        let mut out = KernelSeq::zero(Basis::Monomial, 0, self.dim(), f.degree());
        for n in 1..=deg {
            let phi = self.g_jet.contract_output(n, xi);
            if phi.is_zero() {
                continue;
            }
            let term = diff_op(&phi, f)?;
            out = out.add(&term.scaled(1.0 / factorial(n)))?;
        }
        Ok(out)
    }

    /// `Q_n^{μ,α}(Φ)` as a graded sequence with `Φ` at grade `rank(Φ)`.
    pub fn q_kernel_make(&self, phi: &SymTensor) -> Result<KernelSeq> {
        check_dim(self.dim(), phi.dim())?;
        self.check_grade(phi.rank())?;
        let mut out = KernelSeq::zero(Basis::Dual, self.key, self.dim(), self.degree);
        out.kernels[phi.rank()] = phi.clone();
        Ok(out)
    }

    /// `S_μΦ(θ) = Σ_n <Φ_n, g_α(θ)^{⊗n}>` as a jet.
    pub fn s_transform(&self, phi: &KernelSeq) -> Result<ScalarJet> {
        self.check_owned(phi, Basis::Dual)?;
        let kernels = (0..=self.degree)
            .map(|m| {
                let mut acc = SymTensor::zeros(self.dim(), m);
                for n in 0..=m.min(phi.degree()) {
                    let k = phi.kernel(n);
                    if !k.is_zero() {
                        acc.axpy_unchecked(1.0, &self.b.contract_outputs(m, n, k));
                    }
                }
                acc
            })
            .collect();
        ScalarJet::from_kernels(self.dim(), kernels)
    }

    /// Inverse of [`Self::s_transform`] on jets of degree `N`.
    pub fn s_inverse(&self, s: &ScalarJet) -> Result<KernelSeq> {
        check_dim(self.dim(), s.dim())?;
        if s.degree() != self.degree {
            return Err(Error::DegreeOverflow {
                requested: s.degree(),
                available: self.degree,
            });
        }
        // S∘α has kernels n!Φ_n
        let composed = s.compose_with(&self.a);
        let kernels = composed
            .kernels()
            .iter()
            .enumerate()
            .map(|(n, k)| k.scaled(1.0 / factorial(n)))
            .collect();
        KernelSeq::new(Basis::Dual, self.key, self.dim(), kernels)
    }

    /// `<<Φ, φ>>_μ = Σ n! <Φ_n, φ_n>`.
    pub fn pair(&self, big_phi: &KernelSeq, phi: &KernelSeq) -> Result<f64> {
        self.check_owned(big_phi, Basis::Dual)?;
        self.check_owned(phi, Basis::Appell)?;
        let top = big_phi.degree().min(phi.degree());
        let mut acc = 0.0;
        for n in 0..=top {
            acc += factorial(n) * big_phi.kernel(n).pairing_unchecked(phi.kernel(n));
        }
        Ok(acc)
    }

    /// `φ(z) = Σ <P_n^{μ,α}(z), φ_n>`.
    pub fn eval_test(&self, phi: &KernelSeq, z: &[f64]) -> Result<f64> {
        self.check_owned(phi, Basis::Appell)?;
        let p = self.gen_appell_jet(z)?;
        let mut acc = 0.0;
        for n in 0..=phi.effective_degree() {
            acc += p.kernel(n).pairing_unchecked(phi.kernel(n));
        }
        Ok(acc)
    }

    /// `δ_z` with grade-`n` kernel `P_n^{μ,α}(z)/n!`.
    pub fn delta_z(&self, z: &[f64]) -> Result<KernelSeq> {
        let p = self.gen_appell_jet(z)?;
        let kernels = p
            .kernels()
            .iter()
            .enumerate()
            .map(|(n, k)| k.scaled(1.0 / factorial(n)))
            .collect();
        KernelSeq::new(Basis::Dual, self.key, self.dim(), kernels)
    }

    /// `ρ_μ^α(z, ·)` with grade-`n` kernel `P_n^{δ_0,α}(-z)/n!`; pairing it
    /// with `φ` gives `∫ φ(x - z) dμ(x)`.
    pub fn radon_nikodym(&self, z: &[f64]) -> Result<KernelSeq> {
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let p = self.delta_appell_jet(&neg)?;
        let kernels = p
            .kernels()
            .iter()
            .enumerate()
            .map(|(n, k)| k.scaled(1.0 / factorial(n)))
            .collect();
        KernelSeq::new(Basis::Dual, self.key, self.dim(), kernels)
    }

    /// `C_μφ(z) = Σ <z^{⊗n}, φ_n>`; only for `α = id`.
    pub fn convolution(&self, phi: &KernelSeq, z: &[f64]) -> Result<f64> {
        if !self.alpha.is_identity() {
            return Err(Error::Unsupported(
                "the convolution formula needs the identity reparametrization".into(),
            ));
        }
        self.check_owned(phi, Basis::Appell)?;
        self.check_point(z)?;
        let mut acc = 0.0;
        for k in phi.kernels() {
            acc += k.eval_power(z)?;
        }
        Ok(acc)
    }

    /// `C_μφ` as a jet: kernel `n! φ_n`; only for `α = id`.
    pub fn convolution_jet(&self, phi: &KernelSeq) -> Result<ScalarJet> {
        if !self.alpha.is_identity() {
            return Err(Error::Unsupported(
                "the convolution formula needs the identity reparametrization".into(),
            ));
        }
        self.check_owned(phi, Basis::Appell)?;
        let kernels = phi
            .with_degree(self.degree)
            .kernels()
            .iter()
            .enumerate()
            .map(|(n, k)| k.scaled(factorial(n)))
            .collect();
        ScalarJet::from_kernels(self.dim(), kernels)
    }

    /// `𝔼_μ f` for a monomial polynomial from the moment kernels.
    pub fn expect_monomial(&self, f: &KernelSeq) -> Result<f64> {
        f.require(Basis::Monomial)?;
        check_dim(self.dim(), f.dim())?;
        let deg = f.effective_degree();
        if deg > self.moments.degree() {
            return Err(Error::DegreeOverflow {
                requested: deg,
                available: self.moments.degree(),
            });
        }
        let mut acc = 0.0;
        for n in 0..=deg {
            acc += self.moments.kernel(n).pairing_unchecked(f.kernel(n));
        }
        Ok(acc)
    }

    /// `S_μ` of the test function `φ` viewed as the distribution `φ·μ`:
    /// kernels `𝔼_μ[φ P_n^μ]`.
    pub fn s_transform_test(&self, phi: &KernelSeq) -> Result<ScalarJet> {
        let mono = self.to_monomial(phi)?;
        let d = self.dim();
        let kernels = (0..=self.degree)
            .map(|n| {
                let space = index_space(d, n);
                let coeffs = space
                    .tuples
                    .iter()
                    .map(|s| {
                        let poly = self.appell_mu_to_monomial(&SymTensor::coordinate_dual(d, s))?;
                        self.expect_monomial(&mono.poly_mul(&poly)?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                SymTensor::from_coeffs(d, n, coeffs)
            })
            .collect::<Result<Vec<_>>>()?;
        ScalarJet::from_kernels(d, kernels)
    }

    /// `‖φ‖_{p,q}² = Σ (n!)² 2^{nq} |φ_n|_p²`.
    pub fn test_norm(&self, phi: &KernelSeq, p: f64, q: f64) -> Result<f64> {
        phi.require(Basis::Appell)?;
        let mut acc = 0.0;
        for (n, k) in phi.kernels().iter().enumerate() {
            let f = factorial(n);
            acc += f * f * 2f64.powf(n as f64 * q) * k.norm(p, &self.scale)?.powi(2);
        }
        Ok(acc.sqrt())
    }

    /// `‖Φ‖_{-p,-q,β}² = Σ (n!)^{1-β} 2^{-nq} |Φ_n|_{-p}²`.
    pub fn dist_norm(&self, big_phi: &KernelSeq, p: f64, q: f64, beta: f64) -> Result<f64> {
        big_phi.require(Basis::Dual)?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::config("beta", "must lie in [0, 1]"));
        }
        Ok(dist_norm_raw(big_phi, p, q, beta, &self.scale)?)
    }

    /// Largest radius `σ` such that sampled points of the complex sphere
    /// `|θ|_p = σ` satisfy `|α(θ)|_p <= ε` and `|l_μ(α(θ))| >= 1/2`.
    /// Heuristic: bisection on sampled spheres followed by refinement rounds
    /// with fresh samples.
    pub fn sigma_epsilon(&self, p: f64, epsilon: f64, seed: u64) -> Result<f64> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hi = 1.0;
        while self.sphere_ok(hi, p, epsilon, &mut rng)? {
            hi *= 2.0;
            if hi > 1e6 {
                return Ok(hi);
            }
        }
        let mut lo = 0.0;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.sphere_ok(mid, p, epsilon, &mut rng)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for _ in 0..SIGMA_REFINE_ROUNDS {
            while lo > 0.0 && !self.sphere_ok(lo, p, epsilon, &mut rng)? {
                lo *= 0.9;
            }
        }
        Ok(lo)
    }

    fn sphere_ok(&self, sigma: f64, p: f64, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<bool> {
        let d = self.dim();
        for i in 0..SIGMA_SAMPLES {
            let theta: Vec<Complex64> = if i % 2 == 0 {
                // real direction with a complex phase
                let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
                (0..d)
                    .map(|_| phase * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            } else {
                (0..d)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect()
            };
            let norm = self.scale.complex_norm(&theta, p);
            if norm == 0.0 {
                continue;
            }
            let theta: Vec<Complex64> = theta.iter().map(|t| t * (sigma / norm)).collect();
            let a = self.alpha.eval_complex(&theta)?;
            if a.iter().any(|v| !v.is_finite()) {
                return Ok(false);
            }
            if !(self.scale.complex_norm(&a, p) <= epsilon) {
                return Ok(false);
            }
            let l = self.model.laplace(&a)?;
            if !(l.norm() >= 0.5) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks `|<P_n^{μ,α}(z), θ^{⊗n}>| <= 2 n! σ_ε^{-n} exp(ε|z|_{-p}) |θ|_p^n`
    /// on random `z` in `[-radius, radius]^d` and random directions `θ`, and
    /// records the tensor-norm ratio at `p + 1` alongside.
    pub fn p_alpha6_check(
        &self,
        p: f64,
        epsilon: f64,
        samples: usize,
        radius: f64,
        seed: u64,
    ) -> Result<Palpha6Report> {
        let sigma = self.sigma_epsilon(p, epsilon, seed)?;
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut violations = 0;
        let mut worst_ratio: f64 = 0.0;
        let mut worst_tensor_ratio: f64 = 0.0;
        for _ in 0..samples {
            let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-radius..=radius)).collect();
            let jet = self.gen_appell_jet(&z)?;
            let growth = (epsilon * self.scale.vector_norm(&z, -p)).exp();
            let dirs: Vec<Vec<f64>> = (0..PA6_DIRECTIONS)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let n = self.scale.vector_norm(&v, p);
                    v.iter().map(|x| x / n).collect()
                })
                .collect();
            for n in 0..=self.degree {
                let bound = 2.0 * factorial(n) * sigma.powi(-(n as i32)) * growth;
                let k = jet.kernel(n);
                for theta in &dirs {
                    let r = k.eval_power(theta)?.abs() / bound;
                    worst_ratio = worst_ratio.max(r);
                    if r > 1.0 {
                        violations += 1;
                    }
                }
                worst_tensor_ratio = worst_tensor_ratio.max(k.norm(-(p + 1.0), &self.scale)? / bound);
            }
        }
        Ok(Palpha6Report {
            sigma_epsilon: sigma,
            epsilon,
            p,
            samples,
            worst_ratio,
            worst_tensor_ratio,
            violations,
            passes: violations == 0 && sigma > 0.0 && worst_ratio.is_finite(),
        })
    }

    /// Sweeps `|φ(z)| / (‖φ‖_{p,q} exp(ε|z|_{-p}))` over `trials` random
    /// points `z = r u` with `r` uniform in `[0, radius]`. The fitted constant
    /// is the largest ratio; the check passes when it is finite and is not
    /// attained in the outermost tenth of the ball.
    pub fn growth_bound_check(
        &self,
        phi: &KernelSeq,
        bounds: GrowthParams,
        seed: u64,
    ) -> Result<GrowthReport> {
        let GrowthParams {
            p,
            q,
            epsilon,
            trials,
            radius,
        } = bounds;
        let norm = self.test_norm(phi, p, q)?;
        if norm == 0.0 {
            return Err(Error::Singular("zero test function".into()));
        }
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fitted: f64 = 0.0;
        let mut at_radius = 0.0;
        for _ in 0..trials {
            let u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let len = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r = rng.gen_range(0.0..=radius);
            let z: Vec<f64> = u.iter().map(|x| x * r / len).collect();
            let val = self.eval_test(phi, &z)?.abs();
            let ratio = val / (norm * (epsilon * self.scale.vector_norm(&z, -p)).exp());
            if ratio > fitted {
                fitted = ratio;
                at_radius = r;
            }
        }
        Ok(GrowthReport {
            epsilon,
            p,
            q,
            trials,
            radius,
            fitted_constant: fitted,
            argmax_radius: at_radius,
            passes: fitted.is_finite() && at_radius <= 0.9 * radius,
        })
    }
}

const SIGMA_SAMPLES: usize = 512;
const SIGMA_REFINE_ROUNDS: usize = 3;
const PA6_DIRECTIONS: usize = 8;

pub(crate) fn dist_norm_raw(
    big_phi: &KernelSeq,
    p: f64,
    q: f64,
    beta: f64,
    scale: &HilbertScale,
) -> Result<f64> {
    let mut acc = 0.0;
    for (n, k) in big_phi.kernels().iter().enumerate() {
        acc += factorial(n).powf(1.0 - beta) * 2f64.powf(-(n as f64) * q) * k.norm(-p, scale)?.powi(2);
    }
    Ok(acc.sqrt())
}

/// `D(Φ)` on a monomial polynomial: grade `m` contributes
/// `m!/(m-n)! (Φ, f_m)` at grade `m - n`.
pub fn diff_op(phi: &SymTensor, f: &KernelSeq) -> Result<KernelSeq> {
    f.require(Basis::Monomial)?;
    check_dim(phi.dim(), f.dim())?;
    let n = phi.rank();
    let mut out = KernelSeq::zero(Basis::Monomial, 0, f.dim(), f.degree());
    for m in n..=f.degree() {
        let fm = f.kernel(m);
        if fm.is_zero() {
            continue;
        }
        let s = factorial(m) / factorial(m - n);
        out.kernels[m - n].axpy_unchecked(s, &fm.partial_pairing_unchecked(phi));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams {
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub epsilon: f64,
    pub p: f64,
    pub q: f64,
    pub trials: usize,
    pub radius: f64,
    pub fitted_constant: f64,
    pub argmax_radius: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Palpha6Report {
    pub sigma_epsilon: f64,
    pub epsilon: f64,
    pub p: f64,
    pub samples: usize,
    pub worst_ratio: f64,
    pub worst_tensor_ratio: f64,
    pub violations: usize,
    pub passes: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v1(t: &SymTensor) -> f64 {
        t.coeffs()[0]
    }

    fn scalars(dim: usize, vals: &[f64]) -> Vec<SymTensor> {
        vals.iter()
            .enumerate()
            .map(|(n, &v)| SymTensor::from_fn(dim, n, |_| v))
            .collect()
    }

    fn gauss1() -> AppellBasis {
        AppellBasis::new(MeasureModel::standard_gaussian(1), Alpha::Identity, 6).unwrap()
    }

    fn charlier() -> AppellBasis {
        AppellBasis::new(MeasureModel::poisson(vec![1.0]).unwrap(), Alpha::Log1p, 6).unwrap()
    }

    #[test]
    fn constants() {
        let delta = AppellBasis::new(MeasureModel::Delta { dim: 2 }, Alpha::Identity, 4).unwrap();
        assert!(delta.appell_constants()[1..].iter().all(SymTensor::is_zero));
        let g: Vec<f64> = gauss1().appell_constants().iter().map(v1).collect();
        assert_eq!(g, [1.0, 0.0, -1.0, 0.0, 3.0, 0.0, -15.0]);
    }

    #[test]
    fn hermite_and_charlier_values() {
        let g = gauss1();
        assert_relative_eq!(v1(&g.appell_eval(2, &[3.0]).unwrap()), 8.0);
        let c = charlier();
        for x in [0.0, 1.0, 2.5] {
            assert_relative_eq!(
                v1(&c.gen_appell_eval(2, &[x]).unwrap()),
                x * x - 3.0 * x + 1.0,
                epsilon = 1e-12
            );
        }
        let w = v1(&c.delta_appell_eval(2, &[3.0]).unwrap());
        assert_relative_eq!(w, 6.0, epsilon = 1e-12);
        let delta = AppellBasis::new(MeasureModel::Delta { dim: 1 }, Alpha::Identity, 3).unwrap();
        assert_relative_eq!(v1(&delta.appell_eval(3, &[2.0]).unwrap()), 8.0);
        assert!(g.appell_eval(7, &[0.0]).is_err());
    }

    #[test]
    fn basis_changes() {
        let g = gauss1();
        let x2 = KernelSeq::monomial(1, scalars(1, &[0.0, 0.0, 1.0])).unwrap();
        let he = g.to_appell(&x2).unwrap();
        let got: Vec<f64> = he.kernels()[..3].iter().map(v1).collect();
        assert_eq!(got, [1.0, 0.0, 1.0]);
        assert!(g.to_monomial(&he).unwrap().max_abs_diff(&x2).unwrap() < 1e-12);

        let c = charlier();
        let f = c.test_function(scalars(1, &[0.5, -1.0, 2.0, 0.25])).unwrap();
        let back = c.to_appell(&c.to_monomial(&f).unwrap()).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-12);
        for z in [-1.0, 0.3, 4.0] {
            assert_relative_eq!(
                c.eval_test(&f, &[z]).unwrap(),
                c.to_monomial(&f).unwrap().eval_monomial(&[z]).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn differential_operators() {
        let x2 = KernelSeq::monomial(1, scalars(1, &[0.0, 0.0, 1.0])).unwrap();
        let d = diff_op(&SymTensor::from_vector(&[1.0]), &x2).unwrap();
        assert_eq!(d.kernels().iter().map(v1).collect::<Vec<_>>(), [0.0, 2.0, 0.0]);
        // D(ξ) applied twice equals D(ξ⊗̂ξ)
        let xi = SymTensor::from_vector(&[0.7, -1.3]);
        let cubic = KernelSeq::monomial(
            2,
            (0..4)
                .map(|n| SymTensor::from_fn(2, n, |s| 0.3 + s.iter().sum::<usize>() as f64 - n as f64 * 0.7))
                .collect(),
        )
        .unwrap();
        let twice = diff_op(&xi, &diff_op(&xi, &cubic).unwrap()).unwrap();
        let once = diff_op(&xi.sym_product(&xi).unwrap(), &cubic).unwrap();
        assert!(twice.max_abs_diff(&once).unwrap() < 1e-12);
        let high = diff_op(&SymTensor::outer_power(&[1.0, 1.0], 4), &cubic).unwrap();
        assert!(high.max_abs() == 0.0);

        let x3 = KernelSeq::monomial(1, scalars(1, &[0.0, 0.0, 0.0, 1.0])).unwrap();
        let shift = charlier().g_nabla_apply(&[1.0], &x3).unwrap();
        assert_eq!(
            shift.kernels().iter().map(v1).collect::<Vec<_>>(),
            [1.0, 3.0, 3.0, 0.0]
        );
        let plain = gauss1().g_nabla_apply(&[1.0], &x2).unwrap();
        assert_eq!(plain.kernels().iter().map(v1).collect::<Vec<_>>(), [0.0, 2.0, 0.0]);
    }

    #[test]
    fn pairing_and_delta() {
        let g = gauss1();
        let x2 = g
            .to_appell(&KernelSeq::monomial(1, scalars(1, &[0.0, 0.0, 1.0])).unwrap())
            .unwrap();
        let dz = g.delta_z(&[2.0]).unwrap();
        assert_relative_eq!(g.pair(&dz, &x2).unwrap(), 4.0, epsilon = 1e-12);
        let rho = g.radon_nikodym(&[1.0]).unwrap();
        assert_relative_eq!(g.pair(&rho, &x2).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(g.convolution(&x2, &[2.0]).unwrap(), 5.0, epsilon = 1e-12);
        assert!(charlier().convolution(&charlier().test_function(scalars(1, &[1.0])).unwrap(), &[0.0]).is_err());

        // foreign sequences are refused
        let c = charlier();
        assert!(matches!(c.pair(&dz, &x2), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn s_transform_identity_alpha() {
        let g = gauss1();
        let phi = g.q_kernel_make(&SymTensor::from_vector(&[2.5])).unwrap();
        let s = g.s_transform(&phi).unwrap();
        assert_eq!(v1(s.kernel(1)), 2.5);
        assert!(s.kernels().iter().enumerate().all(|(n, k)| n == 1 || k.is_zero()));
        let back = g.s_inverse(&s).unwrap();
        assert!(back.max_abs_diff(&phi).unwrap() < 1e-14);
    }

    #[test]
    fn s_versus_convolution() {
        let f = |b: &AppellBasis| b.test_function(scalars(1, &[0.3, -0.5, 0.7, 0.2])).unwrap();
        let g = gauss1();
        let phi = f(&g);
        let diff = g.s_transform_test(&phi).unwrap().max_abs_diff(&g.convolution_jet(&phi).unwrap()).unwrap();
        assert!(diff < 1e-10, "{diff}");
        let p = AppellBasis::new(MeasureModel::poisson(vec![1.0]).unwrap(), Alpha::Identity, 6).unwrap();
        let phi = f(&p);
        let diff = p.s_transform_test(&phi).unwrap().max_abs_diff(&p.convolution_jet(&phi).unwrap()).unwrap();
        assert!(diff > 1e-3);
    }

    #[test]
    fn norms() {
        let g = gauss1();
        let c = g.test_function(vec![SymTensor::scalar(1, -3.0)]).unwrap();
        assert_eq!(g.test_norm(&c, 1.0, 2.0).unwrap(), 3.0);
        let dc = g.distribution(vec![SymTensor::scalar(1, -3.0)]).unwrap();
        assert_eq!(g.dist_norm(&dc, 1.0, 2.0, 0.5).unwrap(), 3.0);
        let big = g.distribution(scalars(1, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        let n0 = g.dist_norm(&big, 0.0, 0.0, 0.0).unwrap();
        let n1 = g.dist_norm(&big, 0.0, 0.0, 1.0).unwrap();
        assert!(n0 > n1);
        assert!(g.dist_norm(&big, 0.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn sigma_and_growth() {
        let g = gauss1();
        let s = g.sigma_epsilon(1.0, 1.0, 7).unwrap();
        // |l(θ)| = exp(Re θ²/2) >= 1/2 needs |θ|² <= 2 ln 2, and |θ| <= ε
        assert!(s > 0.5 && s <= 1.0 + 1e-9, "{s}");
        let r = g.p_alpha6_check(1.0, 1.0, 200, 5.0, 3).unwrap();
        assert!(r.passes, "{r:?}");

        let he4 = g.test_function(scalars(1, &[0.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        let params = GrowthParams {
            p: 1.0,
            q: 0.0,
            epsilon: 1.0,
            trials: 2000,
            radius: 10.0,
        };
        let a = g.growth_bound_check(&he4, params, 1).unwrap();
        assert!(a.passes, "{a:?}");
        let b = g
            .growth_bound_check(&he4, GrowthParams { epsilon: 2.0, ..params }, 1)
            .unwrap();
        assert!(b.fitted_constant <= a.fitted_constant);
        let one = g.test_function(vec![SymTensor::scalar(1, 1.0)]).unwrap();
        let c = g.growth_bound_check(&one, params, 1).unwrap();
        assert!(c.fitted_constant <= 1.0 && c.fitted_constant > 0.0);
    }
}
