//! Truncated power series with symmetric-tensor coefficients.
//!
//! All series use the exponential convention
//! `G(θ) = Σ_n (1/n!) <c_n, θ^{⊗n}>`, truncated at a common degree `N`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::combin::{binomial, factorial, index_space};
use crate::error::{check_dim, Error, Result};
use crate::symtensor::SymTensor;

/// Scalar-valued truncated series; `kernels[n]` has rank `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    dim: usize,
    kernels: Vec<SymTensor>,
}

impl ScalarJet {
    pub fn zero(dim: usize, degree: usize) -> Self {
        ScalarJet {
            dim,
            kernels: (0..=degree).map(|n| SymTensor::zeros(dim, n)).collect(),
        }
    }

    pub fn constant(dim: usize, degree: usize, c: f64) -> Self {
        let mut j = ScalarJet::zero(dim, degree);
        j.kernels[0] = SymTensor::scalar(dim, c);
        j
    }

    pub fn unit(dim: usize, degree: usize) -> Self {
        ScalarJet::constant(dim, degree, 1.0)
    }

    /// Checks that kernel `n` has rank `n` and a common dimension.
    pub fn from_kernels(dim: usize, kernels: Vec<SymTensor>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::DegreeOverflow {
                requested: 0,
                available: 0,
            });
        }
        for (n, k) in kernels.iter().enumerate() {
            check_dim(dim, k.dim())?;
            if k.rank() != n {
                return Err(Error::RankMismatch {
                    left: k.rank(),
                    right: n,
                });
            }
            if !k.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(ScalarJet { dim, kernels })
    }

    /// The linear form `<a, θ>`.
    pub fn linear(a: &[f64], degree: usize) -> Self {
        let mut j = ScalarJet::zero(a.len(), degree);
        if degree >= 1 {
            j.kernels[1] = SymTensor::from_vector(a);
        }
        j
    }

    /// `exp<a, θ>` in closed form: kernels `a^{⊗n}`.
    pub fn exp_linear(a: &[f64], degree: usize) -> Self {
        ScalarJet {
            dim: a.len(),
            kernels: (0..=degree).map(|n| SymTensor::outer_power(a, n)).collect(),
        }
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

    pub fn kernels(&self) -> &[SymTensor] {
        &self.kernels
    }

    pub fn kernel_mut(&mut self, n: usize) -> &mut SymTensor {
        &mut self.kernels[n]
    }

    pub fn constant_term(&self) -> f64 {
        self.kernels[0].value()
    }

    /// Same series truncated (or zero-padded) to `degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        let kernels = (0..=degree)
            .map(|n| {
                self.kernels
                    .get(n)
                    .cloned()
                    .unwrap_or_else(|| SymTensor::zeros(self.dim, n))
            })
            .collect();
        ScalarJet {
            dim: self.dim,
            kernels,
        }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        if self.degree() != other.degree() {
            return Err(Error::DegreeOverflow {
                requested: other.degree(),
                available: self.degree(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.kernels.iter_mut().zip(&other.kernels) {
            a.axpy_unchecked(1.0, b);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.kernels.iter_mut().zip(&other.kernels) {
            a.axpy_unchecked(-1.0, b);
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ScalarJet {
            dim: self.dim,
            kernels: self.kernels.iter().map(|k| k.scaled(s)).collect(),
        }
    }

    /// Product of series: `h_n = Σ_k C(n,k) f_k ⊗̂ g_{n-k}`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let big_n = self.degree();
        let kernels = (0..=big_n)
            .map(|n| {
                let mut acc = SymTensor::zeros(self.dim, n);
                for k in 0..=n {
                    let (f, g) = (&self.kernels[k], &other.kernels[n - k]);
                    if f.is_zero() || g.is_zero() {
                        continue;
                    }
                    acc.axpy_unchecked(binomial(n, k), &f.sym_product_unchecked(g));
                }
                acc
            })
            .collect();
        ScalarJet {
            dim: self.dim,
            kernels,
        }
    }

    pub fn exp(&self) -> Self {
        // h_n = Σ_{k=1}^n C(n-1,k-1) f_k ⊗̂ h_{n-k}
        let big_n = self.degree();
        let mut h: Vec<SymTensor> = Vec::with_capacity(big_n + 1);
        h.push(SymTensor::scalar(self.dim, self.constant_term().exp()));
        for n in 1..=big_n {
            let mut acc = SymTensor::zeros(self.dim, n);
            for k in 1..=n {
                if self.kernels[k].is_zero() {
                    continue;
                }
                acc.axpy_unchecked(
                    binomial(n - 1, k - 1),
                    &self.kernels[k].sym_product_unchecked(&h[n - k]),
                );
            }
            h.push(acc);
        }
        ScalarJet {
            dim: self.dim,
            kernels: h,
        }
    }

    /// Logarithm; needs a positive constant term.
    pub fn log(&self) -> Result<Self> {
        let g0 = self.constant_term();
        if !(g0 > 0.0) {
            return Err(Error::Singular(format!(
                "logarithm needs a positive constant term, got {g0}"
            )));
        }
        let big_n = self.degree();
        let mut f: Vec<SymTensor> = Vec::with_capacity(big_n + 1);
        f.push(SymTensor::scalar(self.dim, g0.ln()));
        for n in 1..=big_n {
            let mut acc = self.kernels[n].clone();
            for k in 1..n {
                if f[k].is_zero() {
                    continue;
                }
                acc.axpy_unchecked(
                    -binomial(n - 1, k - 1),
                    &f[k].sym_product_unchecked(&self.kernels[n - k]),
                );
            }
            acc.scale_mut(1.0 / g0);
            f.push(acc);
        }
        Ok(ScalarJet {
            dim: self.dim,
            kernels: f,
        })
    }

    /// Multiplicative inverse; needs a non-zero constant term.
    pub fn recip(&self) -> Result<Self> {
        let g0 = self.constant_term();
        if g0 == 0.0 || !g0.is_finite() {
            return Err(Error::Singular(
                "reciprocal of a series with zero constant term".into(),
            ));
        }
        let big_n = self.degree();
        let mut r: Vec<SymTensor> = Vec::with_capacity(big_n + 1);
        r.push(SymTensor::scalar(self.dim, 1.0 / g0));
        for n in 1..=big_n {
            let mut acc = SymTensor::zeros(self.dim, n);
            for k in 1..=n {
                if self.kernels[k].is_zero() {
                    continue;
                }
                acc.axpy_unchecked(
                    binomial(n, k),
                    &self.kernels[k].sym_product_unchecked(&r[n - k]),
                );
            }
            acc.scale_mut(-1.0 / g0);
            r.push(acc);
        }
        Ok(ScalarJet {
            dim: self.dim,
            kernels: r,
        })
    }

    /// `f ∘ a` for a vector series `a` with `a(0) = 0`.
    pub fn compose(&self, a: &VectorJet) -> Result<Self> {
        check_dim(self.dim, a.dim())?;
        if self.degree() != a.degree() {
            return Err(Error::DegreeOverflow {
                requested: a.degree(),
                available: self.degree(),
            });
        }
        Ok(self.compose_with(&CompKernels::new(a)))
    }

    /// Composition using precomputed power kernels of the inner series.
    pub fn compose_with(&self, powers: &CompKernels) -> Self {
        let big_n = self.degree();
        let kernels = (0..=big_n)
            .map(|n| {
                let mut acc = SymTensor::zeros(self.dim, n);
                for m in 0..=n {
                    if self.kernels[m].is_zero() {
                        continue;
                    }
                    acc.axpy_unchecked(
                        1.0 / factorial(m),
                        &powers.contract_outputs(n, m, &self.kernels[m]),
                    );
                }
                acc
            })
            .collect();
        ScalarJet {
            dim: self.dim,
            kernels,
        }
    }

    /// Value of the truncated series at `θ`.
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim, theta.len())?;
        let mut acc = 0.0;
        for (n, k) in self.kernels.iter().enumerate() {
            acc += k.eval_power(theta)? / factorial(n);
        }
        Ok(acc)
    }

    pub fn eval_complex(&self, theta: &[Complex64]) -> Result<Complex64> {
        check_dim(self.dim, theta.len())?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, k) in self.kernels.iter().enumerate() {
            acc += k.eval_power_complex(theta)? / factorial(n);
        }
        Ok(acc)
    }

    /// Largest kernel-wise coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.kernels.iter().zip(&other.kernels) {
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.kernels.iter().map(|k| k.max_abs()).fold(0.0, f64::max)
    }
}

/// `R^d`-valued truncated series with zero constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorJet {
    components: Vec<ScalarJet>,
}

impl VectorJet {
    pub fn identity(dim: usize, degree: usize) -> Self {
        let components = (0..dim)
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                ScalarJet::linear(&e, degree)
            })
            .collect();
        VectorJet { components }
    }

    /// Builds from per-output scalar series; every constant term must vanish.
    pub fn from_components(components: Vec<ScalarJet>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { left: 0, right: 1 });
        }
        let degree = components[0].degree();
        for c in &components {
            check_dim(dim, c.dim())?;
            if c.degree() != degree {
                return Err(Error::DegreeOverflow {
                    requested: c.degree(),
                    available: degree,
                });
            }
            if c.constant_term() != 0.0 {
                return Err(Error::Unsupported(
                    "vector series must vanish at the origin".into(),
                ));
            }
        }
        Ok(VectorJet { components })
    }

    /// Applies the same one-variable series (given by its derivatives at 0,
    /// `derivs[n]` for `n >= 1`) in every coordinate.
    pub fn coordinatewise(dim: usize, degree: usize, derivs: impl Fn(usize) -> f64) -> Self {
        let components = (0..dim)
            .map(|j| {
                let mut c = ScalarJet::zero(dim, degree);
                for n in 1..=degree {
                    c.kernels[n] = SymTensor::zeros(dim, n);
                    c.kernels[n].set(&vec![j; n], derivs(n));
                }
                c
            })
            .collect();
        VectorJet { components }
    }

    /// Same series truncated (or zero-padded) to `degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        VectorJet {
            components: self.components.iter().map(|c| c.truncated(degree)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree()
    }

    pub fn component(&self, j: usize) -> &ScalarJet {
        &self.components[j]
    }

    pub fn components(&self) -> &[ScalarJet] {
        &self.components
    }

    /// Rank-`n` kernel of output coordinate `j`.
    pub fn kernel(&self, n: usize, j: usize) -> &SymTensor {
        self.components[j].kernel(n)
    }

    /// Linear part as a matrix `L[j][i]`, output `j`, input `i`.
    pub fn linear_part(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |j, i| {
            if self.degree() == 0 {
                0.0
            } else {
                self.components[j].kernel(1).coeffs()[i]
            }
        })
    }

    /// `<ξ, a^{(n)}(0)>`: contracts the output slot with `ξ`.
    pub fn contract_output(&self, n: usize, xi: &[f64]) -> SymTensor {
        let mut acc = SymTensor::zeros(self.dim(), n);
        for (j, &x) in xi.iter().enumerate() {
            if x != 0.0 {
                acc.axpy_unchecked(x, self.kernel(n, j));
            }
        }
        acc
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &VectorJet) -> Result<VectorJet> {
        check_dim(self.dim(), inner.dim())?;
        if self.degree() != inner.degree() {
            return Err(Error::DegreeOverflow {
                requested: inner.degree(),
                available: self.degree(),
            });
        }
        let powers = CompKernels::new(inner);
        Ok(VectorJet {
            components: self
                .components
                .iter()
                .map(|c| c.compose_with(&powers))
                .collect(),
        })
    }

    /// Compositional inverse `g` with `self ∘ g = id`, solved degree by
    /// degree from the inverted linear part.
    pub fn invert(&self) -> Result<VectorJet> {
        let d = self.dim();
        let big_n = self.degree();
        if big_n == 0 {
            return Ok(self.clone());
        }
        let lin = self.linear_part();
        let svd = lin.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-12 * smax.max(f64::MIN_POSITIVE)) {
            return Err(Error::Singular(
                "linear part of the map is not invertible".into(),
            ));
        }
        let inv = lin
            .try_inverse()
            .ok_or_else(|| Error::Singular("linear part of the map is not invertible".into()))?;

        let mut g = VectorJet {
            components: (0..d).map(|_| ScalarJet::zero(d, big_n)).collect(),
        };
        for (j, comp) in g.components.iter_mut().enumerate() {
            comp.kernels[1] = SymTensor::from_vector(&inv.row(j).iter().copied().collect::<Vec<_>>());
        }
        for n in 2..=big_n {
            // with g_n = 0, the degree-n kernel of self∘g is everything except L g_n
            let residual = self.compose(&g)?;
            for j in 0..d {
                let mut acc = SymTensor::zeros(d, n);
                for k in 0..d {
                    let c = inv[(j, k)];
                    if c != 0.0 {
                        acc.axpy_unchecked(-c, residual.kernel(n, k));
                    }
                }
                g.components[j].kernels[n] = acc;
            }
        }
        Ok(g)
    }

    pub fn eval(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(theta)).collect()
    }

    pub fn eval_complex(&self, theta: &[Complex64]) -> Result<Vec<Complex64>> {
        self.components.iter().map(|c| c.eval_complex(theta)).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Ok(worst)
    }
}

/// Kernels of the tensor powers `a(θ)^{⊗m} = Σ_n (1/n!) <K[n][m], θ^{⊗n}>`.
///
/// `K[n][m]` has `n` input slots and `m` symmetric output slots. It is stored
/// per sorted output index `U` as the rank-`n` kernel of the scalar series
/// `Π_{u ∈ U} a_u(θ)`. Built from `a` this is the table `A_n^m`; built from
/// the inverse series it is `B_n^m`.
#[derive(Debug, Clone)]
pub struct CompKernels {
    dim: usize,
    degree: usize,
    /// `powers[m][pos]`: series for the `pos`-th sorted output index of size `m`.
    powers: Vec<Vec<ScalarJet>>,
}

impl CompKernels {
    pub fn new(a: &VectorJet) -> Self {
        let (d, big_n) = (a.dim(), a.degree());
        let mut powers: Vec<Vec<ScalarJet>> = vec![vec![ScalarJet::unit(d, big_n)]];
        for m in 1..=big_n {
            let space = index_space(d, m);
            let prev_space = index_space(d, m - 1);
            let row = space
                .tuples
                .iter()
                .map(|u| {
                    let (last, head) = u.split_last().expect("m >= 1");
                    let head_pos = crate::combin::lex_rank(d, head);
                    debug_assert!(head_pos < prev_space.len());
                    powers[m - 1][head_pos].mul_unchecked(a.component(*last))
                })
                .collect();
            powers.push(row);
        }
        CompKernels {
            dim: d,
            degree: big_n,
            powers,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `K[n][m]` at sorted output index `out`, as a rank-`n` tensor.
    pub fn entry(&self, n: usize, m: usize, out: &[usize]) -> SymTensor {
        if m > self.degree || n > self.degree {
            return SymTensor::zeros(self.dim, n);
        }
        let pos = crate::combin::lex_rank(self.dim, out);
        self.powers[m][pos].kernel(n).clone()
    }

    /// `<t, K[n][m]>` over the `m` output slots; returns rank `n`.
    pub fn contract_outputs(&self, n: usize, m: usize, t: &SymTensor) -> SymTensor {
        debug_assert_eq!(t.rank(), m);
        if m > n || n > self.degree {
            return SymTensor::zeros(self.dim, n);
        }
        let space = index_space(self.dim, m);
        let mut acc = SymTensor::zeros(self.dim, n);
        for ((jet, mult), &c) in self.powers[m].iter().zip(&space.mults).zip(t.coeffs()) {
            if c != 0.0 {
                acc.axpy_unchecked(mult * c, jet.kernel(n));
            }
        }
        acc
    }

    /// `<K[n][m], t>` over the `n` input slots; returns rank `m`.
    pub fn contract_inputs(&self, n: usize, m: usize, t: &SymTensor) -> SymTensor {
        debug_assert_eq!(t.rank(), n);
        if m > n || n > self.degree {
            return SymTensor::zeros(self.dim, m);
        }
        let coeffs = self.powers[m]
            .iter()
            .map(|jet| jet.kernel(n).pairing_unchecked(t))
            .collect();
        SymTensor::from_coeffs(self.dim, m, coeffs).expect("shape fixed by construction")
    }
}
