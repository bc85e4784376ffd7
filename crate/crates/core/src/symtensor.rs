//! Dense symmetric tensors over `R^d` stored one coefficient per multiset
//! index, plus the weighted Hilbert-scale norms `|.|_p`.
//!
//! A rank-`n` tensor keeps the full-tensor entry `T[i_1, .., i_n]` once, at
//! the sorted multi-index. Every ordered-tuple sum (pairings, norms) is
//! recovered by weighting each stored entry with its number of orderings.

use crate::combin::{self, factorial, for_each_split, index_space, lex_rank, merge_sorted};
use crate::error::{check_dim, Error, Result};

/// Symmetric tensor of rank `rank` over `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    dim: usize,
    rank: usize,
    coeffs: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        let len = combin::multichoose(dim, rank);
        SymTensor {
            dim,
            rank,
            coeffs: vec![0.0; len],
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        SymTensor {
            dim,
            rank: 0,
            coeffs: vec![value],
        }
    }

    /// Builds a tensor from coefficients listed in lexicographic multiset order.
    pub fn from_coeffs(dim: usize, rank: usize, coeffs: Vec<f64>) -> Result<Self> {
        let len = combin::multichoose(dim, rank);
        if coeffs.len() != len {
            return Err(Error::RankMismatch {
                left: coeffs.len(),
                right: len,
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SymTensor { dim, rank, coeffs })
    }

    /// Builds a tensor by evaluating `f` at every sorted multi-index.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(dim: usize, rank: usize, mut f: F) -> Self {
        let space = index_space(dim, rank);
        let coeffs = space.tuples.iter().map(|t| f(t)).collect();
        SymTensor { dim, rank, coeffs }
    }

    /// Unit vector `e_i` (0-based).
    pub fn basis_vector(dim: usize, i: usize) -> Self {
        let mut t = SymTensor::zeros(dim, 1);
        t.coeffs[i] = 1.0;
        t
    }

    pub fn from_vector(x: &[f64]) -> Self {
        SymTensor {
            dim: x.len(),
            rank: 1,
            coeffs: x.to_vec(),
        }
    }

    /// `x^{⊗n}`: full entry at `(i_1..i_n)` is `x_{i_1} ... x_{i_n}`.
    pub fn outer_power(x: &[f64], n: usize) -> Self {
        SymTensor::from_fn(x.len(), n, |t| t.iter().map(|&i| x[i]).product())
    }

    /// Symmetric matrix as a rank-2 tensor. Only the upper triangle is read.
    pub fn from_symmetric_matrix(dim: usize, entry: impl Fn(usize, usize) -> f64) -> Self {
        SymTensor::from_fn(dim, 2, |t| entry(t[0], t[1]))
    }

    /// The tensor whose pairing with any rank-`n` tensor `T` returns the
    /// stored entry `T[idx]`.
    pub fn coordinate_dual(dim: usize, idx: &[usize]) -> Self {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        let mut t = SymTensor::zeros(dim, sorted.len());
        let m = combin::multiplicity(&sorted);
        t.set(&sorted, 1.0 / m);
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Value of a rank-0 tensor.
    pub fn value(&self) -> f64 {
        debug_assert_eq!(self.rank, 0);
        self.coeffs[0]
    }

    fn position(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        if idx.windows(2).all(|w| w[0] <= w[1]) {
            lex_rank(self.dim, idx)
        } else {
            let mut s = idx.to_vec();
            s.sort_unstable();
            lex_rank(self.dim, &s)
        }
    }

    /// Full-tensor entry at an arbitrary (not necessarily sorted) index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.coeffs[self.position(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let p = self.position(idx);
        self.coeffs[p] = value;
    }

    pub fn add_at(&mut self, idx: &[usize], value: f64) {
        let p = self.position(idx);
        self.coeffs[p] += value;
    }

    /// `(sorted index, value)` pairs in storage order.
    pub fn entries(&self) -> Vec<(Vec<usize>, f64)> {
        let space = index_space(self.dim, self.rank);
        space.tuples.iter().cloned().zip(self.coeffs.iter().copied()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymTensor {
            dim: self.dim,
            rank: self.rank,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn scale_mut(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        Ok(())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub(crate) fn axpy_unchecked(&mut self, s: f64, other: &Self) {
        debug_assert!(self.check_same_shape(other).is_ok());
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += s * b);
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Symmetrized tensor product `self ⊗̂ other`.
    pub fn sym_product(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        Ok(self.sym_product_unchecked(other))
    }

    pub(crate) fn sym_product_unchecked(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let (m, n) = (self.rank, other.rank);
        if m == 0 {
            return other.scaled(self.coeffs[0]);
        }
        if n == 0 {
            return self.scaled(other.coeffs[0]);
        }
        if self.is_zero() || other.is_zero() {
            return SymTensor::zeros(self.dim, m + n);
        }
        let space = index_space(self.dim, m + n);
        let mut coeffs = Vec::with_capacity(space.len());
        for (s, &ms) in space.tuples.iter().zip(&space.mults) {
            let mut acc = 0.0;
            for_each_split(s, m, |sub, rest| {
                let w = combin::multiplicity(sub) * combin::multiplicity(rest);
                acc += w * self.get(sub) * other.get(rest);
            });
            coeffs.push(acc / ms);
        }
        SymTensor {
            dim: self.dim,
            rank: m + n,
            coeffs,
        }
    }

    /// Full contraction `<self, other>` over all ordered index tuples.
    pub fn pairing(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.pairing_unchecked(other))
    }

    pub(crate) fn pairing_unchecked(&self, other: &Self) -> f64 {
        debug_assert!(self.check_same_shape(other).is_ok());
        let space = index_space(self.dim, self.rank);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(&space.mults)
            .map(|((a, b), m)| m * a * b)
            .sum()
    }

    /// Contracts `other` (rank `k`) into the last `k` slots of `self`
    /// (rank `n`), leaving a rank `n - k` tensor.
    pub fn partial_pairing(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        if other.rank > self.rank {
            return Err(Error::ContractionTooLarge {
                inner: other.rank,
                outer: self.rank,
            });
        }
        Ok(self.partial_pairing_unchecked(other))
    }

    pub(crate) fn partial_pairing_unchecked(&self, other: &Self) -> Self {
        let k = other.rank;
        if k == 0 {
            return self.scaled(other.coeffs[0]);
        }
        if k == self.rank {
            return SymTensor::scalar(self.dim, self.pairing_unchecked(other));
        }
        let inner = index_space(self.dim, k);
        let outer = index_space(self.dim, self.rank - k);
        let coeffs = outer
            .tuples
            .iter()
            .map(|t| {
                inner
                    .tuples
                    .iter()
                    .zip(&inner.mults)
                    .zip(&other.coeffs)
                    .filter(|(_, &b)| b != 0.0)
                    .map(|((u, m), b)| m * b * self.get(&merge_sorted(t, u)))
                    .sum()
            })
            .collect();
        SymTensor {
            dim: self.dim,
            rank: self.rank - k,
            coeffs,
        }
    }

    /// `<x^{⊗n}, self>`.
    pub fn eval_power(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let space = index_space(self.dim, self.rank);
        Ok(space
            .tuples
            .iter()
            .zip(&space.mults)
            .zip(&self.coeffs)
            .map(|((t, m), c)| m * c * t.iter().map(|&i| x[i]).product::<f64>())
            .sum())
    }

    /// `<x^{⊗n}, self>` at a complex point.
    pub fn eval_power_complex(&self, x: &[num_complex::Complex64]) -> Result<num_complex::Complex64> {
        check_dim(self.dim, x.len())?;
        let space = index_space(self.dim, self.rank);
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for ((t, m), c) in space.tuples.iter().zip(&space.mults).zip(&self.coeffs) {
            let mut prod = num_complex::Complex64::new(m * c, 0.0);
            for &i in t {
                prod *= x[i];
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// Weighted norm `|self|_p` on the `rank`-fold tensor power of `H_p`.
    /// Negative `p` gives the dual norm.
    pub fn norm(&self, p: f64, scale: &HilbertScale) -> Result<f64> {
        check_dim(self.dim, scale.dim())?;
        let space = index_space(self.dim, self.rank);
        let sq: f64 = space
            .tuples
            .iter()
            .zip(&space.mults)
            .zip(&self.coeffs)
            .map(|((t, m), c)| {
                let w: f64 = t.iter().map(|&i| scale.weights[i].powf(2.0 * p)).product();
                m * w * c * c
            })
            .sum();
        Ok(sq.sqrt())
    }

    /// Unweighted norm over all ordered tuples.
    pub fn frobenius(&self) -> f64 {
        self.pairing_unchecked(self).sqrt()
    }
}

/// Per-coordinate weights defining `|ξ|_p² = Σ_i w_i^{2p} ξ_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertScale {
    weights: Vec<f64>,
}

impl HilbertScale {
    /// Default weights `1, 2, .., d`, so `|.|_0` is Euclidean and the scale
    /// strictly increases with `p`.
    pub fn new(dim: usize) -> Self {
        HilbertScale {
            weights: (1..=dim).map(|i| i as f64).collect(),
        }
    }

    pub fn with_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::config("weights", "weights must be positive and finite"));
        }
        Ok(HilbertScale { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|x|_p` of a vector.
    pub fn vector_norm(&self, x: &[f64], p: f64) -> f64 {
        x.iter()
            .zip(&self.weights)
            .map(|(v, w)| w.powf(2.0 * p) * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `|x|_p` of a complex vector.
    pub fn complex_norm(&self, x: &[num_complex::Complex64], p: f64) -> f64 {
        x.iter()
            .zip(&self.weights)
            .map(|(v, w)| w.powf(2.0 * p) * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Multinomial coefficient `n! / (k_1! .. k_r!)` for parts summing to `n`.
pub fn multinomial(parts: &[usize]) -> f64 {
    let n: usize = parts.iter().sum();
    parts.iter().fold(factorial(n), |acc, &k| acc / factorial(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Expands a symmetric tensor into its full `d^n` entry table.
    fn full(t: &SymTensor) -> Vec<(Vec<usize>, f64)> {
        let (d, n) = (t.dim(), t.rank());
        let total = d.pow(n as u32);
        (0..total)
            .map(|mut k| {
                let mut idx = vec![0; n];
                for slot in idx.iter_mut().rev() {
                    *slot = k % d;
                    k /= d;
                }
                let v = t.get(&idx);
                (idx, v)
            })
            .collect()
    }

    fn full_pairing(a: &SymTensor, b: &SymTensor) -> f64 {
        full(a).iter().zip(full(b)).map(|((_, x), (_, y))| x * y).sum()
    }

    fn random_tensor(dim: usize, rank: usize, vals: &[f64]) -> SymTensor {
        let len = combin::multichoose(dim, rank);
        SymTensor::from_coeffs(dim, rank, vals.iter().cycle().take(len).copied().collect()).unwrap()
    }

    #[test]
    fn product_of_basis_vectors() {
        let e1 = SymTensor::basis_vector(2, 0);
        let e2 = SymTensor::basis_vector(2, 1);
        let t = e1.sym_product(&e2).unwrap();
        assert_eq!(t.get(&[0, 1]), 0.5);
        assert_eq!(t.get(&[1, 0]), 0.5);
        assert_eq!(t.get(&[0, 0]), 0.0);
        assert_relative_eq!(t.pairing(&t).unwrap(), 0.5);
    }

    #[test]
    fn scalar_unit_product() {
        let a = random_tensor(3, 2, &[0.3, -1.2, 2.0, 0.7]);
        let c = SymTensor::scalar(3, 2.5);
        assert_eq!(a.sym_product(&c).unwrap(), a.scaled(2.5));
        assert_eq!(c.sym_product(&a).unwrap(), a.scaled(2.5));
    }

    #[test]
    fn outer_square_matches_direct_products() {
        let x = SymTensor::from_vector(&[1.0, 2.0]);
        let xx = x.sym_product(&x).unwrap();
        for (idx, v) in full(&xx) {
            let direct: f64 = idx.iter().map(|&i| [1.0, 2.0][i]).product();
            assert_eq!(v, direct);
        }
        assert_eq!(xx, SymTensor::outer_power(&[1.0, 2.0], 2));
    }

    #[test]
    fn pairing_examples() {
        let x = SymTensor::outer_power(&[1.0, 0.0], 2);
        let y = SymTensor::outer_power(&[0.0, 1.0], 2);
        assert_eq!(x.pairing(&y).unwrap(), 0.0);
        assert_eq!(
            SymTensor::scalar(1, 2.0).pairing(&SymTensor::scalar(1, 3.0)).unwrap(),
            6.0
        );
        assert!(matches!(
            x.pairing(&SymTensor::zeros(2, 1)),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn partial_pairing_examples() {
        let x2 = SymTensor::outer_power(&[1.0, 1.0], 2);
        let y = SymTensor::from_vector(&[2.0, 0.0]);
        let r = x2.partial_pairing(&y).unwrap();
        assert_eq!(r.coeffs(), &[2.0, 2.0]);

        let a = random_tensor(2, 3, &[1.0, -2.0, 0.5, 3.0]);
        assert_eq!(a.partial_pairing(&SymTensor::scalar(2, 1.0)).unwrap(), a);

        let e12 = SymTensor::basis_vector(2, 0)
            .sym_product(&SymTensor::basis_vector(2, 1))
            .unwrap();
        let r = e12.partial_pairing(&SymTensor::basis_vector(2, 0)).unwrap();
        assert_eq!(r.coeffs(), &[0.0, 0.5]);

        assert!(matches!(
            y.partial_pairing(&x2),
            Err(Error::ContractionTooLarge { .. })
        ));
    }

    #[test]
    fn eval_power_examples() {
        assert_eq!(SymTensor::scalar(2, 4.0).eval_power(&[1.0, 9.0]).unwrap(), 4.0);
        let e11 = SymTensor::outer_power(&[1.0, 0.0], 2);
        assert_eq!(e11.eval_power(&[3.0, 1.0]).unwrap(), 9.0);

        let a = random_tensor(3, 3, &[0.4, -1.1, 2.3, 0.9, -0.6, 1.7, 0.2]);
        let x = [0.7, -1.3, 0.5];
        let brute: f64 = full(&a)
            .iter()
            .map(|(idx, v)| v * idx.iter().map(|&i| x[i]).product::<f64>())
            .sum();
        assert_relative_eq!(a.eval_power(&x).unwrap(), brute, max_relative = 1e-12);
    }

    #[test]
    fn norm_examples() {
        let s = HilbertScale::new(2);
        assert_eq!(SymTensor::basis_vector(2, 0).norm(3.0, &s).unwrap(), 1.0);
        assert_eq!(SymTensor::from_vector(&[3.0, 4.0]).norm(0.0, &s).unwrap(), 5.0);

        let s = HilbertScale::with_weights(vec![1.0, 2.0]).unwrap();
        let a = random_tensor(2, 2, &[0.3, -1.4, 2.2]);
        let brute: f64 = full(&a)
            .iter()
            .map(|(idx, v)| {
                let w: f64 = idx.iter().map(|&i| [1.0f64, 2.0][i].powi(2)).product();
                w * v * v
            })
            .sum::<f64>()
            .sqrt();
        assert_relative_eq!(a.norm(1.0, &s).unwrap(), brute, max_relative = 1e-12);
        assert!(HilbertScale::with_weights(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            SymTensor::from_coeffs(1, 1, vec![f64::NAN]),
            Err(Error::NonFinite)
        );
    }

    fn arb_tensor(dim: usize, rank: usize) -> impl Strategy<Value = SymTensor> {
        let len = combin::multichoose(dim, rank);
        prop::collection::vec(-2.0f64..2.0, len)
            .prop_map(move |c| SymTensor::from_coeffs(dim, rank, c).unwrap())
    }

    fn arb_triple() -> impl Strategy<Value = (SymTensor, SymTensor, SymTensor)> {
        (1usize..=3, 0usize..=2, 0usize..=2).prop_flat_map(|(d, m, n)| {
            (arb_tensor(d, m), arb_tensor(d, n), arb_tensor(d, m + n))
        })
    }

    proptest! {
        #[test]
        fn insertion_is_adjoint_to_contraction((a, b, c) in arb_triple()) {
            let lhs = a.sym_product(&b).unwrap().pairing(&c).unwrap();
            let rhs = a.pairing(&c.partial_pairing(&b).unwrap()).unwrap();
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn sym_product_matches_full_symmetrization((a, b, _c) in arb_triple()) {
            let t = a.sym_product(&b).unwrap();
            prop_assert!(t.max_abs_diff(&b.sym_product(&a).unwrap()).unwrap() <= 1e-12 * (1.0 + t.max_abs()));
            // pairing against x^{⊗(m+n)} factorizes
            let x = [0.3, -0.8, 1.1];
            let x = &x[..a.dim()];
            let lhs = t.eval_power(x).unwrap();
            let rhs = a.eval_power(x).unwrap() * b.eval_power(x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            prop_assert!((t.pairing(&t).unwrap() - full_pairing(&t, &t)).abs() < 1e-10);
        }

        #[test]
        fn cross_norm((a, b, _c) in arb_triple(), p in 0.0f64..2.0) {
            let s = HilbertScale::new(a.dim());
            let lhs = a.sym_product(&b).unwrap().norm(p, &s).unwrap();
            let rhs = a.norm(p, &s).unwrap() * b.norm(p, &s).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn dual_norm_bounds_pairing(
            (a, b) in (1usize..=3, 0usize..=4).prop_flat_map(|(d, n)| (arb_tensor(d, n), arb_tensor(d, n))),
            p in 0.0f64..2.0,
        ) {
            let s = HilbertScale::new(a.dim());
            let bound = a.norm(-p, &s).unwrap() * b.norm(p, &s).unwrap();
            prop_assert!(a.pairing(&b).unwrap().abs() <= bound * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn eval_power_is_pairing_with_outer_power(
            a in (1usize..=3, 0usize..=4).prop_flat_map(|(d, n)| arb_tensor(d, n)),
            x in prop::collection::vec(-1.5f64..1.5, 3),
        ) {
            let x = &x[..a.dim()];
            let lhs = a.eval_power(x).unwrap();
            let rhs = a.pairing(&SymTensor::outer_power(x, a.rank())).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
