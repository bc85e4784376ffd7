//! Named verification suites and their reports.
//!
//! Each suite records rows `(label, n, m, value, expected, error)`; rows with
//! the same key keep their worst error. Unless a suite says otherwise the
//! error is `|value - expected| / max(1, |expected|)`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::alpha::Alpha;
use crate::appell::{AppellBasis, GrowthParams, KernelSeq};
use crate::combin::{binomial, factorial};
use crate::error::{Error, Result};
use crate::jets::{CompKernels, ScalarJet, VectorJet};
use crate::measures::MeasureModel;
use crate::oracle::{self, PolyEval};
use crate::random::{self, CheckRng};
use crate::remeasure;
use crate::symtensor::{HilbertScale, SymTensor};
use crate::wick::{self, NormIndices};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub dim: usize,
    pub degree: usize,
    pub trials: usize,
    pub mc_samples: usize,
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    /// Replaces every suite's own tolerance when set.
    pub tolerance: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 20_240_917,
            dim: 2,
            degree: 5,
            trials: 1000,
            mc_samples: 100_000,
            p: 1.0,
            q: 1.0,
            epsilon: 1.0,
            tolerance: None,
        }
    }
}

impl SuiteConfig {
    /// Trial count for the heavier randomized suites.
    fn light(&self) -> usize {
        (self.trials / 10).max(5)
    }

    /// Generator for the named suite, derived from the base seed.
    pub fn rng_for(&self, name: &str) -> CheckRng {
        // FNV-1a keeps per-suite seeds stable across builds
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        random::rng(self.seed ^ h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub label: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub value: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub error: f64,
    pub count: usize,
}

/// Row collector for one suite.
#[derive(Debug, Default)]
pub struct Sheet {
    rows: Vec<Row>,
    index: HashMap<(String, Option<usize>, Option<usize>), usize>,
    notes: Vec<String>,
}

impl Sheet {
    pub fn record(
        &mut self,
        label: &str,
        n: Option<usize>,
        m: Option<usize>,
        value: f64,
        expected: f64,
        error: f64,
    ) {
        let key = (label.to_string(), n, m);
        let row = Row {
            label: label.to_string(),
            n,
            m,
            value,
            expected,
            abs_error: (value - expected).abs(),
            error,
            count: 1,
        };
        match self.index.get(&key) {
            Some(&i) => {
                let old = &mut self.rows[i];
                let count = old.count + 1;
                if !(error <= old.error) {
                    *old = row;
                }
                old.count = count;
            }
            None => {
                self.index.insert(key, self.rows.len());
                self.rows.push(row);
            }
        }
    }

    /// Scalar comparison with the default relative-to-one error.
    pub fn close(&mut self, label: &str, n: Option<usize>, m: Option<usize>, value: f64, expected: f64) {
        let err = (value - expected).abs() / expected.abs().max(1.0);
        self.record(label, n, m, value, expected, nan_to_inf(err));
    }

    /// Scalar comparison measured against an explicit magnitude.
    pub fn close_scaled(&mut self, label: &str, n: Option<usize>, value: f64, expected: f64, scale: f64) {
        let err = (value - expected).abs() / scale.abs().max(1.0);
        self.record(label, n, None, value, expected, nan_to_inf(err));
    }

    /// Tensor comparison: largest coefficient difference relative to the
    /// expected tensor's largest coefficient (at least one).
    pub fn tensor(&mut self, label: &str, n: Option<usize>, got: &SymTensor, want: &SymTensor) -> Result<()> {
        let diff = got.max_abs_diff(want)?;
        let err = diff / want.max_abs().max(1.0);
        self.record(label, n, None, diff, 0.0, nan_to_inf(err));
        Ok(())
    }

    pub fn jet(&mut self, label: &str, got: &ScalarJet, want: &ScalarJet) -> Result<()> {
        let diff = got.max_abs_diff(want)?;
        let err = diff / want.max_abs().max(1.0);
        self.record(label, None, None, diff, 0.0, nan_to_inf(err));
        Ok(())
    }

    pub fn seq(&mut self, label: &str, got: &KernelSeq, want: &KernelSeq) -> Result<()> {
        let diff = got.max_abs_diff(want)?;
        let err = diff / want.max_abs().max(1.0);
        self.record(label, None, None, diff, 0.0, nan_to_inf(err));
        Ok(())
    }

    /// Inequality `value <= bound`; the error is the relative excess.
    pub fn at_most(&mut self, label: &str, n: Option<usize>, value: f64, bound: f64) {
        let excess = if value <= bound {
            0.0
        } else if bound > 0.0 {
            (value - bound) / bound
        } else {
            f64::INFINITY
        };
        self.record(label, n, None, value, bound, nan_to_inf(excess));
    }

    /// Boolean outcome: error 0 when `ok`, infinite otherwise.
    pub fn flag(&mut self, label: &str, ok: bool, value: f64) {
        self.record(label, None, None, value, value, if ok { 0.0 } else { f64::INFINITY });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Closes the sheet. A suite passes when it ran without error, recorded
    /// at least one row and every row is within `tolerance`.
    pub fn finish(
        self,
        name: &str,
        module: &str,
        description: &str,
        tolerance: f64,
        outcome: Result<()>,
    ) -> SuiteReport {
        let max_error = self.rows.iter().map(|r| r.error).fold(0.0, f64::max);
        let error = outcome.err().map(|e| e.to_string());
        let passed = error.is_none() && !self.rows.is_empty() && self.rows.iter().all(|r| r.error <= tolerance);
        SuiteReport {
            name: name.to_string(),
            module: module.to_string(),
            description: description.to_string(),
            tolerance,
            max_error,
            passed,
            error,
            rows: self.rows,
            notes: self.notes,
        }
    }
}

fn nan_to_inf(e: f64) -> f64 {
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub module: String,
    pub description: String,
    pub tolerance: f64,
    pub max_error: f64,
    pub passed: bool,
    pub error: Option<String>,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: SuiteConfig,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// One line per row: suite, label, n, m, value, expected, abs_error,
    /// error, tolerance, passed.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Unsupported(format!("csv: {e}"));
        w.write_record([
            "suite", "label", "n", "m", "value", "expected", "abs_error", "error", "tolerance", "passed",
        ])
        .map_err(io)?;
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.suites {
            for r in &s.rows {
                w.write_record([
                    s.name.clone(),
                    r.label.clone(),
                    opt(r.n),
                    opt(r.m),
                    format!("{:e}", r.value),
                    format!("{:e}", r.expected),
                    format!("{:e}", r.abs_error),
                    format!("{:e}", r.error),
                    format!("{:e}", s.tolerance),
                    (r.error <= s.tolerance).to_string(),
                ])
                .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Unsupported(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Unsupported(format!("csv: {e}")))
    }

    /// Aligned one-line-per-suite summary.
    pub fn to_text(&self) -> String {
        let width = self.suites.iter().map(|s| s.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!(
                "{} {:width$}  max_error={:.3e}  tol={:.1e}{}\n",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.max_error,
                s.tolerance,
                s.error.as_ref().map(|e| format!("  error: {e}")).unwrap_or_default(),
            ));
        }
        out
    }
}

type SuiteFn = fn(&SuiteConfig, &mut CheckRng, &mut Sheet) -> Result<()>;

pub struct SuiteSpec {
    pub name: &'static str,
    pub module: &'static str,
    pub description: &'static str,
    pub tolerance: f64,
    run: SuiteFn,
}

macro_rules! suite {
    ($name:expr, $module:expr, $tol:expr, $run:expr, $desc:expr) => {
        SuiteSpec {
            name: $name,
            module: $module,
            description: $desc,
            tolerance: $tol,
            run: $run,
        }
    };
}

static REGISTRY: &[SuiteSpec] = &[
    suite!("tensor-adjointness", "symtensor", 1e-12, tensor_adjointness,
        "<a ⊗̂ b, c> = <a, (c, b)> for random tensors"),
    suite!("tensor-cross-norm", "symtensor", 1e-12, tensor_cross_norm,
        "|a ⊗̂ b|_p <= |a|_p |b|_p for p >= 0"),
    suite!("tensor-duality", "symtensor", 1e-12, tensor_duality,
        "|<a, b>| <= |a|_{-p} |b|_p"),
    suite!("tensor-eval-power", "symtensor", 1e-12, tensor_eval_power,
        "eval_power(a, x) = <x^{⊗n}, a>"),
    suite!("jet-power-reconstruction", "jets", 1e-10, jet_power_reconstruction,
        "tensor-power kernels reproduce products of the evaluated series"),
    suite!("jet-inverse-roundtrip", "jets", 1e-11, jet_inverse_roundtrip,
        "a∘g = g∘a = id for random invertible series"),
    suite!("jet-transcendental-consistency", "jets", 1e-10, jet_transcendental,
        "log(exp f) = f and f·recip(f) = 1"),
    suite!("jet-ab-duality", "jets", 1e-10, jet_ab_duality,
        "substituting the inverse into the α-power kernels recovers θ^{⊗m}"),
    suite!("measure-laplace-mc", "measures", 4.0, measure_laplace_mc,
        "Monte Carlo Laplace transform within 4 standard errors (error in standard errors)"),
    suite!("measure-gaussian-odd", "measures", 0.0, measure_gaussian_odd,
        "odd Gaussian moment kernels vanish"),
    suite!("measure-moment-growth", "measures", 0.0, measure_moment_growth,
        "fitted moment growth constant is finite"),
    suite!("measure-nondegeneracy", "measures", 0.0, measure_nondegeneracy,
        "Gram matrices of monomials: Gaussian and Poisson definite, δ_0 singular"),
    suite!("appell-generating-identity", "appell", 1e-10, appell_generating_identity,
        "P^{μ,α}(z) kernels equal exp<z,α(θ)>/l_μ(α(θ)) and the α-kernel sum"),
    suite!("appell-p1-expansion", "appell", 1e-10, appell_p1_expansion,
        "P_n(x) = Σ C(n,k) x^{⊗k} ⊗̂ P_{n-k}(0)"),
    suite!("appell-pa2-monomial", "appell", 1e-10, appell_pa2_monomial,
        "z^{⊗n} = Σ C(n,k)/m! <P_m^{μ,α}(z), B_k^m> ⊗̂ M_{n-k}"),
    suite!("appell-basis-roundtrip", "appell", 1e-10, appell_basis_roundtrip,
        "to_monomial and to_appell are mutually inverse and preserve values"),
    suite!("appell-p3-addition", "appell", 1e-10, appell_p3_addition,
        "P_n(z+w) = Σ n!/(k!l!m!) P_k(z) ⊗̂ P_l(w) ⊗̂ M_m^{μ,α}"),
    suite!("appell-pa4-delta-split", "appell", 1e-10, appell_pa4_delta_split,
        "P_n(z+w) = Σ C(n,k) P_k(z) ⊗̂ P_{n-k}^{δ_0,α}(w)"),
    suite!("appell-pa5-centered", "appell", 1e-10, appell_pa5_centered,
        "𝔼_μ <P_m^{μ,α}, φ> = 0 for m >= 1 (exact moments)"),
    suite!("appell-pa6-growth", "appell", 0.0, appell_pa6_growth,
        "|<P_n(z), θ^{⊗n}>| <= 2 n! σ_ε^{-n} exp(ε|z|_{-p}) |θ|_p^n on random z"),
    suite!("biorth-gaussian-id", "appell", 1e-9, biorth_gaussian_id,
        "adjoint-route Gram 𝔼[(G^ξ)^n P_m(φ)] = δ_{nm} n!<ξ^{⊗n}, φ>"),
    suite!("biorth-gaussian-log1p", "appell", 1e-9, biorth_gaussian_log1p,
        "adjoint-route Gram 𝔼[(G^ξ)^n P_m(φ)] = δ_{nm} n!<ξ^{⊗n}, φ>"),
    suite!("biorth-poisson-id", "appell", 1e-9, biorth_poisson_id,
        "adjoint-route Gram 𝔼[(G^ξ)^n P_m(φ)] = δ_{nm} n!<ξ^{⊗n}, φ>"),
    suite!("biorth-poisson-log1p", "appell", 1e-9, biorth_poisson_log1p,
        "adjoint-route Gram 𝔼[(G^ξ)^n P_m(φ)] = δ_{nm} n!<ξ^{⊗n}, φ>"),
    suite!("delta-evaluation", "appell", 1e-10, delta_evaluation,
        "<<δ_z, φ>> = φ(z)"),
    suite!("radon-nikodym", "appell", 1e-10, radon_nikodym,
        "<<ρ(z,·), φ>> = ∫ φ(x - z) dμ(x)"),
    suite!("hermite-table", "appell", 1e-12, hermite_table,
        "Gaussian P_n equals probabilists' Hermite coefficients, n <= 8"),
    suite!("hermite-density", "appell", 1e-9, hermite_density,
        "Q_n = (-1)^n ρ^{(n)}/ρ equals 2^{-n/2} H_n(x/√2) at 50 points in [-5, 5]"),
    suite!("hermite-quadrature", "appell", 1e-8, hermite_quadrature,
        "∫ Q_n P_m ρ dx = δ_{nm} n! for n, m <= 6"),
    suite!("charlier-recurrence", "appell", 1e-10, charlier_recurrence,
        "Poisson with α = log(1+θ) gives Charlier polynomials, n <= 6"),
    suite!("charlier-orthogonality", "appell", 1e-10, charlier_orthogonality,
        "Σ_x C_n C_m pmf = δ_{nm} n! ν^n"),
    suite!("s-vs-convolution", "appell", 1e-10, s_vs_convolution,
        "S_μ and C_μ agree for Gaussian and differ for Poisson"),
    suite!("test-growth", "appell", 0.0, test_growth,
        "|φ(z)| <= C ‖φ‖_{p,q} exp(ε|z|) with finite interior-attained C"),
    suite!("norm-duality", "appell", 1e-12, norm_duality,
        "|<<Φ, φ>>| <= ‖Φ‖_{-p,-q} ‖φ‖_{p,q}; β-norms non-increasing in β"),
    suite!("wick-s-multiplicativity", "wick", 1e-11, wick_s_multiplicativity,
        "S(Φ◇Ψ) = S(Φ)·S(Ψ)"),
    suite!("wick-assoc-comm", "wick", 1e-11, wick_assoc_comm,
        "Wick product is commutative and associative"),
    suite!("wick-first-order-powers", "wick", 1e-11, wick_first_order_powers,
        "Q_1(ξ)^{◇n} = Q_n(ξ^{⊗n})"),
    suite!("wick-inverse", "wick", 1e-11, wick_inverse,
        "Φ◇Φ^{◇(-1)} = 1 and Φ◇X = Ψ for X = wick_solve(Φ, Ψ)"),
    suite!("wick-exp-log", "wick", 1e-10, wick_exp_log,
        "log^◇(exp^◇ Φ) = Φ and S(exp^◇ Φ) = exp(S Φ)"),
    suite!("wick-continuity", "wick", 0.0, wick_continuity,
        "‖Φ◇Ψ‖_{-p,-q} <= ‖Φ‖_{-p1,-q1} ‖Ψ‖_{-p2,-q2}, p = max, q = q1+q2+1"),
    suite!("remeasure-p-relation", "remeasure", 1e-10, remeasure_p_relation,
        "P^{μ,α} expanded through P^{μ̃,α}, P^{μ,α}(0) and M^{μ̃,α}"),
    suite!("remeasure-reorder", "remeasure", 1e-10, remeasure_reorder,
        "reordered test functions keep their values; μ→μ̃→μ is the identity"),
    suite!("remeasure-pairing-invariance", "remeasure", 1e-10, remeasure_pairing_invariance,
        "<<transported Φ̃, φ>>_μ = <<Φ̃, reordered φ>>_μ̃"),
    suite!("remeasure-double-transport", "remeasure", 1e-10, remeasure_double_transport,
        "transporting there and back is the identity"),
    suite!("remeasure-alpha-conversion", "remeasure", 1e-10, remeasure_alpha_conversion,
        "α ↔ id kernel conversion preserves pairings"),
    suite!("oracle-exact-vs-mc", "oracle", 4.0, oracle_exact_vs_mc,
        "exact and Monte Carlo expectations within 4 standard errors (error in standard errors)"),
    suite!("oracle-product-symmetry", "oracle", 1e-10, oracle_product_symmetry,
        "exact product expectation is symmetric and bilinear"),
    suite!("oracle-quadrature", "oracle", 1e-9, oracle_quadrature,
        "Gaussian quadrature agrees with exact moments, degree <= 10"),
];

pub fn registry() -> &'static [SuiteSpec] {
    REGISTRY
}

pub fn suite_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.name).collect()
}

pub fn find_suite(name: &str) -> Result<&'static SuiteSpec> {
    REGISTRY
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownSuite(name.to_string()))
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let spec = find_suite(name)?;
    let tolerance = cfg.tolerance.unwrap_or(spec.tolerance);
    let mut sheet = Sheet::default();
    let mut rng = cfg.rng_for(spec.name);
    let outcome = (spec.run)(cfg, &mut rng, &mut sheet);
    Ok(sheet.finish(spec.name, spec.module, spec.description, tolerance, outcome))
}

/// Runs the named suites (all when `names` is empty) concurrently; the
/// report keeps the requested order.
pub fn run_suites(names: &[String], cfg: &SuiteConfig) -> Result<Report> {
    let selected: Vec<&str> = if names.is_empty() {
        suite_names()
    } else {
        names.iter().map(String::as_str).collect()
    };
    for n in &selected {
        find_suite(n)?;
    }
    let suites = selected
        .par_iter()
        .map(|n| run_suite(n, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        config: cfg.clone(),
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}

// ---------------------------------------------------------------------------
// shared fixtures

fn gaussian(d: usize) -> MeasureModel {
    let cov = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0 + 0.5 * i as f64
        } else if i.abs_diff(j) == 1 {
            0.3
        } else {
            0.0
        }
    });
    MeasureModel::gaussian(cov).expect("fixed covariance is positive definite")
}

fn poisson(d: usize) -> MeasureModel {
    let nu = (0..d).map(|i| [1.0, 0.5, 2.0][i % 3]).collect();
    MeasureModel::poisson(nu).expect("fixed intensities are positive")
}

fn main_models(d: usize) -> Vec<MeasureModel> {
    vec![gaussian(d), poisson(d)]
}

fn all_models(d: usize) -> Vec<MeasureModel> {
    vec![gaussian(d), poisson(d), MeasureModel::Delta { dim: d }]
}

fn alphas() -> Vec<Alpha> {
    vec![Alpha::Identity, Alpha::Log1p]
}

fn tag(b: &AppellBasis) -> String {
    format!("{}/{}", b.model().name(), b.alpha().name())
}

fn bases(models: Vec<MeasureModel>, degree: usize) -> Result<Vec<AppellBasis>> {
    let mut out = Vec::new();
    for m in models {
        for a in alphas() {
            out.push(AppellBasis::new(m.clone(), a, degree)?);
        }
    }
    Ok(out)
}

fn rand_test(b: &AppellBasis, rng: &mut CheckRng) -> Result<KernelSeq> {
    b.test_function(random::kernels(rng, b.dim(), b.degree()))
}

fn rand_dist(b: &AppellBasis, rng: &mut CheckRng) -> Result<KernelSeq> {
    b.distribution(random::kernels(rng, b.dim(), b.degree()))
}

fn grade_only(dim: usize, degree: usize, t: SymTensor) -> Vec<SymTensor> {
    let g = t.rank();
    (0..=degree)
        .map(|n| if n == g { t.clone() } else { SymTensor::zeros(dim, n) })
        .collect()
}

// ---------------------------------------------------------------------------
// symtensor

fn tensor_adjointness(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for t in 0..cfg.trials {
        let d = 1 + t % 3;
        let ra = rng.gen_range(0..=4);
        let rb = rng.gen_range(0..=4 - ra);
        let a = random::tensor(rng, d, ra);
        let b = random::tensor(rng, d, rb);
        let c = random::tensor(rng, d, ra + rb);
        let lhs = a.sym_product(&b)?.pairing(&c)?;
        let rhs = a.pairing(&c.partial_pairing(&b)?)?;
        s.close("adjoint", Some(ra + rb), Some(rb), lhs, rhs);
    }
    Ok(())
}

fn tensor_cross_norm(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for t in 0..cfg.trials {
        let d = 1 + t % 3;
        let scale = HilbertScale::new(d);
        let (ra, rb) = (rng.gen_range(0..=3), rng.gen_range(0..=3));
        let a = random::tensor(rng, d, ra);
        let b = random::tensor(rng, d, rb);
        for p in [0.0, 1.0, 2.0] {
            let lhs = a.sym_product(&b)?.norm(p, &scale)?;
            let rhs = a.norm(p, &scale)? * b.norm(p, &scale)?;
            s.at_most("cross-norm", Some(p as usize), lhs, rhs * (1.0 + 1e-14));
        }
    }
    Ok(())
}

fn tensor_duality(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for t in 0..cfg.trials {
        let d = 1 + t % 3;
        let scale = HilbertScale::new(d);
        let r = rng.gen_range(0..=4);
        let a = random::tensor(rng, d, r);
        let b = random::tensor(rng, d, r);
        for p in [0.0, 1.0, 2.0] {
            let lhs = a.pairing(&b)?.abs();
            let rhs = a.norm(-p, &scale)? * b.norm(p, &scale)?;
            s.at_most("duality", Some(p as usize), lhs, rhs * (1.0 + 1e-14));
        }
    }
    Ok(())
}

fn tensor_eval_power(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for t in 0..cfg.trials {
        let d = 1 + t % 3;
        let r = rng.gen_range(0..=4);
        let a = random::tensor(rng, d, r);
        let x = random::vector(rng, d, 2.0);
        s.close("eval-power", Some(r), None, a.eval_power(&x)?, SymTensor::outer_power(&x, r).pairing(&a)?);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// jets

fn random_vector_jet(rng: &mut CheckRng, d: usize, degree: usize, max_kernel_degree: usize) -> Result<VectorJet> {
    let comps = (0..d)
        .map(|j| {
            let kernels = (0..=degree)
                .map(|n| {
                    if n == 0 || n > max_kernel_degree {
                        SymTensor::zeros(d, n)
                    } else if n == 1 {
                        // diagonally dominant linear part
                        let mut t = random::tensor(rng, d, 1).scaled(0.3);
                        t.add_at(&[j], 1.0);
                        t
                    } else {
                        random::tensor(rng, d, n).scaled(0.5)
                    }
                })
                .collect();
            ScalarJet::from_kernels(d, kernels)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorJet::from_components(comps)
}

fn jet_power_reconstruction(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    // quadratic inner series: products of m factors have degree 2m <= 6
    for t in 0..cfg.light() {
        let d = 1 + t % 3;
        let big_n = 6;
        let a = random_vector_jet(rng, d, big_n, 2)?;
        let k = CompKernels::new(&a);
        let theta = random::vector(rng, d, 0.5);
        let vals = a.eval(&theta)?;
        for m in 0..=3 {
            for u in crate::combin::index_space(d, m).tuples.iter() {
                let mut series = 0.0;
                for n in 0..=big_n {
                    series += k.entry(n, m, u).eval_power(&theta)? / factorial(n);
                }
                let direct: f64 = u.iter().map(|&i| vals[i]).product();
                s.close("power", Some(m), None, series, direct);
            }
        }
    }
    Ok(())
}

fn jet_inverse_roundtrip(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for t in 0..cfg.light() {
        let d = 1 + t % 3;
        let a = random_vector_jet(rng, d, 6, 6)?;
        let g = a.invert()?;
        let id = VectorJet::identity(d, 6);
        s.record("a∘g", None, None, a.compose(&g)?.max_abs_diff(&id)?, 0.0, a.compose(&g)?.max_abs_diff(&id)?);
        s.record("g∘a", None, None, g.compose(&a)?.max_abs_diff(&id)?, 0.0, g.compose(&a)?.max_abs_diff(&id)?);
    }
    Ok(())
}

fn jet_transcendental(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for t in 0..cfg.light() {
        let d = 1 + t % 3;
        let mut kernels: Vec<SymTensor> = (0..=6).map(|n| random::tensor(rng, d, n).scaled(0.5)).collect();
        let f = ScalarJet::from_kernels(d, kernels.clone())?;
        s.jet("log(exp f)", &f.exp().log()?, &f)?;
        kernels[0] = SymTensor::scalar(d, 1.0 + rng.gen_range(0.0..1.0));
        let g = ScalarJet::from_kernels(d, kernels)?;
        s.jet("f·recip(f)", &g.mul(&g.recip()?)?, &ScalarJet::unit(d, 6))?;
        s.jet("exp(log f)", &g.log()?.exp(), &g)?;
    }
    Ok(())
}

fn jet_ab_duality(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for t in 0..cfg.light() {
        let d = 1 + t % 3;
        let big_n = 5;
        let a = random_vector_jet(rng, d, big_n, big_n)?;
        let g = a.invert()?;
        let k = CompKernels::new(&a);
        for m in 1..=big_n {
            for u in crate::combin::index_space(d, m).tuples.iter() {
                let series = ScalarJet::from_kernels(d, (0..=big_n).map(|n| k.entry(n, m, u)).collect())?;
                let composed = series.compose(&g)?;
                let mut want = ScalarJet::zero(d, big_n);
                *want.kernel_mut(m) = SymTensor::coordinate_dual(d, u).scaled(factorial(m));
                let diff = composed.max_abs_diff(&want)?;
                s.record("θ^{⊗m}", Some(m), None, diff, 0.0, diff / factorial(m));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// measures

fn measure_laplace_mc(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for d in 1..=cfg.dim.clamp(1, 3) {
        for model in all_models(d) {
            let seed = rng.gen();
            let pts = model.sample_batch(cfg.mc_samples, seed)?;
            for _ in 0..3 {
                let theta = random::vector(rng, d, 0.2);
                let c: Vec<num_complex::Complex64> = theta.iter().map(|&t| t.into()).collect();
                let exact = model.laplace(&c)?.re;
                let est = oracle::mc_from_samples(&pts, |x| {
                    x.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>().exp()
                });
                let z = zscore(est.mean, exact, est.stderr);
                s.record(&format!("{}-d{d}", model.name()), None, None, est.mean, exact, z);
            }
        }
    }
    Ok(())
}

/// Deviation in standard errors. The standard error is floored at the
/// summation rounding of the sample mean, so point masses do not divide by
/// zero.
fn zscore(est: f64, exact: f64, stderr: f64) -> f64 {
    let floor = 1e-10 * exact.abs().max(1.0);
    (est - exact).abs() / stderr.max(floor)
}

fn measure_gaussian_odd(cfg: &SuiteConfig, _rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for d in 1..=cfg.dim.clamp(1, 3) {
        let m = gaussian(d).moment_kernels(2 * cfg.degree + 1)?;
        for n in (1..=m.degree()).step_by(2) {
            let v = m.kernel(n).max_abs();
            s.record("odd-kernel", Some(n), None, v, 0.0, v);
        }
    }
    Ok(())
}

fn measure_moment_growth(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for model in main_models(cfg.dim) {
        let r = model.moment_growth(cfg.degree, cfg.p, 64, rng.gen())?;
        s.flag(model.name(), r.passes, r.fitted_constant);
        s.note(format!("{}: fitted C = {:.6}", model.name(), r.fitted_constant));
    }
    Ok(())
}

fn measure_nondegeneracy(cfg: &SuiteConfig, _rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for d in 1..=cfg.dim.clamp(1, 2) {
        for model in all_models(d) {
            let r = model.nondegeneracy_check(3)?;
            let want = !matches!(model, MeasureModel::Delta { .. });
            s.flag(&format!("{}-d{d}", model.name()), r.passes == want, r.min_eigenvalue);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// appell structure

fn appell_generating_identity(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for d in 1..=cfg.dim.clamp(1, 3) {
        for b in bases(all_models(d), cfg.degree)? {
            let alpha = b.alpha_jet();
            let lm = b.model().moment_kernels(cfg.degree)?.compose(alpha)?;
            for _ in 0..5 {
                let z = random::vector(rng, d, 2.0);
                let want = ScalarJet::linear(&z, cfg.degree).compose(alpha)?.exp().mul(&lm.recip()?)?;
                let got = b.gen_appell_jet(&z)?;
                s.jet(&format!("{}-closed-form", tag(&b)), &got, &want)?;
                // α-kernel sum over the plain Appell polynomials
                let pm = b.appell_jet(&z)?;
                for n in 0..=cfg.degree {
                    let mut acc = SymTensor::zeros(d, n);
                    for m in 0..=n {
                        acc.axpy(1.0 / factorial(m), &b.a_kernels().contract_outputs(n, m, pm.kernel(m)))?;
                    }
                    s.tensor(&format!("{}-kernel-sum", tag(&b)), Some(n), got.kernel(n), &acc)?;
                }
            }
        }
    }
    Ok(())
}

fn appell_p1_expansion(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for model in all_models(cfg.dim) {
        let b = AppellBasis::new(model, Alpha::Identity, cfg.degree)?;
        for _ in 0..10 {
            let z = random::vector(rng, cfg.dim, 2.0);
            for n in 0..=cfg.degree {
                let mut want = SymTensor::zeros(cfg.dim, n);
                for k in 0..=n {
                    let t = SymTensor::outer_power(&z, k).sym_product(&b.appell_constants()[n - k])?;
                    want.axpy(binomial(n, k), &t)?;
                }
                s.tensor(b.model().name(), Some(n), &b.appell_eval(n, &z)?, &want)?;
            }
        }
    }
    Ok(())
}

fn appell_pa2_monomial(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(all_models(cfg.dim), cfg.degree)? {
        for _ in 0..5 {
            let z = random::vector(rng, cfg.dim, 2.0);
            let p = b.gen_appell_jet(&z)?;
            for n in 0..=cfg.degree {
                let mut rhs = SymTensor::zeros(cfg.dim, n);
                for k in 0..=n {
                    for m in 0..=k {
                        let t = b.b_kernels().contract_outputs(k, m, p.kernel(m));
                        let t = t.sym_product(b.moments().kernel(n - k))?;
                        rhs.axpy(binomial(n, k) / factorial(m), &t)?;
                    }
                }
                s.tensor(&tag(&b), Some(n), &rhs, &SymTensor::outer_power(&z, n))?;
            }
        }
    }
    Ok(())
}

fn appell_basis_roundtrip(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(all_models(cfg.dim), cfg.degree)? {
        for _ in 0..cfg.light() {
            let mono = KernelSeq::monomial(b.dim(), random::kernels(rng, b.dim(), b.degree()))?;
            let back = b.to_monomial(&b.to_appell(&mono)?)?;
            s.seq(&format!("{}-monomial", tag(&b)), &back, &mono)?;
            let f = rand_test(&b, rng)?;
            let again = b.to_appell(&b.to_monomial(&f)?)?;
            s.seq(&format!("{}-appell", tag(&b)), &again, &f)?;
            let z = random::vector(rng, b.dim(), 1.5);
            s.close(&format!("{}-value", tag(&b)), None, None, b.eval_test(&f, &z)?, b.to_monomial(&f)?.eval_monomial(&z)?);
        }
    }
    Ok(())
}

fn appell_p3_addition(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(all_models(cfg.dim), cfg.degree)? {
        for _ in 0..5 {
            let z = random::vector(rng, cfg.dim, 1.5);
            let w = random::vector(rng, cfg.dim, 1.5);
            let zw: Vec<f64> = z.iter().zip(&w).map(|(a, c)| a + c).collect();
            let (pz, pw, pzw) = (b.gen_appell_jet(&z)?, b.gen_appell_jet(&w)?, b.gen_appell_jet(&zw)?);
            for n in 0..=cfg.degree {
                let mut rhs = SymTensor::zeros(cfg.dim, n);
                for k in 0..=n {
                    for l in 0..=n - k {
                        let m = n - k - l;
                        let c = factorial(n) / (factorial(k) * factorial(l) * factorial(m));
                        let t = pz.kernel(k).sym_product(pw.kernel(l))?.sym_product(b.alpha_moments().kernel(m))?;
                        rhs.axpy(c, &t)?;
                    }
                }
                s.tensor(&tag(&b), Some(n), pzw.kernel(n), &rhs)?;
            }
        }
    }
    Ok(())
}

fn appell_pa4_delta_split(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(all_models(cfg.dim), cfg.degree)? {
        for _ in 0..5 {
            let z = random::vector(rng, cfg.dim, 1.5);
            let w = random::vector(rng, cfg.dim, 1.5);
            let zw: Vec<f64> = z.iter().zip(&w).map(|(a, c)| a + c).collect();
            let (pz, dw, pzw) = (b.gen_appell_jet(&z)?, b.delta_appell_jet(&w)?, b.gen_appell_jet(&zw)?);
            for n in 0..=cfg.degree {
                let mut rhs = SymTensor::zeros(cfg.dim, n);
                for k in 0..=n {
                    rhs.axpy(binomial(n, k), &pz.kernel(k).sym_product(dw.kernel(n - k))?)?;
                }
                s.tensor(&tag(&b), Some(n), pzw.kernel(n), &rhs)?;
            }
        }
    }
    Ok(())
}

fn appell_pa5_centered(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(all_models(cfg.dim), cfg.degree)? {
        for m in 0..=cfg.degree {
            for _ in 0..5 {
                let phi = random::tensor(rng, cfg.dim, m);
                let f = b.test_function(grade_only(cfg.dim, cfg.degree, phi.clone()))?;
                let got = b.expect_monomial(&b.to_monomial(&f)?)?;
                let want = if m == 0 { phi.value() } else { 0.0 };
                s.close(&tag(&b), Some(m), None, got, want);
            }
        }
    }
    Ok(())
}

fn appell_pa6_growth(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(main_models(cfg.dim), cfg.degree)? {
        let r = b.p_alpha6_check(cfg.p, cfg.epsilon, cfg.trials, 5.0, rng.gen())?;
        s.at_most(&tag(&b), None, r.worst_ratio, 1.0);
        s.flag(&format!("{}-sigma-positive", tag(&b)), r.sigma_epsilon > 0.0, r.sigma_epsilon);
        s.note(format!(
            "{}: σ_ε = {:.6}, worst ratio {:.3e}, tensor-norm ratio at p+1 {:.3e}, violations {}",
            tag(&b),
            r.sigma_epsilon,
            r.worst_ratio,
            r.worst_tensor_ratio,
            r.violations
        ));
    }
    Ok(())
}

/// Gram table of the adjoint-route distributions `Q_n(ξ^{⊗n})` against
/// `P_m(φ_m)` for `n, m <= N`, computed twice: through exact expectations of
/// `(G^ξ)^n P_m(φ_m)` (rows `gram`) and through the kernel pairing (rows
/// `pair`).
pub fn biorth_rows(b: &AppellBasis, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let (d, big_n) = (b.dim(), b.degree());
    let xi = random::vector(rng, d, 1.0);
    let phis: Vec<SymTensor> = (0..=big_n).map(|m| random::tensor(rng, d, m)).collect();
    for m in 0..=big_n {
        let f = b.test_function(grade_only(d, big_n, phis[m].clone()))?;
        let mut g = b.to_monomial(&f)?;
        for n in 0..=big_n {
            if n > 0 {
                g = b.g_nabla_apply(&xi, &g)?;
            }
            let got = b.expect_monomial(&g)?;
            let want = if n == m {
                factorial(n) * SymTensor::outer_power(&xi, n).pairing(&phis[m])?
            } else {
                0.0
            };
            s.close("gram", Some(n), Some(m), got, want);
            let q = b.q_kernel_make(&SymTensor::outer_power(&xi, n))?;
            s.close("pair", Some(n), Some(m), b.pair(&q, &f)?, want);
        }
    }
    Ok(())
}

fn biorth(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet, model: MeasureModel, alpha: Alpha) -> Result<()> {
    biorth_rows(&AppellBasis::new(model, alpha, cfg.degree)?, rng, s)
}

fn biorth_dim(cfg: &SuiteConfig) -> usize {
    cfg.dim.clamp(1, 2)
}

fn biorth_gaussian_id(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    biorth(cfg, rng, s, gaussian(biorth_dim(cfg)), Alpha::Identity)
}

fn biorth_gaussian_log1p(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    biorth(cfg, rng, s, gaussian(biorth_dim(cfg)), Alpha::Log1p)
}

fn biorth_poisson_id(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    biorth(cfg, rng, s, poisson(biorth_dim(cfg)), Alpha::Identity)
}

fn biorth_poisson_log1p(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    biorth(cfg, rng, s, poisson(biorth_dim(cfg)), Alpha::Log1p)
}

fn delta_evaluation(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(all_models(cfg.dim), cfg.degree)? {
        for _ in 0..cfg.light() {
            let f = rand_test(&b, rng)?;
            let z = random::vector(rng, cfg.dim, 1.5);
            let dz = b.delta_z(&z)?;
            let mono = b.to_monomial(&f)?;
            s.close(&tag(&b), None, None, b.pair(&dz, &f)?, mono.eval_monomial(&z)?);
        }
    }
    Ok(())
}

fn radon_nikodym(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(all_models(cfg.dim), cfg.degree)? {
        for _ in 0..cfg.light() {
            let f = rand_test(&b, rng)?;
            let z = random::vector(rng, cfg.dim, 1.5);
            let neg: Vec<f64> = z.iter().map(|v| -v).collect();
            let shifted = oracle::shift_monomial(&b.to_monomial(&f)?, &neg)?;
            let want = oracle::exact_expectation(b.model(), &shifted)?;
            s.close(&tag(&b), None, None, b.pair(&b.radon_nikodym(&z)?, &f)?, want);
        }
        // at the origin ρ is the unit distribution
        let rho0 = b.radon_nikodym(&vec![0.0; cfg.dim])?;
        let unit = b.distribution(vec![SymTensor::scalar(cfg.dim, 1.0)])?;
        s.seq(&format!("{}-origin", tag(&b)), &rho0, &unit)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// classical specializations

fn he_coeffs(n_max: usize) -> Vec<Vec<f64>> {
    let mut he = vec![vec![1.0], vec![0.0, 1.0]];
    for n in 1..n_max {
        let mut next = vec![0.0; n + 2];
        for (k, &c) in he[n].iter().enumerate() {
            next[k + 1] += c;
        }
        for (k, &c) in he[n - 1].iter().enumerate() {
            next[k] -= n as f64 * c;
        }
        he.push(next);
    }
    he.truncate(n_max + 1);
    he
}

fn hermite_table(_cfg: &SuiteConfig, _rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let n_max = 8;
    let b = AppellBasis::new(MeasureModel::standard_gaussian(1), Alpha::Identity, n_max)?;
    let he = he_coeffs(n_max);
    for n in 0..=n_max {
        let f = b.test_function(grade_only(1, n_max, SymTensor::from_fn(1, n, |_| 1.0)))?;
        let mono = b.to_monomial(&f)?;
        for k in 0..=n_max {
            let want = he[n].get(k).copied().unwrap_or(0.0);
            s.close("coefficient", Some(n), Some(k), mono.kernel(k).coeffs()[0], want);
        }
    }
    Ok(())
}

/// `Q_n(x) = (-1)^n ρ^{(n)}(x) / ρ(x)` for the standard Gaussian density.
fn density_q(model: &MeasureModel, n: usize, x: f64) -> Result<f64> {
    let r = model.density_derivatives(x, n)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * r[n] / r[0])
}

fn hermite_density(_cfg: &SuiteConfig, _rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let model = MeasureModel::standard_gaussian(1);
    // physicists' Hermite polynomials
    let h = |n: usize, x: f64| -> f64 {
        let (mut a, mut c) = (1.0, 2.0 * x);
        if n == 0 {
            return a;
        }
        for k in 1..n {
            let next = 2.0 * x * c - 2.0 * k as f64 * a;
            a = c;
            c = next;
        }
        c
    };
    for i in 0..50 {
        let x = -5.0 + 10.0 * i as f64 / 49.0;
        for n in 0..=6 {
            let want = 2f64.powf(-(n as f64) / 2.0) * h(n, x / 2f64.sqrt());
            s.close("pointwise", Some(n), None, density_q(&model, n, x)?, want);
        }
    }
    Ok(())
}

fn hermite_quadrature(_cfg: &SuiteConfig, _rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let n_max = 6;
    let model = MeasureModel::standard_gaussian(1);
    let b = AppellBasis::new(model.clone(), Alpha::Identity, n_max)?;
    for n in 0..=n_max {
        for m in 0..=n_max {
            let r = oracle::quad_1d(&model, |x| {
                let pm = b.appell_eval(m, &[x]).map(|t| t.coeffs()[0]).unwrap_or(f64::NAN);
                density_q(&model, n, x).unwrap_or(f64::NAN) * pm
            })?;
            let want = if n == m { factorial(n) } else { 0.0 };
            s.close("quadrature", Some(n), Some(m), r.value, want);
        }
    }
    Ok(())
}

fn charlier_poly(n: usize, a: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x - a);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = (x - k as f64 - a) * cur - a * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `gen_appell_eval` for Poisson(ν) with `α = log(1+θ)` against the
/// recurrence `C_{n+1} = (x - n - ν) C_n - ν n C_{n-1}` at random points.
pub fn charlier_recurrence_rows(nu: f64, n_max: usize, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let b = AppellBasis::new(MeasureModel::poisson(vec![nu])?, Alpha::Log1p, n_max)?;
    for _ in 0..20 {
        let x = rng.gen_range(-2.0..8.0);
        let p = b.gen_appell_jet(&[x])?;
        for n in 0..=n_max {
            s.close(&format!("nu={nu}"), Some(n), None, p.kernel(n).coeffs()[0], charlier_poly(n, nu, x));
        }
    }
    Ok(())
}

/// `Σ_x C_n(x) C_m(x) pmf(x) = δ_{nm} n! ν^n` by pmf summation.
pub fn charlier_orthogonality_rows(nu: f64, n_max: usize, s: &mut Sheet) -> Result<()> {
    let model = MeasureModel::poisson(vec![nu])?;
    let b = AppellBasis::new(model.clone(), Alpha::Log1p, n_max)?;
    let c = |n: usize, x: f64| b.gen_appell_eval(n, &[x]).map(|t| t.coeffs()[0]).unwrap_or(f64::NAN);
    for n in 0..=n_max {
        for m in 0..=n_max {
            let r = oracle::quad_1d(&model, |x| c(n, x) * c(m, x))?;
            let want = if n == m { factorial(n) * nu.powi(n as i32) } else { 0.0 };
            s.close(&format!("nu={nu}"), Some(n), Some(m), r.value, want);
        }
    }
    Ok(())
}

fn charlier_recurrence(_cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for nu in [1.0, 2.5] {
        charlier_recurrence_rows(nu, 6, rng, s)?;
    }
    Ok(())
}

fn charlier_orthogonality(_cfg: &SuiteConfig, _rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for nu in [1.0, 2.5] {
        charlier_orthogonality_rows(nu, 6, s)?;
    }
    Ok(())
}

fn s_vs_convolution(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let d = cfg.dim.clamp(1, 2);
    let n = cfg.degree.min(4);
    // equality needs identity covariance
    let g = AppellBasis::new(MeasureModel::standard_gaussian(d), Alpha::Identity, n)?;
    let p = AppellBasis::new(poisson(d), Alpha::Identity, n)?;
    for _ in 0..3 {
        let k = random::kernels(rng, d, n);
        let f = g.test_function(k.clone())?;
        s.jet("gaussian-equal", &g.s_transform_test(&f)?, &g.convolution_jet(&f)?)?;
        let f = p.test_function(k)?;
        let gap = p.s_transform_test(&f)?.max_abs_diff(&p.convolution_jet(&f)?)?;
        s.flag("poisson-differ", gap > 1e-6, gap);
        let z = random::vector(rng, d, 1.0);
        let shifted = oracle::shift_monomial(&p.to_monomial(&f)?, &z)?;
        s.close("poisson-convolution", None, None, p.convolution(&f, &z)?, oracle::exact_expectation(p.model(), &shifted)?);
    }
    Ok(())
}

fn test_growth(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let cases = [
        (MeasureModel::standard_gaussian(1), Alpha::Identity),
        (MeasureModel::poisson(vec![1.0])?, Alpha::Log1p),
    ];
    for (model, alpha) in cases {
        let b = AppellBasis::new(model, alpha, 4)?;
        let f = b.test_function(grade_only(1, 4, SymTensor::from_fn(1, 4, |_| 1.0)))?;
        let mut prev = f64::INFINITY;
        for eps in [1.0, 2.0, 4.0] {
            let params = GrowthParams {
                p: cfg.p,
                q: cfg.q,
                epsilon: eps,
                trials: cfg.trials,
                radius: 10.0,
            };
            let r = b.growth_bound_check(&f, params, rng.gen())?;
            s.flag(&format!("{}-eps={eps}", tag(&b)), r.passes, r.fitted_constant);
            // same sample points for each ε: C shrinks as ε grows
            let r2 = b.growth_bound_check(&f, params, 99)?;
            s.at_most(&format!("{}-monotone", tag(&b)), None, r2.fitted_constant, prev);
            prev = r2.fitted_constant;
        }
    }
    Ok(())
}

fn norm_duality(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(main_models(cfg.dim), cfg.degree)? {
        for _ in 0..cfg.light() {
            let big = rand_dist(&b, rng)?;
            let f = rand_test(&b, rng)?;
            for (p, q) in [(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)] {
                let lhs = b.pair(&big, &f)?.abs();
                let rhs = b.dist_norm(&big, p, q, 1.0)? * b.test_norm(&f, p, q)?;
                s.at_most(&format!("{}-duality", tag(&b)), None, lhs, rhs * (1.0 + 1e-14));
            }
            let mut prev = f64::INFINITY;
            for beta in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let v = b.dist_norm(&big, cfg.p, cfg.q, beta)?;
                s.at_most(&format!("{}-beta", tag(&b)), None, v, prev * (1.0 + 1e-14));
                prev = v;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// wick

fn wick_bases(cfg: &SuiteConfig) -> Result<Vec<AppellBasis>> {
    bases(vec![gaussian(cfg.dim)], cfg.degree)
}

fn wick_s_multiplicativity(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in wick_bases(cfg)? {
        for _ in 0..cfg.light() {
            let (x, y) = (rand_dist(&b, rng)?, rand_dist(&b, rng)?);
            let lhs = b.s_transform(&wick::wick_mul(&x, &y)?)?;
            let rhs = b.s_transform(&x)?.mul(&b.s_transform(&y)?)?;
            s.jet(b.alpha().name(), &lhs, &rhs)?;
        }
    }
    Ok(())
}

fn wick_assoc_comm(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in wick_bases(cfg)? {
        for _ in 0..cfg.light() {
            let (x, y, z) = (rand_dist(&b, rng)?, rand_dist(&b, rng)?, rand_dist(&b, rng)?);
            s.seq("commutative", &wick::wick_mul(&x, &y)?, &wick::wick_mul(&y, &x)?)?;
            let l = wick::wick_mul(&wick::wick_mul(&x, &y)?, &z)?;
            let r = wick::wick_mul(&x, &wick::wick_mul(&y, &z)?)?;
            s.seq("associative", &l, &r)?;
        }
    }
    Ok(())
}

fn wick_first_order_powers(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in wick_bases(cfg)? {
        for _ in 0..cfg.light() {
            let xi = random::vector(rng, cfg.dim, 1.5);
            let q1 = b.q_kernel_make(&SymTensor::from_vector(&xi))?;
            for n in 0..=cfg.degree {
                let got = wick::wick_pow(&q1, n)?;
                let want = b.q_kernel_make(&SymTensor::outer_power(&xi, n))?;
                s.seq(&format!("n={n}"), &got, &want)?;
            }
        }
    }
    Ok(())
}

fn wick_inverse(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in wick_bases(cfg)? {
        for _ in 0..cfg.light() {
            let mut x = rand_dist(&b, rng)?;
            *x.kernel_mut(0) = SymTensor::scalar(cfg.dim, 1.0);
            let y = rand_dist(&b, rng)?;
            let unit = wick::wick_unit(&x);
            s.seq("inverse", &wick::wick_mul(&x, &wick::wick_inv(&x)?)?, &unit)?;
            s.seq("solve", &wick::wick_mul(&x, &wick::wick_solve(&x, &y)?)?, &y)?;
        }
    }
    Ok(())
}

fn wick_exp_log(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let n = cfg.degree;
    for b in wick_bases(cfg)? {
        for _ in 0..cfg.light() {
            let mut x = rand_dist(&b, rng)?;
            let z0 = rng.gen_range(-0.5..0.5);
            *x.kernel_mut(0) = SymTensor::scalar(cfg.dim, z0);
            let w0 = f64::exp(z0);
            let exp_c: Vec<f64> = (0..=n).map(|k| w0 / factorial(k)).collect();
            let mut log_c = vec![z0];
            log_c.extend((1..=n).map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign / (k as f64 * w0.powi(k as i32))
            }));
            let e = wick::wick_fn(&exp_c, &x)?;
            s.seq("roundtrip", &wick::wick_fn(&log_c, &e)?, &x)?;
            s.jet("s-transform", &b.s_transform(&e)?, &b.s_transform(&x)?.exp())?;
        }
    }
    Ok(())
}

fn wick_continuity(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let b = AppellBasis::new(gaussian(cfg.dim), Alpha::Identity, cfg.degree)?;
    let sets = [(0.0, 0.0, 0.0, 0.0), (1.0, 0.5, 0.0, 1.0), (2.0, 1.0, 1.0, 2.0), (0.5, 2.0, 1.5, 0.0)];
    for (p1, q1, p2, q2) in sets {
        let idx = NormIndices { p1, q1, p2, q2 };
        let r = wick::wick_norm_check(b.key(), b.scale(), cfg.degree, idx, cfg.trials, rng.gen())?;
        s.at_most(&format!("p1={p1},q1={q1},p2={p2},q2={q2}"), None, r.worst_ratio, 1.0);
        s.note(format!("indices ({p1},{q1},{p2},{q2}): {} trials, {} violations", r.trials, r.violations));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// remeasure

/// Ordered pairs `(μ, μ̃)` with δ_0 allowed only as μ̃.
fn transport_pairs(cfg: &SuiteConfig) -> Result<Vec<(AppellBasis, AppellBasis)>> {
    let mut out = Vec::new();
    for a in alphas() {
        for mu in main_models(cfg.dim) {
            for tilde in all_models(cfg.dim) {
                out.push((
                    AppellBasis::new(mu.clone(), a.clone(), cfg.degree)?,
                    AppellBasis::new(tilde, a.clone(), cfg.degree)?,
                ));
            }
        }
    }
    Ok(out)
}

fn pair_tag(mu: &AppellBasis, tilde: &AppellBasis) -> String {
    format!("{}->{}/{}", mu.model().name(), tilde.model().name(), mu.alpha().name())
}

fn remeasure_p_relation(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for (mu, tilde) in transport_pairs(cfg)? {
        for _ in 0..3 {
            let x = random::vector(rng, cfg.dim, 2.0);
            for n in 0..=cfg.degree {
                let (l, r) = remeasure::p_relation(&mu, &tilde, n, &x)?;
                s.tensor(&pair_tag(&mu, &tilde), Some(n), &r, &l)?;
            }
        }
    }
    Ok(())
}

fn remeasure_reorder(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for (mu, tilde) in transport_pairs(cfg)? {
        for _ in 0..cfg.light() {
            let f = rand_test(&mu, rng)?;
            let g = remeasure::reorder_test(&mu, &tilde, &f)?;
            let z = random::vector(rng, cfg.dim, 1.5);
            s.close(&format!("{}-value", pair_tag(&mu, &tilde)), None, None, tilde.eval_test(&g, &z)?, mu.eval_test(&f, &z)?);
            if !matches!(tilde.model(), MeasureModel::Delta { .. }) || true {
                let back = remeasure::reorder_test(&tilde, &mu, &g)?;
                s.seq(&format!("{}-roundtrip", pair_tag(&mu, &tilde)), &back, &f)?;
            }
        }
    }
    Ok(())
}

fn remeasure_pairing_invariance(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for (mu, tilde) in transport_pairs(cfg)? {
        for _ in 0..cfg.light() {
            let big = rand_dist(&tilde, rng)?;
            let f = rand_test(&mu, rng)?;
            let lhs = mu.pair(&remeasure::transport_dist(&tilde, &mu, &big)?, &f)?;
            let rhs = tilde.pair(&big, &remeasure::reorder_test(&mu, &tilde, &f)?)?;
            s.close(&pair_tag(&mu, &tilde), None, None, lhs, rhs);
        }
        // the unit distribution of μ̃ pairs to the μ̃-expectation
        let unit = tilde.distribution(vec![SymTensor::scalar(cfg.dim, 1.0)])?;
        let f = rand_test(&mu, rng)?;
        let moved = remeasure::transport_dist(&tilde, &mu, &unit)?;
        let want = oracle::exact_expectation(tilde.model(), &mu.to_monomial(&f)?)?;
        s.close(&format!("{}-unit", pair_tag(&mu, &tilde)), None, None, mu.pair(&moved, &f)?, want);
        // δ_z keeps evaluating at z
        let z = random::vector(rng, cfg.dim, 1.0);
        let moved = remeasure::transport_dist(&tilde, &mu, &tilde.delta_z(&z)?)?;
        s.close(&format!("{}-delta", pair_tag(&mu, &tilde)), None, None, mu.pair(&moved, &f)?, mu.eval_test(&f, &z)?);
    }
    Ok(())
}

fn remeasure_double_transport(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for (mu, tilde) in transport_pairs(cfg)? {
        for _ in 0..cfg.light() {
            let big = rand_dist(&tilde, rng)?;
            let there = remeasure::transport_dist(&tilde, &mu, &big)?;
            let back = remeasure::transport_dist(&mu, &tilde, &there)?;
            s.seq(&pair_tag(&mu, &tilde), &back, &big)?;
        }
    }
    Ok(())
}

fn remeasure_alpha_conversion(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for model in main_models(cfg.dim) {
        let with_alpha = AppellBasis::new(model.clone(), Alpha::Log1p, cfg.degree)?;
        let plain = AppellBasis::new(model, Alpha::Identity, cfg.degree)?;
        for (from, to) in [(&with_alpha, &plain), (&plain, &with_alpha)] {
            for _ in 0..cfg.light() {
                let big = rand_dist(from, rng)?;
                let f = rand_test(from, rng)?;
                let big2 = remeasure::change_alpha_dist(from, to, &big)?;
                let f2 = remeasure::change_basis_test(from, to, &f)?;
                s.close(&format!("{}->{}", tag(from), to.alpha().name()), None, None, to.pair(&big2, &f2)?, from.pair(&big, &f)?);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle

fn oracle_exact_vs_mc(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    let degree = 4;
    for model in all_models(cfg.dim) {
        let pts = model.sample_batch(cfg.mc_samples, rng.gen())?;
        for i in 0..20 {
            let f = KernelSeq::monomial(cfg.dim, random::kernels(rng, cfg.dim, degree))?;
            let exact = oracle::exact_expectation(&model, &f)?;
            let fast = PolyEval::new(&f)?;
            let est = oracle::mc_from_samples(&pts, |x| fast.eval(x));
            s.record(model.name(), Some(i), None, est.mean, exact, zscore(est.mean, exact, est.stderr));
        }
    }
    Ok(())
}

/// `Σ <|M_n|, |c_n|>` for the monomial product `f g`: the size of the terms
/// that cancel inside `𝔼[f g]`.
fn product_scale(b: &AppellBasis, f: &KernelSeq, g: &KernelSeq) -> Result<f64> {
    let prod = b.to_monomial(f)?.poly_mul(&b.to_monomial(g)?)?;
    let m = b.model().moment_kernels(prod.degree())?;
    let abs = |t: &SymTensor| SymTensor::from_fn(t.dim(), t.rank(), |i| t.get(i).abs());
    let mut acc = 0.0;
    for n in 0..=prod.degree() {
        acc += abs(m.kernel(n)).pairing(&abs(prod.kernel(n)))?;
    }
    Ok(acc)
}

/// Errors are relative to the cancelling terms of the moment pairing.
fn oracle_product_symmetry(cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for b in bases(main_models(cfg.dim), cfg.degree)? {
        for _ in 0..cfg.light() {
            let (f, g, h) = (rand_test(&b, rng)?, rand_test(&b, rng)?, rand_test(&b, rng)?);
            let fg = oracle::exact_product_expectation(&b, &f, &g)?;
            let scale = product_scale(&b, &f, &g)?;
            s.close_scaled(&format!("{}-symmetric", tag(&b)), None, oracle::exact_product_expectation(&b, &g, &f)?, fg, scale);
            let (a, c) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let combo = f.scaled(a).add(&h.scaled(c))?;
            let want = a * fg + c * oracle::exact_product_expectation(&b, &h, &g)?;
            let scale = a.abs() * scale + c.abs() * product_scale(&b, &h, &g)?;
            s.close_scaled(&format!("{}-bilinear", tag(&b)), None, oracle::exact_product_expectation(&b, &combo, &g)?, want, scale);
        }
    }
    Ok(())
}

fn oracle_quadrature(_cfg: &SuiteConfig, rng: &mut CheckRng, s: &mut Sheet) -> Result<()> {
    for var in [1.0, 2.0] {
        let model = MeasureModel::gaussian(DMatrix::from_element(1, 1, var))?;
        for deg in 0..=10 {
            let f = KernelSeq::monomial(1, random::kernels(rng, 1, deg))?;
            let exact = oracle::exact_expectation(&model, &f)?;
            let q = oracle::quad_1d(&model, |x| f.eval_monomial(&[x]).unwrap_or(f64::NAN))?;
            s.close(&format!("var={var}"), Some(deg), None, q.value, exact);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            trials: 30,
            mc_samples: 20_000,
            degree: 4,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names = suite_names();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_suite("nope", &small()), Err(Error::UnknownSuite(_))));
        assert!(run_suites(&["nope".to_string()], &small()).is_err());
    }

    #[test]
    fn injected_tolerance_fails() {
        let cfg = SuiteConfig {
            tolerance: Some(1e-20),
            ..small()
        };
        let r = run_suite("charlier-orthogonality", &cfg).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn reports_are_deterministic() {
        let names = vec!["wick-inverse".to_string(), "measure-laplace-mc".to_string()];
        let a = run_suites(&names, &small()).unwrap();
        let b = run_suites(&names, &small()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    }
}
