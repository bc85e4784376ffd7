//! Acceptance criteria. Each criterion prints one PASS/FAIL line and the
//! binary exits non-zero if any fails. Tolerances are pinned here,
//! independent of the suite registry defaults.

use appell_core::suites::{run_suites, Report, SuiteConfig, SuiteReport};

const EXACT: f64 = 1e-12;
const STRUCT: f64 = 1e-10;
const WICK: f64 = 1e-11;
const BIORTH: f64 = 1e-9;
const POINTWISE: f64 = 1e-9;
const QUADRATURE: f64 = 1e-8;
const MC_SIGMAS: f64 = 4.0;
const TRIALS: usize = 1000;
const MC_SAMPLES: usize = 100_000;

fn config() -> SuiteConfig {
    SuiteConfig {
        trials: TRIALS,
        mc_samples: MC_SAMPLES,
        dim: 2,
        degree: 5,
        ..SuiteConfig::default()
    }
}

struct Check<'a> {
    report: &'a Report,
    lines: Vec<String>,
    failed: usize,
}

impl<'a> Check<'a> {
    fn suite(&self, name: &str) -> &'a SuiteReport {
        self.report
            .suites
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("suite {name} missing from report"))
    }

    /// Every listed suite ran cleanly, has rows, and no row exceeds `tol`.
    fn within(&self, names: &[&str], tol: f64) -> (bool, f64) {
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for n in names {
            let s = self.suite(n);
            worst = worst.max(s.max_error);
            ok &= s.error.is_none() && !s.rows.is_empty() && s.rows.iter().all(|r| r.error <= tol);
        }
        (ok, worst)
    }

    fn record(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        self.lines.push(format!("{} [{id:>2}] {title}: {detail}", if ok { "PASS" } else { "FAIL" }));
    }
}

fn main() {
    let cfg = config();
    let report = run_suites(&[], &cfg).expect("suites run");
    let mut c = Check {
        report: &report,
        lines: Vec::new(),
        failed: 0,
    };

    let (a, ea) = c.within(&["hermite-table"], EXACT);
    let (b, eb) = c.within(&["hermite-density"], POINTWISE);
    let (q, eq) = c.within(&["hermite-quadrature"], QUADRATURE);
    c.record(
        1,
        "Hermite specialization",
        a && b && q,
        format!("table {ea:.2e} <= {EXACT:e}, pointwise {eb:.2e} <= {POINTWISE:e}, quadrature {eq:.2e} <= {QUADRATURE:e}"),
    );

    let (ok, e) = c.within(&["charlier-recurrence", "charlier-orthogonality"], STRUCT);
    let has_nu1 = c.suite("charlier-orthogonality").rows.iter().any(|r| r.label == "nu=1");
    c.record(2, "Charlier specialization", ok && has_nu1, format!("max error {e:.2e} <= {STRUCT:e}, ν = 1 covered: {has_nu1}"));

    let biorth = ["biorth-gaussian-id", "biorth-gaussian-log1p", "biorth-poisson-id", "biorth-poisson-log1p"];
    let (ok, e) = c.within(&biorth, BIORTH);
    let full = biorth.iter().all(|n| c.suite(n).rows.iter().filter(|r| r.label == "gram").count() == 36);
    c.record(3, "Biorthogonality", ok && full, format!("max error {e:.2e} <= {BIORTH:e}, 6x6 tables: {full}"));

    let structural = [
        "appell-generating-identity",
        "appell-p1-expansion",
        "appell-pa2-monomial",
        "appell-basis-roundtrip",
        "appell-p3-addition",
        "appell-pa4-delta-split",
        "appell-pa5-centered",
    ];
    let (ok, e) = c.within(&structural, STRUCT);
    c.record(4, "Structural identities", ok, format!("max error {e:.2e} <= {STRUCT:e}"));

    let (ok, _) = c.within(&["appell-pa6-growth", "wick-continuity"], 0.0);
    let enough = cfg.trials >= 1000;
    c.record(5, "Growth and continuity bounds", ok && enough, format!("zero violations: {ok}, trials {}", cfg.trials));

    let (a, ea) = c.within(&["wick-s-multiplicativity", "wick-inverse"], WICK);
    let (b, eb) = c.within(&["wick-first-order-powers"], WICK);
    c.record(6, "Wick calculus", a && b, format!("max error {:.2e} <= {WICK:e}", ea.max(eb)));

    let (ok, e) = c.within(&["delta-evaluation", "radon-nikodym"], STRUCT);
    c.record(7, "δ_z and ρ", ok, format!("max error {e:.2e} <= {STRUCT:e}"));

    let remeasure = ["remeasure-pairing-invariance", "remeasure-double-transport"];
    let (ok, e) = c.within(&remeasure, STRUCT);
    c.record(8, "Change of measure", ok, format!("max error {e:.2e} <= {STRUCT:e}"));

    let (a, ea) = c.within(&["oracle-exact-vs-mc"], MC_SIGMAS);
    let (b, eb) = c.within(&["oracle-quadrature"], BIORTH);
    let per_model = ["gaussian", "poisson", "delta"]
        .iter()
        .all(|m| c.suite("oracle-exact-vs-mc").rows.iter().filter(|r| r.label == *m).count() == 20);
    c.record(
        9,
        "Oracle consistency",
        a && b && per_model && cfg.mc_samples == MC_SAMPLES,
        format!("worst z-score {ea:.2} <= {MC_SIGMAS}, quadrature {eb:.2e} <= {BIORTH:e}, 20 polynomials per model: {per_model}"),
    );

    let again = run_suites(&[], &cfg).expect("suites run");
    let same = report.to_json() == again.to_json() && report.to_csv().unwrap() == again.to_csv().unwrap();
    c.record(10, "Determinism", same, format!("byte-identical JSON and CSV: {same}"));

    for line in &c.lines {
        println!("{line}");
    }
    for s in report.suites.iter().filter(|s| !s.passed) {
        println!("  suite {} failed: max error {:.3e}, tolerance {:.1e}", s.name, s.max_error, s.tolerance);
    }
    if c.failed > 0 {
        eprintln!("{} acceptance criteria failed", c.failed);
        std::process::exit(1);
    }
}
