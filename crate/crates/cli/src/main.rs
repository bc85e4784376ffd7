use std::path::{Path, PathBuf};
use std::process::ExitCode;

use appell_core::alpha::Alpha;
use appell_core::appell::{AppellBasis, Basis, GrowthParams, KernelSeq};
use appell_core::combin::index_space;
use appell_core::config::{self, AlphaSpec, MeasureSpec, RunConfig};
use appell_core::format::{self, Fixture, KernelFile};
use appell_core::jets::ScalarJet;
use appell_core::measures::MeasureModel;
use appell_core::suites::{self, Report, Sheet, SuiteReport};
use appell_core::{random, remeasure, wick, Error, SymTensor};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const RESULTS_ENV: &str = "APPELL_RESULTS_DIR";

// stdout may be a closed pipe; output is best effort
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Generalized Appell systems: kernel tables, identity checks and
/// verification suites.
#[derive(Parser, Debug)]
#[command(name = "appell", version, subcommand_required = true, arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file (TOML sections: general, measure, alpha, norms,
    /// suites, mc).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory. Falls back to `general.out`, then to
    /// $APPELL_RESULTS_DIR, then to `results`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Truncation degree.
    #[arg(long = "N", global = true)]
    degree: Option<usize>,

    #[arg(long, global = true)]
    dim: Option<usize>,

    #[arg(long, global = true, value_enum)]
    measure: Option<MeasureKind>,

    /// Poisson intensities, one value or one per coordinate.
    #[arg(long, global = true, value_delimiter = ',')]
    nu: Option<Vec<f64>>,

    /// `id`, `log1p`, `expm1`, or a path to a vectorjet fixture.
    #[arg(long, global = true)]
    alpha: Option<String>,

    /// Overrides every tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MeasureKind {
    Gaussian,
    Poisson,
    Delta,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monomial coefficients of P_n, compared with classical tables where
    /// one exists.
    Kernels,
    /// Gram table of Q_n(ξ^n) against P_m(φ).
    Biorth,
    /// Charlier recurrence and orthogonality for the configured ν.
    Charlier,
    /// Hermite coefficient table and density-route check.
    Hermite,
    /// σ_ε, the P_n growth bound and the test-function growth bound.
    Growth,
    /// Wick operations on dual kernel fixtures.
    Wick(WickArgs),
    /// Moves kernel fixtures between two measures sharing α.
    Transport(TransportArgs),
    /// Runs verification suites (all, or `suites.names`, or the given names).
    Verify {
        names: Vec<String>,
    },
    /// Lists registered suites.
    ListSuites,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum WickOp {
    Mul,
    Pow,
    Fn,
    Inv,
    Solve,
}

#[derive(Args, Debug)]
struct WickArgs {
    #[arg(value_enum)]
    op: WickOp,
    /// First operand (kernels fixture in the dual basis).
    a: PathBuf,
    /// Second operand for `mul` and `solve`.
    b: Option<PathBuf>,
    /// Exponent for `pow`.
    #[arg(long, default_value_t = 2)]
    power: usize,
    /// Taylor coefficients of F at the expectation of the operand, for `fn`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coeffs: Vec<f64>,
}

#[derive(Args, Debug)]
struct TransportArgs {
    /// Configuration of the source measure.
    #[arg(long)]
    from: PathBuf,
    /// Configuration of the target measure.
    #[arg(long)]
    to: PathBuf,
    /// Distribution kernels (dual basis) to move.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Test-function kernels (appell basis) to move.
    #[arg(long)]
    test: Option<PathBuf>,
}

/// Errors split by exit code: bad input versus failed computation.
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Parse { .. } | Error::UnknownSuite(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn load_config(path: Option<&Path>, common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = common.degree {
        if n > format::MAX_DEGREE {
            return Err(Failure::Usage(format!("--N must be at most {}", format::MAX_DEGREE)));
        }
        cfg.degree = n;
    }
    if let Some(d) = common.dim {
        if d == 0 || d > format::MAX_DIM {
            return Err(Failure::Usage(format!("--dim must be in 1..={}", format::MAX_DIM)));
        }
        cfg.dim = d;
    }
    match common.measure {
        Some(MeasureKind::Gaussian) => cfg.measure = MeasureSpec::Gaussian(None),
        Some(MeasureKind::Poisson) => cfg.measure = MeasureSpec::Poisson(vec![1.0]),
        Some(MeasureKind::Delta) => cfg.measure = MeasureSpec::Delta,
        None => {}
    }
    if let Some(nu) = &common.nu {
        match &mut cfg.measure {
            MeasureSpec::Poisson(v) => *v = nu.clone(),
            _ => return Err(Failure::Usage("--nu needs a poisson measure".into())),
        }
    }
    if let Some(a) = &common.alpha {
        cfg.alpha = if config::preset(a).is_ok() {
            AlphaSpec::Preset(a.clone())
        } else if Path::new(a).is_file() {
            AlphaSpec::File(PathBuf::from(a))
        } else {
            return Err(Failure::Usage(format!("--alpha: `{a}` is neither a preset nor a file")));
        };
    }
    if let Some(t) = common.tol {
        if !(t >= 0.0) {
            return Err(Failure::Usage("--tol must be non-negative".into()));
        }
        cfg.tolerance = Some(t);
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(RESULTS_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes `<stem>.json` and `<stem>.csv`, prints the summary, and returns
/// whether every suite passed.
fn emit(dir: &Path, stem: &str, report: &Report) -> Outcome {
    write_file(&dir.join(format!("{stem}.json")), &report.to_json())?;
    write_file(&dir.join(format!("{stem}.csv")), &report.to_csv()?)?;
    say!("{}", report.to_text().trim_end());
    for s in &report.suites {
        for n in &s.notes {
            say!("  {}: {n}", s.name);
        }
    }
    say!("wrote {}", dir.join(format!("{stem}.json")).display());
    Ok(report.passed)
}

fn single(cfg: &RunConfig, report: SuiteReport) -> Report {
    let passed = report.passed;
    Report {
        config: cfg.suite_config(),
        passed,
        suites: vec![report],
    }
}

fn run(cli: Cli) -> Outcome {
    let common = &cli.common;
    if let Command::Transport(args) = &cli.command {
        return transport(common, args);
    }
    let cfg = load_config(common.config.as_deref(), common)?;
    let dir = out_dir(common, &cfg);
    match &cli.command {
        Command::ListSuites => {
            for s in suites::registry() {
                say!("{:32} {:10} {}", s.name, s.module, s.description);
            }
            Ok(true)
        }
        Command::Verify { names } => {
            let names = if names.is_empty() { cfg.suites.clone() } else { names.clone() };
            let report = suites::run_suites(&names, &cfg.suite_config())?;
            emit(&dir, "report", &report)
        }
        Command::Hermite => {
            let names: Vec<String> = ["hermite-table", "hermite-density", "hermite-quadrature"].map(String::from).to_vec();
            let report = suites::run_suites(&names, &cfg.suite_config())?;
            emit(&dir, "hermite", &report)
        }
        Command::Charlier => {
            let nu = match &cfg.measure {
                MeasureSpec::Poisson(v) => v[0],
                _ => 1.0,
            };
            let tol = cfg.tolerance.unwrap_or(1e-10);
            let mut rng = cfg.suite_config().rng_for("charlier");
            let mut rec = Sheet::default();
            let r = suites::charlier_recurrence_rows(nu, cfg.degree, &mut rng, &mut rec);
            let rec = rec.finish("charlier-recurrence", "appell", "C_{n+1} = (x-n-ν)C_n - νnC_{n-1}", tol, r);
            let mut orth = Sheet::default();
            let r = suites::charlier_orthogonality_rows(nu, cfg.degree, &mut orth);
            let orth = orth.finish("charlier-orthogonality", "appell", "Σ C_n C_m pmf = δ n! ν^n", tol, r);
            let passed = rec.passed && orth.passed;
            let report = Report {
                config: cfg.suite_config(),
                passed,
                suites: vec![rec, orth],
            };
            emit(&dir, "charlier", &report)
        }
        Command::Kernels => {
            let b = cfg.basis()?;
            let tol = cfg.tolerance.unwrap_or(1e-10);
            let mut sheet = Sheet::default();
            let r = kernel_table(&b, &mut sheet);
            let report = single(&cfg, sheet.finish("kernels", "appell", "monomial coefficients of P_n", tol, r));
            emit(&dir, "kernels", &report)
        }
        Command::Biorth => {
            let b = cfg.basis()?;
            let tol = cfg.tolerance.unwrap_or(1e-9);
            let mut rng = cfg.suite_config().rng_for("biorth");
            let mut sheet = Sheet::default();
            let r = suites::biorth_rows(&b, &mut rng, &mut sheet);
            let desc = "𝔼[(G^ξ)^n P_m(φ)] = δ_{nm} n!<ξ^{⊗n}, φ>";
            let report = single(&cfg, sheet.finish("biorth", "appell", desc, tol, r));
            emit(&dir, "biorth", &report)
        }
        Command::Growth => {
            let b = cfg.basis()?;
            let tol = cfg.tolerance.unwrap_or(0.0);
            let mut sheet = Sheet::default();
            let r = growth(&cfg, &b, &mut sheet);
            let report = single(&cfg, sheet.finish("growth", "appell", "growth bounds", tol, r));
            emit(&dir, "growth", &report)
        }
        Command::Wick(args) => wick_cmd(&cfg, &dir, args),
        Command::Transport(_) => unreachable!(),
    }
}

/// Coefficients of the classical polynomial families in one dimension.
fn classical(b: &AppellBasis) -> Option<Vec<Vec<f64>>> {
    if b.dim() != 1 {
        return None;
    }
    // P_{n+1} = (x - a_n) P_n - c_n P_{n-1}
    let (shift, step): (Box<dyn Fn(usize) -> f64>, Box<dyn Fn(usize) -> f64>) = match (b.model(), b.alpha()) {
        (MeasureModel::Gaussian { cov }, Alpha::Identity) => {
            let s2 = cov[(0, 0)];
            (Box::new(|_| 0.0), Box::new(move |n| n as f64 * s2))
        }
        (MeasureModel::Poisson { nu }, Alpha::Log1p) => {
            let nu = nu[0];
            (Box::new(move |n| n as f64 + nu), Box::new(move |n| nu * n as f64))
        }
        (MeasureModel::Delta { .. }, Alpha::Identity) => (Box::new(|_| 0.0), Box::new(|_| 0.0)),
        _ => return None,
    };
    let n_max = b.degree();
    let mut p = vec![vec![1.0]];
    for n in 0..n_max {
        let mut next = vec![0.0; n + 2];
        for (k, &c) in p[n].iter().enumerate() {
            next[k + 1] += c;
            next[k] -= shift(n) * c;
        }
        if n > 0 {
            for (k, &c) in p[n - 1].iter().enumerate() {
                next[k] -= step(n) * c;
            }
        }
        p.push(next);
    }
    Some(p)
}

fn index_label(u: &[usize]) -> String {
    u.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn kernel_table(b: &AppellBasis, s: &mut Sheet) -> appell_core::Result<()> {
    let d = b.dim();
    let big_n = b.degree();
    let table = classical(b);
    if table.is_none() {
        s.note("no classical table for this measure and α; expected values are left empty");
    }
    for n in 0..=big_n {
        for u in index_space(d, n).tuples.iter() {
            let kernels = (0..=big_n)
                .map(|k| if k == n { SymTensor::coordinate_dual(d, u) } else { SymTensor::zeros(d, k) })
                .collect();
            let mono = b.to_monomial(&b.test_function(kernels)?)?;
            for k in 0..=big_n {
                for sidx in index_space(d, k).tuples.iter() {
                    let value = mono.kernel(k).get(sidx);
                    let label = format!("P[{}] x^[{}]", index_label(u), index_label(sidx));
                    match &table {
                        Some(t) => s.close(&label, Some(n), Some(k), value, t[n].get(k).copied().unwrap_or(0.0)),
                        None => s.record(&label, Some(n), Some(k), value, f64::NAN, 0.0),
                    }
                }
            }
        }
    }
    Ok(())
}

fn growth(cfg: &RunConfig, b: &AppellBasis, s: &mut Sheet) -> appell_core::Result<()> {
    let r = b.p_alpha6_check(cfg.p, cfg.epsilon, cfg.trials, 5.0, cfg.seed)?;
    s.at_most("P_n bound ratio", None, r.worst_ratio, 1.0);
    s.note(format!(
        "σ_ε = {:.6} (p = {}, ε = {}); tensor-norm ratio at p+1 = {:.3e}",
        r.sigma_epsilon, cfg.p, cfg.epsilon, r.worst_tensor_ratio
    ));
    let d = b.dim();
    let top: Vec<SymTensor> = (0..=b.degree())
        .map(|n| if n == b.degree() { SymTensor::from_fn(d, n, |_| 1.0) } else { SymTensor::zeros(d, n) })
        .collect();
    let phi = b.test_function(top)?;
    let params = GrowthParams {
        p: cfg.p,
        q: cfg.q,
        epsilon: cfg.epsilon,
        trials: cfg.trials,
        radius: 10.0,
    };
    let g = b.growth_bound_check(&phi, params, cfg.seed.wrapping_add(1))?;
    s.flag("test-function growth", g.passes, g.fitted_constant);
    s.note(format!("fitted C = {:.6e} attained at |z| = {:.3}", g.fitted_constant, g.argmax_radius));
    Ok(())
}

fn read_kernels(path: &Path, b: &AppellBasis, want: Basis) -> Result<KernelSeq, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file = format::parse_kernels(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if file.basis != want {
        return Err(Failure::Usage(format!(
            "{}: expected {} kernels, found {}",
            path.display(),
            want.name(),
            file.basis.name()
        )));
    }
    if file.dim != b.dim() {
        return Err(Failure::Usage(format!(
            "{}: dimension {} does not match the configured {}",
            path.display(),
            file.dim,
            b.dim()
        )));
    }
    if file.kernels.len() > b.degree() + 1 {
        return Err(Failure::Usage(format!("{}: degree exceeds N = {}", path.display(), b.degree())));
    }
    let seq = match want {
        Basis::Dual => b.distribution(file.kernels)?,
        _ => b.test_function(file.kernels)?,
    };
    Ok(seq.with_degree(b.degree()))
}

fn write_kernels(path: &Path, seq: &KernelSeq) -> Result<(), Failure> {
    write_file(path, &format::write(&Fixture::Kernels(KernelFile::from_seq(seq))))
}

fn wick_cmd(cfg: &RunConfig, dir: &Path, args: &WickArgs) -> Outcome {
    let b = cfg.basis()?;
    let a = read_kernels(&args.a, &b, Basis::Dual)?;
    let second = || -> Result<KernelSeq, Failure> {
        let p = args
            .b
            .as_ref()
            .ok_or_else(|| Failure::Usage("this operation needs a second operand".into()))?;
        read_kernels(p, &b, Basis::Dual)
    };
    let sa = b.s_transform(&a)?;
    // result and the S-transform it should have
    let (result, expected): (KernelSeq, ScalarJet) = match args.op {
        WickOp::Mul => {
            let c = second()?;
            (wick::wick_mul(&a, &c)?, sa.mul(&b.s_transform(&c)?)?)
        }
        WickOp::Pow => {
            let mut want = ScalarJet::unit(b.dim(), b.degree());
            for _ in 0..args.power {
                want = want.mul(&sa)?;
            }
            (wick::wick_pow(&a, args.power)?, want)
        }
        WickOp::Fn => {
            if args.coeffs.is_empty() {
                return Err(Failure::Usage("`fn` needs --coeffs".into()));
            }
            let z0 = a.kernel(0).value();
            let centered = sa.sub(&ScalarJet::constant(b.dim(), b.degree(), z0))?;
            let mut want = ScalarJet::zero(b.dim(), b.degree());
            let mut power = ScalarJet::unit(b.dim(), b.degree());
            for (k, &c) in args.coeffs.iter().enumerate() {
                if k > 0 {
                    power = power.mul(&centered)?;
                }
                want = want.add(&power.scaled(c))?;
            }
            (wick::wick_fn(&args.coeffs, &a)?, want)
        }
        WickOp::Inv => (wick::wick_inv(&a)?, sa.recip()?),
        WickOp::Solve => {
            let c = second()?;
            (wick::wick_solve(&a, &c)?, b.s_transform(&c)?.mul(&sa.recip()?)?)
        }
    };
    write_kernels(&dir.join("wick_result.txt"), &result)?;
    let tol = cfg.tolerance.unwrap_or(1e-11);
    let mut sheet = Sheet::default();
    let got = b.s_transform(&result)?;
    let r = sheet.jet("S-transform", &got, &expected);
    let report = single(cfg, sheet.finish("wick", "wick", "S-transform of the result", tol, r));
    say!("wrote {}", dir.join("wick_result.txt").display());
    emit(dir, "wick", &report)
}

fn transport(common: &Common, args: &TransportArgs) -> Outcome {
    let from_cfg = load_config(Some(&args.from), common)?;
    let to_cfg = load_config(Some(&args.to), common)?;
    let dir = out_dir(common, &to_cfg);
    let from = from_cfg.basis()?;
    let to = to_cfg.basis()?;
    if from.alpha_key() != to.alpha_key() {
        return Err(Failure::Usage("--from and --to must use the same α".into()));
    }
    let sc = to_cfg.suite_config();
    let mut rng = sc.rng_for("transport");
    let dist = match &args.dist {
        Some(p) => read_kernels(p, &from, Basis::Dual)?,
        None => from.distribution(random::kernels(&mut rng, from.dim(), from.degree()))?,
    };
    let test = match &args.test {
        Some(p) => read_kernels(p, &from, Basis::Appell)?,
        None => from.test_function(random::kernels(&mut rng, from.dim(), from.degree()))?,
    };
    let moved_dist = remeasure::transport_dist(&from, &to, &dist)?;
    let moved_test = remeasure::reorder_test(&from, &to, &test)?;
    write_kernels(&dir.join("transport_dist.txt"), &moved_dist)?;
    write_kernels(&dir.join("transport_test.txt"), &moved_test)?;

    let tol = to_cfg.tolerance.unwrap_or(1e-10);
    let mut sheet = Sheet::default();
    let r = (|| -> appell_core::Result<()> {
        for _ in 0..10 {
            let f = to.test_function(random::kernels(&mut rng, to.dim(), to.degree()))?;
            let back = remeasure::reorder_test(&to, &from, &f)?;
            sheet.close("pairing", None, None, to.pair(&moved_dist, &f)?, from.pair(&dist, &back)?);
            let z = random::vector(&mut rng, to.dim(), 1.5);
            sheet.close("test value", None, None, to.eval_test(&moved_test, &z)?, from.eval_test(&test, &z)?);
        }
        let twice = remeasure::transport_dist(&to, &from, &moved_dist)?;
        sheet.seq("double transport", &twice, &dist)?;
        Ok(())
    })();
    let desc = "pairing invariance and double transport";
    let report = single(&to_cfg, sheet.finish("transport", "remeasure", desc, tol, r));
    emit(&dir, "transport", &report)
}
