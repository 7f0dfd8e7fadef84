//! `jpk`: evaluate the Jain and Phillips-type operators, print their moment
//! tables, verify the identities and run convergence experiments.
//!
//! Exit codes: 0 success, 1 a verified identity failed, 2 invalid input,
//! 3 numerical evaluation failed.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jpk_core::basis::JainParams;
use jpk_core::identity_lab::{
    differential_suite, korovkin_convergence_table, recurrence_suite, second_modulus_bound_check,
    voronovskaja_experiment, GridSize, IdentityOutcome, LimitForm,
};
use jpk_core::moments::{
    b_moment_closed, central_moment_closed, central_moment_derived, f_poly_closed, p_poly_recur,
    t_moment_general,
};
use jpk_core::numerics::SeriesQuadConfig;
use jpk_core::operators::{apply_jain, apply_phillips, TestFunction, BUILTIN_NAMES};
use jpk_core::symbolic::{ExactPoly, ExpPoly};
use jpk_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "jpk", version, about = "Jain and Phillips-type operator toolkit")]
struct Cli {
    /// key=value file overriding k_max, tail_tol, quad_rel_tol, quad_max_subdiv.
    /// Falls back to the JPK_CONFIG environment variable.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply an operator to a built-in function.
    Eval(EvalArgs),
    /// Print moment tables.
    Moments(MomentsArgs),
    /// Check the recurrences and differential identities.
    Verify(VerifyArgs),
    /// Run a convergence experiment.
    Converge(ConvergeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Jain,
    Phillips,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    op: Operator,
    /// One of const, linear, square, cube, exp-neg, sin, abs-sin.
    #[arg(long = "fn")]
    function: String,
    #[arg(long)]
    n: f64,
    #[arg(long)]
    beta: f64,
    /// A point, or a range `a:b:steps`; repeatable.
    #[arg(long, required = true)]
    x: Vec<String>,
    /// Overrides the series tail tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    #[value(name = "B")]
    Jain,
    #[value(name = "T")]
    Moment,
    #[value(name = "mu")]
    Central,
    #[value(name = "P")]
    Ratio,
    #[value(name = "f")]
    Reduced,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Symbolic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CentralSource {
    /// Binomial expansion over the moments.
    Derived,
    /// The transcribed closed forms.
    Closed,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    r_max: usize,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Evaluation points (the basis index k for `--kind P`); repeatable,
    /// ranges `a:b:steps` allowed.
    #[arg(long)]
    x: Vec<String>,
    #[arg(long, value_enum, default_value = "symbolic")]
    format: Format,
    /// Which central-moment expressions to print.
    #[arg(long, value_enum, default_value = "derived")]
    source: CentralSource,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Recurrences,
    Differential,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Small,
    Full,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, value_enum, default_value = "small")]
    grid: Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Voronovskaja,
    Korovkin,
    Bound,
}

#[derive(Clone, Copy, ValueEnum)]
enum Limit {
    /// Coefficients as stated with the asymptotic theorem.
    Stated,
    /// Coefficients read off the exact central moments.
    Moments,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long = "fn")]
    function: String,
    #[arg(long)]
    beta: f64,
    /// Point(s) for the asymptotic and bound experiments.
    #[arg(long)]
    x: Vec<String>,
    /// `a:b` for the uniform-error experiment.
    #[arg(long, default_value = "0:2")]
    interval: String,
    /// Grid points in the interval.
    #[arg(long, default_value_t = 31)]
    grid_size: usize,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long, value_enum, default_value = "stated")]
    limit: Limit,
    /// Constant multiplying ω₂ in the bound experiment.
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Identity(String),
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Identity(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Range { .. } => Failure::Usage(e.to_string()),
            Error::Quadrature { .. } | Error::Truncation { .. } | Error::Serialization(_) => {
                Failure::Numeric(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Identity(report) => print!("{report}"),
                Failure::Usage(msg) | Failure::Numeric(msg) => eprintln!("jpk: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let path = cli
        .config
        .or_else(|| std::env::var_os("JPK_CONFIG").map(PathBuf::from));
    let cfg = match path {
        Some(p) => config::load(&p).map_err(Failure::Usage)?,
        None => SeriesQuadConfig::default(),
    };
    match cli.command {
        Command::Eval(a) => cmd_eval(a, cfg),
        Command::Moments(a) => cmd_moments(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Converge(a) => cmd_converge(a, cfg),
    }
}

/// Fixed 17-significant-digit scientific notation.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_points(specs: &[String]) -> Result<Vec<f64>, Failure> {
    let mut out = Vec::new();
    for s in specs {
        let parts: Vec<&str> = s.split(':').collect();
        let f = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Usage(format!("bad number {t:?}: {e}")))
        };
        match parts.as_slice() {
            [v] => out.push(f(v)?),
            [a, b, steps] => {
                let (a, b) = (f(a)?, f(b)?);
                let steps: usize = steps
                    .trim()
                    .parse()
                    .map_err(|e| Failure::Usage(format!("bad step count in {s:?}: {e}")))?;
                if steps == 0 {
                    return Err(Failure::Usage(format!("range {s:?} needs at least one step")));
                }
                if steps == 1 {
                    out.push(a);
                } else {
                    out.extend((0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64));
                }
            }
            _ => return Err(Failure::Usage(format!("expected a number or a:b:steps, got {s:?}"))),
        }
    }
    Ok(out)
}

fn parse_n_list(s: Option<&str>, default: &[f64]) -> Result<Vec<f64>, Failure> {
    let Some(s) = s else {
        return Ok(default.to_vec());
    };
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Usage(format!("bad n value {t:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) || v.iter().any(|n| !(*n > 0.0)) {
        return Err(Failure::Usage(format!("n list must be positive and strictly increasing: {s}")));
    }
    Ok(v)
}

fn builtin(name: &str) -> Result<TestFunction, Failure> {
    TestFunction::builtin(name).ok_or_else(|| {
        Failure::Usage(format!("unknown function {name:?}; expected one of {}", BUILTIN_NAMES.join(", ")))
    })
}

fn cmd_eval(a: EvalArgs, mut cfg: SeriesQuadConfig) -> Result<String, Failure> {
    if let Some(t) = a.tol {
        cfg.tail_tol = t;
        cfg.validate()?;
    }
    let p = JainParams::new(a.n, a.beta)?;
    let f = builtin(&a.function)?;
    let xs = parse_points(&a.x)?;
    let mut out = String::from("x,value\n");
    for x in xs {
        let v = match a.op {
            Operator::Jain => apply_jain(p, &f, x, &cfg)?,
            Operator::Phillips => apply_phillips(p, &f, x, &cfg)?,
        };
        writeln!(out, "{},{}", num(x), num(v)).unwrap();
    }
    Ok(out)
}

enum Table {
    Poly(ExactPoly),
    Exp(ExpPoly),
}

impl Table {
    fn text(&self, main: &str) -> String {
        match self {
            Table::Poly(p) => p.to_text(main),
            Table::Exp(e) => e.to_text(),
        }
    }

    fn eval(&self, point: f64, beta: f64, n: f64) -> jpk_core::Result<f64> {
        match self {
            Table::Poly(p) => p.eval(point, beta, n),
            Table::Exp(e) => e.eval(point, beta, n),
        }
    }
}

fn cmd_moments(a: MomentsArgs) -> Result<String, Failure> {
    let (label, start) = match a.kind {
        Kind::Jain => ("B", 0),
        Kind::Moment => ("T", 0),
        Kind::Central => ("mu", 1),
        Kind::Ratio => ("P", 0),
        Kind::Reduced => ("f", 0),
    };
    if a.kind == Kind::Central && a.r_max == 0 {
        return Err(Failure::Usage(
            "central moments are tabulated from r = 1 (mu_0 = 1 identically)".into(),
        ));
    }
    let mut tables = Vec::new();
    for r in start..=a.r_max {
        let t = match a.kind {
            Kind::Jain => Table::Poly(b_moment_closed(r)?),
            Kind::Moment => Table::Exp(t_moment_general(r)?),
            Kind::Central => Table::Exp(match a.source {
                CentralSource::Derived => central_moment_derived(r)?,
                CentralSource::Closed => central_moment_closed(r)?,
            }),
            Kind::Ratio => Table::Poly(p_poly_recur(r)),
            Kind::Reduced => Table::Poly(f_poly_closed(r)?),
        };
        tables.push((r, t));
    }
    let main = if a.kind == Kind::Ratio { "k" } else { "x" };
    if a.format == Format::Symbolic {
        let mut out = String::new();
        for (r, t) in &tables {
            writeln!(out, "# {label}_{r}\n{}", t.text(main)).unwrap();
        }
        return Ok(out);
    }
    let (Some(n), Some(beta)) = (a.n, a.beta) else {
        return Err(Failure::Usage("numeric formats need --n and --beta".into()));
    };
    JainParams::new(n, beta)?;
    let points = parse_points(&a.x)?;
    if points.is_empty() {
        return Err(Failure::Usage("numeric formats need at least one --x".into()));
    }
    let mut rows = Vec::new();
    for (r, t) in &tables {
        for &x in &points {
            rows.push((*r, x, t.eval(x, beta, n)?));
        }
    }
    Ok(match a.format {
        Format::Csv => {
            let mut out = format!("kind,r,{main},value\n");
            for (r, x, v) in rows {
                writeln!(out, "{label},{r},{},{}", num(x), num(v)).unwrap();
            }
            out
        }
        _ => {
            let items: Vec<_> = rows
                .iter()
                .map(|(r, x, v)| json!({"kind": label, "r": r, main: x, "value": v}))
                .collect();
            let doc = json!({"n": n, "beta": beta, "values": items});
            format!("{}\n", serde_json::to_string(&doc).expect("json"))
        }
    })
}

fn cmd_verify(a: VerifyArgs) -> Result<String, Failure> {
    let grid = match a.grid {
        Grid::Small => GridSize::Small,
        Grid::Full => GridSize::Full,
    };
    let mut outcomes: Vec<IdentityOutcome> = Vec::new();
    if matches!(a.suite, Suite::Recurrences | Suite::All) {
        outcomes.extend(recurrence_suite()?);
    }
    if matches!(a.suite, Suite::Differential | Suite::All) {
        outcomes.extend(differential_suite(grid)?);
    }
    let mut out = String::new();
    for o in &outcomes {
        writeln!(
            out,
            "{} {}: max residual {} at {}; {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            if o.max_residual.is_nan() { "exact".to_string() } else { num(o.max_residual) },
            o.worst_point,
            o.detail
        )
        .unwrap();
    }
    if outcomes.iter().all(|o| o.passed) {
        Ok(out)
    } else {
        Err(Failure::Identity(out))
    }
}

fn cmd_converge(a: ConvergeArgs, cfg: SeriesQuadConfig) -> Result<String, Failure> {
    if !(0.0..1.0).contains(&a.beta) {
        return Err(Failure::Usage(format!("beta must lie in [0, 1), got {}", a.beta)));
    }
    let f = builtin(&a.function)?;
    let text = match a.experiment {
        Experiment::Voronovskaja => {
            let (fp, fpp) = TestFunction::builtin_derivatives(&a.function).ok_or_else(|| {
                Failure::Usage(format!("{} has no second derivative everywhere", a.function))
            })?;
            let x = single_point(&a.x)?;
            let ns = parse_n_list(a.n_list.as_deref(), &[8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0])?;
            let form = match a.limit {
                Limit::Stated => LimitForm::Stated,
                Limit::Moments => LimitForm::CentralMoments,
            };
            voronovskaja_experiment(a.beta, &f, &fp, &fpp, x, &ns, form, &cfg)?.to_csv()?
        }
        Experiment::Korovkin => {
            let (lo, hi) = parse_interval(&a.interval)?;
            let ns = parse_n_list(a.n_list.as_deref(), &[4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0])?;
            korovkin_convergence_table(a.beta, &f, (lo, hi), &ns, a.grid_size, &cfg)?.to_csv()?
        }
        Experiment::Bound => {
            let xs = if a.x.is_empty() { vec![1.0] } else { parse_points(&a.x)? };
            let ns = parse_n_list(a.n_list.as_deref(), &[4.0, 16.0, 64.0])?;
            let mut out = String::from("n,x,lhs,rhs,c_min,holds\n");
            for &n in &ns {
                let p = JainParams::new(n, a.beta)?;
                for &x in &xs {
                    let b = second_modulus_bound_check(p, &f, x, a.c, &cfg)?;
                    writeln!(out, "{},{},{},{},{},{}", num(n), num(x), num(b.lhs), num(b.rhs), num(b.c_min), b.holds)
                        .unwrap();
                }
            }
            out
        }
    };
    match a.out {
        Some(path) => {
            std::fs::write(&path, &text)
                .map_err(|e| Failure::Numeric(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn single_point(specs: &[String]) -> Result<f64, Failure> {
    match parse_points(specs)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(Failure::Usage("this experiment takes exactly one --x".into())),
    }
}

fn parse_interval(s: &str) -> Result<(f64, f64), Failure> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Failure::Usage(format!("interval must be a:b, got {s:?}")))?;
    let p = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| Failure::Usage(format!("bad interval end {t:?}: {e}")))
    };
    Ok((p(a)?, p(b)?))
}
