//! The `heun` command-line front end. JSON goes to stdout, CSV to stdout or
//! `--out`; failures print a JSON error object on stderr and exit with
//! 1 (usage), 2 (domain) or 3 (convergence).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{ErrorClass, HeunError, Result};
use crate::params::{Branch, BranchKind, HeunParams, SeriesValue};
use crate::recurrence::{coeff_a, coeff_b, frobenius_coeffs, frobenius_eval, SeriesControl};
use crate::transform::{builtin_record, load_transformation_table, transformed_eval, TransformationRecord};
use crate::trf::{
    detect_b_termination, trf_eval_infinite, trf_eval_poly_ab, trf_eval_poly_b, trf_extract_coeffs, TerminationReport,
    TrfTruncation,
};
use crate::verify::{compare_methods, ode_residual, residual_scale, rk_oracle, rk_start, Method, RK_TOL};

#[derive(Parser, Debug)]
#[command(name = "heun", version, about = "Local Frobenius solutions of the general Heun equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one local solution at a point (JSON)
    #[command(allow_negative_numbers = true)]
    Eval(EvalArgs),
    /// Power-series coefficients c_0..c_M (CSV k,c_k)
    #[command(allow_negative_numbers = true)]
    Coeffs(CoeffsArgs),
    /// Evaluate several methods at several points and compare (JSON)
    #[command(allow_negative_numbers = true)]
    Compare(CompareArgs),
    /// Evaluate a transformed local solution (JSON)
    #[command(allow_negative_numbers = true)]
    Transform(TransformArgs),
    /// Evaluate over a uniform grid in one parameter (CSV)
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Recurrence coefficients A_n, B_n (CSV n,A_n,B_n)
    #[command(allow_negative_numbers = true)]
    Terms(TermsArgs),
    /// Left-hand side of the Heun equation for given y, y', y'' (JSON)
    #[command(allow_negative_numbers = true)]
    Residual(ResidualArgs),
    /// Where B_n vanishes and how that bounds each sub-series (JSON)
    #[command(allow_negative_numbers = true)]
    Termination(TerminationArgs),
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Rejected: epsilon is always derived
    #[arg(long, hide = true, num_args = 0..=1, allow_hyphen_values = true)]
    epsilon: Option<Option<String>>,
}

const PARAM_NAMES: [&str; 6] = ["a", "q", "alpha", "beta", "gamma", "delta"];

impl ParamArgs {
    fn raw(&self) -> Result<[Option<f64>; 6]> {
        if self.epsilon.is_some() {
            return Err(HeunError::Usage(
                "--epsilon is not accepted: epsilon is derived from the constraint epsilon = alpha + beta - gamma - delta + 1"
                    .into(),
            ));
        }
        Ok([self.a, self.q, self.alpha, self.beta, self.gamma, self.delta])
    }

    /// All six values, with `swept` (if any) filled by `value`.
    fn values(&self, swept: Option<(usize, f64)>) -> Result<[f64; 6]> {
        let raw = self.raw()?;
        let mut out = [0.0; 6];
        for (i, v) in raw.iter().enumerate() {
            out[i] = match (swept, v) {
                (Some((j, s)), _) if j == i => s,
                (_, Some(v)) => *v,
                (_, None) => return Err(HeunError::Usage(format!("missing required flag --{}", PARAM_NAMES[i]))),
            };
        }
        Ok(out)
    }

    fn params(&self) -> Result<HeunParams> {
        let [a, q, al, be, ga, de] = self.values(None)?;
        HeunParams::new(a, q, al, be, ga, de)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BranchArg {
    First,
    Second,
}

impl From<BranchArg> for BranchKind {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::First => BranchKind::First,
            BranchArg::Second => BranchKind::Second,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Frobenius,
    Trf,
    Rk,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Frobenius => Method::Frobenius,
            MethodArg::Trf => Method::Trf,
            MethodArg::Rk => Method::Rk,
        }
    }
}

/// Which closed form the `trf` method sums.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
enum FormArg {
    #[default]
    Infinite,
    PolyB,
    PolyAb,
}

#[derive(Args, Debug, Clone)]
struct BranchOpts {
    #[arg(long, value_enum, default_value = "first")]
    branch: BranchArg,
    /// Normalize with c_0 = 1 instead of a^{-(1-gamma)/2} on the second branch
    #[arg(long)]
    unit_c0: bool,
}

impl BranchOpts {
    fn branch(&self, params: &HeunParams) -> Result<Branch> {
        if self.unit_c0 {
            Branch::unit(self.branch.into(), params)
        } else {
            Branch::new(self.branch.into(), params)
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ControlOpts {
    /// Relative tolerance (series tail or integrator)
    #[arg(long)]
    tol: Option<f64>,
    /// Term cap (Frobenius) or sub-series cap (trf)
    #[arg(long)]
    n_max: Option<usize>,
    /// Cap on each inner sum (trf)
    #[arg(long)]
    inner_cap: Option<usize>,
}

impl ControlOpts {
    fn series(&self) -> SeriesControl {
        let d = SeriesControl::default();
        SeriesControl {
            tol: self.tol.unwrap_or(d.tol),
            n_max: self.n_max.unwrap_or(d.n_max),
        }
    }

    fn trf(&self) -> TrfTruncation {
        let d = TrfTruncation::default();
        TrfTruncation {
            n_max: self.n_max.unwrap_or(d.n_max),
            inner_cap: self.inner_cap.unwrap_or(d.inner_cap),
            tol: self.tol.unwrap_or(d.tol),
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    x: f64,
    #[command(flatten)]
    branch: BranchOpts,
    #[arg(long, value_enum, default_value = "trf")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "infinite")]
    form: FormArg,
    #[command(flatten)]
    control: ControlOpts,
}

#[derive(Args, Debug)]
struct CoeffsArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    branch: BranchOpts,
    /// Highest coefficient index M
    #[arg(long)]
    order: usize,
    #[arg(long, value_enum, default_value = "frobenius")]
    method: MethodArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    branch: BranchOpts,
    /// Comma-separated evaluation points
    #[arg(long, default_value = "")]
    xs: String,
    /// Comma-separated subset of frobenius,trf,rk
    #[arg(long, default_value = "frobenius,trf,rk")]
    methods: String,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Built-in record
    #[arg(long, value_parser = ["identity", "eq61"], conflicts_with = "table", required_unless_present = "table")]
    builtin: Option<String>,
    /// JSON transformation table
    #[arg(long)]
    table: Option<PathBuf>,
    /// Record name within --table (optional when the table has one record)
    #[arg(long, requires = "table")]
    record: Option<String>,
    #[arg(long)]
    x: f64,
    #[command(flatten)]
    branch: BranchOpts,
    #[command(flatten)]
    control: ControlOpts,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// `sym:lo:hi:n` with sym one of a, q, alpha, beta, gamma, delta, x
    #[arg(long)]
    sweep: String,
    #[arg(long)]
    x: Option<f64>,
    #[command(flatten)]
    branch: BranchOpts,
    #[arg(long, value_enum, default_value = "trf")]
    method: MethodArg,
    #[command(flatten)]
    control: ControlOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TermsArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    branch: BranchOpts,
    /// Highest index
    #[arg(long)]
    order: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ResidualArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long)]
    d1: f64,
    #[arg(long)]
    d2: f64,
}

#[derive(Args, Debug)]
struct TerminationArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    branch: BranchOpts,
}

/// One evaluated point. The key set is the same for every method; quantities
/// a method does not produce are `null`.
#[derive(Debug, Clone, Serialize)]
struct OutputRecord {
    params: HeunParams,
    branch: BranchKind,
    method: &'static str,
    transformation: Option<String>,
    x: f64,
    value: f64,
    d1: Option<f64>,
    d2: Option<f64>,
    error_estimate: Option<f64>,
    terms_used: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Evaluated {
    value: f64,
    d1: Option<f64>,
    d2: Option<f64>,
    error_estimate: Option<f64>,
    terms_used: Option<usize>,
}

impl From<SeriesValue> for Evaluated {
    fn from(v: SeriesValue) -> Self {
        Evaluated {
            value: v.value,
            d1: Some(v.d1),
            d2: Some(v.d2),
            error_estimate: Some(v.error_estimate),
            terms_used: Some(v.terms_used),
        }
    }
}

fn evaluate(
    params: &HeunParams,
    branch: &Branch,
    method: MethodArg,
    form: FormArg,
    x: f64,
    control: &ControlOpts,
) -> Result<Evaluated> {
    Ok(match method {
        MethodArg::Frobenius => frobenius_eval(params, branch, x, &control.series())?.into(),
        MethodArg::Trf => {
            let trunc = control.trf();
            match form {
                FormArg::Infinite => trf_eval_infinite(params, branch, x, &trunc)?,
                FormArg::PolyB => trf_eval_poly_b(params, branch, x, &trunc)?,
                FormArg::PolyAb => trf_eval_poly_ab(params, branch, x, &trunc)?,
            }
            .into()
        }
        MethodArg::Rk => Evaluated {
            value: rk_oracle(params, branch, x, rk_start(x), control.tol.unwrap_or(RK_TOL))?,
            d1: None,
            d2: None,
            error_estimate: None,
            terms_used: None,
        },
    })
}

/// `%.15g`-style formatting: 15 significant digits, trailing zeros dropped,
/// exponent form outside `[1e-4, 1e15)`.
pub fn format_g15(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

fn write_csv(rows: Vec<Vec<String>>, out_path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| HeunError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HeunError::Io(e.to_string()))?;
    match out_path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| HeunError::Io(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(&bytes).map_err(|e| HeunError::Io(e.to_string())),
    }
}

fn write_json(value: &impl Serialize, out: &mut dyn Write) -> Result<()> {
    let s = serde_json::to_string(value).map_err(|e| HeunError::Io(e.to_string()))?;
    writeln!(out, "{s}").map_err(|e| HeunError::Io(e.to_string()))
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.params.params()?;
    let branch = args.branch.branch(&params)?;
    let v = evaluate(&params, &branch, args.method, args.form, args.x, &args.control)?;
    let method = Method::from(args.method).name();
    write_json(&record(params, branch.kind, method, None, args.x, v), out)
}

fn record(
    params: HeunParams,
    branch: BranchKind,
    method: &'static str,
    transformation: Option<String>,
    x: f64,
    v: Evaluated,
) -> OutputRecord {
    OutputRecord {
        params,
        branch,
        method,
        transformation,
        x,
        value: v.value,
        d1: v.d1,
        d2: v.d2,
        error_estimate: v.error_estimate,
        terms_used: v.terms_used,
    }
}

fn cmd_coeffs(args: CoeffsArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.params.params()?;
    let branch = args.branch.branch(&params)?;
    let c = match args.method {
        MethodArg::Frobenius => frobenius_coeffs(&params, &branch, args.order)?.c,
        MethodArg::Trf => trf_extract_coeffs(&params, &branch, args.order)?,
        MethodArg::Rk => return Err(HeunError::Usage("coeffs supports --method frobenius or trf".into())),
    };
    let mut rows = vec![vec!["k".to_string(), "c_k".to_string()]];
    // `+ 0.0` folds -0 into 0: the sign of a vanishing coefficient depends on
    // the evaluation order, not on the solution
    rows.extend(c.iter().enumerate().map(|(k, v)| vec![k.to_string(), format_g15(*v + 0.0)]));
    write_csv(rows, args.out.as_ref(), out)
}

fn parse_list<T>(text: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).ok_or_else(|| HeunError::Usage(format!("invalid {what} `{s}`"))))
        .collect()
}

fn cmd_compare(args: CompareArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.params.params()?;
    let branch = args.branch.branch(&params)?;
    let xs = parse_list(&args.xs, "point", |s| s.parse::<f64>().ok())?;
    let methods = parse_list(&args.methods, "method", |s| s.parse::<Method>().ok())?;
    if methods.is_empty() {
        return Err(HeunError::Usage("--methods must name at least one method".into()));
    }
    write_json(&compare_methods(&params, &branch, &xs, &methods), out)
}

fn cmd_transform(args: TransformArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let rec: TransformationRecord = match (&args.builtin, &args.table) {
        (Some(name), _) => builtin_record(name).ok_or_else(|| HeunError::Usage(format!("unknown builtin `{name}`")))?,
        (None, Some(path)) => {
            let table = load_transformation_table(path)?;
            match &args.record {
                Some(name) => table
                    .into_iter()
                    .find(|r| &r.name == name)
                    .ok_or_else(|| HeunError::Usage(format!("no record named `{name}` in {}", path.display())))?,
                None if table.len() == 1 => table.into_iter().next().expect("one record"),
                None => {
                    return Err(HeunError::Usage(format!(
                        "{} holds {} records; choose one with --record",
                        path.display(),
                        table.len()
                    )))
                }
            }
        }
        (None, None) => return Err(HeunError::Usage("one of --builtin or --table is required".into())),
    };
    for w in &rec.warnings {
        let _ = writeln!(err, "{}", json!({ "warning": w, "record": rec.name }));
    }
    let params = args.params.params()?;
    if args.branch.unit_c0 {
        return Err(HeunError::Usage("--unit-c0 is not supported by transform".into()));
    }
    let v = transformed_eval(&rec, &params, args.branch.branch.into(), args.x, &args.control.trf())?;
    write_json(&record(params, args.branch.branch.into(), "trf", Some(rec.name.clone()), args.x, v.into()), out)
}

const SWEEP_SYMBOLS: [&str; 7] = ["a", "q", "alpha", "beta", "gamma", "delta", "x"];

struct SweepSpec {
    symbol: usize,
    lo: f64,
    hi: f64,
    n: usize,
}

impl SweepSpec {
    fn parse(text: &str) -> Result<Self> {
        let bad = |m: &str| HeunError::Usage(format!("--sweep `{text}`: {m} (expected sym:lo:hi:n)"));
        let parts: Vec<&str> = text.split(':').collect();
        let [sym, lo, hi, n] = parts[..] else {
            return Err(bad("wrong number of fields"));
        };
        let symbol = SWEEP_SYMBOLS
            .iter()
            .position(|s| *s == sym)
            .ok_or_else(|| bad("unknown symbol"))?;
        let lo: f64 = lo.parse().map_err(|_| bad("invalid lower bound"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("invalid upper bound"))?;
        let n: usize = n.parse().map_err(|_| bad("invalid point count"))?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if n < 2 {
            return Err(bad("need at least 2 points"));
        }
        if lo == hi {
            return Err(bad("degenerate range"));
        }
        Ok(SweepSpec { symbol, lo, hi, n })
    }

    fn grid(&self) -> Vec<f64> {
        let last = self.n - 1;
        (0..self.n)
            .map(|i| {
                if i == last {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

fn cmd_sweep(args: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SweepSpec::parse(&args.sweep)?;
    let sweeps_x = spec.symbol == 6;
    if !sweeps_x && args.x.is_none() {
        return Err(HeunError::Usage("missing required flag --x".into()));
    }
    // surface missing flags before evaluating anything
    let swept_param = (!sweeps_x).then_some(spec.symbol);
    args.params.values(swept_param.map(|i| (i, 0.0)))?;

    let grid = spec.grid();
    let results: Vec<Result<Evaluated>> = grid
        .par_iter()
        .map(|&s| {
            let [a, q, al, be, ga, de] = args.params.values(swept_param.map(|i| (i, s)))?;
            let params = HeunParams::new(a, q, al, be, ga, de)?;
            let branch = args.branch.branch(&params)?;
            let x = if sweeps_x { s } else { args.x.unwrap_or_default() };
            evaluate(&params, &branch, args.method, FormArg::Infinite, x, &args.control)
        })
        .collect();

    let mut rows = vec![vec![
        SWEEP_SYMBOLS[spec.symbol].to_string(),
        "value".into(),
        "error_estimate".into(),
        "error".into(),
    ]];
    for (s, r) in grid.iter().zip(results) {
        rows.push(match r {
            Ok(v) => vec![
                format_g15(*s),
                format_g15(v.value),
                v.error_estimate.map(format_g15).unwrap_or_default(),
                String::new(),
            ],
            Err(e) => vec![format_g15(*s), "nan".into(), "nan".into(), e.to_string()],
        });
    }
    write_csv(rows, args.out.as_ref(), out)
}

fn cmd_terms(args: TermsArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.params.params()?;
    let branch = args.branch.branch(&params)?;
    let mut rows = vec![vec!["n".to_string(), "A_n".to_string(), "B_n".to_string()]];
    for n in 0..=args.order {
        let a = coeff_a(n, branch.lambda, &params)?;
        let b = if n == 0 {
            String::new()
        } else {
            format_g15(coeff_b(n, branch.lambda, &params)?)
        };
        rows.push(vec![n.to_string(), format_g15(a), b]);
    }
    write_csv(rows, args.out.as_ref(), out)
}

fn cmd_residual(args: ResidualArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.params.params()?;
    let r = ode_residual(&params, args.x, args.y, args.d1, args.d2)?;
    let scale = residual_scale(&params, args.x, args.y, args.d1, args.d2);
    #[derive(Serialize)]
    struct ResidualRecord {
        params: HeunParams,
        x: f64,
        y: f64,
        d1: f64,
        d2: f64,
        residual: f64,
        scale: f64,
    }
    let rec = ResidualRecord {
        params,
        x: args.x,
        y: args.y,
        d1: args.d1,
        d2: args.d2,
        residual: r,
        scale,
    };
    write_json(&rec, out)
}

fn cmd_termination(args: TerminationArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.params.params()?;
    let branch = args.branch.branch(&params)?;
    #[derive(Serialize)]
    struct TerminationRecord {
        params: HeunParams,
        branch: BranchKind,
        lambda: f64,
        report: TerminationReport,
    }
    let rec = TerminationRecord {
        params,
        branch: branch.kind,
        lambda: branch.lambda,
        report: detect_b_termination(&params, &branch),
    };
    write_json(&rec, out)
}

fn error_json(class: ErrorClass, kind: &str, message: &str) -> serde_json::Value {
    json!({
        "error": {
            "class": class.name(),
            "kind": kind,
            "exit_code": class.exit_code(),
            "message": message,
        }
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let message = e.render().to_string();
                    let message = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
                    let _ = writeln!(err, "{}", error_json(ErrorClass::Usage, "usage", message));
                    ErrorClass::Usage.exit_code()
                }
            };
        }
    };
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a, out),
        Command::Coeffs(a) => cmd_coeffs(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Transform(a) => cmd_transform(a, out, err),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Terms(a) => cmd_terms(a, out),
        Command::Residual(a) => cmd_residual(a, out),
        Command::Termination(a) => cmd_termination(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", error_json(e.class(), e.kind(), &e.to_string()));
            e.class().exit_code()
        }
    }
}
