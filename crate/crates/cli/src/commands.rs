use rayon::prelude::*;
use serde::Serialize;
use vofrac::{
    calibrate_alpha, compare, evaluate, evaluate_many, linspace, solve_fixed_point, DimensionField, EpsilonField,
    EvalResult, FunctionSpec, GridFunction, ModelProblem, OperatorSide, OperatorSpec, OrderLaw, Sign, Trust, Which,
};

use crate::args::{CompareArgs, DifferintArgs, Format, PointArgs, SideArg, SolveArgs, SweepArgs, VaryArg, WhichArg};
use crate::io::{fmt_f64, ingest_csv, to_json, IoError};

pub const DEFAULT_POINTS: usize = 4097;
pub const DEFAULT_SOLVER_POINTS: usize = 1025;

#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: "invalid-input".into(), message: message.into(), exit: 1 }
    }
}

impl From<vofrac::Error> for CliError {
    fn from(e: vofrac::Error) -> Self {
        let exit = if e.is_validation() { 1 } else { 2 };
        Self { code: e.code().into(), message: e.to_string(), exit }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Grid(inner) => inner.into(),
            other => Self { code: other.code().into(), message: other.to_string(), exit: 1 },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Rendered output plus a note when a solve did not converge.
pub struct Output {
    pub text: String,
    pub nonconverged: Option<String>,
}

impl Output {
    fn done(text: String) -> Self {
        Self { text, nonconverged: None }
    }
}

#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    command: &'static str,
    #[serde(flatten)]
    args: &'a A,
}

#[derive(Serialize)]
struct JsonRun<'a, A: Serialize, R: Serialize> {
    config: RunConfig<'a, A>,
    report: &'a R,
}

fn json_output<A: Serialize, R: Serialize>(command: &'static str, args: &A, report: &R) -> String {
    let mut s = to_json(&JsonRun { config: RunConfig { command, args }, report });
    s.push('\n');
    s
}

fn csv_output<A: Serialize>(command: &'static str, args: &A, header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut buf = format!("# config {}\n", to_json(&RunConfig { command, args })).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).expect("in-memory CSV");
        for row in rows {
            w.write_record(row).expect("in-memory CSV");
        }
        w.flush().expect("in-memory CSV");
    }
    String::from_utf8(buf).expect("CSV is UTF-8")
}

fn trust_name(t: Trust) -> &'static str {
    match t {
        Trust::Interior => "interior",
        Trust::Boundary => "boundary",
    }
}

fn parse_function(src: &str) -> CliResult<FunctionSpec<f64>> {
    match src.strip_prefix('@') {
        Some(path) => Ok(FunctionSpec::Sampled(ingest_csv(path)?)),
        None => Ok(FunctionSpec::parse(src)?),
    }
}

fn resolve_points(p: &mut PointArgs) -> CliResult<Vec<f64>> {
    match (p.t, &p.t_range) {
        (Some(t), _) => Ok(vec![t]),
        (None, Some(r)) => {
            let (lo, hi, n) = (r[0], r[1], r[2]);
            if !(n >= 1.0 && n.fract() == 0.0) {
                return Err(CliError::invalid(format!("--t-range count must be a positive integer, got {n}")));
            }
            if n > 1.0 && !(lo < hi) {
                return Err(CliError::invalid(format!("--t-range needs LO < HI, got {lo} and {hi}")));
            }
            Ok(linspace(lo, hi, n as usize))
        }
        (None, None) => Err(CliError::invalid("one of --t or --t-range is required")),
    }
}

/// Fills in `a` and `b` from the data grid, the evaluation points and the side.
fn resolve_interval(
    a: &mut Option<f64>,
    b: &mut Option<f64>,
    f: &FunctionSpec<f64>,
    points: &[f64],
    side: SideArg,
) -> CliResult<(f64, f64)> {
    let grid = f.as_sampled();
    let a_val = a.or(grid.map(|g| g.a())).unwrap_or(0.0);
    let b_val = match (*b, grid, side) {
        (Some(b), _, _) => b,
        (None, Some(g), _) => g.b(),
        (None, None, SideArg::Left) => points.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        (None, None, _) => return Err(CliError::invalid("--b is required for right and symmetric operators")),
    };
    *a = Some(a_val);
    *b = Some(b_val);
    Ok((a_val, b_val))
}

pub fn differint(mut args: DifferintArgs) -> CliResult<Output> {
    let points = resolve_points(&mut args.points)?;
    let f = parse_function(&args.func)?;
    let (a, b) = resolve_interval(&mut args.a, &mut args.b, &f, &points, args.side)?;
    args.quad.n_points = Some(args.quad.n_points.unwrap_or(DEFAULT_POINTS));
    let cfg = args.quad.config(DEFAULT_POINTS);
    let field = DimensionField::parse(&args.dim, (a, b), cfg.n_points)?;
    let spec = OperatorSpec::new(args.side.into(), args.axis.into(), a, b, field, cfg)?;
    let results = evaluate_many(&f, &spec, &points)?;
    let format = *args.output.format.get_or_insert(Format::Csv);
    Ok(Output::done(render_results("differint", &args, &results, format)))
}

fn render_results<A: Serialize>(command: &'static str, args: &A, results: &[EvalResult<f64>], format: Format) -> String {
    match format {
        Format::Json => json_output(command, args, &results),
        Format::Csv => {
            let rows = results
                .iter()
                .map(|r| vec![fmt_f64(r.t), fmt_f64(r.value), trust_name(r.trust).to_string()])
                .collect();
            csv_output(command, args, &["t", "value", "trust"], rows)
        }
    }
}

struct NearInteger {
    f: FunctionSpec<f64>,
    eps: EpsilonField<f64>,
    window: (f64, f64),
    which: Which,
    spec: OperatorSpec<f64>,
}

/// `alpha_default` of `None` leaves `--alpha` unresolved (calibration ignores it).
fn near_integer_setup(args: &mut CompareArgs, alpha_default: Option<f64>) -> CliResult<NearInteger> {
    let f = parse_function(&args.func)?;
    let (lo, hi) = (args.window[0], args.window[1]);
    let a = *args.a.get_or_insert(f.as_sampled().map_or(0.0, |g| g.a()));
    let b = *args.b.get_or_insert(hi);
    let sign = *args.sign.get_or_insert(match args.which {
        WhichArg::Below => Sign::Minus,
        WhichArg::Above => Sign::Plus,
    });
    if args.alpha.is_none() {
        args.alpha = alpha_default;
    }
    let alpha = args.alpha.unwrap_or(0.0);
    args.quad.n_points = Some(args.quad.n_points.unwrap_or(DEFAULT_POINTS));
    let cfg = args.quad.config(DEFAULT_POINTS);
    let eps_src = match args.which {
        WhichArg::Below => format!("1 - ({})", args.dim),
        WhichArg::Above => format!("({}) - 1", args.dim),
    };
    let eps = EpsilonField::new(FunctionSpec::parse(&eps_src)?, sign, alpha, (a, b))?;
    let which: Which = args.which.into();
    let field = eps.order_field(which, (a, b), cfg.n_points)?;
    let spec = OperatorSpec::new(OperatorSide::Left, vofrac::Axis::Time, a, b, field, cfg)?;
    Ok(NearInteger { f, eps, window: (lo, hi), which, spec })
}

fn comparison_rows(c: &vofrac::ApproxComparison<f64>) -> Vec<Vec<String>> {
    (0..c.t_grid.len())
        .map(|i| {
            vec![
                fmt_f64(c.t_grid[i]),
                fmt_f64(c.approx[i]),
                fmt_f64(c.direct[i]),
                fmt_f64(c.abs_err[i]),
                trust_name(c.trust[i]).to_string(),
            ]
        })
        .collect()
}

const COMPARISON_HEADER: [&str; 5] = ["t", "approx", "direct", "abs_err", "trust"];

pub fn compare_cmd(mut args: CompareArgs) -> CliResult<Output> {
    let s = near_integer_setup(&mut args, Some(1.0))?;
    let report = compare(&s.f, &s.eps, s.window, s.which, &s.spec)?;
    let text = match *args.output.format.get_or_insert(Format::Json) {
        Format::Json => json_output("compare", &args, &report),
        Format::Csv => csv_output("compare", &args, &COMPARISON_HEADER, comparison_rows(&report)),
    };
    Ok(Output::done(text))
}

#[derive(Serialize)]
struct Calibration<'a> {
    alpha: f64,
    comparison: &'a vofrac::ApproxComparison<f64>,
}

pub fn calibrate_cmd(mut args: CompareArgs) -> CliResult<Output> {
    let s = near_integer_setup(&mut args, None)?;
    let (alpha, report) = calibrate_alpha(&s.f, &s.eps, s.window, s.which, &s.spec)?;
    let text = match *args.output.format.get_or_insert(Format::Json) {
        Format::Json => json_output("calibrate", &args, &Calibration { alpha, comparison: &report }),
        Format::Csv => csv_output("calibrate", &args, &COMPARISON_HEADER, comparison_rows(&report)),
    };
    Ok(Output::done(text))
}

#[derive(Serialize)]
struct SweepRow {
    axis: &'static str,
    param: f64,
    t: f64,
    value: f64,
    trust: Trust,
}

pub fn sweep(mut args: SweepArgs) -> CliResult<Output> {
    let f = parse_function(&args.func)?;
    let (axis_name, params, t_points): (&'static str, Vec<f64>, Vec<f64>) = match args.vary {
        VaryArg::T => {
            if args.points.t.is_some() || args.points.t_range.is_none() {
                return Err(CliError::invalid("--vary t takes its values from --t-range"));
            }
            let pts = resolve_points(&mut args.points)?;
            ("t", pts.clone(), pts)
        }
        VaryArg::EpsScale | VaryArg::NPoints => {
            let Some(t) = args.points.t else {
                return Err(CliError::invalid("sweeps over eps-scale or n-points need a single --t"));
            };
            if args.values.is_empty() {
                return Err(CliError::invalid("--values is required for this sweep"));
            }
            let name = if args.vary == VaryArg::EpsScale { "eps_scale" } else { "n_points" };
            (name, args.values.clone(), vec![t])
        }
    };
    let (a, b) = resolve_interval(&mut args.a, &mut args.b, &f, &t_points, args.side)?;
    if args.vary != VaryArg::NPoints {
        args.quad.n_points = Some(args.quad.n_points.unwrap_or(DEFAULT_POINTS));
    }
    let side: OperatorSide = args.side.into();
    let axis: vofrac::Axis = args.axis.into();

    let run_one = |param: f64| -> CliResult<Vec<SweepRow>> {
        let mut cfg = args.quad.config(DEFAULT_POINTS);
        let mut dim = args.dim.clone();
        match args.vary {
            VaryArg::T => {}
            VaryArg::EpsScale => dim = format!("{c} + {param} * (({dim}) - {c})", c = args.center),
            VaryArg::NPoints => {
                if !(param >= 1.0 && param.fract() == 0.0) {
                    return Err(CliError::invalid(format!("n-points value {param} is not a positive integer")));
                }
                cfg.n_points = param as usize;
            }
        }
        let field = DimensionField::parse(&dim, (a, b), cfg.n_points)?;
        let spec = OperatorSpec::new(side, axis, a, b, field, cfg)?;
        let ts = if args.vary == VaryArg::T { vec![param] } else { t_points.clone() };
        ts.into_iter()
            .map(|t| {
                let r = evaluate(&f, &spec, t)?;
                Ok(SweepRow { axis: axis_name, param, t, value: r.value, trust: r.trust })
            })
            .collect()
    };
    let rows: Vec<SweepRow> = params
        .par_iter()
        .map(|&p| run_one(p))
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let text = match *args.output.format.get_or_insert(Format::Csv) {
        Format::Json => json_output("sweep", &args, &rows),
        Format::Csv => {
            let body = rows
                .iter()
                .map(|r| {
                    vec![r.axis.to_string(), fmt_f64(r.param), fmt_f64(r.t), fmt_f64(r.value), trust_name(r.trust).into()]
                })
                .collect();
            csv_output("sweep", &args, &["axis", "param", "t", "value", "trust"], body)
        }
    };
    Ok(Output::done(text))
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    iterations: usize,
    converged: bool,
    residuals: &'a [f64],
}

pub fn solve(mut args: SolveArgs) -> CliResult<Output> {
    let n = *args.n_points.get_or_insert(DEFAULT_SOLVER_POINTS);
    let g = parse_function(&args.func)?;
    let guess = match &args.initial {
        None => GridFunction::zeros(args.a, args.b, n)?,
        Some(src) => parse_function(src)?.sample(args.a, args.b, n)?,
    };
    let law = OrderLaw::Affine { d0: args.d0, kappa: args.kappa };
    let problem = ModelProblem::new(g, law, (args.clamp[0], args.clamp[1]), guess)?
        .with_relaxation(args.omega)?
        .with_pole_guard(args.delta)?;
    let report = solve_fixed_point(&problem, args.tol, args.max_iter)?;
    let text = match *args.output.format.get_or_insert(Format::Json) {
        Format::Json => json_output("solve", &args, &report),
        Format::Csv => {
            let nodes = report.solution.nodes();
            let rows = (0..nodes.len())
                .map(|i| {
                    vec![fmt_f64(nodes[i]), fmt_f64(report.solution.values()[i]), fmt_f64(report.d_final.values()[i])]
                })
                .collect();
            let mut text = csv_output("solve", &args, &["t", "value", "d"], rows);
            let summary = SolveSummary {
                iterations: report.iterations,
                converged: report.converged,
                residuals: &report.residuals,
            };
            let first_newline = text.find('\n').expect("config line") + 1;
            text.insert_str(first_newline, &format!("# report {}\n", to_json(&summary)));
            text
        }
    };
    let nonconverged = (!report.converged).then(|| {
        format!(
            "no convergence after {} iterations (last residual {})",
            report.iterations,
            report.residuals.last().map_or(f64::NAN, |r| *r)
        )
    });
    Ok(Output { text, nonconverged })
}
