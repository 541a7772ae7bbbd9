// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! `fraclat` command-line interface.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or a
//! numerical failure, 2 on a usage error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use fraclat::gradients::{gamma_q_explicit, gamma_q_taylor};
use fraclat::jumpsim::{jump_statistics, run_compensator, verify_compensator_at, verify_gstar_representation};
use fraclat::kernel::{FractionalKernel, TransitionLaw};
use fraclat::schrodinger::{feynman_kac_estimate, square_gtilde_schrodinger, SchrodingerEvaluator};
use fraclat::semigroup::SemigroupEvaluator;
use fraclat::squarefn::{CounterexampleData, SquareFunctions, SquareKind, SquareProfile, DEFAULT_TAIL_TOLERANCE};
use fraclat::verify::{run_suite, Suite, SuiteOptions};
use fraclat::{Error, LatticeFunction, VerificationReport, Window};

const DEFAULT_S: f64 = 0.5;
const DEFAULT_Q: f64 = 2.0;
const DEFAULT_PATHS: u64 = 100_000;
const TAYLOR_NODES: usize = 64;

#[derive(Parser, Debug)]
#[command(name = "fraclat", version, about = "Fractional discrete Laplacian on Z: heat semigroup, square functions, jump processes")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Order s in (0, 1).
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Exponent q > 1.
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel values K_s(m), the scaled values K_s(m) m^(1+2s) and cumulative sums.
    Kernel {
        #[arg(long, default_value_t = 100)]
        max_m: u64,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// P_t f on a window.
    Evolve {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<Window>,
    },
    /// Heat kernel p_t(0, d) for d = 0..=dmax, as CSV.
    Heatkernel {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        dmax: u64,
    },
    /// Gamma_q(f)(x).
    Gamma {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: i64,
        #[arg(long, value_enum, default_value_t = GammaForm::Explicit)]
        form: GammaForm,
    },
    /// A vertical square function on a window of points.
    Square {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        t_tol: Option<f64>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<Window>,
        /// Horizon T for Gstar; omitted means T = infinity.
        #[arg(long)]
        horizon: Option<f64>,
        /// Potential U for GtU.
        #[arg(long)]
        potential: Option<PathBuf>,
    },
    /// G(delta_1) at s = 1/4 with partial sums and doubling increments, as CSV.
    Counterexample {
        #[arg(long, default_value_t = 512)]
        n: i64,
    },
    /// Jump-process Monte Carlo.
    Simulate {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        start: i64,
        #[arg(long)]
        paths: Option<u64>,
        /// Function f for the checks; defaults to delta_0.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        check: Option<SimCheck>,
    },
    /// Schrodinger semigroup P_t^U f.
    Schrodinger {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SchMethod::Exp)]
        method: SchMethod,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<Window>,
    },
    /// Run verification suites.
    Verify {
        /// Suite names (comma separated or repeated), or `all`.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        /// Shrunken sample sizes for smoke runs.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GammaForm {
    Explicit,
    Taylor,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    #[value(name = "G")]
    G,
    #[value(name = "Gt")]
    Gt,
    #[value(name = "H")]
    H,
    #[value(name = "Hq")]
    Hq,
    #[value(name = "Gstar")]
    Gstar,
    #[value(name = "GtU")]
    GtU,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SimCheck {
    Compensator,
    Gstar,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchMethod {
    Exp,
    Fk,
}

/// Contents of `--config`. Every field is optional; flags override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    s: Option<f64>,
    q: Option<f64>,
    window: Option<Window>,
    t_tolerance: Option<f64>,
    mc_paths: Option<u64>,
    seed: Option<u64>,
    output_format: Option<Format>,
    check_selection: Option<Vec<String>>,
    /// Overrides for the randomized suite sizes.
    suite_options: Option<SuiteOptions>,
}

/// Configuration after merging file and flags.
#[derive(Debug)]
struct Settings {
    s: f64,
    q: f64,
    /// Whether `q` came from a flag or the config file.
    q_given: bool,
    seed: Option<u64>,
    window: Option<Window>,
    t_tolerance: f64,
    mc_paths: u64,
    format: Option<Format>,
    out: Option<PathBuf>,
    checks: Vec<String>,
    suite_options: Option<SuiteOptions>,
}

enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::InvalidFunction(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_window(text: &str) -> Result<Window, String> {
    let (lo, hi) = text.split_once(',').ok_or("expected lo,hi")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lo: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad hi: {e}"))?;
    Window::new(lo, hi).map_err(|e| e.to_string())
}

fn settings(global: &GlobalArgs) -> CliResult<Settings> {
    let file = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let out = Settings {
        s: global.s.or(file.s).unwrap_or(DEFAULT_S),
        q: global.q.or(file.q).unwrap_or(DEFAULT_Q),
        q_given: global.q.or(file.q).is_some(),
        seed: global.seed.or(file.seed),
        window: file.window,
        t_tolerance: file.t_tolerance.unwrap_or(DEFAULT_TAIL_TOLERANCE),
        mc_paths: file.mc_paths.unwrap_or(DEFAULT_PATHS),
        format: global.format.or(file.output_format),
        out: global.out.clone(),
        checks: file.check_selection.unwrap_or_default(),
        suite_options: file.suite_options,
    };
    if !(out.s > 0.0 && out.s < 1.0) {
        return Err(usage(format!("--s must lie in (0, 1), got {}", out.s)));
    }
    if !(out.q > 1.0 && out.q.is_finite()) {
        return Err(usage(format!("--q must be finite and > 1, got {}", out.q)));
    }
    if !(out.t_tolerance > 0.0) {
        return Err(usage("t_tolerance must be positive"));
    }
    if out.mc_paths < 2 {
        return Err(usage("mc_paths must be at least 2"));
    }
    Ok(out)
}

fn read_function(path: &Path) -> CliResult<LatticeFunction> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> CliResult<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be nonnegative, got {v}")))
    }
}

/// Support of `f` widened by `margin`, or `[-margin, margin]` for `f = 0`.
fn default_window(f: &LatticeFunction, margin: i64) -> CliResult<Window> {
    Ok(match f.support() {
        Some(w) => w.expand(margin)?,
        None => Window::centered(0, margin)?,
    })
}

fn emit(settings: &Settings, body: &str) -> CliResult<()> {
    match &settings.out {
        Some(path) => fs::write(path, body).map_err(|e| CliError::Failure(format!("{}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn emit_json(settings: &Settings, value: &impl Serialize) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.to_string()))?;
    body.push('\n');
    emit(settings, &body)
}

fn json_only(settings: &Settings, command: &str) -> CliResult<()> {
    match settings.format {
        Some(Format::Csv) => Err(usage(format!("`{command}` only writes JSON"))),
        _ => Ok(()),
    }
}

fn csv_only(settings: &Settings, command: &str) -> CliResult<()> {
    match settings.format {
        Some(Format::Json) => Err(usage(format!("`{command}` only writes CSV"))),
        _ => Ok(()),
    }
}

fn cmd_kernel(settings: &Settings, max_m: u64, json: bool, csv: bool) -> CliResult<()> {
    let format = match (json, csv) {
        (true, _) => Format::Json,
        (_, true) => Format::Csv,
        _ => settings.format.unwrap_or(Format::Csv),
    };
    let s = settings.s;
    let k = FractionalKernel::new(s)?;
    let mut cumulative = 0.0;
    let rows: Vec<(u64, f64, f64, f64)> = (1..=max_m)
        .map(|m| {
            let v = k.value(m as i64);
            cumulative += v;
            (m, v, v * (m as f64).powf(1.0 + 2.0 * s), cumulative)
        })
        .collect();
    match format {
        Format::Csv => {
            let mut body = String::from("m,K,K_scaled,cumulative\n");
            for (m, v, scaled, cum) in rows {
                let _ = writeln!(body, "{m},{v:e},{scaled:e},{cum:e}");
            }
            emit(settings, &body)
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .into_iter()
                .map(|(m, v, scaled, cum)| json!({"m": m, "K": v, "K_scaled": scaled, "cumulative": cum}))
                .collect();
            emit_json(settings, &json!({"s": s, "l1_norm": k.l1_norm(), "rows": rows}))
        }
    }
}

fn cmd_evolve(settings: &Settings, t: f64, input: &Path, window: Option<Window>) -> CliResult<()> {
    json_only(settings, "evolve")?;
    let t = nonnegative("t", t)?;
    let f = read_function(input)?;
    let out = match window.or(settings.window) {
        Some(w) => w,
        None => default_window(&f, 20)?,
    };
    let ev = SemigroupEvaluator::fractional(settings.s)?;
    emit_json(settings, &ev.apply(t, &f, out)?)
}

fn cmd_heatkernel(settings: &Settings, t: f64, dmax: u64) -> CliResult<()> {
    csv_only(settings, "heatkernel")?;
    let t = nonnegative("t", t)?;
    let ev = SemigroupEvaluator::fractional(settings.s)?;
    let row = ev.row(t, dmax as usize)?;
    let mut body = String::from("d,p\n");
    for (d, p) in row.iter().enumerate() {
        let _ = writeln!(body, "{d},{p:e}");
    }
    emit(settings, &body)
}

fn cmd_gamma(settings: &Settings, input: &Path, x: i64, form: GammaForm) -> CliResult<()> {
    json_only(settings, "gamma")?;
    let f = read_function(input)?;
    let k = FractionalKernel::new(settings.s)?;
    let value = match form {
        GammaForm::Explicit => gamma_q_explicit(&k, &f, settings.q, x)?,
        GammaForm::Taylor => gamma_q_taylor(&k, &f, settings.q, x, TAYLOR_NODES)?,
    };
    let form = match form {
        GammaForm::Explicit => "explicit",
        GammaForm::Taylor => "taylor",
    };
    emit_json(settings, &json!({"s": settings.s, "q": settings.q, "x": x, "form": form, "value": value}))
}

fn profile_json(p: &SquareProfile, params: Value) -> Value {
    let values: serde_json::Map<String, Value> = p.window.iter().map(|x| (x.to_string(), json!(p.value(x)))).collect();
    // bound on |G(f)(x) - computed| from the bound on the square
    let errors: serde_json::Map<String, Value> = p
        .window
        .iter()
        .map(|x| {
            let v = p.value(x);
            let e = p.error(x);
            let bound = if v > 0.0 { (e / v).min(e.sqrt()) } else { e.sqrt() };
            (x.to_string(), json!(bound))
        })
        .collect();
    json!({
        "kind": p.kind,
        "parameters": params,
        "t_max": p.t_max,
        "tail_bound": p.tail_bound,
        "values": values,
        "errors": errors,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_square(
    settings: &Settings,
    kind: KindArg,
    t_tol: Option<f64>,
    input: &Path,
    window: Option<Window>,
    horizon: Option<f64>,
    potential: Option<&Path>,
) -> CliResult<()> {
    json_only(settings, "square")?;
    let tol = positive("t-tol", t_tol.unwrap_or(settings.t_tolerance))?;
    let f = read_function(input)?;
    let points = match window.or(settings.window) {
        Some(w) => w,
        None => default_window(&f, 5)?,
    };
    let params = json!({"s": settings.s, "q": settings.q, "t_tol": tol});
    let profile = if let KindArg::GtU = kind {
        let path = potential.ok_or_else(|| usage("--kind GtU needs --potential"))?;
        let u = read_function(path)?;
        let ev = SchrodingerEvaluator::with_window(FractionalKernel::shared(settings.s)?, u, points.expand(64)?)?;
        square_gtilde_schrodinger(&ev, &f, points, tol)?
    } else {
        let kind = match kind {
            KindArg::G => SquareKind::G,
            KindArg::Gt => SquareKind::Gtilde,
            KindArg::H => SquareKind::H,
            KindArg::Hq => SquareKind::Hq { q: settings.q },
            KindArg::Gstar => SquareKind::Gstar { horizon: horizon.map(|t| positive("horizon", t)).transpose()? },
            KindArg::GtU => unreachable!(),
        };
        let engine = SquareFunctions::new(settings.s)?;
        let quad = engine.quadrature(&f, kind, tol)?;
        engine.profile(&f, kind, points, &quad)?
    };
    emit_json(settings, &profile_json(&profile, params))
}

fn cmd_counterexample(settings: &Settings, n: i64) -> CliResult<()> {
    csv_only(settings, "counterexample")?;
    let data = CounterexampleData::compute(n, 256)?;
    let q = settings.q;
    let increments: std::collections::BTreeMap<i64, f64> = data.doubling_increments(q).into_iter().map(|(m, inc)| (2 * m, inc)).collect();
    let mut body = String::new();
    let _ = writeln!(body, "# s={}, q={q}, fitted slope {:.6} over [{}, {}]", data.s, data.slope, data.fit_range.0, data.fit_range.1);
    body.push_str("x,G,error,partial_sum,doubling_increment\n");
    let mut partial = 0.0;
    for x in data.points.iter() {
        let g = data.value(x);
        partial += g.powf(q);
        let inc = increments.get(&x).map(|v| format!("{v:e}")).unwrap_or_default();
        let _ = writeln!(body, "{x},{g:e},{:e},{partial:e},{inc}", data.errors[(x - 2) as usize]);
    }
    emit(settings, &body)?;
    let report = data.report(q);
    eprintln!("{}", report.summary());
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failure("counterexample check failed".into()))
    }
}

fn cmd_simulate(settings: &Settings, t: f64, start: i64, paths: Option<u64>, input: Option<&Path>, check: Option<SimCheck>) -> CliResult<()> {
    json_only(settings, "simulate")?;
    let t = positive("t", t)?;
    let paths = paths.unwrap_or(settings.mc_paths);
    if paths < 2 {
        return Err(usage("--paths must be at least 2"));
    }
    let seed = settings.seed.unwrap_or(SuiteOptions::default().seed);
    let law = TransitionLaw::new(FractionalKernel::shared(settings.s)?);
    let f = match input {
        Some(p) => read_function(p)?,
        None => LatticeFunction::delta(0),
    };
    let params = json!({"s": settings.s, "t": t, "start": start, "paths": paths, "seed": seed});
    let (body, report) = match check {
        None => {
            let stats = jump_statistics(&law, t, paths, seed)?;
            (json!({"parameters": params, "jump_statistics": stats}), None)
        }
        Some(SimCheck::Compensator) => {
            let run = run_compensator(&law, &f, t, paths, seed, start, 3.0)?;
            let report = verify_compensator_at(&law, &f, t, paths, seed, start)?;
            (json!({"parameters": params, "estimates": run, "report": report}), Some(report))
        }
        Some(SimCheck::Gstar) => {
            let window_z = default_window(&f, 30)?.hull(&Window::new(start, start)?);
            let report = verify_gstar_representation(&law, &f, t, start, window_z, paths, seed)?;
            (json!({"parameters": params, "window_z": window_z, "report": report}), Some(report))
        }
    };
    emit_json(settings, &body)?;
    match report {
        Some(r) if !r.passed => {
            eprintln!("{}", r.summary());
            Err(CliError::Failure("check failed".into()))
        }
        _ => Ok(()),
    }
}

fn cmd_schrodinger(
    settings: &Settings,
    t: f64,
    potential: &Path,
    input: &Path,
    method: SchMethod,
    paths: Option<u64>,
    window: Option<Window>,
) -> CliResult<()> {
    json_only(settings, "schrodinger")?;
    let t = nonnegative("t", t)?;
    let u = read_function(potential)?;
    let f = read_function(input)?;
    let kernel = FractionalKernel::shared(settings.s)?;
    let out = match window.or(settings.window) {
        Some(w) => w,
        None => default_window(&f, 10)?,
    };
    let body = match method {
        SchMethod::Exp => {
            let model = out.hull(&default_window(&u, 0)?).expand(100)?;
            let ev = SchrodingerEvaluator::with_window(kernel, u, model)?;
            let pf = ev.apply(t, &f)?.restrict(out);
            let bound = ev.truncation_bound(t, &f)?.restrict(out);
            json!({
                "function": pf,
                "diagnostics": {
                    "method": "exp",
                    "s": settings.s,
                    "t": t,
                    "model_window": model,
                    "lambda_min": ev.lambda_min(),
                    "truncation_bound": bound,
                }
            })
        }
        SchMethod::Fk => {
            let paths = paths.unwrap_or(settings.mc_paths);
            if paths < 2 {
                return Err(usage("--paths must be at least 2"));
            }
            let seed = settings.seed.unwrap_or(SuiteOptions::default().seed);
            let law = TransitionLaw::new(kernel);
            let mut values = Vec::with_capacity(out.width());
            let mut errors = Vec::with_capacity(out.width());
            for x in out.iter() {
                let est = feynman_kac_estimate(&law, &u, &f, x, t, paths, seed)?;
                values.push(est.estimate);
                errors.push(est.standard_error);
            }
            json!({
                "function": LatticeFunction::from_values(out.lo(), values)?,
                "diagnostics": {
                    "method": "fk",
                    "s": settings.s,
                    "t": t,
                    "paths": paths,
                    "seed": seed,
                    "standard_errors": LatticeFunction::from_values(out.lo(), errors)?,
                }
            })
        }
    };
    emit_json(settings, &body)
}

fn selected_suites(names: &[String]) -> CliResult<Vec<Suite>> {
    let mut suites = Vec::new();
    for name in names.iter().map(|n| n.trim()).filter(|n| !n.is_empty()) {
        if name == "all" {
            suites.extend(Suite::ALL);
        } else {
            suites.push(name.parse::<Suite>()?);
        }
    }
    suites.sort_by_key(|s| *s as usize);
    suites.dedup();
    if suites.is_empty() {
        return Err(usage("empty check selection; pass --suite <name>[,<name>...] or --suite all"));
    }
    Ok(suites)
}

/// Runs suites on scoped threads; the result order is fixed by the caller.
fn run_suites(suites: &[Suite], opts: &SuiteOptions) -> Vec<VerificationReport> {
    let results: Vec<(Suite, fraclat::Result<Vec<VerificationReport>>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = suites.iter().map(|&suite| (suite, scope.spawn(move || run_suite(suite, opts)))).collect();
        handles
            .into_iter()
            .map(|(suite, h)| (suite, h.join().unwrap_or_else(|_| Err(Error::Quadrature(format!("suite `{suite}` panicked"))))))
            .collect()
    });
    let mut reports = Vec::new();
    for (suite, result) in results {
        match result {
            Ok(rs) => reports.extend(rs),
            Err(e) => reports.push(VerificationReport::new(format!("{suite}_error"), f64::INFINITY, 0.0).note(e.to_string())),
        }
    }
    reports.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    reports
}

fn cmd_verify(settings: &Settings, names: &[String], quick: bool) -> CliResult<()> {
    let names = if names.is_empty() { &settings.checks[..] } else { names };
    let suites = selected_suites(names)?;
    let mut opts = match (&settings.suite_options, quick) {
        (Some(o), _) => o.clone(),
        (None, true) => SuiteOptions::quick(),
        (None, false) => SuiteOptions::default(),
    };
    if let Some(seed) = settings.seed {
        opts.seed = seed;
    }
    if settings.q_given {
        opts.counterexample_q = vec![settings.q];
    }
    let reports = run_suites(&suites, &opts);
    for r in &reports {
        eprintln!("{}", r.summary());
    }
    let passed = reports.iter().all(|r| r.passed);
    match settings.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(
            settings,
            &json!({
                "version": env!("CARGO_PKG_VERSION"),
                "seed": opts.seed,
                "suites": suites.iter().map(|s| s.name()).collect::<Vec<_>>(),
                "options": opts,
                "passed": passed,
                "reports": reports,
            }),
        )?,
        Format::Csv => {
            let mut body = String::from("check_name,passed,max_abs_error,tolerance\n");
            for r in &reports {
                let _ = writeln!(body, "{},{},{:e},{:e}", r.check_name, r.passed, r.max_abs_error, r.tolerance);
            }
            emit(settings, &body)?;
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    eprintln!("{} checks, {failed} failed", reports.len());
    if passed {
        Ok(())
    } else {
        Err(CliError::Failure(format!("{failed} check(s) failed")))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let settings = settings(&cli.global)?;
    match &cli.command {
        Command::Kernel { max_m, json, csv } => cmd_kernel(&settings, *max_m, *json, *csv),
        Command::Evolve { t, input, window } => cmd_evolve(&settings, *t, input, *window),
        Command::Heatkernel { t, dmax } => cmd_heatkernel(&settings, *t, *dmax),
        Command::Gamma { input, x, form } => cmd_gamma(&settings, input, *x, *form),
        Command::Square { kind, t_tol, input, window, horizon, potential } => {
            cmd_square(&settings, *kind, *t_tol, input, *window, *horizon, potential.as_deref())
        }
        Command::Counterexample { n } => cmd_counterexample(&settings, *n),
        Command::Simulate { t, start, paths, input, check } => cmd_simulate(&settings, *t, *start, *paths, input.as_deref(), *check),
        Command::Schrodinger { t, potential, input, method, paths, window } => {
            cmd_schrodinger(&settings, *t, potential, input, *method, *paths, *window)
        }
        Command::Verify { suite, quick } => cmd_verify(&settings, suite, *quick),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("fraclat: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("fraclat: {msg}");
            ExitCode::from(2)
        }
    }
}
