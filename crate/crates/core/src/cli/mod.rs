//! `collapse-box` command line.
//!
//! Exit codes: 0 pass, 1 operational failure (I/O, parse, bad arguments,
//! evaluator errors), 2 a boundary-condition or scenario violation, detected
//! signaling, or a goodness-of-fit rejection.

pub mod scenario;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

pub use scenario::{
    parse_grid, with_dt_min, with_dt_window, Grid, GridValue, Layout, LoadedScenario, Scenario, SweepParam,
};

use crate::behaviors::Distribution;
use crate::collapse::{default_grid, make_family, validate_family, CollapseFamily};
use crate::error::{Error, Result};
use crate::mc::{
    derive_seed, gof_test, simulate_single, simulate_twobox, simulate_window_with_input, EmpiricalDist, GofMethod,
    SimConfig,
};
use crate::scenarios::{bob_marginal, window_marginal, Input, TwoBoxScenario, Window};
use crate::signaling::{
    capacity, single_box_report, window_report, witness_sweep, InducedChannel, Probe, Verdict, WitnessOptions,
    WitnessReport, ANALYTIC_TV_TOL, DEFAULT_ALPHA,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "COLLAPSE_BOX_THREADS";

const DEFAULT_N: u64 = 100_000;
const DEFAULT_GRID_POINTS: usize = 26;
const CAPACITY_TOL: f64 = 1e-9;

#[derive(Parser, Debug, Clone)]
#[command(name = "collapse-box", version, about = "Finite-time collapse models for correlated black boxes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check the family's boundary conditions and the scenario invariants.
    Validate(RunArgs),
    /// Witness curve over elapsed time, with capacity at the maximum.
    Witness(RunArgs),
    /// Monte Carlo counts plus a goodness-of-fit test.
    Simulate(RunArgs),
    /// Cross product of parameter grids, one row per cell.
    Sweep(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Witness(_) => "witness",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Validate(a) | Command::Witness(a) | Command::Simulate(a) | Command::Sweep(a) => a,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// The model's own prediction for the scenario.
    Analytic,
    /// The prior `P0`.
    Prior,
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample size. Witness and sweep are analytic-only without it.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// `[param=]a,b,c` or `[param=]start:stop:count`; repeat for a sweep cross product.
    #[arg(long)]
    pub grid: Vec<String>,
    /// Monte Carlo worker threads; 0 uses the shared pool.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Reference distribution for `simulate`'s goodness-of-fit test.
    #[arg(long, value_enum, default_value_t = Target::Analytic)]
    pub target: Target,
}

/// Outcome of a successful command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// Violation, detected signaling, or goodness-of-fit rejection.
    Flagged,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Flagged => 2,
        }
    }
}

/// Entry point for the binary.
pub fn run() -> ExitCode {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    cap_threads();
    match execute(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cap_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // Fails harmlessly if the global pool already exists.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs one command; summaries go to stdout and data files to `--out`.
pub fn execute(cli: &Cli) -> Result<Status> {
    let args = cli.command.args();
    let loaded = LoadedScenario::read(&args.scenario)?;
    std::fs::create_dir_all(&args.out)?;
    let ctx = Context { args, hash: loaded.hash.clone(), command: cli.command.name() };
    let scenario = &loaded.scenario;
    match &cli.command {
        Command::Validate(_) => cmd_validate(&ctx, scenario),
        Command::Witness(_) => cmd_witness(&ctx, scenario),
        Command::Simulate(_) => cmd_simulate(&ctx, scenario),
        Command::Sweep(_) => cmd_sweep(&ctx, scenario),
    }
}

struct Context<'a> {
    args: &'a RunArgs,
    hash: String,
    command: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    scenario: &'a str,
    seed: u64,
    n: Option<u64>,
    alpha: f64,
    grids: &'a [String],
    target: Target,
    files: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Context<'_> {
    fn header(&self) -> String {
        format!("# collapse-box {VERSION} scenario={} seed={}\n", self.hash, self.args.seed)
    }

    fn scenario_id(&self) -> &str {
        &self.hash[..12]
    }

    fn mc(&self, n: Option<u64>) -> Result<Option<SimConfig>> {
        n.map(|n| SimConfig::new(n, self.args.seed).map(|c| c.with_workers(self.args.workers))).transpose()
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.args.out.join(name), format!("{}{body}", self.header()))?;
        Ok(())
    }

    fn write_manifest(&self, files: &[&str], error: Option<String>) -> Result<()> {
        let partial = error.is_some();
        let m = Manifest {
            tool: "collapse-box",
            version: VERSION,
            command: self.command,
            scenario: &self.hash,
            seed: self.args.seed,
            n: self.args.n,
            alpha: self.args.alpha,
            grids: &self.args.grid,
            target: self.args.target,
            files: files.to_vec(),
            error,
        };
        let name = if partial { "MANIFEST.partial" } else { "MANIFEST" };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        std::fs::write(self.args.out.join(name), text)?;
        Ok(())
    }
}

fn out_path(args: &RunArgs, name: &str) -> PathBuf {
    args.out.join(name)
}

/// Scenario-level checks beyond the family's boundary conditions.
fn scenario_issues(s: &Scenario) -> Vec<String> {
    let mut issues = vec![];
    if let Some(sched) = &s.schedule {
        if let Err(e) = sched.validate() {
            issues.push(format!("schedule: {e}"));
        }
    }
    if let Some(w) = &s.window {
        if let Err(e) = Window::new(w.clone()) {
            issues.push(format!("window: {e}"));
        }
    }
    if s.layout() == Layout::Window && s.window.is_none() {
        issues.push("layout 'window' needs a window".into());
    }
    issues
}

fn cmd_validate(ctx: &Context, s: &Scenario) -> Result<Status> {
    let family = CollapseFamily::build_unchecked(&s.family_spec()?)?;
    let report = validate_family(&family, &default_grid(&family, 1001))?;
    let issues = scenario_issues(s);

    let mut csv = String::from("check,pass,worst,elapsed,latent,output\n");
    for c in &report.checks {
        let at = match c.at {
            Some((t, a, o)) => format!("{},{a},{}", num(t), o.map_or(String::new(), |o| o.to_string())),
            None => ",,".into(),
        };
        writeln!(csv, "{},{},{},{at}", c.clause.label(), c.passed(), num(c.worst)).unwrap();
    }
    for issue in &issues {
        writeln!(csv, "\"{}\",false,,,,", issue.replace('"', "'")).unwrap();
    }
    ctx.write("validation.csv", &csv)?;
    ctx.write_manifest(&["validation.csv"], None)?;

    println!("{report}");
    for issue in &issues {
        println!("scenario: {issue}");
    }
    let pass = report.pass && issues.is_empty();
    println!("{}", if pass { "valid" } else { "INVALID" });
    Ok(if pass { Status::Pass } else { Status::Flagged })
}

fn build(s: &Scenario) -> Result<TwoBoxScenario> {
    Ok(TwoBoxScenario::new(make_family(&s.family_spec()?)?))
}

fn witness_grid(args: &RunArgs, s: &Scenario, family: &CollapseFamily) -> Result<Vec<f64>> {
    if let Some(spec) = args.grid.first() {
        let g = parse_grid(spec)?;
        if g.param != SweepParam::Elapsed {
            return Err(Error::Usage(format!("witness grids are over elapsed time, got {}", g.param.name())));
        }
        return Ok(g.points);
    }
    if let Some(g) = &s.grid {
        return g.points();
    }
    let top = if family.dt_max() > 0.0 { 1.25 * family.dt_max() } else { 1.0 };
    Ok((0..DEFAULT_GRID_POINTS).map(|k| top * k as f64 / (DEFAULT_GRID_POINTS - 1) as f64).collect())
}

/// Shortest round-trip form, in exponent notation when very small or large.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

const WITNESS_COLUMNS: &str = "tv_analytic,tv_empirical,ci_lo,ci_hi,pvalue,verdict";

fn witness_fields(r: &WitnessReport) -> String {
    match &r.empirical {
        Some(e) => format!(
            "{},{},{},{},{},{}",
            num(r.tv_analytic),
            num(e.tv),
            num(e.ci.0),
            num(e.ci.1),
            num(e.p_value),
            r.verdict.label()
        ),
        None => format!("{},,,,,{}", num(r.tv_analytic), r.verdict.label()),
    }
}

fn options(args: &RunArgs, mc: Option<SimConfig>) -> WitnessOptions {
    WitnessOptions { mc, alpha: args.alpha, tol: ANALYTIC_TV_TOL }
}

fn cmd_witness(ctx: &Context, s: &Scenario) -> Result<Status> {
    let args = ctx.args;
    let tb = build(s)?;
    let grid = witness_grid(args, s, tb.family())?;
    let opts = options(args, ctx.mc(args.n)?);
    let curve = witness_sweep(&tb, &grid, &opts)?;

    let mut csv = format!("elapsed,{WITNESS_COLUMNS}\n");
    for r in &curve {
        writeln!(csv, "{},{}", num(r.elapsed().unwrap_or(f64::NAN)), witness_fields(r)).unwrap();
    }
    ctx.write("witness.csv", &csv)?;

    let best = curve.iter().fold(&curve[0], |acc, r| if r.tv_analytic > acc.tv_analytic { r } else { acc });
    let at = best.elapsed().unwrap_or(0.0);
    let cap = capacity(&InducedChannel::from_scenario(&tb, at)?, CAPACITY_TOL)?;
    let signaling = curve.iter().any(|r| r.verdict == Verdict::Signaling);
    let verdict = if signaling { Verdict::Signaling } else { Verdict::NonSignaling };
    let summary = format!(
        "max TV {:.3e} at s={at}, capacity {:.3e} bits, verdict: {}",
        best.tv_analytic,
        cap.bits,
        verdict.label()
    );
    std::fs::write(out_path(args, "summary.txt"), format!("{summary}\n"))?;
    ctx.write_manifest(&["witness.csv", "summary.txt"], None)?;
    println!("{summary}");
    Ok(if signaling { Status::Flagged } else { Status::Pass })
}

fn cmd_simulate(ctx: &Context, s: &Scenario) -> Result<Status> {
    let args = ctx.args;
    let cfg = ctx.mc(Some(args.n.unwrap_or(DEFAULT_N)))?.expect("sample size set");
    let tb = build(s)?;
    let sched = s.schedule();
    let x = sched.validate()?;
    let mut note = None;
    let (emp, predicted): (EmpiricalDist, Distribution) = match s.layout() {
        Layout::Single => {
            let e = simulate_single(tb.family(), tb.prior(), sched.elapsed(), &cfg)?;
            (e, bob_marginal(&tb, Input::Triggering, sched.elapsed())?)
        }
        Layout::TwoBox => (simulate_twobox(&tb, &sched, &cfg)?, bob_marginal(&tb, x, sched.elapsed())?),
        Layout::Window => {
            let w = window_of(s)?;
            let e = simulate_window_with_input(&tb, &w, x, &cfg)?;
            let p = match x {
                Input::NonTriggering => tb.prior().clone(),
                Input::Triggering => match window_marginal(&tb, &w) {
                    Ok(p) => p,
                    Err(err @ Error::FormulaInconsistency { .. }) => {
                        note = Some(format!("{err}; testing against the prior instead"));
                        tb.prior().clone()
                    }
                    Err(err) => return Err(err),
                },
            };
            (e, p)
        }
    };
    let (target_label, reference) = match args.target {
        Target::Analytic if note.is_none() => ("analytic", predicted),
        _ => ("prior", tb.prior().clone()),
    };
    let gof = gof_test(&emp, &reference, args.alpha)?;

    let id = ctx.scenario_id();
    let mut csv = String::from("scenario_id,seed,N,outcome,count,freq,ci_lo,ci_hi\n");
    for (o, &count) in emp.counts().iter().enumerate() {
        let (lo, hi) = emp.interval(o);
        writeln!(csv, "{id},{},{},{o},{count},{},{},{}", args.seed, emp.n(), num(emp.frequency(o)), num(lo), num(hi))
            .unwrap();
    }
    ctx.write("simulate.csv", &csv)?;
    let method = match gof.method {
        GofMethod::ChiSquare => "chi_square",
        GofMethod::ExactMultinomial => "exact_multinomial",
        GofMethod::ChiSquareSmallCounts => "chi_square_small_counts",
    };
    let gof_csv = format!(
        "target,statistic,df,pvalue,method,reject\n{target_label},{},{},{},{method},{}\n",
        num(gof.statistic),
        gof.df,
        num(gof.p_value),
        gof.reject
    );
    ctx.write("gof.csv", &gof_csv)?;
    ctx.write_manifest(&["simulate.csv", "gof.csv"], None)?;

    if let Some(n) = &note {
        println!("note: {n}");
    }
    println!(
        "{} N={} against {target_label}: chi2 {:.4} (df {}), p {:.4}, {}",
        s.layout().label(),
        emp.n(),
        gof.statistic,
        gof.df,
        gof.p_value,
        if gof.reject { "reject" } else { "pass" }
    );
    Ok(if gof.reject { Status::Flagged } else { Status::Pass })
}

fn window_of(s: &Scenario) -> Result<Window> {
    let spec = s.window.clone().ok_or_else(|| Error::InvalidConfig("window layout needs a window".into()))?;
    Window::new(spec)
}

/// One sweep cell: the parameter values in grid order.
fn cells(grids: &[Grid]) -> Vec<Vec<f64>> {
    grids.iter().fold(vec![vec![]], |acc, g| {
        acc.iter()
            .flat_map(|prefix| {
                g.points.iter().map(move |&v| {
                    let mut c = prefix.clone();
                    c.push(v);
                    c
                })
            })
            .collect()
    })
}

fn run_cell(ctx: &Context, s: &Scenario, grids: &[Grid], values: &[f64], index: usize) -> Result<(String, Verdict)> {
    let args = ctx.args;
    let mut family = s.family_spec()?;
    let mut window = s.window.clone();
    let mut elapsed = s.schedule().elapsed();
    let mut n = args.n;
    for (g, &v) in grids.iter().zip(values) {
        match g.param {
            SweepParam::Elapsed => elapsed = v,
            SweepParam::DtMin => family = with_dt_min(&family, v)?,
            SweepParam::DtWindow => {
                let w = window.as_ref().ok_or_else(|| Error::InvalidConfig("dt_window sweep needs a window".into()))?;
                window = Some(with_dt_window(w, v)?);
            }
            SweepParam::N => {
                if !(v >= 0.0 && v.fract() == 0.0) {
                    return Err(Error::InvalidConfig(format!("sample size must be a whole number, got {v}")));
                }
                n = Some(v as u64);
            }
        }
    }
    let tb = TwoBoxScenario::new(make_family(&family)?);
    let mc = ctx.mc(n)?.map(|c| c.with_seed(derive_seed(args.seed, 1000 + index as u64)));
    let opts = options(args, mc);
    let layout = s.layout();
    let report = match layout {
        Layout::Single => single_box_report(&tb, elapsed, &opts)?,
        Layout::TwoBox => crate::signaling::witness(&tb, elapsed, &opts)?,
        Layout::Window => {
            let spec = window.ok_or_else(|| Error::InvalidConfig("window layout needs a window".into()))?;
            window_report(&tb, &Window::new(spec)?, &opts)?
        }
    };
    let mut row: Vec<String> = values.iter().map(|&v| num(v)).collect();
    if let Probe::Window { theta, omega, mass, .. } = report.probe {
        row.extend([num(theta), num(omega), num(mass)]);
    }
    row.push(witness_fields(&report));
    Ok((row.join(","), report.verdict))
}

fn cmd_sweep(ctx: &Context, s: &Scenario) -> Result<Status> {
    let args = ctx.args;
    let grids: Vec<Grid> = if args.grid.is_empty() {
        match &s.grid {
            Some(g) => vec![Grid { param: SweepParam::Elapsed, points: g.points()? }],
            None => return Err(Error::Usage("sweep needs at least one --grid".into())),
        }
    } else {
        args.grid.iter().map(|g| parse_grid(g)).collect::<Result<_>>()?
    };
    let mut header: Vec<&str> = grids.iter().map(|g| g.param.name()).collect();
    if s.layout() == Layout::Window {
        header.extend(["theta", "omega", "mass"]);
    }
    let mut csv = format!("{},{WITNESS_COLUMNS}\n", header.join(","));

    let cells = cells(&grids);
    let rows: Vec<Result<(String, Verdict)>> =
        cells.par_iter().enumerate().map(|(i, values)| run_cell(ctx, s, &grids, values, i)).collect();

    let mut flagged = false;
    for row in rows {
        match row {
            Ok((line, verdict)) => {
                flagged |= verdict == Verdict::Signaling;
                csv.push_str(&line);
                csv.push('\n');
            }
            Err(e) => {
                ctx.write("sweep.csv", &csv)?;
                ctx.write_manifest(&["sweep.csv"], Some(e.to_string()))?;
                return Err(e);
            }
        }
    }
    ctx.write("sweep.csv", &csv)?;
    ctx.write_manifest(&["sweep.csv"], None)?;
    println!("{} cells, verdict: {}", cells.len(), if flagged { "signaling" } else { "non-signaling" });
    Ok(if flagged { Status::Flagged } else { Status::Pass })
}

/// Splits a CSV produced by this tool into its provenance header and data.
pub fn data_section(text: &str) -> &str {
    match text.strip_prefix('#') {
        Some(rest) => rest.split_once('\n').map_or("", |(_, data)| data),
        None => text,
    }
}
