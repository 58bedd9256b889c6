//! Command-line front end: `analyze`, `discover`, `convergence`, `longtime`.
//!
//! All subcommands write CSV (stamped `# lmm-discover v1`) to stdout or to
//! `--output`; the experiment subcommands can emit a structured JSON report
//! instead, and `--check` turns the theory-concordance invariants into the
//! exit code. `LMM_DISCOVER_THREADS` caps experiment parallelism (default:
//! machine parallelism).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{classify_stability, consistency_report, Direction};
use crate::discovery::{
    error_vs_truth, exact_initial_dynamics, restrict_to_learned, solve_discovery, DiscoveryProblem,
};
use crate::experiments::{
    convergence_concordance, longtime_concordance, run_convergence, run_longtime,
    write_convergence_csv, write_longtime_csv, ConvergenceSpec, LongTimeSpec, CSV_VERSION_HEADER,
};
use crate::reference::{
    exact_dynamics_on_grid, integrate_reference, system_by_name, DEFAULT_REFINE,
};
use crate::schemes::{scheme, Family, MAX_STEPS};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lmm-discover",
    version,
    about = "Linear multistep methods for dynamics discovery: exact coefficients, stability analysis, and discovery experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Consistency order and discovery-stability class per scheme (CSV)
    Analyze(AnalyzeArgs),
    /// Recover dynamics from an exact state trajectory (CSV)
    Discover(DiscoverArgs),
    /// Mesh-refinement convergence study on a fixed domain
    Convergence(ConvergenceArgs),
    /// Long-time study on a fixed mesh over growing domains
    Longtime(LongtimeArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scheme family (AB, AM, BDF); all three when omitted
    #[arg(long)]
    family: Option<String>,
    /// Step count, single (`3`) or inclusive range (`7..10`); defaults to
    /// the family's full supported range
    #[arg(long = "M")]
    m: Option<String>,
    /// Discovery direction to classify: forward, terminal, or both
    #[arg(long, default_value = "forward")]
    direction: String,
    /// Write the CSV here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also export the analyzed schemes (exact rational coefficients) as JSON
    #[arg(long)]
    emit_schemes: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Scheme family (AB, AM, BDF)
    #[arg(long)]
    family: String,
    /// Step count
    #[arg(long = "M")]
    m: u32,
    /// Mesh size
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 0.2)]
    t1: f64,
    /// Benchmark system: cubic2d, linear, or rotation
    #[arg(long, default_value = "cubic2d")]
    system: String,
    /// Add this offset to every supplied initial dynamics component, to
    /// probe sensitivity to initial-data error
    #[arg(long, default_value_t = 0.0)]
    perturb_initial: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Scheme family (AB, AM, BDF); all three when omitted
    #[arg(long)]
    family: Option<String>,
    /// Step count, single (`3`) or inclusive range (`1..4`); default 1..4
    /// (0..4 for AM)
    #[arg(long = "M")]
    m: Option<String>,
    /// Comma-separated decreasing mesh sizes
    #[arg(long, default_value = "0.02,0.01,0.005,0.0025")]
    h_list: String,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 0.2)]
    t1: f64,
    #[arg(long, default_value = "cubic2d")]
    system: String,
    /// Verify measured slopes against the classified stability and
    /// consistency order; nonzero exit on any failure
    #[arg(long)]
    check: bool,
    /// Emit a structured JSON report instead of CSV
    #[arg(long)]
    json: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LongtimeArgs {
    /// Scheme family (AB, AM, BDF); all three when omitted
    #[arg(long)]
    family: Option<String>,
    /// Step count, single (`2`) or inclusive range (`1..3`); default 1..3
    /// (0..3 for AM)
    #[arg(long = "M")]
    m: Option<String>,
    /// Fixed mesh size
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Comma-separated increasing horizons
    #[arg(long, default_value = "12.5,25,37.5")]
    t_list: String,
    #[arg(long, default_value = "cubic2d")]
    system: String,
    /// Verify growth classes against the classified stability; nonzero exit
    /// on any failure
    #[arg(long)]
    check: bool,
    /// Emit a structured JSON report instead of CSV
    #[arg(long)]
    json: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    init_thread_pool();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("LMM_DISCOVER_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n >= 1 {
                // a second initialization (e.g. in tests) is harmless
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Discover(args) => cmd_discover(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Longtime(args) => cmd_longtime(args),
    }
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

/// Parses `3` or `7..10` (inclusive).
fn parse_m_range(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::InvalidStudy(format!("bad step range `{s}`: expected `M` or `LO..HI`"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi
            .trim()
            .strip_prefix('=')
            .unwrap_or(hi.trim())
            .parse()
            .map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok((lo, hi))
    } else {
        let m: u32 = s.trim().parse().map_err(|_| bad())?;
        Ok((m, m))
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::InvalidStudy(format!("bad number `{tok}` in list")))
        })
        .collect()
}

/// Expands family/step selectors into concrete (family, M) pairs, bounds
/// checked against each family's supported range.
fn select_schemes(
    family: Option<&str>,
    m: Option<&str>,
    default_hi: u32,
) -> Result<Vec<(Family, u32)>> {
    let families: Vec<Family> = match family {
        Some(name) => vec![Family::from_str(name)?],
        None => Family::ALL.to_vec(),
    };
    let range = m.map(parse_m_range).transpose()?;
    let mut out = Vec::new();
    for family in families {
        let (lo, hi) = match range {
            Some((lo, hi)) => (lo, hi),
            None => (family.min_steps(), default_hi.min(MAX_STEPS)),
        };
        if lo < family.min_steps() || hi > MAX_STEPS {
            return Err(Error::StepCountOutOfRange {
                family: family.name(),
                m: if lo < family.min_steps() { lo } else { hi },
                min: family.min_steps(),
                max: MAX_STEPS,
            });
        }
        for step in lo..=hi {
            out.push((family, step));
        }
    }
    Ok(out)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<i32> {
    let directions: Vec<Direction> = match args.direction.as_str() {
        "forward" => vec![Direction::Forward],
        "terminal" => vec![Direction::Terminal],
        "both" => vec![Direction::Forward, Direction::Terminal],
        other => {
            return Err(Error::InvalidStudy(format!(
                "bad direction `{other}`: expected forward, terminal, or both"
            )))
        }
    };
    let selected = select_schemes(args.family.as_deref(), args.m.as_deref(), MAX_STEPS)?;

    let mut w = open_output(args.output.as_ref())?;
    writeln!(w, "{CSV_VERSION_HEADER}")?;
    writeln!(
        w,
        "family,M,direction,consistency_order,stability_class,max_root_modulus,witness_multiplicity"
    )?;
    let mut schemes = Vec::new();
    for &(family, m) in &selected {
        let s = scheme(family, m)?;
        let report = consistency_report(&s, 30)?;
        for &direction in &directions {
            let class = classify_stability(&s, direction)?;
            writeln!(
                w,
                "{},{},{},{},{},{:.10},{}",
                family,
                m,
                direction,
                report.order,
                class.tag,
                class.max_root_modulus(),
                class.witness_multiplicity()
            )?;
        }
        schemes.push(s);
    }
    w.flush()?;

    if let Some(path) = &args.emit_schemes {
        let file = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(file, &schemes)?;
    }
    Ok(0)
}

fn cmd_discover(args: DiscoverArgs) -> Result<i32> {
    let family = Family::from_str(&args.family)?;
    let s = scheme(family, args.m)?;
    let sys = system_by_name(&args.system)?;
    let state = integrate_reference(&sys, args.t0, args.t1, args.h, DEFAULT_REFINE)?;
    let f_true = exact_dynamics_on_grid(&sys, &state)?;

    let mut init = exact_initial_dynamics(&s, &f_true);
    for value in init.values_mut() {
        for component in value.iter_mut() {
            *component += args.perturb_initial;
        }
    }

    let problem = DiscoveryProblem::new(s.clone(), state, init)?;
    let result = solve_discovery(&problem);
    let truth = restrict_to_learned(&s, &f_true)?;
    let report = error_vs_truth(&result, &truth)?;

    let mut w = open_output(args.output.as_ref())?;
    writeln!(w, "{CSV_VERSION_HEADER}")?;
    let dim = result.dim();
    write!(w, "t")?;
    for c in 1..=dim {
        write!(w, ",f_hat_{c}")?;
    }
    for c in 1..=dim {
        write!(w, ",f_true_{c}")?;
    }
    writeln!(w, ",abs_err")?;
    for r in 0..result.len() {
        write!(w, "{}", truth.time(r))?;
        for v in result.row(r) {
            write!(w, ",{v}")?;
        }
        for v in truth.row(r) {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", report.per_index[r])?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<i32> {
    let spec = ConvergenceSpec {
        schemes: select_schemes(args.family.as_deref(), args.m.as_deref(), 4)?,
        h_values: parse_f64_list(&args.h_list)?,
        t0: args.t0,
        t1: args.t1,
        system: args.system.clone(),
    };
    let study = run_convergence(&spec)?;

    let mut w = open_output(args.output.as_ref())?;
    if args.json {
        serde_json::to_writer_pretty(&mut w, &study)?;
        writeln!(w)?;
    } else {
        write_convergence_csv(&study, &mut w)?;
    }
    w.flush()?;

    if args.check {
        let failures = convergence_concordance(&study)?;
        if !failures.is_empty() {
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            return Ok(1);
        }
    }
    Ok(0)
}

fn cmd_longtime(args: LongtimeArgs) -> Result<i32> {
    let spec = LongTimeSpec {
        schemes: select_schemes(args.family.as_deref(), args.m.as_deref(), 3)?,
        h: args.h,
        t_values: parse_f64_list(&args.t_list)?,
        system: args.system.clone(),
    };
    let study = run_longtime(&spec)?;

    let mut w = open_output(args.output.as_ref())?;
    if args.json {
        serde_json::to_writer_pretty(&mut w, &study)?;
        writeln!(w)?;
    } else {
        write_longtime_csv(&study, &mut w)?;
    }
    w.flush()?;

    if args.check {
        let failures = longtime_concordance(&study)?;
        if !failures.is_empty() {
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            return Ok(1);
        }
    }
    Ok(0)
}
