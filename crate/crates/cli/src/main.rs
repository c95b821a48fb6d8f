//! Command-line driver: point invariants, minimal lifts, experiment
//! batches, and the bounded-window two-squares scan.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags or malformed
//! mathematical input), 2 on runtime failures (search gave up, IO).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use sphere_lift::harness::csv_string;
use sphere_lift::{
    conjecture_scan, default_r_range, eta, is_probable_prime, minimal_lift, read_prime_file,
    run_experiment, wp_exponent, Budgets, ExperimentConfig, HarnessError, LiftError, ModPoint,
    RowStatus, SampleMode, SamplerSpec, SearchMode,
};

#[derive(Parser)]
#[command(
    name = "sphere-lift",
    version,
    about = "Minimal-height lifts of mod-q sphere points and their lattice invariant"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the lattice height invariant eta of a point.
    Eta(EtaArgs),
    /// Find the minimal-height lift of a point over Z[1/p].
    Lift(LiftArgs),
    /// Like `lift`, but print only the exponent w_p.
    Wp(LiftArgs),
    /// Sample points, measure (eta, w_p) pairs, and emit CSV/SVG.
    Experiment(ExperimentArgs),
    /// Scan random instances for the bounded-window two-squares property.
    Conjecture(ConjectureArgs),
}

#[derive(Args)]
struct EtaArgs {
    /// Odd prime modulus.
    #[arg(long)]
    q: String,
    /// Sphere dimension; the point has d+1 coordinates.
    #[arg(long)]
    d: usize,
    /// Comma-separated coordinates: all d+1, or just the d-1 active ones
    /// (the two trailing zeros are implied).
    #[arg(long)]
    a: String,
}

#[derive(Args)]
struct LiftArgs {
    /// Odd prime modulus.
    #[arg(long)]
    q: String,
    /// Lifting prime, p != q.
    #[arg(long)]
    p: String,
    /// Sphere dimension; the point has d+1 coordinates.
    #[arg(long)]
    d: usize,
    /// Comma-separated coordinates: all d+1, or just the d-1 active ones.
    #[arg(long)]
    a: String,
    /// Search discipline: `exact` certifies skipped heights, `heuristic`
    /// moves on when a height exhausts its budget.
    #[arg(long, default_value = "exact")]
    mode: String,
    /// Candidate budget per height (default 20000).
    #[arg(long)]
    budget: Option<u64>,
    /// Height-scan cap, in units of ln q / ln p.
    #[arg(long, default_value_t = 4.0)]
    h_max_factor: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Sampler regime: random-log, generic, small, fixed1 or fixed2.
    #[arg(long)]
    mode: String,
    /// Odd prime modulus (exclusive with --q-file).
    #[arg(long)]
    q: Option<String>,
    /// File with one prime per line; # starts a comment.
    #[arg(long)]
    q_file: Option<PathBuf>,
    /// Sphere dimension.
    #[arg(long)]
    d: usize,
    /// Points to draw per prime.
    #[arg(long)]
    samples: usize,
    /// Base RNG seed; sample i uses seed ^ i.
    #[arg(long)]
    seed: u64,
    /// Lifting prime; defaults to the smallest prime in the ln(q) window.
    #[arg(long)]
    p: Option<String>,
    /// Write rows to this CSV file instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write a scatter of (eta, w_p) with the predicted line.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Override the lower log-scale exponent of the random-log window.
    #[arg(long)]
    r_lo: Option<u32>,
    /// Override the upper log-scale exponent of the random-log window.
    #[arg(long)]
    r_hi: Option<u32>,
}

#[derive(Args)]
struct ConjectureArgs {
    /// Odd prime modulus.
    #[arg(long)]
    q: String,
    /// Sphere dimension.
    #[arg(long)]
    d: usize,
    /// Number of random instances to scan.
    #[arg(long)]
    samples: usize,
    /// Enumeration radius: membership is tested for all |t| < r.
    #[arg(long)]
    r: u32,
    /// RNG seed.
    #[arg(long)]
    seed: u64,
    /// Write one line per trial to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Eta(args) => cmd_eta(args),
        Cmd::Lift(args) => cmd_lift(args, false),
        Cmd::Wp(args) => cmd_lift(args, true),
        Cmd::Experiment(args) => cmd_experiment(args),
        Cmd::Conjecture(args) => cmd_conjecture(args),
    }
}

fn parse_prime(text: &str, flag: &str) -> Result<BigUint, CliError> {
    let n: BigUint = text
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{flag} must be a decimal integer, got `{text}`")))?;
    if !is_probable_prime(&n) {
        return Err(CliError::Usage(format!("{flag} must be prime, got {n}")));
    }
    Ok(n)
}

fn parse_point(q: &BigUint, d: usize, text: &str) -> Result<ModPoint, CliError> {
    let coords: Vec<BigInt> = text
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--a must be comma-separated integers, got `{text}`")))?;
    let full = if coords.len() == d + 1 {
        coords
    } else if d >= 1 && coords.len() == d - 1 {
        let mut full = coords;
        full.push(BigInt::from(0));
        full.push(BigInt::from(0));
        full
    } else {
        return Err(CliError::Usage(format!(
            "--a must list {} or {} coordinates for d = {d}, got {}",
            d + 1,
            d - 1,
            coords.len()
        )));
    };
    ModPoint::new(q.clone(), full).map_err(|e| CliError::Usage(format!("invalid point: {e}")))
}

fn parse_search_mode(text: &str) -> Result<SearchMode, CliError> {
    match text {
        "exact" => Ok(SearchMode::Exact),
        "heuristic" => Ok(SearchMode::Heuristic),
        other => Err(CliError::Usage(format!(
            "--mode must be `exact` or `heuristic`, got `{other}`"
        ))),
    }
}

fn cmd_eta(args: EtaArgs) -> Result<(), CliError> {
    let q = parse_prime(&args.q, "--q")?;
    let a = parse_point(&q, args.d, &args.a)?;
    let result = eta(&a);
    println!("eta = {:.6}", result.value);
    println!("error_bound = {:.6}", result.error_bound);
    Ok(())
}

fn cmd_lift(args: LiftArgs, wp_only: bool) -> Result<(), CliError> {
    let q = parse_prime(&args.q, "--q")?;
    let p = parse_prime(&args.p, "--p")?;
    let a = parse_point(&q, args.d, &args.a)?;
    let mode = parse_search_mode(&args.mode)?;
    let mut budgets = Budgets::default();
    if let Some(b) = args.budget {
        budgets.candidate_budget = b;
    }
    let found = minimal_lift(&a, &p, mode, &budgets, args.h_max_factor).map_err(|e| match e {
        LiftError::Undecided { .. } | LiftError::NotFound { .. } => runtime(e),
        other => usage(other),
    })?;
    let w = wp_exponent(&found.lift, &q, args.d);
    if wp_only {
        println!("{w:.6}");
        return Ok(());
    }
    let n = found
        .lift
        .n
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",");
    println!("h_min = {}", found.h_min);
    println!("n = {n}");
    println!("w_p = {w:.6}");
    println!("certified_minimal = {}", found.certified_minimal);
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mode: SampleMode = args.mode.parse().map_err(CliError::Usage)?;
    let primes = match (&args.q, &args.q_file) {
        (Some(q), None) => vec![parse_prime(q, "--q")?],
        (None, Some(path)) => read_prime_file(path).map_err(|e| match e {
            HarnessError::Io(_) => runtime(e),
            other => usage(other),
        })?,
        _ => {
            return Err(CliError::Usage(
                "exactly one of --q or --q-file is required".into(),
            ))
        }
    };
    if primes.is_empty() {
        return Err(CliError::Usage("the prime file lists no primes".into()));
    }
    let p = match &args.p {
        Some(text) => Some(parse_prime(text, "--p")?),
        None => None,
    };
    let mut specs = Vec::with_capacity(primes.len() * args.samples);
    for q in &primes {
        let mut r_range = default_r_range(q);
        if let Some(lo) = args.r_lo {
            r_range.0 = lo;
        }
        if let Some(hi) = args.r_hi {
            r_range.1 = hi;
        }
        if r_range.0 > r_range.1 {
            return Err(CliError::Usage(format!(
                "log window is reversed: r_lo = {} > r_hi = {}",
                r_range.0, r_range.1
            )));
        }
        for _ in 0..args.samples {
            specs.push(SamplerSpec {
                mode,
                q: q.clone(),
                d: args.d,
                seed: args.seed,
                r_range,
            });
        }
    }
    let config = ExperimentConfig {
        p,
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&specs, &config, args.csv.as_deref(), args.svg.as_deref())
        .map_err(|e| match e {
            HarnessError::Lattice(_) => usage(e),
            other => runtime(other),
        })?;

    let count = |status: RowStatus| records.iter().filter(|r| r.status == status).count();
    let ok_rows: Vec<_> = records.iter().filter(|r| r.status == RowStatus::Ok).collect();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "rows = {} (ok {}, undecided {}, not-found {}, sample-failed {})",
        records.len(),
        ok_rows.len(),
        count(RowStatus::Undecided),
        count(RowStatus::NotFound),
        count(RowStatus::SampleFailed),
    );
    if !ok_rows.is_empty() {
        let n = ok_rows.len() as f64;
        let mean_eta: f64 = ok_rows.iter().filter_map(|r| r.eta_value).sum::<f64>() / n;
        let mean_w: f64 = ok_rows.iter().filter_map(|r| r.w_p).sum::<f64>() / n;
        let _ = writeln!(summary, "mean eta = {mean_eta:.6}, mean w_p = {mean_w:.6}");
    }
    if let Some(path) = &args.csv {
        let _ = writeln!(summary, "csv -> {}", path.display());
    }
    if let Some(path) = &args.svg {
        let _ = writeln!(summary, "svg -> {}", path.display());
    }
    if args.csv.is_none() {
        // Rows to stdout, notes to stderr, so the output stays pipeable.
        print!("{}", csv_string(&records));
        eprint!("{summary}");
    } else {
        print!("{summary}");
    }
    Ok(())
}

fn cmd_conjecture(args: ConjectureArgs) -> Result<(), CliError> {
    let q = parse_prime(&args.q, "--q")?;
    let report = conjecture_scan(
        &q,
        args.d,
        args.samples,
        args.r,
        &Budgets::default(),
        args.seed,
    )
    .map_err(|e| match e {
        HarnessError::Lattice(_) => usage(e),
        other => runtime(other),
    })?;
    let failures = report
        .trials
        .iter()
        .filter(|t| !t.representable)
        .count();
    println!("trials = {}", report.trials.len());
    println!("failures = {failures}");
    println!(
        "min_set_size_among_failures = {}",
        report
            .min_set_size_among_failures
            .map(|m| m.to_string())
            .unwrap_or_else(|| "inf".into())
    );
    if let Some(path) = &args.csv {
        let mut out = String::from("n,q,set_size,representable\n");
        for t in &report.trials {
            let _ = writeln!(out, "{},{},{},{}", t.n, t.q, t.set_size, t.representable);
        }
        std::fs::write(path, out).map_err(runtime)?;
        println!("csv -> {}", path.display());
    }
    Ok(())
}
