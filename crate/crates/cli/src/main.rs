//! `meanscope`: subadditivity analysis of quasi-arithmetic means from the
//! command line.

mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meanscope::generators::{build_with_grid, fit_window};
use meanscope::semidiff::{detect_kinks_with, find_alpha_with};
use meanscope::{
    compare_means, parse_generator, qa_mean, run_battery, run_checker, BuildError, CheckConfig, CheckerId, Generator,
    GeneratorSpec, Resolution, Status, Window,
};

use report::{CliError, GeneratorInfo, Report, RunConfig};

const EXIT_USAGE: u8 = 64;
const EXIT_BUILD: u8 = 65;

#[derive(Debug, Parser)]
#[command(name = "meanscope", version, about = "Decide subadditivity of quasi-arithmetic means")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the mean of a list of positive numbers.
    Mean {
        /// Comma-separated entries.
        #[arg(short = 'x', value_delimiter = ',', required = true, allow_hyphen_values = true)]
        xs: Vec<f64>,
    },
    /// Run a single checker.
    Check {
        /// Checker id, e.g. `subadditive_direct` or `compare_means`.
        id: String,
    },
    /// Locate the threshold where f''_+ becomes identically zero, and kinks.
    Alpha,
    /// Run all battery checkers and resolve them.
    Battery,
    /// Compare the means of two generators (`-g f -g g` tests A_f <= A_g).
    Compare,
}

#[derive(Debug, Args)]
struct Opts {
    /// Generator spec: power(p), log, exp(c), quadlin(a) or an expression in x.
    #[arg(short = 'g', long = "generator", global = true, allow_hyphen_values = true)]
    generators: Vec<String>,

    /// Analysis window `lo:hi`.
    #[arg(long, global = true, value_parser = parse_window, default_value = "1e-3:1e3")]
    window: Window,

    #[arg(long, global = true, default_value_t = 10_000)]
    samples: u64,

    /// Vector length for the mean inequalities.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=64))]
    arity: u64,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Relative rounding allowance.
    #[arg(long = "tol", global = true, default_value_t = 1e-9)]
    tol_rel: f64,

    /// Grid size for the alpha and kink scans.
    #[arg(long, global = true, default_value_t = meanscope::semidiff::SCAN_GRID)]
    scan_grid: usize,

    /// Grid size for the monotonicity certificate.
    #[arg(long, global = true, default_value_t = meanscope::generators::MONOTONE_GRID)]
    monotone_grid: usize,

    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected `lo:hi`")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("upper bound: {e}"))?;
    Window::new(lo, hi).map_err(|e| e.to_string())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Mean { .. } => "mean",
        Command::Check { .. } => "check",
        Command::Alpha => "alpha",
        Command::Battery => "battery",
        Command::Compare => "compare",
    }
}

/// Build on the largest sub-window where `f` stays finite.
fn construct(text: &str, window: Window, grid: usize) -> Result<(GeneratorSpec, Generator), CliError> {
    let spec = parse_generator(text).map_err(|e| CliError::parse(text, e))?;
    let build = |spec: &GeneratorSpec| -> Result<Generator, BuildError> {
        let fitted = fit_window(spec, window)?;
        build_with_grid(spec.clone(), fitted, grid)
    };
    let g = build(&spec).map_err(|e| CliError::build(text, e))?;
    Ok((spec, g))
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::Inconclusive => 2,
    }
}

fn resolution_code(r: Resolution) -> u8 {
    match r {
        Resolution::Subadditive => 0,
        Resolution::NotSubadditive => 1,
        Resolution::Disagreement | Resolution::Inconclusive => 2,
    }
}

fn expect_generators(opts: &Opts, n: usize, what: &str) -> Result<(), CliError> {
    if opts.generators.len() != n {
        let plural = if n == 1 { "" } else { "s" };
        return Err(CliError::usage(format!("{what} takes {n} generator{plural} (-g), got {}", opts.generators.len())));
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(Report, u8), CliError> {
    let opts = &cli.opts;
    let cfg = CheckConfig {
        samples: opts.samples,
        arity: opts.arity as usize,
        seed: opts.seed,
        tol_rel: opts.tol_rel,
        scan_grid: opts.scan_grid,
    };
    if !(cfg.tol_rel >= 0.0 && cfg.tol_rel.is_finite()) {
        return Err(CliError::usage("--tol must be a finite non-negative number"));
    }
    if opts.scan_grid < 3 || opts.monotone_grid < 3 {
        return Err(CliError::usage("grid sizes must be at least 3"));
    }
    let check_id = match &cli.command {
        Command::Check { id } => Some(id.parse::<CheckerId>().map_err(CliError::usage)?),
        _ => None,
    };
    let arity = match (&cli.command, check_id) {
        (Command::Compare, _) | (_, Some(CheckerId::CompareMeans)) => 2,
        _ => 1,
    };
    expect_generators(opts, arity, command_name(&cli.command))?;
    let config = RunConfig::new(command_name(&cli.command), check_id, opts, &cfg);
    let mut built = Vec::new();
    for text in &opts.generators {
        built.push(construct(text, opts.window, opts.monotone_grid)?);
    }
    let info: Vec<GeneratorInfo> = opts
        .generators
        .iter()
        .zip(&built)
        .map(|(text, (spec, g))| GeneratorInfo::new(text, spec, g, opts.window))
        .collect();
    let mut report = Report::new(config, info);
    let g = &built[0].1;
    let code = match &cli.command {
        Command::Mean { xs } => {
            let m = qa_mean(g, xs).map_err(|e| CliError::usage(format!("mean: {e}")))?;
            report.mean = Some(m);
            0
        }
        Command::Alpha => {
            let canon = meanscope::canonicalize(g);
            report.alpha = Some(find_alpha_with(&canon, cfg.scan_grid));
            report.kinks = Some(kinks(&canon, cfg.scan_grid));
            0
        }
        Command::Battery => {
            let b = run_battery(g, &cfg);
            let code = resolution_code(b.resolution);
            report.alpha = Some(b.alpha);
            report.kinks = Some(b.kinks);
            report.checkers = Some(b.checkers);
            report.resolution = Some(b.resolution);
            report.details = b.details;
            code
        }
        Command::Check { .. } | Command::Compare => {
            let v = match check_id {
                Some(id) if id != CheckerId::CompareMeans => run_checker(id, g, &cfg),
                _ => compare_means(g, &built[1].1, &cfg),
            };
            let code = status_code(v.status);
            report.checkers = Some(vec![v]);
            code
        }
    };
    Ok((report, code))
}

fn kinks(g: &Generator, grid: usize) -> Vec<meanscope::Kink> {
    let mut out: Vec<_> = [1u8, 2].iter().flat_map(|&o| detect_kinks_with(g, o, grid).points).collect();
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.order.cmp(&b.order)));
    out
}

fn configure_threads() {
    if let Some(n) = std::env::var("MEANSCOPE_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // an already initialised pool is fine: thread count never changes results
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let json = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let err = CliError::usage(text.trim_start_matches("error: ").trim_end());
            err.emit(json);
            return ExitCode::from(EXIT_USAGE);
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok((report, code)) => {
            let text = if cli.opts.json {
                serde_json::to_string_pretty(&report).expect("report serialises") + "\n"
            } else {
                report.render()
            };
            // a closed pipe downstream is not our failure
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(code)
        }
        Err(err) => {
            err.emit(cli.opts.json);
            ExitCode::from(err.code())
        }
    }
}
