//! `premaps`: exact, asymptotic, and Monte Carlo trace statistics of real
//! Gaussian matrix ensembles.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or schema error,
//! 3 enumeration guard exceeded for every expression.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use premaps_cli::{
    enumerate, exit_code, first_order_suite, parse_jobspec, render_report_csv,
    render_report_json, run_job, second_order_suite, CliError, JobSpec, Mode, VerifyRow,
};

#[derive(Parser)]
#[command(name = "premaps", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a job specification with its requested modes.
    Run(RunArgs),
    /// Run a job in exact mode only.
    Exact(RunArgs),
    /// Run a job in asymptotic mode only.
    Asymptotic(RunArgs),
    /// Run a job in Monte Carlo mode only.
    Mc(RunArgs),
    /// Run a job in oracle mode only.
    Oracle(RunArgs),
    /// Run the verification identities on a job or a built-in suite.
    Verify(VerifyArgs),
    /// Count or list a combinatorial class.
    Enumerate(EnumArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON job specification.
    #[arg(long)]
    spec: PathBuf,
    /// Override the spec's modes (comma-separated).
    #[arg(long)]
    mode: Option<String>,
    /// Override the spec's matrix sizes (comma-separated).
    #[arg(long = "N")]
    n: Option<String>,
    /// Override the sample count.
    #[arg(long)]
    samples: Option<u64>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker thread count.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report here instead of the spec's output path (or stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Job specification to verify.
    #[arg(long, conflicts_with = "suite")]
    spec: Option<PathBuf>,
    /// Built-in suite: first-order or second-order.
    #[arg(long)]
    suite: Option<String>,
    /// Colour pair for a built-in suite, e.g. goe,wishart.
    #[arg(long, default_value = "goe,goe")]
    colours: String,
}

#[derive(Args)]
struct EnumArgs {
    /// premaps, pairing-premaps, ginibre, disc-nc, or ann-nc.
    #[arg(long)]
    class: String,
    /// Number of points (for the premap classes, or a disc on 1..=n).
    #[arg(long)]
    n: Option<usize>,
    /// Reference cycles for the noncrossing classes, e.g. "(1,2)(3,4)".
    #[arg(long)]
    gamma: Option<String>,
    /// Print the members in canonical cycle notation.
    #[arg(long)]
    members: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Schema(_) | CliError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Run(args) => run_with(args, None),
        Cmd::Exact(args) => run_with(args, Some(Mode::Exact)),
        Cmd::Asymptotic(args) => run_with(args, Some(Mode::Asymptotic)),
        Cmd::Mc(args) => run_with(args, Some(Mode::Mc)),
        Cmd::Oracle(args) => run_with(args, Some(Mode::Oracle)),
        Cmd::Verify(args) => verify_cmd(args),
        Cmd::Enumerate(args) => enumerate_cmd(args),
    }
}

fn run_with(args: RunArgs, forced_mode: Option<Mode>) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&args.spec)?;
    let mut spec: JobSpec = parse_jobspec(&text)?;
    if let Some(mode) = forced_mode {
        spec.modes = vec![mode];
    } else if let Some(modes) = &args.mode {
        spec.modes = modes
            .split(',')
            .map(|m| m.trim().parse())
            .collect::<Result<_, _>>()?;
    }
    if let Some(ns) = &args.n {
        spec.n_values = ns
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad N value {v:?}")))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(s) = args.samples {
        spec.samples = s;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = args.threads {
        spec.threads = t;
    }

    let report = run_job(&spec)?;

    let format = args
        .format
        .clone()
        .or_else(|| spec.output.as_ref().map(|o| o.format.clone()))
        .unwrap_or_else(|| "json".to_string());
    let rendered = match format.as_str() {
        "json" => render_report_json(&report),
        "csv" => render_report_csv(&report),
        other => return Err(CliError::Usage(format!("unknown format {other:?}"))),
    };
    let out_path = args
        .out
        .clone()
        .or_else(|| spec.output.as_ref().map(|o| PathBuf::from(&o.path)));
    match out_path {
        Some(path) => std::fs::write(path, rendered)?,
        None => println!("{rendered}"),
    }
    Ok(exit_code(&report) as u8)
}

fn verify_cmd(args: VerifyArgs) -> Result<u8, CliError> {
    if let Some(spec_path) = args.spec {
        let text = std::fs::read_to_string(&spec_path)?;
        let mut spec: JobSpec = parse_jobspec(&text)?;
        spec.modes = vec![Mode::Verify];
        let report = run_job(&spec)?;
        for expr in &report.expressions {
            for row in &expr.verify {
                print_row(&expr.name, row);
            }
            for err in &expr.errors {
                eprintln!("{}: error: {err}", expr.name);
            }
        }
        return Ok(exit_code(&report) as u8);
    }
    let suite = args
        .suite
        .ok_or_else(|| CliError::Usage("verify needs --spec or --suite".to_string()))?;
    let (kind1, kind2) = args
        .colours
        .split_once(',')
        .ok_or_else(|| CliError::Usage("--colours needs two comma-separated kinds".to_string()))?;
    let rows = match suite.as_str() {
        "first-order" => first_order_suite(kind1.trim(), kind2.trim())?,
        "second-order" => second_order_suite(kind1.trim(), kind2.trim())?,
        other => return Err(CliError::Usage(format!("unknown suite {other:?}"))),
    };
    let mut pass = true;
    for row in &rows {
        print_row(&suite, row);
        pass &= row.pass;
    }
    Ok(if pass { 0 } else { 1 })
}

fn print_row(scope: &str, row: &VerifyRow) {
    println!(
        "{}: {} [{}] lhs = {}, rhs = {}",
        scope,
        row.check,
        if row.pass { "pass" } else { "FAIL" },
        row.lhs,
        row.rhs
    );
}

fn enumerate_cmd(args: EnumArgs) -> Result<u8, CliError> {
    let out = enumerate(&args.class, args.n, args.gamma.as_deref(), args.members)?;
    println!("count {}", out.count);
    if let Some(members) = out.members {
        for m in members {
            println!("{m}");
        }
    }
    Ok(0)
}
