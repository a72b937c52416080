use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use setcalc::MetricKind;
use setcalc_cli::commands::{self, GradMode, Run};
use setcalc_cli::config::{parse_ks, Format, GridSpec, Overrides, RunConfig};
use setcalc_cli::verify::{run_verify, Suite};
use setcalc_cli::CliError;

/// Set-valued calculus on sampled functions: envelopes, class metrics,
/// gradients, completion elements and property suites.
#[derive(Debug, Parser)]
#[command(name = "setcalc", version)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags shared by every subcommand; they override `SETCALC_CONFIG`.
#[derive(Debug, Args)]
struct Flags {
    /// Grid as `a,b,n`.
    #[arg(long, global = true, value_parser = |s: &str| s.parse::<GridSpec>().map_err(|e| e.to_string()))]
    grid: Option<GridSpec>,
    /// Node count, overriding the one in `--grid`.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// k-schedule as a comma list.
    #[arg(long, global = true, value_parser = |s: &str| parse_ks(s).map_err(|e| e.to_string()))]
    ks: Option<Vec<f64>>,
    /// Direction count for vector-valued metrics.
    #[arg(long, global = true)]
    dirs: Option<usize>,
    /// Factor applied to every automatic tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for output files; without it the main output goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for tables and reports.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Seed for the random fixtures in `verify`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    S,
    R,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Lipschitz envelopes of a class and their graph gap.
    Envelope {
        /// Catalog name.
        #[arg(long = "fn")]
        name: String,
        /// Lipschitz constant of the envelopes.
        #[arg(long)]
        k: f64,
    },
    /// Class distance s or r between two functions.
    Metric {
        #[arg(long, value_enum)]
        which: Which,
        /// Catalog name.
        f: String,
        /// Catalog name.
        g: String,
    },
    /// Interval values of a class at points.
    Value {
        /// Catalog name.
        name: String,
        /// Points as a comma list.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        at: Vec<f64>,
    },
    /// Gradient field with plot data.
    Grad {
        #[arg(long, value_enum, default_value = "clarke")]
        mode: GradMode,
        /// Catalog name, or an algebra expression in algebra mode.
        name: String,
    },
    /// Completion element of a class in the Lipschitz tower.
    Complete {
        /// Catalog name.
        name: String,
        /// Number of tower levels, k = 2^0 .. 2^(levels-1).
        #[arg(long, default_value_t = setcalc::completion::DEFAULT_LEVELS)]
        levels: usize,
    },
    /// Property suites; exit status 0 iff every check passes.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Lists the function catalog.
    Catalog,
}

fn execute(cli: Cli) -> Result<(Run, Option<PathBuf>), CliError> {
    let f = cli.flags;
    let ov = Overrides { grid: f.grid, n: f.n, ks: f.ks, dirs: f.dirs, tol: f.tol, out: f.out, format: f.format, seed: f.seed };
    let cfg = RunConfig::load(&ov)?;
    let run = match cli.cmd {
        Cmd::Envelope { name, k } => commands::envelope(&cfg, &name, k)?,
        Cmd::Metric { which, f, g } => {
            let kind = match which {
                Which::S => MetricKind::S,
                Which::R => MetricKind::R,
            };
            commands::metric(&cfg, kind, &f, &g)?
        }
        Cmd::Value { name, at } => commands::value(&cfg, &name, &at)?,
        Cmd::Grad { mode, name } => commands::grad(&cfg, mode, &name)?,
        Cmd::Complete { name, levels } => commands::complete(&cfg, &name, levels)?,
        Cmd::Verify { suite } => run_verify(&cfg, suite)?,
        Cmd::Catalog => commands::list_catalog(cfg.format),
    };
    Ok((run, cfg.out))
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("setcalc: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    let (run, out) = match execute(cli) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    if let Err(e) = run.emit(out.as_deref(), &mut std::io::stdout().lock()) {
        return fail(&e);
    }
    match &run.error {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}
