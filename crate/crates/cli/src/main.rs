use clap::{Parser, Subcommand};
use lochrig::commands;
use lochrig::config::RunConfig;
use lochrig::par::ExecPolicy;
use lochrig::record::{OutputSink, RunRecord};
use lochrig::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "lochrig", version, about = "Locally rigid regularizing field: verification, evolution and baryogenesis-rate runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Run configuration (TOML with dotted keys).
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV files and the JSON run record.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; LOCHRIG_WORKERS takes precedence.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every oracle suite and print the verdict table.
    Verify(Common),
    /// Integrate the initial data and write snapshots.
    Evolve(Common),
    /// Compute the first- and second-order rates.
    Rate(Common),
    /// Finite-delta sweep of the Sokhotski identity.
    Sokhotski(Common),
    /// Dump spectral kernel tables for plotting.
    Kernels(Common),
}

const EXIT_CONFIG: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

type Runner = fn(&RunConfig, ExecPolicy, &mut OutputSink) -> lochrig::Result<RunRecord>;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Runner) = match &cli.command {
        Command::Verify(c) => (c, commands::run_verify),
        Command::Evolve(c) => (c, commands::run_evolve),
        Command::Rate(c) => (c, commands::run_rate),
        Command::Sokhotski(c) => (c, commands::run_sokhotski),
        Command::Kernels(c) => (c, commands::run_kernels),
    };
    let cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if common.workers == Some(0) {
        return fail(&Error::Config("--workers must be >= 1".into()));
    }
    let policy = ExecPolicy::resolve(common.workers.or(cfg.workers));
    let mut sink = match OutputSink::new(common.out.as_deref()) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let rec = match run(&cfg, policy, &mut sink) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for v in &rec.verdicts {
        println!("{}", v.line());
    }
    for t in &rec.timing {
        println!("time {:<24} {:.3} s", t.name, t.seconds);
    }
    println!("record {}", rec.hash());
    if rec.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}
