//! `dephasing-lab`: run dephasing simulations and analyses from a JSON
//! config or command-line shortcuts.

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::info;

use config::{Command, Format, OutputConfig, PrepErrorParams, RunConfig, ZurekParams};
use error::CliError;

const THREADS_VAR: &str = "DEPHASING_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dephasing-lab", version, about = "Pure-dephasing simulations, coherence analysis and Bloch-sphere optimization")]
struct Args {
    command: Command,
    /// JSON run config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Spin-bath couplings, comma separated.
    #[arg(long, value_delimiter = ',')]
    couplings: Option<Vec<f64>>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Field half-angle in radians.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of bath spins.
    #[arg(long)]
    n: Option<usize>,
}

fn apply_flags(mut cfg: RunConfig, args: &Args) -> RunConfig {
    let command = args.command;
    if args.out.is_some() || args.format.is_some() {
        let out = cfg.output.get_or_insert_with(OutputConfig::default);
        if let Some(p) = &args.out {
            out.path = Some(p.clone());
        }
        if let Some(f) = args.format {
            out.format = Some(f);
        } else if out.format.is_none() && out.path.as_deref().is_some_and(|p| p.ends_with(".json")) {
            out.format = Some(Format::Json);
        }
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if command == Command::PrepError {
        if args.epsilon.is_some() || args.n.is_some() || args.couplings.is_some() {
            let p = cfg.prep_error.get_or_insert_with(PrepErrorParams::default);
            p.epsilon = args.epsilon.or(p.epsilon);
            p.n = args.n.or(p.n);
            if args.couplings.is_some() {
                p.couplings = args.couplings.clone();
            }
        }
    } else if args.couplings.is_some() || args.lambda.is_some() || args.n.is_some() {
        let z = cfg.zurek.get_or_insert_with(ZurekParams::default);
        if args.couplings.is_some() {
            z.couplings = args.couplings.clone();
        }
        z.spins = args.n.or(z.spins);
        z.lambda = args.lambda.or(z.lambda);
    }
    if let Some(a) = args.alpha {
        cfg.bloch.get_or_insert_with(Default::default).alpha = Some(a);
    }
    cfg
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn execute(args: &Args) -> Result<(), CliError> {
    configure_threads()?;
    let raw = match &args.config {
        Some(path) => config::parse_document(&std::fs::read_to_string(path)?)?,
        None => RunConfig::empty(args.command),
    };
    let raw = config::with_command(raw, Some(args.command))?;
    let cfg = config::resolve(apply_flags(raw, args))?;
    let artifact = run::run(&cfg)?;
    output::write(&cfg, &artifact)?;
    if let Some(p) = cfg.out_path() {
        info!("wrote {p}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dephasing-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
