//! `errw`: batch driver for the ladder ERRW experiments.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::*;
use config::{load_config, open_output, pick, write_csv, CliError, Format, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "errw", version, about = "Edge-reinforced random walk on the ladder: simulation, environment sampling, transfer operators, checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// JSON run configuration (see schema/run_config.schema.json); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Data file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "ERRW_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the reinforced walk (or a fixed-environment walk) and report local times.
    Simulate(SimulateArgs),
    /// Local-time ratio profile over levels, many replicas.
    Profile(ProfileArgs),
    /// Sample the spin-coordinate Gibbs measure, or fit its tails.
    SampleEnv(SampleEnvArgs),
    /// Identities and certificates.
    Verify(VerifyArgs),
    /// Leading eigen-triples of the transfer operators.
    Spectrum(SpectrumArgs),
    /// Chain expectations against the sampler, or the Σ-moment sweep.
    ChainStats(ChainStatsArgs),
    /// Effective resistance, escape probability and the bound chain.
    Resistance(ResistanceArgs),
    /// Return counts to 0̄ before reaching level n.
    Returns(ReturnsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Profile(_) => "profile",
            Command::SampleEnv(_) => "sample-env",
            Command::Verify(_) => "verify",
            Command::Spectrum(_) => "spectrum",
            Command::ChainStats(_) => "chain-stats",
            Command::Resistance(_) => "resistance",
            Command::Returns(_) => "returns",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Simulate(_) | Command::Profile(_) | Command::SampleEnv(_) | Command::Returns(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = match &cli.global.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let name = cli.command.name();
    if let Some(s) = &cfg.subcommand {
        if s != name {
            return Err(CliError::Config(format!("config is for {s}, not {name}")));
        }
    }
    let seed = pick(&cli.global.seed, &cfg.seed, 7);
    let format = pick(&cli.global.format, &cfg.format, cli.command.default_format());
    let out_path = cli.global.out.clone().or_else(|| cfg.output.clone());
    if let Some(w) = cli.global.workers.or(cfg.workers) {
        if w == 0 {
            return Err(CliError::Config("workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| CliError::Run(e.to_string()))?;
    }
    let mut file = open_output(&out_path)?;
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a, &cfg, seed),
        Command::Profile(a) => profile(a, &cfg, seed),
        Command::SampleEnv(a) => sample_env(a, &cfg, seed),
        Command::Verify(a) => verify(a, &cfg, seed),
        Command::Spectrum(a) => spectrum(a, &cfg),
        Command::ChainStats(a) => chain_stats(a, &cfg, seed),
        Command::Resistance(a) => resistance(a, &cfg, seed),
        Command::Returns(a) => returns(a, &cfg, seed),
    }?;
    let summary = outcome.summary(name);
    let summary_text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let io = |e: std::io::Error| CliError::Run(e.to_string());
    match (format, outcome.table.as_ref()) {
        (Format::Csv, Some(t)) => {
            match file.as_mut() {
                Some(f) => {
                    write_csv(f, name, &outcome.effective, t).map_err(io)?;
                    let _ = writeln!(std::io::stdout().lock(), "{summary_text}");
                }
                None => {
                    // a closed pipe downstream is not a failure
                    let _ = write_csv(&mut std::io::stdout().lock(), name, &outcome.effective, t);
                    eprintln!("{summary_text}");
                }
            }
        }
        _ => match file.as_mut() {
            Some(f) => writeln!(f, "{summary_text}").map_err(io)?,
            None => {
                let _ = writeln!(std::io::stdout().lock(), "{summary_text}");
            }
        },
    }
    if !outcome.passed() {
        let failures: Vec<_> = outcome.checks.iter().filter(|c| !c.passed).collect();
        eprintln!("{}", serde_json::json!({"status": "fail", "command": name, "failures": failures}));
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Run(_) => ExitCode::from(1),
            }
        }
    }
}
