mod args;
mod commands;
mod output;

use std::fs;
use std::process::ExitCode;

use bottleform::model::{build_builtin_model, parse_potential};
use bottleform::PotentialSpec;
use clap::Parser;

use args::{Cli, Command};
use output::{read_seeds, PotentialRecord, RunConfig, SeedRecord, SCHEMA_VERSION};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable inputs, invalid potential.
    Config(String),
    /// Invalid model detected by the library before any computation.
    Model(bottleform::Error),
    Compute(bottleform::Error),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Model(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 3,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Model(e) | CliError::Compute(e) => e.name(),
            CliError::Io(_) => "IoError",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Model(e) | CliError::Compute(e) => e.to_string(),
        }
    }
}

impl<E: Into<bottleform::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Compute(e.into())
    }
}

fn config_from_cli(cli: Cli) -> Result<RunConfig, CliError> {
    if let Some(path) = &cli.from_config {
        if cli.command.is_some() {
            return Err(CliError::Config("--from-config replaces the subcommand; give one or the other".into()));
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "run config schema {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.out = cli.global.out;
        cfg.threads = cli.global.threads;
        return Ok(cfg);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given (see --help)".into()));
    };
    let potential = match &cli.global.potential {
        None => PotentialRecord {
            source: "builtin".into(),
            text: build_builtin_model().to_text(),
        },
        Some(p) => PotentialRecord {
            source: p.display().to_string(),
            text: fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        },
    };
    let seeds = match &cli.global.seed_file {
        None => None,
        Some(p) => Some(SeedRecord {
            source: p.display().to_string(),
            seeds: read_seeds(p)?,
        }),
    };
    Ok(RunConfig {
        schema_version: SCHEMA_VERSION,
        command,
        potential,
        seeds,
        out: cli.global.out,
        threads: cli.global.threads.max(1),
    })
}

fn load_potential(cfg: &RunConfig) -> Result<PotentialSpec, CliError> {
    if cfg.potential.source == "builtin" {
        return Ok(build_builtin_model());
    }
    let v = parse_potential(&cfg.potential.text).map_err(|e| CliError::Model(e.into()))?;
    v.validate().map_err(|e| CliError::Model(e.into()))?;
    Ok(v)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config_from_cli(cli)?;
    let potential = load_potential(&cfg)?;
    commands::validate(&cfg, &potential)?;
    let writer = output::Writer::new(&cfg)?;
    match &cfg.command {
        Command::Normalize(a) => commands::normal_form(a, &potential, &writer),
        Command::Section(a) => commands::section(&cfg, a, &potential, &writer),
        Command::Asymptotics(a) => commands::asymptotics(a, &potential, &writer),
        Command::Bifurcation(a) => commands::bifurcation(a, &potential, &writer),
        Command::ChaosThreshold(a) => commands::chaos_threshold(a, &potential, &writer),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.name(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
