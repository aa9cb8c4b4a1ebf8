//! `actorsnote`: run the service, simulate a study, analyze logs, and run
//! individual statistical procedures.

mod stats;
mod study;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use actorsnote_core::llm::ProviderKind;
use actorsnote_server::{build_state, ConfigError, ServerConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Provider(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Provider(_) => 4,
        }
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "actorsnote", version, about = "Character-journaling study service and analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP API. Configured by BIND_ADDR, STORE_PATH and GATEWAY_* variables.
    Serve {
        /// Overrides BIND_ADDR.
        #[arg(long)]
        bind: Option<SocketAddr>,
        /// Overrides STORE_PATH.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Run a full synthetic study against the mock provider.
    Simulate(study::SimulateArgs),
    /// Compute per-entry metrics and condition comparisons from exported logs.
    Analyze(study::AnalyzeArgs),
    /// Run one statistical procedure on command-line or CSV input.
    Stats {
        #[command(subcommand)]
        command: stats::StatsCommand,
    },
}

fn serve(bind: Option<SocketAddr>, store: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = ServerConfig::from_env().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(b) = bind {
        cfg.bind_addr = b;
    }
    if let Some(s) = store {
        cfg.store_path = s;
    }
    let state = build_state(&cfg).map_err(|e| match e {
        ConfigError::Store(_) => CliError::Data(format!("{e} ({})", cfg.store_path.display())),
        other => CliError::Usage(other.to_string()),
    })?;
    println!(
        "actorsnote {} listening on http://{} (store: {})",
        env!("CARGO_PKG_VERSION"),
        cfg.bind_addr,
        cfg.store_path.display()
    );
    match cfg.provider_kind() {
        ProviderKind::Mock => println!("MOCK PROVIDER: summaries, profiles and questions are synthetic (GATEWAY_PROVIDER=mock)"),
        ProviderKind::Hosted => println!(
            "provider: hosted at {} (questions: {}, analysis: {})",
            cfg.gateway.base_url, cfg.gateway.questions.model_name, cfg.gateway.analysis.model_name
        ),
    }
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::data)?;
    runtime
        .block_on(actorsnote_server::serve(state, cfg.bind_addr))
        .map_err(|e| CliError::Data(format!("serving on {}: {e}", cfg.bind_addr)))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { bind, store } => serve(bind, store),
        Command::Simulate(args) => study::simulate(&args),
        Command::Analyze(args) => study::analyze(&args),
        Command::Stats { command } => stats::run(&command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
