//! `buckle`: solve buckling and membrane spectra, audit them against
//! universal inequalities, extract eigenvalue bounds and probe the
//! identities behind the Euclidean inequality.
//!
//! Exit codes: 0 success, 1 an audited inequality is violated, 2 bad input
//! or configuration, 3 numerical failure.

mod commands;
mod config;
mod error;
mod output;

use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

use config::{load_file, merge, AuditArgs, BoundArgs, OracleArgs, ProbeArgs, SolveArgs};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "buckle",
    version,
    about = "Clamped-plate buckling spectra and universal eigenvalue inequalities"
)]
struct Cli {
    /// JSON file with the same keys as the flags; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest eigenvalues of a domain
    Solve(SolveArgs),
    /// Check a spectrum against the inequalities
    Audit(AuditArgs),
    /// Upper bounds for the next eigenvalue from spectrum prefixes
    Bound(BoundArgs),
    /// Identity residuals on computed planar eigenfunctions
    Probe(ProbeArgs),
    /// Reference spectra and Bessel zeros
    Oracle(OracleArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Audit(_) => "audit",
            Command::Bound(_) => "bound",
            Command::Probe(_) => "probe",
            Command::Oracle(_) => "oracle",
        }
    }
}

fn echo<T: Serialize>(subcommand: &str, config: &T) {
    let mut value = serde_json::to_value(config).expect("configs serialise");
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("subcommand".into(), subcommand.into());
    }
    eprintln!("config: {}", serde_json::to_string(&value).expect("serialises"));
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let name = cli.command.name();
    let file = cli.config.as_deref().map(|p| load_file(p, name)).transpose()?;
    match cli.command {
        Command::Solve(args) => {
            let c = merge(args, file)?.resolve()?;
            echo(name, &c);
            commands::solve(&c)
        }
        Command::Audit(args) => {
            let c = merge(args, file)?.resolve()?;
            echo(name, &c);
            commands::audit(&c)
        }
        Command::Bound(args) => {
            let c = merge(args, file)?.resolve()?;
            echo(name, &c);
            commands::bound(&c)
        }
        Command::Probe(args) => {
            let c = merge(args, file)?.resolve()?;
            echo(name, &c);
            commands::probe(&c)
        }
        Command::Oracle(args) => {
            let c = merge(args, file)?.resolve()?;
            echo(name, &c);
            commands::oracle(&c)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
