//! Argument parsing and dispatch for the `tfreg` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Outcome};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::selftest;
use crate::table::Provenance;

#[derive(Debug, Parser)]
#[command(name = "tfreg", version, about = "Smeared free and first-order interacting scalar fields")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for CSV and JSON results.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Dotted-key override, e.g. `--set quadrature.cutoff=8`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pairwise inner products (f_i, f_j), lattice and closed paths.
    Inner,
    /// Field commutators [phi_f, phi_g] with causal relations.
    Commutator,
    /// Vacuum expectation value of a field product.
    Vev,
    /// Contracted envelopes at a list of centres.
    Envelope,
    /// Fock space over a set of functions.
    Gns,
    /// First-order nonlinear field xi_f.
    Xi,
    /// Observable along a packet family as mu varies.
    Sweep,
    /// Acceptance suite; prints PASS/FAIL per criterion.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Inner => "inner",
            Command::Commutator => "commutator",
            Command::Vev => "vev",
            Command::Envelope => "envelope",
            Command::Gns => "gns",
            Command::Xi => "xi",
            Command::Sweep => "sweep",
            Command::Selftest => "selftest",
        }
    }
}

fn selftest(cfg: &RunConfig) -> CliResult<Outcome> {
    let report = selftest::run(cfg.seed)?;
    let messages = report.verdicts.iter().map(|v| v.line()).collect();
    let table = report.table(Provenance::new("selftest", cfg.sha256(), cfg.seed));
    Ok(Outcome { table, messages, failed: !report.passed() })
}

/// Runs one command, writes its table and prints the summary line.
/// Returns whether every check the command performs passed.
pub fn run(cli: &Cli) -> CliResult<bool> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides, cli.seed)?;
    let mut outcome = match cli.command {
        Command::Inner => commands::inner(&cfg)?,
        Command::Commutator => commands::commutator(&cfg)?,
        Command::Vev => commands::vev(&cfg)?,
        Command::Envelope => commands::envelope(&cfg)?,
        Command::Gns => commands::gns(&cfg, &cli.out)?,
        Command::Xi => commands::xi(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Selftest => selftest(&cfg)?,
    };
    let name = cli.command.name();
    let path = outcome.table.write(&cli.out, name)?;
    for m in &outcome.messages {
        println!("{m}");
    }
    println!("OK {name} rows={} out={}", outcome.table.len(), path.display());
    Ok(!outcome.failed)
}
