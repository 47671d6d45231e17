use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bcst",
    version,
    about = "Build, count, simulate and recognize controlled teleportation channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the amplitude vector of a channel-spec document.
    Build {
        spec: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare the closed-form channel count with rule-based counts.
    Census {
        /// Qubits per pair element.
        p: u32,
        /// Number of superposed terms.
        n: u64,
        #[command(flatten)]
        mode: CensusModeArgs,
        /// Emit one JSON object instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Run seeded bidirectional teleportation rounds.
    Simulate {
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// `0`, `1`, `+`, `-`, `+i`, `-i` or `re,im;re,im`; Haar-random when omitted.
        #[arg(long)]
        alice_state: Option<String>,
        #[arg(long)]
        bob_state: Option<String>,
        /// Fail (exit 5) unless the controller gates both directions.
        #[arg(long)]
        require_both_controlled: bool,
        /// Write the JSON-lines transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Verify or export the published channels.
    Catalog {
        #[arg(long)]
        verify: bool,
        #[arg(long, value_name = "ID")]
        export: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Recover a channel spec from an amplitude file.
    Recognize {
        amplitudes: PathBuf,
        /// Comma-separated qubit roles, e.g. `A1,B1,C1,A2,B2`.
        #[arg(long)]
        layout: Option<String>,
        /// Comma-separated controller families (`mixed` expands to every pattern).
        #[arg(long)]
        candidates: Option<String>,
        #[arg(long, default_value = "bell")]
        pair_basis: String,
        /// Register shape assumed when no layout is given.
        #[arg(long, value_enum, default_value_t = KindArg::Bcst)]
        kind: KindArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Bcst,
    Qd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMode {
    Oracle,
    Formula,
    Both,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct CensusModeArgs {
    /// Rule-based counts only.
    #[arg(long)]
    oracle: bool,
    /// Closed form only.
    #[arg(long)]
    formula: bool,
    /// Closed form and rule-based counts (default).
    #[arg(long)]
    both: bool,
}

impl CensusModeArgs {
    pub fn mode(&self) -> CensusMode {
        match (self.oracle, self.formula) {
            (true, _) => CensusMode::Oracle,
            (_, true) => CensusMode::Formula,
            _ => CensusMode::Both,
        }
    }
}
