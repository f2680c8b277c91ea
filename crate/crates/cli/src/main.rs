mod commands;
mod render;
mod store;
#[cfg(test)]
mod tests;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spanlab_core::bounds::Lemma;
use spanlab_core::fuzz;
use spanlab_core::group::Group;

const GROUP_HELP: &str = "Group spec: Z<n> or a product Z<n1>xZ<n2>x..., case-insensitive (Z15, z2xz4, Z3xZ3)";

/// Subset-sum spanning, critical numbers and extremal non-spanning sets
/// in finite abelian groups.
#[derive(Debug, Parser, Serialize)]
#[command(name = "spanlab", version, after_help = GROUP_HELP)]
pub struct Cli {
    /// Campaign store directory.
    #[arg(long, global = true, env = "SPANLAB_STORE", default_value = "spanlab-store")]
    pub store: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SPANLAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BudgetArgs {
    /// Lift the exact-search order cap and the enumeration candidate cap.
    #[arg(long)]
    pub extended: bool,

    /// Stop after visiting this many search nodes.
    #[arg(long)]
    pub max_nodes: Option<u64>,

    /// Wall-clock budget in hours.
    #[arg(long)]
    pub budget_hours: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Markdown,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Critical number of a group: closed form, exact search, or both.
    #[command(after_help = GROUP_HELP)]
    Cr {
        #[arg(long)]
        group: Group,
        #[arg(long, conflicts_with_all = ["formula", "both"])]
        search: bool,
        #[arg(long, conflicts_with = "both")]
        formula: bool,
        /// Default when neither --search nor --formula is given.
        #[arg(long)]
        both: bool,
        /// Search every target instead of one per unit orbit.
        #[arg(long)]
        no_orbit_reduction: bool,
        /// Disable the target-feasibility prune.
        #[arg(long)]
        no_prune: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact search against the closed form on every abelian group up to an order.
    VerifyTheoremA {
        #[arg(long, default_value_t = 24)]
        max_order: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stream every extremal non-spanning set as classified JSONL records.
    #[command(after_help = GROUP_HELP)]
    EnumerateExtremal {
        #[arg(long)]
        group: Group,
        /// JSONL output; on resume it must hold the records already emitted.
        #[arg(long)]
        out: PathBuf,
        /// Continue from a checkpoint written by an interrupted run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Where to write the checkpoint (default: <out>.checkpoint.json).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// One record per orbit under multiplication by units (Z_n only).
        #[arg(long)]
        orbit_dedup: bool,
        /// Run the search on one thread, without subtree batches.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Classify one extremal set.
    #[command(after_help = GROUP_HELP)]
    Classify {
        #[arg(long)]
        group: Group,
        /// Element indices, comma separated (e.g. 1,2,3,12,13,14).
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificate for a conjecture on Z_pq by full enumeration.
    Conjecture {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the structure theorem on every extremal set of a group.
    #[command(after_help = GROUP_HELP)]
    VerifyMain {
        #[arg(long)]
        group: Group,
        /// Enumerate every set instead of one per unit orbit.
        #[arg(long)]
        no_orbit_dedup: bool,
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded fuzz campaign for one of the sumset lemmas (2.1 .. 2.9).
    FuzzBounds {
        #[arg(long)]
        lemma: Lemma,
        #[arg(long, default_value_t = fuzz::DEFAULT_TRIALS)]
        trials: u64,
        #[arg(long, env = "SPANLAB_SEED", default_value_t = fuzz::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = fuzz::DEFAULT_MAX_P)]
        max_p: usize,
        /// Skip the exhaustive sub-suites.
        #[arg(long)]
        no_exhaustive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a stored campaign, or list them all.
    Report {
        #[arg(long, required_unless_present = "list")]
        campaign: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let code = commands::run_argv(&argv, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
