//! `mekler`: Mekler groups of nice graphs, tree combinatorics and witness
//! families from the command line.
//!
//! Exit codes: 0 on success, 1 when the checked property fails or a search
//! finds nothing, 2 on usage or input errors.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use manifest::{Inputs, RunManifest, Timing};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("cannot parse {0}: {1}")]
    Parse(String, String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Parser)]
#[command(name = "mekler", version, about = "Mekler groups, tree-indexed witnesses and finite model checking")]
struct Cli {
    /// Print the report as JSON with its run manifest.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Record wall-clock time in the manifest (makes JSON output vary).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct GroupArgs {
    /// Graph JSON file ({"n":5,"edges":[[0,1],...]}) or `cycle:N` / `path:N`.
    #[arg(long)]
    graph: String,
    /// Odd prime exponent.
    #[arg(short, long, default_value_t = 3)]
    p: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a graph is nice.
    CheckNice {
        /// Graph JSON file or `cycle:N` / `path:N`.
        graph: String,
    },
    /// List nice graphs up to isomorphism.
    FindNice {
        #[arg(long, default_value_t = 6)]
        max_n: usize,
    },
    /// Order, center and coordinates of a Mekler group.
    GroupInfo {
        #[command(flatten)]
        group: GroupArgs,
        /// Accept graphs that are not nice.
        #[arg(long)]
        allow_non_nice: bool,
    },
    /// Type label of one element.
    Classify {
        #[command(flatten)]
        group: GroupArgs,
        /// Generator exponents, comma separated.
        #[arg(long)]
        u: String,
        /// Commutator exponents, comma separated (default all zero).
        #[arg(long)]
        w: Option<String>,
    },
    /// Classify every non-central generator-exponent vector.
    SweepClassify {
        #[command(flatten)]
        group: GroupArgs,
    },
    /// The graph interpreted on type-1ν classes.
    Gamma {
        #[command(flatten)]
        group: GroupArgs,
        /// Fail unless the interpreted graph is isomorphic to the input.
        #[arg(long)]
        check_iso: bool,
    },
    /// Build and verify a transversal and its central complement.
    Transversal {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, value_enum, default_value_t = IotaArg::NuAndP)]
        iota_mode: IotaArg,
    },
    /// Tree-language operations.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Witness-family checks.
    #[command(subcommand)]
    Witness(WitnessCommand),
    /// Run the reproduction suite.
    Repro {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum IotaArg {
    NuAndP,
    Literal,
}

#[derive(Subcommand)]
pub enum TreeCommand {
    /// Compare quantifier-free types of two comma-separated node tuples.
    Qftp { first: String, second: String },
    /// Find a color and node below which the color is cofinal.
    Cofinal {
        #[arg(long)]
        coloring: PathBuf,
    },
    /// Search for a monochromatic embedding of the given shape.
    Mono {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        #[arg(long)]
        depth: usize,
        /// Branching of the source tree (tp1 only).
        #[arg(long, default_value_t = 2)]
        width: usize,
        #[arg(long)]
        coloring: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Sop1,
    Sop2,
    Tp1,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum KindArg {
    Sop1,
    Sop2,
    Tp1,
    WeakKtp1,
    StrongIndiscernible,
}

#[derive(Subcommand)]
pub enum WitnessCommand {
    /// Check a tree-indexed family.
    Check {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        family: PathBuf,
        /// Sibling-set size for weak-ktp1.
        #[arg(short, default_value_t = 2)]
        k: usize,
        /// Tuple-size bound for strong-indiscernible.
        #[arg(short, default_value_t = 2)]
        s: usize,
    },
    /// Check a two-column array.
    Array {
        #[arg(long)]
        family: PathBuf,
        #[arg(short, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        indiscernible: bool,
    },
    /// Check that one family is based on another for listed formulas.
    BasedOn {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        base: PathBuf,
        /// Formula, repeatable; pairs with --vars in order.
        #[arg(long, required = true)]
        formula: Vec<String>,
        /// Comma-separated variable list for the matching --formula.
        #[arg(long, required = true)]
        vars: Vec<String>,
    },
}

/// What a command produced.
pub struct Outcome {
    pub ok: bool,
    pub text: String,
    pub json: serde_json::Value,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let mut inputs = Inputs::default();
    let outcome = match commands::run(&cli.command, cli.seed, &mut inputs) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.json {
        let manifest = RunManifest {
            command: argv,
            inputs: inputs.into_files(),
            seed: cli.seed,
            version: env!("CARGO_PKG_VERSION"),
            timing: cli.timing.then(|| Timing { elapsed_ms: start.elapsed().as_millis() }),
        };
        let doc = serde_json::json!({ "manifest": manifest, "pass": outcome.ok, "result": outcome.json });
        println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
    } else {
        print!("{}", outcome.text);
        if cli.timing {
            println!("elapsed: {} ms", start.elapsed().as_millis());
        }
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
