//! `toeplitz`: generators, analyses and tests for Toeplitz subshifts.
//!
//! Exit status: 0 witnessed or success, 1 refuted, 2 unknown at the
//! checked depth, 3 invalid input or parameters, 4 I/O failure.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] toeplitz_core::Error),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 4,
            _ => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "toeplitz", version, about = "Finite-depth analysis of Toeplitz subshifts")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    /// Seed for randomized choices (random anchors, generated towers).
    #[arg(long, global = true, env = "TOEPLITZ_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output file (generated system for `gen`/`export`, report otherwise).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct DepthArg {
    /// Number of levels to inspect.
    #[arg(long, env = "TOEPLITZ_DEPTH", default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
}

impl DepthArg {
    pub fn get(self) -> usize {
        self.depth as usize
    }
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Generate a construction or a built-in system.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Run one analysis on a system.
    Analyze(AnalyzeArgs),
    /// Run a tri-state test.
    #[command(subcommand)]
    Test(TestCmd),
    /// Re-serialize a file canonically, optionally converting it.
    Export(ExportArgs),
}

#[derive(Subcommand, Debug)]
pub enum GenCmd {
    /// The strong rank-2 counterexample.
    Counterexample {
        #[command(flatten)]
        depth: DepthArg,
        /// Comma-separated m_0, m_1, ...; later levels use the default.
        #[arg(long, value_delimiter = ',')]
        m_schedule: Vec<u64>,
    },
    /// The system with the letter-flip automorphism.
    FlipAut {
        #[command(flatten)]
        depth: DepthArg,
    },
    /// The system with a cyclic automorphism of order n.
    CyclicAut {
        #[arg(long)]
        n: usize,
        /// Defaults to the least admissible value.
        #[arg(long)]
        m: Option<u64>,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// A stationary example, truncated to `depth` levels.
    System {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(input::BUILTINS))]
        name: String,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// A random single-hole skeleton tower.
    Tower {
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        letters: u32,
        #[arg(long, default_value_t = 3)]
        min_ratio: u64,
        #[arg(long, default_value_t = 4)]
        max_ratio: u64,
    },
    /// The ordered Bratteli diagram of a system.
    Bratteli {
        system: String,
        #[command(flatten)]
        depth: DepthArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeKind {
    Cuts,
    Skeleton,
    Language,
    Scale,
    Parts,
    Chi,
    Recognizability,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub what: AnalyzeKind,
    /// A file path or `builtin:<name>`.
    pub system: String,
    #[command(flatten)]
    pub depth: DepthArg,
    /// Period (defaults to each scale divisor where it applies).
    #[arg(long)]
    pub p: Option<u64>,
    /// Word length for `language`.
    #[arg(long, default_value_t = 8)]
    pub length: usize,
    /// Level for `recognizability`.
    #[arg(long, default_value_t = 1)]
    pub level: usize,
    /// Half-width of the point window.
    #[arg(long, default_value_t = 512)]
    pub half_width: u64,
    /// Anchor the point at a seeded random position instead of the
    /// canonical one.
    #[arg(long)]
    pub random_anchor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClaimKind {
    Counterexample,
    FlipAut,
    CyclicAut,
}

#[derive(Subcommand, Debug)]
pub enum TestCmd {
    /// Conjugacy by block bijections, with the part-class criterion.
    Conjugacy {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[command(flatten)]
        depth: DepthArg,
        #[arg(long)]
        max_p: Option<u64>,
    },
    /// Conjugacy to the reversed system.
    Inverse {
        #[arg(long)]
        system: String,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Strong rank-2 certificate search.
    Sts2 {
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 1)]
        p: u64,
        #[arg(long, default_value_t = 0)]
        m: u64,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Re-check the claims of a generated construction.
    Claims {
        system: String,
        /// Needed only when the file lacks a construction header.
        #[arg(long, value_enum)]
        kind: Option<ClaimKind>,
        #[arg(long)]
        depth: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Directive,
    Bratteli,
    Tower,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    pub input: String,
    /// Target format; defaults to the input's own.
    #[arg(long, value_enum)]
    pub to: Option<ExportKind>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
