//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Qudit Bell sampling experiments.
#[derive(Parser, Debug, Clone)]
#[command(name = "qbell", version, about)]
pub struct Cli {
    /// Command to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Learn a stabiliser state from difference samples.
    Learn(RunArgs),
    /// Recover the unsigned stabiliser group as a label module.
    HiddenGroup(RunArgs),
    /// Test whether the stabiliser size is at least d^t.
    SizeTest(RunArgs),
    /// Distinguish doped Clifford outputs from Haar-random states.
    DopedTest(RunArgs),
    /// Exact stabiliser testing.
    StabTest {
        /// Measurement backend.
        #[arg(long, value_enum, default_value_t = Backend::Bell)]
        backend: Backend,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Tolerant stabiliser testing.
    Tolerant {
        /// Measurement backend.
        #[arg(long, value_enum, default_value_t = Backend::Bell)]
        backend: Backend,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Dump exact tables, sample streams or the input state.
    Oracle {
        /// What to dump.
        #[arg(value_enum)]
        table: OracleTable,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Figures.
    Fig {
        /// Figure to draw.
        #[command(subcommand)]
        figure: Figure,
    },
    /// Run the acceptance suite.
    Selftest,
}

/// Figures.
#[derive(Subcommand, Debug, Clone)]
pub enum Figure {
    /// Parameter regions and copy counts of the tolerant testers.
    Range(FigArgs),
}

/// Options of `fig range`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct FigArgs {
    /// Local dimension; with `--r`, draws one panel instead of the three defaults.
    #[arg(long)]
    pub d: Option<i64>,
    /// POVM order for the single panel.
    #[arg(long)]
    pub r: Option<u32>,
    /// Grid cells per axis.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// `ε₂` of the copy-count curves.
    #[arg(long, default_value_t = 0.9)]
    pub eps2: f64,
    /// `δ` of the copy-count curves.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Options shared by the algorithm and oracle subcommands.
#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Local dimension.
    #[arg(long, default_value_t = 2)]
    pub d: i64,
    /// Number of qudits.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of independent trials.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Promise gap `ε`; the size test defaults to the largest guaranteed value.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Tolerant completeness parameter `ε₁`.
    #[arg(long, default_value_t = 0.0)]
    pub eps1: f64,
    /// Tolerant soundness parameter `ε₂`.
    #[arg(long, default_value_t = 0.5)]
    pub eps2: f64,
    /// Failure probability `δ`.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// POVM order; defaults to the smallest of 3, 2, 5 coprime to `d`.
    #[arg(long)]
    pub r: Option<u32>,
    /// Size exponent (size test) or number of doping gates (doped inputs).
    #[arg(long, default_value_t = 0)]
    pub t: usize,
    /// Difference sampling mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Shared)]
    pub mode: ModeArg,
    /// Copies per `B_R` block.
    #[arg(long, default_value_t = 4, value_parser = parse_k)]
    pub k: usize,
    /// Output file; the report goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep every sample and outcome in the report.
    #[arg(long)]
    pub transcript: bool,
    /// Input states; each command has its own default.
    #[arg(long, value_enum)]
    pub input: Option<InputKind>,
    /// State file for `--input file`.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Stabiliser group file for `--input group`.
    #[arg(long)]
    pub group: Option<PathBuf>,
    /// Run the size test outside its guaranteed `ε` range.
    #[arg(long)]
    pub exploratory: bool,
}

/// Measurement backend of the stabiliser testers.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// POVM on `2r` copies.
    Povm,
    /// Skewed Bell sampling.
    Bell,
}

/// Difference sampling mode.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    /// Two fresh rounds per sample.
    Fresh,
    /// One shared baseline round.
    Shared,
}

/// Tables and streams of `oracle`.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleTable {
    /// Characteristic distribution `p_ψ`.
    Pdist,
    /// Difference-sample distribution `b_ψ`.
    Bdist,
    /// Characteristic function.
    Char,
    /// CSV stream of `--trials` difference samples.
    Samples,
    /// The input state as a state file.
    State,
}

/// Input state families.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// `|0…0⟩`.
    Zero,
    /// A random stabiliser state per trial.
    Stabiliser,
    /// A Haar-random state per trial.
    Haar,
    /// The single-qudit magic state on every qudit.
    Magic,
    /// Random stabiliser qudits (at least `t`) and magic qudits, per trial.
    Product,
    /// Output of a random Clifford circuit with `t` non-Clifford gates, per trial.
    Doped,
    /// Stabiliser fidelity `1 − ε₁` on the path from `|0…0⟩` to the magic product.
    Near,
    /// Stabiliser fidelity `1 − ε₂` on the same path.
    Far,
    /// The state in `--state`.
    File,
    /// The stabiliser state of the group in `--group`.
    Group,
}

fn parse_k(s: &str) -> Result<usize, String> {
    match s {
        "1" | "2" | "4" => Ok(s.parse().expect("digit")),
        _ => Err(format!("k must be 1, 2 or 4, got {s}")),
    }
}
