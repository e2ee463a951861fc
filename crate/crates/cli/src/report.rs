//! Experiment configuration echo and JSON reports.

use qbell_core::algorithms::{Decision, TesterParams};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::{Backend, InputKind};

/// Everything that determines a run.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    /// Subcommand name.
    pub command: String,
    /// Tester backend, for the stabiliser testers.
    pub backend: Option<Backend>,
    /// Local dimension.
    pub d: i64,
    /// Number of qudits.
    pub n: usize,
    /// Base seed.
    pub seed: u64,
    /// Number of trials.
    pub trials: usize,
    /// Input state family.
    pub input: InputKind,
    /// State file, for file inputs.
    pub state_file: Option<String>,
    /// Group file, for group inputs.
    pub group_file: Option<String>,
    /// Algorithm parameters.
    pub params: TesterParams,
}

impl ExperimentConfig {
    /// SHA-256 of the compact JSON encoding, in hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("serialisable config");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// How trial randomness is derived.
#[derive(Clone, Debug, Serialize)]
pub struct RngProvenance {
    /// Generator.
    pub generator: &'static str,
    /// Per-trial seed derivation.
    pub trial_seed: &'static str,
    /// Stream assignment within a trial.
    pub streams: &'static str,
}

const PROVENANCE: RngProvenance = RngProvenance {
    generator: "ChaCha20 seeded from a u64",
    trial_seed: "splitmix64 finaliser of seed ^ (trial * 0x9E3779B97F4A7C15)",
    streams: "stream 0 draws the input state, stream 1 drives the algorithm",
};

/// Aggregate statistics over trials.
#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    /// Number of trials.
    pub trials: usize,
    /// Meaning of a successful trial, when success is tracked.
    pub success_means: Option<String>,
    /// Correct decision for this input, when known.
    pub expected_decision: Option<Decision>,
    /// Successful trials.
    pub successes: Option<usize>,
    /// Fraction of successful trials.
    pub success_rate: Option<f64>,
    /// 95% Wilson score interval of the success rate.
    pub success_ci95: Option<[f64; 2]>,
    /// Fraction of accepting trials, for testers.
    pub accept_rate: Option<f64>,
    /// Mean copies consumed per trial.
    pub mean_copies: f64,
    /// Distinct warnings raised by trials.
    pub warnings: Vec<String>,
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = k as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    [(centre - half).max(0.0), (centre + half).min(1.0)]
}

impl Aggregate {
    /// Summarises per-trial results.
    pub fn from_trials(
        trials: usize,
        successes: Option<usize>,
        success_means: Option<String>,
        expected_decision: Option<Decision>,
        accepted: Option<Vec<bool>>,
        copies: Vec<usize>,
        mut warnings: Vec<String>,
    ) -> Self {
        warnings.sort();
        warnings.dedup();
        let rate = |k: usize| if trials == 0 { 0.0 } else { k as f64 / trials as f64 };
        Self {
            trials,
            success_means,
            expected_decision,
            successes,
            success_rate: successes.map(rate),
            success_ci95: successes.map(|k| wilson_interval(k, trials)),
            accept_rate: accepted.map(|a| rate(a.iter().filter(|&&x| x).count())),
            mean_copies: if trials == 0 { 0.0 } else { copies.iter().sum::<usize>() as f64 / trials as f64 },
            warnings,
        }
    }
}

/// Report of an algorithm run; byte-identical for identical configurations.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// Program name.
    pub tool: &'static str,
    /// Program version.
    pub version: &'static str,
    /// Configuration echo.
    pub config: ExperimentConfig,
    /// Hash of the configuration echo.
    pub config_hash: String,
    /// Random number provenance.
    pub rng: RngProvenance,
    /// Aggregate statistics.
    pub aggregate: Aggregate,
    /// Per-trial records in trial order.
    pub trials: Vec<Value>,
}

impl Report {
    /// Assembles a report.
    pub fn new(config: ExperimentConfig, aggregate: Aggregate, trials: Vec<Value>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config.hash(),
            config,
            rng: PROVENANCE,
            aggregate,
            trials,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serialisable report");
        s.push('\n');
        s
    }
}
