//! Dispatch of the algorithm and oracle subcommands, and report assembly.

use qbell_core::algorithms::{
    doped_vs_haar, hidden_group, learn_stabiliser, size_test_epsilon_bound, stab_test_bell, stab_test_povm, test_size,
    tolerant_bell, tolerant_povm, Decision, TesterParams, TesterVerdict,
};
use qbell_core::phase_space::{characteristic_table, p_table};
use qbell_core::qstate::{amplitude_cap, fidelity, DenseState};
use qbell_core::rng::{stream, trial_seed};
use qbell_core::sampling::{b_exact, samples_to_csv, DifferenceMode, DifferenceSampler};
use qbell_core::stabiliser::{
    stabiliser_fidelity, stabiliser_state, unsigned_group, GroupFile, MAX_ENUMERATION_POINTS,
};
use qbell_core::zmod::{build_r, PhaseContext};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Backend, Command, InputKind, ModeArg, OracleTable, RunArgs};
use crate::error::{CliError, Result};
use crate::inputs::InputSource;
use crate::io::state_json;
use crate::report::{Aggregate, ExperimentConfig, Report};

/// Algorithm subcommands that run trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Stabiliser learning.
    Learn,
    /// Hidden stabiliser group.
    HiddenGroup,
    /// Stabiliser size test.
    SizeTest,
    /// Doped circuits against Haar-random states.
    DopedTest,
    /// Exact stabiliser testing.
    StabTest(Backend),
    /// Tolerant stabiliser testing.
    Tolerant(Backend),
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Learn => "learn",
            Algorithm::HiddenGroup => "hidden-group",
            Algorithm::SizeTest => "size-test",
            Algorithm::DopedTest => "doped-test",
            Algorithm::StabTest(_) => "stab-test",
            Algorithm::Tolerant(_) => "tolerant",
        }
    }

    fn backend(self) -> Option<Backend> {
        match self {
            Algorithm::StabTest(b) | Algorithm::Tolerant(b) => Some(b),
            _ => None,
        }
    }

    fn default_input(self) -> InputKind {
        match self {
            Algorithm::Learn | Algorithm::StabTest(_) => InputKind::Stabiliser,
            Algorithm::HiddenGroup | Algorithm::DopedTest => InputKind::Doped,
            Algorithm::SizeTest => InputKind::Product,
            Algorithm::Tolerant(_) => InputKind::Near,
        }
    }
}

/// Smallest of 3, 2, 5, 7 coprime to `d`.
pub fn default_r(d: i64) -> u32 {
    [3u32, 2, 5, 7].into_iter().find(|&r| d % r as i64 != 0).expect("one of four primes is coprime")
}

fn check_feasible(args: &RunArgs) -> Result<PhaseContext> {
    if args.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    let ctx = PhaseContext::new(args.d, args.n)?;
    let dim = (args.d as u128).checked_pow(args.n as u32);
    if dim.is_none_or(|x| x > amplitude_cap() as u128) {
        return Err(qbell_core::Error::CapExceeded(format!(
            "d^n = {}^{} exceeds the amplitude cap {}",
            args.d,
            args.n,
            amplitude_cap()
        ))
        .into());
    }
    Ok(ctx)
}

/// Tester parameters from the command line.
pub fn params_from(args: &RunArgs, algorithm: Option<Algorithm>, ctx: &PhaseContext) -> TesterParams {
    let epsilon = args.eps.unwrap_or(match algorithm {
        Some(Algorithm::SizeTest) => size_test_epsilon_bound(ctx),
        _ => 0.1,
    });
    TesterParams {
        epsilon,
        epsilon1: args.eps1,
        epsilon2: args.eps2,
        delta: args.delta,
        r: args.r.unwrap_or(default_r(args.d)),
        size_exponent_t: args.t,
        doping_t: args.t,
        mode: match args.mode {
            ModeArg::Fresh => DifferenceMode::Fresh,
            ModeArg::Shared => DifferenceMode::SharedBaseline,
        },
        k: args.k,
        record_transcript: args.transcript,
        exploratory: args.exploratory,
    }
}

/// Output of one trial before aggregation.
struct TrialOutcome {
    record: Value,
    success: Option<bool>,
    accepted: Option<bool>,
    samples_used: usize,
    warning: Option<String>,
}

fn verdict_record(v: &TesterVerdict, trial: usize, seed: u64, params: &TesterParams) -> Value {
    let mut value = serde_json::to_value(v).expect("serialisable verdict");
    let map = value.as_object_mut().expect("verdict is an object");
    if map.get("transcript").is_some_and(Value::is_null) {
        map.remove("transcript");
    }
    map.insert("trial".into(), json!(trial));
    map.insert("seed".into(), json!(seed));
    map.insert("params".into(), serde_json::to_value(params).expect("serialisable params"));
    value
}

/// Which decision is correct for a state of stabiliser fidelity `f`, when one side of the promise holds.
fn expected_from_fidelity(algorithm: Algorithm, params: &TesterParams, f: f64) -> Option<Decision> {
    match algorithm {
        Algorithm::StabTest(_) => {
            if f >= 1.0 - 1e-9 {
                Some(Decision::Accept)
            } else if 1.0 - f >= params.epsilon {
                Some(Decision::Reject)
            } else {
                None
            }
        }
        Algorithm::Tolerant(_) => {
            if f >= 1.0 - params.epsilon1 - 1e-9 {
                Some(Decision::Accept)
            } else if f <= 1.0 - params.epsilon2 + 1e-9 {
                Some(Decision::Reject)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Correct decision for the input family, when it is known without computing fidelities.
fn expected_for_input(algorithm: Algorithm, input: InputKind, params: &TesterParams, n: usize) -> Option<Decision> {
    let stabiliser_input = matches!(input, InputKind::Zero | InputKind::Stabiliser | InputKind::Group);
    match algorithm {
        Algorithm::StabTest(_) | Algorithm::Tolerant(_) => stabiliser_input.then_some(Decision::Accept),
        Algorithm::SizeTest => (stabiliser_input || input == InputKind::Product).then_some(Decision::Accept),
        Algorithm::DopedTest => match input {
            InputKind::Haar => Some(Decision::Reject),
            InputKind::Doped if 2 * params.doping_t < n => Some(Decision::Accept),
            InputKind::Product if 2 * (n - params.size_exponent_t) < n => Some(Decision::Accept),
            _ if stabiliser_input => Some(Decision::Accept),
            _ => None,
        },
        _ => None,
    }
}

fn decision_success(v: &TesterVerdict, expected: Option<Decision>) -> Option<bool> {
    expected.map(|e| v.decision == e)
}

fn run_trial(
    algorithm: Algorithm,
    source: &InputSource,
    params: &TesterParams,
    expected: Option<Decision>,
    base_seed: u64,
    trial: usize,
) -> Result<TrialOutcome> {
    let seed = trial_seed(base_seed, trial as u64);
    let psi = source.draw(&mut stream(seed, 0))?;
    let rng = &mut stream(seed, 1);
    let tester = |v: TesterVerdict| TrialOutcome {
        record: verdict_record(&v, trial, seed, params),
        success: decision_success(&v, expected),
        accepted: Some(v.decision == Decision::Accept),
        samples_used: v.samples_used,
        warning: v.warning.clone(),
    };
    Ok(match algorithm {
        Algorithm::Learn => {
            let out = learn_stabiliser(&psi, params, rng)?;
            let recovered = match &out.group {
                Some(g) => fidelity(&stabiliser_state(g)?, &psi)? > 1.0 - 1e-9,
                None => false,
            };
            TrialOutcome {
                record: json!({
                    "trial": trial,
                    "seed": seed,
                    "recovered": recovered,
                    "span_size": out.span.size().to_string(),
                    "copies_used": out.copies_used,
                    "group": out.group.as_ref().map(GroupFile::from_group),
                }),
                success: Some(recovered),
                accepted: None,
                samples_used: out.copies_used,
                warning: None,
            }
        }
        Algorithm::HiddenGroup => {
            let out = hidden_group(&psi, params, rng)?;
            let truth = unsigned_group(&psi, 1e-6)?;
            let matches = out.module == truth.module;
            TrialOutcome {
                record: json!({
                    "trial": trial,
                    "seed": seed,
                    "module_basis": out.module.basis(),
                    "module_size": out.module.size().to_string(),
                    "span_size": out.span.size().to_string(),
                    "unsigned_group_size": truth.module.size().to_string(),
                    "matches_unsigned_group": matches,
                    "rounds": out.rounds,
                    "copies_used": out.copies_used,
                }),
                success: Some(matches),
                accepted: None,
                samples_used: out.copies_used,
                warning: None,
            }
        }
        Algorithm::SizeTest => tester(test_size(&psi, params, rng)?),
        Algorithm::DopedTest => tester(doped_vs_haar(&psi, params, rng)?),
        Algorithm::StabTest(Backend::Povm) => tester(stab_test_povm(&psi, params, rng)?),
        Algorithm::StabTest(Backend::Bell) => tester(stab_test_bell(&psi, params, rng)?),
        Algorithm::Tolerant(Backend::Povm) => tester(tolerant_povm(&psi, params, rng)?),
        Algorithm::Tolerant(Backend::Bell) => tester(tolerant_bell(&psi, params, rng)?),
    })
}

fn success_meaning(algorithm: Algorithm) -> &'static str {
    match algorithm {
        Algorithm::Learn => "learned group's state equals the input up to phase",
        Algorithm::HiddenGroup => "returned module equals the unsigned stabiliser group of the input",
        _ => "decision matches the promise side of the input",
    }
}

/// Runs an algorithm subcommand and returns its report.
pub fn run_algorithm(algorithm: Algorithm, args: &RunArgs) -> Result<Report> {
    let ctx = check_feasible(args)?;
    let params = params_from(args, Some(algorithm), &ctx);
    let input = args.input.unwrap_or(algorithm.default_input());
    let source = InputSource::new(input, args)?;
    let mut expected = expected_for_input(algorithm, input, &params, args.n);
    if expected.is_none() {
        if let Some(s) = source.fixed().filter(|_| ctx.num_points() <= MAX_ENUMERATION_POINTS) {
            expected = expected_from_fidelity(algorithm, &params, stabiliser_fidelity(s)?.0);
        }
    }
    let outcomes: Vec<TrialOutcome> = (0..args.trials)
        .into_par_iter()
        .map(|i| run_trial(algorithm, &source, &params, expected, args.seed, i))
        .collect::<Result<_>>()?;
    let tracks_success = matches!(algorithm, Algorithm::Learn | Algorithm::HiddenGroup) || expected.is_some();
    let aggregate = Aggregate::from_trials(
        outcomes.len(),
        tracks_success.then(|| outcomes.iter().filter(|o| o.success == Some(true)).count()),
        tracks_success.then(|| success_meaning(algorithm).to_string()),
        expected,
        outcomes.iter().map(|o| o.accepted).collect::<Option<Vec<bool>>>(),
        outcomes.iter().map(|o| o.samples_used).collect(),
        outcomes.iter().filter_map(|o| o.warning.clone()).collect(),
    );
    let config = ExperimentConfig {
        command: algorithm.name().to_string(),
        backend: algorithm.backend(),
        d: args.d,
        n: args.n,
        seed: args.seed,
        trials: args.trials,
        input,
        state_file: args.state.as_ref().map(|p| p.display().to_string()),
        group_file: args.group.as_ref().map(|p| p.display().to_string()),
        params,
    };
    Ok(Report::new(config, aggregate, outcomes.into_iter().map(|o| o.record).collect()))
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
    s.push('\n');
    s
}

/// Runs `oracle`: a PhaseTable JSON, a CSV sample stream or a state file.
pub fn run_oracle(table: OracleTable, args: &RunArgs) -> Result<String> {
    let ctx = check_feasible(args)?;
    let params = params_from(args, None, &ctx);
    let input = args.input.unwrap_or(InputKind::Magic);
    let source = InputSource::new(input, args)?;
    let seed = trial_seed(args.seed, 0);
    let psi: DenseState = source.draw(&mut stream(seed, 0))?;
    Ok(match table {
        OracleTable::Pdist => to_pretty(&p_table(&psi)?),
        OracleTable::Char => to_pretty(&characteristic_table(&psi)?),
        OracleTable::Bdist => to_pretty(&b_exact(&psi, &build_r(&ctx, 4)?)?),
        OracleTable::Samples => {
            let r = build_r(&ctx, params.k)?;
            let mut sampler = DifferenceSampler::new(&psi, &r, params.mode)?;
            let rng = &mut stream(seed, 1);
            let samples: Vec<_> = (0..args.trials).map(|_| sampler.sample(rng)).collect();
            samples_to_csv(args.n, &samples)
        }
        OracleTable::State => state_json(&psi),
    })
}

/// The algorithm and its options, for algorithm subcommands.
pub fn algorithm_of(command: &Command) -> Option<(Algorithm, &RunArgs)> {
    match command {
        Command::Learn(a) => Some((Algorithm::Learn, a)),
        Command::HiddenGroup(a) => Some((Algorithm::HiddenGroup, a)),
        Command::SizeTest(a) => Some((Algorithm::SizeTest, a)),
        Command::DopedTest(a) => Some((Algorithm::DopedTest, a)),
        Command::StabTest { backend, run } => Some((Algorithm::StabTest(*backend), run)),
        Command::Tolerant { backend, run } => Some((Algorithm::Tolerant(*backend), run)),
        _ => None,
    }
}

/// Runs any subcommand except `selftest` and returns the text it produces.
pub fn render(command: &Command) -> Result<String> {
    if let Some((algorithm, args)) = algorithm_of(command) {
        return Ok(run_algorithm(algorithm, args)?.to_json());
    }
    match command {
        Command::Oracle { table, run } => run_oracle(*table, run),
        Command::Fig { figure: crate::args::Figure::Range(f) } => Ok(to_pretty(&crate::fig::run_range(f)?)),
        _ => Err(CliError::Usage("selftest has no report".into())),
    }
}

/// Output path of a command, when it writes its text to a file.
pub fn output_path(command: &Command) -> Option<&std::path::Path> {
    match command {
        Command::Learn(a) | Command::HiddenGroup(a) | Command::SizeTest(a) | Command::DopedTest(a) => a.out.as_deref(),
        Command::StabTest { run, .. } | Command::Tolerant { run, .. } | Command::Oracle { run, .. } => {
            run.out.as_deref()
        }
        Command::Fig { .. } | Command::Selftest => None,
    }
}
