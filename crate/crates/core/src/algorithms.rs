//! Stabiliser learning, hidden stabiliser groups, size and pseudorandomness tests,
//! exact and tolerant stabiliser testers, and the exact estimators behind them.

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{p_table, power, WeylLabel};
use crate::qstate::{expectation_weyl, sample_index, DenseState};
use crate::sampling::{b_exact, span_of_samples, DifferenceMode, DifferenceSampler, SkewedSample};
use crate::stabiliser::{stabiliser_fidelity, StabiliserGroup};
use crate::zmod::{build_r, is_isotropic, symplectic_complement, PhaseContext, Point, RMatrix, Submodule};

/// Binary outcome of a tester: `Accept` is the algorithm returning 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// The algorithm returned 1.
    Accept,
    /// The algorithm returned 0.
    Reject,
}

/// Parameters shared by the algorithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterParams {
    /// Promise gap `ε` of the exact testers and of the hidden group problem.
    pub epsilon: f64,
    /// Completeness tolerance `ε₁` of the tolerant testers.
    pub epsilon1: f64,
    /// Soundness tolerance `ε₂` of the tolerant testers.
    pub epsilon2: f64,
    /// Failure probability `δ`.
    pub delta: f64,
    /// POVM order `r ≥ 2` with `gcd(d, r) = 1`.
    pub r: u32,
    /// Size exponent `t` for the stabiliser size test.
    pub size_exponent_t: usize,
    /// Number of non-Clifford gates in the doped-circuit promise.
    pub doping_t: usize,
    /// Difference sampling mode.
    pub mode: DifferenceMode,
    /// Copies `k` per `B_R` block (4, or 2 and 1 on the reduced paths).
    pub k: usize,
    /// Keep every sample and outcome in the verdict.
    pub record_transcript: bool,
    /// Run the size test even when `ε` is outside the guaranteed range.
    pub exploratory: bool,
}

impl Default for TesterParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            epsilon1: 0.0,
            epsilon2: 0.5,
            delta: 0.1,
            r: 3,
            size_exponent_t: 0,
            doping_t: 0,
            mode: DifferenceMode::SharedBaseline,
            k: 4,
            record_transcript: false,
            exploratory: false,
        }
    }
}

impl TesterParams {
    fn check_delta(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::ParamOutOfRange(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        Ok(())
    }

    fn check_epsilon(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::ParamOutOfRange(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        self.check_delta()
    }

    fn check_tolerances(&self) -> Result<()> {
        if !(self.epsilon1 >= 0.0 && self.epsilon1 < self.epsilon2 && self.epsilon2 <= 1.0) {
            return Err(Error::ParamOutOfRange(format!(
                "need 0 <= eps1 < eps2 <= 1 (got {}, {})",
                self.epsilon1, self.epsilon2
            )));
        }
        self.check_delta()
    }
}

/// Samples and measurement outcomes behind a verdict.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    /// Difference samples in the order drawn.
    pub samples: Vec<SkewedSample>,
    /// Measurement outcomes `Z_i`.
    pub outcomes: Vec<f64>,
}

/// Result of a tester run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterVerdict {
    /// Accept (1) or reject (0).
    pub decision: Decision,
    /// Copies of the input consumed.
    pub samples_used: usize,
    /// The statistic compared with the threshold.
    pub statistic: f64,
    /// The acceptance threshold.
    pub threshold: f64,
    /// Number of measurement rounds `m`.
    pub rounds: usize,
    /// Difference sampling mode, for sampling-based testers.
    pub mode: Option<DifferenceMode>,
    /// Set when the run is outside the parameter range of its guarantee.
    pub warning: Option<String>,
    /// Outcome of the isotropy check on the sampled span, when it was evaluated.
    pub isotropy_ok: Option<bool>,
    /// Raw samples and outcomes, when requested.
    pub transcript: Option<Transcript>,
}

/// Result of the learning algorithm.
#[derive(Clone, Debug)]
pub struct LearnOutcome {
    /// The reconstructed group, when the samples spanned a Lagrangian.
    pub group: Option<StabiliserGroup>,
    /// Span of the difference samples.
    pub span: Submodule,
    /// Phases `(x, s)` read out for the span's basis.
    pub phases: Vec<(Point, i64)>,
    /// Copies consumed.
    pub copies_used: usize,
}

/// Result of the hidden stabiliser group algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenGroupOutcome {
    /// `⟨samples⟩^⫫`.
    pub module: Submodule,
    /// `⟨samples⟩`.
    pub span: Submodule,
    /// Rounds `m` after the baseline.
    pub rounds: usize,
    /// Copies consumed.
    pub copies_used: usize,
}

fn context(psi: &DenseState) -> Result<PhaseContext> {
    if psi.registers().len() != 1 {
        return Err(Error::InvalidInput("algorithms take a single-register state".into()));
    }
    PhaseContext::new(psi.d, psi.num_qudits())
}

fn draw_samples<R: Rng + ?Sized>(
    psi: &DenseState,
    r: &RMatrix,
    mode: DifferenceMode,
    rounds: usize,
    rng: &mut R,
) -> Result<(Vec<SkewedSample>, usize)> {
    let mut sampler = DifferenceSampler::new(psi, r, mode)?;
    let samples = (0..rounds).map(|_| sampler.sample(rng)).collect();
    Ok((samples, sampler.copies_used()))
}

/// Measures `psi` in the eigenbasis of `W_x`; returns `k` for the eigenvalue `ω^k`.
///
/// `P(k) = d^{-1} Σ_j ω^{-kj} ⟨ψ|W_x^j|ψ⟩` with `W_x^j = W_{jx}` (lifted labels).
pub fn measure_weyl_eigenvalue<R: Rng + ?Sized>(psi: &DenseState, x: &[i64], rng: &mut R) -> Result<i64> {
    let ctx = context(psi)?;
    let base = WeylLabel::new(&ctx, x);
    let ex: Vec<Complex64> =
        (0..ctx.d).map(|j| expectation_weyl(psi, &ctx, &power(&ctx, &base, j))).collect::<Result<_>>()?;
    let probs: Vec<f64> = (0..ctx.d)
        .map(|k| {
            let s: Complex64 = ex.iter().enumerate().map(|(j, e)| ctx.omega_pow(-k * j as i64) * e).sum();
            (s.re / ctx.d as f64).max(0.0)
        })
        .collect();
    Ok(sample_index(&probs, rng) as i64)
}

/// Learns a stabiliser group from copies of its state.
///
/// Draws `⌈3n/k⌉` difference rounds (after one baseline round in shared mode),
/// spans the first `3n` labels and reads each basis phase off one more copy.
pub fn learn_stabiliser<R: Rng + ?Sized>(psi: &DenseState, params: &TesterParams, rng: &mut R) -> Result<LearnOutcome> {
    let ctx = context(psi)?;
    let n = ctx.n;
    let r = build_r(&ctx, params.k)?;
    let rounds = (3 * n).div_ceil(params.k);
    let (samples, mut copies_used) = draw_samples(psi, &r, params.mode, rounds, rng)?;
    let labels: Vec<Point> = samples.iter().flat_map(|s| s.labels.iter().cloned()).take(3 * n).collect();
    let span = crate::zmod::canonicalize(ctx.d, 2 * n, &labels);
    let mut phases = Vec::with_capacity(span.basis().len());
    for x in span.basis() {
        let k = measure_weyl_eigenvalue(psi, x, rng)?;
        copies_used += 1;
        phases.push((x.clone(), (-k).rem_euclid(ctx.d)));
    }
    let group = if span.size() == ctx.dim() as u128 { StabiliserGroup::new(&ctx, phases.clone()).ok() } else { None };
    Ok(LearnOutcome { group, span, phases, copies_used })
}

/// Rounds of the hidden stabiliser group algorithm:
/// `⌈(2 ln(1/δ) + 16 n Σk_i) / (1 − (1 − ε(2−ε)(1 − 1/p₁))⁴)⌉`.
pub fn hidden_group_rounds(ctx: &PhaseContext, epsilon: f64, delta: f64) -> usize {
    let p1 = ctx.p1() as f64;
    let gap = 1.0 - (1.0 - epsilon * (2.0 - epsilon) * (1.0 - 1.0 / p1)).powi(4);
    ((2.0 * (1.0 / delta).ln() + 16.0 * (ctx.n as f64) * ctx.sum_k() as f64) / gap).ceil() as usize
}

/// Recovers `Weyl(|ψ⟩)` as the symplectic complement of the sampled span.
pub fn hidden_group<R: Rng + ?Sized>(
    psi: &DenseState,
    params: &TesterParams,
    rng: &mut R,
) -> Result<HiddenGroupOutcome> {
    params.check_epsilon()?;
    let ctx = context(psi)?;
    let r = build_r(&ctx, params.k)?;
    let rounds = hidden_group_rounds(&ctx, params.epsilon, params.delta);
    let (samples, copies_used) = draw_samples(psi, &r, params.mode, rounds, rng)?;
    let span = span_of_samples(ctx.d, 2 * ctx.n, &samples);
    let module = symplectic_complement(&span);
    Ok(HiddenGroupOutcome { module, span, rounds, copies_used })
}

/// Largest `ε` covered by the size test's guarantee: `(1/6d²)(1 − 1/p₁)(1 − 1/8d²)`.
pub fn size_test_epsilon_bound(ctx: &PhaseContext) -> f64 {
    let d2 = (ctx.d * ctx.d) as f64;
    (1.0 / (6.0 * d2)) * (1.0 - 1.0 / ctx.p1() as f64) * (1.0 - 1.0 / (8.0 * d2))
}

/// Rounds of the size test: `⌈(2/3ε)(ln(1/δ) + 8n Σk_i)⌉`.
pub fn size_test_rounds(ctx: &PhaseContext, epsilon: f64, delta: f64) -> usize {
    ((2.0 / (3.0 * epsilon)) * ((1.0 / delta).ln() + 8.0 * (ctx.n as f64) * ctx.sum_k() as f64)).ceil() as usize
}

/// Threshold on the `b_ψ` mass of `(X^⫫)^4` above which `X` must be isotropic:
/// `(1 − (1/2d²)(1 − 1/p₁)(1 − 1/8d²))⁴`.
pub fn isotropy_threshold(ctx: &PhaseContext) -> f64 {
    let d2 = (ctx.d * ctx.d) as f64;
    (1.0 - (1.0 / (2.0 * d2)) * (1.0 - 1.0 / ctx.p1() as f64) * (1.0 - 1.0 / (8.0 * d2))).powi(4)
}

/// Checks the isotropy implication for `X = span^⫫` using the exact `b_ψ` (`n = 1`, `d ≤ 4`).
///
/// Returns `None` when the exact table is out of reach.
pub fn isotropy_check(psi: &DenseState, r: &RMatrix, span: &Submodule) -> Result<Option<bool>> {
    let ctx = context(psi)?;
    if ctx.n != 1 || ctx.d > 4 || r.k != 4 {
        return Ok(None);
    }
    let b = b_exact(psi, r)?;
    let np = ctx.num_points();
    let inside: Vec<bool> = ctx.all_points().iter().map(|x| span.contains(x)).collect();
    let mass: f64 = b
        .values
        .iter()
        .enumerate()
        .filter(|(flat, _)| (0..4).all(|i| inside[(flat / np.pow(i)) % np]))
        .map(|(_, v)| v)
        .sum();
    if mass <= isotropy_threshold(&ctx) {
        return Ok(Some(true));
    }
    Ok(Some(is_isotropic(&symplectic_complement(span))))
}

/// Tests whether `psi` has stabiliser size at least `d^t`: accepts iff the span has size `≤ d^{2n−t}`.
pub fn test_size<R: Rng + ?Sized>(psi: &DenseState, params: &TesterParams, rng: &mut R) -> Result<TesterVerdict> {
    params.check_epsilon()?;
    let ctx = context(psi)?;
    let t = params.size_exponent_t;
    if t > ctx.n {
        return Err(Error::ParamOutOfRange(format!("t = {t} exceeds n = {}", ctx.n)));
    }
    let bound = size_test_epsilon_bound(&ctx);
    let warning = if params.epsilon > bound {
        let msg = format!("epsilon = {} exceeds the guaranteed range {bound:.6}", params.epsilon);
        if !params.exploratory {
            return Err(Error::ParamOutOfRange(msg));
        }
        Some(msg)
    } else {
        None
    };
    let r = build_r(&ctx, params.k)?;
    let rounds = size_test_rounds(&ctx, params.epsilon, params.delta);
    let (samples, copies_used) = draw_samples(psi, &r, params.mode, rounds, rng)?;
    let span = span_of_samples(ctx.d, 2 * ctx.n, &samples);
    let k_size = span.size() as f64;
    let threshold = (ctx.d as f64).powi((2 * ctx.n - t) as i32);
    let isotropy_ok = isotropy_check(psi, &r, &span)?;
    Ok(TesterVerdict {
        decision: if k_size <= threshold { Decision::Accept } else { Decision::Reject },
        samples_used: copies_used,
        statistic: k_size,
        threshold,
        rounds,
        mode: Some(params.mode),
        warning,
        isotropy_ok,
        transcript: params.record_transcript.then(|| Transcript { samples, outcomes: vec![] }),
    })
}

/// Distinguishes Haar-random states from doped Clifford outputs.
///
/// Draws `⌈3n/k⌉` difference rounds; rejects ("Haar") iff the span is all of `Z_d^{2n}`.
pub fn doped_vs_haar<R: Rng + ?Sized>(psi: &DenseState, params: &TesterParams, rng: &mut R) -> Result<TesterVerdict> {
    let ctx = context(psi)?;
    let r = build_r(&ctx, params.k)?;
    let rounds = (3 * ctx.n).div_ceil(params.k);
    let (samples, copies_used) = draw_samples(psi, &r, params.mode, rounds, rng)?;
    let span = span_of_samples(ctx.d, 2 * ctx.n, &samples);
    let k_size = span.size() as f64;
    let full = ctx.num_points() as f64;
    let warning = (2 * params.doping_t >= ctx.n && params.doping_t > 0)
        .then(|| format!("doping t = {} is not below n/2", params.doping_t));
    Ok(TesterVerdict {
        decision: if k_size == full { Decision::Reject } else { Decision::Accept },
        samples_used: copies_used,
        statistic: k_size,
        threshold: full,
        rounds,
        mode: Some(params.mode),
        warning,
        isotropy_ok: None,
        transcript: params.record_transcript.then(|| Transcript { samples, outcomes: vec![] }),
    })
}

fn check_r(d: i64, r: u32) -> Result<()> {
    if r < 2 || (r as i64).gcd(&d) != 1 {
        return Err(Error::ParamOutOfRange(format!("r = {r} needs r >= 2 and gcd(d, r) = 1 (d = {d})")));
    }
    Ok(())
}

/// `C_{d,r} = ½(1 − (1 − 1/4d²)^{r−1})`.
pub fn c_dr(d: i64, r: u32) -> f64 {
    0.5 * (1.0 - (1.0 - 1.0 / (4.0 * (d * d) as f64)).powi(r as i32 - 1))
}

/// `G_r(|ψ⟩) = d^{(r−1)n} Σ_x p_ψ(x)^r`.
pub fn g_r_exact(psi: &DenseState, r: u32) -> Result<f64> {
    check_r(psi.d, r)?;
    characteristic_moment(psi, r)
}

/// `d^{(r−1)n} Σ_x p_ψ(x)^r` for any `r ≥ 1`, without the coprimality condition.
pub fn characteristic_moment(psi: &DenseState, r: u32) -> Result<f64> {
    let p = p_table(psi)?;
    let scale = (psi.d as f64).powi(((r - 1) as usize * p.n) as i32);
    Ok(scale * p.values.iter().map(|v| v.powi(r as i32)).sum::<f64>())
}

/// `P[+1]` of the POVM `{Π_r^+, I − Π_r^+}` on `|ψ⟩^{⊗2r}`: `(1 + G_r)/2`.
pub fn povm_accept_probability(psi: &DenseState, r: u32) -> Result<f64> {
    Ok(((1.0 + g_r_exact(psi, r)?) / 2.0).clamp(0.0, 1.0))
}

/// One POVM measurement on `|ψ⟩^{⊗2r}`; returns `±1`.
pub fn povm_measure<R: Rng + ?Sized>(psi: &DenseState, r: u32, rng: &mut R) -> Result<i8> {
    let p = povm_accept_probability(psi, r)?;
    Ok(if rng.random::<f64>() < p { 1 } else { -1 })
}

/// Number of `+1` outcomes in `m` independent POVM measurements.
fn povm_plus_count<R: Rng + ?Sized>(p: f64, m: usize, rng: &mut R) -> u64 {
    Binomial::new(m as u64, p).expect("valid binomial").sample(rng)
}

fn povm_outcomes<R: Rng + ?Sized>(p: f64, m: usize, record: bool, rng: &mut R) -> (u64, Option<Vec<f64>>) {
    if record {
        let outcomes: Vec<f64> = (0..m).map(|_| if rng.random::<f64>() < p { 1.0 } else { -1.0 }).collect();
        let plus = outcomes.iter().filter(|&&z| z > 0.0).count() as u64;
        (plus, Some(outcomes))
    } else {
        (povm_plus_count(p, m, rng), None)
    }
}

/// Shots of the POVM tester: `⌈ln(1/δ) / (C_{d,r} ε)⌉`.
pub fn stab_test_povm_rounds(d: i64, r: u32, epsilon: f64, delta: f64) -> usize {
    ((1.0 / delta).ln() / (c_dr(d, r) * epsilon)).ceil() as usize
}

/// POVM stabiliser tester: accepts iff every one of `m` outcomes is `+1`.
pub fn stab_test_povm<R: Rng + ?Sized>(psi: &DenseState, params: &TesterParams, rng: &mut R) -> Result<TesterVerdict> {
    params.check_epsilon()?;
    let ctx = context(psi)?;
    check_r(ctx.d, params.r)?;
    let m = stab_test_povm_rounds(ctx.d, params.r, params.epsilon, params.delta);
    let p = povm_accept_probability(psi, params.r)?;
    let (plus, outcomes) = povm_outcomes(p, m, params.record_transcript, rng);
    let mean = (2.0 * plus as f64 - m as f64) / m as f64;
    Ok(TesterVerdict {
        decision: if plus == m as u64 { Decision::Accept } else { Decision::Reject },
        samples_used: 2 * params.r as usize * m,
        statistic: mean,
        threshold: 1.0,
        rounds: m,
        mode: None,
        warning: None,
        isotropy_ok: None,
        transcript: outcomes.map(|outcomes| Transcript { samples: vec![], outcomes }),
    })
}

/// `A(|ψ⟩) = d^{8n} Σ_X Π_i p_ψ(X_i)² p_ψ((XR)_i)` (`n = 1`, `d ≤ 4`).
pub fn a_exact(psi: &DenseState, r: &RMatrix) -> Result<f64> {
    a_exact_with_cap(psi, r, false)
}

/// [`a_exact`] with `d ≤ 6` allowed when `allow_large` is set.
pub fn a_exact_with_cap(psi: &DenseState, r: &RMatrix, allow_large: bool) -> Result<f64> {
    let p = p_table(psi)?;
    let ctx = p.ctx();
    let max_d = if allow_large { 6 } else { 4 };
    if ctx.n != 1 || ctx.d > max_d || r.k != 4 {
        return Err(Error::CapExceeded(format!("A(psi) needs n = 1, k = 4 and d <= {max_d}")));
    }
    let pts = ctx.all_points();
    let np = pts.len();
    let mut total = 0.0;
    for flat in 0..np.pow(4) {
        let xs: Vec<&Point> = (0..4).map(|i| &pts[(flat / np.pow(i as u32)) % np]).collect();
        let mut prod = 1.0;
        for i in 0..4 {
            let pi = p.at(xs[i]);
            if pi == 0.0 {
                prod = 0.0;
                break;
            }
            let col: Point = (0..2).map(|c| (0..4).map(|l| xs[l][c] * r.entries[l][i]).sum()).collect();
            prod *= pi * pi * p.at(&col);
        }
        total += prod;
    }
    Ok(total * (ctx.d as f64).powi(8))
}

/// Eigenvalue-class probabilities `q_k` of `½⊗(W_{X_j} ⊗ W_{X_j}^†) + h.c.` on `|ψ⟩^{⊗2k}`:
/// `q_k = d^{-1} Σ_j ω^{-kj} Π_i |⟨ψ|W_{jX_i}|ψ⟩|²`.
pub fn observable_distribution(psi: &DenseState, labels: &[Point]) -> Result<Vec<f64>> {
    let ctx = context(psi)?;
    let f: Vec<f64> = (0..ctx.d)
        .map(|j| {
            labels.iter().try_fold(1.0, |acc, x| {
                let lifted: Vec<i64> = x.iter().map(|c| c * j).collect();
                Ok::<f64, Error>(acc * expectation_weyl(psi, &ctx, &WeylLabel::from_lifted(&ctx, &lifted))?.norm_sqr())
            })
        })
        .collect::<Result<_>>()?;
    let q: Vec<f64> = (0..ctx.d)
        .map(|k| {
            let s: Complex64 = f.iter().enumerate().map(|(j, v)| ctx.omega_pow(-k * j as i64) * v).sum();
            s.re / ctx.d as f64
        })
        .collect();
    if let Some(&bad) = q.iter().find(|&&v| v < -1e-10) {
        return Err(Error::NegativeProbability(bad));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NegativeProbability(total - 1.0));
    }
    Ok(q.into_iter().map(|v| v.max(0.0)).collect())
}

/// Measures the symmetrised Weyl observable for sampled labels; returns `cos(2πk/d)`.
pub fn observable_measure<R: Rng + ?Sized>(psi: &DenseState, labels: &[Point], rng: &mut R) -> Result<f64> {
    Ok(observable_outcome(psi, labels, rng)?.1)
}

fn observable_outcome<R: Rng + ?Sized>(psi: &DenseState, labels: &[Point], rng: &mut R) -> Result<(i64, f64)> {
    let q = observable_distribution(psi, labels)?;
    let k = sample_index(&q, rng) as i64;
    let value = if k == 0 { 1.0 } else { (std::f64::consts::TAU * k as f64 / psi.d as f64).cos() };
    Ok((k, value))
}

/// Rounds of the Bell-sampling stabiliser tester: `⌈(2 + 1/(4C_{d,3}ε)) ln(1/δ)⌉`.
pub fn stab_test_bell_rounds(d: i64, epsilon: f64, delta: f64) -> usize {
    ((2.0 + 1.0 / (4.0 * c_dr(d, 3) * epsilon)) * (1.0 / delta).ln()).ceil() as usize
}

struct ObservableRun {
    outcomes: Vec<f64>,
    all_trivial: bool,
    copies_used: usize,
    samples: Vec<SkewedSample>,
}

fn observable_rounds<R: Rng + ?Sized>(
    psi: &DenseState,
    params: &TesterParams,
    m: usize,
    rng: &mut R,
) -> Result<ObservableRun> {
    let ctx = context(psi)?;
    let r = build_r(&ctx, params.k)?;
    let mut sampler = DifferenceSampler::new(psi, &r, params.mode)?;
    let mut outcomes = Vec::with_capacity(m);
    let mut samples = Vec::new();
    let mut all_trivial = true;
    for _ in 0..m {
        let s = sampler.sample(rng);
        let (k, value) = observable_outcome(psi, &s.labels, rng)?;
        all_trivial &= k == 0;
        outcomes.push(value);
        if params.record_transcript {
            samples.push(s);
        }
    }
    let copies_used = sampler.copies_used() + 2 * params.k * m;
    Ok(ObservableRun { outcomes, all_trivial, copies_used, samples })
}

/// Bell-sampling stabiliser tester: accepts iff every observable outcome is 1.
pub fn stab_test_bell<R: Rng + ?Sized>(psi: &DenseState, params: &TesterParams, rng: &mut R) -> Result<TesterVerdict> {
    params.check_epsilon()?;
    let ctx = context(psi)?;
    let m = stab_test_bell_rounds(ctx.d, params.epsilon, params.delta);
    let run = observable_rounds(psi, params, m, rng)?;
    let mean = run.outcomes.iter().sum::<f64>() / m as f64;
    Ok(TesterVerdict {
        decision: if run.all_trivial { Decision::Accept } else { Decision::Reject },
        samples_used: run.copies_used,
        statistic: mean,
        threshold: 1.0,
        rounds: m,
        mode: Some(params.mode),
        warning: None,
        isotropy_ok: None,
        transcript: params.record_transcript.then_some(Transcript { samples: run.samples, outcomes: run.outcomes }),
    })
}

/// `γ_r = (1−ε₁)^{2r} − 1 + (1 − (1 − 1/4d²)^{r−1}) ε₂`.
pub fn gamma_r(d: i64, r: u32, eps1: f64, eps2: f64) -> f64 {
    (1.0 - eps1).powi(2 * r as i32) - 1.0 + 2.0 * c_dr(d, r) * eps2
}

/// `α = (1−ε₁)^{16}(1−2ε₁)⁴ − (1 − (ε₂/2d²)(1 − 1/8d²))⁴`.
pub fn alpha(d: i64, eps1: f64, eps2: f64) -> f64 {
    let d2 = (d * d) as f64;
    (1.0 - eps1).powi(16) * (1.0 - 2.0 * eps1).powi(4) - (1.0 - (eps2 / (2.0 * d2)) * (1.0 - 1.0 / (8.0 * d2))).powi(4)
}

/// `⌈(8/x²) ln(2/δ)⌉`.
pub fn hoeffding_rounds(gap: f64, delta: f64) -> usize {
    ((8.0 / (gap * gap)) * (2.0 / delta).ln()).ceil() as usize
}

/// `ε₁` at which `γ_r = 0` for `ε₂ = 1`: `1 − (1 − 1/4d²)^{(r−1)/2r}`.
pub fn gamma_boundary_eps1(d: i64, r: u32) -> f64 {
    1.0 - (1.0 - 1.0 / (4.0 * (d * d) as f64)).powf((r as f64 - 1.0) / (2.0 * r as f64))
}

/// Tolerant POVM tester: accepts iff the mean outcome exceeds `(1−ε₁)^{2r} − γ_r/2`.
pub fn tolerant_povm<R: Rng + ?Sized>(psi: &DenseState, params: &TesterParams, rng: &mut R) -> Result<TesterVerdict> {
    params.check_tolerances()?;
    let ctx = context(psi)?;
    check_r(ctx.d, params.r)?;
    let gamma = gamma_r(ctx.d, params.r, params.epsilon1, params.epsilon2);
    if gamma <= 0.0 {
        return Err(Error::GammaNonPositive(gamma));
    }
    let m = hoeffding_rounds(gamma, params.delta);
    let p = povm_accept_probability(psi, params.r)?;
    let (plus, outcomes) = povm_outcomes(p, m, params.record_transcript, rng);
    let mean = (2.0 * plus as f64 - m as f64) / m as f64;
    let threshold = (1.0 - params.epsilon1).powi(2 * params.r as i32) - gamma / 2.0;
    Ok(TesterVerdict {
        decision: if mean > threshold { Decision::Accept } else { Decision::Reject },
        samples_used: 2 * params.r as usize * m,
        statistic: mean,
        threshold,
        rounds: m,
        mode: None,
        warning: None,
        isotropy_ok: None,
        transcript: outcomes.map(|outcomes| Transcript { samples: vec![], outcomes }),
    })
}

/// Tolerant Bell-sampling tester: accepts iff the mean outcome exceeds
/// `(1−ε₁)^{16}(1−2ε₁)⁴ − α/2`.
pub fn tolerant_bell<R: Rng + ?Sized>(psi: &DenseState, params: &TesterParams, rng: &mut R) -> Result<TesterVerdict> {
    params.check_tolerances()?;
    let ctx = context(psi)?;
    let a = alpha(ctx.d, params.epsilon1, params.epsilon2);
    if a <= 0.0 {
        return Err(Error::AlphaNonPositive(a));
    }
    let m = hoeffding_rounds(a, params.delta);
    let run = observable_rounds(psi, params, m, rng)?;
    let mean = run.outcomes.iter().sum::<f64>() / m as f64;
    let threshold = (1.0 - params.epsilon1).powi(16) * (1.0 - 2.0 * params.epsilon1).powi(4) - a / 2.0;
    Ok(TesterVerdict {
        decision: if mean > threshold { Decision::Accept } else { Decision::Reject },
        samples_used: run.copies_used,
        statistic: mean,
        threshold,
        rounds: m,
        mode: Some(params.mode),
        warning: None,
        isotropy_ok: None,
        transcript: params.record_transcript.then_some(Transcript { samples: run.samples, outcomes: run.outcomes }),
    })
}

/// One grid point of the tolerant testers' parameter comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeRow {
    /// `ε₁`.
    pub eps1: f64,
    /// `ε₂`.
    pub eps2: f64,
    /// `γ_r`.
    pub gamma: f64,
    /// `α`.
    pub alpha: f64,
    /// Copies of the POVM tester, `2r⌈(8/γ²) ln(2/δ)⌉`, when `γ_r > 0`.
    pub copies_povm: Option<u64>,
    /// Copies of the Bell tester, `16⌈(8/α²) ln(2/δ)⌉ + 8`, when `α > 0`.
    pub copies_bell: Option<u64>,
}

fn range_row(d: i64, r: u32, eps1: f64, eps2: f64, delta: f64) -> RangeRow {
    let gamma = gamma_r(d, r, eps1, eps2);
    let a = alpha(d, eps1, eps2);
    RangeRow {
        eps1,
        eps2,
        gamma,
        alpha: a,
        copies_povm: (gamma > 0.0).then(|| 2 * r as u64 * hoeffding_rounds(gamma, delta) as u64),
        copies_bell: (a > 0.0).then(|| 16 * hoeffding_rounds(a, delta) as u64 + 8),
    }
}

/// `(ε₁, ε₂)` grid over `(0, 1)²` at cell centres, `ε₁` fastest.
pub fn range_tables(d: i64, r: u32, grid: usize, delta: f64) -> Result<Vec<RangeRow>> {
    check_r(d, r)?;
    if grid == 0 || grid > 500 {
        return Err(Error::ParamOutOfRange(format!("grid = {grid} must lie in 1..=500")));
    }
    let at = |i: usize| (i as f64 + 0.5) / grid as f64;
    Ok((0..grid).flat_map(|j| (0..grid).map(move |i| range_row(d, r, at(i), at(j), delta))).collect())
}

/// Copy counts against `ε₁ ∈ (0, eps1_max)` at fixed `ε₂` and `δ`, at cell centres.
pub fn range_curve(d: i64, r: u32, eps2: f64, delta: f64, eps1_max: f64, points: usize) -> Result<Vec<RangeRow>> {
    check_r(d, r)?;
    Ok((0..points).map(|i| range_row(d, r, eps1_max * (i as f64 + 0.5) / points as f64, eps2, delta)).collect())
}

/// Largest `ε₁` with `γ_r > 0`, and with `α > 0`, at a given `ε₂` (0 when the region is empty).
pub fn eps1_limits(d: i64, r: u32, eps2: f64) -> (f64, f64) {
    let gamma_limit = 1.0 - (1.0 - 2.0 * c_dr(d, r) * eps2).powf(1.0 / (2.0 * r as f64));
    if alpha(d, 0.0, eps2) <= 0.0 {
        return (gamma_limit.max(0.0), 0.0);
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if alpha(d, mid, eps2) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (gamma_limit.max(0.0), lo)
}

/// Single-qudit non-stabiliser state `d^{-1/2} Σ_q e^{2πi q³/(dD)} |q⟩`; `|T⟩` at `d = 2`.
pub fn magic_state(d: i64) -> Result<DenseState> {
    let ctx = PhaseContext::new(d, 1)?;
    let denom = (ctx.d * ctx.big_d) as f64;
    let amps = (0..d).map(|q| Complex64::from_polar(1.0, std::f64::consts::TAU * (q * q * q) as f64 / denom)).collect();
    DenseState::new(d, vec![1], amps)
}

/// `cos θ |s⟩ + sin θ |u⟩` with `u` the part of `direction` orthogonal to `s`,
/// and `θ` bisected so that the stabiliser fidelity equals `target` to `1e-9`.
///
/// Bisection runs on `[0, θ_max]` where `θ_max` minimises the fidelity along the path
/// on a coarse scan; `target` must lie between that minimum and 1.
pub fn fidelity_fixture(s: &DenseState, direction: &DenseState, target: f64) -> Result<DenseState> {
    let overlap = s.inner(direction)?;
    let u: Vec<Complex64> = direction.amplitudes().iter().zip(s.amplitudes()).map(|(a, b)| a - overlap * b).collect();
    let u = DenseState::new(s.d, s.registers().to_vec(), u)?;
    let state_at = |theta: f64| -> Result<DenseState> {
        let amps = s.amplitudes().iter().zip(u.amplitudes()).map(|(a, b)| a * theta.cos() + b * theta.sin()).collect();
        DenseState::new(s.d, s.registers().to_vec(), amps)
    };
    let fid = |theta: f64| -> Result<f64> { Ok(stabiliser_fidelity(&state_at(theta)?)?.0) };
    let steps = 200;
    let mut hi = 0.0;
    let mut lowest = 1.0;
    for i in 1..=steps {
        let theta = std::f64::consts::FRAC_PI_2 * i as f64 / steps as f64;
        let f = fid(theta)?;
        if f < lowest {
            lowest = f;
            hi = theta;
        }
    }
    if !(target >= lowest && target <= 1.0) {
        return Err(Error::ParamOutOfRange(format!(
            "target fidelity {target} is outside [{lowest:.6}, 1] along this path"
        )));
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if fid(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    state_at(0.5 * (lo + hi))
}

/// Rounds for a random span to capture all but `ε` of the sample mass: `⌈(1/ε)(2 ln(1/δ) + 4n Σk_i)⌉`.
pub fn span_mass_rounds(ctx: &PhaseContext, epsilon: f64, delta: f64) -> usize {
    ((1.0 / epsilon) * (2.0 * (1.0 / delta).ln() + 4.0 * (ctx.n as f64) * ctx.sum_k() as f64)).ceil() as usize
}
