//! Skewed Bell sampling, skewed Bell difference sampling and their exact distributions.
//!
//! One round measures `k` Bell pairs of `|ψ⟩^{⊗k} ⊗ B_R^†|ψ⟩^{⊗k}`, pairing copy `i` of
//! the plain block with register `i` of the skewed block. The skewed block is kept
//! as a `d^{kn}` state and the plain copies are contracted in one at a time.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{add_table, dft_axes, p_table, PhaseTable, WeylLabel};
use crate::qstate::{
    apply_br_on, apply_weyl, bell_outcome_table, bell_project, expectation_weyl, sample_index, DenseState,
};
use crate::rng::QRng;
use crate::stabiliser::{stabiliser_state, StabiliserGroup};
use crate::zmod::{
    canonicalize, involution, omega_row, solve_mod_d, symplectic_product, PhaseContext, Point, RMatrix, Submodule,
};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Labels from one sampling call, one per Bell pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewedSample {
    /// Measured (or differenced) labels `x_1, …, x_k`.
    pub labels: Vec<Point>,
    /// Seeds of the rounds that produced the labels.
    pub round_seeds: Vec<u64>,
}

/// How difference samples are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceMode {
    /// Two fresh rounds per sample; samples are i.i.d. from `b_ψ`.
    Fresh,
    /// One baseline round subtracted from every later round.
    SharedBaseline,
}

/// Outcome table of the Bell pair (plain copy `ψ`, first register of `phi`).
///
/// `P(v, w) = d^{-n} Σ_Δ ω^{-⟨Δ,v⟩} Σ_q ψ[q+Δ+w] conj(ψ[q+w]) ρ[q+Δ, q]` with `ρ` the reduced
/// density matrix of the first register of `phi`.
pub fn pair_table(ctx: &PhaseContext, psi: &[Complex64], phi: &DenseState, add: &[usize]) -> Vec<f64> {
    let dimq = ctx.dim();
    let rest = phi.dim() / dimq;
    let amps = phi.amplitudes();
    let mut rho = vec![C0; dimq * dimq];
    for r in 0..rest {
        let block = &amps[r * dimq..(r + 1) * dimq];
        for q in 0..dimq {
            if block[q] == C0 {
                continue;
            }
            for qp in 0..dimq {
                rho[q * dimq + qp] += block[q] * block[qp].conj();
            }
        }
    }
    let mut out = vec![0.0; dimq * dimq];
    let mut g = vec![C0; dimq];
    let signs = vec![-1i64; ctx.n];
    let scale = (dimq as f64).recip();
    for w in 0..dimq {
        for (delta, slot) in g.iter_mut().enumerate() {
            let mut acc = C0;
            for qp in 0..dimq {
                let qw = add[qp * dimq + w];
                let q = add[qp * dimq + delta];
                let qdw = add[q * dimq + w];
                acc += psi[qdw] * psi[qw].conj() * rho[q * dimq + qp];
            }
            *slot = acc;
        }
        dft_axes(ctx, &mut g, &signs);
        for v in 0..dimq {
            out[v + dimq * w] = (g[v].re * scale).max(0.0);
        }
    }
    out
}

/// Contracts the first register of `phi` with the plain copy `psi` against `⟨W_x|`.
///
/// Returns the unnormalised remainder `rem[r] = Σ_q c_x[q] phi[q, r]` with
/// `c_x[q] = d^{-n/2} conj(τ^{⟨v,w⟩} ω^{⟨q,v⟩}) ψ[q + w]`.
pub fn contract_pair(ctx: &PhaseContext, psi: &[Complex64], phi: &DenseState, x: &[i64]) -> Vec<Complex64> {
    let n = ctx.n;
    let dimq = ctx.dim();
    let rest = phi.dim() / dimq;
    let (v, w) = (&x[..n], &x[n..]);
    let vw: i64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let base = ctx.tau_pow(vw).conj() / (dimq as f64).sqrt();
    let c: Vec<Complex64> = (0..dimq)
        .map(|q| {
            let qp = ctx.point(q, n);
            let qv: i64 = qp.iter().zip(v).map(|(a, b)| a * b).sum();
            let shifted: Point = qp.iter().zip(w).map(|(a, b)| a + b).collect();
            base * ctx.omega_pow(-qv) * psi[ctx.index(&shifted)]
        })
        .collect();
    let amps = phi.amplitudes();
    (0..rest).map(|r| amps[r * dimq..(r + 1) * dimq].iter().zip(&c).map(|(a, b)| a * b).sum()).collect()
}

/// Precomputed state for repeated skewed Bell rounds on one input.
#[derive(Clone, Debug)]
pub struct SkewedSampler {
    ctx: PhaseContext,
    psi: DenseState,
    block: DenseState,
    k: usize,
    add: Vec<usize>,
    first_table: Vec<f64>,
}

impl SkewedSampler {
    /// Prepares `B_R^† |ψ⟩^{⊗k}` for `k = R.k`.
    pub fn new(psi: &DenseState, r: &RMatrix) -> Result<Self> {
        if psi.registers().len() != 1 {
            return Err(Error::InvalidInput("skewed sampling needs a single-register state".into()));
        }
        let n = psi.num_qudits();
        let ctx = PhaseContext::new(psi.d, n)?;
        let block = apply_br_on(&psi.tensor_power(r.k)?, 0, r, true)?;
        let add = add_table(ctx.d, n);
        let first_table = pair_table(&ctx, psi.amplitudes(), &block, &add);
        Ok(Self { ctx, psi: psi.clone(), block, k: r.k, add, first_table })
    }

    /// Context of the sampled labels.
    pub fn ctx(&self) -> &PhaseContext {
        &self.ctx
    }

    /// Copies consumed by one round.
    pub fn copies_per_round(&self) -> usize {
        2 * self.k
    }

    /// One round: `k` labels sampled pair by pair.
    pub fn round<R: Rng + ?Sized>(&self, rng: &mut R) -> SkewedSample {
        let seed: u64 = rng.random();
        let mut local = QRng::seed_from_u64(seed);
        let mut labels = Vec::with_capacity(self.k);
        let mut phi = self.block.clone();
        for i in 0..self.k {
            let table = if i == 0 {
                self.first_table.clone()
            } else {
                pair_table(&self.ctx, self.psi.amplitudes(), &phi, &self.add)
            };
            let idx = sample_index(&table, &mut local);
            let x = self.ctx.point(idx, 2 * self.ctx.n);
            if i + 1 < self.k {
                let rem = contract_pair(&self.ctx, self.psi.amplitudes(), &phi, &x);
                phi = DenseState::new(self.ctx.d, vec![self.ctx.n; self.k - i - 1], rem)
                    .expect("sampled branch has positive weight");
            }
            labels.push(x);
        }
        SkewedSample { labels, round_seeds: vec![seed] }
    }
}

/// One skewed Bell round on `|ψ⟩^{⊗k} ⊗ B_R^†|ψ⟩^{⊗k}`.
pub fn skewed_bell_round<R: Rng + ?Sized>(psi: &DenseState, r: &RMatrix, rng: &mut R) -> Result<SkewedSample> {
    Ok(SkewedSampler::new(psi, r)?.round(rng))
}

/// Difference sampler in fresh or shared-baseline mode, with copy accounting.
#[derive(Clone, Debug)]
pub struct DifferenceSampler {
    sampler: SkewedSampler,
    mode: DifferenceMode,
    baseline: Option<SkewedSample>,
    copies_used: usize,
}

impl DifferenceSampler {
    /// Wraps a round sampler.
    pub fn new(psi: &DenseState, r: &RMatrix, mode: DifferenceMode) -> Result<Self> {
        Ok(Self { sampler: SkewedSampler::new(psi, r)?, mode, baseline: None, copies_used: 0 })
    }

    /// Underlying round sampler.
    pub fn rounds(&self) -> &SkewedSampler {
        &self.sampler
    }

    /// Copies consumed so far, baseline included.
    pub fn copies_used(&self) -> usize {
        self.copies_used
    }

    /// The baseline round, drawing it on first use.
    pub fn baseline<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &SkewedSample {
        if self.baseline.is_none() {
            self.baseline = Some(self.sampler.round(rng));
            self.copies_used += self.sampler.copies_per_round();
        }
        self.baseline.as_ref().expect("baseline drawn")
    }

    /// One difference sample `x_i = (second round)_i − (first round)_i`.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SkewedSample {
        let first = match self.mode {
            DifferenceMode::Fresh => {
                self.copies_used += self.sampler.copies_per_round();
                self.sampler.round(rng)
            }
            DifferenceMode::SharedBaseline => self.baseline(rng).clone(),
        };
        let second = self.sampler.round(rng);
        self.copies_used += self.sampler.copies_per_round();
        let d = self.sampler.ctx.d;
        let labels = second
            .labels
            .iter()
            .zip(&first.labels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).rem_euclid(d)).collect())
            .collect();
        let mut round_seeds = first.round_seeds.clone();
        round_seeds.extend(second.round_seeds);
        SkewedSample { labels, round_seeds }
    }
}

/// One skewed Bell difference sample.
pub fn skewed_bell_difference<R: Rng + ?Sized>(
    psi: &DenseState,
    r: &RMatrix,
    rng: &mut R,
    mode: DifferenceMode,
) -> Result<SkewedSample> {
    Ok(DifferenceSampler::new(psi, r, mode)?.sample(rng))
}

/// Submodule spanned by every label of `samples` taken together.
pub fn span_of_samples(d: i64, m: usize, samples: &[SkewedSample]) -> Submodule {
    let gens: Vec<Point> = samples.iter().flat_map(|s| s.labels.iter().cloned()).collect();
    canonicalize(d, m, &gens)
}

/// Submodules spanned by each label position separately.
pub fn span_per_column(d: i64, m: usize, samples: &[SkewedSample]) -> Vec<Submodule> {
    let k = samples.first().map_or(0, |s| s.labels.len());
    (0..k).map(|i| canonicalize(d, m, &samples.iter().map(|s| s.labels[i].clone()).collect::<Vec<_>>())).collect()
}

fn check_b_caps(ctx: &PhaseContext, k: usize, allow_large: bool) -> Result<()> {
    let max_d = if allow_large { 6 } else { 4 };
    if ctx.n != 1 || ctx.d > max_d || k > 4 {
        return Err(Error::CapExceeded(format!(
            "b tables need n = 1, k <= 4 and d <= {max_d} (got d = {}, n = {}, k = {k})",
            ctx.d, ctx.n
        )));
    }
    Ok(())
}

/// `b_ψ(X) = Σ_Y Π_i p_ψ(x_i + Y_i) p_ψ((Y R)_i)` as an arity-`k` table (`d ≤ 4`).
pub fn b_exact(psi: &DenseState, r: &RMatrix) -> Result<PhaseTable<f64>> {
    b_exact_with_cap(psi, r, false)
}

/// [`b_exact`] with `d ≤ 6` allowed when `allow_large` is set.
pub fn b_exact_with_cap(psi: &DenseState, r: &RMatrix, allow_large: bool) -> Result<PhaseTable<f64>> {
    let p = p_table(psi)?;
    let ctx = p.ctx();
    let k = r.k;
    check_b_caps(&ctx, k, allow_large)?;
    let np = ctx.num_points();
    let m = 2 * ctx.n;
    let total = np.pow(k as u32);
    let pts = ctx.all_points();
    let mut h = vec![0.0; total];
    for (flat, slot) in h.iter_mut().enumerate() {
        let ys: Vec<&Point> = (0..k).map(|i| &pts[(flat / np.pow(i as u32)) % np]).collect();
        let mut prod = 1.0;
        for i in 0..k {
            let col: Point = (0..m).map(|c| (0..k).map(|l| ys[l][c] * r.entries[l][i]).sum()).collect();
            prod *= p.at(&col);
            if prod == 0.0 {
                break;
            }
        }
        *slot = prod;
    }
    let add = add_table(ctx.d, m);
    let mut cur = h;
    for axis in 0..k {
        let stride = np.pow(axis as u32);
        let mut next = vec![0.0; total];
        for (flat, slot) in next.iter_mut().enumerate() {
            let x = (flat / stride) % np;
            let base = flat - x * stride;
            let mut acc = 0.0;
            for y in 0..np {
                let c = cur[base + y * stride];
                if c != 0.0 {
                    acc += p.values[add[x * np + y]] * c;
                }
            }
            *slot = acc;
        }
        cur = next;
    }
    Ok(PhaseTable { d: ctx.d, n: ctx.n, arity: k, values: cur })
}

/// Exact joint distribution of one round's `k` labels, by enumerating every branch.
pub fn round_distribution(psi: &DenseState, r: &RMatrix) -> Result<PhaseTable<f64>> {
    let sampler = SkewedSampler::new(psi, r)?;
    let ctx = sampler.ctx.clone();
    check_b_caps(&ctx, r.k, true)?;
    let np = ctx.num_points();
    let mut out = vec![0.0; np.pow(r.k as u32)];
    fn recurse(s: &SkewedSampler, phi: &DenseState, depth: usize, flat: usize, weight: f64, out: &mut [f64]) {
        let np = s.ctx.num_points();
        let table = pair_table(&s.ctx, s.psi.amplitudes(), phi, &s.add);
        for (idx, &p) in table.iter().enumerate() {
            if p < 1e-15 {
                continue;
            }
            let here = flat + idx * np.pow(depth as u32);
            if depth + 1 == s.k {
                out[here] += weight * p;
            } else {
                let x = s.ctx.point(idx, 2 * s.ctx.n);
                let rem = contract_pair(&s.ctx, s.psi.amplitudes(), phi, &x);
                let next = DenseState::new(s.ctx.d, vec![s.ctx.n; s.k - depth - 1], rem).expect("positive branch");
                recurse(s, &next, depth + 1, here, weight * p, out);
            }
        }
    }
    recurse(&sampler, &sampler.block, 0, 0, 1.0, &mut out);
    Ok(PhaseTable { d: ctx.d, n: ctx.n, arity: r.k, values: out })
}

/// Exact round distribution from the fully dense `2k`-register state (`d = 2`, `n = 1` scale).
pub fn round_distribution_dense(psi: &DenseState, r: &RMatrix) -> Result<PhaseTable<f64>> {
    let n = psi.num_qudits();
    let ctx = PhaseContext::new(psi.d, n)?;
    let k = r.k;
    if ctx.dim().pow(2 * k as u32) > 1 << 16 {
        return Err(Error::CapExceeded("dense rounds are limited to 2^16 amplitudes".into()));
    }
    let plain = psi.tensor_power(k)?;
    let skewed = apply_br_on(&psi.tensor_power(k)?, 0, r, true)?;
    let full = plain.tensor(&skewed)?;
    let np = ctx.num_points();
    let mut out = vec![0.0; np.pow(k as u32)];
    fn recurse(
        ctx: &PhaseContext,
        state: &DenseState,
        k: usize,
        depth: usize,
        flat: usize,
        weight: f64,
        out: &mut [f64],
    ) {
        let np = ctx.num_points();
        let remaining = k - depth;
        let table = bell_outcome_table(state, 0, remaining, ctx).expect("valid pair");
        for (idx, &p) in table.iter().enumerate() {
            if p < 1e-15 {
                continue;
            }
            let here = flat + idx * np.pow(depth as u32);
            if remaining == 1 {
                out[here] += weight * p;
            } else {
                let x = ctx.point(idx, 2 * ctx.n);
                let (_, rem) = bell_project(state, 0, remaining, ctx, &x).expect("valid pair");
                recurse(ctx, &rem.expect("positive branch"), k, depth + 1, here, weight * p, out);
            }
        }
    }
    recurse(&ctx, &full, k, 0, 0, 1.0, &mut out);
    Ok(PhaseTable { d: ctx.d, n: ctx.n, arity: k, values: out })
}

/// Distribution of `second − first` for two independent draws from `round`.
pub fn difference_distribution(round: &PhaseTable<f64>) -> PhaseTable<f64> {
    let ctx = round.ctx();
    let np = ctx.num_points();
    let k = round.arity;
    let total = round.values.len();
    let add = add_table(ctx.d, 2 * ctx.n);
    let add_flat = |a: usize, b: usize| -> usize {
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..k {
            out += add[((a / stride) % np) * np + (b / stride) % np] * stride;
            stride *= np;
        }
        out
    };
    let mut out = vec![0.0; total];
    for y in 0..total {
        let py = round.values[y];
        if py < 1e-15 {
            continue;
        }
        for (x, slot) in out.iter_mut().enumerate() {
            *slot += py * round.values[add_flat(x, y)];
        }
    }
    PhaseTable { d: round.d, n: round.n, arity: k, values: out }
}

/// First-column marginal of `b_ψ` from `d^{3n} Σ_y ω^{[x_1,y]} p_ψ(y) Π_i p_ψ(a_i y)`,
/// with `a_i` the first row of `R`.
pub fn b_marginal(psi: &DenseState, r: &RMatrix) -> Result<PhaseTable<f64>> {
    let p = p_table(psi)?;
    let ctx = p.ctx();
    let pts = ctx.all_points();
    let weight: Vec<f64> = pts
        .iter()
        .map(|y| r.entries[0].iter().fold(p.at(y), |acc, &a| acc * p.at(&y.iter().map(|c| a * c).collect::<Vec<_>>())))
        .collect();
    let scale = (ctx.d as f64).powi(3 * ctx.n as i32);
    let values = pts
        .iter()
        .map(|x| {
            let acc: Complex64 = pts
                .iter()
                .zip(&weight)
                .filter(|(_, w)| **w != 0.0)
                .map(|(y, w)| ctx.omega_pow(symplectic_product(x, y, ctx.d)) * w)
                .sum();
            acc.re * scale
        })
        .collect();
    Ok(PhaseTable { d: ctx.d, n: ctx.n, arity: 1, values })
}

/// CSV rows `round,col,v…,w…` for a sample stream, with a header line.
pub fn samples_to_csv(n: usize, samples: &[SkewedSample]) -> String {
    let mut out = String::from("round,col");
    for j in 0..n {
        out.push_str(&format!(",v{j}"));
    }
    for j in 0..n {
        out.push_str(&format!(",w{j}"));
    }
    out.push('\n');
    for (round, s) in samples.iter().enumerate() {
        for (col, x) in s.labels.iter().enumerate() {
            out.push_str(&format!("{round},{col}"));
            for c in x {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Recovered Pauli correction mapping `B_R|S⟩^{⊗k}` onto `|S*⟩^{⊗k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// `y_i` such that `B_R|S⟩^{⊗k} ≈ c (⊗ W_{y_i}) |S*⟩^{⊗k}`.
    pub labels: Vec<Point>,
    /// The overlap `c = ⟨S*^{⊗k}| (⊗ W_{y_i})^† B_R |S⟩^{⊗k}`.
    pub phase: Complex64,
    /// `|c|^2`.
    pub fidelity: f64,
}

/// Finds the Weyl correction relating `B_R|S⟩^{⊗k}` and `|S*⟩^{⊗k}`.
///
/// For each register the eigenvalues of the generators of `J(M)` on the output are
/// compared with those on `|S*⟩`; the ratio `ω^{[x, y]}` fixes `y` by a linear solve.
pub fn conjugate_witness(group: &StabiliserGroup, r: &RMatrix) -> Result<Witness> {
    let ctx = group.ctx();
    let s = stabiliser_state(group)?;
    let s_conj = s.conj();
    let out = apply_br_on(&s.tensor_power(r.k)?, 0, r, false)?;
    let gens: Vec<Point> = group.lagrangian().basis().iter().map(|x| involution(ctx.d, x)).collect();
    let mu: Vec<Complex64> =
        gens.iter().map(|x| expectation_weyl(&s_conj, ctx, &WeylLabel::new(ctx, x))).collect::<Result<_>>()?;
    let mut labels = Vec::with_capacity(r.k);
    for i in 0..r.k {
        let mut rows = Vec::with_capacity(gens.len());
        let mut rhs = Vec::with_capacity(gens.len());
        for (x, m) in gens.iter().zip(&mu) {
            let moved = apply_weyl(&out, i, ctx, &WeylLabel::new(ctx, x))?;
            let lambda = out.inner(&moved)?;
            let ratio = lambda / m;
            if (ratio.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::WitnessNotFound(ratio.norm()));
            }
            let c = (ratio.arg() * ctx.d as f64 / std::f64::consts::TAU).round() as i64;
            rows.push(omega_row(x));
            rhs.push(c.rem_euclid(ctx.d));
        }
        let y = solve_mod_d(ctx.d, 2 * ctx.n, &rows, &rhs).ok_or(Error::WitnessNotFound(0.0))?;
        labels.push(y);
    }
    let mut corrected = out;
    for (i, y) in labels.iter().enumerate() {
        let inv = WeylLabel::from_lifted(ctx, &y.iter().map(|c| -c).collect::<Vec<_>>());
        corrected = apply_weyl(&corrected, i, ctx, &inv)?;
    }
    let target = s_conj.tensor_power(r.k)?;
    let phase = target.inner(&corrected)?;
    let fidelity = phase.norm_sqr();
    if fidelity < 1.0 - 1e-6 {
        return Err(Error::WitnessNotFound(fidelity));
    }
    Ok(Witness { labels, phase, fidelity })
}
