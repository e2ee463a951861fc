//! Dense statevector engine.
//!
//! States are amplitude vectors over registers of qudits. Qudit `j` of the
//! whole state contributes digit `j` of the mixed-radix basis index, so the
//! first register is the least significant.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{power, WeylLabel};
use crate::zmod::{mod_inv, point_of, PhaseContext, Point, RMatrix};

/// Complex dense matrix.
pub type CMatrix = DMatrix<Complex64>;

/// Default amplitude cap.
pub const DEFAULT_CAP: usize = 20_000_000;

/// Amplitude cap, overridable through `QBELL_CAP_AMPLITUDES`.
pub fn amplitude_cap() -> usize {
    std::env::var("QBELL_CAP_AMPLITUDES").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_CAP)
}

fn checked_dim(d: i64, qudits: usize) -> Result<usize> {
    let cap = amplitude_cap();
    let mut dim = 1usize;
    for _ in 0..qudits {
        dim = dim
            .checked_mul(d as usize)
            .filter(|&x| x <= cap)
            .ok_or_else(|| Error::CapExceeded(format!("d^{qudits} amplitudes exceed the cap {cap}")))?;
    }
    Ok(dim)
}

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Pure state on a list of registers.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    /// Local dimension.
    pub d: i64,
    registers: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    /// Wraps amplitudes, normalising them; errors on a zero vector.
    pub fn new(d: i64, registers: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = checked_dim(d, registers.iter().sum())?;
        if amplitudes.len() != dim {
            return Err(Error::WidthMismatch { expected: dim, got: amplitudes.len() });
        }
        let mut s = Self { d, registers, amplitudes };
        let norm = s.norm();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::NotNormalised(norm));
        }
        s.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    /// Wraps amplitudes without normalising or checking the norm.
    pub(crate) fn raw(d: i64, registers: Vec<usize>, amplitudes: Vec<Complex64>) -> Self {
        Self { d, registers, amplitudes }
    }

    /// Wraps amplitudes that must already have unit norm.
    pub fn from_normalised(d: i64, registers: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let s = Self::new(d, registers, amplitudes.clone())?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalised(norm));
        }
        Ok(s)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(d: i64, registers: Vec<usize>, index: usize) -> Result<Self> {
        let dim = checked_dim(d, registers.iter().sum())?;
        let mut amps = vec![C0; dim];
        amps[index] = C1;
        Ok(Self { d, registers, amplitudes: amps })
    }

    /// `|0…0⟩` on a single register of `n` qudits.
    pub fn zero(d: i64, n: usize) -> Result<Self> {
        Self::basis(d, vec![n], 0)
    }

    /// Single-register state on `n` qudits.
    pub fn single(d: i64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut n = 0;
        let mut dim = 1usize;
        while dim < amplitudes.len() {
            dim *= d as usize;
            n += 1;
        }
        Self::new(d, vec![n], amplitudes)
    }

    /// Register widths.
    pub fn registers(&self) -> &[usize] {
        &self.registers
    }

    /// Amplitudes in basis order.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Total number of qudits.
    pub fn num_qudits(&self) -> usize {
        self.registers.iter().sum()
    }

    /// Number of amplitudes.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// First qudit of register `r`.
    pub fn register_offset(&self, r: usize) -> usize {
        self.registers[..r].iter().sum()
    }

    /// `|self⟩ ⊗ |other⟩`, with `other` in the more significant digits.
    pub fn tensor(&self, other: &DenseState) -> Result<DenseState> {
        if self.d != other.d {
            return Err(Error::ContextMismatch("tensor of different dimensions".into()));
        }
        let mut regs = self.registers.clone();
        regs.extend_from_slice(&other.registers);
        checked_dim(self.d, regs.iter().sum())?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for b in &other.amplitudes {
            for a in &self.amplitudes {
                amps.push(a * b);
            }
        }
        Ok(DenseState { d: self.d, registers: regs, amplitudes: amps })
    }

    /// `|self⟩^{⊗k}`.
    pub fn tensor_power(&self, k: usize) -> Result<DenseState> {
        let mut out = self.clone();
        for _ in 1..k {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// Complex conjugate in the computational basis.
    pub fn conj(&self) -> DenseState {
        DenseState {
            d: self.d,
            registers: self.registers.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &DenseState) -> Result<Complex64> {
        if self.d != other.d || self.dim() != other.dim() {
            return Err(Error::WidthMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Multiplies every amplitude by `c` without renormalising.
    pub fn scaled(&self, c: Complex64) -> DenseState {
        DenseState {
            d: self.d,
            registers: self.registers.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
        }
    }

    fn check_register(&self, r: usize, n: usize) -> Result<usize> {
        let width =
            *self.registers.get(r).ok_or_else(|| Error::InvalidInput(format!("register {r} does not exist")))?;
        if width != n {
            return Err(Error::WidthMismatch { expected: width, got: n });
        }
        Ok(self.register_offset(r))
    }

    /// Applies a monomial map `|q⟩ ↦ phase[q] |target[q]⟩` on `width` qudits from `offset`.
    fn apply_monomial(&self, offset: usize, width: usize, target: &[usize], phase: &[Complex64]) -> DenseState {
        let d = self.d as usize;
        let low = d.pow(offset as u32);
        let mid = d.pow(width as u32);
        let mut out = vec![C0; self.dim()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a == C0 {
                continue;
            }
            let l = i % low;
            let q = (i / low) % mid;
            let h = i / (low * mid);
            out[l + low * (target[q] + mid * h)] += phase[q] * a;
        }
        DenseState { d: self.d, registers: self.registers.clone(), amplitudes: out }
    }

    /// Applies a dense matrix to the listed qudits (first listed is least significant locally).
    pub fn apply_local(&self, qudits: &[usize], mat: &CMatrix) -> Result<DenseState> {
        let d = self.d as usize;
        let local = d.pow(qudits.len() as u32);
        if mat.nrows() != local || mat.ncols() != local {
            return Err(Error::WidthMismatch { expected: local, got: mat.nrows() });
        }
        let total = self.num_qudits();
        if qudits.iter().any(|&q| q >= total) {
            return Err(Error::InvalidInput("qudit index out of range".into()));
        }
        let strides: Vec<usize> = qudits.iter().map(|&q| d.pow(q as u32)).collect();
        let offsets: Vec<usize> = (0..local)
            .map(|l| point_of(d as i64, l, qudits.len()).iter().zip(&strides).map(|(&c, s)| c as usize * s).sum())
            .collect();
        let mut out = vec![C0; self.dim()];
        let mut buf = vec![C0; local];
        for base in 0..self.dim() {
            if strides.iter().any(|&s| (base / s) % d != 0) {
                continue;
            }
            for (l, b) in buf.iter_mut().enumerate() {
                *b = self.amplitudes[base + offsets[l]];
            }
            for r in 0..local {
                let mut acc = C0;
                for c in 0..local {
                    acc += mat[(r, c)] * buf[c];
                }
                out[base + offsets[r]] = acc;
            }
        }
        Ok(DenseState { d: self.d, registers: self.registers.clone(), amplitudes: out })
    }
}

/// Target and phase of `τ^e W_x` on each local basis state.
fn weyl_monomial(ctx: &PhaseContext, label: &WeylLabel) -> (Vec<usize>, Vec<Complex64>) {
    let n = label.n();
    let dim = (ctx.d as usize).pow(n as u32);
    let v = label.v();
    let w = label.w();
    let vw: i64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let base = ctx.tau_pow(label.tau_exponent + vw);
    let mut target = vec![0usize; dim];
    let mut phase = vec![C0; dim];
    for q in 0..dim {
        let qp = point_of(ctx.d, q, n);
        let qv: i64 = qp.iter().zip(v).map(|(a, b)| a * b).sum();
        let shifted: Point = qp.iter().zip(w).map(|(a, b)| a + b).collect();
        target[q] = crate::zmod::index_of(ctx.d, &shifted);
        phase[q] = base * ctx.omega_pow(qv);
    }
    (target, phase)
}

/// `(τ^e W_x)` applied to register `register`.
pub fn apply_weyl(state: &DenseState, register: usize, ctx: &PhaseContext, label: &WeylLabel) -> Result<DenseState> {
    let offset = state.check_register(register, label.n())?;
    let (target, phase) = weyl_monomial(ctx, label);
    Ok(state.apply_monomial(offset, label.n(), &target, &phase))
}

/// Dense matrix of `τ^e W_x`.
pub fn dense_weyl(ctx: &PhaseContext, label: &WeylLabel) -> Result<CMatrix> {
    let dim = checked_dim(ctx.d, label.n())?;
    if dim > 4096 {
        return Err(Error::CapExceeded("dense Weyl matrices are limited to 4096 rows".into()));
    }
    let (target, phase) = weyl_monomial(ctx, label);
    let mut m = CMatrix::zeros(dim, dim);
    for q in 0..dim {
        m[(target[q], q)] = phase[q];
    }
    Ok(m)
}

/// Basis permutation `Q ↦ Q R mod d` on `k = R.k` consecutive registers of `n` qudits.
fn br_permutation(d: i64, n: usize, r: &RMatrix) -> Result<Vec<usize>> {
    let k = r.k;
    let dim = (d as usize).pow((n * k) as u32);
    let mut perm = vec![usize::MAX; dim];
    let mut seen = vec![false; dim];
    for (idx, slot) in perm.iter_mut().enumerate() {
        let q = point_of(d, idx, n * k);
        let mut out = vec![0i64; n * k];
        for j in 0..n {
            for i in 0..k {
                let s: i64 = (0..k).map(|l| q[l * n + j] * r.entries[l][i]).sum();
                out[i * n + j] = s.rem_euclid(d);
            }
        }
        let t = crate::zmod::index_of(d, &out);
        if seen[t] {
            return Err(Error::NonInvertible(d));
        }
        seen[t] = true;
        *slot = t;
    }
    Ok(perm)
}

/// `B_R` (or `B_R^†` when `dagger`) on registers `first .. first + R.k`.
pub fn apply_br_on(state: &DenseState, first: usize, r: &RMatrix, dagger: bool) -> Result<DenseState> {
    if first + r.k > state.registers.len() {
        return Err(Error::InvalidInput("not enough registers for B_R".into()));
    }
    let n = state.registers[first];
    if state.registers[first..first + r.k].iter().any(|&w| w != n) {
        return Err(Error::InvalidInput("B_R needs registers of equal width".into()));
    }
    let perm = br_permutation(state.d, n, r)?;
    let target = if dagger {
        let mut inv = vec![0usize; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    } else {
        perm
    };
    let phase = vec![C1; target.len()];
    Ok(state.apply_monomial(state.register_offset(first), n * r.k, &target, &phase))
}

/// `B_R |Q⟩ = |Q R mod d⟩` on a state made of exactly `R.k` registers.
pub fn apply_br(state: &DenseState, r: &RMatrix) -> Result<DenseState> {
    if state.registers.len() != r.k {
        return Err(Error::InvalidInput(format!("B_R expects {} registers", r.k)));
    }
    apply_br_on(state, 0, r, false)
}

/// Dense matrix of `B_R` on `k` registers of `n` qudits.
pub fn dense_br(d: i64, n: usize, r: &RMatrix) -> Result<CMatrix> {
    let perm = br_permutation(d, n, r)?;
    let mut m = CMatrix::zeros(perm.len(), perm.len());
    for (i, &p) in perm.iter().enumerate() {
        m[(p, i)] = C1;
    }
    Ok(m)
}

/// Haar-random state on `n` qudits.
pub fn haar_random<R: Rng + ?Sized>(d: i64, n: usize, rng: &mut R) -> Result<DenseState> {
    let dim = checked_dim(d, n)?;
    let amps = (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    DenseState::new(d, vec![n], amps)
}

/// Haar-random `dim × dim` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..dim {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C1 };
        for i in 0..dim {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// `true` iff `U W U^†` is a phase times a Weyl operator for every generator `X_i`, `Z_i`.
pub fn is_clifford_gate(d: i64, u: &CMatrix) -> Result<bool> {
    let dim = u.nrows();
    if u.ncols() != dim {
        return Err(Error::NotUnitary);
    }
    let mut m = 0usize;
    let mut acc = 1usize;
    while acc < dim {
        acc *= d as usize;
        m += 1;
    }
    if acc != dim || m == 0 {
        return Err(Error::InvalidInput(format!("dimension {dim} is not a power of {d}")));
    }
    let uu = u * u.adjoint();
    if (uu - CMatrix::identity(dim, dim)).iter().any(|z| z.norm() > 1e-8) {
        return Err(Error::NotUnitary);
    }
    let ctx = PhaseContext::new(d, m)?;
    let labels: Vec<WeylLabel> = ctx.all_points().iter().map(|x| WeylLabel::new(&ctx, x)).collect();
    let monomials: Vec<_> = labels.iter().map(|l| weyl_monomial(&ctx, l)).collect();
    for gen in 0..2 * m {
        let mut x = vec![0i64; 2 * m];
        x[gen] = 1;
        let p = dense_weyl(&ctx, &WeylLabel::new(&ctx, &x))?;
        let conj = u * p * u.adjoint();
        let mut found = false;
        for (target, phase) in &monomials {
            let mut tr = C0;
            for q in 0..dim {
                tr += phase[q].conj() * conj[(target[q], q)];
            }
            let c = tr / dim as f64;
            if c.norm() > 1.0 - 1e-8 {
                let c_pow = (0..ctx.big_d).fold(C1, |a, _| a * c);
                found = (c_pow - C1).norm() < 1e-7;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One gate of a circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    /// `F`, `S`, `M`, `SUM`, `W`, `T` or `U`.
    pub kind: String,
    /// Target qudits.
    pub targets: Vec<usize>,
    /// Parameters: `[a]` for `M`, `[v, w]` for `W`, row-major `(re, im)` pairs for `U`.
    pub params: Vec<f64>,
}

/// Single-qudit Fourier gate `F|q⟩ = d^{-1/2} Σ_r ω^{qr} |r⟩`.
pub fn gate_f(ctx: &PhaseContext) -> CMatrix {
    let d = ctx.d as usize;
    let s = (d as f64).sqrt().recip();
    CMatrix::from_fn(d, d, |r, q| ctx.omega_pow((q * r) as i64) * s)
}

/// Phase gate `S|q⟩ = τ^{q(q+d)} |q⟩`.
pub fn gate_s(ctx: &PhaseContext) -> CMatrix {
    let d = ctx.d as usize;
    CMatrix::from_fn(d, d, |r, q| if r == q { ctx.tau_pow((q * (q + d)) as i64) } else { C0 })
}

/// Multiplier `M_a|q⟩ = |a q⟩`.
pub fn gate_m(ctx: &PhaseContext, a: i64) -> CMatrix {
    let d = ctx.d as usize;
    CMatrix::from_fn(d, d, |r, q| if r as i64 == (a * q as i64).rem_euclid(ctx.d) { C1 } else { C0 })
}

/// `SUM|q, r⟩ = |q, q + r⟩`; the first qudit is the local least significant digit.
pub fn gate_sum(ctx: &PhaseContext) -> CMatrix {
    let d = ctx.d as usize;
    CMatrix::from_fn(d * d, d * d, |out, inp| {
        let (q, r) = (inp % d, inp / d);
        if out == q + d * ((q + r) % d) {
            C1
        } else {
            C0
        }
    })
}

/// Deterministic non-Clifford gate `diag(e^{i π q^3 / (d D)})`.
pub fn gate_t(ctx: &PhaseContext) -> CMatrix {
    let d = ctx.d as usize;
    let denom = (ctx.d * ctx.big_d) as f64;
    CMatrix::from_fn(d, d, |r, q| {
        if r == q {
            Complex64::from_polar(1.0, std::f64::consts::PI * (q * q * q) as f64 / denom)
        } else {
            C0
        }
    })
}

/// Matrix of a gate.
pub fn gate_matrix(ctx: &PhaseContext, gate: &Gate) -> Result<CMatrix> {
    let d = ctx.d as usize;
    Ok(match gate.kind.as_str() {
        "F" => gate_f(ctx),
        "S" => gate_s(ctx),
        "M" => {
            let a = *gate.params.first().ok_or_else(|| Error::InvalidInput("M needs a".into()))? as i64;
            if mod_inv(a, ctx.d).is_none() {
                return Err(Error::InvalidInput(format!("M_{a} is not invertible")));
            }
            gate_m(ctx, a)
        }
        "SUM" => gate_sum(ctx),
        "W" => {
            if gate.params.len() != 2 {
                return Err(Error::InvalidInput("W needs [v, w]".into()));
            }
            let single = PhaseContext::new(ctx.d, 1)?;
            dense_weyl(&single, &WeylLabel::new(&single, &[gate.params[0] as i64, gate.params[1] as i64]))?
        }
        "T" => gate_t(ctx),
        "U" => {
            if gate.params.len() != 2 * d * d {
                return Err(Error::InvalidInput("U needs 2 d^2 parameters".into()));
            }
            CMatrix::from_fn(d, d, |r, c| {
                Complex64::new(gate.params[2 * (r * d + c)], gate.params[2 * (r * d + c) + 1])
            })
        }
        other => return Err(Error::InvalidInput(format!("unknown gate kind {other}"))),
    })
}

/// Gate sequence on `n` qudits starting from `|0…0⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    /// Local dimension.
    pub d: i64,
    /// Number of qudits.
    pub n: usize,
    /// Gates in application order.
    pub gates: Vec<Gate>,
    /// Number of gates that are not Clifford.
    #[serde(default)]
    pub doping_count: usize,
}

impl Circuit {
    /// Runs the circuit on `|0…0⟩`.
    pub fn run(&self) -> Result<DenseState> {
        let ctx = PhaseContext::new(self.d, 1)?;
        let mut s = DenseState::zero(self.d, self.n)?;
        for g in &self.gates {
            let m = gate_matrix(&ctx, g)?;
            s = s.apply_local(&g.targets, &m)?;
        }
        Ok(s)
    }

    /// Number of gates failing [`is_clifford_gate`].
    pub fn count_non_clifford(&self) -> Result<usize> {
        let ctx = PhaseContext::new(self.d, 1)?;
        let mut count = 0;
        for g in &self.gates {
            if !is_clifford_gate(self.d, &gate_matrix(&ctx, g)?)? {
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Non-Clifford gate used for doping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Doping {
    /// Haar-random single-qudit unitary, resampled until it is not Clifford.
    Haar,
    /// The deterministic gate [`gate_t`].
    Fixed,
}

fn random_clifford_gate<R: Rng + ?Sized>(ctx: &PhaseContext, n: usize, rng: &mut R) -> Gate {
    let units: Vec<i64> = (2..ctx.d).filter(|&a| mod_inv(a, ctx.d).is_some()).collect();
    loop {
        let q = rng.random_range(0..n);
        match rng.random_range(0..5) {
            0 => return Gate { kind: "F".into(), targets: vec![q], params: vec![] },
            1 => return Gate { kind: "S".into(), targets: vec![q], params: vec![] },
            2 if !units.is_empty() => {
                let a = units[rng.random_range(0..units.len())];
                return Gate { kind: "M".into(), targets: vec![q], params: vec![a as f64] };
            }
            3 if n >= 2 => {
                let mut t = rng.random_range(0..n - 1);
                if t >= q {
                    t += 1;
                }
                return Gate { kind: "SUM".into(), targets: vec![q, t], params: vec![] };
            }
            4 => {
                let v = rng.random_range(0..ctx.d) as f64;
                let w = rng.random_range(0..ctx.d) as f64;
                return Gate { kind: "W".into(), targets: vec![q], params: vec![v, w] };
            }
            _ => {}
        }
    }
}

/// Random Clifford circuit on `|0…0⟩` with exactly `t` non-Clifford single-qudit gates.
pub fn doped_clifford<R: Rng + ?Sized>(
    d: i64,
    n: usize,
    t: usize,
    doping: Doping,
    rng: &mut R,
) -> Result<(Circuit, DenseState)> {
    let ctx = PhaseContext::new(d, 1)?;
    let clifford_len = 6 * n * n + 6 * n + 4;
    let mut gates: Vec<Gate> = (0..clifford_len).map(|_| random_clifford_gate(&ctx, n, rng)).collect();
    for _ in 0..t {
        let q = rng.random_range(0..n);
        let gate = match doping {
            Doping::Fixed => Gate { kind: "T".into(), targets: vec![q], params: vec![] },
            Doping::Haar => loop {
                let u = haar_unitary(d as usize, rng);
                if !is_clifford_gate(d, &u)? {
                    let params = u.transpose().iter().flat_map(|z| [z.re, z.im]).collect();
                    break Gate { kind: "U".into(), targets: vec![q], params };
                }
            },
        };
        let pos = rng.random_range(0..=gates.len());
        gates.insert(pos, gate);
    }
    let mut circuit = Circuit { d, n, gates, doping_count: 0 };
    circuit.doping_count = circuit.count_non_clifford()?;
    let state = circuit.run()?;
    Ok((circuit, state))
}

/// Splits a basis index into (digits of register `a`, digits of register `b`, rest index).
struct PairSplit {
    a_of: Vec<usize>,
    b_of: Vec<usize>,
    rest_of: Vec<usize>,
    rest_regs: Vec<usize>,
    rest_dim: usize,
}

fn split_pair(state: &DenseState, a: usize, b: usize) -> Result<PairSplit> {
    if a == b || a >= state.registers.len() || b >= state.registers.len() {
        return Err(Error::InvalidInput("Bell measurement needs two distinct registers".into()));
    }
    if state.registers[a] != state.registers[b] {
        return Err(Error::WidthMismatch { expected: state.registers[a], got: state.registers[b] });
    }
    let d = state.d as usize;
    let total = state.num_qudits();
    let (oa, ob, n) = (state.register_offset(a), state.register_offset(b), state.registers[a]);
    let in_a = |j: usize| j >= oa && j < oa + n;
    let in_b = |j: usize| j >= ob && j < ob + n;
    let rest_regs: Vec<usize> =
        state.registers.iter().enumerate().filter(|(i, _)| *i != a && *i != b).map(|(_, &w)| w).collect();
    let rest_dim = d.pow(rest_regs.iter().sum::<usize>() as u32);
    let dim = state.dim();
    let (mut a_of, mut b_of, mut rest_of) = (vec![0; dim], vec![0; dim], vec![0; dim]);
    for i in 0..dim {
        let digits = point_of(state.d, i, total);
        let (mut ai, mut bi, mut ri) = (0usize, 0usize, 0usize);
        let (mut sa, mut sb, mut sr) = (1usize, 1usize, 1usize);
        for (j, &c) in digits.iter().enumerate() {
            let c = c as usize;
            if in_a(j) {
                ai += c * sa;
                sa *= d;
            } else if in_b(j) {
                bi += c * sb;
                sb *= d;
            } else {
                ri += c * sr;
                sr *= d;
            }
        }
        a_of[i] = ai;
        b_of[i] = bi;
        rest_of[i] = ri;
    }
    Ok(PairSplit { a_of, b_of, rest_of, rest_regs, rest_dim })
}

/// Projects registers `a`, `b` onto `|W_x⟩ = (W_x ⊗ I)|Φ⁺⟩`.
///
/// Returns the outcome probability and the normalised post-measurement state of
/// the remaining registers (`None` when the probability vanishes).
pub fn bell_project(
    state: &DenseState,
    a: usize,
    b: usize,
    ctx: &PhaseContext,
    x: &[i64],
) -> Result<(f64, Option<DenseState>)> {
    let split = split_pair(state, a, b)?;
    bell_project_split(state, &split, ctx, x)
}

fn bell_project_split(
    state: &DenseState,
    split: &PairSplit,
    ctx: &PhaseContext,
    x: &[i64],
) -> Result<(f64, Option<DenseState>)> {
    let n = ctx.n;
    if x.len() != 2 * n {
        return Err(Error::WidthMismatch { expected: 2 * n, got: x.len() });
    }
    let label = WeylLabel::new(ctx, x);
    let (target, phase) = weyl_monomial(ctx, &label);
    let scale = (ctx.dim() as f64).sqrt().recip();
    let mut rem = vec![C0; split.rest_dim];
    for (i, amp) in state.amplitudes.iter().enumerate() {
        let qb = split.b_of[i];
        if split.a_of[i] == target[qb] {
            rem[split.rest_of[i]] += phase[qb].conj() * scale * amp;
        }
    }
    let prob: f64 = rem.iter().map(|z| z.norm_sqr()).sum();
    if prob < 1e-300 {
        return Ok((prob, None));
    }
    let s = prob.sqrt();
    rem.iter_mut().for_each(|z| *z /= s);
    Ok((prob, Some(DenseState { d: state.d, registers: split.rest_regs.clone(), amplitudes: rem })))
}

/// Probability of every Bell outcome on registers `a`, `b`, in phase-space index order.
pub fn bell_outcome_table(state: &DenseState, a: usize, b: usize, ctx: &PhaseContext) -> Result<Vec<f64>> {
    let split = split_pair(state, a, b)?;
    ctx.all_points().iter().map(|x| bell_project_split(state, &split, ctx, x).map(|r| r.0)).collect()
}

/// Samples a Bell outcome on registers `a`, `b` by inverse CDF over the full table.
pub fn bell_sample_pair<R: Rng + ?Sized>(
    state: &DenseState,
    a: usize,
    b: usize,
    ctx: &PhaseContext,
    rng: &mut R,
) -> Result<(Point, DenseState)> {
    let table = bell_outcome_table(state, a, b, ctx)?;
    let idx = sample_index(&table, rng);
    let x = ctx.point(idx, 2 * ctx.n);
    let (_, rem) = bell_project(state, a, b, ctx, &x)?;
    Ok((x, rem.expect("sampled outcome has positive probability")))
}

/// Inverse-CDF draw from non-negative weights.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// `⟨ψ|τ^e W_x|ψ⟩` for a single-register state.
pub fn expectation_weyl(state: &DenseState, ctx: &PhaseContext, label: &WeylLabel) -> Result<Complex64> {
    let moved = apply_weyl(state, 0, ctx, label)?;
    state.inner(&moved)
}

/// `|⟨a|b⟩|^2`.
pub fn fidelity(a: &DenseState, b: &DenseState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `(W_x^j)` labels for `j = 0 .. d-1`.
pub fn weyl_powers(ctx: &PhaseContext, label: &WeylLabel) -> Vec<WeylLabel> {
    (0..ctx.d).map(|j| power(ctx, label, j)).collect()
}

/// State file layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    /// Local dimension.
    pub d: i64,
    /// Number of qudits.
    pub n: usize,
    /// Amplitudes as `[re, im]` pairs in basis order.
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateFile {
    /// Serialisable form of a single-register state.
    pub fn from_state(s: &DenseState) -> Self {
        Self { d: s.d, n: s.num_qudits(), amplitudes: s.amplitudes.iter().map(|z| [z.re, z.im]).collect() }
    }

    /// Validates and converts into a state.
    pub fn into_state(self) -> Result<DenseState> {
        let expected = checked_dim(self.d, self.n)?;
        if self.amplitudes.len() != expected {
            return Err(Error::InvalidInput(format!(
                "field `amplitudes`: expected {expected} entries, found {}",
                self.amplitudes.len()
            )));
        }
        let amps: Vec<Complex64> = self.amplitudes.iter().map(|a| Complex64::new(a[0], a[1])).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() <= 1e-12 {
            return Ok(DenseState::raw(self.d, vec![self.n], amps));
        }
        DenseState::new(self.d, vec![self.n], amps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_examples() {
        let c2 = PhaseContext::new(2, 1).unwrap();
        let z = dense_weyl(&c2, &WeylLabel::new(&c2, &[1, 0])).unwrap();
        assert!((z[(1, 1)] + C1).norm() < 1e-12 && (z[(0, 0)] - C1).norm() < 1e-12);
        let y = dense_weyl(&c2, &WeylLabel::new(&c2, &[1, 1])).unwrap();
        let i = Complex64::new(0.0, 1.0);
        assert!((y[(0, 1)] + i).norm() < 1e-12 && (y[(1, 0)] - i).norm() < 1e-12);
        let s = apply_weyl(&DenseState::zero(2, 1).unwrap(), 0, &c2, &WeylLabel::new(&c2, &[1, 1])).unwrap();
        assert!((s.amplitudes()[1] - i).norm() < 1e-12);
        let c3 = PhaseContext::new(3, 1).unwrap();
        let s = apply_weyl(&DenseState::zero(3, 1).unwrap(), 0, &c3, &WeylLabel::new(&c3, &[0, 1])).unwrap();
        assert!((s.amplitudes()[1] - C1).norm() < 1e-12);
    }

    #[test]
    fn clifford_admission() {
        for d in 2..=6 {
            let ctx = PhaseContext::new(d, 1).unwrap();
            assert!(is_clifford_gate(d, &gate_f(&ctx)).unwrap(), "F, d={d}");
            assert!(is_clifford_gate(d, &gate_s(&ctx)).unwrap(), "S, d={d}");
            assert!(is_clifford_gate(d, &gate_sum(&ctx)).unwrap(), "SUM, d={d}");
            assert!(!is_clifford_gate(d, &gate_t(&ctx)).unwrap(), "T, d={d}");
            assert!(is_clifford_gate(d, &CMatrix::identity(d as usize, d as usize)).unwrap());
        }
        let ctx = PhaseContext::new(2, 1).unwrap();
        let t = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C1,
            Complex64::from_polar(1.0, std::f64::consts::PI / 8.0),
        ]));
        assert!(!is_clifford_gate(2, &t).unwrap());
        assert!(is_clifford_gate(2, &gate_m(&ctx, 1)).unwrap());
    }

    #[test]
    fn bell_examples() {
        let c2 = PhaseContext::new(2, 1).unwrap();
        let zz = DenseState::basis(2, vec![1, 1], 0).unwrap();
        let table = bell_outcome_table(&zz, 0, 1, &c2).unwrap();
        // Points (v, w): (0,0) and (1,0) carry weight 1/2.
        assert!((table[0] - 0.5).abs() < 1e-12 && (table[1] - 0.5).abs() < 1e-12);
        assert!(table[2].abs() < 1e-12 && table[3].abs() < 1e-12);
        let phi = DenseState::new(2, vec![1, 1], vec![C1, C0, C0, C1]).unwrap();
        let table = bell_outcome_table(&phi, 0, 1, &c2).unwrap();
        assert!((table[0] - 1.0).abs() < 1e-12);
    }
}
