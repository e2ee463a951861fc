//! Weyl labels, characteristic functions and symplectic Fourier analysis.
//!
//! A label `x = (v, w)` names `W_x = τ^{⟨v,w⟩} X^w Z^v`, acting as
//! `W_x|q⟩ = τ^{⟨v,w⟩} ω^{⟨q,v⟩} |q + w⟩`. Tables over `Z_d^{2n}` are dense and
//! indexed by `Σ x_i d^i` with `v` first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::DenseState;
use crate::zmod::{symplectic_product_z, PhaseContext, Point, Submodule};

/// Largest `n` for dense phase-space tables.
pub const MAX_TABLE_N: usize = 3;
/// Largest `d` for dense phase-space tables.
pub const MAX_TABLE_D: i64 = 6;

/// The operator `τ^{tau_exponent} W_x` with `x` in `[0, d)^{2n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeylLabel {
    /// Phase-space point `(v, w)`.
    pub x: Point,
    /// Global phase exponent of `τ`, modulo `D`.
    pub tau_exponent: i64,
}

impl WeylLabel {
    /// `W_x` with no extra phase; `x` is reduced modulo `d`.
    pub fn new(ctx: &PhaseContext, x: &[i64]) -> Self {
        Self { x: x.iter().map(|&c| ctx.md(c)).collect(), tau_exponent: 0 }
    }

    /// The identity on `n` qudits.
    pub fn identity(ctx: &PhaseContext) -> Self {
        Self { x: vec![0; 2 * ctx.n], tau_exponent: 0 }
    }

    /// Label of `W_y` for an integer (unreduced) vector `y`.
    ///
    /// `W_y = τ^{⟨v',w'⟩ - ⟨v,w⟩} W_{y mod d}` where `(v', w')` is the lift.
    pub fn from_lifted(ctx: &PhaseContext, y: &[i64]) -> Self {
        let n = y.len() / 2;
        let x: Point = y.iter().map(|&c| ctx.md(c)).collect();
        let lifted: i64 = (0..n).map(|i| y[i] * y[n + i]).sum();
        let canon: i64 = (0..n).map(|i| x[i] * x[n + i]).sum();
        Self { x, tau_exponent: (lifted - canon).rem_euclid(ctx.big_d) }
    }

    /// `v` part.
    pub fn v(&self) -> &[i64] {
        &self.x[..self.x.len() / 2]
    }

    /// `w` part.
    pub fn w(&self) -> &[i64] {
        &self.x[self.x.len() / 2..]
    }

    /// Number of qudits the label acts on.
    pub fn n(&self) -> usize {
        self.x.len() / 2
    }

    /// Scalar `τ^{tau_exponent}`.
    pub fn phase(&self, ctx: &PhaseContext) -> Complex64 {
        ctx.tau_pow(self.tau_exponent)
    }
}

/// `(τ^a W_x)(τ^b W_y) = τ^{a + b + [x,y]} W_{x+y}`, with `x + y` reduced.
pub fn compose(ctx: &PhaseContext, a: &WeylLabel, b: &WeylLabel) -> Result<WeylLabel> {
    if a.x.len() != b.x.len() {
        return Err(Error::ContextMismatch(format!("labels of length {} and {}", a.x.len(), b.x.len())));
    }
    let sum: Vec<i64> = a.x.iter().zip(&b.x).map(|(p, q)| p + q).collect();
    let mut out = WeylLabel::from_lifted(ctx, &sum);
    out.tau_exponent =
        (out.tau_exponent + a.tau_exponent + b.tau_exponent + symplectic_product_z(&a.x, &b.x)).rem_euclid(ctx.big_d);
    Ok(out)
}

/// `(τ^a W_x)^m = τ^{a m} W_{m x}` for any integer `m`.
pub fn power(ctx: &PhaseContext, a: &WeylLabel, m: i64) -> WeylLabel {
    let scaled: Vec<i64> = a.x.iter().map(|&c| c * m).collect();
    let mut out = WeylLabel::from_lifted(ctx, &scaled);
    out.tau_exponent = (out.tau_exponent + a.tau_exponent * m).rem_euclid(ctx.big_d);
    out
}

/// Dense table of values over `(Z_d^{2n})^{arity}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable<T> {
    /// Local dimension.
    pub d: i64,
    /// Number of qudits.
    pub n: usize,
    /// Number of phase-space arguments.
    pub arity: usize,
    /// Values in mixed-radix order, first argument least significant.
    pub values: Vec<T>,
}

impl<T: Copy> PhaseTable<T> {
    /// Value at `x` for an arity-1 table.
    pub fn at(&self, x: &[i64]) -> T {
        self.values[crate::zmod::index_of(self.d, x)]
    }

    /// Context of the table.
    pub fn ctx(&self) -> PhaseContext {
        PhaseContext::new(self.d, self.n).expect("table context is valid")
    }
}

impl PhaseTable<f64> {
    /// Real table as a complex one.
    pub fn to_complex(&self) -> PhaseTable<Complex64> {
        PhaseTable {
            d: self.d,
            n: self.n,
            arity: self.arity,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_table_caps(ctx: &PhaseContext) -> Result<()> {
    if ctx.n > MAX_TABLE_N || ctx.d > MAX_TABLE_D {
        return Err(Error::CapExceeded(format!("phase-space tables need n <= {MAX_TABLE_N} and d <= {MAX_TABLE_D}")));
    }
    Ok(())
}

/// In-place DFT along each base-`d` axis: axis `a` uses kernel `ω^{sign_a · k · x}`.
pub(crate) fn dft_axes(ctx: &PhaseContext, data: &mut [Complex64], signs: &[i64]) {
    let d = ctx.d as usize;
    let mut stride = 1usize;
    let mut line = vec![Complex64::new(0.0, 0.0); d];
    for &sign in signs {
        let block = stride * d;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (k, slot) in line.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..d {
                        acc += ctx.omega_pow(sign * (k * x) as i64) * data[base + x * stride];
                    }
                    *slot = acc;
                }
                for (k, val) in line.iter().enumerate() {
                    data[base + k * stride] = *val;
                }
            }
        }
        stride = block;
    }
}

/// `⟨ψ|W_x|ψ⟩` for every `x`, computed one shift `w` at a time.
pub fn weyl_expectations(ctx: &PhaseContext, amps: &[Complex64]) -> Vec<Complex64> {
    let dim = ctx.dim();
    assert_eq!(amps.len(), dim);
    let n = ctx.n;
    let add = add_table(ctx.d, n);
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    let signs = vec![1i64; n];
    let points: Vec<Point> = (0..dim).map(|i| ctx.point(i, n)).collect();
    let mut g = vec![Complex64::new(0.0, 0.0); dim];
    for wi in 0..dim {
        for q in 0..dim {
            g[q] = amps[add[q * dim + wi]].conj() * amps[q];
        }
        dft_axes(ctx, &mut g, &signs);
        let w = &points[wi];
        for vi in 0..dim {
            let v = &points[vi];
            let vw: i64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            out[vi + dim * wi] = ctx.tau_pow(vw) * g[vi];
        }
    }
    out
}

/// Table `add[a * dim + b]` = index of `a + b` in `Z_d^len`.
pub(crate) fn add_table(d: i64, len: usize) -> Vec<usize> {
    let dim = (d as usize).pow(len as u32);
    let pts: Vec<Point> = (0..dim).map(|i| crate::zmod::point_of(d, i, len)).collect();
    let mut out = vec![0usize; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let s: Vec<i64> = pts[a].iter().zip(&pts[b]).map(|(x, y)| x + y).collect();
            out[a * dim + b] = crate::zmod::index_of(d, &s);
        }
    }
    out
}

fn single_register(psi: &DenseState) -> Result<PhaseContext> {
    let n = psi.num_qudits();
    let ctx = PhaseContext::new(psi.d, n)?;
    check_table_caps(&ctx)?;
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalised(norm));
    }
    Ok(ctx)
}

/// `c_ψ(x) = d^{-n/2} ⟨ψ|W_x^†|ψ⟩`.
pub fn characteristic_table(psi: &DenseState) -> Result<PhaseTable<Complex64>> {
    let ctx = single_register(psi)?;
    let scale = (ctx.dim() as f64).sqrt().recip();
    let values = weyl_expectations(&ctx, psi.amplitudes()).iter().map(|e| e.conj() * scale).collect();
    Ok(PhaseTable { d: ctx.d, n: ctx.n, arity: 1, values })
}

/// `p_ψ(x) = d^{-n} |⟨ψ|W_x|ψ⟩|^2`.
pub fn p_table(psi: &DenseState) -> Result<PhaseTable<f64>> {
    let ctx = single_register(psi)?;
    let scale = (ctx.dim() as f64).recip();
    let values = weyl_expectations(&ctx, psi.amplitudes()).iter().map(|e| e.norm_sqr() * scale).collect();
    Ok(PhaseTable { d: ctx.d, n: ctx.n, arity: 1, values })
}

/// Index of `(w, v)` given the index of `(v, w)`.
fn swap_index(ctx: &PhaseContext, idx: usize) -> usize {
    let dim = ctx.dim();
    (idx % dim) * dim + idx / dim
}

/// `f̂(y) = d^{-2n} Σ_x ω^{[y,x]} f(x)`.
pub fn symplectic_fourier(f: &PhaseTable<Complex64>) -> Result<PhaseTable<Complex64>> {
    if f.arity != 1 {
        return Err(Error::InvalidInput("Fourier transform needs an arity-1 table".into()));
    }
    let ctx = f.ctx();
    let mut g = f.values.clone();
    let signs: Vec<i64> = (0..2 * ctx.n).map(|a| if a < ctx.n { -1 } else { 1 }).collect();
    dft_axes(&ctx, &mut g, &signs);
    let scale = (ctx.num_points() as f64).recip();
    let values = (0..g.len()).map(|y| g[swap_index(&ctx, y)] * scale).collect();
    Ok(PhaseTable { d: f.d, n: f.n, arity: 1, values })
}

/// `(f ∗ g)(x) = d^{-2n} Σ_y f(y) g(x - y)`.
pub fn convolve(f: &PhaseTable<Complex64>, g: &PhaseTable<Complex64>) -> Result<PhaseTable<Complex64>> {
    if f.d != g.d || f.n != g.n || f.arity != 1 || g.arity != 1 {
        return Err(Error::ContextMismatch("convolution operands differ".into()));
    }
    let ctx = f.ctx();
    let np = ctx.num_points();
    let pts = ctx.all_points();
    let scale = (np as f64).recip();
    let values = (0..np)
        .map(|x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..np {
                let diff: Vec<i64> = pts[x].iter().zip(&pts[y]).map(|(a, b)| a - b).collect();
                acc += f.values[y] * g.values[ctx.index(&diff)];
            }
            acc * scale
        })
        .collect();
    Ok(PhaseTable { d: f.d, n: f.n, arity: 1, values })
}

/// Mass of an arity-1 table on `sub`, or of an arity-`k` table on `sub^k`.
pub fn mass_on(sub: &Submodule, f: &PhaseTable<f64>) -> f64 {
    let elems: Vec<usize> = sub.elements().iter().map(|x| crate::zmod::index_of(f.d, x)).collect();
    let np = (f.d as usize).pow(2 * f.n as u32);
    let mut idx = vec![0usize; f.arity];
    let mut total = 0.0;
    loop {
        let mut flat = 0usize;
        for &i in idx.iter().rev() {
            flat = flat * np + elems[i];
        }
        total += f.values[flat];
        let mut k = 0;
        loop {
            if k == f.arity {
                return total;
            }
            idx[k] += 1;
            if idx[k] < elems.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifted_labels_are_consistent() {
        let ctx = PhaseContext::new(2, 1).unwrap();
        let w = WeylLabel::from_lifted(&ctx, &[1, 1]);
        assert_eq!(w.tau_exponent, 0);
        let w = WeylLabel::from_lifted(&ctx, &[3, 1]);
        assert_eq!(w.x, vec![1, 1]);
        assert_eq!(w.tau_exponent, 2);
    }

    #[test]
    fn power_cycles() {
        for d in 2..=6 {
            let ctx = PhaseContext::new(d, 1).unwrap();
            for x in ctx.all_points() {
                let a = WeylLabel::new(&ctx, &x);
                assert_eq!(power(&ctx, &a, d), WeylLabel::identity(&ctx));
                assert_eq!(power(&ctx, &a, 1), a);
                let mut acc = WeylLabel::identity(&ctx);
                for _ in 0..d {
                    acc = compose(&ctx, &acc, &a).unwrap();
                }
                assert_eq!(acc, WeylLabel::identity(&ctx));
            }
        }
    }
}
