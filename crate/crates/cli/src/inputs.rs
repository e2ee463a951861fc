//! Input state families for experiments.

use num_complex::Complex64;
use qbell_core::algorithms::{fidelity_fixture, magic_state};
use qbell_core::qstate::{doped_clifford, haar_random, DenseState, Doping};
use qbell_core::stabiliser::{random_stabiliser_group, stabiliser_state};
use qbell_core::zmod::PhaseContext;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::args::{InputKind, RunArgs};
use crate::error::{CliError, Result};
use crate::io::{load_group, load_state};

/// `φ_0 ⊗ φ_1 ⊗ …` as one register, qudit 0 least significant.
pub fn product_state(d: i64, factors: &[DenseState]) -> Result<DenseState> {
    let n = factors.len();
    let du = d as usize;
    let dim = du.pow(n as u32);
    let amps = (0..dim)
        .map(|idx| {
            let mut rest = idx;
            factors.iter().fold(Complex64::new(1.0, 0.0), |acc, f| {
                let a = f.amplitudes()[rest % du];
                rest /= du;
                acc * a
            })
        })
        .collect();
    Ok(DenseState::new(d, vec![n], amps)?)
}

/// `|m⟩^{⊗n}` for the single-qudit magic state `|m⟩`.
pub fn magic_product(d: i64, n: usize) -> Result<DenseState> {
    let m = magic_state(d)?;
    product_state(d, &vec![m; n])
}

/// Random product of at least `t` single-qudit stabiliser states, the rest magic states.
///
/// Its stabiliser size is at least `d^t`.
pub fn size_fixture<R: Rng + ?Sized>(d: i64, n: usize, t: usize, rng: &mut R) -> Result<DenseState> {
    let ctx1 = PhaseContext::new(d, 1)?;
    let stab_count = rng.random_range(t..=n);
    let mut kinds: Vec<bool> = (0..n).map(|i| i < stab_count).collect();
    kinds.shuffle(rng);
    let magic = magic_state(d)?;
    let factors = kinds
        .iter()
        .map(
            |&is_stab| {
                if is_stab {
                    Ok(stabiliser_state(&random_stabiliser_group(&ctx1, rng)?)?)
                } else {
                    Ok(magic.clone())
                }
            },
        )
        .collect::<Result<Vec<_>>>()?;
    product_state(d, &factors)
}

/// State with stabiliser fidelity `target` between `|0…0⟩` and the magic product.
pub fn fidelity_path_state(d: i64, n: usize, target: f64) -> Result<DenseState> {
    let zero = DenseState::zero(d, n)?;
    Ok(fidelity_fixture(&zero, &magic_product(d, n)?, target)?)
}

/// Produces the input state of each trial.
pub struct InputSource {
    kind: InputKind,
    d: i64,
    n: usize,
    t: usize,
    fixed: Option<DenseState>,
}

impl InputSource {
    /// Prepares a source; fixed states are loaded or built once here.
    pub fn new(kind: InputKind, args: &RunArgs) -> Result<Self> {
        let (d, n, t) = (args.d, args.n, args.t);
        let fixed = match kind {
            InputKind::Zero => Some(DenseState::zero(d, n)?),
            InputKind::Magic => Some(magic_product(d, n)?),
            InputKind::Near => Some(fidelity_path_state(d, n, 1.0 - args.eps1)?),
            InputKind::Far => Some(fidelity_path_state(d, n, 1.0 - args.eps2)?),
            InputKind::File => {
                let path = args.state.as_deref().ok_or_else(|| CliError::Usage("--input file needs --state".into()))?;
                Some(load_state(path)?)
            }
            InputKind::Group => {
                let path =
                    args.group.as_deref().ok_or_else(|| CliError::Usage("--input group needs --group".into()))?;
                Some(stabiliser_state(&load_group(path)?)?)
            }
            InputKind::Stabiliser | InputKind::Haar | InputKind::Product | InputKind::Doped => None,
        };
        if let Some(s) = &fixed {
            if s.d != d || s.num_qudits() != n {
                return Err(CliError::Usage(format!(
                    "input state has d = {}, n = {} but the run asks for d = {d}, n = {n}",
                    s.d,
                    s.num_qudits()
                )));
            }
        }
        Ok(Self { kind, d, n, t, fixed })
    }

    /// The state shared by every trial, for fixed inputs.
    pub fn fixed(&self) -> Option<&DenseState> {
        self.fixed.as_ref()
    }

    /// The state of one trial.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DenseState> {
        if let Some(s) = &self.fixed {
            return Ok(s.clone());
        }
        let (d, n) = (self.d, self.n);
        match self.kind {
            InputKind::Stabiliser => Ok(stabiliser_state(&random_stabiliser_group(&PhaseContext::new(d, n)?, rng)?)?),
            InputKind::Haar => Ok(haar_random(d, n, rng)?),
            InputKind::Product => size_fixture(d, n, self.t, rng),
            InputKind::Doped => Ok(doped_clifford(d, n, self.t, Doping::Haar, rng)?.1),
            _ => unreachable!("fixed inputs are prepared up front"),
        }
    }
}
