//! Stabiliser groups and states, unsigned stabiliser groups and fidelity oracles.
//!
//! A group element `ω^{s} W_x` stabilises `|S⟩`, so `W_x|S⟩ = ω^{-s}|S⟩`.
//! Elements are stored as `τ^e W_x` with exact phase bookkeeping, which keeps
//! a single code path for odd and even `d`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{compose, power, weyl_expectations, WeylLabel};
use crate::qstate::{apply_weyl, dense_weyl, CMatrix, DenseState};
use crate::zmod::{
    canonicalize, index_of, is_isotropic, point_of, symplectic_complement, symplectic_product, symplectic_product_z,
    PhaseContext, Point, Submodule,
};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Largest phase-space size `d^{2n}` accepted by the enumeration oracles.
pub const MAX_ENUMERATION_POINTS: usize = 1296;

/// Commuting Weyl labels with phases, spanning an isotropic submodule.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialStabiliserGroup {
    ctx: PhaseContext,
    generators: Vec<(Point, i64)>,
    module: Submodule,
    elements: Vec<WeylLabel>,
}

/// `s` with `τ^e = ω^s`; `None` when `e` is odd for even `d`.
fn tau_to_omega(ctx: &PhaseContext, e: i64) -> Option<i64> {
    let e = e.rem_euclid(ctx.big_d);
    if ctx.d % 2 == 0 {
        (e % 2 == 0).then_some(e / 2)
    } else {
        Some((e * (ctx.d + 1) / 2).rem_euclid(ctx.d))
    }
}

impl PartialStabiliserGroup {
    /// Validates generators `(x, s)` standing for `ω^s W_x`.
    pub fn new(ctx: &PhaseContext, generators: Vec<(Point, i64)>) -> Result<Self> {
        let m = 2 * ctx.n;
        for (x, _) in &generators {
            if x.len() != m {
                return Err(Error::WidthMismatch { expected: m, got: x.len() });
            }
        }
        let generators: Vec<(Point, i64)> =
            generators.into_iter().map(|(x, s)| (x.iter().map(|&c| ctx.md(c)).collect(), ctx.md(s))).collect();
        for (i, (a, _)) in generators.iter().enumerate() {
            for (b, _) in &generators[i + 1..] {
                if symplectic_product(a, b, ctx.d) != 0 {
                    return Err(Error::InvalidGroup(format!("generators {a:?} and {b:?} do not commute")));
                }
            }
        }
        let labels: Vec<WeylLabel> = generators
            .iter()
            .map(|(x, s)| {
                let mut l = WeylLabel::new(ctx, x);
                l.tau_exponent = (2 * s).rem_euclid(ctx.big_d);
                l
            })
            .collect();
        let mut seen: HashMap<Point, i64> = HashMap::new();
        let identity = WeylLabel::identity(ctx);
        seen.insert(identity.x.clone(), 0);
        let mut queue = VecDeque::from([identity]);
        let mut elements = Vec::new();
        while let Some(el) = queue.pop_front() {
            for g in &labels {
                let next = compose(ctx, &el, g)?;
                match seen.get(&next.x) {
                    Some(&e) if e != next.tau_exponent => {
                        return Err(Error::InvalidGroup(format!(
                            "the group contains a nontrivial multiple of W_{:?}",
                            next.x
                        )));
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(next.x.clone(), next.tau_exponent);
                        queue.push_back(next);
                    }
                }
            }
            elements.push(el);
        }
        elements.sort_by_key(|l| index_of(ctx.d, &l.x));
        let module = canonicalize(ctx.d, m, &generators.iter().map(|g| g.0.clone()).collect::<Vec<_>>());
        debug_assert_eq!(module.size() as usize, elements.len());
        Ok(Self { ctx: ctx.clone(), generators, module, elements })
    }

    /// Context.
    pub fn ctx(&self) -> &PhaseContext {
        &self.ctx
    }

    /// Generators `(x, s)`.
    pub fn generators(&self) -> &[(Point, i64)] {
        &self.generators
    }

    /// Span of the generator labels.
    pub fn module(&self) -> &Submodule {
        &self.module
    }

    /// Every element as `τ^e W_x`, sorted by label index.
    pub fn elements(&self) -> &[WeylLabel] {
        &self.elements
    }

    /// `s(x)` for a label in the group.
    pub fn phase_of(&self, x: &[i64]) -> Option<i64> {
        let idx = index_of(self.ctx.d, x);
        let pos = self.elements.binary_search_by_key(&idx, |l| index_of(self.ctx.d, &l.x)).ok()?;
        tau_to_omega(&self.ctx, self.elements[pos].tau_exponent)
    }

    /// Same submodule with phases shifted by `s(x) ↦ s(x) + [z, x]`.
    pub fn shifted(&self, z: &[i64]) -> Result<Self> {
        let gens = self.generators.iter().map(|(x, s)| (x.clone(), s + symplectic_product(z, x, self.ctx.d))).collect();
        Self::new(&self.ctx, gens)
    }
}

/// A partial stabiliser group whose label module is Lagrangian.
#[derive(Clone, Debug, PartialEq)]
pub struct StabiliserGroup(PartialStabiliserGroup);

impl std::ops::Deref for StabiliserGroup {
    type Target = PartialStabiliserGroup;
    fn deref(&self) -> &PartialStabiliserGroup {
        &self.0
    }
}

impl StabiliserGroup {
    /// Validates generators and checks that they span a Lagrangian submodule.
    pub fn new(ctx: &PhaseContext, generators: Vec<(Point, i64)>) -> Result<Self> {
        let g = PartialStabiliserGroup::new(ctx, generators)?;
        let target = (ctx.d as u128).pow(ctx.n as u32);
        if g.module.size() != target {
            return Err(Error::InvalidGroup(format!("label module has size {}, not {target}", g.module.size())));
        }
        Ok(Self(g))
    }

    /// The Lagrangian label module.
    pub fn lagrangian(&self) -> &Submodule {
        &self.0.module
    }

    /// The underlying partial group.
    pub fn as_partial(&self) -> &PartialStabiliserGroup {
        &self.0
    }

    /// Same Lagrangian with phases shifted by `[z, ·]`.
    pub fn shifted(&self, z: &[i64]) -> Result<Self> {
        Ok(Self(self.0.shifted(z)?))
    }
}

/// Generator record of the group file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    /// `v` part of the label.
    pub v: Vec<i64>,
    /// `w` part of the label.
    pub w: Vec<i64>,
    /// Phase exponent of `ω`.
    pub s: i64,
}

/// Stabiliser group file layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    /// Local dimension.
    pub d: i64,
    /// Number of qudits.
    pub n: usize,
    /// Generators.
    pub generators: Vec<GeneratorRecord>,
}

impl GroupFile {
    /// Serialisable form of a group.
    pub fn from_group(g: &StabiliserGroup) -> Self {
        let n = g.ctx.n;
        Self {
            d: g.ctx.d,
            n,
            generators: g
                .generators
                .iter()
                .map(|(x, s)| GeneratorRecord { v: x[..n].to_vec(), w: x[n..].to_vec(), s: *s })
                .collect(),
        }
    }

    /// Validates and converts into a group.
    pub fn into_group(self) -> Result<StabiliserGroup> {
        let ctx = PhaseContext::new(self.d, self.n)?;
        let mut gens = Vec::with_capacity(self.generators.len());
        for (i, g) in self.generators.into_iter().enumerate() {
            if g.v.len() != self.n || g.w.len() != self.n {
                return Err(Error::InvalidInput(format!("field `generators[{i}]`: v and w need {} entries", self.n)));
            }
            let mut x = g.v;
            x.extend(g.w);
            gens.push((x, g.s));
        }
        StabiliserGroup::new(&ctx, gens)
    }
}

fn apply_label_raw(ctx: &PhaseContext, state: &DenseState, label: &WeylLabel) -> DenseState {
    apply_weyl(state, 0, ctx, label).expect("label width matches the register")
}

/// The unique state stabilised by `group`, as the normalised first nonzero column of its projector.
pub fn stabiliser_state(group: &StabiliserGroup) -> Result<DenseState> {
    let ctx = group.ctx();
    let dim = ctx.dim();
    for u in 0..dim {
        let basis = DenseState::basis(ctx.d, vec![ctx.n], u)?;
        let mut acc = vec![C0; dim];
        for el in group.elements() {
            let moved = apply_label_raw(ctx, &basis, el);
            for (a, b) in acc.iter_mut().zip(moved.amplitudes()) {
                *a += b;
            }
        }
        let norm_sqr: f64 = acc.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr > 1e-12 {
            return DenseState::new(ctx.d, vec![ctx.n], acc);
        }
    }
    Err(Error::NoValidU)
}

/// Exponents `(a, b, target)` of `ω^a τ^b |target⟩ = Π_i (ω^{s_i} W_{x_i})^{q_i} |u⟩` over the integers.
fn closed_form_term(ctx: &PhaseContext, gens: &[(Point, i64)], q: &[i64], u: &[i64]) -> (i64, i64, Point) {
    let n = ctx.n;
    let mut vq = vec![0i64; n];
    let mut wq = vec![0i64; n];
    let mut omega_exp = 0i64;
    for (k, (x, s)) in gens.iter().enumerate() {
        omega_exp += q[k] * s;
        for r in 0..n {
            vq[r] += q[k] * x[r];
            wq[r] += q[k] * x[n + r];
        }
    }
    omega_exp += (0..n).map(|r| vq[r] * u[r]).sum::<i64>();
    let mut tau_exp: i64 = (0..n).map(|r| vq[r] * wq[r]).sum();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            tau_exp += q[i] * q[j] * symplectic_product_z(&gens[i].0, &gens[j].0);
        }
    }
    let target = (0..n).map(|r| wq[r] + u[r]).collect();
    (omega_exp, tau_exp, target)
}

/// The stabiliser state from the generator-matrix closed form.
///
/// With `V`, `W` the `n × ℓ` matrices of generator parts and `s` their phases,
/// `|S⟩ = (d^ℓ |null(W)|)^{-1/2} Σ_q ω^{q·(s + Vᵀu)} τ^{qᵀVᵀWq + Σ_{i<j} q_i q_j [x_i, x_j]} |Wq + u⟩`.
/// The offset `u` must make every term with `q ∈ null(W)` equal to `1`. For odd `d` this
/// is `s + Vᵀu ∈ row(W)`; for even `d` the `τ` exponent adds a sign on some of those terms.
pub fn stabiliser_state_closed_form(group: &StabiliserGroup) -> Result<DenseState> {
    let ctx = group.ctx();
    let (d, n) = (ctx.d, ctx.n);
    let gens = group.generators();
    let l = gens.len();
    let row_w: Vec<Point> = (0..n).map(|r| gens.iter().map(|(x, _)| x[n + r]).collect()).collect();
    let null_w = crate::zmod::kernel_mod_d(d, l, &row_w);
    let u = (0..ctx.dim())
        .map(|i| point_of(d, i, n))
        .find(|u| {
            null_w.basis().iter().all(|q| {
                let (a, b, _) = closed_form_term(ctx, gens, q, u);
                (2 * a + b).rem_euclid(ctx.big_d) == 0
            })
        })
        .ok_or(Error::NoValidU)?;
    let count = (d as usize).pow(l as u32);
    let norm = ((count as f64) * null_w.size() as f64).sqrt().recip();
    let mut amps = vec![C0; ctx.dim()];
    for qi in 0..count {
        let q = point_of(d, qi, l);
        let (a, b, target) = closed_form_term(ctx, gens, &q, &u);
        amps[index_of(d, &target)] += ctx.omega_pow(a) * ctx.tau_pow(b) * norm;
    }
    DenseState::from_normalised(d, vec![n], amps)
}

/// `Π_X = |X|^{-1} Σ_{x∈X} ω^{s(x)} W_x` as a dense matrix.
pub fn stabiliser_projector(group: &PartialStabiliserGroup) -> Result<CMatrix> {
    let ctx = group.ctx();
    let dim = ctx.dim();
    let mut p = CMatrix::zeros(dim, dim);
    for el in group.elements() {
        p += dense_weyl(ctx, el)?;
    }
    Ok(p / Complex64::new(group.elements().len() as f64, 0.0))
}

/// Labels whose Weyl operators fix a state up to a phase, with those phases.
#[derive(Clone, Debug, PartialEq)]
pub struct UnsignedGroup {
    /// Context.
    pub ctx: PhaseContext,
    /// The isotropic label module.
    pub module: Submodule,
    /// `(x, s)` with `⟨ψ|W_x|ψ⟩ = ω^{-s}`, for every element of the module.
    pub phases: Vec<(Point, i64)>,
}

/// `Weyl(|ψ⟩)` computed with tolerance `tol` on `|⟨ψ|W_x|ψ⟩| = 1`.
pub fn unsigned_group(psi: &DenseState, tol: f64) -> Result<UnsignedGroup> {
    let n = psi.num_qudits();
    let ctx = PhaseContext::new(psi.d, n)?;
    if ctx.num_points() > 1 << 22 {
        return Err(Error::CapExceeded("d^{2n} labels exceed 2^22".into()));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalised(norm));
    }
    let ex = weyl_expectations(&ctx, psi.amplitudes());
    let mut phases = Vec::new();
    for (i, e) in ex.iter().enumerate() {
        let a = e.norm();
        if a > 1.0 - 10.0 * tol && a < 1.0 - tol {
            return Err(Error::ToleranceAmbiguity(a));
        }
        if a >= 1.0 - tol {
            let k = (e.arg() * ctx.d as f64 / std::f64::consts::TAU).round() as i64;
            phases.push((ctx.point(i, 2 * n), (-k).rem_euclid(ctx.d)));
        }
    }
    let points: Vec<Point> = phases.iter().map(|p| p.0.clone()).collect();
    let module = canonicalize(ctx.d, 2 * n, &points);
    if module.size() as usize != points.len() || !is_isotropic(&module) {
        return Err(Error::InvalidInput("unsigned stabiliser labels are not an isotropic submodule".into()));
    }
    Ok(UnsignedGroup { ctx, module, phases })
}

/// `|Weyl(|ψ⟩)|`.
pub fn stabiliser_size(psi: &DenseState) -> Result<u128> {
    Ok(unsigned_group(psi, 1e-8)?.module.size())
}

/// Projects `state` onto the `ω^k` eigenspace of `W_x`: `P_k = d^{-1} Σ_j ω^{-kj} W_x^j`.
fn eigen_projection(ctx: &PhaseContext, state: &DenseState, x: &[i64], k: i64) -> DenseState {
    let base = WeylLabel::new(ctx, x);
    let dim = state.dim();
    let mut acc = vec![C0; dim];
    for j in 0..ctx.d {
        let moved = apply_label_raw(ctx, state, &power(ctx, &base, j));
        let c = ctx.omega_pow(-k * j) / ctx.d as f64;
        for (a, b) in acc.iter_mut().zip(moved.amplitudes()) {
            *a += c * b;
        }
    }
    DenseState::raw(ctx.d, state.registers().to_vec(), acc)
}

/// Fixed generic start vector for eigen-projections.
fn generic_vector(ctx: &PhaseContext) -> DenseState {
    let amps =
        (0..ctx.dim()).map(|j| Complex64::new(1.0 + 0.37 * j as f64, ((j * j + 3) % 11) as f64 * 0.29)).collect();
    DenseState::new(ctx.d, vec![ctx.n], amps).expect("nonzero vector")
}

/// A stabiliser group on the Lagrangian `m`, with phases read off a joint eigenvector.
pub fn base_group(ctx: &PhaseContext, m: &Submodule) -> Result<StabiliserGroup> {
    let mut v = generic_vector(ctx);
    let mut gens = Vec::new();
    for x in m.basis() {
        let (best_k, best) = (0..ctx.d)
            .map(|k| (k, eigen_projection(ctx, &v, x, k)))
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("d >= 2");
        if best.norm() < 1e-9 {
            return Err(Error::InvalidGroup("no joint eigenvector found".into()));
        }
        v = best.scaled(Complex64::new(best.norm().recip(), 0.0));
        gens.push((x.clone(), (-best_k).rem_euclid(ctx.d)));
    }
    StabiliserGroup::new(ctx, gens)
}

/// Uniformly random element of `outer` outside `inner`.
fn random_outside<R: Rng + ?Sized>(outer: &Submodule, inner: &Submodule, rng: &mut R) -> Point {
    loop {
        let x = outer.random_element(rng);
        if !inner.contains(&x) {
            return x;
        }
    }
}

/// Random stabiliser group: random Lagrangian extension followed by a random phase shift.
pub fn random_stabiliser_group<R: Rng + ?Sized>(ctx: &PhaseContext, rng: &mut R) -> Result<StabiliserGroup> {
    let m = 2 * ctx.n;
    let target = (ctx.d as u128).pow(ctx.n as u32);
    let mut x = Submodule::zero(ctx.d, m);
    while x.size() < target {
        let comp = symplectic_complement(&x);
        let y = random_outside(&comp, &x, rng);
        x = x.with(&y);
    }
    let base = base_group(ctx, &x)?;
    let z: Point = (0..m).map(|_| rng.random_range(0..ctx.d)).collect();
    base.shifted(&z)
}

fn check_enumeration(ctx: &PhaseContext) -> Result<()> {
    if ctx.num_points() > MAX_ENUMERATION_POINTS {
        return Err(Error::CapExceeded(format!(
            "enumeration needs d^(2n) <= {MAX_ENUMERATION_POINTS}, got {}",
            ctx.num_points()
        )));
    }
    Ok(())
}

/// Every isotropic submodule of `Z_d^{2n}`, sorted by canonical basis.
pub fn isotropic_submodules(ctx: &PhaseContext) -> Result<Vec<Submodule>> {
    check_enumeration(ctx)?;
    let m = 2 * ctx.n;
    let zero = Submodule::zero(ctx.d, m);
    let mut seen: HashSet<Submodule> = HashSet::from([zero.clone()]);
    let mut queue = VecDeque::from([zero]);
    while let Some(x) = queue.pop_front() {
        let comp = symplectic_complement(&x);
        let mut tried: HashSet<Submodule> = HashSet::new();
        for y in comp.elements() {
            if x.contains(&y) {
                continue;
            }
            let next = x.with(&y);
            if tried.insert(next.clone()) && seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut out: Vec<Submodule> = seen.into_iter().collect();
    out.sort_by(|a, b| a.basis().cmp(b.basis()));
    Ok(out)
}

/// Every Lagrangian submodule of `Z_d^{2n}`, sorted by canonical basis.
pub fn lagrangian_submodules(ctx: &PhaseContext) -> Result<Vec<Submodule>> {
    let target = (ctx.d as u128).pow(ctx.n as u32);
    Ok(isotropic_submodules(ctx)?.into_iter().filter(|x| x.size() == target).collect())
}

/// Shared list of stabiliser groups and their states.
pub type Enumeration = Arc<Vec<(StabiliserGroup, DenseState)>>;

fn enumeration_cache() -> &'static Mutex<HashMap<(i64, usize), Enumeration>> {
    static CACHE: OnceLock<Mutex<HashMap<(i64, usize), Enumeration>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Every stabiliser state on `n` qudits with its group, in a fixed order.
pub fn enumerate_stabiliser_states(ctx: &PhaseContext) -> Result<Enumeration> {
    check_enumeration(ctx)?;
    let key = (ctx.d, ctx.n);
    if let Some(e) = enumeration_cache().lock().expect("cache lock").get(&key) {
        return Ok(e.clone());
    }
    let mut out = Vec::new();
    for m in lagrangian_submodules(ctx)? {
        let base = base_group(ctx, &m)?;
        let base_state = stabiliser_state(&base)?;
        let mut phases_seen: HashSet<Vec<i64>> = HashSet::new();
        for z in ctx.all_points() {
            let shifted = base.shifted(&z)?;
            let key: Vec<i64> = shifted.generators().iter().map(|g| g.1).collect();
            if phases_seen.insert(key) {
                let state = apply_weyl(&base_state, 0, ctx, &WeylLabel::new(ctx, &z))?;
                out.push((shifted, state));
            }
        }
    }
    let e = Arc::new(out);
    enumeration_cache().lock().expect("cache lock").insert(key, e.clone());
    Ok(e)
}

/// `F_S(|ψ⟩) = max_S |⟨S|ψ⟩|^2` with the first maximising group in enumeration order.
pub fn stabiliser_fidelity(psi: &DenseState) -> Result<(f64, StabiliserGroup)> {
    let ctx = PhaseContext::new(psi.d, psi.num_qudits())?;
    let all = enumerate_stabiliser_states(&ctx)?;
    let mut best: Option<(f64, &StabiliserGroup)> = None;
    for (g, s) in all.iter() {
        let f = s.inner(psi)?.norm_sqr();
        if best.is_none_or(|(b, _)| f > b + 1e-13) {
            best = Some((f, g));
        }
    }
    let (f, g) = best.expect("at least one stabiliser state");
    Ok((f, g.clone()))
}

/// Largest weight of `psi` on a joint eigenspace of `{W_x : x ∈ sub}`.
pub fn max_eigenspace_weight(ctx: &PhaseContext, sub: &Submodule, psi: &DenseState) -> f64 {
    let mut branches = vec![psi.clone()];
    for x in sub.basis() {
        branches = branches
            .iter()
            .flat_map(|b| (0..ctx.d).map(move |k| eigen_projection(ctx, b, x, k)))
            .filter(|b| b.norm() > 1e-12)
            .collect();
    }
    branches.iter().map(|b| b.norm().powi(2)).fold(0.0, f64::max)
}

/// `F_K(|ψ⟩)`: best overlap with a partial stabiliser state of a group of size at least `k`.
pub fn k_sized_fidelity(psi: &DenseState, k: u128) -> Result<f64> {
    let ctx = PhaseContext::new(psi.d, psi.num_qudits())?;
    if !(ctx.n == 1 || (ctx.n == 2 && ctx.d <= 3)) {
        return Err(Error::CapExceeded("k-sized fidelity needs n = 1, or n = 2 with d <= 3".into()));
    }
    Ok(isotropic_submodules(&ctx)?
        .iter()
        .filter(|x| x.size() >= k)
        .map(|x| max_eigenspace_weight(&ctx, x, psi))
        .fold(0.0, f64::max))
}

/// `Γᵀ Ω Γ ≡ Ω (mod d)` for a `2n × 2n` matrix given by rows.
pub fn is_symplectic(ctx: &PhaseContext, gamma: &[Vec<i64>]) -> bool {
    let m = 2 * ctx.n;
    if gamma.len() != m || gamma.iter().any(|r| r.len() != m) {
        return false;
    }
    let col = |j: usize| -> Point { gamma.iter().map(|r| r[j]).collect() };
    (0..m).all(|i| {
        (0..m).all(|j| {
            let mut e_i = vec![0; m];
            e_i[i] = 1;
            let mut e_j = vec![0; m];
            e_j[j] = 1;
            symplectic_product(&col(i), &col(j), ctx.d) == symplectic_product(&e_i, &e_j, ctx.d)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let c2 = PhaseContext::new(2, 1).unwrap();
        let z = StabiliserGroup::new(&c2, vec![(vec![1, 0], 0)]).unwrap();
        let s = stabiliser_state(&z).unwrap();
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        let x = StabiliserGroup::new(&c2, vec![(vec![0, 1], 0)]).unwrap();
        let s = stabiliser_state(&x).unwrap();
        assert!((s.amplitudes()[0] - s.amplitudes()[1]).norm() < 1e-12);
        let c3 = PhaseContext::new(3, 1).unwrap();
        let g = StabiliserGroup::new(&c3, vec![(vec![1, 0], 1)]).unwrap();
        let s = stabiliser_state(&g).unwrap();
        assert!((s.amplitudes()[2].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_stabiliser_states(&PhaseContext::new(2, 1).unwrap()).unwrap().len(), 6);
        assert_eq!(enumerate_stabiliser_states(&PhaseContext::new(3, 1).unwrap()).unwrap().len(), 12);
    }

    #[test]
    fn rejects_bad_groups() {
        let c2 = PhaseContext::new(2, 1).unwrap();
        assert!(StabiliserGroup::new(&c2, vec![(vec![1, 0], 0), (vec![0, 1], 0)]).is_err());
        assert!(StabiliserGroup::new(&c2, vec![]).is_err());
    }
}
