//! Exact integer and `Z_d` module algebra.
//!
//! Smith normal form over the integers, Howell-form canonical submodules of
//! `Z_d^m`, kernels, orthogonal and symplectic complements, the four-square
//! decomposition and the matrix `R` behind the unitary `B_R`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Element of `Z_d^m` stored with components in `[0, d)`.
pub type Point = Vec<i64>;

/// Prime factorisation of `d` as ascending `(p, k)` pairs.
pub fn prime_factorize(d: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut rest = d;
    let mut p = 2u64;
    while p * p <= rest {
        if rest.is_multiple_of(p) {
            let mut k = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += 1;
    }
    if rest > 1 {
        out.push((rest, 1));
    }
    out
}

/// Arithmetic frame of an `n`-qudit system of local dimension `d`.
#[derive(Clone, Debug)]
pub struct PhaseContext {
    /// Local dimension.
    pub d: i64,
    /// Number of qudits.
    pub n: usize,
    /// Order of `tau`: `d` for odd `d`, `2d` for even `d`.
    pub big_d: i64,
    /// `e^{2 pi i / d}`.
    pub omega: Complex64,
    /// `e^{i pi (d^2 + 1) / d}`.
    pub tau: Complex64,
    /// Prime factorisation of `d`.
    pub factors: Vec<(u64, u32)>,
    omega_table: Vec<Complex64>,
    tau_table: Vec<Complex64>,
}

impl PartialEq for PhaseContext {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.n == other.n
    }
}

impl PhaseContext {
    /// Builds the context for dimension `d >= 2` and `n >= 1` qudits.
    pub fn new(d: i64, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("d = {d} must be at least 2")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        let big_d = if d % 2 == 0 { 2 * d } else { d };
        let omega_table = (0..d).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)).collect();
        // tau^k = e^{i pi k (d^2+1)/d}; reduce k (d^2+1) mod 2d before converting.
        let tau_table = (0..big_d)
            .map(|k| {
                let e = (k * (d * d + 1)).rem_euclid(2 * d);
                Complex64::from_polar(1.0, PI * e as f64 / d as f64)
            })
            .collect::<Vec<_>>();
        Ok(Self {
            d,
            n,
            big_d,
            omega: Complex64::from_polar(1.0, 2.0 * PI / d as f64),
            tau: tau_table[1],
            factors: prime_factorize(d as u64),
            omega_table,
            tau_table,
        })
    }

    /// Same dimension, different qudit count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.d, n)
    }

    /// `x mod d` in `[0, d)`.
    #[inline]
    pub fn md(&self, x: i64) -> i64 {
        x.rem_euclid(self.d)
    }

    /// `omega^k`.
    #[inline]
    pub fn omega_pow(&self, k: i64) -> Complex64 {
        self.omega_table[k.rem_euclid(self.d) as usize]
    }

    /// `tau^k`.
    #[inline]
    pub fn tau_pow(&self, k: i64) -> Complex64 {
        self.tau_table[k.rem_euclid(self.big_d) as usize]
    }

    /// Hilbert-space dimension `d^n`.
    pub fn dim(&self) -> usize {
        (self.d as usize).pow(self.n as u32)
    }

    /// Number of phase-space points `d^{2n}`.
    pub fn num_points(&self) -> usize {
        (self.d as usize).pow(2 * self.n as u32)
    }

    /// Smallest prime factor of `d`.
    pub fn p1(&self) -> u64 {
        self.factors[0].0
    }

    /// Sum of the prime exponents of `d`.
    pub fn sum_k(&self) -> u32 {
        self.factors.iter().map(|f| f.1).sum()
    }

    /// Mixed-radix index `sum_i x_i d^i` of a point.
    pub fn index(&self, x: &[i64]) -> usize {
        index_of(self.d, x)
    }

    /// Point of length `len` with mixed-radix index `idx`.
    pub fn point(&self, idx: usize, len: usize) -> Point {
        point_of(self.d, idx, len)
    }

    /// Every point of `Z_d^{2n}` in index order.
    pub fn all_points(&self) -> Vec<Point> {
        (0..self.num_points()).map(|i| self.point(i, 2 * self.n)).collect()
    }
}

/// Mixed-radix index of `x` with radix `d`, first component least significant.
pub fn index_of(d: i64, x: &[i64]) -> usize {
    let mut idx = 0usize;
    for &c in x.iter().rev() {
        idx = idx * d as usize + c.rem_euclid(d) as usize;
    }
    idx
}

/// Inverse of [`index_of`].
pub fn point_of(d: i64, mut idx: usize, len: usize) -> Point {
    let mut x = vec![0i64; len];
    for c in x.iter_mut() {
        *c = (idx % d as usize) as i64;
        idx /= d as usize;
    }
    x
}

/// Extended gcd: returns `(g, s, t)` with `s a + t b = g >= 0`.
pub fn xgcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inv(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (g, s, _) = xgcd(a.rem_euclid(m), m);
    (g == 1).then(|| s.rem_euclid(m))
}

/// Dense integer matrix with exact arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    /// Number of rows.
    pub rows: usize,
    /// Number of columns.
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<BigInt>,
}

impl IntMatrix {
    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from `i64` rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<i64>], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix");
            for (j, &v) in r.iter().enumerate() {
                m.data[i * cols + j] = BigInt::from(v);
            }
        }
        m
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    /// Exact product.
    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Transpose.
    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out
    }

    /// Determinant of a square matrix by fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| self.get(i, j).clone()).collect()).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                    return BigInt::zero();
                };
                a.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    /// Entries reduced into `[0, d)`.
    pub fn reduce_mod(&self, d: i64) -> Vec<Vec<i64>> {
        let m = BigInt::from(d);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).map(|j| self.get(i, j).mod_floor(&m).to_i64().expect("reduced entry fits")).collect()
            })
            .collect()
    }
}

/// Result of [`smith_normal_form`]: `U A V = S`.
#[derive(Clone, Debug)]
pub struct Snf {
    /// Unimodular row transform.
    pub u: IntMatrix,
    /// Diagonal form with `s_i | s_{i+1}` and `s_i >= 0`.
    pub s: IntMatrix,
    /// Unimodular column transform.
    pub v: IntMatrix,
}

impl Snf {
    /// Diagonal entries of `S`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.s.rows.min(self.s.cols)).map(|i| self.s.get(i, i).clone()).collect()
    }
}

trait SnfScalar: Clone + Integer + Signed + CheckedAdd + CheckedSub + CheckedMul + From<i64> {}
impl SnfScalar for i128 {}
impl SnfScalar for BigInt {}

type Mat<T> = Vec<Vec<T>>;

fn row_sub<T: SnfScalar>(m: &mut Mat<T>, target: usize, src: usize, q: &T) -> Option<()> {
    for j in 0..m[target].len() {
        let prod = m[src][j].checked_mul(q)?;
        m[target][j] = m[target][j].checked_sub(&prod)?;
    }
    Some(())
}

fn col_sub<T: SnfScalar>(m: &mut Mat<T>, target: usize, src: usize, q: &T) -> Option<()> {
    for row in m.iter_mut() {
        let prod = row[src].checked_mul(q)?;
        row[target] = row[target].checked_sub(&prod)?;
    }
    Some(())
}

fn identity_of<T: SnfScalar>(n: usize) -> Mat<T> {
    (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect()
}

/// Textbook Smith normal form; `None` signals overflow of the scalar type.
fn snf_generic<T: SnfScalar>(mut a: Mat<T>, cols: usize) -> Option<(Mat<T>, Mat<T>, Mat<T>)> {
    let rows = a.len();
    let mut u = identity_of::<T>(rows);
    let mut v = identity_of::<T>(cols);
    for t in 0..rows.min(cols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return Some((u, a, v));
            };
            a.swap(t, pi);
            u.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    row_sub(&mut a, i, t, &q)?;
                    row_sub(&mut u, i, t, &q)?;
                    clean &= a[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    col_sub(&mut a, j, t, &q)?;
                    col_sub(&mut v, j, t, &q)?;
                    clean &= a[t][j].is_zero();
                }
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[i][j].mod_floor(&a[t][t]).is_zero()));
            match bad {
                Some(i) => {
                    let neg_one = T::zero() - T::one();
                    row_sub(&mut a, t, i, &neg_one)?;
                    row_sub(&mut u, t, i, &neg_one)?;
                }
                None => break,
            }
        }
        if a[t][t].is_negative() {
            for x in a[t].iter_mut() {
                *x = T::zero() - x.clone();
            }
            for x in u[t].iter_mut() {
                *x = T::zero() - x.clone();
            }
        }
    }
    Some((u, a, v))
}

fn to_int_matrix<T: SnfScalar + Into<BigInt>>(m: Mat<T>, rows: usize, cols: usize) -> IntMatrix {
    let mut out = IntMatrix::zeros(rows, cols);
    for (i, r) in m.into_iter().enumerate() {
        for (j, x) in r.into_iter().enumerate() {
            out.data[i * cols + j] = x.into();
        }
    }
    out
}

/// Smith normal form `U A V = S`.
///
/// Runs in checked 128-bit arithmetic and falls back to arbitrary precision
/// when an intermediate value overflows.
pub fn smith_normal_form(a: &IntMatrix) -> Snf {
    let (r, c) = (a.rows, a.cols);
    let small: Option<Mat<i128>> =
        (0..r).map(|i| (0..c).map(|j| a.get(i, j).to_i128()).collect::<Option<Vec<_>>>()).collect();
    if let Some(m) = small {
        if let Some((u, s, v)) = snf_generic(m, c) {
            return Snf { u: to_int_matrix(u, r, r), s: to_int_matrix(s, r, c), v: to_int_matrix(v, c, c) };
        }
    }
    let m: Mat<BigInt> = (0..r).map(|i| (0..c).map(|j| a.get(i, j).clone()).collect()).collect();
    let (u, s, v) = snf_generic(m, c).expect("arbitrary precision cannot overflow");
    Snf { u: to_int_matrix(u, r, r), s: to_int_matrix(s, r, c), v: to_int_matrix(v, c, c) }
}

/// Submodule of `Z_d^m` held in Howell normal form.
///
/// The basis rows have pivot entries `g | d` in strictly increasing columns,
/// entries above each pivot reduced into `[0, g)`, and the Howell property,
/// which makes the representation unique: two submodules are equal iff their
/// bases are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Submodule {
    d: i64,
    m: usize,
    basis: Vec<Point>,
    pivots: Vec<(usize, i64)>,
    size: u128,
}

impl Submodule {
    /// Modulus.
    pub fn d(&self) -> i64 {
        self.d
    }

    /// Ambient rank `m`.
    pub fn ambient_rank(&self) -> usize {
        self.m
    }

    /// Canonical basis.
    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    /// `(column, pivot value)` of each basis row.
    pub fn pivots(&self) -> &[(usize, i64)] {
        &self.pivots
    }

    /// Cardinality.
    pub fn size(&self) -> u128 {
        self.size
    }

    /// The zero submodule.
    pub fn zero(d: i64, m: usize) -> Self {
        canonicalize(d, m, &[])
    }

    /// The whole of `Z_d^m`.
    pub fn full(d: i64, m: usize) -> Self {
        let gens: Vec<Point> = (0..m)
            .map(|i| {
                let mut e = vec![0; m];
                e[i] = 1;
                e
            })
            .collect();
        canonicalize(d, m, &gens)
    }

    /// Membership test.
    pub fn contains(&self, x: &[i64]) -> bool {
        assert_eq!(x.len(), self.m);
        let mut y: Vec<i64> = x.iter().map(|c| c.rem_euclid(self.d)).collect();
        let mut k = 0;
        for j in 0..self.m {
            if k < self.pivots.len() && self.pivots[k].0 == j {
                let g = self.pivots[k].1;
                if y[j] % g != 0 {
                    return false;
                }
                let c = y[j] / g;
                if c != 0 {
                    for (yy, b) in y.iter_mut().zip(&self.basis[k]) {
                        *yy = (*yy - c * b).rem_euclid(self.d);
                    }
                }
                k += 1;
            } else if y[j] != 0 {
                return false;
            }
        }
        true
    }

    /// Orders `d / g_k` of the basis coefficients.
    pub fn coefficient_ranges(&self) -> Vec<i64> {
        self.pivots.iter().map(|&(_, g)| self.d / g).collect()
    }

    /// Element with basis coefficients `coeffs`.
    pub fn combine(&self, coeffs: &[i64]) -> Point {
        let mut x = vec![0i64; self.m];
        for (c, b) in coeffs.iter().zip(&self.basis) {
            for (xx, bb) in x.iter_mut().zip(b) {
                *xx += c * bb;
            }
        }
        x.iter().map(|c| c.rem_euclid(self.d)).collect()
    }

    /// Every element, each exactly once.
    pub fn elements(&self) -> Vec<Point> {
        let ranges = self.coefficient_ranges();
        let mut out = Vec::with_capacity(self.size as usize);
        let mut coeffs = vec![0i64; ranges.len()];
        loop {
            out.push(self.combine(&coeffs));
            let mut k = 0;
            loop {
                if k == ranges.len() {
                    return out;
                }
                coeffs[k] += 1;
                if coeffs[k] < ranges[k] {
                    break;
                }
                coeffs[k] = 0;
                k += 1;
            }
        }
    }

    /// Uniformly random element.
    pub fn random_element<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let coeffs: Vec<i64> = self.coefficient_ranges().iter().map(|&r| rng.random_range(0..r)).collect();
        self.combine(&coeffs)
    }

    /// Submodule sum `X + Y`.
    pub fn sum(&self, other: &Submodule) -> Submodule {
        let mut gens = self.basis.clone();
        gens.extend(other.basis.iter().cloned());
        canonicalize(self.d, self.m, &gens)
    }

    /// Intersection `X ∩ Y = (X^⊥ + Y^⊥)^⊥`.
    pub fn intersect(&self, other: &Submodule) -> Submodule {
        orthogonal_complement(&orthogonal_complement(self).sum(&orthogonal_complement(other)))
    }

    /// `true` if `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Submodule) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    /// Adds one generator.
    pub fn with(&self, x: &[i64]) -> Submodule {
        let mut gens = self.basis.clone();
        gens.push(x.to_vec());
        canonicalize(self.d, self.m, &gens)
    }
}

/// Canonical submodule of `Z_d^m` spanned by `generators`.
pub fn canonicalize(d: i64, m: usize, generators: &[Point]) -> Submodule {
    let reduce = |r: &mut Vec<i64>| r.iter_mut().for_each(|c| *c = c.rem_euclid(d));
    let mut work: Vec<Point> = generators
        .iter()
        .map(|g| {
            assert_eq!(g.len(), m, "generator length");
            let mut r = g.clone();
            reduce(&mut r);
            r
        })
        .filter(|r| r.iter().any(|&c| c != 0))
        .collect();
    let mut rows: Vec<Point> = Vec::new();
    let mut pivots: Vec<(usize, i64)> = Vec::new();
    for j in 0..m {
        let mut pivot: Option<Point> = None;
        let mut rest = Vec::with_capacity(work.len());
        for r in work.drain(..) {
            if r[j] == 0 {
                rest.push(r);
                continue;
            }
            match pivot.take() {
                None => pivot = Some(r),
                Some(p) => {
                    let (g, s, t) = xgcd(p[j], r[j]);
                    let (a, b) = (r[j] / g, p[j] / g);
                    let mut np: Point = p.iter().zip(&r).map(|(x, y)| s * x + t * y).collect();
                    let mut nr: Point = p.iter().zip(&r).map(|(x, y)| a * x - b * y).collect();
                    reduce(&mut np);
                    reduce(&mut nr);
                    if nr.iter().any(|&c| c != 0) {
                        rest.push(nr);
                    }
                    pivot = Some(np);
                }
            }
        }
        work = rest;
        if let Some(mut p) = pivot {
            if p[j] == 0 {
                if p.iter().any(|&c| c != 0) {
                    work.push(p);
                }
                continue;
            }
            let g = p[j].gcd(&d);
            let unit = (1..d)
                .find(|&u| u.gcd(&d) == 1 && (u * p[j]).rem_euclid(d) == g)
                .expect("a unit normalising the pivot exists");
            p.iter_mut().for_each(|c| *c *= unit);
            reduce(&mut p);
            let mut sat: Point = p.iter().map(|c| c * (d / g)).collect();
            reduce(&mut sat);
            if sat.iter().any(|&c| c != 0) {
                work.push(sat);
            }
            rows.push(p);
            pivots.push((j, g));
        }
    }
    for k in 0..rows.len() {
        let (jk, gk) = pivots[k];
        for i in 0..k {
            let q = rows[i][jk].div_euclid(gk);
            if q != 0 {
                let pk = rows[k].clone();
                for (x, y) in rows[i].iter_mut().zip(&pk) {
                    *x = (*x - q * y).rem_euclid(d);
                }
            }
        }
    }
    let size = pivots.iter().map(|&(_, g)| (d / g) as u128).product();
    Submodule { d, m, basis: rows, pivots, size }
}

/// Size of the span of `generators` read off the SNF of `[G | d I_m]`.
pub fn submodule_size_snf(d: i64, m: usize, generators: &[Point]) -> u128 {
    let k = generators.len();
    let mut a = IntMatrix::zeros(m, k + m);
    for (c, g) in generators.iter().enumerate() {
        for (i, x) in g.iter().enumerate() {
            a.data[i * (k + m) + c] = BigInt::from(x.rem_euclid(d));
        }
    }
    for i in 0..m {
        a.data[i * (k + m) + k + i] = BigInt::from(d);
    }
    let snf = smith_normal_form(&a);
    let index: BigInt = snf.diagonal().iter().product();
    let total = BigInt::from(d).pow(m as u32);
    (total / index).to_u128().expect("size fits in u128")
}

/// `{v : A v ≡ 0 mod d}` for `A` given by rows of length `m`.
pub fn kernel_mod_d(d: i64, m: usize, a: &[Vec<i64>]) -> Submodule {
    if a.is_empty() {
        return Submodule::full(d, m);
    }
    let snf = smith_normal_form(&IntMatrix::from_rows(a, m));
    let diag = snf.diagonal();
    let v = snf.v.reduce_mod(d);
    let gens: Vec<Point> = (0..m)
        .map(|i| {
            let s = diag.get(i).map_or(0, |x| x.mod_floor(&BigInt::from(d)).to_i64().unwrap());
            let step = d / s.gcd(&d);
            v.iter().map(|row| (row[i] * step).rem_euclid(d)).collect()
        })
        .collect();
    canonicalize(d, m, &gens)
}

/// Some `v` with `A v ≡ b mod d`, or `None` if no solution exists.
pub fn solve_mod_d(d: i64, m: usize, a: &[Vec<i64>], b: &[i64]) -> Option<Point> {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return Some(vec![0; m]);
    }
    let snf = smith_normal_form(&IntMatrix::from_rows(a, m));
    let diag = snf.diagonal();
    let u = snf.u.reduce_mod(d);
    let v = snf.v.reduce_mod(d);
    let c: Vec<i64> =
        (0..a.len()).map(|i| (0..a.len()).map(|j| u[i][j] * b[j].rem_euclid(d)).sum::<i64>().rem_euclid(d)).collect();
    let mut y = vec![0i64; m];
    for (i, &ci) in c.iter().enumerate() {
        let s = diag.get(i).map_or(0, |x| x.mod_floor(&BigInt::from(d)).to_i64().unwrap());
        let g = s.gcd(&d);
        if ci % g != 0 {
            return None;
        }
        if g == d {
            continue;
        }
        let md = d / g;
        y[i] = ((ci / g) * mod_inv(s / g, md).expect("unit after dividing by gcd")).rem_euclid(md);
    }
    Some((0..m).map(|r| (0..m).map(|k| v[r][k] * y[k]).sum::<i64>().rem_euclid(d)).collect())
}

/// `X^⊥` with respect to the scalar product.
pub fn orthogonal_complement(sub: &Submodule) -> Submodule {
    kernel_mod_d(sub.d, sub.m, &sub.basis)
}

/// Row vector `x^T Ω` so that `[x, y] = (x^T Ω) · y`.
pub fn omega_row(x: &[i64]) -> Point {
    let n = x.len() / 2;
    let mut r = vec![0; 2 * n];
    for i in 0..n {
        r[i] = -x[n + i];
        r[n + i] = x[i];
    }
    r
}

/// `X^⫫` with respect to the symplectic product.
pub fn symplectic_complement(sub: &Submodule) -> Submodule {
    assert!(sub.m.is_multiple_of(2), "symplectic ambient rank must be even");
    let rows: Vec<Point> = sub.basis.iter().map(|x| omega_row(x)).collect();
    kernel_mod_d(sub.d, sub.m, &rows)
}

/// `[x, y] = sum_i (x_i y_{n+i} - x_{n+i} y_i) mod modulus` on lifted representatives.
pub fn symplectic_product(x: &[i64], y: &[i64], modulus: i64) -> i64 {
    symplectic_product_z(x, y).rem_euclid(modulus)
}

/// `[x, y]` over the integers.
pub fn symplectic_product_z(x: &[i64], y: &[i64]) -> i64 {
    let n = x.len() / 2;
    (0..n).map(|i| x[i] * y[n + i] - x[n + i] * y[i]).sum()
}

/// `J(v, w) = (-v, w)`.
pub fn involution(d: i64, x: &[i64]) -> Point {
    let n = x.len() / 2;
    x.iter().enumerate().map(|(i, &c)| if i < n { (-c).rem_euclid(d) } else { c.rem_euclid(d) }).collect()
}

/// `true` iff the symplectic product vanishes on every pair of basis vectors.
pub fn is_isotropic(sub: &Submodule) -> bool {
    let b = &sub.basis;
    (0..b.len()).all(|i| (i + 1..b.len()).all(|j| symplectic_product(&b[i], &b[j], sub.d) == 0))
}

/// Four non-negative integers whose squares sum to `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourSquare {
    /// Target value.
    pub m: u64,
    /// Decomposition with `a[0] >= a[1] >= a[2] >= a[3]`.
    pub a: [u64; 4],
}

/// Lexicographically smallest non-increasing decomposition of `m` into four squares.
pub fn four_square(m: u64) -> FourSquare {
    let root = |x: u64| (x as f64).sqrt() as u64 + 1;
    for a1 in 0..=root(m) {
        for a2 in 0..=a1 {
            for a3 in 0..=a2 {
                let partial = a1 * a1 + a2 * a2 + a3 * a3;
                if partial > m {
                    break;
                }
                let rest = m - partial;
                let a4 = (rest as f64).sqrt().round() as u64;
                if a4 <= a3 && a4 * a4 == rest {
                    return FourSquare { m, a: [a1, a2, a3, a4] };
                }
            }
        }
    }
    unreachable!("every non-negative integer is a sum of four squares")
}

/// Integer matrix with `R^T R = target · I` (exactly, or modulo `d` for `k < 4`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RMatrix {
    /// Number of copies the matrix acts on.
    pub k: usize,
    /// Row-major `k × k` entries.
    pub entries: Vec<Vec<i64>>,
    /// Scalar `R^T R` equals.
    pub target: i64,
}

impl RMatrix {
    /// `k × k` identity.
    pub fn identity(k: usize) -> Self {
        let entries = (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect();
        Self { k, entries, target: 1 }
    }

    /// `R^T R` over the integers.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        let k = self.k;
        (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|l| self.entries[l][i] * self.entries[l][j]).sum()).collect())
            .collect()
    }

    /// `R R^T` over the integers.
    pub fn gram_t(&self) -> Vec<Vec<i64>> {
        let k = self.k;
        (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|l| self.entries[i][l] * self.entries[j][l]).sum()).collect())
            .collect()
    }
}

/// The 4×4 quaternion template built from `four_square(D - 1)`, for every `d`.
pub fn build_r_template(ctx: &PhaseContext) -> RMatrix {
    let target = ctx.big_d - 1;
    let [a1, a2, a3, a4] = four_square(target as u64).a.map(|x| x as i64);
    RMatrix {
        k: 4,
        entries: vec![vec![a1, a2, a3, a4], vec![a2, -a1, a4, -a3], vec![a3, -a4, -a1, a2], vec![a4, a3, -a2, -a1]],
        target,
    }
}

/// `R` for `k` copies: the template for `k = 4`, reduced forms for prime `d`,
/// and the identity for `d = 2`.
pub fn build_r(ctx: &PhaseContext, k: usize) -> Result<RMatrix> {
    let d = ctx.d;
    if d == 2 && matches!(k, 1 | 2 | 4) {
        return Ok(RMatrix::identity(k));
    }
    let prime = ctx.factors.len() == 1 && ctx.factors[0].1 == 1;
    match k {
        4 => Ok(build_r_template(ctx)),
        2 if prime => {
            for a1 in 0..d {
                for a2 in 0..d {
                    if (a1 * a1 + a2 * a2 + 1).rem_euclid(d) == 0 {
                        return Ok(RMatrix { k: 2, entries: vec![vec![a1, a2], vec![a2, -a1]], target: -1 });
                    }
                }
            }
            Err(Error::UnsupportedReduction(format!("no a1^2 + a2^2 = -1 mod {d}")))
        }
        1 if prime && d % 4 == 1 => {
            let a = (1..d).find(|a| (a * a + 1).rem_euclid(d) == 0).expect("-1 is a square");
            Ok(RMatrix { k: 1, entries: vec![vec![a]], target: -1 })
        }
        _ => Err(Error::UnsupportedReduction(format!("k = {k} is unavailable for d = {d}"))),
    }
}

/// Number of maximal proper submodules of `Z_p^m`: `(p^m - 1)/(p - 1)`.
pub fn maximal_submodule_count(p: u64, m: u32) -> u128 {
    ((p as u128).pow(m) - 1) / (p as u128 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorisations() {
        assert_eq!(prime_factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(prime_factorize(2), vec![(2, 1)]);
        assert_eq!(prime_factorize(30), vec![(2, 1), (3, 1), (5, 1)]);
    }

    #[test]
    fn snf_examples() {
        let a = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]], 2);
        let snf = smith_normal_form(&a);
        assert_eq!(snf.diagonal(), vec![BigInt::from(2), BigInt::from(4)]);
        assert_eq!(snf.u.mul(&a).mul(&snf.v), snf.s);
        let i3 = IntMatrix::identity(3);
        assert_eq!(smith_normal_form(&i3).s, i3);
        let two = IntMatrix::from_rows(&[vec![2]], 1);
        assert_eq!(smith_normal_form(&two).s, two);
    }

    #[test]
    fn canonical_sizes() {
        assert_eq!(canonicalize(4, 2, &[vec![2, 0]]).size(), 2);
        assert_eq!(canonicalize(4, 2, &[vec![1, 1], vec![0, 2]]).size(), 8);
        assert_eq!(canonicalize(3, 2, &[]).size(), 1);
        assert_eq!(submodule_size_snf(4, 2, &[vec![1, 1], vec![0, 2]]), 8);
    }

    #[test]
    fn kernels_and_complements() {
        let k = kernel_mod_d(3, 2, &[vec![1, 0]]);
        assert_eq!(k, canonicalize(3, 2, &[vec![0, 1]]));
        assert_eq!(kernel_mod_d(4, 1, &[vec![2]]).size(), 2);
        assert_eq!(kernel_mod_d(5, 3, &[vec![0, 0, 0]]).size(), 125);
        let x = canonicalize(4, 2, &[vec![2, 0]]);
        let xp = orthogonal_complement(&x);
        assert_eq!(xp, canonicalize(4, 2, &[vec![2, 0], vec![0, 1]]));
        assert_eq!(xp.size(), 8);
        let line = canonicalize(3, 2, &[vec![1, 0]]);
        assert_eq!(symplectic_complement(&line), line);
        assert_eq!(symplectic_complement(&Submodule::zero(3, 2)), Submodule::full(3, 2));
        assert_eq!(symplectic_complement(&Submodule::full(3, 2)), Submodule::zero(3, 2));
    }

    #[test]
    fn products_and_involution() {
        assert_eq!(symplectic_product(&[1, 0], &[0, 1], 5), 1);
        assert_eq!(symplectic_product(&[2, 1], &[2, 1], 3), 0);
        assert_eq!(symplectic_product(&[2, 1], &[1, 2], 3), 0);
        assert_eq!(involution(3, &[1, 2]), vec![2, 2]);
        assert_eq!(involution(2, &[1, 1]), vec![1, 1]);
        assert!(is_isotropic(&canonicalize(3, 2, &[vec![1, 0]])));
        assert!(!is_isotropic(&Submodule::full(3, 2)));
    }

    #[test]
    fn four_squares_and_r() {
        assert_eq!(four_square(1).a, [1, 0, 0, 0]);
        assert_eq!(four_square(2).a, [1, 1, 0, 0]);
        assert_eq!(four_square(7).a, [2, 1, 1, 1]);
        let ctx = PhaseContext::new(3, 1).unwrap();
        let r = build_r(&ctx, 4).unwrap();
        assert_eq!(r.entries, vec![vec![1, 1, 0, 0], vec![1, -1, 0, 0], vec![0, 0, -1, 1], vec![0, 0, -1, -1]]);
        assert_eq!(r.gram(), vec![vec![2, 0, 0, 0], vec![0, 2, 0, 0], vec![0, 0, 2, 0], vec![0, 0, 0, 2]]);
        let c5 = PhaseContext::new(5, 1).unwrap();
        assert_eq!(build_r(&c5, 1).unwrap().entries, vec![vec![2]]);
        let c2 = PhaseContext::new(2, 1).unwrap();
        assert_eq!(build_r(&c2, 4).unwrap(), RMatrix::identity(4));
        assert!(matches!(build_r(&ctx, 1), Err(Error::UnsupportedReduction(_))));
        assert!(matches!(build_r(&PhaseContext::new(6, 1).unwrap(), 2), Err(Error::UnsupportedReduction(_))));
    }

    #[test]
    fn maximal_counts() {
        assert_eq!(maximal_submodule_count(2, 4), 15);
        assert_eq!(maximal_submodule_count(3, 2), 4);
        assert_eq!(maximal_submodule_count(7, 1), 1);
    }

    #[test]
    fn phase_constants() {
        for d in 2..=12 {
            let ctx = PhaseContext::new(d, 1).unwrap();
            assert!((ctx.tau * ctx.tau - ctx.omega).norm() < 1e-12);
            assert!((ctx.tau_pow(ctx.big_d) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            let mut t = Complex64::new(1.0, 0.0);
            for k in 0..ctx.big_d {
                assert!((t - ctx.tau_pow(k)).norm() < 1e-9);
                t *= ctx.tau;
            }
        }
    }
}
