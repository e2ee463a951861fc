//! Property tests for Weyl operators and phase-space tables against dense matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qbell_core::phase_space::{characteristic_table, compose, p_table, power, symplectic_fourier, WeylLabel};
use qbell_core::qstate::{dense_weyl, expectation_weyl, haar_random};
use qbell_core::rng::stream;
use qbell_core::zmod::{symplectic_product, PhaseContext, Point};

type CMatrix = DMatrix<Complex64>;

fn close(a: &CMatrix, b: &CMatrix) -> bool {
    (a - b).iter().all(|z| z.norm() < 1e-9)
}

fn label_strategy() -> impl Strategy<Value = (i64, usize, Point, Point)> {
    (2i64..=6, 1usize..=2).prop_flat_map(|(d, n)| {
        let v = prop::collection::vec(-2 * d..3 * d, 2 * n);
        (Just(d), Just(n), v.clone(), v)
    })
}

/// `W_{v,w}|q⟩ = τ^{⟨v,w⟩} ω^{⟨q,v⟩}|q+w⟩` built entry by entry on lifted labels.
fn weyl_from_definition(ctx: &PhaseContext, y: &[i64]) -> CMatrix {
    let n = ctx.n;
    let dim = ctx.dim();
    let mut m = CMatrix::zeros(dim, dim);
    let vw: i64 = (0..n).map(|i| y[i] * y[n + i]).sum();
    for col in 0..dim {
        let q = ctx.point(col, n);
        let qv: i64 = (0..n).map(|i| q[i] * y[i]).sum();
        let target: Point = (0..n).map(|i| q[i] + y[n + i]).collect();
        m[(ctx.index(&target), col)] = ctx.tau_pow(vw) * ctx.omega_pow(qv);
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lifted_labels_match_definition((d, n, y, _) in label_strategy()) {
        let ctx = PhaseContext::new(d, n).unwrap();
        let label = WeylLabel::from_lifted(&ctx, &y);
        prop_assert!(close(&dense_weyl(&ctx, &label).unwrap(), &weyl_from_definition(&ctx, &y)));
    }

    #[test]
    fn composition_matches_matrix_product((d, n, x, y) in label_strategy()) {
        let ctx = PhaseContext::new(d, n).unwrap();
        let a = WeylLabel::from_lifted(&ctx, &x);
        let b = WeylLabel::from_lifted(&ctx, &y);
        let ab = compose(&ctx, &a, &b).unwrap();
        let prod = dense_weyl(&ctx, &a).unwrap() * dense_weyl(&ctx, &b).unwrap();
        prop_assert!(close(&prod, &dense_weyl(&ctx, &ab).unwrap()));
    }

    #[test]
    fn commutation_phase((d, n, x, y) in label_strategy()) {
        let ctx = PhaseContext::new(d, n).unwrap();
        let a = WeylLabel::new(&ctx, &x);
        let b = WeylLabel::new(&ctx, &y);
        let wa = dense_weyl(&ctx, &a).unwrap();
        let wb = dense_weyl(&ctx, &b).unwrap();
        let phase = ctx.omega_pow(symplectic_product(&a.x, &b.x, d));
        prop_assert!(close(&(&wa * &wb), &(&wb * &wa * phase)));
    }

    #[test]
    fn powers_and_adjoints((d, n, x, _) in label_strategy(), m in -7i64..7) {
        let ctx = PhaseContext::new(d, n).unwrap();
        let a = WeylLabel::from_lifted(&ctx, &x);
        let wa = dense_weyl(&ctx, &a).unwrap();
        let mut expected = CMatrix::identity(ctx.dim(), ctx.dim());
        let base = if m >= 0 { wa.clone() } else { wa.adjoint() };
        for _ in 0..m.abs() {
            expected = &expected * &base;
        }
        prop_assert!(close(&dense_weyl(&ctx, &power(&ctx, &a, m)).unwrap(), &expected));
        let neg: Point = x.iter().map(|c| -c).collect();
        prop_assert!(close(&dense_weyl(&ctx, &WeylLabel::from_lifted(&ctx, &neg)).unwrap(), &wa.adjoint()));
    }

    #[test]
    fn weyl_operators_are_trace_orthogonal((d, n, x, y) in label_strategy()) {
        let ctx = PhaseContext::new(d, n).unwrap();
        let wa = dense_weyl(&ctx, &WeylLabel::new(&ctx, &x)).unwrap();
        let wb = dense_weyl(&ctx, &WeylLabel::new(&ctx, &y)).unwrap();
        let tr = (wa.adjoint() * wb).trace();
        let same = x.iter().zip(&y).all(|(p, q)| (p - q).rem_euclid(d) == 0);
        let expected = if same { ctx.dim() as f64 } else { 0.0 };
        prop_assert!((tr - Complex64::new(expected, 0.0)).norm() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn characteristic_distribution_identities(d in 2i64..=5, n in 1usize..=2, seed in any::<u64>()) {
        let ctx = PhaseContext::new(d, n).unwrap();
        let psi = haar_random(d, n, &mut stream(seed, 0)).unwrap();
        let p = p_table(&psi).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-9);
        let c = characteristic_table(&psi).unwrap();
        let parseval: f64 = c.values.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((parseval - 1.0).abs() < 1e-9);
        let scale = (ctx.dim() as f64).recip();
        let hat = symplectic_fourier(&p.to_complex()).unwrap();
        for (h, q) in hat.values.iter().zip(&p.values) {
            prop_assert!((h - Complex64::new(q * scale, 0.0)).norm() < 1e-9);
        }
        for (idx, x) in ctx.all_points().iter().enumerate() {
            let e = expectation_weyl(&psi, &ctx, &WeylLabel::new(&ctx, x)).unwrap();
            prop_assert!((p.values[idx] - e.norm_sqr() * scale).abs() < 1e-9);
        }
    }
}
