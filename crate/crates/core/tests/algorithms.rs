use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use qbell_core::algorithms::*;
use qbell_core::phase_space::{p_table, WeylLabel};
use qbell_core::qstate::{dense_weyl, doped_clifford, haar_random, sample_index, DenseState, Doping};
use qbell_core::rng::stream;
use qbell_core::sampling::{b_exact, DifferenceMode};
use qbell_core::stabiliser::{
    enumerate_stabiliser_states, random_stabiliser_group, stabiliser_fidelity, stabiliser_state, unsigned_group,
};
use qbell_core::zmod::{build_r, canonicalize, PhaseContext, Point};
use qbell_core::Error;

type CMatrix = DMatrix<Complex64>;

fn t_state() -> DenseState {
    magic_state(2).unwrap()
}

#[test]
fn g_r_spot_values() {
    assert_abs_diff_eq!(g_r_exact(&t_state(), 3).unwrap(), 0.625, epsilon = 1e-12);
    assert_abs_diff_eq!(povm_accept_probability(&t_state(), 3).unwrap(), 0.8125, epsilon = 1e-12);
    for d in [2, 3, 5] {
        let ctx = PhaseContext::new(d, 1).unwrap();
        let r = if d == 3 { 2 } else { 3 };
        for (_, s) in enumerate_stabiliser_states(&ctx).unwrap().iter() {
            assert_abs_diff_eq!(g_r_exact(s, r).unwrap(), 1.0, epsilon = 1e-10);
        }
    }
    let mut rng = stream(60, 0);
    for _ in 0..20 {
        let psi = haar_random(3, 1, &mut rng).unwrap();
        assert!(g_r_exact(&psi, 2).unwrap() < 1.0 - 1e-4);
    }
    assert!(matches!(g_r_exact(&t_state(), 2), Err(Error::ParamOutOfRange(_))));
}

#[test]
fn povm_mean_matches_g_r() {
    let mut rng = stream(61, 0);
    let shots = 10_000;
    let mean: f64 =
        (0..shots).map(|_| povm_measure(&t_state(), 3, &mut rng).unwrap() as f64).sum::<f64>() / shots as f64;
    let g = 0.625;
    let sigma = ((1.0 - g * g) / shots as f64).sqrt();
    assert!((mean - g).abs() < 4.0 * sigma);
}

#[test]
fn parameter_formula_spot_values() {
    assert_abs_diff_eq!(gamma_r(3, 2, 0.0, 1.0), 1.0 / 36.0, epsilon = 1e-15);
    assert_abs_diff_eq!(alpha(2, 0.0, 1.0), 1.0 - (1.0f64 - (1.0 / 8.0) * (1.0 - 1.0 / 32.0)).powi(4), epsilon = 1e-15);
    assert_eq!(stab_test_povm_rounds(2, 3, 0.1, 0.5), ((2f64).ln() / (c_dr(2, 3) * 0.1)).ceil() as usize);
    for (d, r) in [(3, 2), (4, 3), (6, 5)] {
        let e = gamma_boundary_eps1(d, r);
        assert!(gamma_r(d, r, e, 1.0).abs() < 1e-12);
        assert!(gamma_r(d, r, e - 1e-6, 1.0) > 0.0 && gamma_r(d, r, e + 1e-6, 1.0) < 0.0);
    }
    assert!(alpha(3, 0.0, 1.0) > 0.0);
}

#[test]
fn a_exact_values_and_bounds() {
    let ctx = PhaseContext::new(2, 1).unwrap();
    let r = build_r(&ctx, 4).unwrap();
    let a = a_exact(&t_state(), &r).unwrap();
    assert!(a <= 0.625f64.powi(4) + 1e-12);
    let mut rng = stream(62, 0);
    for d in [2, 3, 4] {
        let ctx = PhaseContext::new(d, 1).unwrap();
        let r = build_r(&ctx, 4).unwrap();
        for _ in 0..3 {
            let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
            assert_abs_diff_eq!(a_exact(&stabiliser_state(&g).unwrap(), &r).unwrap(), 1.0, epsilon = 1e-9);
        }
    }
}

#[test]
fn estimator_sandwiches_hold() {
    let mut rng = stream(63, 0);
    for (d, r) in [(2i64, 3u32), (3, 2), (5, 2)] {
        let ctx = PhaseContext::new(d, 1).unwrap();
        let rm = build_r(&ctx, 4).unwrap();
        for _ in 0..30 {
            let psi = haar_random(d, 1, &mut rng).unwrap();
            let f = stabiliser_fidelity(&psi).unwrap().0;
            let g = g_r_exact(&psi, r).unwrap();
            assert!(g >= f.powi(2 * r as i32) - 1e-9);
            assert!(g <= 1.0 - 2.0 * c_dr(d, r) * (1.0 - f) + 1e-9);
            if d <= 4 {
                let a = a_exact(&psi, &rm).unwrap();
                let g3 = characteristic_moment(&psi, 3).unwrap();
                assert!(a <= g3.powi(4) + 1e-9);
                if f >= 0.5 {
                    assert!(a >= (2.0 * f - 1.0).powi(4) * f.powi(16) - 1e-9);
                }
            }
        }
    }
}

/// Outcome distribution of the symmetrised observable from dense pair eigendecompositions.
fn observable_distribution_dense(psi: &DenseState, labels: &[Point]) -> Vec<f64> {
    let ctx = PhaseContext::new(psi.d, 1).unwrap();
    let d = ctx.d as usize;
    let pair = psi.tensor(psi).unwrap();
    let v = CMatrix::from_column_slice(d * d, 1, pair.amplitudes());
    let mut total = vec![0.0; d];
    total[0] = 1.0;
    let c = 0.7373;
    for x in labels {
        let w = dense_weyl(&ctx, &WeylLabel::new(&ctx, x)).unwrap();
        let a = w.adjoint().kronecker(&w);
        let herm = (&a + a.adjoint()) * Complex64::new(0.5, 0.0) + (&a - a.adjoint()) * Complex64::new(0.0, -0.5 * c);
        let eig = herm.symmetric_eigen();
        let mut local = vec![0.0; d];
        for (i, lambda) in eig.eigenvalues.iter().enumerate() {
            let k = (0..d)
                .min_by(|&p, &q| {
                    let val = |k: usize| {
                        let th = std::f64::consts::TAU * k as f64 / d as f64;
                        (th.cos() + c * th.sin() - lambda).abs()
                    };
                    val(p).partial_cmp(&val(q)).unwrap()
                })
                .unwrap();
            local[k] += (eig.eigenvectors.column(i).adjoint() * &v)[(0, 0)].norm_sqr();
        }
        let mut next = vec![0.0; d];
        for (a, pa) in total.iter().enumerate() {
            for (b, pb) in local.iter().enumerate() {
                next[(a + b) % d] += pa * pb;
            }
        }
        total = next;
    }
    total
}

#[test]
fn observable_distribution_matches_dense_route() {
    let mut rng = stream(64, 0);
    for d in [2, 3] {
        let ctx = PhaseContext::new(d, 1).unwrap();
        for _ in 0..5 {
            let psi = haar_random(d, 1, &mut rng).unwrap();
            let labels: Vec<Point> =
                (0..4).map(|_| ctx.point(rand::Rng::random_range(&mut rng, 0..9) % ctx.num_points(), 2)).collect();
            let q = observable_distribution(&psi, &labels).unwrap();
            let dense = observable_distribution_dense(&psi, &labels);
            for (a, b) in q.iter().zip(&dense) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn observable_mean_over_b_equals_a() {
    let mut rng = stream(65, 0);
    for d in [2, 3] {
        let ctx = PhaseContext::new(d, 1).unwrap();
        let r = build_r(&ctx, 4).unwrap();
        let psi = haar_random(d, 1, &mut rng).unwrap();
        let b = b_exact(&psi, &r).unwrap();
        let np = ctx.num_points();
        let mut mean = 0.0;
        for (flat, &w) in b.values.iter().enumerate() {
            if w < 1e-15 {
                continue;
            }
            let labels: Vec<Point> = (0..4).map(|i| ctx.point((flat / np.pow(i)) % np, 2)).collect();
            let q = observable_distribution(&psi, &labels).unwrap();
            let e: f64 =
                q.iter().enumerate().map(|(k, p)| p * (std::f64::consts::TAU * k as f64 / d as f64).cos()).sum();
            mean += w * e;
        }
        assert_abs_diff_eq!(mean, a_exact(&psi, &r).unwrap(), epsilon = 1e-9);
    }
}

#[test]
fn observable_trivial_cases() {
    let mut rng = stream(66, 0);
    let ctx = PhaseContext::new(3, 1).unwrap();
    let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
    let s = stabiliser_state(&g).unwrap();
    let m = g.lagrangian();
    for _ in 0..20 {
        let labels: Vec<Point> = (0..4).map(|_| m.random_element(&mut rng)).collect();
        assert_eq!(observable_measure(&s, &labels, &mut rng).unwrap(), 1.0);
    }
    let psi = haar_random(3, 1, &mut rng).unwrap();
    assert_eq!(observable_measure(&psi, &vec![vec![0, 0]; 4], &mut rng).unwrap(), 1.0);
}

#[test]
fn learning_recovers_zero_state_and_random_groups() {
    let mut rng = stream(67, 0);
    let params = TesterParams::default();
    for n in 1..=3 {
        let psi = DenseState::zero(2, n).unwrap();
        for _ in 0..10 {
            let out = learn_stabiliser(&psi, &params, &mut rng).unwrap();
            if let Some(g) = out.group {
                let f = stabiliser_state(&g).unwrap().inner(&psi).unwrap().norm_sqr();
                assert_abs_diff_eq!(f, 1.0, epsilon = 1e-9);
            }
            assert!(out.phases.iter().all(|(x, s)| *s == 0 && x[n..].iter().all(|&c| c == 0)));
            assert!(out.copies_used <= 8 * (3 * n).div_ceil(4) + 2 * n + 8);
        }
    }
    for &(d, n) in &[(3, 1), (3, 2), (4, 1)] {
        let ctx = PhaseContext::new(d, n).unwrap();
        let mut failures = 0;
        for _ in 0..30 {
            let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
            let psi = stabiliser_state(&g).unwrap();
            match learn_stabiliser(&psi, &params, &mut rng).unwrap().group {
                Some(h) => {
                    let f = stabiliser_state(&h).unwrap().inner(&psi).unwrap().norm_sqr();
                    assert_abs_diff_eq!(f, 1.0, epsilon = 1e-9);
                }
                None => failures += 1,
            }
        }
        assert!(failures <= 15, "d={d} n={n} failures={failures}");
    }
}

#[test]
fn hidden_group_examples() {
    let mut rng = stream(68, 0);
    let params = TesterParams { epsilon: 0.25, ..TesterParams::default() };
    let ctx = PhaseContext::new(3, 1).unwrap();
    let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
    let out = hidden_group(&stabiliser_state(&g).unwrap(), &params, &mut rng).unwrap();
    assert_eq!(&out.module, g.lagrangian());
    assert_eq!(out.copies_used, 8 * out.rounds + 8);

    let psi = DenseState::zero(2, 1).unwrap().tensor(&t_state()).unwrap();
    let psi = DenseState::new(2, vec![2], psi.amplitudes().to_vec()).unwrap();
    let expected = unsigned_group(&psi, 1e-8).unwrap().module;
    assert_eq!(expected.size(), 2);
    assert_eq!(expected, canonicalize(2, 4, &[vec![1, 0, 0, 0]]));
    let mut ok = 0;
    for _ in 0..20 {
        if hidden_group(&psi, &params, &mut rng).unwrap().module == expected {
            ok += 1;
        }
    }
    assert!(ok >= 18);
}

#[test]
fn size_test_behaviour() {
    let mut rng = stream(69, 0);
    let ctx = PhaseContext::new(2, 2).unwrap();
    let eps = size_test_epsilon_bound(&ctx);
    let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
    let s = stabiliser_state(&g).unwrap();
    for t in 0..=2 {
        let params = TesterParams { epsilon: eps, size_exponent_t: t, ..TesterParams::default() };
        let v = test_size(&s, &params, &mut rng).unwrap();
        assert_eq!(v.decision, Decision::Accept);
        assert_eq!(v.samples_used, 8 * v.rounds + 8);
    }
    let haar = haar_random(2, 3, &mut rng).unwrap();
    let ctx3 = PhaseContext::new(2, 3).unwrap();
    let params =
        TesterParams { epsilon: size_test_epsilon_bound(&ctx3), size_exponent_t: 1, ..TesterParams::default() };
    assert_eq!(test_size(&haar, &params, &mut rng).unwrap().decision, Decision::Reject);
    let params0 = TesterParams { size_exponent_t: 0, ..params.clone() };
    assert_eq!(test_size(&haar, &params0, &mut rng).unwrap().decision, Decision::Accept);
    let loose = TesterParams { epsilon: 0.5, ..params.clone() };
    assert!(matches!(test_size(&haar, &loose, &mut rng), Err(Error::ParamOutOfRange(_))));
    let explore = TesterParams { exploratory: true, ..loose };
    assert!(test_size(&haar, &explore, &mut rng).unwrap().warning.is_some());
}

#[test]
fn size_test_checks_isotropy_at_one_qudit() {
    let mut rng = stream(70, 0);
    for d in [2, 3] {
        let ctx = PhaseContext::new(d, 1).unwrap();
        let params =
            TesterParams { epsilon: size_test_epsilon_bound(&ctx), size_exponent_t: 1, ..TesterParams::default() };
        for _ in 0..3 {
            let psi = haar_random(d, 1, &mut rng).unwrap();
            assert_eq!(test_size(&psi, &params, &mut rng).unwrap().isotropy_ok, Some(true));
        }
    }
}

#[test]
fn doped_outputs_are_never_called_haar() {
    let mut rng = stream(71, 0);
    let params = TesterParams::default();
    for t in 0..=1 {
        for _ in 0..20 {
            let (_, psi) = doped_clifford(2, 3, t, Doping::Fixed, &mut rng).unwrap();
            let v = doped_vs_haar(&psi, &params, &mut rng).unwrap();
            assert_eq!(v.decision, Decision::Accept);
            assert_eq!(v.samples_used, 8 * 3 + 8);
        }
    }
    let mut haar_calls = 0;
    for _ in 0..20 {
        let psi = haar_random(2, 3, &mut rng).unwrap();
        if doped_vs_haar(&psi, &params, &mut rng).unwrap().decision == Decision::Reject {
            haar_calls += 1;
        }
    }
    assert!(haar_calls >= 10);
}

#[test]
fn exact_testers_are_complete_and_count_copies() {
    let mut rng = stream(72, 0);
    let ctx = PhaseContext::new(3, 1).unwrap();
    let params = TesterParams { epsilon: 0.1, delta: 0.1, r: 2, ..TesterParams::default() };
    for _ in 0..20 {
        let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
        let s = stabiliser_state(&g).unwrap();
        let v = stab_test_povm(&s, &params, &mut rng).unwrap();
        assert_eq!(v.decision, Decision::Accept);
        assert_eq!(v.samples_used, 2 * 2 * v.rounds);
        let v = stab_test_bell(&s, &params, &mut rng).unwrap();
        assert_eq!(v.decision, Decision::Accept);
        assert_eq!(v.samples_used, 16 * v.rounds + 8);
        assert_eq!(v.rounds, stab_test_bell_rounds(3, 0.1, 0.1));
    }
    let far = t_state();
    let eps = 1.0 - stabiliser_fidelity(&far).unwrap().0;
    let params = TesterParams { epsilon: eps, delta: 0.1, r: 3, ..TesterParams::default() };
    assert_eq!(stab_test_povm(&far, &params, &mut rng).unwrap().decision, Decision::Reject);
    assert_eq!(stab_test_bell(&far, &params, &mut rng).unwrap().decision, Decision::Reject);
}

#[test]
fn tolerant_testers_validate_parameters() {
    let mut rng = stream(73, 0);
    let psi = t_state();
    let bad = TesterParams { epsilon1: 0.4, epsilon2: 0.5, r: 3, ..TesterParams::default() };
    assert!(matches!(tolerant_povm(&psi, &bad, &mut rng), Err(Error::GammaNonPositive(_))));
    assert!(matches!(tolerant_bell(&psi, &bad, &mut rng), Err(Error::AlphaNonPositive(_))));
    let s = DenseState::zero(2, 1).unwrap();
    let good = TesterParams { epsilon1: 0.0, epsilon2: 0.9, r: 3, delta: 0.1, ..TesterParams::default() };
    let v = tolerant_povm(&s, &good, &mut rng).unwrap();
    assert_eq!(v.decision, Decision::Accept);
    assert_abs_diff_eq!(v.threshold, 1.0 - gamma_r(2, 3, 0.0, 0.9) / 2.0, epsilon = 1e-15);
    let v = tolerant_bell(&s, &good, &mut rng).unwrap();
    assert_eq!(v.decision, Decision::Accept);
    assert_eq!(v.samples_used, 16 * v.rounds + 8);
}

#[test]
fn fixtures_hit_target_fidelity() {
    let s = DenseState::zero(2, 1).unwrap();
    for target in [0.999, 0.9, 0.8] {
        let psi = fidelity_fixture(&s, &t_state(), target).unwrap();
        assert_abs_diff_eq!(stabiliser_fidelity(&psi).unwrap().0, target, epsilon = 1e-6);
    }
    let s3 = DenseState::zero(3, 1).unwrap();
    let psi = fidelity_fixture(&s3, &magic_state(3).unwrap(), 0.95).unwrap();
    assert_abs_diff_eq!(stabiliser_fidelity(&psi).unwrap().0, 0.95, epsilon = 1e-6);
}

#[test]
fn range_tables_follow_formulas() {
    let rows = range_tables(3, 2, 20, 0.01).unwrap();
    assert_eq!(rows.len(), 400);
    for row in &rows {
        assert_eq!(row.gamma, gamma_r(3, 2, row.eps1, row.eps2));
        assert_eq!(row.copies_povm.is_some(), row.gamma > 0.0);
        assert_eq!(row.copies_bell.is_some(), row.alpha > 0.0);
    }
    let curve = range_curve(4, 3, 0.9, 0.01, 0.05, 50).unwrap();
    assert!(curve.windows(2).all(|w| w[0].gamma >= w[1].gamma));
    for (d, r) in [(3, 2), (4, 3), (6, 5)] {
        let (g, a) = eps1_limits(d, r, 0.9);
        assert!(gamma_r(d, r, g * (1.0 - 1e-9), 0.9) > 0.0 && gamma_r(d, r, g * (1.0 + 1e-9), 0.9) < 0.0);
        assert!(alpha(d, a * (1.0 - 1e-9), 0.9) > 0.0 && alpha(d, a * (1.0 + 1e-9), 0.9) < 0.0);
        let (g1, _) = eps1_limits(d, r, 1.0);
        assert_abs_diff_eq!(g1, gamma_boundary_eps1(d, r), epsilon = 1e-12);
    }
    assert!(range_tables(2, 2, 10, 0.1).is_err());
}

#[test]
fn random_span_captures_mass() {
    let mut rng = stream(74, 0);
    for d in [2, 3] {
        let ctx = PhaseContext::new(d, 1).unwrap();
        let p = p_table(&haar_random(d, 1, &mut rng).unwrap()).unwrap();
        let (eps, delta) = (0.2, 0.1);
        let m = span_mass_rounds(&ctx, eps, delta);
        let mut good = 0;
        for _ in 0..200 {
            let pts: Vec<Point> = (0..m).map(|_| ctx.point(sample_index(&p.values, &mut rng), 2)).collect();
            let span = canonicalize(d, 2, &pts);
            let mass: f64 = span.elements().iter().map(|x| p.at(x)).sum();
            if mass >= 1.0 - eps {
                good += 1;
            }
        }
        assert!(good as f64 >= 200.0 * (1.0 - delta));
    }
}

#[test]
fn fresh_mode_counts_sixteen_copies_per_sample() {
    let mut rng = stream(75, 0);
    let psi = DenseState::zero(3, 1).unwrap();
    let params = TesterParams { mode: DifferenceMode::Fresh, epsilon: 0.3, ..TesterParams::default() };
    let out = hidden_group(&psi, &params, &mut rng).unwrap();
    assert_eq!(out.copies_used, 16 * out.rounds);
}
