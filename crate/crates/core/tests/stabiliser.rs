use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use qbell_core::phase_space::{p_table, WeylLabel};
use qbell_core::qstate::{apply_weyl, dense_weyl, doped_clifford, haar_random, DenseState, Doping};
use qbell_core::rng::stream;
use qbell_core::stabiliser::*;
use qbell_core::zmod::{symplectic_complement, PhaseContext};

fn overlap_up_to_phase(a: &DenseState, b: &DenseState) -> f64 {
    a.inner(b).unwrap().norm()
}

#[test]
fn closed_form_matches_projector_column() {
    let mut rng = stream(11, 0);
    for &(d, n) in &[(2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2), (5, 1), (5, 2), (6, 1)] {
        let ctx = PhaseContext::new(d, n).unwrap();
        for _ in 0..20 {
            let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
            let a = stabiliser_state(&g).unwrap();
            let b = stabiliser_state_closed_form(&g).unwrap();
            assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-9);
            assert!((overlap_up_to_phase(&a, &b) - 1.0).abs() < 1e-9, "d={d} n={n} {:?}", g.generators());
            for (x, s) in g.generators() {
                let moved = apply_weyl(&a, 0, &ctx, &WeylLabel::new(&ctx, x)).unwrap();
                let fixed = moved.scaled(ctx.omega_pow(*s));
                assert!((fixed.inner(&a).unwrap() - 1.0).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn projector_equals_state_outer_product() {
    let mut rng = stream(12, 0);
    for &(d, n) in &[(2, 2), (3, 1), (3, 2), (4, 1), (5, 1)] {
        let ctx = PhaseContext::new(d, n).unwrap();
        for _ in 0..5 {
            let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
            let s = stabiliser_state(&g).unwrap();
            let p = stabiliser_projector(g.as_partial()).unwrap();
            let dim = ctx.dim();
            for i in 0..dim {
                for j in 0..dim {
                    let o = s.amplitudes()[i] * s.amplitudes()[j].conj();
                    assert!((p[(i, j)] - o).norm() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn partial_projector_rank() {
    let ctx = PhaseContext::new(2, 2).unwrap();
    let g = PartialStabiliserGroup::new(&ctx, vec![(vec![1, 0, 0, 0], 0)]).unwrap();
    let p = stabiliser_projector(&g).unwrap();
    let trace: Complex64 = (0..4).map(|i| p[(i, i)]).sum();
    assert_abs_diff_eq!(trace.re, 2.0, epsilon = 1e-12);
    assert!(((&p * &p) - &p).iter().all(|z| z.norm() < 1e-12));
    let trivial = PartialStabiliserGroup::new(&ctx, vec![]).unwrap();
    let id = stabiliser_projector(&trivial).unwrap();
    assert!((id - qbell_core::qstate::CMatrix::identity(4, 4)).iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn enumeration_is_complete_and_distinct() {
    for &(d, n, count) in &[(2, 1, 6usize), (3, 1, 12), (5, 1, 30), (2, 2, 60), (4, 1, 28), (6, 1, 72)] {
        let ctx = PhaseContext::new(d, n).unwrap();
        let all = enumerate_stabiliser_states(&ctx).unwrap();
        assert_eq!(all.len(), count, "d={d} n={n}");
        for (i, (g, s)) in all.iter().enumerate() {
            let direct = stabiliser_state(g).unwrap();
            assert!((overlap_up_to_phase(s, &direct) - 1.0).abs() < 1e-9);
            for (_, t) in all.iter().skip(i + 1) {
                assert!(overlap_up_to_phase(s, t) < 1.0 - 1e-6);
            }
        }
    }
}

#[test]
fn random_groups_cover_all_lines() {
    let ctx = PhaseContext::new(3, 1).unwrap();
    let mut rng = stream(5, 0);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..2000 {
        let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
        seen.insert(g.lagrangian().clone());
    }
    assert_eq!(seen.len(), 4);
}

#[test]
fn unsigned_group_examples() {
    let zero = DenseState::zero(3, 2).unwrap();
    let u = unsigned_group(&zero, 1e-8).unwrap();
    assert_eq!(u.module.size(), 9);
    assert!(u.module.basis().iter().all(|x| x[2] == 0 && x[3] == 0));
    let mut rng = stream(3, 0);
    let ctx = PhaseContext::new(3, 2).unwrap();
    let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
    let s = stabiliser_state(&g).unwrap();
    let u = unsigned_group(&s, 1e-8).unwrap();
    assert_eq!(&u.module, g.lagrangian());
    for (x, ph) in &u.phases {
        assert_eq!(g.phase_of(x), Some(*ph));
    }
    let mut trivial = 0;
    for _ in 0..200 {
        let h = haar_random(2, 3, &mut rng).unwrap();
        if stabiliser_size(&h).unwrap() == 1 {
            trivial += 1;
        }
    }
    assert!(trivial >= 198);
}

fn t_state() -> DenseState {
    let a = (std::f64::consts::PI / 8.0).cos();
    let b = (std::f64::consts::PI / 8.0).sin();
    DenseState::new(2, vec![1], vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)]).unwrap()
}

#[test]
fn fidelity_examples() {
    let expected = (std::f64::consts::PI / 8.0).cos().powi(2);
    let (f, _) = stabiliser_fidelity(&t_state()).unwrap();
    assert_abs_diff_eq!(f, expected, epsilon = 1e-12);
    assert_abs_diff_eq!(k_sized_fidelity(&t_state(), 2).unwrap(), expected, epsilon = 1e-12);
    assert_abs_diff_eq!(k_sized_fidelity(&t_state(), 1).unwrap(), 1.0, epsilon = 1e-12);
    let mut rng = stream(8, 0);
    let ctx = PhaseContext::new(3, 1).unwrap();
    let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
    let (f, _) = stabiliser_fidelity(&stabiliser_state(&g).unwrap()).unwrap();
    assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
}

#[test]
fn fidelity_sandwich_and_lower_bound() {
    let mut rng = stream(9, 0);
    for &(d, n) in &[(2, 1), (2, 2), (3, 1), (5, 1)] {
        for _ in 0..30 {
            let psi = haar_random(d, n, &mut rng).unwrap();
            let (f, g) = stabiliser_fidelity(&psi).unwrap();
            let p = p_table(&psi).unwrap();
            let mass: f64 = g.lagrangian().elements().iter().map(|x| p.at(x)).sum();
            assert!(f > 0.0 && f < 1.0);
            assert!(mass <= f + 1e-9);
            let dn = (d as f64).powi(n as i32);
            let kf = k_sized_fidelity(&psi, dn as u128);
            if let Ok(kf) = kf {
                assert_abs_diff_eq!(kf, f, epsilon = 1e-9);
            }
            if f >= 0.5 {
                for x in g.lagrangian().elements() {
                    assert!(dn * p.at(&x) >= (2.0 * f - 1.0).powi(2) - 1e-9);
                }
            }
        }
    }
}

#[test]
fn lower_bound_on_p_for_near_stabiliser_states() {
    let mut rng = stream(10, 0);
    let ctx = PhaseContext::new(3, 1).unwrap();
    let mut checked = 0;
    while checked < 100 {
        let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
        let s = stabiliser_state(&g).unwrap();
        let noise = haar_random(3, 1, &mut rng).unwrap();
        let t: f64 = rand::Rng::random_range(&mut rng, 0.0..0.7);
        let amps = s.amplitudes().iter().zip(noise.amplitudes()).map(|(a, b)| a * t.cos() + b * t.sin()).collect();
        let psi = DenseState::new(3, vec![1], amps).unwrap();
        let (f, best) = stabiliser_fidelity(&psi).unwrap();
        if f < 0.5 {
            continue;
        }
        let p = p_table(&psi).unwrap();
        for x in best.lagrangian().elements() {
            assert!(3.0 * p.at(&x) >= (2.0 * f - 1.0).powi(2) - 1e-9);
        }
        checked += 1;
    }
}

#[test]
fn eigenstate_of_heavy_isotropic_submodule_is_close() {
    let mut rng = stream(13, 0);
    for &(d, n) in &[(2, 2), (3, 1), (3, 2)] {
        let ctx = PhaseContext::new(d, n).unwrap();
        let subs = isotropic_submodules(&ctx).unwrap();
        for _ in 0..20 {
            let psi = haar_random(d, n, &mut rng).unwrap();
            let p = p_table(&psi).unwrap();
            for x in &subs {
                let k = ctx.dim() as f64 / x.size() as f64;
                let mass: f64 = x.elements().iter().map(|y| p.at(y)).sum();
                let eps = 1.0 - mass * k;
                let w = max_eigenspace_weight(&ctx, x, &psi);
                assert!(w >= 1.0 - eps - 1e-9, "mass {mass} weight {w}");
            }
        }
    }
}

#[test]
fn clifford_circuits_preserve_stabiliser_size() {
    let mut rng = stream(14, 0);
    for _ in 0..50 {
        let (c, _) = doped_clifford(2, 3, 0, Doping::Fixed, &mut rng).unwrap();
        let psi = haar_random(2, 3, &mut rng).unwrap();
        let t = DenseState::new(2, vec![1], vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let inputs = [psi, t_state().tensor(&t).unwrap().tensor(&t).unwrap()];
        for input in inputs {
            let mut s = input.clone();
            let ctx1 = PhaseContext::new(2, 1).unwrap();
            for g in &c.gates {
                s = s.apply_local(&g.targets, &qbell_core::qstate::gate_matrix(&ctx1, g).unwrap()).unwrap();
            }
            assert_eq!(stabiliser_size(&s).unwrap(), stabiliser_size(&input).unwrap());
        }
    }
}

#[test]
fn doped_states_have_large_stabiliser_size() {
    let mut rng = stream(15, 0);
    for t in 0..=2usize {
        for _ in 0..10 {
            let (c, s) = doped_clifford(2, 3, t, Doping::Haar, &mut rng).unwrap();
            assert_eq!(c.doping_count, t);
            let size = stabiliser_size(&s).unwrap();
            assert!(size >= 2u128.pow((3i64 - 2 * t as i64).max(0) as u32));
            if t == 0 {
                assert_eq!(size, 8);
            }
        }
    }
}

#[test]
fn symplectic_matrices() {
    let ctx = PhaseContext::new(3, 1).unwrap();
    assert!(is_symplectic(&ctx, &[vec![1, 0], vec![0, 1]]));
    assert!(is_symplectic(&ctx, &[vec![0, 1], vec![-1, 0]]));
    assert!(!is_symplectic(&ctx, &[vec![2, 0], vec![0, 1]]));
}

#[test]
fn lagrangians_are_self_complementary() {
    for &(d, n) in &[(2, 2), (4, 1), (6, 1), (3, 2)] {
        let ctx = PhaseContext::new(d, n).unwrap();
        for m in lagrangian_submodules(&ctx).unwrap() {
            assert_eq!(symplectic_complement(&m), m);
        }
    }
}

#[test]
fn group_file_round_trip() {
    let mut rng = stream(16, 0);
    let ctx = PhaseContext::new(4, 2).unwrap();
    let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
    let json = serde_json::to_string(&GroupFile::from_group(&g)).unwrap();
    let back: GroupFile = serde_json::from_str(&json).unwrap();
    assert_eq!(back.into_group().unwrap(), g);
}

#[test]
fn stabiliser_expectations_are_roots_of_unity() {
    let mut rng = stream(17, 0);
    let ctx = PhaseContext::new(4, 1).unwrap();
    let g = random_stabiliser_group(&ctx, &mut rng).unwrap();
    let s = stabiliser_state(&g).unwrap();
    for x in g.lagrangian().elements() {
        let m = dense_weyl(&ctx, &WeylLabel::new(&ctx, &x)).unwrap();
        let v = nalgebra::DVector::from_vec(s.amplitudes().to_vec());
        let e = (v.adjoint() * (&m * &v))[(0, 0)];
        let sx = g.phase_of(&x).unwrap();
        assert!((e - ctx.omega_pow(-sx)).norm() < 1e-10);
    }
}
