//! Property tests for Smith normal form and submodule algebra over `Z_d`.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use qbell_core::zmod::{
    canonicalize, is_isotropic, orthogonal_complement, smith_normal_form, submodule_size_snf, symplectic_complement,
    symplectic_product, IntMatrix, Point,
};

fn matrix_strategy() -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-30i64..=30, r * c)))
}

fn generators_strategy() -> impl Strategy<Value = (i64, usize, Vec<Point>)> {
    (2i64..=12, 1usize..=4).prop_flat_map(|(d, m)| {
        let row = prop::collection::vec(0..d, m);
        (Just(d), Just(m), prop::collection::vec(row, 0..=4))
    })
}

fn symplectic_strategy() -> impl Strategy<Value = (i64, usize, Vec<Point>)> {
    (2i64..=8, 1usize..=2).prop_flat_map(|(d, n)| {
        let row = prop::collection::vec(0..d, 2 * n);
        (Just(d), Just(2 * n), prop::collection::vec(row, 0..=3))
    })
}

/// Closure of the generators under addition, by breadth-first search.
fn span_by_search(d: i64, m: usize, gens: &[Point]) -> HashSet<Point> {
    let mut seen: HashSet<Point> = HashSet::from([vec![0; m]]);
    let mut frontier = vec![vec![0; m]];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y: Point = x.iter().zip(g).map(|(a, b)| (a + b).rem_euclid(d)).collect();
            if seen.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    seen
}

fn all_vectors(d: i64, m: usize) -> Vec<Point> {
    (0..(d as usize).pow(m as u32))
        .map(|mut i| {
            (0..m)
                .map(|_| {
                    let c = (i % d as usize) as i64;
                    i /= d as usize;
                    c
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn snf_is_a_valid_factorisation((r, c, entries) in matrix_strategy()) {
        let rows: Vec<Vec<i64>> = entries.chunks(c).map(|x| x.to_vec()).collect();
        let a = IntMatrix::from_rows(&rows, c);
        let snf = smith_normal_form(&a);
        prop_assert_eq!(snf.u.mul(&a).mul(&snf.v), snf.s.clone());
        prop_assert!(snf.u.det().abs().is_one());
        prop_assert!(snf.v.det().abs().is_one());
        for i in 0..r {
            for j in 0..c {
                if i != j {
                    prop_assert!(snf.s.get(i, j).is_zero());
                }
            }
        }
        let diag = snf.diagonal();
        for w in diag.windows(2) {
            prop_assert!(!w[0].is_negative());
            if w[0].is_zero() {
                prop_assert!(w[1].is_zero());
            } else {
                prop_assert!((&w[1] % &w[0]).is_zero());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn submodule_size_agrees_with_search_and_snf((d, m, gens) in generators_strategy()) {
        let sub = canonicalize(d, m, &gens);
        let searched = span_by_search(d, m, &gens);
        prop_assert_eq!(sub.size(), searched.len() as u128);
        prop_assert_eq!(submodule_size_snf(d, m, &gens), searched.len() as u128);
        let listed: HashSet<Point> = sub.elements().into_iter().collect();
        prop_assert_eq!(&listed, &searched);
        for g in &gens {
            prop_assert!(sub.contains(g));
        }
    }

    #[test]
    fn canonical_form_is_unique((d, m, gens) in generators_strategy(), seed in any::<u64>()) {
        let sub = canonicalize(d, m, &gens);
        let mut rng = qbell_core::rng::stream(seed, 0);
        let resampled: Vec<Point> = (0..gens.len() + 3).map(|_| sub.random_element(&mut rng)).collect();
        let mut both = resampled.clone();
        both.extend(gens.iter().cloned());
        prop_assert_eq!(canonicalize(d, m, &both), sub);
    }

    #[test]
    fn orthogonal_complement_duality((d, m, gens) in generators_strategy()) {
        let sub = canonicalize(d, m, &gens);
        let perp = orthogonal_complement(&sub);
        prop_assert_eq!(sub.size() * perp.size(), (d as u128).pow(m as u32));
        prop_assert_eq!(orthogonal_complement(&perp), sub.clone());
        let expected: Vec<Point> = all_vectors(d, m)
            .into_iter()
            .filter(|y| sub.basis().iter().all(|b| b.iter().zip(y).map(|(p, q)| p * q).sum::<i64>().rem_euclid(d) == 0))
            .collect();
        prop_assert_eq!(perp.size(), expected.len() as u128);
    }

    #[test]
    fn symplectic_complement_duality((d, m, gens) in symplectic_strategy()) {
        let sub = canonicalize(d, m, &gens);
        let comp = symplectic_complement(&sub);
        prop_assert_eq!(sub.size() * comp.size(), (d as u128).pow(m as u32));
        prop_assert_eq!(symplectic_complement(&comp), sub.clone());
        for y in comp.elements() {
            for b in sub.basis() {
                prop_assert_eq!(symplectic_product(b, &y, d), 0);
            }
        }
        let isotropic = sub.elements().iter().all(|x| sub.elements().iter().all(|y| symplectic_product(x, y, d) == 0));
        prop_assert_eq!(is_isotropic(&sub), isotropic);
        prop_assert_eq!(isotropic, sub.is_subset_of(&comp));
    }

    #[test]
    fn sum_and_intersection_sizes((d, m, gens) in generators_strategy(), (_, _, other) in generators_strategy()) {
        let other: Vec<Point> = other.into_iter().map(|mut v| { v.resize(m, 0); v.iter_mut().for_each(|c| *c = c.rem_euclid(d)); v }).collect();
        let a = canonicalize(d, m, &gens);
        let b = canonicalize(d, m, &other);
        let s = a.sum(&b);
        let i = a.intersect(&b);
        prop_assert_eq!(s.size() * i.size(), a.size() * b.size());
        prop_assert!(i.is_subset_of(&a) && i.is_subset_of(&b));
        prop_assert!(a.is_subset_of(&s) && b.is_subset_of(&s));
    }
}

#[test]
fn snf_handles_large_entries() {
    let big = 1i64 << 40;
    let a = IntMatrix::from_rows(&[vec![big, big + 1, 3], vec![big - 7, 5, big], vec![11, big, big - 1]], 3);
    let snf = smith_normal_form(&a);
    assert_eq!(snf.u.mul(&a).mul(&snf.v), snf.s);
    let prod: BigInt = snf.diagonal().iter().product();
    assert_eq!(prod.abs(), a.det().abs());
}
