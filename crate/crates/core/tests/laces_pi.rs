use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srblab::laces::{
    classify_type, edge_list, enumerate_irreducible, enumerate_laces, lace_identity_check, lace_of, Graph, DEFAULT_CAP,
};
use srblab::paths::{Model, PairPotential};
use srblab::pi::{convolution_identity_check, estimate_pi_integrated, estimate_u_n};
use srblab::RngSpec;

/// Cut `k` (between `k` and `k + 1`) is crossed by some edge.
fn crosses_all(n: usize, edges: &[(usize, usize)]) -> bool {
    (1..n).all(|k| edges.iter().any(|&(i, j)| i <= k && k < j))
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<(usize, usize)>> {
    let all = edge_list(n);
    (0u64..1 << all.len()).map(move |m| {
        all.iter()
            .enumerate()
            .filter(|(b, _)| m >> b & 1 == 1)
            .map(|(_, e)| *e)
            .collect()
    })
}

#[test]
fn irreducible_counts_match_brute_force() {
    for n in 2..=5 {
        let oracle = subsets(n).filter(|e| crosses_all(n, e)).count();
        assert_eq!(enumerate_irreducible(n, DEFAULT_CAP).unwrap().len(), oracle, "N={n}");
    }
    assert_eq!(subsets(3).filter(|e| crosses_all(3, e)).count(), 5);
}

#[test]
fn laces_are_exactly_the_minimal_irreducible_graphs() {
    for n in 2..=6 {
        let oracle: BTreeSet<Vec<(usize, usize)>> = subsets(n)
            .filter(|e| crosses_all(n, e))
            .filter(|e| {
                (0..e.len()).all(|drop| {
                    let rest: Vec<_> = e.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, x)| *x).collect();
                    !crosses_all(n, &rest)
                })
            })
            .collect();
        let found: BTreeSet<Vec<(usize, usize)>> =
            enumerate_laces(n, DEFAULT_CAP).unwrap().into_iter().map(|l| l.edges).collect();
        assert_eq!(found, oracle, "N={n}");
    }
    assert!(enumerate_laces(1, DEFAULT_CAP).unwrap().is_empty());
    assert_eq!(enumerate_laces(2, DEFAULT_CAP).unwrap()[0].edges, vec![(1, 2)]);
}

#[test]
fn lace_types_partition_the_edges() {
    for n in 2..=7 {
        for l in enumerate_laces(n, DEFAULT_CAP).unwrap() {
            assert_eq!(classify_type(&l).0.iter().sum::<usize>(), l.len());
        }
    }
}

#[test]
fn graphs_with_the_long_edge_have_the_trivial_lace() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=8 {
        for _ in 0..50 {
            let mut edges: Vec<(usize, usize)> =
                edge_list(n).into_iter().filter(|_| rng.random::<f64>() < 0.4).collect();
            if !edges.contains(&(1, n)) {
                edges.push((1, n));
            }
            edges.sort();
            let l = lace_of(&Graph::new(n, &edges).unwrap()).unwrap();
            assert_eq!(l.edges, vec![(1, n)]);
        }
    }
}

#[test]
fn identity_check_examples() {
    let zero = lace_identity_check(4, &[0.0; 16], DEFAULT_CAP).unwrap();
    assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
    let one = lace_identity_check(2, &[1.0; 4], DEFAULT_CAP).unwrap();
    assert_eq!((one.lhs, one.rhs), (-1.0, -1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 2..=6 {
        let mut u = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                u[i * n + j] = rng.random();
                u[j * n + i] = u[i * n + j];
            }
        }
        assert!(lace_identity_check(n, &u, DEFAULT_CAP).unwrap().discrepancy <= 1e-12);
    }
    assert!(lace_identity_check(3, &[0.0, 0.5, 0.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0], DEFAULT_CAP).is_err());
}

fn model(alpha: f64) -> Model {
    Model::new(2, alpha, PairPotential::step_ball(1.0, 1.0).unwrap()).with_steps(8)
}

#[test]
fn two_leg_irreducible_mass_is_nonpositive() {
    let e = estimate_pi_integrated(&model(0.8), 2, 4000, &RngSpec::new(1)).unwrap();
    assert!(e.value <= 0.0 && e.value + 4.0 * e.std_error >= -1.0);
    let f = estimate_pi_integrated(&model(0.0), 4, 100, &RngSpec::new(1)).unwrap();
    assert_eq!(f.value, 0.0);
}

#[test]
fn lace_size_breakdown_adds_up_beyond_direct_range() {
    let e = estimate_pi_integrated(&model(0.5), 6, 300, &RngSpec::new(2)).unwrap();
    let total: f64 = e.by_lace_size.iter().sum();
    assert!((total - e.value).abs() < 1e-12 * e.value.abs().max(1e-3));
}

#[test]
fn partition_function_decreases_with_length() {
    let check = convolution_identity_check(&model(0.6), 6, 2000, &RngSpec::new(3)).unwrap();
    let z: Vec<f64> = check.rows.iter().map(|r| r.z.mean).collect();
    assert!(z.windows(2).all(|w| w[1] <= w[0]), "{z:?}");
    assert_eq!(check.rows[0].residual, 0.0);
    assert!(check.rows[1].residual.abs() < 1e-12);
    assert!(check.to_csv().starts_with("N,Z_N,Z_err,P_N,P_err,r_N,r_err\n"));
}

#[test]
fn u_two_at_origin_is_positive() {
    let anchors = vec![vec![0.0; 2]; 4];
    let u = estimate_u_n(&model(0.5), &anchors, 2000, &RngSpec::new(4)).unwrap();
    assert!(u.value > 0.0);
    let none = Model::new(2, 0.5, PairPotential::zero()).with_steps(8);
    assert_eq!(estimate_u_n(&none, &anchors, 100, &RngSpec::new(4)).unwrap().value, 0.0);
}
