use proptest::prelude::*;

use srblab::laces::{
    breakpoints, compatible_mask, edge_list, is_irreducible, is_lace, lace_of, Compatibility, Graph,
};
use srblab::permsample::{z_linear, z_log};
use srblab::thermo::{rate_i, solve_c, ThermoInput};

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..=9).prop_flat_map(|n| {
        let slots = edge_list(n).len();
        proptest::collection::vec(any::<bool>(), slots).prop_map(move |bits| {
            let edges: Vec<_> = edge_list(n).into_iter().zip(bits).filter(|(_, b)| *b).map(|(e, _)| e).collect();
            Graph::new(n, &edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn breakpoints_are_uncrossed_cuts(g in graph_strategy()) {
        let edges = g.edges();
        for k in 1..g.n {
            let crossed = edges.iter().any(|&(i, j)| i <= k && k < j);
            prop_assert_eq!(breakpoints(&g).contains(&k), !crossed);
        }
        prop_assert_eq!(is_irreducible(&g).unwrap(), breakpoints(&g).is_empty());
    }

    #[test]
    fn canonical_lace_is_a_lace_inside_the_graph(g in graph_strategy()) {
        if is_irreducible(&g).unwrap() {
            let l = lace_of(&g).unwrap();
            let lg = l.graph();
            prop_assert!(is_lace(&lg));
            prop_assert_eq!(lg.mask & !g.mask, 0);
            // Everything else in g is compatible with the lace.
            let extra = g.mask & !lg.mask;
            prop_assert_eq!(extra & !compatible_mask(&l, Compatibility::Correct), 0);
            prop_assert_eq!(lace_of(&lg).unwrap(), l);
        }
    }

    #[test]
    fn linear_and_log_normalizers_agree(theta in proptest::collection::vec(0.05f64..20.0, 1..30)) {
        let n = theta.len();
        let lin = z_linear(&theta, n).unwrap().unwrap();
        let lg = z_log(&theta, n).unwrap();
        for m in 0..=n {
            prop_assert!((lin[m].ln() - lg[m]).abs() < 1e-10);
        }
    }

    #[test]
    fn rate_is_convex_along_segments(
        p in proptest::collection::vec(0.0f64..0.1, 12),
        q in proptest::collection::vec(0.0f64..0.1, 12),
        t in 0.0f64..1.0,
    ) {
        let gamma: Vec<f64> = (1..=12).map(|k| (k as f64).powf(-1.5)).collect();
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let lhs = rate_i(&mix, &gamma).unwrap();
        let rhs = t * rate_i(&p, &gamma).unwrap() + (1.0 - t) * rate_i(&q, &gamma).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn tilt_is_decreasing_in_density(a in 0.01f64..0.99, b in 0.01f64..0.99) {
        prop_assume!((a - b).abs() > 1e-6);
        let input = ThermoInput::free_gas(5, 1.0, 200).unwrap();
        let rc = input.critical_density();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let c_lo = solve_c(lo * rc, &input, 1e-14).unwrap().c;
        let c_hi = solve_c(hi * rc, &input, 1e-14).unwrap().c;
        prop_assert!(c_lo > c_hi);
    }
}
