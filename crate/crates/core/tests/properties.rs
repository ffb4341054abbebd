use std::sync::Arc;

use proptest::prelude::*;

use roeforge::colouring::{colour_permutations, decompose_translation, edge_colouring, verify_decomposition};
use roeforge::io::{parse_operator, parse_space, write_operator, ParsedOperator};
use roeforge::kazhdan::{averaging_from_colouring, kazhdan_projection, rate_constants, restrict};
use roeforge::scalar::{rational, Rational};
use roeforge::space::FiniteSpace;
use roeforge::transalg::{FinitePropOp, PartialTranslation};

/// Graph on `n` points: a path through all of them plus arbitrary chords.
fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..14).prop_flat_map(|n| {
        let chords = prop::collection::vec((0..n, 0..n), 0..2 * n);
        (Just(n), chords).prop_map(|(n, chords)| {
            let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            edges.extend(chords.into_iter().filter(|(u, v)| u != v));
            (n, edges)
        })
    })
}

fn space_of(n: usize, edges: &[(usize, usize)]) -> Arc<FiniteSpace> {
    Arc::new(FiniteSpace::from_graph("g", n, edges.iter().copied()).unwrap())
}

fn op_on(space: &Arc<FiniteSpace>, vals: &[i64]) -> FinitePropOp<Rational> {
    let n = space.len();
    let entries = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| space.dist_units(x, y).is_some_and(|d| d <= 2))
        .zip(vals.iter().cycle())
        .map(|((x, y), &v)| (x, y, rational(v, 1)));
    FinitePropOp::from_entries(space, entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_reverses_products((n, edges) in graph(), a in prop::collection::vec(-3i64..4, 1..20), b in prop::collection::vec(-3i64..4, 1..20)) {
        let space = space_of(n, &edges);
        let (s, t) = (op_on(&space, &a), op_on(&space, &b));
        prop_assert_eq!(s.try_mul(&t).unwrap().adjoint(), t.adjoint().try_mul(&s.adjoint()).unwrap());
        prop_assert!(s.try_mul(&t).unwrap().propagation() <= &(s.propagation() + t.propagation()));
    }

    #[test]
    fn colouring_is_proper_and_perms_are_involutions((n, edges) in graph(), r in 1i64..3) {
        let space = space_of(n, &edges);
        let col = edge_colouring(&space, &rational(r, 1)).unwrap();
        prop_assert!(col.is_proper());
        prop_assert!(col.colour_count() <= col.max_degree() + 1);
        for p in colour_permutations(&col) {
            let op = p.to_op::<Rational>();
            prop_assert_eq!(op.try_mul(&op).unwrap(), FinitePropOp::identity(&space));
        }
    }

    #[test]
    fn translations_decompose((n, edges) in graph(), shift in 0usize..3) {
        let space = space_of(n, &edges);
        // Moves along the spanning path by at most two steps.
        let pairs = (0..n).filter(|y| y + shift < n).map(|y| (y, y + shift));
        let t = PartialTranslation::new(&space, pairs).unwrap();
        let col = edge_colouring(&space, &rational(shift.max(1) as i64, 1)).unwrap();
        let dec = decompose_translation(&t, &col).unwrap();
        prop_assert!(verify_decomposition(&t, &dec));
    }

    #[test]
    fn averaging_fixes_projection((n, edges) in graph()) {
        let space = space_of(n, &edges);
        let a = averaging_from_colouring(&edge_colouring(&space, &rational(1, 1)).unwrap());
        let p = kazhdan_projection(&space).to_op::<Rational>();
        prop_assert_eq!(a.op().try_mul(&p).unwrap(), p.clone());
        prop_assert_eq!(restrict(&p, 0).unwrap().nnz(), n * n);
    }

    #[test]
    fn operator_files_round_trip((n, edges) in graph(), a in prop::collection::vec(-3i64..4, 1..20)) {
        let space = space_of(n, &edges);
        let s = op_on(&space, &a).scale(&rational(1, 3));
        match parse_operator(&write_operator(&s), &space).unwrap() {
            ParsedOperator::Rational(back) => prop_assert_eq!(back, s),
            ParsedOperator::Float(_) => prop_assert!(false, "mode changed"),
        }
    }

    #[test]
    fn graph_files_round_trip((n, edges) in graph()) {
        let text: String = edges.iter().map(|(u, v)| format!("edge p{u} p{v}\n")).collect();
        let space = parse_space(&format!("space g\n{text}"), "g").unwrap();
        prop_assert_eq!(space.len(), n);
        prop_assert_eq!(space.component_count(), 1);
    }

    #[test]
    fn rate_constants_are_ordered(c in 1e-9f64..1.0, n in 1usize..64) {
        let r = rate_constants(c * 2.0 * n as f64, n).unwrap();
        prop_assert!((0.0..1.0).contains(&r.delta_tilde));
        prop_assert!(r.delta <= r.delta_tilde);
        prop_assert!(r.gap > 0.0);
    }
}
