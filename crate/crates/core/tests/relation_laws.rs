use memcat_core::Relation;
use proptest::prelude::*;

fn rel(n: usize) -> impl Strategy<Value = Relation> {
    proptest::collection::vec(any::<bool>(), n * n)
        .prop_map(move |bits| Relation::from_fn(n, |x, y| bits[x * n + y]))
}

fn sparse(n: usize) -> impl Strategy<Value = Relation> {
    proptest::collection::vec(prop::bool::weighted(0.15), n * n)
        .prop_map(move |bits| Relation::from_fn(n, |x, y| bits[x * n + y]))
}

fn triple() -> impl Strategy<Value = (Relation, Relation, Relation)> {
    (1usize..=8).prop_flat_map(|n| (rel(n), rel(n), rel(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn associativity((a, b, c) in triple()) {
        prop_assert_eq!(a.seq(&b).seq(&c), a.seq(&b.seq(&c)));
        prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
        prop_assert_eq!(a.inter(&b).inter(&c), a.inter(&b.inter(&c)));
    }

    #[test]
    fn idempotence((a, _, _) in triple()) {
        prop_assert_eq!(a.union(&a), a.clone());
        prop_assert_eq!(a.inter(&a), a.clone());
        prop_assert_eq!(a.plus().plus(), a.plus());
        prop_assert_eq!(a.star().star(), a.star());
    }

    #[test]
    fn closure_laws((a, _, _) in triple()) {
        let n = a.universe();
        let p = a.plus();
        prop_assert!(a.is_subset(&p));
        prop_assert!(p.seq(&p).is_subset(&p));
        prop_assert_eq!(p.clone(), a.union(&a.seq(&p)));
        prop_assert_eq!(a.star(), Relation::identity(n).union(&p));
    }

    #[test]
    fn distributivity_and_inverse((a, b, c) in triple()) {
        prop_assert_eq!(a.seq(&b.union(&c)), a.seq(&b).union(&a.seq(&c)));
        prop_assert_eq!(a.inverse().inverse(), a.clone());
        prop_assert_eq!(a.seq(&b).inverse(), b.inverse().seq(&a.inverse()));
        prop_assert_eq!(a.diff(&b).union(&a.inter(&b)), a.clone());
    }

    #[test]
    fn acyclic_iff_closure_irreflexive(a in (1usize..=8).prop_flat_map(sparse)) {
        prop_assert_eq!(a.is_acyclic(), a.plus().is_irreflexive());
        if let Err(cycle) = a.check_acyclic() {
            prop_assert!(!cycle.is_empty());
            for (i, &x) in cycle.iter().enumerate() {
                prop_assert!(a.contains(x, cycle[(i + 1) % cycle.len()]));
            }
        }
    }
}
