use std::collections::BTreeSet;

use nabla::terms::*;
use proptest::prelude::*;

fn i() -> Ty {
    Ty::base("i")
}

fn f(a: Term, b: Term) -> Term {
    Term::app(Term::cnst("f", Ty::arrows([i(), i()], i())), vec![a, b])
}

fn nom(k: u32) -> Term {
    Term::nominal(Nominal::new(k, i()))
}

/// Terms of type `i` over `a`, `f`, nominals n1..n5, variable X and beta
/// redexes built by abstracting nominal n9.
fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::cnst("a", i())),
        (1..6u32).prop_map(nom),
        Just(Term::var(Var::new("X", i()))),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| f(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(body, arg)| {
                let lam = Term::lam(
                    i(),
                    abstract_head(&body, &Head::Nominal(Nominal::new(9, i()))),
                );
                raw_app(lam, arg)
            }),
            inner.prop_map(|t| f(nom(9), t)),
        ]
    })
}

fn arb_perm() -> impl Strategy<Value = Permutation> {
    Just((1..=9u32).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|img| {
            Permutation::from_pairs(
                (1..=9u32)
                    .zip(img)
                    .map(|(a, b)| (Nominal::new(a, i()), Nominal::new(b, i()))),
            )
            .expect("bijection")
        })
}

proptest! {
    #[test]
    fn normalize_is_idempotent(t in arb_term()) {
        let n = normalize(&t);
        prop_assert_eq!(normalize(&n), n.clone());
        prop_assert_eq!(type_of(&n, &[]).unwrap(), i());
    }

    #[test]
    fn beta_agrees_with_nominal_replacement(body in arb_term(), arg in arb_term()) {
        let n9 = Nominal::new(9, i());
        let lam = Term::lam(i(), abstract_head(&body, &Head::Nominal(n9.clone())));
        let beta = normalize(&raw_app(lam, arg.clone()));
        let repl = normalize(&replace_nominals(&body, &|n| (*n == n9).then(|| arg.clone())));
        prop_assert_eq!(beta, repl);
    }

    #[test]
    fn permutation_inverse_round_trips(t in arb_term(), pi in arb_perm()) {
        prop_assert_eq!(pi.inverse().apply(&pi.apply(&t)), t.clone());
        let moved: BTreeSet<_> = support(&t).iter().map(|n| pi.get(n)).collect();
        prop_assert_eq!(support(&pi.apply(&t)), moved);
    }

    #[test]
    fn permutation_commutes_with_normalize(t in arb_term(), pi in arb_perm()) {
        prop_assert_eq!(normalize(&pi.apply(&t)), pi.apply(&normalize(&t)));
    }

    #[test]
    fn fresh_nominal_avoids_and_follows_order(
        avoid in proptest::collection::btree_set(1..8u32, 0..6),
        order in Just((1..=8u32).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let avoid: BTreeSet<_> = avoid.into_iter().map(|k| Nominal::new(k, i())).collect();
        let plain = fresh_nominal(&i(), &avoid);
        prop_assert!(!avoid.contains(&plain));
        prop_assert!(avoid.iter().filter(|n| n.index < plain.index).count() == plain.index as usize - 1);
        let ordered = with_nominal_order(&order, || fresh_nominal(&i(), &avoid));
        prop_assert!(!avoid.contains(&ordered));
        let first = order.iter().find(|k| !avoid.contains(&Nominal::new(**k, i()))).copied().unwrap_or(9);
        prop_assert_eq!(ordered.index, first);
    }
}
