mod common;

use std::sync::{Mutex, OnceLock};

use common::{intersect, subset, values, Oracle};
use proptest::prelude::*;
use qtype::typelang::{
    apply_subst, enumerate_ground, meet, narrow, relation, Atomic, Domain, GroundUniverse, Relation, Substitution,
    TypeExpr, TypeVarId,
};

const BASIS: [Atomic; 3] = [Atomic::Int, Atomic::Float, Atomic::Symbol];

fn ground() -> &'static Vec<TypeExpr> {
    static G: OnceLock<Vec<TypeExpr>> = OnceLock::new();
    G.get_or_init(|| enumerate_ground(&GroundUniverse::new(BASIS, 2, 2)))
}

fn oracle() -> &'static Mutex<Oracle> {
    static O: OnceLock<Mutex<Oracle>> = OnceLock::new();
    O.get_or_init(|| Mutex::new(Oracle::new(values(&BASIS, 2, 2))))
}

fn den(d: &Domain) -> Vec<u64> {
    oracle().lock().unwrap().denote_domain(d)
}

fn ground_type() -> impl Strategy<Value = TypeExpr> {
    (0..ground().len()).prop_map(|i| ground()[i].clone())
}

fn ground_domain() -> impl Strategy<Value = Domain> {
    prop::collection::vec(ground_type(), 1..4).prop_map(Domain::new)
}

/// Type expressions over variables `_0.._3`.
fn any_type() -> impl Strategy<Value = TypeExpr> {
    let leaf = prop_oneof![
        (0..4u32).prop_map(TypeExpr::var),
        prop::sample::select(BASIS.to_vec()).prop_map(TypeExpr::atomic),
        Just(TypeExpr::HList),
        Just(TypeExpr::stuple(["a", "b"])),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(TypeExpr::list),
            prop::collection::vec(inner.clone(), 0..3).prop_map(TypeExpr::Tuple),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| TypeExpr::dict(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| TypeExpr::func(a, b)),
        ]
    })
}

/// Acyclic substitutions: `_i` only maps to terms over higher-numbered variables.
fn acyclic_subst() -> impl Strategy<Value = Substitution> {
    prop::collection::vec(prop::option::of(any_type()), 4).prop_map(|ts| {
        Substitution::from_pairs(ts.into_iter().enumerate().filter_map(|(i, t)| {
            let i = i as u32;
            let t = t?;
            let shifted = t.map_vars(&mut |v| TypeExpr::Var(TypeVarId(v.0 + i + 1)));
            Some((TypeVarId(i), shifted))
        }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn meet_is_commutative(a in any_type(), b in any_type()) {
        match (meet(&a, &b), meet(&b, &a)) {
            (Ok((x, _)), Ok((y, _))) => prop_assert!(x.alpha_eq(&y), "{} vs {}", x, y),
            (Err(_), Err(_)) => {}
            (l, r) => prop_assert!(false, "one side failed: {:?} / {:?}", l, r),
        }
    }

    #[test]
    fn meet_is_idempotent(a in any_type()) {
        let (t, s) = meet(&a, &a).expect("a type meets itself");
        prop_assert_eq!(t, a);
        prop_assert!(s.is_empty());
    }

    #[test]
    fn meet_binds_consistently(a in any_type(), b in any_type()) {
        if let Ok((t, s)) = meet(&a, &b) {
            prop_assert_eq!(apply_subst(&t, &s), t.clone());
            let (l, r) = (apply_subst(&a, &s), apply_subst(&b, &s));
            // Both instantiated inputs contain the result.
            prop_assert!(meet(&l, &t).is_ok_and(|(m, _)| m.alpha_eq(&t)));
            prop_assert!(meet(&r, &t).is_ok_and(|(m, _)| m.alpha_eq(&t)));
        }
    }

    #[test]
    fn narrow_is_monotone(d1 in ground_domain(), d2 in ground_domain()) {
        let (n, s) = narrow(&d1, &d2);
        prop_assert!(s.is_empty());
        let (a, b, m) = (den(&d1), den(&d2), den(&n));
        prop_assert!(subset(&m, &a) && subset(&m, &b));
        prop_assert_eq!(m, intersect(&a, &b));
    }

    #[test]
    fn relation_agrees_with_denotations(inferred in ground_domain(), declared in ground_domain()) {
        let (i, d) = (den(&inferred), den(&declared));
        let expected = if intersect(&i, &d).iter().all(|w| *w == 0) {
            Relation::Disjoint
        } else if subset(&i, &d) {
            Relation::Subset
        } else {
            Relation::Overlap
        };
        prop_assert_eq!(relation(&inferred, &declared), expected);
        prop_assert_eq!(relation(&inferred, &inferred), Relation::Subset);
    }

    #[test]
    fn apply_subst_is_idempotent(t in any_type(), s in acyclic_subst()) {
        let once = apply_subst(&t, &s);
        prop_assert_eq!(apply_subst(&once, &s), once);
    }

    #[test]
    fn alpha_eq_is_renaming_invariant(t in any_type(), shift in 1..50u32) {
        let renamed = t.map_vars(&mut |v| TypeExpr::Var(TypeVarId(v.0 + shift)));
        prop_assert!(t.alpha_eq(&renamed));
        prop_assert_eq!(t.pretty(), renamed.pretty());
    }
}

#[test]
fn free_variables_block_subset() {
    let d = Domain::single(TypeExpr::list(TypeExpr::var(1)));
    assert_eq!(relation(&d, &d), Relation::Overlap);
}

#[test]
fn empty_general_list_is_not_a_typed_list() {
    let empty = TypeExpr::Tuple(vec![]);
    assert!(meet(&empty, &TypeExpr::list(TypeExpr::atomic(Atomic::Int))).is_err());
    assert_eq!(meet(&empty, &TypeExpr::HList).unwrap().0, empty);
}
