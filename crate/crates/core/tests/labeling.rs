mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use qtype::engine::{Constraint, ConstraintStore, Origin, Registry};
use qtype::labeling::{choose_split, label, LabelOutcome, LabelingConfig};
use qtype::typelang::{Atomic, Domain, TypeExpr, TypeVarId};

const A: Atomic = Atomic::Int;
const B: Atomic = Atomic::Float;
const C: Atomic = Atomic::Symbol;

fn row(a: Atomic, b: Atomic, r: Atomic) -> TypeExpr {
    TypeExpr::func(TypeExpr::Tuple(vec![TypeExpr::atomic(a), TypeExpr::atomic(b)]), TypeExpr::atomic(r))
}

/// Store over keys 1..=n with one table relation `t` registered.
fn table_store(n: u32, rows: &[(Atomic, Atomic, Atomic)]) -> ConstraintStore {
    let mut r = Registry::standard();
    r.register_table("t", &Domain::new(rows.iter().map(|(a, b, c)| row(*a, *b, *c)))).unwrap();
    ConstraintStore::new(n, Arc::new(r))
}

fn dom(store: &mut ConstraintStore, k: u32, atoms: &[Atomic]) {
    store.post(Constraint::dom(TypeVarId(k), Domain::atomics(atoms.iter().copied())), Origin::external());
}

fn rel(store: &mut ConstraintStore, args: [u32; 3]) {
    store.post(
        Constraint::Rel { name: "t".into(), args: args.iter().map(|k| TypeVarId(*k)).collect() },
        Origin::external(),
    );
}

/// Two keys that only a split can separate.
fn ambiguous() -> ConstraintStore {
    let mut s = table_store(3, &[(A, A, A), (B, B, B), (A, B, C)]);
    for k in 1..=3 {
        dom(&mut s, k, &[A, B, C]);
    }
    rel(&mut s, [1, 2, 3]);
    s.propagate();
    s
}

#[test]
fn nothing_to_split_once_every_key_is_fixed() {
    let mut s = table_store(3, &[(A, B, C)]);
    dom(&mut s, 1, &[A]);
    dom(&mut s, 2, &[B]);
    dom(&mut s, 3, &[C]);
    rel(&mut s, [1, 2, 3]);
    s.propagate();
    assert_eq!(choose_split(&s), None);
}

#[test]
fn keys_outside_active_relations_are_not_split() {
    let mut s = table_store(2, &[(A, B, C)]);
    dom(&mut s, 1, &[A, B, C]);
    dom(&mut s, 2, &[A, B]);
    s.propagate();
    assert_eq!(choose_split(&s), None);
    assert!(matches!(label(&s, &LabelingConfig::default()), LabelOutcome::Solutions(v) if v.len() == 1));
}

#[test]
fn the_smallest_domain_is_split_first() {
    let s = ambiguous();
    // Keys 1 and 2 have two members left, key 3 has three.
    assert_eq!(s.domain(TypeVarId(3)).map(|d| d.len()), Some(3));
    assert_eq!(choose_split(&s), Some(TypeVarId(1)));
}

#[test]
fn split_budget_is_enforced() {
    let s = ambiguous();
    assert!(choose_split(&s).is_some());
    let tight = LabelingConfig { max_splits: 0, max_solutions: 64 };
    assert!(matches!(label(&s, &tight), LabelOutcome::BudgetExceeded { .. }));
}

#[test]
fn solution_cap_is_enforced() {
    let s = ambiguous();
    let capped = LabelingConfig { max_splits: 100, max_solutions: 1 };
    match label(&s, &capped) {
        LabelOutcome::Solutions(v) => assert_eq!(v.len(), 1),
        other => panic!("expected one solution, got {other:?}"),
    }
}

#[test]
fn conflicted_input_is_reported_precisely() {
    let mut s = table_store(3, &[(A, A, A)]);
    dom(&mut s, 1, &[B]);
    rel(&mut s, [1, 2, 3]);
    s.propagate();
    assert!(s.is_conflicted());
    assert!(matches!(label(&s, &LabelingConfig::default()), LabelOutcome::Inconsistent { imprecise: false, .. }));
}

#[test]
fn exhausted_alternatives_are_flagged_imprecise() {
    // `t` needs key 3 equal to key 1, `u` needs them different.
    let mut r = Registry::standard();
    r.register_table("t", &Domain::new([row(A, A, A), row(B, B, B)])).unwrap();
    r.register_table("u", &Domain::new([row(A, A, B), row(B, B, A)])).unwrap();
    let mut s = ConstraintStore::new(3, Arc::new(r));
    for k in 1..=3 {
        dom(&mut s, k, &[A, B]);
    }
    for name in ["t", "u"] {
        s.post(Constraint::Rel { name: name.into(), args: (1..=3).map(TypeVarId).collect() }, Origin::external());
    }
    s.propagate();
    assert!(!s.is_conflicted());
    assert!(matches!(label(&s, &LabelingConfig::default()), LabelOutcome::Inconsistent { imprecise: true, .. }));
}

fn corpus_stores() -> Vec<(String, ConstraintStore)> {
    let mut srcs: Vec<String> =
        ["lambda.q", "vector.q", "cond.q", "dict.q", "lists.q", "increment.q"].iter().map(|f| fixture(f)).collect();
    srcs.extend((0..30).map(random_program));
    srcs.into_iter()
        .map(|src| {
            let (_, store) = propagated(&src);
            (src, store)
        })
        .collect()
}

#[test]
fn solutions_are_stable_under_repropagation() {
    for (src, store) in corpus_stores() {
        let LabelOutcome::Solutions(sols) = label(&store, &LabelingConfig::default()) else { continue };
        for sol in sols {
            let mut again = sol.clone();
            for k in 0..=sol.node_count() {
                if let Some(d) = sol.domain(TypeVarId(k)) {
                    again.post(Constraint::dom(TypeVarId(k), d), Origin::external());
                }
            }
            again.propagate();
            assert!(!again.is_conflicted(), "{src:?}: solution conflicts with itself");
            assert_eq!(canonical(&again), canonical(&sol), "{src:?}: solution moved");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labeling_leaves_its_input_alone(seed in any::<u64>()) {
        let (_, store) = propagated(&random_program(seed));
        let before = store.clone();
        let _ = label(&store, &LabelingConfig::default());
        prop_assert!(store == before);
    }

    #[test]
    fn solutions_only_narrow_ground_domains(seed in any::<u64>()) {
        let (_, store) = propagated(&random_program(seed));
        if let LabelOutcome::Solutions(sols) = label(&store, &LabelingConfig::default()) {
            let mut oracle = Oracle::new(values(&[A, B, C, Atomic::Long, Atomic::Boolean, Atomic::Char], 1, 2));
            for sol in &sols {
                prop_assert!(!sol.is_conflicted());
                for k in 0..=store.node_count() {
                    let (Some(before), Some(after)) = (store.domain(TypeVarId(k)), sol.domain(TypeVarId(k))) else {
                        continue;
                    };
                    if before.is_ground() && after.is_ground() {
                        let (b, a) = (oracle.denote_domain(&before), oracle.denote_domain(&after));
                        prop_assert!(subset(&a, &b), "id({}) widened from {} to {}", k, before, after);
                    }
                }
            }
        }
    }
}
