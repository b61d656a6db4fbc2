//! Intersection of type expressions.
//!
//! Constructors overlap. A `tuple` whose positions agree is a `list`, and
//! `hlist` contains both. `meet` returns a term denoting exactly the
//! intersection of its inputs, plus the variable bindings it forces.

use std::fmt;

use super::subst::{apply_subst, Substitution};
use super::types::{Atomic, Domain, TypeExpr};

/// The two inputs share no type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Disjoint;

impl fmt::Display for Disjoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("disjoint type expressions")
    }
}

pub fn meet(a: &TypeExpr, b: &TypeExpr) -> Result<(TypeExpr, Substitution), Disjoint> {
    let mut s = Substitution::new();
    let r = meet_in(a, b, &mut s).ok_or(Disjoint)?;
    let s = s.normalized();
    Ok((apply_subst(&r, &s), s))
}

fn bind(v: super::types::TypeVarId, t: &TypeExpr, s: &mut Substitution) -> Option<TypeExpr> {
    let t = apply_subst(t, s);
    if t.occurs(v) {
        return None;
    }
    s.insert(v, t.clone());
    Some(t)
}

fn meet_in(a: &TypeExpr, b: &TypeExpr, s: &mut Substitution) -> Option<TypeExpr> {
    let a = s.walk(a).clone();
    let b = s.walk(b).clone();
    use TypeExpr::*;
    match (&a, &b) {
        (Var(x), Var(y)) if x == y => Some(a),
        (Var(x), t) | (t, Var(x)) => bind(*x, t, s),
        (Atomic(x), Atomic(y)) => (x == y).then_some(a),
        (HList, t) | (t, HList) if t.is_list_shaped() => Some(t.clone()),
        (List(e1), List(e2)) => Some(TypeExpr::list(meet_in(e1, e2, s)?)),
        // `tuple([])` is the general empty list, which no typed list contains.
        (List(_), Tuple(items)) | (Tuple(items), List(_)) if items.is_empty() => None,
        (List(e), Tuple(items)) | (Tuple(items), List(e)) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(meet_in(e, item, s)?);
            }
            Some(Tuple(out))
        }
        (List(e), STuple(_)) | (STuple(_), List(e)) => {
            meet_in(e, &TypeExpr::Atomic(self::Atomic::Symbol), s)?;
            Some(if matches!(a, STuple(_)) { a.clone() } else { b.clone() })
        }
        (Tuple(xs), Tuple(ys)) => {
            if xs.len() != ys.len() {
                return None;
            }
            let mut out = Vec::with_capacity(xs.len());
            for (x, y) in xs.iter().zip(ys) {
                out.push(meet_in(x, y, s)?);
            }
            Some(Tuple(out))
        }
        (Tuple(items), STuple(names)) | (STuple(names), Tuple(items)) => {
            if items.len() != names.len() {
                return None;
            }
            for item in items {
                meet_in(item, &TypeExpr::Atomic(self::Atomic::Symbol), s)?;
            }
            Some(STuple(names.clone()))
        }
        (STuple(x), STuple(y)) => (x == y).then_some(a),
        (Dict(d1, r1), Dict(d2, r2)) => {
            let d = meet_in(d1, d2, s)?;
            let r = meet_in(r1, r2, s)?;
            Some(TypeExpr::dict(d, r))
        }
        (Func(a1, r1), Func(a2, r2)) => {
            let x = meet_in(a1, a2, s)?;
            let r = meet_in(r1, r2, s)?;
            Some(TypeExpr::func(x, r))
        }
        _ => None,
    }
}

/// Every non-disjoint pairwise meet of two domains, in `d1`-major order.
pub fn narrow_branches(d1: &Domain, d2: &Domain) -> Vec<(TypeExpr, Substitution)> {
    let mut out = Vec::new();
    for a in d1 {
        for b in d2 {
            if let Ok(m) = meet(a, b) {
                out.push(m);
            }
        }
    }
    out
}

/// Intersect two domains. Bindings are only reported when a single alternative
/// survives, since committing a variable on one branch of a disjunction would
/// wrongly constrain the others.
pub fn narrow(d1: &Domain, d2: &Domain) -> (Domain, Substitution) {
    let branches = narrow_branches(d1, d2);
    let result = Domain::new(branches.iter().map(|(t, _)| t.clone()));
    let subst = if result.is_singleton() && branches.iter().all(|(_, s)| *s == branches[0].1) {
        branches.into_iter().next().map(|(_, s)| s).unwrap_or_default()
    } else {
        Substitution::new()
    };
    (result, subst)
}

/// How an inferred domain relates to a declared one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Disjoint,
    Overlap,
    Subset,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Disjoint => "disjoint",
            Relation::Overlap => "overlap",
            Relation::Subset => "subset",
        })
    }
}

/// Compare an inferred domain with a declared one.
///
/// Exact when `inferred` is ground. Free variables in the inferred side make
/// the subset test unreliable, so such domains are never reported as subsets.
pub fn relation(inferred: &Domain, declared: &Domain) -> Relation {
    let mut any_overlap = false;
    let mut all_covered = true;
    for e in inferred {
        let mut covered = false;
        for d in declared {
            if let Ok((m, _)) = meet(e, d) {
                any_overlap = true;
                if m.alpha_eq(e) {
                    covered = true;
                }
            }
        }
        all_covered &= covered;
    }
    if !any_overlap {
        Relation::Disjoint
    } else if all_covered && inferred.is_ground() {
        Relation::Subset
    } else {
        Relation::Overlap
    }
}
