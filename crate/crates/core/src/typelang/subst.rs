use std::collections::BTreeMap;
use std::fmt;

use super::types::{TypeExpr, TypeVarId};

/// Variable bindings. Kept acyclic by the occurs check in `meet`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substitution {
    map: BTreeMap<TypeVarId, TypeExpr>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (TypeVarId, TypeExpr)>) -> Self {
        Substitution { map: pairs.into_iter().collect() }
    }

    pub fn get(&self, v: TypeVarId) -> Option<&TypeExpr> {
        self.map.get(&v)
    }

    pub fn insert(&mut self, v: TypeVarId, t: TypeExpr) {
        self.map.insert(v, t);
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TypeVarId, &TypeExpr)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    /// Follow variable-to-variable links until a non-variable or an unbound variable.
    pub fn walk<'a>(&'a self, t: &'a TypeExpr) -> &'a TypeExpr {
        let mut cur = t;
        while let TypeExpr::Var(v) = cur {
            match self.map.get(v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    /// Every binding fully applied, so that applying the result once reaches the fixpoint.
    pub fn normalized(&self) -> Substitution {
        Substitution { map: self.map.iter().map(|(k, v)| (*k, apply_subst(v, self))).collect() }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}↦{v}")?;
        }
        f.write_str("}")
    }
}

/// Replace bound variables recursively until none of the bound ones remain.
pub fn apply_subst(t: &TypeExpr, s: &Substitution) -> TypeExpr {
    if s.is_empty() {
        return t.clone();
    }
    t.map_vars(&mut |v| match s.get(v) {
        Some(bound) => apply_subst(bound, s),
        None => TypeExpr::Var(v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typelang::types::Atomic;

    fn x() -> TypeVarId {
        TypeVarId(1)
    }
    fn y() -> TypeVarId {
        TypeVarId(2)
    }

    #[test]
    fn binds_list_element() {
        let s = Substitution::from_pairs([(x(), TypeExpr::Atomic(Atomic::Int))]);
        assert_eq!(apply_subst(&TypeExpr::list(TypeExpr::Var(x())), &s), TypeExpr::list(TypeExpr::Atomic(Atomic::Int)));
    }

    #[test]
    fn ground_terms_are_untouched() {
        let s = Substitution::from_pairs([(x(), TypeExpr::Atomic(Atomic::Float))]);
        assert_eq!(apply_subst(&TypeExpr::Atomic(Atomic::Int), &s), TypeExpr::Atomic(Atomic::Int));
    }

    #[test]
    fn applies_transitively() {
        let s =
            Substitution::from_pairs([(x(), TypeExpr::Atomic(Atomic::Int)), (y(), TypeExpr::list(TypeExpr::Var(x())))]);
        let t = TypeExpr::func(TypeExpr::Var(x()), TypeExpr::Var(y()));
        assert_eq!(
            apply_subst(&t, &s),
            TypeExpr::func(TypeExpr::Atomic(Atomic::Int), TypeExpr::list(TypeExpr::Atomic(Atomic::Int)))
        );
    }
}
