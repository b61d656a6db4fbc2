use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The sixteen scalar types of Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atomic {
    Boolean,
    Byte,
    Short,
    Int,
    Long,
    Real,
    Float,
    Char,
    Symbol,
    Date,
    Datetime,
    Minute,
    Second,
    Time,
    Timespan,
    Timestamp,
}

impl Atomic {
    pub const ALL: [Atomic; 16] = [
        Atomic::Boolean,
        Atomic::Byte,
        Atomic::Short,
        Atomic::Int,
        Atomic::Long,
        Atomic::Real,
        Atomic::Float,
        Atomic::Char,
        Atomic::Symbol,
        Atomic::Date,
        Atomic::Datetime,
        Atomic::Minute,
        Atomic::Second,
        Atomic::Time,
        Atomic::Timespan,
        Atomic::Timestamp,
    ];

    /// Numeric atomics in promotion order.
    pub const NUMERIC: [Atomic; 7] =
        [Atomic::Boolean, Atomic::Byte, Atomic::Short, Atomic::Int, Atomic::Long, Atomic::Real, Atomic::Float];

    pub fn name(self) -> &'static str {
        match self {
            Atomic::Boolean => "boolean",
            Atomic::Byte => "byte",
            Atomic::Short => "short",
            Atomic::Int => "int",
            Atomic::Long => "long",
            Atomic::Real => "real",
            Atomic::Float => "float",
            Atomic::Char => "char",
            Atomic::Symbol => "symbol",
            Atomic::Date => "date",
            Atomic::Datetime => "datetime",
            Atomic::Minute => "minute",
            Atomic::Second => "second",
            Atomic::Time => "time",
            Atomic::Timespan => "timespan",
            Atomic::Timestamp => "timestamp",
        }
    }

    /// Position in the numeric promotion order, `None` for non-numeric types.
    pub fn numeric_rank(self) -> Option<usize> {
        Atomic::NUMERIC.iter().position(|a| *a == self)
    }

    pub fn is_numeric(self) -> bool {
        self.numeric_rank().is_some()
    }
}

impl fmt::Display for Atomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Atomic {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Atomic::ALL.iter().copied().find(|a| a.name() == s).ok_or(())
    }
}

/// Identity of a type variable. Node identifiers double as type variables:
/// the variable with the same number as a node stands for that node's type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeVarId(pub u32);

impl fmt::Display for TypeVarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{}", self.0)
    }
}

/// A symbolic type term. Each term denotes a (possibly infinite) set of Q types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeExpr {
    Atomic(Atomic),
    Var(TypeVarId),
    /// Homogeneous lists with elements of the given type.
    List(Box<TypeExpr>),
    /// Every list, homogeneous or not.
    HList,
    /// Lists of exactly this length with per-position types.
    Tuple(Vec<TypeExpr>),
    /// The single symbol list with exactly these names.
    STuple(Vec<String>),
    Dict(Box<TypeExpr>, Box<TypeExpr>),
    Func(Box<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn atomic(a: Atomic) -> Self {
        TypeExpr::Atomic(a)
    }

    pub fn var(v: u32) -> Self {
        TypeExpr::Var(TypeVarId(v))
    }

    pub fn list(e: TypeExpr) -> Self {
        TypeExpr::List(Box::new(e))
    }

    pub fn dict(d: TypeExpr, r: TypeExpr) -> Self {
        TypeExpr::Dict(Box::new(d), Box::new(r))
    }

    pub fn func(a: TypeExpr, r: TypeExpr) -> Self {
        TypeExpr::Func(Box::new(a), Box::new(r))
    }

    pub fn stuple<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        TypeExpr::STuple(names.into_iter().map(Into::into).collect())
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, TypeExpr::Atomic(_))
    }

    pub fn as_atomic(&self) -> Option<Atomic> {
        match self {
            TypeExpr::Atomic(a) => Some(*a),
            _ => None,
        }
    }

    /// True for the list-like constructors: `list`, `hlist`, `tuple`, `stuple`.
    pub fn is_list_shaped(&self) -> bool {
        matches!(self, TypeExpr::List(_) | TypeExpr::HList | TypeExpr::Tuple(_) | TypeExpr::STuple(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            TypeExpr::Var(_) => false,
            TypeExpr::Atomic(_) | TypeExpr::HList | TypeExpr::STuple(_) => true,
            TypeExpr::List(e) => e.is_ground(),
            TypeExpr::Tuple(es) => es.iter().all(TypeExpr::is_ground),
            TypeExpr::Dict(a, b) | TypeExpr::Func(a, b) => a.is_ground() && b.is_ground(),
        }
    }

    /// Nesting depth; atomics, variables and name tuples sit at depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TypeExpr::Atomic(_) | TypeExpr::Var(_) => 0,
            TypeExpr::HList | TypeExpr::STuple(_) => 1,
            TypeExpr::List(e) => 1 + e.depth(),
            TypeExpr::Tuple(es) => 1 + es.iter().map(TypeExpr::depth).max().unwrap_or(0),
            TypeExpr::Dict(a, b) | TypeExpr::Func(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn occurs(&self, v: TypeVarId) -> bool {
        match self {
            TypeExpr::Var(w) => *w == v,
            TypeExpr::Atomic(_) | TypeExpr::HList | TypeExpr::STuple(_) => false,
            TypeExpr::List(e) => e.occurs(v),
            TypeExpr::Tuple(es) => es.iter().any(|e| e.occurs(v)),
            TypeExpr::Dict(a, b) | TypeExpr::Func(a, b) => a.occurs(v) || b.occurs(v),
        }
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<TypeVarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<TypeVarId>) {
        match self {
            TypeExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            TypeExpr::Atomic(_) | TypeExpr::HList | TypeExpr::STuple(_) => {}
            TypeExpr::List(e) => e.collect_vars(out),
            TypeExpr::Tuple(es) => es.iter().for_each(|e| e.collect_vars(out)),
            TypeExpr::Dict(a, b) | TypeExpr::Func(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Rebuild the term, replacing every variable by `f(var)`.
    pub fn map_vars(&self, f: &mut impl FnMut(TypeVarId) -> TypeExpr) -> TypeExpr {
        match self {
            TypeExpr::Var(v) => f(*v),
            TypeExpr::Atomic(_) | TypeExpr::HList | TypeExpr::STuple(_) => self.clone(),
            TypeExpr::List(e) => TypeExpr::list(e.map_vars(f)),
            TypeExpr::Tuple(es) => TypeExpr::Tuple(es.iter().map(|e| e.map_vars(f)).collect()),
            TypeExpr::Dict(a, b) => TypeExpr::dict(a.map_vars(f), b.map_vars(f)),
            TypeExpr::Func(a, b) => TypeExpr::func(a.map_vars(f), b.map_vars(f)),
        }
    }

    /// Consistent variable renaming test.
    pub fn alpha_eq(&self, other: &TypeExpr) -> bool {
        let mut fwd = HashMap::new();
        let mut bwd = HashMap::new();
        alpha_eq_in(self, other, &mut fwd, &mut bwd)
    }

    /// Render with a custom variable printer.
    pub fn display_with<'a>(&'a self, names: &'a dyn Fn(TypeVarId) -> String) -> DisplayWith<'a> {
        DisplayWith { expr: self, names }
    }

    /// Rename variables to `A`, `B`, ... in order of first occurrence.
    pub fn pretty(&self) -> String {
        pretty_many(std::slice::from_ref(self))
    }
}

/// Render several terms sharing one canonical variable naming, joined by `" | "`.
pub fn pretty_many(exprs: &[TypeExpr]) -> String {
    let mut order: Vec<TypeVarId> = Vec::new();
    for e in exprs {
        for v in e.vars() {
            if !order.contains(&v) {
                order.push(v);
            }
        }
    }
    let names = move |v: TypeVarId| {
        let i = order.iter().position(|w| *w == v).unwrap_or(0);
        canonical_var_name(i)
    };
    exprs.iter().map(|e| e.display_with(&names).to_string()).collect::<Vec<_>>().join(" | ")
}

fn canonical_var_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{}{}", letter, i / 26)
    }
}

fn alpha_eq_in(
    a: &TypeExpr,
    b: &TypeExpr,
    fwd: &mut HashMap<TypeVarId, TypeVarId>,
    bwd: &mut HashMap<TypeVarId, TypeVarId>,
) -> bool {
    match (a, b) {
        (TypeExpr::Var(x), TypeExpr::Var(y)) => {
            let f = *fwd.entry(*x).or_insert(*y);
            let g = *bwd.entry(*y).or_insert(*x);
            f == *y && g == *x
        }
        (TypeExpr::Atomic(x), TypeExpr::Atomic(y)) => x == y,
        (TypeExpr::HList, TypeExpr::HList) => true,
        (TypeExpr::STuple(x), TypeExpr::STuple(y)) => x == y,
        (TypeExpr::List(x), TypeExpr::List(y)) => alpha_eq_in(x, y, fwd, bwd),
        (TypeExpr::Tuple(xs), TypeExpr::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_eq_in(x, y, fwd, bwd))
        }
        (TypeExpr::Dict(a1, b1), TypeExpr::Dict(a2, b2)) | (TypeExpr::Func(a1, b1), TypeExpr::Func(a2, b2)) => {
            alpha_eq_in(a1, a2, fwd, bwd) && alpha_eq_in(b1, b2, fwd, bwd)
        }
        _ => false,
    }
}

pub struct DisplayWith<'a> {
    expr: &'a TypeExpr,
    names: &'a dyn Fn(TypeVarId) -> String,
}

impl DisplayWith<'_> {
    fn sub<'b>(&'b self, expr: &'b TypeExpr) -> DisplayWith<'b> {
        DisplayWith { expr, names: self.names }
    }
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            TypeExpr::Atomic(a) => write!(f, "{a}"),
            TypeExpr::Var(v) => f.write_str(&(self.names)(*v)),
            TypeExpr::List(e) => write!(f, "list({})", self.sub(e)),
            TypeExpr::HList => f.write_str("hlist"),
            TypeExpr::Tuple(es) => {
                f.write_str("tuple(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", self.sub(e))?;
                }
                f.write_str(")")
            }
            TypeExpr::STuple(ns) => write!(f, "stuple({})", ns.join(", ")),
            TypeExpr::Dict(a, b) => write!(f, "dict({}, {})", self.sub(a), self.sub(b)),
            TypeExpr::Func(a, b) => {
                if matches!(**a, TypeExpr::Func(..)) {
                    write!(f, "({}) -> {}", self.sub(a), self.sub(b))
                } else {
                    write!(f, "{} -> {}", self.sub(a), self.sub(b))
                }
            }
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |v: TypeVarId| v.to_string();
        write!(f, "{}", self.display_with(&names))
    }
}

/// A finite list of alternatives; its meaning is the union of the members'.
/// An empty domain means the expression has no consistent type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Domain(Vec<TypeExpr>);

impl Domain {
    pub fn empty() -> Self {
        Domain(Vec::new())
    }

    pub fn single(t: TypeExpr) -> Self {
        Domain(vec![t])
    }

    /// Build a domain, dropping α-equivalent duplicates while keeping order.
    pub fn new(exprs: impl IntoIterator<Item = TypeExpr>) -> Self {
        let mut d = Domain::empty();
        for e in exprs {
            d.push(e);
        }
        d
    }

    /// Build a domain, dropping only structurally equal duplicates. Use this
    /// when variables are shared with other domains.
    pub fn distinct(exprs: impl IntoIterator<Item = TypeExpr>) -> Self {
        let mut v: Vec<TypeExpr> = Vec::new();
        for e in exprs {
            if !v.contains(&e) {
                v.push(e);
            }
        }
        Domain(v)
    }

    pub fn atomics(atoms: impl IntoIterator<Item = Atomic>) -> Self {
        Domain::new(atoms.into_iter().map(TypeExpr::Atomic))
    }

    pub fn push(&mut self, e: TypeExpr) {
        if !self.0.iter().any(|x| x.alpha_eq(&e)) {
            self.0.push(e);
        }
    }

    pub fn exprs(&self) -> &[TypeExpr] {
        &self.0
    }

    pub fn into_exprs(self) -> Vec<TypeExpr> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.0.len() == 1
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TypeExpr> {
        self.0.iter()
    }

    pub fn is_ground(&self) -> bool {
        self.0.iter().all(TypeExpr::is_ground)
    }

    pub fn all_atomic(&self) -> bool {
        self.0.iter().all(TypeExpr::is_atomic)
    }

    pub fn vars(&self) -> BTreeSet<TypeVarId> {
        self.0.iter().flat_map(|e| e.vars()).collect()
    }

    pub fn map(&self, f: impl FnMut(&TypeExpr) -> TypeExpr) -> Domain {
        Domain::new(self.0.iter().map(f))
    }

    /// Multiset-free α-equivalence: same members up to one shared renaming, same order.
    pub fn alpha_eq(&self, other: &Domain) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut fwd = HashMap::new();
        let mut bwd = HashMap::new();
        self.0.iter().zip(&other.0).all(|(a, b)| alpha_eq_in(a, b, &mut fwd, &mut bwd))
    }

    pub fn pretty(&self) -> String {
        if self.is_empty() {
            "<empty>".to_string()
        } else {
            pretty_many(&self.0)
        }
    }
}

impl FromIterator<TypeExpr> for Domain {
    fn from_iter<I: IntoIterator<Item = TypeExpr>>(iter: I) -> Self {
        Domain::new(iter)
    }
}

impl<'a> IntoIterator for &'a Domain {
    type Item = &'a TypeExpr;
    type IntoIter = std::slice::Iter<'a, TypeExpr>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_eq_requires_consistent_renaming() {
        let a = TypeExpr::func(TypeExpr::var(1), TypeExpr::var(1));
        let b = TypeExpr::func(TypeExpr::var(7), TypeExpr::var(7));
        let c = TypeExpr::func(TypeExpr::var(7), TypeExpr::var(8));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
        assert!(!c.alpha_eq(&a));
    }

    #[test]
    fn domain_dedups_alpha_equivalent_members() {
        let d = Domain::new([TypeExpr::list(TypeExpr::var(1)), TypeExpr::list(TypeExpr::var(2))]);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn pretty_names_variables_canonically() {
        let t = TypeExpr::func(
            TypeExpr::Tuple(vec![TypeExpr::var(40), TypeExpr::var(12)]),
            TypeExpr::list(TypeExpr::var(40)),
        );
        assert_eq!(t.pretty(), "tuple(A, B) -> list(A)");
        let nested = TypeExpr::func(TypeExpr::func(TypeExpr::var(1), TypeExpr::var(2)), TypeExpr::var(2));
        assert_eq!(nested.pretty(), "(A -> B) -> B");
    }

    #[test]
    fn numeric_ranks_follow_promotion_order() {
        assert!(Atomic::Int.numeric_rank() < Atomic::Float.numeric_rank());
        assert_eq!(Atomic::Symbol.numeric_rank(), None);
        assert_eq!("timespan".parse::<Atomic>(), Ok(Atomic::Timespan));
    }
}
