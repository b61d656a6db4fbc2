use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::typelang::{Atomic, Domain, TypeExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("relation `{0}` is already registered")]
    DuplicateRule(String),
    #[error("relation `{name}`: {message}")]
    BadSpec { name: String, message: String },
}

/// How the result of an atomic relation is determined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResultRule {
    /// Highest-ranked argument in the numeric promotion order.
    Promote,
    Fixed(Atomic),
    /// Same as the single argument.
    Identity,
    /// Explicit argument/result rows.
    Table(Vec<(Vec<Atomic>, Atomic)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec {
    /// Number of arguments, not counting the result.
    pub arity: usize,
    /// Admissible atomics per argument.
    pub args: Vec<Vec<Atomic>>,
    pub result: ResultRule,
    /// Arguments must both be numeric or be the same type.
    pub same_kind: bool,
    /// With one argument `int` and the other at least `int`, the other
    /// argument and the result are equal.
    pub int_equate: bool,
}

impl RuleSpec {
    fn compute(&self, args: &[Atomic]) -> Option<Atomic> {
        if args.iter().zip(&self.args).any(|(a, adm)| !adm.contains(a)) {
            return None;
        }
        if self.same_kind && args.len() == 2 {
            let ok = (args[0].is_numeric() && args[1].is_numeric()) || args[0] == args[1];
            if !ok {
                return None;
            }
        }
        match &self.result {
            ResultRule::Promote => args.iter().copied().max_by_key(|a| a.numeric_rank()),
            ResultRule::Fixed(a) => Some(*a),
            ResultRule::Identity => args.first().copied(),
            ResultRule::Table(rows) => rows.iter().find(|(xs, _)| xs == args).map(|(_, r)| *r),
        }
    }
}

/// A compiled atomic relation: the set of admissible (args..., result) rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicRule {
    pub spec: RuleSpec,
    /// Admissible atomics per position, result last.
    pub admissible: Vec<Vec<Atomic>>,
    rows: HashSet<Vec<Atomic>>,
}

impl AtomicRule {
    fn compile(spec: RuleSpec) -> AtomicRule {
        let mut rows = HashSet::new();
        let mut results: Vec<Atomic> = Vec::new();
        let mut combos: Vec<Vec<Atomic>> = vec![vec![]];
        for adm in &spec.args {
            combos = combos
                .into_iter()
                .flat_map(|p| {
                    adm.iter().map(move |a| {
                        let mut q = p.clone();
                        q.push(*a);
                        q
                    })
                })
                .collect();
        }
        for args in combos {
            if let Some(r) = spec.compute(&args) {
                if !results.contains(&r) {
                    results.push(r);
                }
                let mut row = args;
                row.push(r);
                rows.insert(row);
            }
        }
        results.sort_by_key(|a| Atomic::ALL.iter().position(|b| b == a));
        let mut admissible = spec.args.clone();
        admissible.push(results);
        AtomicRule { spec, admissible, rows }
    }

    pub fn holds(&self, row: &[Atomic]) -> bool {
        self.rows.contains(row)
    }

    pub fn constant_result(&self) -> bool {
        matches!(self.spec.result, ResultRule::Fixed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Atomic(AtomicRule),
    /// Conditional result: `branch(then, else, result)`, the result lies in
    /// the union of the two branch domains.
    Branch,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Registry {
    rules: BTreeMap<String, Rule>,
}

fn numeric() -> Vec<Atomic> {
    Atomic::NUMERIC.to_vec()
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    /// The relations the shipped signature table refers to.
    pub fn standard() -> Self {
        let mut r = Registry::empty();
        let binary = |result, same_kind, int_equate, args: Vec<Atomic>| RuleSpec {
            arity: 2,
            args: vec![args.clone(), args],
            result,
            same_kind,
            int_equate,
        };
        let unary = |result| RuleSpec { arity: 1, args: vec![numeric()], result, same_kind: false, int_equate: false };
        let specs = [
            ("sum", binary(ResultRule::Promote, false, true, numeric())),
            ("div", binary(ResultRule::Fixed(Atomic::Float), false, false, numeric())),
            ("cmp", binary(ResultRule::Fixed(Atomic::Boolean), true, false, Atomic::ALL.to_vec())),
            ("minmax", binary(ResultRule::Promote, false, false, numeric())),
            ("numfloat", unary(ResultRule::Fixed(Atomic::Float))),
            ("numid", unary(ResultRule::Identity)),
        ];
        for (name, spec) in specs {
            r.register_relation(name, spec).expect("standard relations are distinct");
        }
        r.rules.insert("branch".into(), Rule::Branch);
        r
    }

    pub fn register_relation(&mut self, name: &str, spec: RuleSpec) -> Result<(), RegistryError> {
        if self.rules.contains_key(name) {
            return Err(RegistryError::DuplicateRule(name.to_string()));
        }
        if spec.args.len() != spec.arity {
            return Err(RegistryError::BadSpec {
                name: name.into(),
                message: format!("{} argument domains for arity {}", spec.args.len(), spec.arity),
            });
        }
        self.rules.insert(name.to_string(), Rule::Atomic(AtomicRule::compile(spec)));
        Ok(())
    }

    /// Register a relation read off an atomic-only function signature, such
    /// as `tuple(int, int) -> int | tuple(float, float) -> float`.
    pub fn register_table(&mut self, name: &str, decl: &Domain) -> Result<(), RegistryError> {
        let bad = |message: &str| RegistryError::BadSpec { name: name.into(), message: message.into() };
        let mut rows = Vec::new();
        let mut arity = None;
        for t in decl {
            let TypeExpr::Func(arg, res) = t else { return Err(bad("not a function type")) };
            let args: Vec<&TypeExpr> = match &**arg {
                TypeExpr::Tuple(items) if items.len() != 1 => items.iter().collect(),
                other => vec![other],
            };
            let atoms: Option<Vec<Atomic>> = args.iter().map(|a| a.as_atomic()).collect();
            let (Some(atoms), Some(r)) = (atoms, res.as_atomic()) else {
                return Err(bad("extension without a relation needs an atomic-only signature"));
            };
            if *arity.get_or_insert(atoms.len()) != atoms.len() {
                return Err(bad("alternatives disagree on arity"));
            }
            rows.push((atoms, r));
        }
        let arity = arity.unwrap_or(0);
        let args = (0..arity)
            .map(|i| {
                let mut col: Vec<Atomic> = Vec::new();
                for (xs, _) in &rows {
                    if !col.contains(&xs[i]) {
                        col.push(xs[i]);
                    }
                }
                col
            })
            .collect();
        let spec = RuleSpec { arity, args, result: ResultRule::Table(rows), same_kind: false, int_equate: false };
        self.register_relation(name, spec)
    }

    pub fn get(&self, name: &str) -> Option<&Rule> {
        self.rules.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.rules.contains_key(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Atomic::*;

    fn atomic(r: &Registry, name: &str) -> AtomicRule {
        match r.get(name) {
            Some(Rule::Atomic(a)) => a.clone(),
            _ => panic!("{name} is not atomic"),
        }
    }

    #[test]
    fn sum_promotes() {
        let r = Registry::standard();
        let sum = atomic(&r, "sum");
        assert!(sum.holds(&[Int, Float, Float]));
        assert!(sum.holds(&[Int, Int, Int]));
        assert!(sum.holds(&[Boolean, Short, Short]));
        assert!(!sum.holds(&[Int, Float, Int]));
        assert!(!sum.holds(&[Int, Symbol, Int]));
        assert!(sum.spec.int_equate);
    }

    #[test]
    fn cmp_fixes_boolean() {
        let r = Registry::standard();
        let cmp = atomic(&r, "cmp");
        assert!(cmp.holds(&[Int, Float, Boolean]));
        assert!(cmp.holds(&[Symbol, Symbol, Boolean]));
        assert!(!cmp.holds(&[Symbol, Int, Boolean]));
        assert!(!cmp.holds(&[Int, Int, Int]));
        assert_eq!(cmp.admissible[2], vec![Boolean]);
        assert!(cmp.constant_result());
    }

    #[test]
    fn duplicate_rule() {
        let mut r = Registry::standard();
        let spec = RuleSpec {
            arity: 1,
            args: vec![vec![Int]],
            result: ResultRule::Identity,
            same_kind: false,
            int_equate: false,
        };
        assert_eq!(r.register_relation("sum", spec.clone()), Err(RegistryError::DuplicateRule("sum".into())));
        assert!(r.register_relation("twice", spec).is_ok());
    }

    #[test]
    fn table_from_signature() {
        let mut r = Registry::empty();
        let decl = crate::syntax::parse_type_decl("tuple(int, int) -> int | tuple(float, float) -> float").unwrap();
        r.register_table("plus", &decl).unwrap();
        let t = atomic(&r, "plus");
        assert!(t.holds(&[Int, Int, Int]));
        assert!(!t.holds(&[Int, Float, Float]));
        let bad = crate::syntax::parse_type_decl("list(int) -> int").unwrap();
        assert!(r.register_table("bad", &bad).is_err());
    }
}
