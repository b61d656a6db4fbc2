#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use qtype::diagnostics::Diagnostic;
use qtype::engine::{generate_constraints, prepare_registry, ConstraintStore, Registry};
use qtype::syntax::{front_end, Annotation, AstNode};
use qtype::typelang::{Atomic, Domain, SignatureTable, TypeExpr, TypeVarId};
use qtype::{analyze_source, AnalysisOptions, FileAnalysis};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn registry() -> Arc<Registry> {
    Arc::new(prepare_registry(&SignatureTable::builtin(), &Registry::standard()).unwrap())
}

pub fn analyze(src: &str) -> FileAnalysis {
    analyze_source(src, "t.q", &SignatureTable::builtin(), &registry(), &AnalysisOptions::default())
}

pub fn errors(a: &FileAnalysis) -> Vec<&Diagnostic> {
    a.diagnostics.iter().filter(|d| d.severity == qtype::diagnostics::Severity::Error).collect()
}

/// Parsed program plus its generated, unpropagated store.
pub fn generated(src: &str) -> (AstNode, Vec<Annotation>, ConstraintStore) {
    let (root, annots) = front_end(src, "t.q").expect("program parses");
    let store = generate_constraints(&root, &annots, &SignatureTable::builtin(), registry()).expect("generation");
    (root, annots, store)
}

pub fn propagated(src: &str) -> (AstNode, ConstraintStore) {
    let (root, _, mut store) = generated(src);
    store.propagate();
    (root, store)
}

/// Node domains rendered so that two stores compare equal iff they agree up
/// to renaming of non-node variables and member order.
pub fn canonical(store: &ConstraintStore) -> Vec<String> {
    let n = store.node_count();
    let anon =
        |t: &TypeExpr| t.display_with(&|v| if v.0 <= n { format!("id({})", v.0) } else { "_".into() }).to_string();
    let mut names: HashMap<TypeVarId, String> = HashMap::new();
    let mut out = Vec::new();
    for k in 0..=n {
        let line = match store.domain(TypeVarId(k)) {
            None => "any".to_string(),
            Some(d) => {
                let mut members: Vec<&TypeExpr> = d.iter().collect();
                members.sort_by_key(|t| anon(t));
                let rendered: Vec<String> = members
                    .iter()
                    .map(|t| {
                        for v in t.vars() {
                            if v.0 > n {
                                let next = format!("V{}", names.len());
                                names.entry(v).or_insert(next);
                            }
                        }
                        t.display_with(&|v| {
                            if v.0 <= n {
                                format!("id({})", v.0)
                            } else {
                                names[&v].clone()
                            }
                        })
                        .to_string()
                    })
                    .collect();
                format!("[{}]", rendered.join(", "))
            }
        };
        out.push(format!("{k}: {line}"));
    }
    out
}

// ---- ground denotation oracle ----

/// Concrete value shapes. Lists are either an empty vector of an atomic
/// type, the general empty list, or a non-empty sequence of values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Atom(Atomic),
    EmptyOf(Atomic),
    EmptyGeneral,
    Seq(Vec<Value>),
    Dict(Box<Value>, Box<Value>),
    Func(Box<Value>, Box<Value>),
}

pub fn values(basis: &[Atomic], depth: usize, width: usize) -> Vec<Value> {
    let mut all: Vec<Value> = basis.iter().map(|a| Value::Atom(*a)).collect();
    for _ in 0..depth {
        let inner = all.clone();
        let mut next = basis.iter().map(|a| Value::Atom(*a)).collect::<Vec<_>>();
        next.push(Value::EmptyGeneral);
        next.extend(basis.iter().map(|a| Value::EmptyOf(*a)));
        let mut seqs: Vec<Vec<Value>> = vec![vec![]];
        for _ in 0..width {
            let grown: Vec<Vec<Value>> = seqs
                .iter()
                .flat_map(|p| {
                    inner.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
            next.extend(grown.iter().cloned().map(Value::Seq));
            seqs = grown;
        }
        for a in &inner {
            for b in &inner {
                next.push(Value::Dict(Box::new(a.clone()), Box::new(b.clone())));
                next.push(Value::Func(Box::new(a.clone()), Box::new(b.clone())));
            }
        }
        all = next;
    }
    all
}

/// Membership of a value in a ground type expression.
pub fn member(v: &Value, t: &TypeExpr) -> bool {
    match (t, v) {
        (TypeExpr::Atomic(a), Value::Atom(b)) => a == b,
        (TypeExpr::HList, Value::EmptyOf(_) | Value::EmptyGeneral | Value::Seq(_)) => true,
        (TypeExpr::List(e), Value::EmptyOf(a)) => member(&Value::Atom(*a), e),
        (TypeExpr::List(e), Value::Seq(items)) => items.iter().all(|i| member(i, e)),
        (TypeExpr::Tuple(ts), Value::EmptyGeneral) => ts.is_empty(),
        (TypeExpr::Tuple(ts), Value::Seq(items)) => {
            ts.len() == items.len() && ts.iter().zip(items).all(|(t, i)| member(i, t))
        }
        (TypeExpr::Dict(d, r), Value::Dict(x, y)) | (TypeExpr::Func(d, r), Value::Func(x, y)) => {
            member(x, d) && member(y, r)
        }
        _ => false,
    }
}

/// Denotations as bitsets over a fixed value universe.
pub struct Oracle {
    pub universe: Vec<Value>,
    memo: HashMap<TypeExpr, Vec<u64>>,
}

impl Oracle {
    pub fn new(universe: Vec<Value>) -> Self {
        Oracle { universe, memo: HashMap::new() }
    }

    pub fn denote(&mut self, t: &TypeExpr) -> &Vec<u64> {
        if !self.memo.contains_key(t) {
            let mut bits = vec![0u64; self.universe.len().div_ceil(64)];
            for (i, v) in self.universe.iter().enumerate() {
                if member(v, t) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            self.memo.insert(t.clone(), bits);
        }
        &self.memo[t]
    }

    pub fn denote_domain(&mut self, d: &Domain) -> Vec<u64> {
        let mut bits = vec![0u64; self.universe.len().div_ceil(64)];
        for t in d {
            for (b, x) in bits.iter_mut().zip(self.denote(t)) {
                *b |= x;
            }
        }
        bits
    }
}

pub fn intersect(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

pub fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

// ---- random programs ----

/// A random statement list mixing literals, variables, arithmetic,
/// comparisons, lists, lambdas and conditionals. Some programs are ill-typed.
pub fn random_program(seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4);
    let mut lines = Vec::new();
    let mut defined: Vec<String> = Vec::new();
    for i in 0..n {
        let name = ["a", "b", "c", "d"][i % 4].to_string();
        let e = random_expr(&mut rng, 3, &defined);
        lines.push(format!("{name}: {e}"));
        if !defined.contains(&name) {
            defined.push(name);
        }
    }
    lines.join("\n")
}

fn random_atom(rng: &mut StdRng) -> String {
    match rng.gen_range(0..6) {
        0 => rng.gen_range(0..10).to_string(),
        1 => format!("{}.5", rng.gen_range(0..10)),
        2 => "`s".into(),
        3 => "1b".into(),
        4 => format!("{}j", rng.gen_range(0..10)),
        _ => "\"c\"".into(),
    }
}

fn random_expr(rng: &mut StdRng, depth: u32, vars: &[String]) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        if !vars.is_empty() && rng.gen_bool(0.4) {
            return vars[rng.gen_range(0..vars.len())].clone();
        }
        return random_atom(rng);
    }
    let sub = |rng: &mut StdRng| random_expr(rng, depth - 1, vars);
    match rng.gen_range(0..7) {
        0 | 1 => {
            let op = ["+", "-", "*", "%", "<", "=", "&"][rng.gen_range(0..7)];
            let l = sub(rng);
            let r = sub(rng);
            format!("({l}){op}{r}")
        }
        2 => {
            let k = rng.gen_range(0..=3);
            let items: Vec<String> = (0..k).map(|_| sub(rng)).collect();
            if k == 1 {
                format!("first ({0};{0})", items[0])
            } else {
                format!("({})", items.join(";"))
            }
        }
        3 => {
            let b = sub(rng);
            format!("{{[x] x+{b}}}[{}]", sub(rng))
        }
        4 => format!("$[{};{};{}]", sub(rng), sub(rng), sub(rng)),
        5 => format!("neg {}", sub(rng)),
        _ => {
            let items: Vec<String> = (0..rng.gen_range(2..=3)).map(|_| rng.gen_range(0..9).to_string()).collect();
            items.join(" ")
        }
    }
}

/// All assignments of atomics to `keys` drawn from `doms`.
pub fn assignments(doms: &BTreeMap<TypeVarId, Vec<Atomic>>) -> Vec<BTreeMap<TypeVarId, Atomic>> {
    let mut out = vec![BTreeMap::new()];
    for (k, d) in doms {
        out = out
            .into_iter()
            .flat_map(|m| {
                d.iter().map(move |a| {
                    let mut m = m.clone();
                    m.insert(*k, *a);
                    m
                })
            })
            .collect();
    }
    out
}
