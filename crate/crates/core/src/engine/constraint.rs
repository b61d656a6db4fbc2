use std::fmt;

use serde::{Deserialize, Serialize};

use crate::span::SourceSpan;
use crate::typelang::{Domain, ExtDir, TypeExpr, TypeVarId};

/// Where a constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// `//!:` declarations.
    Imperative,
    /// Signature table entries.
    Builtin,
    /// Literals.
    Atomic,
    /// Occurrences of the same variable.
    Variable,
    /// Program structure (assignment, application, conditionals, ...).
    Syntax,
    /// Produced by a rule while propagating.
    Rewrite,
    /// Posted from outside the analysis (tests, declaration checks).
    External,
    /// A labeling split.
    Labeling,
}

impl Source {
    /// Short machine-readable name.
    pub fn tag(self) -> &'static str {
        match self {
            Source::Imperative => "imperative",
            Source::Builtin => "builtin",
            Source::Atomic => "atomic",
            Source::Variable => "variable",
            Source::Syntax => "syntax",
            Source::Rewrite => "rewrite",
            Source::External => "external",
            Source::Labeling => "labeling",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Imperative => "imperative declaration",
            Source::Builtin => "built-in signature",
            Source::Atomic => "literal",
            Source::Variable => "variable",
            Source::Syntax => "syntax",
            Source::Rewrite => "rewrite",
            Source::External => "external",
            Source::Labeling => "labeling",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Origin {
    pub span: Option<SourceSpan>,
    pub source: Source,
}

impl Origin {
    pub fn new(source: Source, span: Option<SourceSpan>) -> Self {
        Origin { span, source }
    }

    pub fn external() -> Self {
        Origin { span: None, source: Source::External }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    Dom {
        key: TypeVarId,
        domain: Domain,
    },
    Eq {
        a: TypeVarId,
        b: TypeVarId,
    },
    Apply {
        func: TypeVarId,
        args: Vec<TypeVarId>,
        res: TypeVarId,
    },
    /// Relation over `args`, the result last.
    Rel {
        name: String,
        args: Vec<TypeVarId>,
    },
    ListExt {
        dir: ExtDir,
        args: Vec<TypeVarId>,
        rels: Vec<String>,
    },
}

impl Constraint {
    pub fn dom(key: TypeVarId, domain: Domain) -> Self {
        Constraint::Dom { key, domain }
    }

    pub fn eq(a: TypeVarId, b: TypeVarId) -> Self {
        Constraint::Eq { a, b }
    }

    pub fn keys(&self) -> Vec<TypeVarId> {
        match self {
            Constraint::Dom { key, .. } => vec![*key],
            Constraint::Eq { a, b } => vec![*a, *b],
            Constraint::Apply { func, args, res } => {
                let mut v = vec![*func];
                v.extend(args);
                v.push(*res);
                v
            }
            Constraint::Rel { args, .. } | Constraint::ListExt { args, .. } => args.clone(),
        }
    }

    /// Rule name used in traces.
    pub fn rule(&self) -> String {
        match self {
            Constraint::Dom { .. } => "dom".into(),
            Constraint::Eq { .. } => "eq".into(),
            Constraint::Apply { .. } => "apply".into(),
            Constraint::Rel { name, .. } => name.clone(),
            Constraint::ListExt { .. } => "listextension".into(),
        }
    }

    /// Render with node keys as `id(n)` and other variables as `_n`.
    pub fn display(&self, node_count: u32) -> ConstraintDisplay<'_> {
        ConstraintDisplay { c: self, node_count }
    }
}

pub(crate) fn key_name(v: TypeVarId, node_count: u32) -> String {
    if v.0 <= node_count {
        format!("id({})", v.0)
    } else {
        format!("_{}", v.0)
    }
}

pub(crate) fn expr_string(t: &TypeExpr, node_count: u32) -> String {
    t.display_with(&|v| key_name(v, node_count)).to_string()
}

pub(crate) fn domain_string(d: &Domain, node_count: u32) -> String {
    let items: Vec<String> = d.iter().map(|t| expr_string(t, node_count)).collect();
    format!("[{}]", items.join(", "))
}

pub struct ConstraintDisplay<'a> {
    c: &'a Constraint,
    node_count: u32,
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.node_count;
        let k = |v: &TypeVarId| key_name(*v, n);
        let ks = |vs: &[TypeVarId]| vs.iter().map(k).collect::<Vec<_>>().join(", ");
        match self.c {
            Constraint::Dom { key, domain } => write!(f, "dom({}, {})", k(key), domain_string(domain, n)),
            Constraint::Eq { a, b } => write!(f, "eq({}, {})", k(a), k(b)),
            Constraint::Apply { func, args, res } => {
                write!(f, "apply({}, [{}], {})", k(func), ks(args), k(res))
            }
            Constraint::Rel { name, args } => write!(f, "{name}({})", ks(args)),
            Constraint::ListExt { dir, args, rels } => {
                write!(f, "listextension({dir}, [{}], [{}])", ks(args), rels.join(", "))
            }
        }
    }
}

/// A constraint together with its origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Posted {
    pub constraint: Constraint,
    pub origin: Origin,
}

impl Posted {
    pub fn new(constraint: Constraint, origin: Origin) -> Self {
        Posted { constraint, origin }
    }
}

/// An emptied domain and the two domains whose intersection was empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictRecord {
    pub key: TypeVarId,
    /// Domain held before the conflicting constraint arrived; `None` when the
    /// key was unconstrained.
    pub left: Option<Domain>,
    pub right: Domain,
    /// Rendered constraint that caused the conflict.
    pub cause: String,
    pub source: Source,
    pub span: Option<SourceSpan>,
}
