//! Error localization, declaration checks and output rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{ConflictRecord, Constraint, ConstraintStore, Origin, Source};
use crate::labeling::{label, LabelOutcome, LabelingConfig};
use crate::span::SourceSpan;
use crate::syntax::{Annotation, AnnotationKind, AstForm, AstNode, NodeId};
use crate::typelang::{relation, Domain, Relation, TypeExpr, TypeVarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    InferredConflict,
    DeclarationDisjoint,
    DeclarationOverlap,
    LabelingInconsistent,
    Internal,
    LexError,
    ParseError,
    DeclError,
    ScopeError,
    UnknownBuiltin,
}

impl DiagnosticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticKind::InferredConflict => "inferred-conflict",
            DiagnosticKind::DeclarationDisjoint => "declaration-disjoint",
            DiagnosticKind::DeclarationOverlap => "declaration-overlap",
            DiagnosticKind::LabelingInconsistent => "labeling-inconsistent",
            DiagnosticKind::Internal => "internal",
            DiagnosticKind::LexError => "lex-error",
            DiagnosticKind::ParseError => "parse-error",
            DiagnosticKind::DeclError => "decl-error",
            DiagnosticKind::ScopeError => "scope-error",
            DiagnosticKind::UnknownBuiltin => "unknown-builtin",
        }
    }

    /// Errors raised before type checking proper.
    pub fn is_front_end(self) -> bool {
        matches!(
            self,
            DiagnosticKind::LexError
                | DiagnosticKind::ParseError
                | DiagnosticKind::DeclError
                | DiagnosticKind::ScopeError
                | DiagnosticKind::UnknownBuiltin
        )
    }

    fn from_front(kind: &str) -> Self {
        match kind {
            "lex-error" => DiagnosticKind::LexError,
            "decl-error" => DiagnosticKind::DeclError,
            "scope-error" => DiagnosticKind::ScopeError,
            _ => DiagnosticKind::ParseError,
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One reported problem. Field order is the machine format's key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub node_id: Option<u32>,
    pub message: String,
    pub justification: Vec<String>,
}

impl Diagnostic {
    pub fn new(span: &SourceSpan, severity: Severity, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic {
            file: span.file.to_string(),
            line: span.start_line,
            col: span.start_col,
            end_line: span.end_line,
            end_col: span.end_col,
            severity,
            kind,
            node_id: None,
            message: message.into(),
            justification: Vec::new(),
        }
    }

    fn at(mut self, node: NodeId) -> Self {
        self.node_id = Some(node.0);
        self
    }

    fn because(mut self, justification: Vec<String>) -> Self {
        self.justification = justification;
        self
    }

    pub fn from_front(e: &crate::syntax::FrontError) -> Self {
        Diagnostic::new(e.span(), Severity::Error, DiagnosticKind::from_front(e.kind()), e.to_string())
    }

    fn sort_key(&self) -> (&str, u32, u32, DiagnosticKind, Option<u32>, &str) {
        (&self.file, self.line, self.col, self.kind, self.node_id, &self.message)
    }
}

pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Human-readable explanation of a conflict.
pub fn describe_conflict(c: &ConflictRecord, node_count: u32) -> String {
    let store_names = |d: &Domain| d.pretty();
    let left = c.left.as_ref().map(store_names).unwrap_or_else(|| "any".into());
    let key = if c.key.0 <= node_count { format!("id({})", c.key.0) } else { format!("_{}", c.key.0) };
    let at = c.span.as_ref().map(|s| format!(" at {s}")).unwrap_or_default();
    format!("{key}: {left} conflicts with {} from {} ({}{at})", store_names(&c.right), c.cause, c.source)
}

fn typed(n: &AstNode) -> bool {
    !matches!(n.form, AstForm::ArgList(_) | AstForm::Seq(_))
}

/// Nodes with an empty domain none of whose descendants has one.
fn narrowest_empty(store: &ConstraintStore, root: &AstNode) -> BTreeSet<NodeId> {
    fn go(n: &AstNode, store: &ConstraintStore, out: &mut BTreeSet<NodeId>) -> bool {
        let mut below = false;
        for c in n.children() {
            below |= go(c, store, out);
        }
        let here = typed(n) && store.is_empty_key(n.id.var());
        if here && !below {
            out.insert(n.id);
        }
        here || below
    }
    let mut out = BTreeSet::new();
    go(root, store, &mut out);
    // An assignment target empties along with its value; keep only the value.
    for n in root.preorder() {
        if let AstForm::Assign { target, value } = &n.form {
            let value_reported = value.preorder().iter().any(|v| out.contains(&v.id));
            if value_reported && matches!(target.form, AstForm::Var { .. }) {
                out.remove(&target.id);
            }
        }
    }
    out
}

fn justification(store: &ConstraintStore, node: NodeId) -> Vec<String> {
    let n = store.node_count();
    let root = store.find(node.var());
    let on_node: Vec<&ConflictRecord> = store.conflicts().iter().filter(|c| store.find(c.key) == root).collect();
    let chosen = if !on_node.is_empty() {
        on_node
    } else {
        let related: BTreeSet<TypeVarId> = store
            .shallow_domain(root)
            .map(|d| d.vars().into_iter().map(|v| store.find(v)).collect())
            .unwrap_or_default();
        let nearby: Vec<&ConflictRecord> =
            store.conflicts().iter().filter(|c| related.contains(&store.find(c.key))).collect();
        if nearby.is_empty() {
            store.conflicts().iter().collect()
        } else {
            nearby
        }
    };
    chosen.into_iter().map(|c| describe_conflict(c, n)).collect()
}

fn localize_as(store: &ConstraintStore, root: &AstNode, kind: DiagnosticKind) -> Vec<Diagnostic> {
    narrowest_empty(store, root)
        .into_iter()
        .filter_map(|id| root.find(id))
        .map(|node| {
            let message = format!("no type satisfies every constraint on this {}", describe_node(node));
            let mut just = justification(store, node.id);
            if just.is_empty() {
                just.push(format!("id({}) has an empty domain", node.id.0));
            }
            Diagnostic::new(&node.span, Severity::Error, kind, message).at(node.id).because(just)
        })
        .collect()
}

fn describe_node(n: &AstNode) -> String {
    match &n.form {
        AstForm::Var { name, .. } => format!("use of `{name}`"),
        AstForm::Literal { lexeme, .. } => format!("literal `{lexeme}`"),
        AstForm::App { .. } => "application".into(),
        AstForm::Assign { .. } => "assignment".into(),
        AstForm::IndexAssign { .. } => "indexed assignment".into(),
        AstForm::Cond { .. } => "conditional".into(),
        AstForm::DoLoop { .. } => "do loop".into(),
        AstForm::ListLit(_) => "list".into(),
        AstForm::VectorLit { .. } => "vector".into(),
        AstForm::DictLit { .. } => "dictionary".into(),
        AstForm::Lambda { .. } => "function".into(),
        AstForm::ArgList(_) | AstForm::Seq(_) => n.kind_name().into(),
    }
}

/// One error per narrowest expression whose domain is empty.
pub fn localize_errors(store: &ConstraintStore, root: &AstNode) -> Vec<Diagnostic> {
    localize_as(store, root, DiagnosticKind::InferredConflict)
}

/// Final per-node domains: one store, or the union over labeling solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeReport {
    pub entries: Vec<TypeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeEntry {
    pub node_id: u32,
    pub kind: &'static str,
    #[serde(skip)]
    pub span: SourceSpan,
    #[serde(skip)]
    pub domain: Domain,
    /// Domain with variables renamed `A`, `B`, ... in order of appearance.
    pub pretty: String,
}

impl TypeReport {
    pub fn from_stores(stores: &[&ConstraintStore], root: &AstNode) -> TypeReport {
        let mut entries = Vec::new();
        for n in root.preorder() {
            if !typed(n) {
                continue;
            }
            let mut members = Vec::new();
            let mut constrained = false;
            for s in stores {
                if let Some(d) = s.domain(n.id.var()) {
                    constrained = true;
                    members.extend(d.into_exprs());
                }
            }
            if !constrained {
                continue;
            }
            let domain = Domain::new(members);
            entries.push(TypeEntry {
                node_id: n.id.0,
                kind: n.kind_name(),
                span: n.span.clone(),
                pretty: domain.pretty(),
                domain,
            });
        }
        TypeReport { entries }
    }

    pub fn get(&self, node: NodeId) -> Option<&TypeEntry> {
        self.entries.iter().find(|e| e.node_id == node.0)
    }
}

const EXPAND_LIMIT: usize = 64;

/// Replace variables by the members of their domains, as far as the result
/// stays small. Variables without a domain stay free.
pub fn expand(store: &ConstraintStore, d: &Domain) -> Domain {
    fn term(store: &ConstraintStore, t: &TypeExpr, depth: usize) -> Option<Vec<TypeExpr>> {
        if depth > 4 {
            return Some(vec![t.clone()]);
        }
        let mut out = vec![t.clone()];
        let mut seen = BTreeSet::new();
        for v in t.vars() {
            if !seen.insert(v) {
                continue;
            }
            let members = match store.domain(v) {
                Some(d) if !d.is_empty() && !d.vars().contains(&store.find(v)) => d.into_exprs(),
                _ => continue,
            };
            let mut next = Vec::new();
            for partial in &out {
                for m in &members {
                    let sub = partial.map_vars(&mut |w| if w == v { m.clone() } else { TypeExpr::Var(w) });
                    next.extend(term(store, &sub, depth + 1)?);
                    if next.len() > EXPAND_LIMIT {
                        return None;
                    }
                }
            }
            out = next;
        }
        Some(out)
    }
    let mut out = Vec::new();
    for t in d {
        match term(store, t, 0) {
            Some(ts) => out.extend(ts),
            None => return d.clone(),
        }
        if out.len() > EXPAND_LIMIT {
            return d.clone();
        }
    }
    Domain::new(out)
}

/// Tri-state check of each `//$:` annotation against `report`. Function
/// types are checked by trying the declared type on a copy of `store`.
pub fn check_interrogatives(
    store: &ConstraintStore,
    report: &TypeReport,
    annots: &[Annotation],
    labeling: &LabelingConfig,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for a in annots {
        if a.kind != AnnotationKind::Interrogative {
            continue;
        }
        let Some(target) = a.target else { continue };
        let decl_text = a.decl.pretty();
        let Some(entry) = report.get(target) else {
            let msg = format!("cannot guarantee declared type {decl_text}: the inferred type is unconstrained");
            out.push(
                Diagnostic::new(&a.span, Severity::Warning, DiagnosticKind::DeclarationOverlap, msg)
                    .at(target)
                    .because(vec![format!("id({}) has no constraints", target.0)]),
            );
            continue;
        };
        if entry.domain.is_empty() {
            continue;
        }
        let inferred = expand(store, &entry.domain);
        let rel = if inferred.iter().all(|t| matches!(t, TypeExpr::Func(..))) && !inferred.is_ground() {
            trial(store, target, &a.decl, labeling)
        } else {
            relation(&inferred, &a.decl)
        };
        let just = vec![format!("inferred {} for id({}), declared {decl_text}", inferred.pretty(), target.0)];
        let diag = match rel {
            Relation::Subset => continue,
            Relation::Overlap => Diagnostic::new(
                &a.span,
                Severity::Warning,
                DiagnosticKind::DeclarationOverlap,
                format!("inferred type {} may not match declared type {decl_text}", inferred.pretty()),
            ),
            Relation::Disjoint => Diagnostic::new(
                &a.span,
                Severity::Error,
                DiagnosticKind::DeclarationDisjoint,
                format!("inferred type {} contradicts declared type {decl_text}", inferred.pretty()),
            ),
        };
        out.push(diag.at(target).because(just));
    }
    out
}

/// Check a declared type by posting it on a copy of the store.
fn trial(store: &ConstraintStore, target: NodeId, decl: &Domain, labeling: &LabelingConfig) -> Relation {
    let mut s = store.clone();
    let d = s.instantiate(decl);
    s.post(Constraint::dom(target.var(), d), Origin::new(Source::External, None));
    s.propagate();
    let solutions = match label(&s, labeling) {
        LabelOutcome::Inconsistent { .. } => return Relation::Disjoint,
        LabelOutcome::Solutions(sols) => sols,
        LabelOutcome::BudgetExceeded { .. } => return Relation::Overlap,
    };
    let all_subset = solutions.iter().all(|sol| {
        sol.domain(target.var()).map(|d| relation(&expand(sol, &d), decl) == Relation::Subset).unwrap_or(false)
    });
    if all_subset {
        Relation::Subset
    } else {
        Relation::Overlap
    }
}

/// Full checking of one propagated store: labeling when constraints remain,
/// localization, declaration checks.
pub fn finish(
    store: &ConstraintStore,
    root: &AstNode,
    annots: &[Annotation],
    label_enabled: bool,
    labeling: &LabelingConfig,
) -> (Vec<Diagnostic>, TypeReport) {
    let mut diags = localize_errors(store, root);
    let file_span = &root.span;
    if store.budget_exceeded() {
        diags.push(Diagnostic::new(
            file_span,
            Severity::Info,
            DiagnosticKind::Internal,
            "propagation step budget exhausted; inferred types may be incomplete",
        ));
    }
    let needs_labeling = label_enabled && !store.is_conflicted() && store.active().next().is_some();
    let mut report = TypeReport::from_stores(&[store], root);
    if needs_labeling {
        match label(store, labeling) {
            LabelOutcome::Solutions(sols) => {
                let refs: Vec<&ConstraintStore> = sols.iter().collect();
                report = TypeReport::from_stores(&refs, root);
            }
            LabelOutcome::Inconsistent { witness, imprecise } => {
                let mut found = localize_as(&witness, root, DiagnosticKind::LabelingInconsistent);
                if found.is_empty() {
                    found.push(
                        Diagnostic::new(
                            file_span,
                            Severity::Error,
                            DiagnosticKind::LabelingInconsistent,
                            "no consistent typing exists",
                        )
                        .because(
                            witness.conflicts().iter().map(|c| describe_conflict(c, store.node_count())).collect(),
                        ),
                    );
                }
                if imprecise {
                    for d in &mut found {
                        d.message.push_str(" (one of several failing alternatives)");
                    }
                }
                diags.extend(found);
            }
            LabelOutcome::BudgetExceeded { .. } => diags.push(Diagnostic::new(
                file_span,
                Severity::Info,
                DiagnosticKind::Internal,
                "labeling split budget exhausted; reporting types before labeling",
            )),
        }
    }
    diags.extend(check_interrogatives(store, &report, annots, labeling));
    sort_diagnostics(&mut diags);
    (diags, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Machine,
}

/// Render diagnostics, then the type listing when given.
pub fn render(diags: &[Diagnostic], report: Option<&TypeReport>, format: Format) -> String {
    let mut out = String::new();
    for d in diags {
        match format {
            Format::Text => {
                out.push_str(&format!("{}:{}:{}: {}: {}: {}\n", d.file, d.line, d.col, d.severity, d.kind, d.message));
            }
            Format::Machine => {
                out.push_str(&serde_json::to_string(d).expect("diagnostics serialize"));
                out.push('\n');
            }
        }
    }
    if let Some(report) = report {
        for e in &report.entries {
            match format {
                Format::Text => out.push_str(&format!(
                    "{}:{}:{}: type: id({}) {}: {}\n",
                    e.span.file, e.span.start_line, e.span.start_col, e.node_id, e.kind, e.pretty
                )),
                Format::Machine => {
                    let v = serde_json::json!({
                        "file": e.span.file.to_string(),
                        "line": e.span.start_line,
                        "col": e.span.start_col,
                        "node_id": e.node_id,
                        "kind": e.kind,
                        "type": e.pretty,
                    });
                    out.push_str(&v.to_string());
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Per-severity counts.
pub fn tally(diags: &[Diagnostic]) -> BTreeMap<Severity, usize> {
    let mut m = BTreeMap::new();
    for d in diags {
        *m.entry(d.severity).or_insert(0) += 1;
    }
    m
}
