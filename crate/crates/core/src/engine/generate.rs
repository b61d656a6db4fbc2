use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use super::constraint::{Constraint, Origin, Source};
use super::registry::{Registry, RegistryError};
use super::store::ConstraintStore;
use crate::span::SourceSpan;
use crate::syntax::{Annotation, AnnotationKind, AstForm, AstNode, LiteralType, Resolution};
use crate::typelang::{Atomic, Domain, SignatureEntry, SignatureTable, TypeExpr, TypeVarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("{span}: operator `{name}` has no signature")]
    UnknownBuiltin { name: String, span: SourceSpan },
    #[error("signature of `{builtin}` names unknown relation `{relation}`")]
    UnknownRelation { builtin: String, relation: String },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// The base relations plus a table relation for every extending built-in
/// that names none.
pub fn prepare_registry(sigs: &SignatureTable, base: &Registry) -> Result<Registry, GenerateError> {
    let mut registry = base.clone();
    for e in sigs.iter() {
        match (&e.extension, &e.relation) {
            (_, Some(rel)) if !registry.contains(rel) => {
                return Err(GenerateError::UnknownRelation { builtin: e.name.clone(), relation: rel.clone() });
            }
            (Some(_), None) if !registry.contains(&e.name) => registry.register_table(&e.name, &e.decl)?,
            _ => {}
        }
    }
    Ok(registry)
}

/// Build a store holding the constraints of `root` and its imperative
/// annotations. Nothing is propagated yet. `registry` should come from
/// [`prepare_registry`] for the same table.
pub fn generate_constraints(
    root: &AstNode,
    annots: &[Annotation],
    sigs: &SignatureTable,
    registry: Arc<Registry>,
) -> Result<ConstraintStore, GenerateError> {
    let node_count = root.preorder().iter().map(|n| n.id.0).max().unwrap_or(0);
    let mut gen = Generator {
        store: ConstraintStore::new(node_count, registry),
        sigs,
        assigned: assigned_globals(root),
        reps: HashMap::new(),
    };
    gen.visit(root)?;
    for a in annots {
        if a.kind != AnnotationKind::Imperative {
            continue;
        }
        let Some(target) = a.target else { continue };
        let decl = gen.store.instantiate(&a.decl);
        gen.post(Constraint::dom(target.var(), decl), Source::Imperative, &a.span);
    }
    Ok(gen.store)
}

/// Global keys that are assigned somewhere; such names shadow built-ins.
fn assigned_globals(root: &AstNode) -> HashSet<String> {
    let mut out = HashSet::new();
    for n in root.preorder() {
        let target = match &n.form {
            AstForm::Assign { target, .. } => target,
            AstForm::IndexAssign { base, .. } => base,
            _ => continue,
        };
        if let AstForm::Var { res: Resolution::Global(k), .. } = &target.form {
            out.insert(k.clone());
        }
    }
    out
}

struct Generator<'a> {
    store: ConstraintStore,
    sigs: &'a SignatureTable,
    assigned: HashSet<String>,
    /// Representative key per resolved variable.
    reps: HashMap<String, TypeVarId>,
}

fn var(v: TypeVarId) -> TypeExpr {
    TypeExpr::Var(v)
}

fn atoms(xs: &[Atomic]) -> Domain {
    Domain::atomics(xs.iter().copied())
}

impl Generator<'_> {
    fn post(&mut self, c: Constraint, source: Source, span: &SourceSpan) {
        self.store.post(c.clone(), Origin::new(source, Some(span.clone())));
        self.store.emit(format!("generate:{}", source.tag()), vec![], vec![c]);
    }

    fn builtin(&self, name: &str, res: &Resolution) -> Option<&SignatureEntry> {
        match res {
            Resolution::Operator => self.sigs.get(name),
            Resolution::Global(k) if !self.assigned.contains(k) => self.sigs.get(name),
            _ => None,
        }
    }

    fn visit(&mut self, n: &AstNode) -> Result<(), GenerateError> {
        self.visit_in(n, None)
    }

    /// `call` holds the argument keys and result key when `n` is the function
    /// of an application.
    fn visit_in(&mut self, n: &AstNode, call: Option<(&[TypeVarId], TypeVarId)>) -> Result<(), GenerateError> {
        let id = n.id.var();
        let span = &n.span;
        match &n.form {
            AstForm::Literal { ty, .. } => {
                let d = match ty {
                    LiteralType::Atom(a) => atoms(&[*a]),
                    LiteralType::CharList => Domain::single(TypeExpr::list(TypeExpr::Atomic(Atomic::Char))),
                };
                self.post(Constraint::dom(id, d), Source::Atomic, span);
            }
            AstForm::Var { name, res } => self.visit_var(n, name, res, call)?,
            AstForm::Lambda { params, body, .. } => {
                let reps: Vec<TypeVarId> = params
                    .iter()
                    .map(|p| {
                        let v = self.store.fresh();
                        self.reps.insert(p.key.clone(), v);
                        v
                    })
                    .collect();
                let pack = match reps.as_slice() {
                    [] => self.store.fresh_var(),
                    [p] => var(*p),
                    ps => TypeExpr::Tuple(ps.iter().map(|p| var(*p)).collect()),
                };
                let result = match body.last() {
                    Some(last) => var(last.id.var()),
                    None => self.store.fresh_var(),
                };
                self.post(Constraint::dom(id, Domain::single(TypeExpr::func(pack, result))), Source::Syntax, span);
                for b in body {
                    self.visit(b)?;
                }
            }
            AstForm::App { func, args } => {
                let AstForm::ArgList(items) = &args.form else { unreachable!("application arguments") };
                let arg_keys: Vec<TypeVarId> = items.iter().map(|a| a.id.var()).collect();
                self.post(
                    Constraint::Apply { func: func.id.var(), args: arg_keys.clone(), res: id },
                    Source::Syntax,
                    span,
                );
                let mut parts: Vec<&AstNode> = items.iter().collect();
                parts.push(func);
                parts.sort_by_key(|p| (p.span.start_line, p.span.start_col, p.id));
                for p in parts {
                    if p.id == func.id {
                        self.visit_in(p, Some((&arg_keys, id)))?;
                    } else {
                        self.visit(p)?;
                    }
                }
            }
            AstForm::ArgList(items) | AstForm::Seq(items) => {
                for i in items {
                    self.visit(i)?;
                }
            }
            AstForm::Assign { target, value } => {
                self.post(Constraint::eq(target.id.var(), value.id.var()), Source::Syntax, span);
                self.post(Constraint::eq(id, value.id.var()), Source::Syntax, span);
                self.visit(target)?;
                self.visit(value)?;
            }
            AstForm::IndexAssign { base, index, value } => {
                self.post(Constraint::dom(index.id.var(), atoms(&[Atomic::Int, Atomic::Long])), Source::Syntax, span);
                let list = TypeExpr::list(var(value.id.var()));
                self.post(Constraint::dom(base.id.var(), Domain::single(list)), Source::Syntax, span);
                self.post(Constraint::eq(id, value.id.var()), Source::Syntax, span);
                self.visit(base)?;
                self.visit(index)?;
                self.visit(value)?;
            }
            AstForm::Cond { test, then, els } => {
                self.post(Constraint::dom(test.id.var(), atoms(&[Atomic::Boolean])), Source::Syntax, span);
                let args = vec![then.id.var(), els.id.var(), id];
                self.post(Constraint::Rel { name: "branch".into(), args }, Source::Syntax, span);
                self.visit(test)?;
                self.visit(then)?;
                self.visit(els)?;
            }
            AstForm::DoLoop { count, body } => {
                self.post(Constraint::dom(count.id.var(), atoms(&[Atomic::Int, Atomic::Long])), Source::Syntax, span);
                self.visit(count)?;
                for b in body {
                    self.visit(b)?;
                }
            }
            AstForm::ListLit(items) => {
                let t = TypeExpr::Tuple(items.iter().map(|i| var(i.id.var())).collect());
                self.post(Constraint::dom(id, Domain::single(t)), Source::Syntax, span);
                for i in items {
                    self.visit(i)?;
                }
            }
            AstForm::VectorLit { ty, items } => {
                let t = if *ty == Atomic::Symbol {
                    TypeExpr::stuple(items.iter().map(|i| match &i.form {
                        AstForm::Literal { lexeme, .. } => lexeme.clone(),
                        _ => String::new(),
                    }))
                } else {
                    TypeExpr::Tuple(vec![TypeExpr::Atomic(*ty); items.len()])
                };
                self.post(Constraint::dom(id, Domain::single(t)), Source::Atomic, span);
                for i in items {
                    self.visit(i)?;
                }
            }
            AstForm::DictLit { domain, range } => {
                let t = TypeExpr::dict(var(domain.id.var()), var(range.id.var()));
                self.post(Constraint::dom(id, Domain::single(t)), Source::Syntax, span);
                self.visit(domain)?;
                self.visit(range)?;
            }
        }
        Ok(())
    }

    fn visit_var(
        &mut self,
        n: &AstNode,
        name: &str,
        res: &Resolution,
        call: Option<(&[TypeVarId], TypeVarId)>,
    ) -> Result<(), GenerateError> {
        let id = n.id.var();
        if let Some(entry) = self.builtin(name, res).cloned() {
            return self.visit_builtin(n, &entry, call);
        }
        if *res == Resolution::Operator {
            return Err(GenerateError::UnknownBuiltin { name: name.to_string(), span: n.span.clone() });
        }
        let Some(key) = res.key() else { return Ok(()) };
        match self.reps.get(key) {
            Some(rep) => {
                let rep = *rep;
                self.post(Constraint::eq(rep, id), Source::Variable, &n.span);
            }
            None => {
                self.reps.insert(key.to_string(), id);
            }
        }
        Ok(())
    }

    fn visit_builtin(
        &mut self,
        n: &AstNode,
        entry: &SignatureEntry,
        call: Option<(&[TypeVarId], TypeVarId)>,
    ) -> Result<(), GenerateError> {
        let id = n.id.var();
        if let Some((args, res)) = call.filter(|(args, _)| args.len() == entry.arity) {
            let mut keys = args.to_vec();
            keys.push(res);
            let rel = entry.relation.clone().unwrap_or_else(|| entry.name.clone());
            if let Some(dir) = entry.extension {
                let c = Constraint::ListExt { dir, args: keys, rels: vec![rel] };
                self.post(c, Source::Builtin, &n.span);
                return Ok(());
            }
            if entry.relation.is_some() {
                self.post(Constraint::Rel { name: rel, args: keys }, Source::Builtin, &n.span);
                return Ok(());
            }
        }
        let decl = self.store.instantiate(&entry.decl);
        self.post(Constraint::dom(id, decl), Source::Builtin, &n.span);
        Ok(())
    }
}
