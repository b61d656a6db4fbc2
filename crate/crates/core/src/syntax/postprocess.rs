use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{Annotation, AstForm, AstNode, Param, Resolution};
use crate::span::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ScopeError {
    pub span: SourceSpan,
    pub message: String,
}

const IMPLICIT: [&str; 3] = ["x", "y", "z"];

/// Fill implicit parameters, resolve variables and attach annotations.
pub fn postprocess(
    mut root: AstNode,
    mut annots: Vec<Annotation>,
) -> Result<(AstNode, Vec<Annotation>), Vec<ScopeError>> {
    let mut errors = Vec::new();
    let mut lambdas = 0u32;
    resolve(&mut root, None, &mut lambdas, &mut errors);
    for a in &mut annots {
        match a.anchor.and_then(|end| attach(&root, end)) {
            Some(id) => a.target = Some(id),
            None => errors.push(ScopeError {
                span: a.span.clone(),
                message: "type declaration does not follow an expression".into(),
            }),
        }
    }
    if errors.is_empty() {
        Ok((root, annots))
    } else {
        Err(errors)
    }
}

struct Scope {
    ordinal: u32,
    locals: BTreeSet<String>,
}

/// Walk `n` without entering nested lambdas.
fn each_shallow<'a>(n: &'a AstNode, f: &mut dyn FnMut(&'a AstNode)) {
    f(n);
    if matches!(n.form, AstForm::Lambda { .. }) {
        return;
    }
    for c in n.children() {
        each_shallow(c, f);
    }
}

fn resolve(n: &mut AstNode, scope: Option<&Scope>, lambdas: &mut u32, errors: &mut Vec<ScopeError>) {
    match &mut n.form {
        AstForm::Var { name, res } => {
            if *res == Resolution::Pending {
                *res = match scope {
                    Some(s) if s.locals.contains(name.as_str()) => Resolution::Local(format!("{name}#{}", s.ordinal)),
                    _ => Resolution::Global(format!("{name}#0")),
                };
            }
        }
        AstForm::Lambda { params, explicit, body } => {
            *lambdas += 1;
            let ordinal = *lambdas;
            if !*explicit {
                let mut used = BTreeSet::new();
                for b in body.iter() {
                    each_shallow(b, &mut |m| {
                        if let AstForm::Var { name, res: Resolution::Pending } = &m.form {
                            if IMPLICIT.contains(&name.as_str()) {
                                used.insert(name.clone());
                            }
                        }
                    });
                }
                let present: Vec<bool> = IMPLICIT.iter().map(|p| used.contains(*p)).collect();
                for i in 1..IMPLICIT.len() {
                    if present[i] && !present[i - 1] {
                        errors.push(ScopeError {
                            span: n.span.clone(),
                            message: format!("implicit parameter `{}` used without `{}`", IMPLICIT[i], IMPLICIT[i - 1]),
                        });
                    }
                }
                *params = IMPLICIT
                    .iter()
                    .zip(&present)
                    .filter(|(_, p)| **p)
                    .map(|(name, _)| Param { name: name.to_string(), key: String::new() })
                    .collect();
            }
            let mut locals: BTreeSet<String> = params.iter().map(|p| p.name.clone()).collect();
            for b in body.iter() {
                each_shallow(b, &mut |m| {
                    let target = match &m.form {
                        AstForm::Assign { target, .. } => Some(target),
                        AstForm::IndexAssign { base, .. } => Some(base),
                        _ => None,
                    };
                    if let Some(AstForm::Var { name, .. }) = target.map(|t| &t.form) {
                        locals.insert(name.clone());
                    }
                });
            }
            for p in params.iter_mut() {
                p.key = format!("{}#{ordinal}", p.name);
            }
            let inner = Scope { ordinal, locals };
            for b in body.iter_mut() {
                resolve(b, Some(&inner), lambdas, errors);
            }
        }
        _ => {
            for c in n.children_mut() {
                resolve(c, scope, lambdas, errors);
            }
        }
    }
}

/// Deepest expression node whose span ends at `end`.
fn attach(root: &AstNode, end: (u32, u32)) -> Option<super::NodeId> {
    fn go(n: &AstNode, depth: usize, end: (u32, u32), best: &mut Option<(usize, super::NodeId)>) {
        let candidate = !matches!(n.form, AstForm::ArgList(_) | AstForm::Seq(_));
        if candidate && n.span.end() == end && best.is_none_or(|(d, _)| depth > d) {
            *best = Some((depth, n.id));
        }
        for c in n.children() {
            go(c, depth + 1, end, best);
        }
    }
    let mut best = None;
    go(root, 0, end, &mut best);
    best.map(|(_, id)| id)
}
