use std::fmt;

use serde::{Deserialize, Serialize};

use crate::span::SourceSpan;
use crate::typelang::{Atomic, Domain, TypeVarId};

/// Identifier of an AST node. The root `Seq` is 0; every other node is
/// numbered densely from 1 in pre-order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    /// The type variable standing for this node's type.
    pub fn var(self) -> TypeVarId {
        TypeVarId(self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "id({})", self.0)
    }
}

/// What a variable occurrence refers to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Resolution {
    /// Not yet resolved (straight out of the parser).
    Pending,
    /// A global name; key is `name#0`.
    Global(String),
    /// A lambda-local name; key is `name#k` for the k-th lambda in pre-order.
    Local(String),
    /// An operator symbol, always a built-in.
    Operator,
}

impl Resolution {
    pub fn key(&self) -> Option<&str> {
        match self {
            Resolution::Global(k) | Resolution::Local(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiteralType {
    Atom(Atomic),
    /// Multi-character string literal, a list of chars.
    CharList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AstForm {
    Literal {
        ty: LiteralType,
        lexeme: String,
    },
    Var {
        name: String,
        res: Resolution,
    },
    Lambda {
        params: Vec<Param>,
        explicit: bool,
        body: Vec<AstNode>,
    },
    /// `args` is always an `ArgList` node.
    App {
        func: Box<AstNode>,
        args: Box<AstNode>,
    },
    /// The argument vector of an application; carries no type of its own.
    ArgList(Vec<AstNode>),
    Assign {
        target: Box<AstNode>,
        value: Box<AstNode>,
    },
    IndexAssign {
        base: Box<AstNode>,
        index: Box<AstNode>,
        value: Box<AstNode>,
    },
    Cond {
        test: Box<AstNode>,
        then: Box<AstNode>,
        els: Box<AstNode>,
    },
    DoLoop {
        count: Box<AstNode>,
        body: Vec<AstNode>,
    },
    ListLit(Vec<AstNode>),
    VectorLit {
        ty: Atomic,
        items: Vec<AstNode>,
    },
    DictLit {
        domain: Box<AstNode>,
        range: Box<AstNode>,
    },
    Seq(Vec<AstNode>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub id: NodeId,
    pub span: SourceSpan,
    pub form: AstForm,
}

impl AstNode {
    pub fn new(span: SourceSpan, form: AstForm) -> Self {
        AstNode { id: NodeId(0), span, form }
    }

    /// Children in structural order (the order ids are assigned in).
    pub fn children(&self) -> Vec<&AstNode> {
        match &self.form {
            AstForm::Literal { .. } | AstForm::Var { .. } => vec![],
            AstForm::Lambda { body, .. } => body.iter().collect(),
            AstForm::App { func, args } => vec![func, args],
            AstForm::ArgList(items) | AstForm::ListLit(items) | AstForm::Seq(items) => items.iter().collect(),
            AstForm::VectorLit { items, .. } => items.iter().collect(),
            AstForm::Assign { target, value } => vec![target, value],
            AstForm::IndexAssign { base, index, value } => vec![base, index, value],
            AstForm::Cond { test, then, els } => vec![test, then, els],
            AstForm::DoLoop { count, body } => {
                let mut v: Vec<&AstNode> = vec![count];
                v.extend(body.iter());
                v
            }
            AstForm::DictLit { domain, range } => vec![domain, range],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut AstNode> {
        match &mut self.form {
            AstForm::Literal { .. } | AstForm::Var { .. } => vec![],
            AstForm::Lambda { body, .. } => body.iter_mut().collect(),
            AstForm::App { func, args } => vec![func, args],
            AstForm::ArgList(items) | AstForm::ListLit(items) | AstForm::Seq(items) => items.iter_mut().collect(),
            AstForm::VectorLit { items, .. } => items.iter_mut().collect(),
            AstForm::Assign { target, value } => vec![target, value],
            AstForm::IndexAssign { base, index, value } => vec![base, index, value],
            AstForm::Cond { test, then, els } => vec![test, then, els],
            AstForm::DoLoop { count, body } => {
                let mut v: Vec<&mut AstNode> = vec![count];
                v.extend(body.iter_mut());
                v
            }
            AstForm::DictLit { domain, range } => vec![domain, range],
        }
    }

    /// All nodes in pre-order.
    pub fn preorder(&self) -> Vec<&AstNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            let kids = n.children();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    pub fn find(&self, id: NodeId) -> Option<&AstNode> {
        self.preorder().into_iter().find(|n| n.id == id)
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.form {
            AstForm::Literal { .. } => "literal",
            AstForm::Var { .. } => "var",
            AstForm::Lambda { .. } => "lambda",
            AstForm::App { .. } => "app",
            AstForm::ArgList(_) => "args",
            AstForm::Assign { .. } => "assign",
            AstForm::IndexAssign { .. } => "index-assign",
            AstForm::Cond { .. } => "cond",
            AstForm::DoLoop { .. } => "do",
            AstForm::ListLit(_) => "list",
            AstForm::VectorLit { .. } => "vector",
            AstForm::DictLit { .. } => "dict",
            AstForm::Seq(_) => "seq",
        }
    }

    /// Number this root 0 and its descendants 1..N in pre-order. Returns N.
    pub(crate) fn number(&mut self) -> u32 {
        fn go(n: &mut AstNode, next: &mut u32) {
            n.id = NodeId(*next);
            *next += 1;
            for c in n.children_mut() {
                go(c, next);
            }
        }
        let mut next = 0;
        go(self, &mut next);
        next - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationKind {
    /// `//!:` trusted as given.
    Imperative,
    /// `//$:` checked against the inferred type.
    Interrogative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub kind: AnnotationKind,
    /// Attached expression; `None` until post-processing.
    pub target: Option<NodeId>,
    /// Declared alternatives, variables numbered locally.
    pub decl: Domain,
    pub text: String,
    pub span: SourceSpan,
    /// End position of the last code token before the comment.
    pub(crate) anchor: Option<(u32, u32)>,
}
