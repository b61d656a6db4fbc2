//! Front end for the Q subset: tokens, AST, annotations.

mod ast;
mod decl;
mod lexer;
mod parser;
mod postprocess;

use thiserror::Error;

pub use ast::{Annotation, AnnotationKind, AstForm, AstNode, LiteralType, NodeId, Param, Resolution};
pub use decl::{parse_type_decl, DeclParseError};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use postprocess::{postprocess, ScopeError};

use crate::span::SourceSpan;

/// Any error raised before type checking starts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
}

impl FrontError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            FrontError::Lex(e) => &e.span,
            FrontError::Parse(e) => &e.span,
            FrontError::Scope(e) => &e.span,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FrontError::Lex(_) => "lex-error",
            FrontError::Parse(e) if e.decl.is_some() => "decl-error",
            FrontError::Parse(_) => "parse-error",
            FrontError::Scope(_) => "scope-error",
        }
    }
}

/// Tokenize, parse and post-process one source text.
pub fn front_end(source: &str, file: &str) -> Result<(AstNode, Vec<Annotation>), Vec<FrontError>> {
    let tokens = tokenize(source, file).map_err(|e| vec![e.into()])?;
    let (root, annots) = parse(&tokens).map_err(|e| vec![e.into()])?;
    postprocess(root, annots).map_err(|es| es.into_iter().map(Into::into).collect())
}
