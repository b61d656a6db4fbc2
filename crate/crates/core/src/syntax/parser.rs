use std::sync::Arc;

use thiserror::Error;

use super::ast::{Annotation, AnnotationKind, AstForm, AstNode, LiteralType, Param, Resolution};
use super::decl::{parse_type_decl, DeclParseError};
use super::lexer::{Token, TokenKind};
use crate::span::SourceSpan;
use crate::typelang::Atomic;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// Token descriptions that would have been accepted.
    pub expected: Vec<String>,
    /// Set when the error is inside an annotation's type declaration.
    pub decl: Option<DeclParseError>,
}

/// Parse a token stream into a `Seq` root with pre-order node ids, plus the
/// annotations found in it (targets are attached later by `postprocess`).
pub fn parse(tokens: &[Token]) -> Result<(AstNode, Vec<Annotation>), ParseError> {
    let file: Arc<str> = tokens.first().map(|t| t.span.file.clone()).unwrap_or_else(|| Arc::from(""));
    let mut code = Vec::new();
    let mut annotations = Vec::new();
    let mut anchor: Option<(u32, u32)> = None;
    for tok in tokens {
        match tok.kind {
            TokenKind::AnnotImperative | TokenKind::AnnotInterrogative => {
                annotations.push(annotation(tok, anchor)?);
            }
            TokenKind::Separator => code.push(tok),
            _ => {
                anchor = Some(tok.span.end());
                code.push(tok);
            }
        }
    }
    let mut p = Parser { toks: code, pos: 0, file };
    let mut root = p.program()?;
    root.number();
    Ok((root, annotations))
}

fn annotation(tok: &Token, anchor: Option<(u32, u32)>) -> Result<Annotation, ParseError> {
    let kind =
        if tok.kind == TokenKind::AnnotImperative { AnnotationKind::Imperative } else { AnnotationKind::Interrogative };
    let body = &tok.text[4..];
    let text = body.trim();
    let lead = body.chars().take_while(|c| c.is_whitespace()).count() as u32;
    let decl = parse_type_decl(text).map_err(|e| {
        let col = tok.span.start_col + 4 + lead + e.offset as u32;
        ParseError {
            span: SourceSpan::new(tok.span.file.clone(), (tok.span.start_line, col), (tok.span.start_line, col + 1)),
            message: format!("bad type declaration: {e}"),
            expected: vec![],
            decl: Some(e),
        }
    })?;
    Ok(Annotation { kind, target: None, decl, text: text.to_string(), span: tok.span.clone(), anchor })
}

struct Parser<'t> {
    toks: Vec<&'t Token>,
    pos: usize,
    file: Arc<str>,
}

fn is_numeric_lit(t: &Token) -> bool {
    matches!(t.kind, TokenKind::IntLit | TokenKind::LongLit | TokenKind::FloatLit)
}

fn bin(func: AstNode, lhs: AstNode, rhs: AstNode) -> AstNode {
    let span = lhs.span.to(&rhs.span);
    let args = AstNode::new(span.clone(), AstForm::ArgList(vec![lhs, rhs]));
    AstNode::new(span, AstForm::App { func: Box::new(func), args: Box::new(args) })
}

fn var(name: &str, span: SourceSpan, res: Resolution) -> AstNode {
    AstNode::new(span, AstForm::Var { name: name.to_string(), res })
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + n).copied()
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is(TokenKind::Punct, p))
    }

    fn at_sep(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Separator)
    }

    fn at_semicolon(&self) -> bool {
        self.peek().is_some_and(|t| t.is(TokenKind::Separator, ";"))
    }

    fn eof_span(&self) -> SourceSpan {
        match self.toks.last() {
            Some(t) => SourceSpan::new(self.file.clone(), t.span.end(), t.span.end()),
            None => SourceSpan::new(self.file.clone(), (1, 1), (1, 1)),
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (span, found) = match self.peek() {
            Some(t) if t.text == "\n" => (t.span.clone(), "end of line".to_string()),
            Some(t) => (t.span.clone(), format!("`{}`", t.text)),
            None => (self.eof_span(), "end of input".to_string()),
        };
        ParseError {
            span,
            message: format!("expected {}, found {found}", expected.join(" or ")),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            decl: None,
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<&'t Token, ParseError> {
        if self.at_punct(p) {
            Ok(self.next().unwrap())
        } else {
            Err(self.error(&[&format!("`{p}`")]))
        }
    }

    fn program(&mut self) -> Result<AstNode, ParseError> {
        let mut items = Vec::new();
        loop {
            while self.at_sep() {
                self.pos += 1;
            }
            if self.peek().is_none() {
                break;
            }
            items.push(self.expr()?);
            if self.peek().is_some() && !self.at_sep() {
                return Err(self.error(&["`;`", "newline"]));
            }
        }
        let span = match (items.first(), items.last()) {
            (Some(a), Some(b)) => a.span.to(&b.span),
            _ => SourceSpan::new(self.file.clone(), (1, 1), (1, 1)),
        };
        Ok(AstNode::new(span, AstForm::Seq(items)))
    }

    fn starts_term(&self) -> bool {
        let Some(t) = self.peek() else { return false };
        match t.kind {
            TokenKind::IntLit
            | TokenKind::LongLit
            | TokenKind::FloatLit
            | TokenKind::BoolLit
            | TokenKind::SymbolLit
            | TokenKind::CharLit
            | TokenKind::Name => true,
            TokenKind::Punct => t.text == "(" || t.text == "{",
            TokenKind::Operator => t.text == "$" && self.peek_at(1).is_some_and(|n| n.is(TokenKind::Punct, "[")),
            _ => false,
        }
    }

    /// `term (op expr)?` or `term expr`, right-associative.
    fn expr(&mut self) -> Result<AstNode, ParseError> {
        let lhs = self.term()?;
        let Some(t) = self.peek() else { return Ok(lhs) };
        if t.kind == TokenKind::Operator && !self.starts_term() {
            self.pos += 1;
            let op = t.text.as_str();
            if op == ":" {
                let value = self.expr()?;
                return self.assignment(lhs, value, t);
            }
            if op.len() == 2 && op.ends_with(':') {
                let target = match &lhs.form {
                    AstForm::Var { name, .. } => name.clone(),
                    _ => {
                        return Err(ParseError {
                            span: lhs.span.clone(),
                            message: "compound assignment needs a variable on the left".into(),
                            expected: vec!["name".into()],
                            decl: None,
                        })
                    }
                };
                let rhs = self.expr()?;
                let op_span =
                    SourceSpan::new(self.file.clone(), t.span.start(), (t.span.start_line, t.span.start_col + 1));
                let func = var(&op[..1], op_span, Resolution::Operator);
                let copy = var(&target, lhs.span.clone(), Resolution::Pending);
                let value = bin(func, copy, rhs);
                let span = lhs.span.to(&value.span);
                return Ok(AstNode::new(span, AstForm::Assign { target: Box::new(lhs), value: Box::new(value) }));
            }
            let rhs = self.expr()?;
            if op == "!" {
                let span = lhs.span.to(&rhs.span);
                return Ok(AstNode::new(span, AstForm::DictLit { domain: Box::new(lhs), range: Box::new(rhs) }));
            }
            let func = var(op, t.span.clone(), Resolution::Operator);
            return Ok(bin(func, lhs, rhs));
        }
        if self.starts_term() {
            let rhs = self.expr()?;
            let span = lhs.span.to(&rhs.span);
            let args = AstNode::new(rhs.span.clone(), AstForm::ArgList(vec![rhs]));
            return Ok(AstNode::new(span, AstForm::App { func: Box::new(lhs), args: Box::new(args) }));
        }
        Ok(lhs)
    }

    fn assignment(&self, lhs: AstNode, value: AstNode, colon: &Token) -> Result<AstNode, ParseError> {
        let span = lhs.span.to(&value.span);
        match lhs.form {
            AstForm::Var { res: Resolution::Pending, .. } => {
                Ok(AstNode::new(span, AstForm::Assign { target: Box::new(lhs), value: Box::new(value) }))
            }
            AstForm::App { func, args } if matches!(func.form, AstForm::Var { res: Resolution::Pending, .. }) => {
                let mut items = match args.form {
                    AstForm::ArgList(items) => items,
                    _ => unreachable!("application arguments are an ArgList"),
                };
                if items.len() != 1 {
                    return Err(ParseError {
                        span: args.span,
                        message: "indexed assignment takes exactly one index".into(),
                        expected: vec![],
                        decl: None,
                    });
                }
                let index = items.pop().unwrap();
                Ok(AstNode::new(
                    span,
                    AstForm::IndexAssign { base: func, index: Box::new(index), value: Box::new(value) },
                ))
            }
            _ => Err(ParseError {
                span: colon.span.clone(),
                message: "left side of `:` must be a name or an indexed name".into(),
                expected: vec!["name".into()],
                decl: None,
            }),
        }
    }

    fn term(&mut self) -> Result<AstNode, ParseError> {
        let Some(t) = self.peek() else { return Err(self.error(&["expression"])) };
        let mut node = match t.kind {
            TokenKind::IntLit | TokenKind::LongLit | TokenKind::FloatLit => self.numbers(),
            TokenKind::BoolLit => {
                self.pos += 1;
                bools(t)
            }
            TokenKind::SymbolLit => {
                self.pos += 1;
                symbols(t)
            }
            TokenKind::CharLit => {
                self.pos += 1;
                let content = unescape(&t.text[1..t.text.len() - 1]);
                let ty =
                    if content.chars().count() == 1 { LiteralType::Atom(Atomic::Char) } else { LiteralType::CharList };
                AstNode::new(t.span.clone(), AstForm::Literal { ty, lexeme: t.text.clone() })
            }
            TokenKind::Name => {
                self.pos += 1;
                if t.text == "do" && self.at_punct("[") {
                    self.do_loop(t)?
                } else {
                    var(&t.text, t.span.clone(), Resolution::Pending)
                }
            }
            TokenKind::Operator => {
                self.pos += 1;
                if t.text == "$" && self.at_punct("[") {
                    self.cond(t)?
                } else if self.at_punct("[") || self.at_term_end() {
                    var(&t.text, t.span.clone(), Resolution::Operator)
                } else {
                    self.pos -= 1;
                    return Err(self.error(&["expression"]));
                }
            }
            TokenKind::Punct if t.text == "(" => self.paren()?,
            TokenKind::Punct if t.text == "{" => self.lambda()?,
            _ => return Err(self.error(&["expression"])),
        };
        while self.at_punct("[") {
            let args = self.bracket_args()?;
            let span = node.span.to(&args.span);
            node = AstNode::new(span, AstForm::App { func: Box::new(node), args: Box::new(args) });
        }
        Ok(node)
    }

    fn at_term_end(&self) -> bool {
        match self.peek() {
            None => true,
            Some(t) => {
                t.kind == TokenKind::Separator
                    || (t.kind == TokenKind::Punct && matches!(t.text.as_str(), ")" | "]" | "}"))
            }
        }
    }

    fn numbers(&mut self) -> AstNode {
        let mut items = Vec::new();
        while let Some(t) = self.peek().filter(|t| is_numeric_lit(t)) {
            self.pos += 1;
            let ty = match t.kind {
                TokenKind::LongLit => Atomic::Long,
                TokenKind::FloatLit => Atomic::Float,
                _ => Atomic::Int,
            };
            items.push(AstNode::new(
                t.span.clone(),
                AstForm::Literal { ty: LiteralType::Atom(ty), lexeme: t.text.clone() },
            ));
        }
        if items.len() == 1 {
            return items.pop().unwrap();
        }
        let ty = items
            .iter()
            .filter_map(|n| match &n.form {
                AstForm::Literal { ty: LiteralType::Atom(a), .. } => Some(*a),
                _ => None,
            })
            .max_by_key(|a| a.numeric_rank())
            .unwrap_or(Atomic::Int);
        let span = items[0].span.to(&items[items.len() - 1].span);
        AstNode::new(span, AstForm::VectorLit { ty, items })
    }

    fn paren(&mut self) -> Result<AstNode, ParseError> {
        let open = self.expect_punct("(")?;
        if self.at_punct(")") {
            let close = self.next().unwrap();
            return Ok(AstNode::new(open.span.to(&close.span), AstForm::ListLit(vec![])));
        }
        let first = self.expr()?;
        if self.at_punct(")") {
            let close = self.next().unwrap();
            let mut inner = first;
            inner.span = open.span.to(&close.span);
            return Ok(inner);
        }
        let mut items = vec![first];
        while self.at_semicolon() {
            self.pos += 1;
            items.push(self.expr()?);
        }
        let close = self.expect_punct(")").map_err(|_| self.error(&["`;`", "`)`"]))?;
        Ok(AstNode::new(open.span.to(&close.span), AstForm::ListLit(items)))
    }

    /// `[e1; e2; ...]` as an `ArgList`; `[]` is zero arguments.
    fn bracket_args(&mut self) -> Result<AstNode, ParseError> {
        let (items, span) = self.bracketed()?;
        Ok(AstNode::new(span, AstForm::ArgList(items)))
    }

    fn bracketed(&mut self) -> Result<(Vec<AstNode>, SourceSpan), ParseError> {
        let open = self.expect_punct("[")?;
        let mut items = Vec::new();
        if !self.at_punct("]") {
            items.push(self.expr()?);
            while self.at_semicolon() {
                self.pos += 1;
                items.push(self.expr()?);
            }
        }
        let close = self.expect_punct("]").map_err(|_| self.error(&["`;`", "`]`"]))?;
        Ok((items, open.span.to(&close.span)))
    }

    fn cond(&mut self, dollar: &Token) -> Result<AstNode, ParseError> {
        let (mut items, span) = self.bracketed()?;
        if items.len() < 3 || items.len() % 2 == 0 {
            return Err(ParseError {
                span: dollar.span.to(&span),
                message: "conditional needs test;then;else (optionally more test;then pairs)".into(),
                expected: vec![],
                decl: None,
            });
        }
        let mut els = items.pop().unwrap();
        while items.len() > 2 {
            let then = items.pop().unwrap();
            let test = items.pop().unwrap();
            let s = test.span.to(&els.span);
            els = AstNode::new(s, AstForm::Cond { test: Box::new(test), then: Box::new(then), els: Box::new(els) });
        }
        let then = items.pop().unwrap();
        let test = items.pop().unwrap();
        Ok(AstNode::new(
            dollar.span.to(&span),
            AstForm::Cond { test: Box::new(test), then: Box::new(then), els: Box::new(els) },
        ))
    }

    fn do_loop(&mut self, kw: &Token) -> Result<AstNode, ParseError> {
        let (mut items, span) = self.bracketed()?;
        if items.is_empty() {
            return Err(ParseError {
                span: kw.span.to(&span),
                message: "do loop needs a count".into(),
                expected: vec!["expression".into()],
                decl: None,
            });
        }
        let count = items.remove(0);
        Ok(AstNode::new(kw.span.to(&span), AstForm::DoLoop { count: Box::new(count), body: items }))
    }

    fn lambda(&mut self) -> Result<AstNode, ParseError> {
        let open = self.expect_punct("{")?;
        let mut params = Vec::new();
        let explicit = self.at_punct("[");
        if explicit {
            self.pos += 1;
            if !self.at_punct("]") {
                loop {
                    match self.peek() {
                        Some(t) if t.kind == TokenKind::Name => {
                            self.pos += 1;
                            params.push(Param { name: t.text.clone(), key: String::new() });
                        }
                        _ => return Err(self.error(&["parameter name"])),
                    }
                    if self.at_semicolon() {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect_punct("]").map_err(|_| self.error(&["`;`", "`]`"]))?;
        }
        let mut body = Vec::new();
        loop {
            while self.at_sep() {
                self.pos += 1;
            }
            if self.at_punct("}") {
                break;
            }
            body.push(self.expr()?);
            if !self.at_sep() && !self.at_punct("}") {
                return Err(self.error(&["`;`", "`}`"]));
            }
        }
        let close = self.next().unwrap();
        Ok(AstNode::new(open.span.to(&close.span), AstForm::Lambda { params, explicit, body }))
    }
}

fn sub_span(t: &Token, offset: u32, width: u32) -> SourceSpan {
    let c = t.span.start_col + offset;
    SourceSpan::new(t.span.file.clone(), (t.span.start_line, c), (t.span.start_line, c + width))
}

fn bools(t: &Token) -> AstNode {
    let digits = &t.text[..t.text.len() - 1];
    let lit = |d: char, span| {
        AstNode::new(span, AstForm::Literal { ty: LiteralType::Atom(Atomic::Boolean), lexeme: format!("{d}b") })
    };
    if digits.len() == 1 {
        return lit(digits.chars().next().unwrap(), t.span.clone());
    }
    let items = digits.chars().enumerate().map(|(i, d)| lit(d, sub_span(t, i as u32, 1))).collect();
    AstNode::new(t.span.clone(), AstForm::VectorLit { ty: Atomic::Boolean, items })
}

fn symbols(t: &Token) -> AstNode {
    let mut items = Vec::new();
    let mut offset = 0u32;
    for name in t.text.split('`').skip(1) {
        let width = name.chars().count() as u32 + 1;
        items.push(AstNode::new(
            sub_span(t, offset, width),
            AstForm::Literal { ty: LiteralType::Atom(Atomic::Symbol), lexeme: name.to_string() },
        ));
        offset += width;
    }
    if items.len() == 1 {
        let mut n = items.pop().unwrap();
        n.span = t.span.clone();
        return n;
    }
    AstNode::new(t.span.clone(), AstForm::VectorLit { ty: Atomic::Symbol, items })
}

fn unescape(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}
