//! Type declaration parser.
//!
//! ```text
//! Decl := Alt ("|" Alt)*
//! Alt  := Fn
//! Fn   := Base ("->" Fn)?
//! Base := atomic | "any" | UpperVar | "list" "(" Decl ")" | "hlist"
//!       | "tuple" "(" Alt ("," Alt)* ")" | "stuple" "(" name ("," name)* ")"
//!       | "dict" "(" Alt "," Alt ")" | "(" Decl ")"
//! ```
//!
//! Alternatives nested under a constructor are distributed outward, so
//! `list(int | float)` yields the two-member domain `list(int) | list(float)`.
//! Variables are numbered from zero within one declaration; callers rename
//! them apart before use.

use std::collections::HashMap;

use thiserror::Error;

use crate::typelang::{Atomic, Domain, TypeExpr, TypeVarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (at offset {offset})")]
pub struct DeclParseError {
    pub message: String,
    /// Character offset inside the declaration text.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Bar,
    Arrow,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, DeclParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            '|' => {
                out.push((Tok::Bar, i));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, i));
                i += 2;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), start));
            }
            other => return Err(DeclParseError { message: format!("unexpected character `{other}`"), offset: i }),
        }
    }
    Ok(out)
}

struct DeclParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    vars: HashMap<String, TypeVarId>,
    next_var: u32,
}

/// Parse declaration text into a domain.
pub fn parse_type_decl(text: &str) -> Result<Domain, DeclParseError> {
    let toks = lex(text)?;
    let mut p = DeclParser { toks, pos: 0, end: text.chars().count(), vars: HashMap::new(), next_var: 0 };
    if p.toks.is_empty() {
        return Err(p.error("empty type declaration"));
    }
    let alts = p.decl()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Domain::new(alts))
}

impl DeclParser {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn error(&self, message: impl Into<String>) -> DeclParseError {
        DeclParseError { message: message.into(), offset: self.offset() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), DeclParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn fresh(&mut self) -> TypeExpr {
        let v = TypeVarId(self.next_var);
        self.next_var += 1;
        TypeExpr::Var(v)
    }

    fn decl(&mut self) -> Result<Vec<TypeExpr>, DeclParseError> {
        let mut alts = self.func()?;
        while self.eat(&Tok::Bar) {
            alts.extend(self.func()?);
        }
        Ok(alts)
    }

    fn func(&mut self) -> Result<Vec<TypeExpr>, DeclParseError> {
        let args = self.base()?;
        if !self.eat(&Tok::Arrow) {
            return Ok(args);
        }
        let results = self.func()?;
        let mut out = Vec::new();
        for a in &args {
            for r in &results {
                out.push(TypeExpr::func(a.clone(), r.clone()));
            }
        }
        Ok(out)
    }

    fn base(&mut self) -> Result<Vec<TypeExpr>, DeclParseError> {
        if self.eat(&Tok::LParen) {
            let inner = self.decl()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(inner);
        }
        let name = match self.peek() {
            Some(Tok::Ident(n)) => n.clone(),
            _ => return Err(self.error("expected a type")),
        };
        self.pos += 1;
        if let Ok(a) = name.parse::<Atomic>() {
            return Ok(vec![TypeExpr::Atomic(a)]);
        }
        match name.as_str() {
            "any" => Ok(vec![self.fresh()]),
            "hlist" => Ok(vec![TypeExpr::HList]),
            "list" => {
                self.expect(&Tok::LParen, "`(` after `list`")?;
                let inner = self.decl()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner.into_iter().map(TypeExpr::list).collect())
            }
            "tuple" => {
                self.expect(&Tok::LParen, "`(` after `tuple`")?;
                let mut positions: Vec<Vec<TypeExpr>> = Vec::new();
                if !self.eat(&Tok::RParen) {
                    positions.push(self.func()?);
                    while self.eat(&Tok::Comma) {
                        positions.push(self.func()?);
                    }
                    self.expect(&Tok::RParen, "`)` or `,`")?;
                }
                Ok(cartesian(&positions).into_iter().map(TypeExpr::Tuple).collect())
            }
            "stuple" => {
                self.expect(&Tok::LParen, "`(` after `stuple`")?;
                let mut names = vec![self.name()?];
                while self.eat(&Tok::Comma) {
                    names.push(self.name()?);
                }
                self.expect(&Tok::RParen, "`)` or `,`")?;
                Ok(vec![TypeExpr::STuple(names)])
            }
            "dict" => {
                self.expect(&Tok::LParen, "`(` after `dict`")?;
                let d = self.func()?;
                self.expect(&Tok::Comma, "`,`")?;
                let r = self.func()?;
                self.expect(&Tok::RParen, "`)`")?;
                let mut out = Vec::new();
                for a in &d {
                    for b in &r {
                        out.push(TypeExpr::dict(a.clone(), b.clone()));
                    }
                }
                Ok(out)
            }
            n if n.starts_with(|c: char| c.is_uppercase()) => {
                let next = &mut self.next_var;
                let v = *self.vars.entry(name.clone()).or_insert_with(|| {
                    let v = TypeVarId(*next);
                    *next += 1;
                    v
                });
                Ok(vec![TypeExpr::Var(v)])
            }
            _ => {
                self.pos -= 1;
                Err(self.error(format!("unknown type name `{name}`")))
            }
        }
    }

    fn name(&mut self) -> Result<String, DeclParseError> {
        match self.peek() {
            Some(Tok::Ident(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error("expected a column name")),
        }
    }
}

fn cartesian(positions: &[Vec<TypeExpr>]) -> Vec<Vec<TypeExpr>> {
    let mut out: Vec<Vec<TypeExpr>> = vec![Vec::new()];
    for choices in positions {
        let mut grown = Vec::new();
        for prefix in &out {
            for c in choices {
                let mut v = prefix.clone();
                v.push(c.clone());
                grown.push(v);
            }
        }
        out = grown;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int() -> TypeExpr {
        TypeExpr::Atomic(Atomic::Int)
    }

    #[test]
    fn arrow_builds_func() {
        let d = parse_type_decl("int -> boolean").unwrap();
        assert_eq!(d, Domain::single(TypeExpr::func(int(), TypeExpr::Atomic(Atomic::Boolean))));
    }

    #[test]
    fn arrow_is_right_associative() {
        let d = parse_type_decl("int -> int -> int").unwrap();
        assert_eq!(d, Domain::single(TypeExpr::func(int(), TypeExpr::func(int(), int()))));
        let d = parse_type_decl("(int -> int) -> int").unwrap();
        assert_eq!(d, Domain::single(TypeExpr::func(TypeExpr::func(int(), int()), int())));
    }

    #[test]
    fn plain_atomic() {
        assert_eq!(parse_type_decl("int").unwrap(), Domain::single(int()));
    }

    #[test]
    fn alternatives_and_variables() {
        let d = parse_type_decl("list(X) | dict(A,B)").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.exprs()[0], TypeExpr::list(TypeExpr::var(0)));
        assert_eq!(d.exprs()[1], TypeExpr::dict(TypeExpr::var(1), TypeExpr::var(2)));
    }

    #[test]
    fn same_name_same_variable() {
        let d = parse_type_decl("tuple(A, A) -> A").unwrap();
        let t = &d.exprs()[0];
        assert_eq!(t.vars().len(), 1);
    }

    #[test]
    fn any_is_always_fresh() {
        let d = parse_type_decl("tuple(any, any)").unwrap();
        assert_eq!(d.exprs()[0].vars().len(), 2);
    }

    #[test]
    fn nested_alternatives_distribute() {
        let d = parse_type_decl("list(int | float)").unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn stuple_and_empty_tuple() {
        assert_eq!(parse_type_decl("stuple(name, age)").unwrap(), Domain::single(TypeExpr::stuple(["name", "age"])));
        assert_eq!(parse_type_decl("tuple()").unwrap(), Domain::single(TypeExpr::Tuple(vec![])));
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_type_decl("list(int").unwrap_err();
        assert_eq!(e.offset, 8);
        let e = parse_type_decl("int -> wibble").unwrap_err();
        assert_eq!(e.offset, 7);
        assert!(parse_type_decl("").is_err());
        assert!(parse_type_decl("int int").is_err());
    }
}
