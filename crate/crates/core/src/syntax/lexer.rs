use std::ops::Range;
use std::sync::Arc;

use thiserror::Error;

use crate::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    IntLit,
    LongLit,
    FloatLit,
    /// One or more `0`/`1` digits followed by `b`.
    BoolLit,
    /// One or more backtick symbols written without spaces.
    SymbolLit,
    /// Double-quoted text; one character is a `char`, more is a string.
    CharLit,
    Name,
    Operator,
    Punct,
    AnnotImperative,
    AnnotInterrogative,
    /// `;`, or a newline outside any bracket.
    Separator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
    /// Byte range in the source.
    pub range: Range<usize>,
}

impl Token {
    /// Declaration text of an annotation comment, without the tag.
    pub fn decl_text(&self) -> Option<&str> {
        match self.kind {
            TokenKind::AnnotImperative | TokenKind::AnnotInterrogative => Some(self.text[4..].trim()),
            _ => None,
        }
    }

    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

const OPERATORS: [&str; 22] = [
    "<>", "<=", ">=", "+:", "-:", "*:", "%:", "&:", "|:", ":", "+", "-", "*", "%", "<", ">", "=", "&", "|", "!", "$",
    ",",
];

struct Lexer<'a> {
    src: &'a str,
    file: Arc<str>,
    pos: usize,
    line: u32,
    col: u32,
    depth: i32,
    out: Vec<Token>,
}

pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer { src: source, file: Arc::from(file), pos: 0, line: 1, col: 1, depth: 0, out: Vec::new() };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn error(&self, start: (u32, u32), message: impl Into<String>) -> LexError {
        let end = if self.here() == start { (start.0, start.1 + 1) } else { self.here() };
        LexError { span: SourceSpan::new(self.file.clone(), start, end), message: message.into() }
    }

    fn push(&mut self, kind: TokenKind, start_pos: usize, start: (u32, u32)) {
        let text = self.src[start_pos..self.pos].to_string();
        self.out.push(Token {
            kind,
            text,
            span: SourceSpan::new(self.file.clone(), start, self.here()),
            range: start_pos..self.pos,
        });
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(c) = self.peek() {
            let start_pos = self.pos;
            let start = self.here();
            match c {
                '\n' => {
                    self.bump();
                    if self.depth <= 0 {
                        self.out.push(Token {
                            kind: TokenKind::Separator,
                            text: "\n".into(),
                            span: SourceSpan::new(self.file.clone(), start, (start.0, start.1 + 1)),
                            range: start_pos..self.pos,
                        });
                    }
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek_at(1) == Some('/') => self.comment(start_pos, start),
                ';' => {
                    self.bump();
                    self.push(TokenKind::Separator, start_pos, start);
                }
                '(' | '[' | '{' => {
                    self.bump();
                    self.depth += 1;
                    self.push(TokenKind::Punct, start_pos, start);
                }
                ')' | ']' | '}' => {
                    self.bump();
                    self.depth -= 1;
                    self.push(TokenKind::Punct, start_pos, start);
                }
                '"' => self.string(start_pos, start)?,
                '`' => {
                    while self.peek() == Some('`') {
                        self.bump();
                        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_' || c == '.') {
                            self.bump();
                        }
                    }
                    self.push(TokenKind::SymbolLit, start_pos, start);
                }
                c if c.is_ascii_digit() => self.number(start_pos, start)?,
                c if c.is_alphabetic() => {
                    while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
                        self.bump();
                    }
                    self.push(TokenKind::Name, start_pos, start);
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    match OPERATORS.iter().find(|op| rest.starts_with(**op)) {
                        Some(op) => {
                            for _ in 0..op.chars().count() {
                                self.bump();
                            }
                            self.push(TokenKind::Operator, start_pos, start);
                        }
                        None => {
                            self.bump();
                            return Err(self.error(start, format!("unexpected character `{c}`")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn comment(&mut self, start_pos: usize, start: (u32, u32)) {
        let rest = &self.src[self.pos..];
        let kind = if rest.starts_with("//$:") {
            Some(TokenKind::AnnotInterrogative)
        } else if rest.starts_with("//!:") {
            Some(TokenKind::AnnotImperative)
        } else {
            None
        };
        while matches!(self.peek(), Some(c) if c != '\n') {
            self.bump();
        }
        if let Some(kind) = kind {
            // Trailing `\r` belongs to the line ending, not the declaration.
            let end_pos = self.src[start_pos..self.pos].trim_end_matches('\r').len() + start_pos;
            let text = self.src[start_pos..end_pos].to_string();
            let end_col = start.1 + text.chars().count() as u32;
            self.out.push(Token {
                kind,
                text,
                span: SourceSpan::new(self.file.clone(), start, (start.0, end_col)),
                range: start_pos..end_pos,
            });
        }
    }

    fn string(&mut self, start_pos: usize, start: (u32, u32)) -> Result<(), LexError> {
        self.bump();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.error(start, "unterminated character literal")),
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(self.error(start, "unterminated character literal"));
                    }
                }
                Some('"') => break,
                Some(_) => {}
            }
        }
        self.push(TokenKind::CharLit, start_pos, start);
        Ok(())
    }

    fn number(&mut self, start_pos: usize, start: (u32, u32)) -> Result<(), LexError> {
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        let digits = &self.src[start_pos..self.pos];
        let mut kind = TokenKind::IntLit;
        if self.peek() == Some('b') && digits.chars().all(|c| c == '0' || c == '1') {
            self.bump();
            kind = TokenKind::BoolLit;
        } else {
            if self.peek() == Some('.') && !matches!(self.peek_at(1), Some('.')) {
                self.bump();
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
                kind = TokenKind::FloatLit;
            }
            match self.peek() {
                Some('j') if kind == TokenKind::IntLit => {
                    self.bump();
                    kind = TokenKind::LongLit;
                }
                Some('i') if kind == TokenKind::IntLit => {
                    self.bump();
                }
                Some('f') => {
                    self.bump();
                    kind = TokenKind::FloatLit;
                }
                _ => {}
            }
        }
        if matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_' || c == '.') {
            while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_' || c == '.') {
                self.bump();
            }
            return Err(self.error(start, format!("malformed numeric literal `{}`", &self.src[start_pos..self.pos])));
        }
        self.push(kind, start_pos, start);
        Ok(())
    }
}
