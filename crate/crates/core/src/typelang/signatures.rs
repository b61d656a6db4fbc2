use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::types::{Domain, TypeExpr};
use crate::syntax::parse_type_decl;

const DEFAULT_SIGNATURES: &str = include_str!("../../builtins.sig");

/// Which arguments a built-in lifts item-wise over lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtDir {
    Left,
    Right,
    Both,
}

impl ExtDir {
    /// Whether argument `index` of an `arity`-ary function extends.
    pub fn extends(self, index: usize, arity: usize) -> bool {
        match self {
            ExtDir::Both => true,
            ExtDir::Left => index == 0,
            ExtDir::Right => index + 1 == arity.max(1),
        }
    }
}

impl fmt::Display for ExtDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtDir::Left => "left",
            ExtDir::Right => "right",
            ExtDir::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureEntry {
    pub name: String,
    /// Function type alternatives, with variables numbered locally.
    pub decl: Domain,
    pub arity: usize,
    pub extension: Option<ExtDir>,
    pub relation: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignatureTable {
    entries: BTreeMap<String, SignatureEntry>,
}

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("cannot read signature file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate signature for `{name}`")]
    Duplicate { line: usize, name: String },
}

impl SignatureTable {
    /// The table shipped with the analyzer.
    pub fn builtin() -> SignatureTable {
        parse_signatures(DEFAULT_SIGNATURES).expect("shipped signature file is well formed")
    }

    pub fn get(&self, name: &str) -> Option<&SignatureEntry> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SignatureEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_signatures(path: &Path) -> Result<SignatureTable, SignatureError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| SignatureError::Io { path: path.to_path_buf(), source })?;
    parse_signatures(&text)
}

pub fn parse_signatures(text: &str) -> Result<SignatureTable, SignatureError> {
    let mut table = SignatureTable::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let entry = parse_entry(content, line)?;
        if table.entries.contains_key(&entry.name) {
            return Err(SignatureError::Duplicate { line, name: entry.name });
        }
        table.entries.insert(entry.name.clone(), entry);
    }
    Ok(table)
}

fn parse_entry(content: &str, line: usize) -> Result<SignatureEntry, SignatureError> {
    let malformed = |message: String| SignatureError::Malformed { line, message };
    let (name, rest) = content
        .split_once(" :")
        .or_else(|| content.split_once(':'))
        .ok_or_else(|| malformed("expected `name : declaration`".into()))?;
    let name = name.trim();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(malformed(format!("bad built-in name `{name}`")));
    }

    let mut words: Vec<&str> = rest.split_whitespace().collect();
    let mut relation = None;
    if words.len() >= 2 && words[words.len() - 2] == "rel" {
        relation = Some(words[words.len() - 1].to_string());
        words.truncate(words.len() - 2);
    }
    let mut extension = None;
    match words.as_slice() {
        [.., "ext", dir] if matches!(*dir, "left" | "right" | "both") => {
            extension = Some(match *dir {
                "left" => ExtDir::Left,
                "right" => ExtDir::Right,
                _ => ExtDir::Both,
            });
            words.truncate(words.len() - 2);
        }
        [.., "ext"] => {
            extension = Some(ExtDir::Both);
            words.truncate(words.len() - 1);
        }
        _ => {}
    }
    if words.contains(&"rel") || words.contains(&"ext") {
        return Err(malformed("`ext` and `rel` must follow the declaration, in that order".into()));
    }

    let decl_text = words.join(" ");
    let decl = parse_type_decl(&decl_text).map_err(|e| malformed(e.to_string()))?;
    let arity = arity_of(&decl).ok_or_else(|| malformed("alternatives disagree on arity".into()))?;
    if extension.is_some() && arity == 0 {
        return Err(malformed("only functions can extend item-wise".into()));
    }
    Ok(SignatureEntry { name: name.to_string(), decl, arity, extension, relation, line })
}

fn arity_of(decl: &Domain) -> Option<usize> {
    let mut arity = None;
    for t in decl {
        let a = match t {
            TypeExpr::Func(arg, _) => match &**arg {
                TypeExpr::Tuple(items) if items.len() != 1 => items.len(),
                _ => 1,
            },
            _ => 0,
        };
        match arity {
            None => arity = Some(a),
            Some(prev) if prev != a => return None,
            _ => {}
        }
    }
    arity
}
