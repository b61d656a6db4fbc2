use std::collections::HashSet;

use super::types::{Atomic, TypeExpr};

/// Bounds for enumerating ground type expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundUniverse {
    pub basis: Vec<Atomic>,
    pub max_depth: usize,
    pub max_width: usize,
    /// Names available to `stuple` terms; none means no `stuple`s are produced.
    pub stuple_names: Vec<String>,
}

impl GroundUniverse {
    pub fn new(basis: impl IntoIterator<Item = Atomic>, max_depth: usize, max_width: usize) -> Self {
        GroundUniverse { basis: basis.into_iter().collect(), max_depth, max_width, stuple_names: Vec::new() }
    }

    pub fn with_stuple_names<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.stuple_names = names.into_iter().map(Into::into).collect();
        self
    }
}

/// All ground terms within the universe's bounds, shallow ones first.
pub fn enumerate_ground(u: &GroundUniverse) -> Vec<TypeExpr> {
    let mut all: Vec<TypeExpr> = u.basis.iter().map(|a| TypeExpr::Atomic(*a)).collect();
    if u.max_depth == 0 {
        return all;
    }
    // Each level rebuilds from all shallower terms; `seen` drops repeats.
    let mut seen: HashSet<TypeExpr> = all.iter().cloned().collect();
    for _level in 1..=u.max_depth {
        let inner = all.clone();
        let mut next = inner.clone();
        let mut add = |t: TypeExpr, next: &mut Vec<TypeExpr>| {
            if seen.insert(t.clone()) {
                next.push(t);
            }
        };
        add(TypeExpr::HList, &mut next);
        for t in &inner {
            add(TypeExpr::list(t.clone()), &mut next);
        }
        for width in 0..=u.max_width {
            for combo in product(&inner, width) {
                add(TypeExpr::Tuple(combo), &mut next);
            }
        }
        for width in 1..=u.max_width {
            for combo in product(&u.stuple_names, width) {
                add(TypeExpr::STuple(combo), &mut next);
            }
        }
        for a in &inner {
            for b in &inner {
                add(TypeExpr::dict(a.clone(), b.clone()), &mut next);
                add(TypeExpr::func(a.clone(), b.clone()), &mut next);
            }
        }
        all = next;
    }
    all
}

fn product<T: Clone>(items: &[T], width: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..width {
        let mut grown = Vec::with_capacity(out.len() * items.len());
        for prefix in &out {
            for it in items {
                let mut v = prefix.clone();
                v.push(it.clone());
                grown.push(v);
            }
        }
        out = grown;
    }
    out
}
