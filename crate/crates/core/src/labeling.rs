//! Search for consistent assignments by splitting domains.

use crate::engine::{Constraint, ConstraintStore, Origin, Source, Status};
use crate::typelang::{Domain, TypeVarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelingConfig {
    pub max_splits: usize,
    pub max_solutions: usize,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig { max_splits: 10_000, max_solutions: 64 }
    }
}

#[derive(Debug, Clone)]
pub enum LabelOutcome {
    /// Stores in which propagation found no conflict and no active constraint
    /// has a key left to split.
    Solutions(Vec<ConstraintStore>),
    /// Every branch failed. `witness` is the last failing branch, so its
    /// conflicts explain one failure rather than all of them.
    Inconsistent {
        witness: Box<ConstraintStore>,
        imprecise: bool,
    },
    BudgetExceeded {
        solutions: Vec<ConstraintStore>,
    },
}

impl LabelOutcome {
    pub fn is_inconsistent(&self) -> bool {
        matches!(self, LabelOutcome::Inconsistent { .. })
    }
}

/// The key to split next: among keys of active relations whose domain has
/// several members, the one with the fewest, lowest id first.
pub fn choose_split(store: &ConstraintStore) -> Option<TypeVarId> {
    let mut best: Option<(usize, TypeVarId)> = None;
    for (_, p) in store.active() {
        if matches!(p.constraint, Constraint::Apply { .. }) {
            continue;
        }
        for k in p.constraint.keys() {
            let root = store.find(k);
            let Some(d) = store.domain(root) else { continue };
            if d.len() < 2 {
                continue;
            }
            let cand = (d.len(), root);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
    }
    best.map(|(_, k)| k)
}

/// Explore splits of `store` depth-first. The input store is not modified.
pub fn label(store: &ConstraintStore, config: &LabelingConfig) -> LabelOutcome {
    if store.is_conflicted() {
        return LabelOutcome::Inconsistent { witness: Box::new(store.clone()), imprecise: false };
    }
    let mut stack = vec![store.clone()];
    let mut solutions = Vec::new();
    let mut witness = None;
    let mut splits = 0usize;
    while let Some(s) = stack.pop() {
        if s.is_conflicted() {
            witness = Some(s);
            continue;
        }
        let Some(key) = choose_split(&s) else {
            solutions.push(s);
            if solutions.len() >= config.max_solutions {
                break;
            }
            continue;
        };
        splits += 1;
        if splits > config.max_splits {
            return LabelOutcome::BudgetExceeded { solutions };
        }
        let d = s.domain(key).expect("split keys are constrained");
        let (first, rest) = d.exprs().split_first().expect("split domains have two members");
        let mut right = s.clone();
        let mut left = s;
        for (branch, part) in
            [(&mut left, Domain::single(first.clone())), (&mut right, Domain::distinct(rest.to_vec()))]
        {
            branch.post(Constraint::dom(key, part), Origin::new(Source::Labeling, None));
            if branch.propagate() == Status::BudgetExceeded {
                return LabelOutcome::BudgetExceeded { solutions };
            }
        }
        stack.push(right);
        stack.push(left);
    }
    if solutions.is_empty() {
        let witness = Box::new(witness.unwrap_or_else(|| store.clone()));
        LabelOutcome::Inconsistent { witness, imprecise: true }
    } else {
        LabelOutcome::Solutions(solutions)
    }
}
