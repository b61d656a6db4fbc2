use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use super::constraint::{domain_string, key_name, ConflictRecord, Constraint, Origin, Posted};
use super::registry::Registry;
use super::trace::{Effect, TraceEvent};
use crate::typelang::{apply_subst, meet, Domain, Substitution, TypeExpr, TypeVarId};

pub const DEFAULT_STEP_BUDGET: usize = 200_000;

/// Guard against runaway resolution through cyclic singleton bindings.
const MAX_RESOLVE_DEPTH: usize = 64;

/// Domains, equalities and live constraints of one analysis.
///
/// Keys are type variables; a node's key is the variable with the node's
/// number. Equated keys share a class whose root is its smallest member, and
/// the class domain is stored under the root. A class with a one-member
/// domain acts as a binding when other terms are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintStore {
    pub(crate) node_count: u32,
    pub(crate) next_var: u32,
    pub(crate) parent: BTreeMap<TypeVarId, TypeVarId>,
    pub(crate) domains: BTreeMap<TypeVarId, Domain>,
    pub(crate) active: BTreeMap<u32, Posted>,
    pub(crate) next_cid: u32,
    pub(crate) conflicts: Vec<ConflictRecord>,
    pub(crate) trace: Vec<TraceEvent>,
    pub(crate) pending_effects: Vec<Effect>,
    pub(crate) queue: VecDeque<Posted>,
    pub(crate) registry: Arc<Registry>,
    pub(crate) dirty: bool,
    pub(crate) steps: usize,
    pub(crate) step_budget: usize,
    pub(crate) budget_exceeded: bool,
}

impl ConstraintStore {
    /// An empty store for a tree with nodes `0..=node_count`.
    pub fn new(node_count: u32, registry: Arc<Registry>) -> Self {
        ConstraintStore {
            node_count,
            next_var: node_count + 1,
            parent: BTreeMap::new(),
            domains: BTreeMap::new(),
            active: BTreeMap::new(),
            next_cid: 0,
            conflicts: Vec::new(),
            trace: Vec::new(),
            pending_effects: Vec::new(),
            queue: VecDeque::new(),
            registry,
            dirty: false,
            steps: 0,
            step_budget: DEFAULT_STEP_BUDGET,
            budget_exceeded: false,
        }
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn set_step_budget(&mut self, budget: usize) {
        self.step_budget = budget;
    }

    pub fn budget_exceeded(&self) -> bool {
        self.budget_exceeded
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn conflicts(&self) -> &[ConflictRecord] {
        &self.conflicts
    }

    pub fn active(&self) -> impl Iterator<Item = (u32, &Posted)> {
        self.active.iter().map(|(id, p)| (*id, p))
    }

    pub fn pending(&self) -> impl Iterator<Item = &Posted> {
        self.queue.iter()
    }

    /// Remove and return the constraints posted but not yet processed.
    pub fn take_pending(&mut self) -> Vec<Posted> {
        self.queue.drain(..).collect()
    }

    pub fn key_name(&self, v: TypeVarId) -> String {
        key_name(v, self.node_count)
    }

    pub fn domain_string(&self, d: &Domain) -> String {
        domain_string(d, self.node_count)
    }

    pub fn is_node_key(&self, v: TypeVarId) -> bool {
        v.0 <= self.node_count
    }

    pub fn fresh(&mut self) -> TypeVarId {
        let v = TypeVarId(self.next_var);
        self.next_var += 1;
        self.pending_effects.push(Effect::FreshVar { var: v });
        v
    }

    pub fn fresh_var(&mut self) -> TypeExpr {
        TypeExpr::Var(self.fresh())
    }

    /// Rename a template's variables apart with fresh ones.
    pub fn instantiate(&mut self, decl: &Domain) -> Domain {
        let mut map: BTreeMap<TypeVarId, TypeVarId> = BTreeMap::new();
        let mut vars: Vec<TypeVarId> = decl.vars().into_iter().collect();
        vars.sort();
        for v in vars {
            let f = self.fresh();
            map.insert(v, f);
        }
        Domain::distinct(decl.iter().map(|t| t.map_vars(&mut |v| TypeExpr::Var(map[&v]))))
    }

    pub fn post(&mut self, constraint: Constraint, origin: Origin) {
        self.queue.push_back(Posted::new(constraint, origin));
    }

    pub fn find(&self, v: TypeVarId) -> TypeVarId {
        let mut v = v;
        while let Some(p) = self.parent.get(&v) {
            v = *p;
        }
        v
    }

    /// Substitute one-member classes and replace variables by class roots.
    pub fn resolve(&self, t: &TypeExpr) -> TypeExpr {
        self.resolve_in(t, 0)
    }

    fn resolve_in(&self, t: &TypeExpr, depth: usize) -> TypeExpr {
        t.map_vars(&mut |v| {
            let r = self.find(v);
            let Some(d) = self
                .domains
                .get(&r)
                .filter(|d| depth < MAX_RESOLVE_DEPTH && (d.len() == 1 || (d.len() > 1 && depth < 8)))
            else {
                return TypeExpr::Var(r);
            };
            let first = self.resolve_in(&d.exprs()[0], depth + 1);
            // Members that resolve alike still bind the class.
            if d.iter().skip(1).all(|m| self.resolve_in(m, depth + 1) == first) {
                first
            } else {
                TypeExpr::Var(r)
            }
        })
    }

    /// A fresh-variable class whose domain has been emptied. Classes holding a
    /// node key never count, so emptiness stays on the node it was found at.
    fn dead(&self, root: TypeVarId, depth: usize) -> bool {
        if self.is_node_key(root) || depth > MAX_RESOLVE_DEPTH {
            return false;
        }
        match self.domains.get(&root) {
            Some(d) => d.iter().all(|m| self.member_dead(m, depth + 1)),
            None => false,
        }
    }

    fn member_dead(&self, t: &TypeExpr, depth: usize) -> bool {
        t.vars().into_iter().any(|v| {
            let r = self.find(v);
            self.dead(r, depth)
        })
    }

    /// Current domain of `key`'s class; `None` when unconstrained.
    pub fn domain(&self, key: TypeVarId) -> Option<Domain> {
        let r = self.find(key);
        let d = self.domains.get(&r)?;
        Some(Domain::distinct(d.iter().filter(|m| !self.member_dead(m, 0)).map(|m| self.resolve(m))))
    }

    /// Like [`domain`](Self::domain) but without substituting bound
    /// variables, so member structure keeps referring to other keys.
    pub(crate) fn shallow_domain(&self, key: TypeVarId) -> Option<Domain> {
        let r = self.find(key);
        let d = self.domains.get(&r)?;
        Some(Domain::distinct(
            d.iter().filter(|m| !self.member_dead(m, 0)).map(|m| m.map_vars(&mut |v| TypeExpr::Var(self.find(v)))),
        ))
    }

    pub fn is_empty_key(&self, key: TypeVarId) -> bool {
        self.domain(key).is_some_and(|d| d.is_empty())
    }

    pub fn is_conflicted(&self) -> bool {
        !self.conflicts.is_empty()
    }

    // ---- recorded mutations ----

    fn set_domain(&mut self, root: TypeVarId, domain: Option<Domain>) {
        if self.domains.get(&root) == domain.as_ref() {
            return;
        }
        match &domain {
            Some(d) => {
                self.domains.insert(root, d.clone());
            }
            None => {
                self.domains.remove(&root);
            }
        }
        self.pending_effects.push(Effect::SetDomain { key: root, domain });
        self.dirty = true;
    }

    fn link(&mut self, child: TypeVarId, root: TypeVarId) {
        self.parent.insert(child, root);
        self.pending_effects.push(Effect::Union { child, root });
        self.dirty = true;
    }

    pub(crate) fn activate(&mut self, posted: Posted) -> u32 {
        let id = self.next_cid;
        self.next_cid += 1;
        self.active.insert(id, posted.clone());
        self.pending_effects.push(Effect::Activate { id, posted });
        id
    }

    pub(crate) fn retire(&mut self, id: u32) {
        if self.active.remove(&id).is_some() {
            self.pending_effects.push(Effect::Retire { id });
        }
    }

    fn record_conflict(&mut self, key: TypeVarId, left: Option<Domain>, right: Domain, cause: &Posted) {
        let rec = ConflictRecord {
            key,
            left,
            right,
            cause: cause.constraint.display(self.node_count).to_string(),
            source: cause.origin.source,
            span: cause.origin.span.clone(),
        };
        self.conflicts.push(rec.clone());
        self.pending_effects.push(Effect::Conflict(rec));
    }

    /// Close the pending effects into a trace event.
    pub(crate) fn emit(&mut self, rule: String, consumed: Vec<Constraint>, produced: Vec<Constraint>) {
        let effects = std::mem::take(&mut self.pending_effects);
        self.trace.push(TraceEvent { step: self.trace.len() + 1, rule, consumed, produced, effects });
    }

    /// Apply one recorded effect; used to replay traces.
    pub fn apply_effect(&mut self, e: &Effect) {
        match e {
            Effect::SetDomain { key, domain: Some(d) } => {
                self.domains.insert(*key, d.clone());
            }
            Effect::SetDomain { key, domain: None } => {
                self.domains.remove(key);
            }
            Effect::Union { child, root } => {
                self.parent.insert(*child, *root);
            }
            Effect::Activate { id, posted } => {
                self.active.insert(*id, posted.clone());
                self.next_cid = self.next_cid.max(id + 1);
            }
            Effect::Retire { id } => {
                self.active.remove(id);
            }
            Effect::Conflict(rec) => self.conflicts.push(rec.clone()),
            Effect::FreshVar { var } => self.next_var = self.next_var.max(var.0 + 1),
        }
    }

    /// Equality of everything but the trace and scheduling bookkeeping.
    pub fn same_state(&self, other: &ConstraintStore) -> bool {
        self.parent == other.parent
            && self.domains == other.domains
            && self.active == other.active
            && self.conflicts == other.conflicts
            && self.next_var == other.next_var
    }

    // ---- narrowing ----

    /// Bindings a meet needs must be compatible with the bound variables'
    /// current domains.
    fn consistent(&self, s: &Substitution) -> bool {
        s.iter().all(|(v, t)| match self.domain(v) {
            None => true,
            Some(d) if d.is_empty() => true,
            Some(d) => d.iter().any(|m| meet(m, t).is_ok()),
        })
    }

    fn branches(&self, old: &Domain, new: &Domain) -> Vec<(TypeExpr, Substitution)> {
        let mut out = Vec::new();
        for a in old {
            for b in new {
                if let Ok((t, s)) = meet(a, b) {
                    if self.consistent(&s) {
                        let (t, s) = self.refine(t, s);
                        out.push(if renames(a, &s) && apply_subst(a, &s) == t { (a.clone(), s) } else { (t, s) });
                    }
                }
            }
        }
        out
    }

    /// Tighten a branch where a bound variable's domain admits exactly one
    /// member compatible with its binding.
    fn refine(&self, mut t: TypeExpr, mut s: Substitution) -> (TypeExpr, Substitution) {
        for _ in 0..8 {
            let mut extra = None;
            for (v, bound) in s.iter() {
                let Some(d) = self.domain(v) else { continue };
                let mut fits = d.iter().filter_map(|m| meet(bound, m).ok());
                if let (Some((_, s2)), None) = (fits.next(), fits.next()) {
                    if !s2.is_empty() && s2.iter().all(|(w, _)| s.get(w).is_none()) {
                        extra = Some(s2);
                        break;
                    }
                }
            }
            let Some(s2) = extra else { break };
            let mut merged = Substitution::from_pairs(s.iter().map(|(v, b)| (v, apply_subst(b, &s2))));
            for (w, b) in s2.iter() {
                merged.insert(w, b.clone());
            }
            if merged.iter().any(|(v, b)| b.occurs(v)) {
                break;
            }
            t = apply_subst(&t, &s2);
            s = merged;
        }
        (t, s)
    }

    /// Domain constraints implied by the surviving branches: a variable bound
    /// on every branch must take one of its branch values.
    fn project(branches: &[(TypeExpr, Substitution)]) -> Vec<Constraint> {
        let Some((_, first)) = branches.first() else { return vec![] };
        let mut out = Vec::new();
        for (v, _) in first.iter() {
            let values: Option<Vec<TypeExpr>> = branches.iter().map(|(_, s)| s.get(v).cloned()).collect();
            let Some(values) = values else { continue };
            let d = Domain::distinct(values);
            if d.len() > 1 && d.iter().any(|t| matches!(t, TypeExpr::Var(_))) {
                continue;
            }
            out.push(Constraint::dom(v, d));
        }
        out
    }

    /// Narrow `root`'s class with `new`. Returns the constraints implied by
    /// the variable bindings of the surviving alternatives.
    fn narrow_class(&mut self, key: TypeVarId, new: Domain, cause: &Posted) -> Vec<Constraint> {
        let root = self.find(key);
        let new = Domain::distinct(new.iter().map(|t| self.resolve(t)));
        match self.domain(root) {
            Some(old) if old.is_empty() => vec![],
            None if new.is_empty() => {
                self.record_conflict(key, None, new.clone(), cause);
                self.set_domain(root, Some(Domain::empty()));
                vec![]
            }
            None => {
                self.store_domain(root, key, None, new, cause);
                vec![]
            }
            Some(old) => {
                let branches = self.branches(&old, &new);
                let result = Domain::distinct(branches.iter().map(|(t, _)| t.clone()));
                if result.is_empty() {
                    self.record_conflict(key, Some(old), new, cause);
                    self.set_domain(root, Some(Domain::empty()));
                    return vec![];
                }
                let derived = Self::project(&branches);
                if result != old {
                    self.store_domain(root, key, Some(old), result, cause);
                }
                derived
            }
        }
    }

    fn store_domain(&mut self, root: TypeVarId, key: TypeVarId, old: Option<Domain>, d: Domain, cause: &Posted) {
        if d.len() == 1 {
            let t = self.resolve(&d.exprs()[0]);
            if t.vars().into_iter().any(|v| self.find(v) == root) {
                // The class would have to contain itself.
                self.record_conflict(key, old, Domain::empty(), cause);
                self.set_domain(root, Some(Domain::empty()));
                return;
            }
        }
        self.set_domain(root, Some(d));
    }

    fn union(&mut self, a: TypeVarId, b: TypeVarId, cause: &Posted) -> Vec<Constraint> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return vec![];
        }
        let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
        let child_dom = self.domain(child);
        let root_dom = self.domain(root);
        self.link(child, root);
        if self.domains.contains_key(&child) {
            self.set_domain(child, None);
        }
        match (root_dom, child_dom) {
            (Some(r), _) if r.is_empty() => vec![],
            (_, Some(c)) if c.is_empty() => {
                self.set_domain(root, Some(Domain::empty()));
                vec![]
            }
            (_, None) => {
                // Re-check the root's own binding now that `child` resolves to it.
                if let Some(d) = self.domain(root) {
                    if d.len() == 1 && d.exprs()[0].vars().into_iter().any(|v| self.find(v) == root) {
                        self.record_conflict(root, Some(d), Domain::empty(), cause);
                        self.set_domain(root, Some(Domain::empty()));
                    }
                }
                vec![]
            }
            (None, Some(c)) => {
                self.store_domain(root, root, None, c, cause);
                vec![]
            }
            (Some(_), Some(c)) => self.narrow_class(root, c, cause),
        }
    }

    /// Apply a `dom` or `eq` constraint. Returns implied constraints.
    pub(crate) fn apply_basic(&mut self, posted: &Posted) -> Vec<Constraint> {
        match &posted.constraint {
            Constraint::Dom { key, domain } => {
                if domain.len() == 1 {
                    if let TypeExpr::Var(v) = &domain.exprs()[0] {
                        return self.union(*key, *v, posted);
                    }
                }
                self.narrow_class(*key, domain.clone(), posted)
            }
            Constraint::Eq { a, b } => self.union(*a, *b, posted),
            _ => unreachable!("only dom and eq are applied directly"),
        }
    }

    /// Whether posting `c` could change the store.
    pub(crate) fn would_change(&self, c: &Constraint, depth: usize) -> bool {
        if depth > 4 {
            return true;
        }
        match c {
            Constraint::Eq { a, b } => self.find(*a) != self.find(*b),
            Constraint::Dom { key, domain } => {
                if domain.len() == 1 {
                    if let TypeExpr::Var(v) = &domain.exprs()[0] {
                        return self.find(*key) != self.find(*v);
                    }
                }
                let new = Domain::distinct(domain.iter().map(|t| self.resolve(t)));
                match self.domain(*key) {
                    None => true,
                    Some(old) if old.is_empty() => false,
                    Some(old) => {
                        let branches = self.branches(&old, &new);
                        let result = Domain::distinct(branches.iter().map(|(t, _)| t.clone()));
                        result != old || Self::project(&branches).iter().any(|d| self.would_change(d, depth + 1))
                    }
                }
            }
            _ => true,
        }
    }

    /// Labeling-relevant view: every constrained node key and its domain.
    pub fn node_domains(&self) -> BTreeMap<TypeVarId, Option<Domain>> {
        (0..=self.node_count).map(|n| (TypeVarId(n), self.domain(TypeVarId(n)))).collect()
    }
}

/// Whether `s` maps the variables of `t` injectively onto variables.
fn renames(t: &TypeExpr, s: &Substitution) -> bool {
    let vars: BTreeSet<TypeVarId> = t.vars().into_iter().collect();
    let mut seen = BTreeSet::new();
    vars.into_iter().all(|v| match s.get(v) {
        None => seen.insert(v),
        Some(TypeExpr::Var(u)) => seen.insert(*u),
        Some(_) => false,
    })
}

/// Rebuild a store by replaying `events` on top of `initial`.
pub fn replay(initial: &ConstraintStore, events: &[TraceEvent]) -> ConstraintStore {
    let mut s = initial.clone();
    for e in events {
        for eff in &e.effects {
            s.apply_effect(eff);
        }
    }
    s
}
