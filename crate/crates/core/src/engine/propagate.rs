use serde::Serialize;

use super::constraint::{Constraint, Origin, Posted, Source};
use super::registry::{AtomicRule, Rule};
use super::store::ConstraintStore;
use crate::typelang::{Atomic, Domain, ExtDir, TypeExpr, TypeVarId};

/// Largest candidate product an atomic relation will enumerate.
const MAX_RELATION_PRODUCT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Quiescent,
    Conflicted,
    BudgetExceeded,
}

#[derive(Default)]
struct Fired {
    produced: Vec<Constraint>,
    discharge: bool,
}

impl Fired {
    fn wait() -> Self {
        Fired::default()
    }

    fn done(produced: Vec<Constraint>) -> Self {
        Fired { produced, discharge: true }
    }
}

impl ConstraintStore {
    /// Run until no constraint can change the store, a step budget runs out,
    /// or nothing is left to do.
    pub fn propagate(&mut self) -> Status {
        loop {
            if !self.drain() {
                break;
            }
            if !self.dirty {
                break;
            }
            self.dirty = false;
            let ids: Vec<u32> = self.active.keys().copied().collect();
            for id in ids {
                if self.active.contains_key(&id) {
                    self.fire(id);
                    if !self.drain() {
                        break;
                    }
                }
            }
            if self.budget_exceeded || !self.dirty {
                break;
            }
        }
        if !self.pending_effects.is_empty() {
            self.emit("settle".into(), vec![], vec![]);
        }
        self.status()
    }

    pub fn status(&self) -> Status {
        if self.budget_exceeded {
            Status::BudgetExceeded
        } else if self.is_conflicted() {
            Status::Conflicted
        } else {
            Status::Quiescent
        }
    }

    /// Process the queue; false once the step budget is spent.
    fn drain(&mut self) -> bool {
        while let Some(p) = self.queue.pop_front() {
            self.steps += 1;
            if self.steps > self.step_budget {
                self.budget_exceeded = true;
                self.queue.clear();
                return false;
            }
            self.process(p);
        }
        !self.budget_exceeded
    }

    fn enqueue(&mut self, produced: &[Constraint], origin: &Origin) {
        for c in produced {
            let src = if origin.source == Source::Labeling { Source::Labeling } else { Source::Rewrite };
            self.queue.push_back(Posted::new(c.clone(), Origin::new(src, origin.span.clone())));
        }
    }

    fn process(&mut self, p: Posted) {
        match &p.constraint {
            Constraint::Dom { .. } | Constraint::Eq { .. } => {
                let derived = self.apply_basic(&p);
                if !self.pending_effects.is_empty() || !derived.is_empty() {
                    self.emit(p.constraint.rule(), vec![p.constraint.clone()], derived.clone());
                    self.enqueue(&derived, &p.origin);
                }
            }
            _ => {
                let id = self.activate(p);
                self.fire(id);
            }
        }
    }

    fn fire(&mut self, id: u32) {
        let Some(p) = self.active.get(&id).cloned() else { return };
        if p.constraint.keys().into_iter().any(|k| self.is_empty_key(k)) {
            return;
        }
        let fired = match &p.constraint {
            Constraint::Apply { func, args, res } => self.fire_apply(*func, args, *res),
            Constraint::Rel { name, args } => match self.registry.get(name).cloned() {
                Some(Rule::Atomic(rule)) => self.fire_atomic(&rule, args),
                Some(Rule::Branch) => self.fire_branch(args),
                None => Fired::wait(),
            },
            Constraint::ListExt { dir, args, rels } => self.fire_listext(*dir, args, rels),
            Constraint::Dom { .. } | Constraint::Eq { .. } => Fired::done(vec![]),
        };
        if fired.produced.is_empty() && !fired.discharge {
            return;
        }
        let mut consumed = vec![];
        if fired.discharge {
            self.retire(id);
            consumed.push(p.constraint.clone());
        }
        self.emit(p.constraint.rule(), consumed, fired.produced.clone());
        self.enqueue(&fired.produced, &p.origin);
    }

    fn keep_effective(&self, cs: Vec<Constraint>) -> Vec<Constraint> {
        cs.into_iter().filter(|c| self.would_change(c, 0)).collect()
    }

    fn all_singleton(&self, keys: &[TypeVarId]) -> bool {
        keys.iter().all(|k| self.domain(*k).is_some_and(|d| d.is_singleton()))
    }

    fn fire_apply(&mut self, func: TypeVarId, args: &[TypeVarId], res: TypeVarId) -> Fired {
        let pack = match args {
            [] => TypeExpr::Tuple(vec![]),
            [a] => TypeExpr::Var(*a),
            _ => TypeExpr::Tuple(args.iter().map(|a| TypeExpr::Var(*a)).collect()),
        };
        let pattern = TypeExpr::func(pack, TypeExpr::Var(res));
        let post = Constraint::dom(func, Domain::single(pattern.clone()));
        match self.domain(func) {
            None => Fired { produced: vec![post], discharge: false },
            Some(d) => {
                if d.is_singleton() && d.exprs()[0] == self.resolve(&pattern) {
                    return Fired::done(vec![]);
                }
                let produced = self.keep_effective(vec![post]);
                let mut keys = vec![func, res];
                keys.extend_from_slice(args);
                let discharge = produced.is_empty() && self.all_singleton(&keys);
                Fired { produced, discharge }
            }
        }
    }

    fn fire_branch(&mut self, args: &[TypeVarId]) -> Fired {
        let [then, els, res] = args else { return Fired::wait() };
        let (Some(t), Some(e)) = (self.domain(*then), self.domain(*els)) else { return Fired::wait() };
        let union = Domain::distinct(t.iter().chain(e.iter()).cloned());
        let produced = self.keep_effective(vec![Constraint::dom(*res, union)]);
        let discharge = produced.is_empty() && self.all_singleton(args);
        Fired { produced, discharge }
    }

    fn fire_atomic(&mut self, rule: &AtomicRule, args: &[TypeVarId]) -> Fired {
        let n = args.len();
        if n != rule.admissible.len() {
            return Fired::wait();
        }
        let doms: Vec<Option<Domain>> = args.iter().map(|k| self.domain(*k)).collect();

        if rule.spec.int_equate && n == 3 {
            let int = Domain::single(TypeExpr::Atomic(Atomic::Int));
            let int_rank = Atomic::Int.numeric_rank();
            for (i, j) in [(0, 1), (1, 0)] {
                if doms[i].as_ref() != Some(&int) {
                    continue;
                }
                let Some(other) = &doms[j] else { continue };
                let wide =
                    other.len() > 1 && other.iter().all(|m| m.as_atomic().and_then(|a| a.numeric_rank()) >= int_rank);
                if wide {
                    return Fired::done(self.keep_effective(vec![Constraint::eq(args[j], args[2])]));
                }
            }
        }

        let mut cands: Vec<Vec<Atomic>> = Vec::with_capacity(n);
        let mut free = vec![false; n];
        for (i, d) in doms.iter().enumerate() {
            match d {
                Some(d) if !d.iter().any(|m| matches!(m, TypeExpr::Var(_))) => {
                    cands.push(d.iter().filter_map(|m| m.as_atomic()).collect());
                }
                _ => {
                    free[i] = true;
                    cands.push(rule.admissible[i].clone());
                }
            }
        }
        let product = cands.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
        match product {
            Some(p) if p <= MAX_RELATION_PRODUCT => {}
            _ => return Fired::wait(),
        }

        let mut supported: Vec<Vec<Atomic>> = vec![vec![]; n];
        let mut all_hold = true;
        let mut row = vec![Atomic::Int; n];
        for_each_combo(&cands, &mut row, 0, &mut |row| {
            if rule.holds(row) {
                for (i, a) in row.iter().enumerate() {
                    if !supported[i].contains(a) {
                        supported[i].push(*a);
                    }
                }
            } else {
                all_hold = false;
            }
        });

        if supported[n - 1].is_empty() {
            return Fired::done(vec![Constraint::dom(args[n - 1], Domain::empty())]);
        }

        let mut produced = Vec::new();
        for i in 0..n {
            let reference = if free[i] { &rule.admissible[i] } else { &cands[i] };
            let same = reference.len() == supported[i].len() && reference.iter().all(|a| supported[i].contains(a));
            if !same {
                produced.push(Constraint::dom(args[i], order(&supported[i], reference)));
            }
        }
        let mut produced = self.keep_effective(produced);

        if supported.iter().all(|s| s.len() == 1) {
            let r = Constraint::dom(args[n - 1], Domain::single(TypeExpr::Atomic(supported[n - 1][0])));
            if !produced.contains(&r) {
                produced.push(r);
            }
            return Fired::done(produced);
        }
        let entailed = rule.constant_result() && all_hold && !free.iter().take(n - 1).any(|f| *f);
        Fired { produced, discharge: entailed }
    }

    fn fire_listext(&mut self, dir: ExtDir, args: &[TypeVarId], rels: &[String]) -> Fired {
        let n = args.len() - 1;
        let res = args[n];
        let doms: Vec<Option<Domain>> = args.iter().map(|k| self.domain(*k)).collect();
        let atomic_only = |d: &Option<Domain>| d.as_ref().is_some_and(|d| !d.is_empty() && d.all_atomic());
        let ext: Vec<usize> = (0..n).filter(|i| dir.extends(*i, n)).collect();

        if ext.iter().all(|i| atomic_only(&doms[*i])) || atomic_only(&doms[n]) {
            let produced = rels.iter().map(|r| Constraint::Rel { name: r.clone(), args: args.to_vec() }).collect();
            return Fired::done(produced);
        }

        let mut shapes: Vec<Option<TypeExpr>> = vec![None; n];
        for &i in &ext {
            if atomic_only(&doms[i]) {
                continue;
            }
            match &doms[i] {
                Some(d) if d.is_singleton() && d.exprs()[0].is_list_shaped() => {
                    let shallow = self.shallow_domain(args[i]).filter(|s| s.is_singleton());
                    shapes[i] = Some(match shallow {
                        Some(s) if s.exprs()[0].is_list_shaped() => s.exprs()[0].clone(),
                        _ => d.exprs()[0].clone(),
                    });
                }
                Some(d) if d.is_singleton() && matches!(d.exprs()[0], TypeExpr::Dict(..) | TypeExpr::Func(..)) => {
                    return Fired::done(vec![Constraint::dom(res, Domain::empty())]);
                }
                _ => return Fired::wait(),
            }
        }

        if shapes.iter().flatten().any(|s| matches!(s, TypeExpr::HList)) {
            return Fired::done(vec![Constraint::dom(res, Domain::single(TypeExpr::HList))]);
        }
        let widths: Vec<usize> = shapes
            .iter()
            .flatten()
            .filter_map(|s| match s {
                TypeExpr::Tuple(items) => Some(items.len()),
                TypeExpr::STuple(names) => Some(names.len()),
                _ => None,
            })
            .collect();
        if widths.iter().any(|w| *w != widths[0]) {
            return Fired::done(vec![Constraint::dom(res, Domain::empty())]);
        }

        let positions = widths.first().copied();
        let mut exts = Vec::new();
        let mut binds = Vec::new();
        let mut outs = Vec::new();
        for p in 0..positions.unwrap_or(1) {
            let mut elems = Vec::with_capacity(n + 1);
            for i in 0..n {
                let elem = match &shapes[i] {
                    None => args[i],
                    Some(TypeExpr::List(e)) => self.elem_key(e, &mut binds),
                    Some(TypeExpr::Tuple(items)) => self.elem_key(&items[p], &mut binds),
                    Some(_) => self.elem_key(&TypeExpr::Atomic(Atomic::Symbol), &mut binds),
                };
                elems.push(elem);
            }
            let z = self.fresh();
            elems.push(z);
            outs.push(TypeExpr::Var(z));
            exts.push(Constraint::ListExt { dir, args: elems, rels: rels.to_vec() });
        }
        let shape = match positions {
            Some(_) => TypeExpr::Tuple(outs),
            None => TypeExpr::list(outs.pop().expect("one position")),
        };
        let mut produced = exts;
        produced.extend(binds);
        produced.push(Constraint::dom(res, Domain::single(shape)));
        Fired::done(produced)
    }

    /// A key standing for `t`: the variable itself, or a fresh one bound to it.
    fn elem_key(&mut self, t: &TypeExpr, produced: &mut Vec<Constraint>) -> TypeVarId {
        if let TypeExpr::Var(v) = t {
            return *v;
        }
        let f = self.fresh();
        produced.push(Constraint::dom(f, Domain::single(t.clone())));
        f
    }
}

/// `set` ordered like `reference`.
fn order(set: &[Atomic], reference: &[Atomic]) -> Domain {
    Domain::atomics(reference.iter().copied().filter(|a| set.contains(a)))
}

fn for_each_combo(cands: &[Vec<Atomic>], row: &mut Vec<Atomic>, i: usize, f: &mut impl FnMut(&[Atomic])) {
    if i == cands.len() {
        f(row);
        return;
    }
    for a in &cands[i] {
        row[i] = *a;
        for_each_combo(cands, row, i + 1, f);
    }
}
