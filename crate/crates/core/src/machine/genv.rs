//! Global environments: an append-only list of `[x←t̄]` entries with a
//! constant-time index by variable.

use std::collections::{HashMap, HashSet};

use crate::term::{SubtermIndex, Term, TermKind, VarId};

use super::{AuditContext, Violation};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GlobalEnv {
    /// Oldest first; the newest entry is the last one.
    entries: Vec<(VarId, Term)>,
    index: HashMap<VarId, usize>,
    total_size: u64,
}

impl GlobalEnv {
    pub fn new() -> Self {
        GlobalEnv::default()
    }

    /// Builds an environment from entries given newest first.
    pub fn from_newest_first<I: IntoIterator<Item = (VarId, Term)>>(entries: I) -> Self {
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.reverse();
        let mut env = GlobalEnv::new();
        for (x, t) in entries {
            env.push(x, t);
        }
        env
    }

    pub fn push(&mut self, x: VarId, code: Term) {
        self.total_size += code.size() as u64;
        self.index.insert(x.clone(), self.entries.len());
        self.entries.push((x, code));
    }

    pub fn lookup(&self, x: &VarId) -> Option<&Term> {
        self.index.get(x).map(|&i| &self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of the sizes of all entry codes.
    pub fn total_size(&self) -> u64 {
        self.total_size
    }

    pub fn oldest_first(&self) -> &[(VarId, Term)] {
        &self.entries
    }

    /// Replaces the code of the `i`-th oldest entry. Only meant for
    /// fault-injection tests of the auditors.
    #[doc(hidden)]
    pub fn overwrite(&mut self, i: usize, code: Term) {
        self.total_size -= self.entries[i].1.size() as u64;
        self.total_size += code.size() as u64;
        self.entries[i].1 = code;
    }

    /// Applies the entries newest first as meta-substitutions to `t`.
    ///
    /// Entry `i` only sees entries older than itself, as in the sequential
    /// definition. Decoded entries are memoised, so the work is linear in
    /// the size of the result's shared representation.
    pub fn decode(&self, t: &Term) -> Term {
        let mut memo = vec![None; self.entries.len()];
        let mut bound = HashSet::new();
        self.resolve(t, self.entries.len(), &mut memo, &mut bound)
            .unwrap_or_else(|| t.clone())
    }

    fn entry(&self, i: usize, memo: &mut Vec<Option<Term>>) -> Term {
        if let Some(t) = &memo[i] {
            return t.clone();
        }
        let code = &self.entries[i].1;
        let t = self
            .resolve(code, i, memo, &mut HashSet::new())
            .unwrap_or_else(|| code.clone());
        memo[i] = Some(t.clone());
        t
    }

    fn resolve(
        &self,
        t: &Term,
        limit: usize,
        memo: &mut Vec<Option<Term>>,
        bound: &mut HashSet<VarId>,
    ) -> Option<Term> {
        match t.kind() {
            TermKind::Var(x) => {
                if bound.contains(x) {
                    return None;
                }
                let i = *self.index.get(x)?;
                (i < limit).then(|| self.entry(i, memo))
            }
            TermKind::Lam(x, b) => {
                let fresh = bound.insert(x.clone());
                let body = self.resolve(b, limit, memo, bound);
                if fresh {
                    bound.remove(x);
                }
                Some(Term::lam(x.clone(), body?))
            }
            TermKind::App(f, a) => {
                let nf = self.resolve(f, limit, memo, bound);
                let na = self.resolve(a, limit, memo, bound);
                if nf.is_none() && na.is_none() {
                    return None;
                }
                Some(Term::app(
                    nf.unwrap_or_else(|| f.clone()),
                    na.unwrap_or_else(|| a.clone()),
                ))
            }
        }
    }

    /// Size of [`GlobalEnv::decode`] without building it (saturating).
    pub fn decoded_size(&self, t: &Term) -> u64 {
        let mut memo = vec![None; self.entries.len()];
        self.size_of(t, self.entries.len(), &mut memo, &mut HashSet::new())
    }

    fn entry_size(&self, i: usize, memo: &mut Vec<Option<u64>>) -> u64 {
        if let Some(n) = memo[i] {
            return n;
        }
        let n = self.size_of(&self.entries[i].1.clone(), i, memo, &mut HashSet::new());
        memo[i] = Some(n);
        n
    }

    fn size_of(
        &self,
        t: &Term,
        limit: usize,
        memo: &mut Vec<Option<u64>>,
        bound: &mut HashSet<VarId>,
    ) -> u64 {
        match t.kind() {
            TermKind::Var(x) => {
                if bound.contains(x) {
                    return 1;
                }
                match self.index.get(x) {
                    Some(&i) if i < limit => self.entry_size(i, memo),
                    _ => 1,
                }
            }
            TermKind::Lam(x, b) => {
                let fresh = bound.insert(x.clone());
                let n = self.size_of(b, limit, memo, bound);
                if fresh {
                    bound.remove(x);
                }
                n.saturating_add(1)
            }
            TermKind::App(f, a) => {
                let nf = self.size_of(f, limit, memo, bound);
                nf.saturating_add(self.size_of(a, limit, memo, bound))
                    .saturating_add(1)
            }
        }
    }

    /// Environment clause of the name invariant: for every entry `[x←s̄]`,
    /// `x` occurs neither in `s̄` nor in any older entry, and no variable is
    /// bound twice.
    pub fn audit_freshness(&self, ctx: &AuditContext, out: &mut Vec<Violation>) {
        let mut seen = HashSet::new();
        let mut bound = HashSet::new();
        for (i, (x, code)) in self.entries.iter().enumerate() {
            let mut own = HashSet::new();
            all_vars(code, &mut own);
            if own.contains(x) || seen.contains(x) || !bound.insert(x) {
                out.push(ctx.violation(
                    "name invariant (environment)",
                    format!("entry {i} [{x:?}←{code:?}]"),
                ));
            }
            seen.extend(own);
        }
    }

    /// Whether every entry code is a subterm of the initial term up to names.
    pub fn audit_subterms(&self, ctx: &AuditContext, out: &mut Vec<Violation>) {
        audit_codes_subterm(
            &ctx.initial,
            self.entries
                .iter()
                .enumerate()
                .map(|(i, (x, c))| (format!("environment entry {i} [{x:?}←…]"), c)),
            ctx,
            out,
        );
    }
}

pub(crate) fn audit_codes_subterm<'a, I>(index: &SubtermIndex, codes: I, ctx: &AuditContext, out: &mut Vec<Violation>)
where
    I: IntoIterator<Item = (String, &'a Term)>,
{
    for (what, code) in codes {
        if !index.contains(code) {
            out.push(ctx.violation("subterm invariant", format!("{what}: {code:?}")));
        }
    }
}

/// Every variable occurring in `t`, binders included.
pub(crate) fn all_vars(t: &Term, out: &mut HashSet<VarId>) {
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t.kind() {
            TermKind::Var(x) => {
                out.insert(x.clone());
            }
            TermKind::Lam(x, b) => {
                out.insert(x.clone());
                stack.push(b);
            }
            TermKind::App(f, a) => {
                stack.push(a);
                stack.push(f);
            }
        }
    }
}

/// Abstraction clause of the name invariant over a set of codes: a
/// variable bound anywhere may only occur under its own binder.
pub(crate) fn audit_scoping<'a, I>(codes: I, ctx: &AuditContext, out: &mut Vec<Violation>)
where
    I: IntoIterator<Item = (String, &'a Term)> + Clone,
{
    let mut binders = HashSet::new();
    for (_, c) in codes.clone() {
        collect_all_binders(c, &mut binders);
    }
    for (what, c) in codes {
        if !crate::term::scoped_occurrences_ok(c, &binders) {
            out.push(ctx.violation("name invariant (abstractions)", format!("{what}: {c:?}")));
        }
    }
}

fn collect_all_binders(t: &Term, out: &mut HashSet<VarId>) {
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t.kind() {
            TermKind::Var(_) => {}
            TermKind::Lam(x, b) => {
                out.insert(x.clone());
                stack.push(b);
            }
            TermKind::App(f, a) => {
                stack.push(a);
                stack.push(f);
            }
        }
    }
}
