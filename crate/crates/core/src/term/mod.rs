//! Named λ-terms and the operations every machine relies on.
//!
//! Terms are immutable and reference counted. Each node caches its size, so
//! `size` is constant time and machines can meter state sizes without
//! re-traversing codes.

mod parse;
mod print;
mod skeleton;
mod subst;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

pub use parse::{parse, ParseError};
pub use skeleton::{erase, is_subterm_mod_names, Skeleton, SubtermIndex};
pub use subst::{meta_subst, rename_copy, Substituted};

/// A variable: a display name plus a unique id.
///
/// Id 0 means "not yet uniquified"; the parser produces only such variables
/// and resolves binding lexically. After [`well_name`] every binder carries a
/// distinct non-zero id while free variables keep id 0.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    name: Arc<str>,
    id: u32,
}

impl VarId {
    pub fn named(name: &str) -> Self {
        VarId {
            name: Arc::from(name),
            id: 0,
        }
    }

    pub fn with_id(name: &str, id: u32) -> Self {
        VarId {
            name: Arc::from(name),
            id,
        }
    }

    fn renamed(&self, id: u32) -> Self {
        VarId {
            name: Arc::clone(&self.name),
            id,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unique_id(&self) -> u32 {
        self.id
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.id == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}#{}", self.name, self.id)
        }
    }
}

/// Execution-local supply of fresh variable ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NameSupply {
    next: u32,
}

impl NameSupply {
    pub fn starting_at(next: u32) -> Self {
        NameSupply { next: next.max(1) }
    }

    /// A supply whose ids do not collide with any id occurring in `t`.
    pub fn above(t: &Term) -> Self {
        NameSupply::starting_at(max_id(t) + 1)
    }

    pub fn fresh(&mut self, like: &VarId) -> VarId {
        let id = self.next;
        self.next += 1;
        like.renamed(id)
    }

    /// Next id to be handed out.
    pub fn peek(&self) -> u32 {
        self.next
    }
}

/// The three constructors of the λ-calculus.
#[derive(PartialEq, Eq, Hash)]
pub enum TermKind {
    Var(VarId),
    Lam(VarId, Term),
    App(Term, Term),
}

struct Node {
    size: usize,
    kind: TermKind,
}

/// A λ-term (or, when well-named, a machine code).
#[derive(Clone)]
pub struct Term(Arc<Node>);

impl Term {
    pub fn var(x: VarId) -> Term {
        Term(Arc::new(Node {
            size: 1,
            kind: TermKind::Var(x),
        }))
    }

    pub fn lam(x: VarId, body: Term) -> Term {
        Term(Arc::new(Node {
            size: 1 + body.size(),
            kind: TermKind::Lam(x, body),
        }))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term(Arc::new(Node {
            size: 1 + fun.size() + arg.size(),
            kind: TermKind::App(fun, arg),
        }))
    }

    /// `head a₁ … aₖ`, left-associated.
    pub fn apps<I: IntoIterator<Item = Term>>(head: Term, args: I) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    /// Number of symbols: |x| = 1, |λx.b| = 1 + |b|, |f a| = 1 + |f| + |a|.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn ptr_eq(a: &Term, b: &Term) -> bool {
        Arc::ptr_eq(&a.0, &b.0)
    }

    /// Address of the shared node, stable while any clone is alive.
    pub fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn is_var(&self) -> bool {
        matches!(self.kind(), TermKind::Var(_))
    }

    pub fn is_lam(&self) -> bool {
        matches!(self.kind(), TermKind::Lam(..))
    }

    /// Left-spine decomposition: the head (never an application) and the
    /// arguments in application order.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let TermKind::App(f, a) = cur.kind() {
            args.push(a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Term::ptr_eq(self, other) || (self.size() == other.size() && self.kind() == other.kind())
    }
}

impl Eq for Term {}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind().hash(state)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::print(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            TermKind::Var(x) => write!(f, "{x:?}"),
            TermKind::Lam(x, b) => write!(f, "(λ{x:?}. {b:?})"),
            TermKind::App(a, b) => write!(f, "({a:?} {b:?})"),
        }
    }
}

pub use print::print;

pub fn size(t: &Term) -> usize {
    t.size()
}

fn max_id(t: &Term) -> u32 {
    match t.kind() {
        TermKind::Var(x) => x.id,
        TermKind::Lam(x, b) => x.id.max(max_id(b)),
        TermKind::App(f, a) => max_id(f).max(max_id(a)),
    }
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_eq(t: &Term, s: &Term) -> bool {
    fn go(
        t: &Term,
        s: &Term,
        level: u32,
        lt: &mut HashMap<VarId, u32>,
        ls: &mut HashMap<VarId, u32>,
    ) -> bool {
        if t.size() != s.size() {
            return false;
        }
        match (t.kind(), s.kind()) {
            (TermKind::Var(x), TermKind::Var(y)) => match (lt.get(x), ls.get(y)) {
                (Some(a), Some(b)) => a == b,
                (None, None) => x == y,
                _ => false,
            },
            (TermKind::Lam(x, b), TermKind::Lam(y, c)) => {
                let ox = lt.insert(x.clone(), level);
                let oy = ls.insert(y.clone(), level);
                let r = go(b, c, level + 1, lt, ls);
                restore(lt, x, ox);
                restore(ls, y, oy);
                r
            }
            (TermKind::App(f, a), TermKind::App(g, b)) => {
                go(f, g, level, lt, ls) && go(a, b, level, lt, ls)
            }
            _ => false,
        }
    }
    go(t, s, 0, &mut HashMap::new(), &mut HashMap::new())
}

pub(crate) fn restore(map: &mut HashMap<VarId, u32>, x: &VarId, old: Option<u32>) {
    match old {
        Some(v) => {
            map.insert(x.clone(), v);
        }
        None => {
            map.remove(x);
        }
    }
}

/// Free variables, resolved lexically.
pub fn free_vars(t: &Term) -> HashSet<VarId> {
    fn go(t: &Term, bound: &mut HashMap<VarId, u32>, out: &mut HashSet<VarId>) {
        match t.kind() {
            TermKind::Var(x) => {
                if !bound.contains_key(x) {
                    out.insert(x.clone());
                }
            }
            TermKind::Lam(x, b) => {
                *bound.entry(x.clone()).or_insert(0) += 1;
                go(b, bound, out);
                let n = bound.get_mut(x).expect("binder was counted");
                *n -= 1;
                if *n == 0 {
                    bound.remove(x);
                }
            }
            TermKind::App(f, a) => {
                go(f, bound, out);
                go(a, bound, out);
            }
        }
    }
    let mut out = HashSet::new();
    go(t, &mut HashMap::new(), &mut out);
    out
}

pub fn is_closed(t: &Term) -> bool {
    free_vars(t).is_empty()
}

/// Number of free occurrences of `x` in `t`.
pub fn occurrences(t: &Term, x: &VarId) -> usize {
    match t.kind() {
        TermKind::Var(y) => usize::from(y == x),
        TermKind::Lam(y, b) => {
            if y == x {
                0
            } else {
                occurrences(b, x)
            }
        }
        TermKind::App(f, a) => occurrences(f, x) + occurrences(a, x),
    }
}

/// Whether `t` contains a β-redex anywhere (including under binders).
pub fn is_beta_normal(t: &Term) -> bool {
    match t.kind() {
        TermKind::Var(_) => true,
        TermKind::Lam(_, b) => is_beta_normal(b),
        TermKind::App(f, a) => !f.is_lam() && is_beta_normal(f) && is_beta_normal(a),
    }
}

/// A well-named code together with the fresh-name supply that continues
/// after its binder ids.
#[derive(Clone, Debug)]
pub struct WellNamed {
    pub code: Term,
    pub supply: NameSupply,
}

/// α-equivalent copy of `t` whose binders carry pairwise distinct ids
/// `1, 2, …` in pre-order. Free variables are left untouched.
pub fn well_name(t: &Term) -> WellNamed {
    let mut supply = NameSupply::starting_at(1);
    let code = rename_copy(t, &mut supply);
    WellNamed { code, supply }
}

/// The well-named predicate: binder ids are non-zero and pairwise distinct,
/// and every occurrence of a binder's variable lies inside that binder.
pub fn is_well_named(t: &Term) -> bool {
    let mut binders = HashSet::new();
    collect_binders(t, &mut binders).is_ok() && scoped_occurrences_ok(t, &binders)
}

/// Inserts every binder of `t` into `out`; fails on a repeated or
/// un-uniquified binder.
pub(crate) fn collect_binders(t: &Term, out: &mut HashSet<VarId>) -> Result<(), VarId> {
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t.kind() {
            TermKind::Var(_) => {}
            TermKind::Lam(x, b) => {
                if x.id == 0 || !out.insert(x.clone()) {
                    return Err(x.clone());
                }
                stack.push(b);
            }
            TermKind::App(f, a) => {
                stack.push(a);
                stack.push(f);
            }
        }
    }
    Ok(())
}

/// Every occurrence of a variable from `binders` must be under its binder.
pub(crate) fn scoped_occurrences_ok(t: &Term, binders: &HashSet<VarId>) -> bool {
    fn go(t: &Term, binders: &HashSet<VarId>, scope: &mut HashSet<VarId>) -> bool {
        match t.kind() {
            TermKind::Var(x) => !binders.contains(x) || scope.contains(x),
            TermKind::Lam(x, b) => {
                let fresh = scope.insert(x.clone());
                let r = go(b, binders, scope);
                if fresh {
                    scope.remove(x);
                }
                r
            }
            TermKind::App(f, a) => go(f, binders, scope) && go(a, binders, scope),
        }
    }
    go(t, binders, &mut HashSet::new())
}
