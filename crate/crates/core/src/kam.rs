//! The Krivine Abstract Machine: closures with local environments.
//!
//! ```text
//! t̄ s̄    | e | π       →@l   t̄ | e           | (s̄, e) :: π
//! λx. t̄  | e | c :: π  →β    t̄ | [x←c] :: e  | π
//! x      | e | π       →var  t̄ | e′          | π        if e(x) = (t̄, e′)
//! ```
//!
//! Local environments come in two backends that differ only in what their
//! operations cost: a shared linked list (constant-time extension and
//! sharing, lookup linear in depth) and an array indexed by variable number
//! that is copied whenever a closure is pushed (constant-time lookup).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::marker::PhantomData;
use std::rc::Rc;

use crate::machine::{
    AuditContext, Kind, Machine, MachineId, StateMeasure, Step, TransitionLabel, Violation,
};
use crate::term::{well_name, Term, TermKind, VarId};

/// A local environment representation.
pub trait EnvBackend: Clone + fmt::Debug + PartialEq + Default {
    const ID: MachineId;
    type Env: Clone + fmt::Debug + PartialEq;

    /// The empty environment for a code with `binders` binders numbered
    /// `1..=binders`.
    fn empty(binders: usize) -> Self::Env;

    /// Number of bindings, `|e|`.
    fn len(env: &Self::Env) -> usize;

    /// `[x←c] :: env` and the cost of building it.
    fn extend(env: Self::Env, x: &VarId, c: Closure<Self>) -> (Self::Env, u64);

    /// The binding of `x` and the number of elementary steps spent.
    fn lookup<'a>(env: &'a Self::Env, x: &VarId) -> (Option<&'a Closure<Self>>, u64);

    /// The environment to store in a pushed closure and the cost of
    /// producing it.
    fn share(env: &Self::Env) -> (Self::Env, u64);

    /// Bindings, most recent first.
    fn bindings(env: &Self::Env) -> Vec<(VarId, Closure<Self>)>;

    /// Identity of the environment's representation, for memoising.
    fn addr(env: &Self::Env) -> usize;
}

pub struct Closure<B: EnvBackend> {
    pub code: Term,
    pub env: B::Env,
}

impl<B: EnvBackend> Clone for Closure<B> {
    fn clone(&self) -> Self {
        Closure {
            code: self.code.clone(),
            env: self.env.clone(),
        }
    }
}

impl<B: EnvBackend> PartialEq for Closure<B> {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code && same_env::<B>(&self.env, &other.env)
    }
}

/// Environments are compared by address first: they form a DAG that a
/// plain structural walk would unfold.
fn same_env<B: EnvBackend>(a: &B::Env, b: &B::Env) -> bool {
    B::addr(a) == B::addr(b) || a == b
}

impl<B: EnvBackend> fmt::Debug for Closure<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.code, self.env)
    }
}

impl<B: EnvBackend> Closure<B> {
    pub fn new(code: Term, env: B::Env) -> Self {
        Closure { code, env }
    }

    /// `code` plus one symbol per binding, recursively.
    fn weight(&self) -> u64 {
        self.code.size() as u64 + B::len(&self.env) as u64
    }
}

/// Linked list with structurally shared tails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SharedList;

pub struct ListNode {
    var: VarId,
    clos: Closure<SharedList>,
    next: ListEnv,
    len: usize,
}

pub type ListEnv = Option<Rc<ListNode>>;

impl fmt::Debug for ListNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        let mut cur = Some(self);
        while let Some(n) = cur {
            list.entry(&format_args!("{:?}←{:?}", n.var, n.clos));
            cur = n.next.as_deref();
        }
        list.finish()
    }
}

impl PartialEq for ListNode {
    fn eq(&self, other: &Self) -> bool {
        let (mut a, mut b) = (Some(self), Some(other));
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if std::ptr::eq(x, y) {
                        return true;
                    }
                    if x.len != y.len || x.var != y.var || x.clos != y.clos {
                        return false;
                    }
                    a = x.next.as_deref();
                    b = y.next.as_deref();
                }
                _ => return false,
            }
        }
    }
}

impl Drop for ListNode {
    fn drop(&mut self) {
        // unlink iteratively so long lists do not overflow the stack
        let mut next = self.next.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => next = node.next.take(),
                Err(_) => break,
            }
        }
    }
}

impl EnvBackend for SharedList {
    const ID: MachineId = MachineId::KamList;
    type Env = ListEnv;

    fn empty(_binders: usize) -> ListEnv {
        None
    }

    fn len(env: &ListEnv) -> usize {
        env.as_ref().map_or(0, |n| n.len)
    }

    fn extend(env: ListEnv, x: &VarId, c: Closure<Self>) -> (ListEnv, u64) {
        let len = Self::len(&env) + 1;
        let node = ListNode {
            var: x.clone(),
            clos: c,
            next: env,
            len,
        };
        (Some(Rc::new(node)), 1)
    }

    fn lookup<'a>(env: &'a ListEnv, x: &VarId) -> (Option<&'a Closure<Self>>, u64) {
        let mut steps = 0;
        let mut cur = env.as_deref();
        while let Some(n) = cur {
            steps += 1;
            if n.var == *x {
                return (Some(&n.clos), steps);
            }
            cur = n.next.as_deref();
        }
        (None, steps)
    }

    fn share(env: &ListEnv) -> (ListEnv, u64) {
        (env.clone(), 1)
    }

    fn bindings(env: &ListEnv) -> Vec<(VarId, Closure<Self>)> {
        let mut out = Vec::new();
        let mut cur = env.as_deref();
        while let Some(n) = cur {
            out.push((n.var.clone(), n.clos.clone()));
            cur = n.next.as_deref();
        }
        out
    }

    fn addr(env: &ListEnv) -> usize {
        env.as_ref().map_or(0, |n| Rc::as_ptr(n) as usize)
    }
}

/// Array with one slot per binder of the initial code, copied on push.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CopiedArray;

#[derive(Clone, Debug, PartialEq)]
pub struct Slots {
    /// Slot `i` holds the binding of the variable numbered `i + 1`.
    slots: Vec<Option<(VarId, Closure<CopiedArray>)>>,
    bound: usize,
    /// Variables in binding order, most recent last.
    order: Vec<usize>,
}

pub type ArrayEnv = Rc<Slots>;

fn slot_of(x: &VarId, len: usize) -> Option<usize> {
    let id = x.unique_id() as usize;
    (1..=len).contains(&id).then(|| id - 1)
}

impl EnvBackend for CopiedArray {
    const ID: MachineId = MachineId::KamArray;
    type Env = ArrayEnv;

    fn empty(binders: usize) -> ArrayEnv {
        Rc::new(Slots {
            slots: vec![None; binders],
            bound: 0,
            order: Vec::new(),
        })
    }

    fn len(env: &ArrayEnv) -> usize {
        env.bound
    }

    /// In place when the array is not shared; an array reached through a
    /// variable lookup is shared with its binding and is copied first.
    fn extend(mut env: ArrayEnv, x: &VarId, c: Closure<Self>) -> (ArrayEnv, u64) {
        let cost = if Rc::strong_count(&env) == 1 {
            1
        } else {
            env.slots.len().max(1) as u64
        };
        let slots = Rc::make_mut(&mut env);
        let i = slot_of(x, slots.slots.len()).expect("binder numbered at compile time");
        if slots.slots[i].is_none() {
            slots.bound += 1;
        } else {
            slots.order.retain(|&j| j != i);
        }
        slots.slots[i] = Some((x.clone(), c));
        slots.order.push(i);
        (env, cost)
    }

    fn lookup<'a>(env: &'a ArrayEnv, x: &VarId) -> (Option<&'a Closure<Self>>, u64) {
        let found = slot_of(x, env.slots.len())
            .and_then(|i| env.slots[i].as_ref())
            .filter(|(y, _)| y == x)
            .map(|(_, c)| c);
        (found, 1)
    }

    fn share(env: &ArrayEnv) -> (ArrayEnv, u64) {
        let copy = Rc::new(Slots::clone(env));
        (copy, env.slots.len().max(1) as u64)
    }

    fn bindings(env: &ArrayEnv) -> Vec<(VarId, Closure<Self>)> {
        env.order
            .iter()
            .rev()
            .filter_map(|&i| env.slots[i].clone())
            .collect()
    }

    fn addr(env: &ArrayEnv) -> usize {
        Rc::as_ptr(env) as usize
    }
}

pub struct KamState<B: EnvBackend> {
    pub code: Term,
    pub env: B::Env,
    /// Top of the stack is the last element.
    pub stack: Vec<Closure<B>>,
    stack_weight: u64,
}

impl<B: EnvBackend> Clone for KamState<B> {
    fn clone(&self) -> Self {
        KamState {
            code: self.code.clone(),
            env: self.env.clone(),
            stack: self.stack.clone(),
            stack_weight: self.stack_weight,
        }
    }
}

impl<B: EnvBackend> PartialEq for KamState<B> {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code && same_env::<B>(&self.env, &other.env) && self.stack == other.stack
    }
}

impl<B: EnvBackend> fmt::Debug for KamState<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KamState")
            .field("code", &self.code)
            .field("env", &self.env)
            .field("stack", &self.stack)
            .finish()
    }
}

impl<B: EnvBackend> KamState<B> {
    pub fn new(code: Term, env: B::Env, stack_top_first: Vec<Closure<B>>) -> Self {
        let mut stack = stack_top_first;
        stack.reverse();
        let stack_weight = stack.iter().map(Closure::weight).sum();
        KamState {
            code,
            env,
            stack,
            stack_weight,
        }
    }

    /// The current code and environment as a closure.
    pub fn current(&self) -> Closure<B> {
        Closure::new(self.code.clone(), self.env.clone())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Kam<B: EnvBackend> {
    backend: PhantomData<B>,
}

impl<B: EnvBackend> Kam<B> {
    pub fn new() -> Self {
        Kam {
            backend: PhantomData,
        }
    }
}

/// Number of binders of a well-named code, i.e. the array length.
fn binder_count(t: &Term) -> usize {
    let mut n = 0;
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t.kind() {
            TermKind::Var(_) => {}
            TermKind::Lam(_, b) => {
                n += 1;
                stack.push(b);
            }
            TermKind::App(f, a) => {
                stack.push(a);
                stack.push(f);
            }
        }
    }
    n
}

/// Decodes closures by substituting decoded bindings, memoised on
/// `(code, environment)` identity.
struct Decoder<B: EnvBackend> {
    terms: HashMap<(usize, usize), Term>,
    sizes: HashMap<(usize, usize), u64>,
    backend: PhantomData<B>,
}

impl<B: EnvBackend> Decoder<B> {
    fn new() -> Self {
        Decoder {
            terms: HashMap::new(),
            sizes: HashMap::new(),
            backend: PhantomData,
        }
    }

    fn closure(&mut self, c: &Closure<B>) -> Term {
        let key = (c.code.addr(), B::addr(&c.env));
        if let Some(t) = self.terms.get(&key) {
            return t.clone();
        }
        let t = self
            .resolve(&c.code, &c.env, &mut HashSet::new())
            .unwrap_or_else(|| c.code.clone());
        self.terms.insert(key, t.clone());
        t
    }

    fn resolve(&mut self, t: &Term, env: &B::Env, bound: &mut HashSet<VarId>) -> Option<Term> {
        match t.kind() {
            TermKind::Var(x) => {
                if bound.contains(x) {
                    return None;
                }
                let c = B::lookup(env, x).0?.clone();
                Some(self.closure(&c))
            }
            TermKind::Lam(x, b) => {
                let fresh = bound.insert(x.clone());
                let body = self.resolve(b, env, bound);
                if fresh {
                    bound.remove(x);
                }
                Some(Term::lam(x.clone(), body?))
            }
            TermKind::App(f, a) => {
                let nf = self.resolve(f, env, bound);
                let na = self.resolve(a, env, bound);
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

    fn closure_size(&mut self, c: &Closure<B>) -> u64 {
        let key = (c.code.addr(), B::addr(&c.env));
        if let Some(&n) = self.sizes.get(&key) {
            return n;
        }
        let n = self.size_of(&c.code, &c.env, &mut HashSet::new());
        self.sizes.insert(key, n);
        n
    }

    fn size_of(&mut self, t: &Term, env: &B::Env, bound: &mut HashSet<VarId>) -> u64 {
        match t.kind() {
            TermKind::Var(x) => {
                if bound.contains(x) {
                    return 1;
                }
                match B::lookup(env, x).0 {
                    Some(c) => {
                        let c = c.clone();
                        self.closure_size(&c)
                    }
                    None => 1,
                }
            }
            TermKind::Lam(x, b) => {
                let fresh = bound.insert(x.clone());
                let n = self.size_of(b, env, bound);
                if fresh {
                    bound.remove(x);
                }
                n.saturating_add(1)
            }
            TermKind::App(f, a) => {
                let nf = self.size_of(f, env, bound);
                nf.saturating_add(self.size_of(a, env, bound))
                    .saturating_add(1)
            }
        }
    }
}

impl<B: EnvBackend> Machine for Kam<B> {
    type State = KamState<B>;

    fn id(&self) -> MachineId {
        B::ID
    }

    fn compile(&self, t: &Term) -> KamState<B> {
        let code = well_name(t).code;
        let env = B::empty(binder_count(&code));
        KamState::new(code, env, Vec::new())
    }

    fn step(&self, mut s: KamState<B>) -> Step<KamState<B>> {
        match s.code.kind() {
            TermKind::App(f, a) => {
                let (f, a) = (f.clone(), a.clone());
                let (env, cost) = B::share(&s.env);
                let c = Closure::new(a, env);
                s.stack_weight += c.weight();
                s.stack.push(c);
                s.code = f;
                Step::Next(TransitionLabel::new(Kind::Search, cost), s)
            }
            TermKind::Lam(x, body) if !s.stack.is_empty() => {
                let (x, body) = (x.clone(), body.clone());
                let c = s.stack.pop().expect("non-empty stack");
                s.stack_weight -= c.weight();
                let (env, cost) = B::extend(s.env, &x, c);
                s.env = env;
                s.code = body;
                Step::Next(TransitionLabel::new(Kind::Beta, cost), s)
            }
            TermKind::Var(x) => {
                let (found, cost) = B::lookup(&s.env, x);
                match found.cloned() {
                    Some(c) => {
                        s.code = c.code;
                        s.env = c.env;
                        Step::Next(TransitionLabel::new(Kind::VarSub, cost), s)
                    }
                    None => Step::Final(s),
                }
            }
            TermKind::Lam(..) => Step::Final(s),
        }
    }

    fn is_final(&self, s: &KamState<B>) -> bool {
        match s.code.kind() {
            TermKind::App(..) => false,
            TermKind::Lam(..) => s.stack.is_empty(),
            TermKind::Var(x) => B::lookup(&s.env, x).0.is_none(),
        }
    }

    fn decoded_size(&self, s: &KamState<B>) -> u64 {
        let mut d = Decoder::<B>::new();
        let mut n = d.closure_size(&s.current());
        for c in &s.stack {
            n = n.saturating_add(d.closure_size(c)).saturating_add(1);
        }
        n
    }

    fn decode_unchecked(&self, s: &KamState<B>) -> Term {
        let mut d = Decoder::<B>::new();
        let head = d.closure(&s.current());
        let args: Vec<Term> = s.stack.iter().rev().map(|c| d.closure(c)).collect();
        Term::apps(head, args)
    }

    fn measure(&self, s: &KamState<B>) -> StateMeasure {
        let env_len = B::len(&s.env) as u64;
        StateMeasure {
            size: s.code.size() as u64 + env_len + s.stack_weight,
            code_size: s.code.size() as u64,
            env_len,
            stack_len: s.stack.len() as u64,
        }
    }

    fn audit(&self, ctx: &AuditContext, s: &KamState<B>, out: &mut Vec<Violation>) {
        let bound = ctx.t0_size();
        let envs = std::iter::once(("current environment".to_string(), &s.env)).chain(
            s.stack
                .iter()
                .rev()
                .enumerate()
                .map(|(i, c)| (format!("environment of stack closure {i}"), &c.env)),
        );
        for (what, env) in envs {
            if B::len(env) > bound {
                out.push(ctx.violation(
                    "local environment length",
                    format!("{what}: {} entries for an initial term of size {bound}", B::len(env)),
                ));
            }
        }
        let bindings = B::bindings(&s.env);
        let mut seen = HashSet::new();
        for (x, _) in &bindings {
            if !seen.insert(x.clone()) {
                out.push(ctx.violation("distinct local entries", format!("{x:?} bound twice")));
            }
        }
        for x in crate::term::free_vars(&s.code) {
            if x.unique_id() != 0 && B::lookup(&s.env, &x).0.is_none() {
                out.push(ctx.violation(
                    "closed closure",
                    format!("{x:?} free in the current code but unbound"),
                ));
            }
        }
    }
}
