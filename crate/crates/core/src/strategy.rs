//! Machine-free reference reducers: the weak head strategy (in its
//! inductive, synthetic, and evaluation-context presentations) and a
//! rightmost-innermost normaliser.

use crate::term::{meta_subst, NameSupply, Term, TermKind};

/// An evaluation context `E ::= ⟨·⟩ | E u`, stored as its arguments
/// innermost first: `⟨·⟩ a₁ … aₖ` is `[a₁, …, aₖ]`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EvalContext {
    pub args: Vec<Term>,
}

impl EvalContext {
    pub fn plug(&self, t: Term) -> Term {
        Term::apps(t, self.args.iter().cloned())
    }

    pub fn is_empty(&self) -> bool {
        self.args.is_empty()
    }
}

/// One step of a path from the root of a term to a subterm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Fun,
    Arg,
    Body,
}

/// Position of a contracted redex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RedexPos(pub Vec<Dir>);

#[derive(Clone, Debug)]
pub struct DerivationStep {
    pub pos: RedexPos,
    /// The term after the step, kept only below the derivation's store cap.
    pub term: Option<Term>,
    pub size: usize,
}

/// A possibly empty sequence of β-steps.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub initial: Term,
    pub steps: Vec<DerivationStep>,
    pub last: Term,
}

impl Derivation {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// The last term is normal for the strategy.
    Normal,
    /// Fuel ran out; the derivation is a prefix.
    FuelExhausted,
    /// A term outgrew the size limit; the derivation is a prefix.
    SizeLimit,
}

#[derive(Clone, Debug)]
pub struct Normalization {
    pub derivation: Derivation,
    pub outcome: Outcome,
}

impl Normalization {
    pub fn normal_form(&self) -> Option<&Term> {
        (self.outcome == Outcome::Normal).then_some(&self.derivation.last)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReduceOptions {
    pub fuel: u64,
    /// Intermediate terms above this size are recorded by size only.
    pub store_cap: usize,
    /// Reduction stops with [`Outcome::SizeLimit`] above this size.
    pub size_limit: usize,
}

impl ReduceOptions {
    pub fn with_fuel(fuel: u64) -> Self {
        ReduceOptions {
            fuel,
            ..ReduceOptions::default()
        }
    }
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            fuel: 10_000,
            store_cap: 1_000_000,
            size_limit: 1 << 24,
        }
    }
}

/// Splits `t` along its left spine into the head and its evaluation context.
pub fn wh_split(t: &Term) -> (Term, EvalContext) {
    let (head, args) = t.spine();
    (
        head.clone(),
        EvalContext {
            args: args.into_iter().cloned().collect(),
        },
    )
}

#[derive(Clone, Debug)]
pub enum WhStep {
    Reduced(Term),
    NormalForm,
}

/// One weak head step via the synthetic rule
/// `(λx.t) s u₁…uₖ → t{x←s} u₁…uₖ`.
pub fn wh_step(t: &Term) -> WhStep {
    wh_step_with(t, &mut NameSupply::above(t))
}

pub(crate) fn wh_step_with(t: &Term, supply: &mut NameSupply) -> WhStep {
    let (head, mut ctx) = wh_split(t);
    match head.kind() {
        TermKind::Lam(x, body) if !ctx.is_empty() => {
            let arg = ctx.args.remove(0);
            let r = meta_subst(body, x, &arg, supply).term;
            WhStep::Reduced(ctx.plug(r))
        }
        _ => WhStep::NormalForm,
    }
}

/// One weak head step via the inductive rules (root β) and (@l).
pub fn wh_step_inductive(t: &Term) -> WhStep {
    fn go(t: &Term, supply: &mut NameSupply) -> Option<Term> {
        match t.kind() {
            TermKind::App(f, a) => match f.kind() {
                TermKind::Lam(x, body) => Some(meta_subst(body, x, a, supply).term),
                _ => go(f, supply).map(|f| Term::app(f, a.clone())),
            },
            _ => None,
        }
    }
    match go(t, &mut NameSupply::above(t)) {
        Some(r) => WhStep::Reduced(r),
        None => WhStep::NormalForm,
    }
}

/// An abstraction, or a (necessarily free) variable applied to arguments.
pub fn is_whnf(t: &Term) -> bool {
    let (head, args) = t.spine();
    match head.kind() {
        TermKind::Lam(..) => args.is_empty(),
        _ => true,
    }
}

fn record(steps: &mut Vec<DerivationStep>, pos: RedexPos, t: &Term, opts: &ReduceOptions) {
    steps.push(DerivationStep {
        pos,
        term: (t.size() <= opts.store_cap).then(|| t.clone()),
        size: t.size(),
    });
}

/// Iterates [`wh_step`] at most `opts.fuel` times.
pub fn wh_normalize(t: &Term, opts: &ReduceOptions) -> Normalization {
    let mut supply = NameSupply::above(t);
    let mut steps = Vec::new();
    let mut cur = t.clone();
    let outcome = loop {
        if cur.size() > opts.size_limit {
            break Outcome::SizeLimit;
        }
        let depth = cur.spine().1.len();
        match wh_step_with(&cur, &mut supply) {
            WhStep::NormalForm => break Outcome::Normal,
            WhStep::Reduced(_) if steps.len() as u64 >= opts.fuel => break Outcome::FuelExhausted,
            WhStep::Reduced(next) => {
                record(&mut steps, RedexPos(vec![Dir::Fun; depth - 1]), &next, opts);
                cur = next;
            }
        }
    };
    Normalization {
        derivation: Derivation {
            initial: t.clone(),
            steps,
            last: cur,
        },
        outcome,
    }
}

/// Path to the rightmost-innermost β-redex: arguments are searched before
/// functions and a redex is only chosen when its subterms hold none.
fn rightmost_innermost(t: &Term) -> Option<Vec<Dir>> {
    fn go(t: &Term, path: &mut Vec<Dir>) -> bool {
        match t.kind() {
            TermKind::Var(_) => false,
            TermKind::Lam(_, b) => {
                path.push(Dir::Body);
                if go(b, path) {
                    return true;
                }
                path.pop();
                false
            }
            TermKind::App(f, a) => {
                path.push(Dir::Arg);
                if go(a, path) {
                    return true;
                }
                path.pop();
                path.push(Dir::Fun);
                if go(f, path) {
                    return true;
                }
                path.pop();
                f.is_lam()
            }
        }
    }
    let mut path = Vec::new();
    go(t, &mut path).then_some(path)
}

/// Contracts the redex at `path`.
pub fn contract_at(t: &Term, path: &[Dir], supply: &mut NameSupply) -> Option<Term> {
    match (path.split_first(), t.kind()) {
        (None, TermKind::App(f, a)) => match f.kind() {
            TermKind::Lam(x, body) => Some(meta_subst(body, x, a, supply).term),
            _ => None,
        },
        (Some((Dir::Fun, rest)), TermKind::App(f, a)) => {
            Some(Term::app(contract_at(f, rest, supply)?, a.clone()))
        }
        (Some((Dir::Arg, rest)), TermKind::App(f, a)) => {
            Some(Term::app(f.clone(), contract_at(a, rest, supply)?))
        }
        (Some((Dir::Body, rest)), TermKind::Lam(x, b)) => {
            Some(Term::lam(x.clone(), contract_at(b, rest, supply)?))
        }
        _ => None,
    }
}

/// Repeatedly contracts the rightmost-innermost β-redex of the whole term,
/// under binders included, until the term is β-normal.
pub fn ri_normalize(t: &Term, opts: &ReduceOptions) -> Normalization {
    let mut supply = NameSupply::above(t);
    let mut steps = Vec::new();
    let mut cur = t.clone();
    let outcome = loop {
        if cur.size() > opts.size_limit {
            break Outcome::SizeLimit;
        }
        let Some(path) = rightmost_innermost(&cur) else {
            break Outcome::Normal;
        };
        if steps.len() as u64 >= opts.fuel {
            break Outcome::FuelExhausted;
        }
        let next = contract_at(&cur, &path, &mut supply).expect("path leads to a redex");
        record(&mut steps, RedexPos(path), &next, opts);
        cur = next;
    };
    Normalization {
        derivation: Derivation {
            initial: t.clone(),
            steps,
            last: cur,
        },
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{alpha_eq, parse};

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn split_reads_left_spine() {
        let (h, ctx) = wh_split(&p("(\\x. x) y z"));
        assert!(alpha_eq(&h, &p("\\x. x")));
        assert_eq!(ctx.args, vec![p("y"), p("z")]);
        let (h, ctx) = wh_split(&p("\\x. x"));
        assert!(alpha_eq(&h, &p("\\x. x")));
        assert!(ctx.is_empty());
    }

    #[test]
    fn weak_head_steps() {
        match wh_step(&p("(\\x. x x) (\\z. z)")) {
            WhStep::Reduced(t) => assert!(alpha_eq(&t, &p("(\\z. z) (\\z. z)"))),
            WhStep::NormalForm => panic!(),
        }
        assert!(matches!(wh_step(&p("\\x. (\\y. y) z")), WhStep::NormalForm));
        assert!(matches!(wh_step(&p("y ((\\y. y) z)")), WhStep::NormalForm));
    }

    #[test]
    fn omega_exhausts_fuel() {
        let n = wh_normalize(&p("(\\x. x x) (\\x. x x)"), &ReduceOptions::with_fuel(100));
        assert_eq!(n.outcome, Outcome::FuelExhausted);
        assert_eq!(n.derivation.len(), 100);
    }

    #[test]
    fn abstraction_is_already_normal() {
        let n = wh_normalize(&p("\\z. z"), &ReduceOptions::with_fuel(1));
        assert_eq!(n.outcome, Outcome::Normal);
        assert!(n.derivation.is_empty());
    }

    #[test]
    fn whnf_shapes() {
        assert!(is_whnf(&p("\\x. (\\x. x x) (\\x. x x)")));
        assert!(is_whnf(&p("y ((\\x. x) a) b")));
        assert!(!is_whnf(&p("(\\x. x) y")));
    }

    #[test]
    fn rightmost_innermost_goes_inside_first() {
        let n = ri_normalize(&p("(\\x. x) ((\\y. y) z)"), &ReduceOptions::with_fuel(10));
        assert_eq!(n.outcome, Outcome::Normal);
        assert_eq!(n.derivation.len(), 2);
        assert_eq!(n.derivation.steps[0].pos, RedexPos(vec![Dir::Arg]));
        assert!(alpha_eq(n.derivation.steps[0].term.as_ref().unwrap(), &p("(\\x. x) z")));
        assert!(alpha_eq(&n.derivation.last, &p("z")));
    }

    #[test]
    fn rightmost_innermost_reduces_under_binders() {
        let n = ri_normalize(&p("\\a. (\\x. x) a"), &ReduceOptions::with_fuel(10));
        assert_eq!(n.derivation.len(), 1);
        assert!(alpha_eq(&n.derivation.last, &p("\\a. a")));
    }

    #[test]
    fn capture_is_avoided_at_the_root() {
        let n = wh_normalize(&p("(\\x. \\y. x) y"), &ReduceOptions::with_fuel(10));
        assert!(alpha_eq(&n.derivation.last, &p("\\w. y")));
    }

    #[test]
    fn store_cap_keeps_sizes_only() {
        let opts = ReduceOptions {
            fuel: 10,
            store_cap: 3,
            size_limit: 1 << 20,
        };
        let n = wh_normalize(&p("(\\x. x x) (\\z. z)"), &opts);
        assert!(n.derivation.steps[0].term.is_none());
        assert_eq!(n.derivation.steps[0].size, 5);
        assert!(n.derivation.steps[1].term.is_some());
    }
}
