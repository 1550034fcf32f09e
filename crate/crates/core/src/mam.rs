//! The Milner Abstract Machine and its efficient variant.
//!
//! ```text
//! t̄ s̄    | π      | E   →@l   t̄  | s̄ :: π | E
//! λx. t̄  | s̄ :: π | E   →β    t̄  | π      | [x←s̄] :: E
//! x      | π      | E   →var  t̄ᵅ | π      | E             if E(x) = t̄
//! ```
//!
//! The efficient variant splits `→β`: a variable argument `y` is
//! substituted on the fly (`t̄{x←y}`), any other argument is delayed as
//! above, so the environment never holds renaming chains.

use crate::machine::genv::{audit_codes_subterm, audit_scoping, GlobalEnv};
use crate::machine::{
    AuditContext, Kind, Machine, MachineId, StateMeasure, Step, TransitionLabel, Violation,
};
use crate::term::{meta_subst, rename_copy, well_name, NameSupply, Term, TermKind};

#[derive(Clone, Copy, Debug)]
pub struct Mam {
    efficient: bool,
}

impl Mam {
    pub fn plain() -> Self {
        Mam { efficient: false }
    }

    pub fn efficient() -> Self {
        Mam { efficient: true }
    }

    pub fn is_efficient(&self) -> bool {
        self.efficient
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MamState {
    pub code: Term,
    /// Top of the stack is the last element.
    pub stack: Vec<Term>,
    pub env: GlobalEnv,
    pub supply: NameSupply,
    stack_size: u64,
}

impl MamState {
    pub fn new(code: Term, stack_top_first: Vec<Term>, env: GlobalEnv, supply: NameSupply) -> Self {
        let mut stack = stack_top_first;
        stack.reverse();
        let stack_size = stack.iter().map(|t| t.size() as u64).sum();
        MamState {
            code,
            stack,
            env,
            supply,
            stack_size,
        }
    }

    fn folded(&self) -> Term {
        Term::apps(self.code.clone(), self.stack.iter().rev().cloned())
    }
}

impl Machine for Mam {
    type State = MamState;

    fn id(&self) -> MachineId {
        if self.efficient {
            MachineId::MamEff
        } else {
            MachineId::Mam
        }
    }

    fn compile(&self, t: &Term) -> MamState {
        let wn = well_name(t);
        MamState::new(wn.code, Vec::new(), GlobalEnv::new(), wn.supply)
    }

    fn step(&self, mut s: MamState) -> Step<MamState> {
        match s.code.kind() {
            TermKind::App(f, a) => {
                let (f, a) = (f.clone(), a.clone());
                s.stack_size += a.size() as u64;
                s.stack.push(a);
                s.code = f;
                Step::Next(TransitionLabel::new(Kind::Search, 1), s)
            }
            TermKind::Lam(x, body) if !s.stack.is_empty() => {
                let (x, body) = (x.clone(), body.clone());
                let arg = s.stack.pop().expect("non-empty stack");
                s.stack_size -= arg.size() as u64;
                if self.efficient && arg.is_var() {
                    let cost = body.size() as u64;
                    s.code = meta_subst(&body, &x, &arg, &mut s.supply).term;
                    Step::Next(TransitionLabel::new(Kind::BetaV1, cost), s)
                } else {
                    s.env.push(x, arg);
                    s.code = body;
                    let kind = if self.efficient { Kind::BetaV2 } else { Kind::Beta };
                    Step::Next(TransitionLabel::new(kind, 1), s)
                }
            }
            TermKind::Var(x) => match s.env.lookup(x) {
                Some(t) => {
                    let copy = rename_copy(t, &mut s.supply);
                    let cost = copy.size() as u64;
                    s.code = copy;
                    Step::Next(TransitionLabel::new(Kind::VarSub, cost), s)
                }
                None => Step::Final(s),
            },
            TermKind::Lam(..) => Step::Final(s),
        }
    }

    fn is_final(&self, s: &MamState) -> bool {
        match s.code.kind() {
            TermKind::App(..) => false,
            TermKind::Lam(..) => s.stack.is_empty(),
            TermKind::Var(x) => s.env.lookup(x).is_none(),
        }
    }

    fn decoded_size(&self, s: &MamState) -> u64 {
        s.env.decoded_size(&s.folded())
    }

    fn decode_unchecked(&self, s: &MamState) -> Term {
        s.env.decode(&s.folded())
    }

    fn measure(&self, s: &MamState) -> StateMeasure {
        StateMeasure {
            size: s.code.size() as u64 + s.stack_size + s.env.total_size(),
            code_size: s.code.size() as u64,
            env_len: s.env.len() as u64,
            stack_len: s.stack.len() as u64,
        }
    }

    fn audit(&self, ctx: &AuditContext, s: &MamState, out: &mut Vec<Violation>) {
        let codes = std::iter::once(("code".to_string(), &s.code)).chain(
            s.stack
                .iter()
                .rev()
                .enumerate()
                .map(|(i, c)| (format!("stack item {i}"), c)),
        );
        audit_codes_subterm(&ctx.initial, codes.clone(), ctx, out);
        s.env.audit_subterms(ctx, out);
        let all = codes.chain(
            s.env
                .oldest_first()
                .iter()
                .enumerate()
                .map(|(i, (_, c))| (format!("environment entry {i}"), c)),
        );
        audit_scoping(all, ctx, out);
        s.env.audit_freshness(ctx, out);
        if self.efficient {
            for (i, (x, c)) in s.env.oldest_first().iter().enumerate() {
                if c.is_var() {
                    out.push(ctx.violation(
                        "no renaming entries",
                        format!("environment entry {i} [{x:?}←{c:?}]"),
                    ));
                }
            }
        }
    }
}

/// A state built from parts, with a name supply far above the ids of any
/// hand-written code.
pub fn state_with(code: Term, stack_top_first: Vec<Term>, env: GlobalEnv) -> MamState {
    let supply = NameSupply::starting_at(1 << 20);
    MamState::new(code, stack_top_first, env, supply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{run, run_with, AuditPlan, RunOptions};
    use crate::term::{alpha_eq, parse, VarId};

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn kinds(m: &Mam, t: &Term) -> Vec<Kind> {
        let opts = RunOptions {
            fuel: 100,
            record_trace: true,
            ..RunOptions::default()
        };
        run_with(m, t, &opts).trace.iter().map(|r| r.kind).collect()
    }

    #[test]
    fn hand_trace() {
        use Kind::*;
        let t = p("(\\x. x x) (\\z. z)");
        assert_eq!(
            kinds(&Mam::plain(), &t),
            [Search, Beta, Search, VarSub, Beta, VarSub, VarSub]
        );
        let r = run(&Mam::plain(), &t, 100);
        assert_eq!((r.tallies.beta, r.tallies.search, r.tallies.varsub), (2, 2, 3));
        assert!(alpha_eq(r.decoded.as_ref().unwrap(), &p("\\z. z")));
        assert_eq!(
            kinds(&Mam::efficient(), &t),
            [Search, BetaV2, Search, VarSub, BetaV1, VarSub]
        );
    }

    #[test]
    fn efficient_substitutes_variables() {
        let r = run(&Mam::efficient(), &p("(\\x. x) y"), 10);
        assert_eq!(r.tallies.beta_v1, 1);
        assert!(alpha_eq(r.decoded.as_ref().unwrap(), &p("y")));
    }

    #[test]
    fn decoding_folds_then_substitutes() {
        let x = VarId::named("x");
        let s = state_with(p("x"), vec![p("x")], GlobalEnv::from_newest_first([(x, p("\\z. z"))]));
        assert!(alpha_eq(&Mam::plain().decode_unchecked(&s), &p("(\\z. z) (\\z. z)")));
        assert_eq!(Mam::plain().decoded_size(&s), 5);
    }

    #[test]
    fn final_states() {
        let m = Mam::plain();
        assert!(m.is_final(&state_with(p("y"), vec![p("a")], GlobalEnv::new())));
        assert!(m.is_final(&state_with(p("\\x. x"), vec![], GlobalEnv::new())));
        assert!(!m.is_final(&state_with(p("\\x. x"), vec![p("a")], GlobalEnv::new())));
    }

    #[test]
    fn omega_runs_out_of_fuel() {
        let r = run(&Mam::plain(), &p("(\\x. x x) (\\x. x x)"), 1000);
        assert_eq!(r.status, crate::machine::RunStatus::FuelExhausted);
        assert!(r.beta_count > 0);
    }

    #[test]
    fn audited_runs_are_clean() {
        let opts = RunOptions {
            fuel: 10_000,
            audit: Some(AuditPlan::every_step()),
            ..RunOptions::default()
        };
        for m in [Mam::plain(), Mam::efficient()] {
            let t = crate::family::gen_family(crate::family::FamilyKind::UI, 6).unwrap();
            let e = run_with(&m, &t, &opts);
            assert!(e.violations.is_empty(), "{:?}", e.violations);
            let t = crate::family::gen_chain(5).unwrap();
            let e = run_with(&m, &t, &opts);
            assert!(e.violations.is_empty(), "{:?}", e.violations);
        }
    }
}
