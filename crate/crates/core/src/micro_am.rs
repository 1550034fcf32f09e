//! The Micro AM: a global environment and micro-substitution on demand,
//! with no search structure. The code is a head applied to arguments and
//! the head is located again at every step.
//!
//! ```text
//! (λx.t̄) s̄ q̄₁…q̄ₖ | E   →dβ   t̄ q̄₁…q̄ₖ  | [x←s̄] :: E
//! x q̄₁…q̄ₖ        | E   →var  t̄ᵅ q̄₁…q̄ₖ | E          if E(x) = t̄
//! ```

use crate::machine::genv::{audit_codes_subterm, audit_scoping, GlobalEnv};
use crate::machine::{
    AuditContext, Kind, Machine, MachineId, StateMeasure, Step, TransitionLabel, Violation,
};
use crate::term::{rename_copy, well_name, NameSupply, Term, TermKind};

#[derive(Clone, Copy, Debug, Default)]
pub struct MicroAm;

#[derive(Clone, Debug, PartialEq)]
pub struct MicroState {
    pub code: Term,
    pub env: GlobalEnv,
    pub supply: NameSupply,
}

impl Machine for MicroAm {
    type State = MicroState;

    fn id(&self) -> MachineId {
        MachineId::Micro
    }

    fn compile(&self, t: &Term) -> MicroState {
        let wn = well_name(t);
        MicroState {
            code: wn.code,
            env: GlobalEnv::new(),
            supply: wn.supply,
        }
    }

    fn step(&self, mut s: MicroState) -> Step<MicroState> {
        let (head, args) = s.code.spine();
        // nodes visited walking down the spine, and rebuilt on the way back
        let search_work = args.len() as u64 + 1;
        match head.kind() {
            TermKind::Lam(x, body) if !args.is_empty() => {
                let (x, body) = (x.clone(), body.clone());
                let arg = args[0].clone();
                let rest: Vec<Term> = args[1..].iter().map(|&a| a.clone()).collect();
                s.env.push(x, arg);
                s.code = Term::apps(body, rest);
                let label = TransitionLabel {
                    kind: Kind::DelayedBeta,
                    cost_units: 1 + search_work,
                    search_work,
                };
                Step::Next(label, s)
            }
            TermKind::Var(x) => match s.env.lookup(x) {
                Some(t) => {
                    let copy = rename_copy(t, &mut s.supply);
                    let base = copy.size() as u64;
                    let args: Vec<Term> = args.into_iter().cloned().collect();
                    s.code = Term::apps(copy, args);
                    let label = TransitionLabel {
                        kind: Kind::VarSub,
                        cost_units: base + search_work,
                        search_work,
                    };
                    Step::Next(label, s)
                }
                None => Step::Final(s),
            },
            _ => Step::Final(s),
        }
    }

    fn is_final(&self, s: &MicroState) -> bool {
        let (head, args) = s.code.spine();
        match head.kind() {
            TermKind::Lam(..) => args.is_empty(),
            TermKind::Var(x) => s.env.lookup(x).is_none(),
            TermKind::App(..) => unreachable!("spine heads are never applications"),
        }
    }

    fn decoded_size(&self, s: &MicroState) -> u64 {
        s.env.decoded_size(&s.code)
    }

    fn decode_unchecked(&self, s: &MicroState) -> Term {
        s.env.decode(&s.code)
    }

    fn measure(&self, s: &MicroState) -> StateMeasure {
        StateMeasure {
            size: s.code.size() as u64 + s.env.total_size(),
            code_size: s.code.size() as u64,
            env_len: s.env.len() as u64,
            stack_len: 0,
        }
    }

    fn audit(&self, ctx: &AuditContext, s: &MicroState, out: &mut Vec<Violation>) {
        let (head, args) = s.code.spine();
        let pieces = std::iter::once(("code head".to_string(), head))
            .chain(args.iter().enumerate().map(|(i, a)| (format!("code argument {i}"), *a)));
        audit_codes_subterm(&ctx.initial, pieces, ctx, out);
        s.env.audit_subterms(ctx, out);
        let codes = std::iter::once(("code".to_string(), &s.code)).chain(
            s.env
                .oldest_first()
                .iter()
                .enumerate()
                .map(|(i, (_, c))| (format!("environment entry {i}"), c)),
        );
        audit_scoping(codes, ctx, out);
        s.env.audit_freshness(ctx, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{run, run_with, AuditPlan, RunOptions};
    use crate::term::{alpha_eq, parse};

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn next(s: MicroState) -> (TransitionLabel, MicroState) {
        match MicroAm.step(s) {
            Step::Next(l, s) => (l, s),
            Step::Final(_) => panic!("unexpected final state"),
        }
    }

    #[test]
    fn substitutes_only_the_head_occurrence() {
        let s0 = MicroAm.compile(&p("(\\x. x x) (\\z. z)"));
        let (l1, s1) = next(s0);
        assert_eq!(l1.kind, Kind::DelayedBeta);
        assert_eq!(crate::term::print(&s1.code), "x x");
        assert_eq!(s1.env.len(), 1);
        let (l2, s2) = next(s1);
        assert_eq!(l2.kind, Kind::VarSub);
        assert_eq!(l2.cost_units - l2.search_work, 2);
        // the argument occurrence of x is still a variable
        match s2.code.kind() {
            TermKind::App(f, a) => {
                assert!(f.is_lam());
                assert!(a.is_var());
            }
            _ => panic!("expected an application"),
        }
        assert!(alpha_eq(&MicroAm.decode_unchecked(&s2), &p("(\\z. z) (\\z. z)")));
    }

    #[test]
    fn final_states() {
        let free = MicroState {
            code: p("y (\\z. z)"),
            env: GlobalEnv::new(),
            supply: NameSupply::starting_at(1),
        };
        assert!(MicroAm.is_final(&free));
        assert!(matches!(MicroAm.step(free), Step::Final(_)));
        let r = run(&MicroAm, &p("\\z. z"), 10);
        assert_eq!(r.length, 0);
    }

    #[test]
    fn env_decoding() {
        let s = MicroState {
            code: p("x x"),
            env: GlobalEnv::from_newest_first([(crate::term::VarId::named("x"), p("\\z. z"))]),
            supply: NameSupply::starting_at(1),
        };
        assert!(alpha_eq(&MicroAm.decode_unchecked(&s), &p("(\\z. z) (\\z. z)")));
    }

    #[test]
    fn audited_run_is_clean() {
        let opts = RunOptions {
            fuel: 1000,
            audit: Some(AuditPlan::every_step()),
            ..RunOptions::default()
        };
        let e = run_with(&MicroAm, &p("(\\x. \\y. y x x) (\\z. z) (\\w. w)"), &opts);
        assert!(e.violations.is_empty(), "{:?}", e.violations);
        // W I I, then I I, then I
        assert_eq!(e.report.tallies.delayed_beta, 4);
    }
}
