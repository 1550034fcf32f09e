use std::collections::HashSet;

use proptest::prelude::*;
use wham_core::machine::{Machine, MachineId};
use wham_core::strategy::{
    is_whnf, ri_normalize, wh_normalize, wh_split, wh_step, wh_step_inductive, Outcome, ReduceOptions, WhStep,
};
use wham_core::term::{
    alpha_eq, erase, free_vars, is_beta_normal, is_subterm_mod_names, is_well_named, meta_subst, parse, print,
    well_name, NameSupply, Term, TermKind, VarId,
};
use wham_core::with_machine;

const NAMES: [&str; 5] = ["x", "y", "z", "f", "a"];

fn var(i: usize) -> Term {
    Term::var(VarId::named(NAMES[i % NAMES.len()]))
}

/// Arbitrary terms over a small pool of names, so that shadowing, capture
/// and free variables all occur.
fn term() -> impl Strategy<Value = Term> {
    let leaf = (0..NAMES.len()).prop_map(var);
    leaf.prop_recursive(7, 48, 2, |inner| {
        prop_oneof![
            (0..NAMES.len(), inner.clone()).prop_map(|(i, b)| Term::lam(VarId::named(NAMES[i]), b)),
            (inner.clone(), inner).prop_map(|(f, a)| Term::app(f, a)),
        ]
    })
}

/// Terms with at least one β-redex near the head.
fn redexy_term() -> impl Strategy<Value = Term> {
    (0..NAMES.len(), term(), term(), prop::collection::vec(term(), 0..3)).prop_map(|(i, body, arg, rest)| {
        let head = Term::app(Term::lam(VarId::named(NAMES[i]), body), arg);
        Term::apps(head, rest)
    })
}

/// Locally nameless form used as an independent α-equivalence and
/// substitution oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Db {
    Bound(usize),
    Free(String),
    Lam(Box<Db>),
    App(Box<Db>, Box<Db>),
}

fn to_db(t: &Term) -> Db {
    fn go(t: &Term, scope: &mut Vec<VarId>) -> Db {
        match t.kind() {
            TermKind::Var(x) => match scope.iter().rev().position(|y| y == x) {
                Some(i) => Db::Bound(i),
                None => Db::Free(x.name().to_string()),
            },
            TermKind::Lam(x, b) => {
                scope.push(x.clone());
                let body = go(b, scope);
                scope.pop();
                Db::Lam(Box::new(body))
            }
            TermKind::App(f, a) => Db::App(Box::new(go(f, scope)), Box::new(go(a, scope))),
        }
    }
    go(t, &mut Vec::new())
}

/// `t` with free `x` replaced by `s`, both in locally nameless form.
fn db_subst(t: &Db, x: &str, s: &Db) -> Db {
    match t {
        Db::Free(y) if y == x => s.clone(),
        Db::Bound(_) | Db::Free(_) => t.clone(),
        Db::Lam(b) => Db::Lam(Box::new(db_subst(b, x, s))),
        Db::App(f, a) => Db::App(Box::new(db_subst(f, x, s)), Box::new(db_subst(a, x, s))),
    }
}

fn naive_size(t: &Term) -> usize {
    match t.kind() {
        TermKind::Var(_) => 1,
        TermKind::Lam(_, b) => 1 + naive_size(b),
        TermKind::App(f, a) => 1 + naive_size(f) + naive_size(a),
    }
}

fn names(t: &Term) -> HashSet<String> {
    free_vars(t).iter().map(|x| x.name().to_string()).collect()
}

fn subterms(t: &Term) -> Vec<Term> {
    let mut out = vec![t.clone()];
    match t.kind() {
        TermKind::Var(_) => {}
        TermKind::Lam(_, b) => out.extend(subterms(b)),
        TermKind::App(f, a) => {
            out.extend(subterms(f));
            out.extend(subterms(a));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_then_parsing_is_the_identity(t in term()) {
        let back = parse(&print(&t)).unwrap();
        prop_assert_eq!(to_db(&back), to_db(&t));
        prop_assert!(alpha_eq(&back, &t));
    }

    #[test]
    fn alpha_eq_agrees_with_locally_nameless_form(t in term(), s in term()) {
        prop_assert_eq!(alpha_eq(&t, &s), to_db(&t) == to_db(&s));
        prop_assert!(alpha_eq(&t, &well_name(&t).code));
    }

    #[test]
    fn sizes_are_symbol_counts(t in term()) {
        prop_assert_eq!(t.size(), naive_size(&t));
        prop_assert_eq!(erase(&t).size(), t.size());
    }

    #[test]
    fn substitution_matches_the_oracle(t in term(), s in term(), i in 0..NAMES.len()) {
        let x = VarId::named(NAMES[i]);
        let mut supply = NameSupply::above(&Term::app(t.clone(), s.clone()));
        let r = meta_subst(&t, &x, &s, &mut supply).term;
        prop_assert_eq!(to_db(&r), db_subst(&to_db(&t), NAMES[i], &to_db(&s)));

        let mut expected = names(&t);
        if expected.remove(NAMES[i]) {
            expected.extend(names(&s));
        }
        prop_assert_eq!(names(&r), expected);
    }

    #[test]
    fn well_naming(t in term()) {
        let w = well_name(&t);
        prop_assert!(is_well_named(&w.code));
        prop_assert!(alpha_eq(&w.code, &t));
        prop_assert_eq!(names(&w.code), names(&t));
    }

    #[test]
    fn subterm_relation(t in term()) {
        prop_assert!(is_subterm_mod_names(&t, &t));
        for s in subterms(&t) {
            prop_assert!(is_subterm_mod_names(&s, &t));
            for u in subterms(&s) {
                prop_assert!(is_subterm_mod_names(&u, &t));
            }
        }
    }

    #[test]
    fn splitting_and_plugging_are_inverse(t in term()) {
        let (head, ctx) = wh_split(&t);
        prop_assert!(alpha_eq(&ctx.plug(head.clone()), &t));
        prop_assert!(!matches!(head.kind(), TermKind::App(..)));
    }

    #[test]
    fn both_step_definitions_agree(t in redexy_term()) {
        match (wh_step(&t), wh_step_inductive(&t)) {
            (WhStep::Reduced(a), WhStep::Reduced(b)) => prop_assert!(alpha_eq(&a, &b)),
            (WhStep::NormalForm, WhStep::NormalForm) => prop_assert!(is_whnf(&t)),
            _ => prop_assert!(false, "step definitions disagree on {}", print(&t)),
        }
    }

    #[test]
    fn normal_forms(t in redexy_term()) {
        let w = wh_normalize(&t, &ReduceOptions::with_fuel(200));
        if w.outcome == Outcome::Normal {
            prop_assert!(is_whnf(&w.derivation.last));
        }
        let r = ri_normalize(&t, &ReduceOptions::with_fuel(200));
        if r.outcome == Outcome::Normal {
            prop_assert!(is_beta_normal(&r.derivation.last));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn compiled_states_decode_to_their_term(t in term()) {
        for id in MachineId::ALL {
            let d = with_machine!(id, m => m.decode(&m.compile(&t), u64::MAX));
            let d = d.unwrap();
            prop_assert!(alpha_eq(&d, &t), "{} decodes {} to {}", id, print(&t), print(&d));
        }
    }
}
