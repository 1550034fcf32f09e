use std::collections::{HashMap, HashSet};

use super::{free_vars, restore, NameSupply, Term, TermKind, VarId};

/// Result of a meta-level substitution together with the number of symbols
/// a copying implementation writes to produce it.
#[derive(Clone, Debug)]
pub struct Substituted {
    pub term: Term,
    pub written: u64,
}

/// Capture-avoiding `t{x←s}`.
///
/// Subterms without free occurrences of `x` are shared, not rebuilt. The
/// `written` meter counts one symbol per rebuilt constructor plus `|s|` per
/// replaced occurrence, i.e. what an implementation must write given that
/// each copy of `s` is a fresh code. Binders of `t` that would capture a free
/// variable of `s` are renamed with ids drawn from `supply`.
pub fn meta_subst(t: &Term, x: &VarId, s: &Term, supply: &mut NameSupply) -> Substituted {
    let fv = free_vars(s);
    let mut written = 0;
    let term = subst(t, x, s, &fv, supply, &mut written).unwrap_or_else(|| t.clone());
    Substituted { term, written }
}

fn subst(
    t: &Term,
    x: &VarId,
    s: &Term,
    fv: &HashSet<VarId>,
    supply: &mut NameSupply,
    written: &mut u64,
) -> Option<Term> {
    match t.kind() {
        TermKind::Var(y) => {
            if y == x {
                *written += s.size() as u64;
                Some(s.clone())
            } else {
                None
            }
        }
        TermKind::Lam(y, b) => {
            if y == x {
                return None;
            }
            if fv.contains(y) {
                let z = supply.fresh(y);
                let mut renamed = 0;
                let b = subst(b, y, &Term::var(z.clone()), &HashSet::new(), supply, &mut renamed)
                    .unwrap_or_else(|| b.clone());
                let body = subst(&b, x, s, fv, supply, written);
                *written += renamed;
                if body.is_none() && renamed == 0 {
                    return None;
                }
                *written += 1;
                return Some(Term::lam(z, body.unwrap_or(b)));
            }
            let body = subst(b, x, s, fv, supply, written)?;
            *written += 1;
            Some(Term::lam(y.clone(), body))
        }
        TermKind::App(f, a) => {
            let nf = subst(f, x, s, fv, supply, written);
            let na = subst(a, x, s, fv, supply, written);
            if nf.is_none() && na.is_none() {
                return None;
            }
            *written += 1;
            Some(Term::app(
                nf.unwrap_or_else(|| f.clone()),
                na.unwrap_or_else(|| a.clone()),
            ))
        }
    }
}

/// Structural copy of `t` with every binder given a fresh id from `supply`.
/// Free variables are untouched. Linear in `|t|`.
pub fn rename_copy(t: &Term, supply: &mut NameSupply) -> Term {
    fn go(t: &Term, supply: &mut NameSupply, map: &mut HashMap<VarId, u32>) -> Term {
        match t.kind() {
            TermKind::Var(x) => match map.get(x) {
                Some(&id) => Term::var(x.renamed(id)),
                None => t.clone(),
            },
            TermKind::Lam(x, b) => {
                let fresh = supply.fresh(x);
                let old = map.insert(x.clone(), fresh.id);
                let body = go(b, supply, map);
                restore(map, x, old);
                Term::lam(fresh, body)
            }
            TermKind::App(f, a) => {
                let f = go(f, supply, map);
                Term::app(f, go(a, supply, map))
            }
        }
    }
    go(t, supply, &mut HashMap::new())
}
