use std::collections::{HashMap, HashSet};

use super::{free_vars, Term, TermKind, VarId};

struct Printer {
    free: HashSet<String>,
    scope: Vec<(VarId, String)>,
    in_use: HashMap<String, usize>,
    out: String,
}

impl Printer {
    fn display_for_binder(&self, x: &VarId) -> String {
        let mut name = x.name().to_string();
        while self.free.contains(&name) || self.in_use.contains_key(&name) {
            name.push('\'');
        }
        name
    }

    fn lookup<'a>(&'a self, x: &'a VarId) -> &'a str {
        self.scope
            .iter()
            .rev()
            .find(|(v, _)| v == x)
            .map_or(x.name(), |(_, s)| s.as_str())
    }

    fn term(&mut self, t: &Term) {
        match t.kind() {
            TermKind::Var(x) => {
                let s = self.lookup(x).to_string();
                self.out.push_str(&s);
            }
            TermKind::Lam(x, b) => {
                let shown = self.display_for_binder(x);
                self.out.push('\\');
                self.out.push_str(&shown);
                self.out.push_str(". ");
                *self.in_use.entry(shown.clone()).or_insert(0) += 1;
                self.scope.push((x.clone(), shown.clone()));
                self.term(b);
                self.scope.pop();
                let n = self.in_use.get_mut(&shown).expect("pushed above");
                *n -= 1;
                if *n == 0 {
                    self.in_use.remove(&shown);
                }
            }
            TermKind::App(f, a) => {
                if f.is_lam() {
                    self.parens(f);
                } else {
                    self.term(f);
                }
                self.out.push(' ');
                if a.is_var() {
                    self.term(a);
                } else {
                    self.parens(a);
                }
            }
        }
    }

    fn parens(&mut self, t: &Term) {
        self.out.push('(');
        self.term(t);
        self.out.push(')');
    }
}

/// Renders `t` in the concrete syntax accepted by [`super::parse`].
///
/// Binders are displayed by name; a prime is appended whenever the plain
/// name would capture or be captured, so `parse(print(t))` is always
/// α-equivalent to `t`.
pub fn print(t: &Term) -> String {
    let mut p = Printer {
        free: free_vars(t).into_iter().map(|x| x.name().to_string()).collect(),
        scope: Vec::new(),
        in_use: HashMap::new(),
        out: String::new(),
    };
    p.term(t);
    p.out
}
