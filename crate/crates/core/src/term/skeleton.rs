use std::cell::RefCell;
use std::collections::HashMap;

use super::{Term, TermKind};

/// A term with every variable (bound, free, and in binders) replaced by one
/// placeholder symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Skeleton {
    Var,
    Lam(Box<Skeleton>),
    App(Box<Skeleton>, Box<Skeleton>),
}

impl Skeleton {
    pub fn size(&self) -> usize {
        match self {
            Skeleton::Var => 1,
            Skeleton::Lam(b) => 1 + b.size(),
            Skeleton::App(f, a) => 1 + f.size() + a.size(),
        }
    }
}

pub fn erase(t: &Term) -> Skeleton {
    match t.kind() {
        TermKind::Var(_) => Skeleton::Var,
        TermKind::Lam(_, b) => Skeleton::Lam(Box::new(erase(b))),
        TermKind::App(f, a) => Skeleton::App(Box::new(erase(f)), Box::new(erase(a))),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Var,
    Lam(u32),
    App(u32, u32),
}

/// Hash-consed skeletons of every subterm of a fixed term, answering
/// "is `s` a subterm of `t` up to names" in time linear in `|s|`.
///
/// Answers for queried codes are memoised by node identity, so re-checking
/// codes that sit unchanged in an environment is constant time.
pub struct SubtermIndex {
    table: HashMap<Key, u32>,
    memo: RefCell<HashMap<usize, (Term, bool)>>,
    root_size: usize,
}

impl SubtermIndex {
    pub fn new(t: &Term) -> Self {
        let mut table = HashMap::new();
        fn intern(t: &Term, table: &mut HashMap<Key, u32>) -> u32 {
            let key = match t.kind() {
                TermKind::Var(_) => Key::Var,
                TermKind::Lam(_, b) => Key::Lam(intern(b, table)),
                TermKind::App(f, a) => {
                    let f = intern(f, table);
                    Key::App(f, intern(a, table))
                }
            };
            let next = table.len() as u32;
            *table.entry(key).or_insert(next)
        }
        intern(t, &mut table);
        SubtermIndex {
            table,
            memo: RefCell::new(HashMap::new()),
            root_size: t.size(),
        }
    }

    /// Size of the indexed term.
    pub fn root_size(&self) -> usize {
        self.root_size
    }

    fn lookup(&self, s: &Term) -> Option<u32> {
        let key = match s.kind() {
            TermKind::Var(_) => Key::Var,
            TermKind::Lam(_, b) => Key::Lam(self.lookup(b)?),
            TermKind::App(f, a) => Key::App(self.lookup(f)?, self.lookup(a)?),
        };
        self.table.get(&key).copied()
    }

    pub fn contains(&self, s: &Term) -> bool {
        if s.size() > self.root_size {
            return false;
        }
        if let Some((_, hit)) = self.memo.borrow().get(&s.addr()) {
            return *hit;
        }
        let hit = self.lookup(s).is_some();
        self.memo.borrow_mut().insert(s.addr(), (s.clone(), hit));
        hit
    }
}

/// Whether `erase(s)` occurs as a subtree of `erase(t)`.
pub fn is_subterm_mod_names(s: &Term, t: &Term) -> bool {
    SubtermIndex::new(t).lookup(s).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn erasure_forgets_names() {
        assert_eq!(
            erase(&p("\\x. x")),
            Skeleton::Lam(Box::new(Skeleton::Var))
        );
        assert_eq!(erase(&p("\\x. \\y. x")), erase(&p("\\a. \\b. b")));
        assert_eq!(erase(&p("(\\x. x x) y")), erase(&p("(\\x. x x) z")));
        assert_eq!(erase(&p("(\\x. x x) y")).size(), 6);
    }

    #[test]
    fn subterms_up_to_names() {
        assert!(is_subterm_mod_names(&p("x"), &p("\\y. y")));
        assert!(is_subterm_mod_names(
            &p("\\x. x x"),
            &p("(\\x. x x) (\\x. x x)")
        ));
        assert!(!is_subterm_mod_names(&p("y y"), &p("\\x. x")));
        assert!(is_subterm_mod_names(&p("a b"), &p("\\q. \\w. w q")));
    }

    #[test]
    fn index_memoises_by_identity() {
        let t = p("(\\x. x x) (\\y. y)");
        let idx = SubtermIndex::new(&t);
        let s = p("\\k. k k");
        assert!(idx.contains(&s));
        assert!(idx.contains(&s));
        assert!(!idx.contains(&p("a b c")));
    }
}
