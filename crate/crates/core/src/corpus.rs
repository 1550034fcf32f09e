//! Seeded random terms for conformance and benchmarking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::term::{is_closed, Term, VarId};

#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub seed: u64,
    pub count: usize,
    pub max_depth: u32,
    /// Terms above this size are discarded and drawn again.
    pub max_size: usize,
    /// Fraction of terms allowed to have free variables.
    pub open_ratio: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 42,
            count: 500,
            max_depth: 12,
            max_size: 80,
            open_ratio: 0.3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub index: usize,
    pub term: Term,
}

impl CorpusEntry {
    pub fn is_closed(&self) -> bool {
        is_closed(&self.term)
    }
}

const BINDERS: [&str; 6] = ["x", "y", "z", "w", "f", "g"];
const FREE: [&str; 3] = ["a", "b", "c"];

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    open: bool,
}

impl Gen<'_> {
    fn var(&mut self, scope: &[VarId]) -> Term {
        if scope.is_empty() || (self.open && self.rng.gen_bool(0.15)) {
            let name = FREE[self.rng.gen_range(0..FREE.len())];
            return Term::var(VarId::named(name));
        }
        // favour recent binders, but allow shadowed names to be reached
        let i = scope.len() - 1 - self.rng.gen_range(0..scope.len()).min(self.rng.gen_range(0..scope.len()));
        Term::var(scope[i].clone())
    }

    fn lam(&mut self, depth: u32, scope: &mut Vec<VarId>) -> Term {
        let x = VarId::named(BINDERS[self.rng.gen_range(0..BINDERS.len())]);
        scope.push(x.clone());
        let body = self.term(depth - 1, scope);
        scope.pop();
        Term::lam(x, body)
    }

    /// A λ applied to a few arguments, mostly abstractions, so that weak
    /// head reduction has work to do beyond the first step.
    fn top(&mut self, depth: u32) -> Term {
        let scope = &mut Vec::new();
        if depth < 3 || self.rng.gen_bool(0.2) {
            return self.term(depth, scope);
        }
        let head = self.lam(depth, scope);
        let k = self.rng.gen_range(1..=3);
        let args: Vec<Term> = (0..k)
            .map(|_| {
                if self.rng.gen_bool(0.7) {
                    self.lam(depth - 1, scope)
                } else {
                    self.term(depth - 1, scope)
                }
            })
            .collect();
        Term::apps(head, args)
    }

    fn term(&mut self, depth: u32, scope: &mut Vec<VarId>) -> Term {
        let can_be_var = !scope.is_empty() || self.open;
        if depth <= 1 {
            return if can_be_var {
                self.var(scope)
            } else {
                let x = VarId::named("x");
                Term::lam(x.clone(), Term::var(x))
            };
        }
        let roll: f64 = self.rng.gen();
        if roll < 0.2 && can_be_var {
            self.var(scope)
        } else if roll < 0.45 {
            self.lam(depth, scope)
        } else if roll < 0.75 {
            // a redex, so that most terms do some work
            let f = self.lam(depth, scope);
            let a = self.term(depth - 1, scope);
            Term::app(f, a)
        } else {
            let f = self.term(depth - 1, scope);
            let a = self.term(depth - 1, scope);
            Term::app(f, a)
        }
    }
}

/// Generates `cfg.count` terms; the same configuration always yields the
/// same corpus.
pub fn generate(cfg: &CorpusConfig) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.count);
    while out.len() < cfg.count {
        let open = rng.gen_bool(cfg.open_ratio);
        let depth = rng.gen_range(2..=cfg.max_depth.max(2));
        let mut gen = Gen { rng: &mut rng, open };
        let term = gen.top(depth);
        if term.size() > cfg.max_size {
            continue;
        }
        out.push(CorpusEntry {
            index: out.len(),
            term,
        });
    }
    out
}
