//! The Searching AM: an argument stack plus meta-level substitution.
//!
//! ```text
//! t̄ s̄    | π       →@l   t̄         | s̄ :: π
//! λx. t̄  | s̄ :: π  →β    t̄{x←s̄}    | π
//! ```

use crate::machine::{Kind, Machine, MachineId, StateMeasure, Step, TransitionLabel};
use crate::term::{meta_subst, well_name, NameSupply, Term, TermKind};

#[derive(Clone, Copy, Debug, Default)]
pub struct SearchingAm;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    pub code: Term,
    /// Top of the stack is the last element.
    pub stack: Vec<Term>,
    pub supply: NameSupply,
    stack_size: u64,
}

impl SearchState {
    pub fn new(code: Term, stack_top_first: Vec<Term>, supply: NameSupply) -> Self {
        let mut stack = stack_top_first;
        stack.reverse();
        let stack_size = stack.iter().map(|t| t.size() as u64).sum();
        SearchState {
            code,
            stack,
            supply,
            stack_size,
        }
    }
}

impl Machine for SearchingAm {
    type State = SearchState;

    fn id(&self) -> MachineId {
        MachineId::Search
    }

    fn compile(&self, t: &Term) -> SearchState {
        let wn = well_name(t);
        SearchState::new(wn.code, Vec::new(), wn.supply)
    }

    fn step(&self, mut s: SearchState) -> Step<SearchState> {
        match s.code.kind() {
            TermKind::App(f, a) => {
                let (f, a) = (f.clone(), a.clone());
                s.stack_size += a.size() as u64;
                s.stack.push(a);
                s.code = f;
                Step::Next(TransitionLabel::new(Kind::Search, 1), s)
            }
            TermKind::Lam(x, body) if !s.stack.is_empty() => {
                let arg = s.stack.pop().expect("non-empty stack");
                s.stack_size -= arg.size() as u64;
                let r = meta_subst(body, x, &arg, &mut s.supply);
                s.code = r.term;
                Step::Next(TransitionLabel::new(Kind::Beta, r.written), s)
            }
            _ => Step::Final(s),
        }
    }

    fn is_final(&self, s: &SearchState) -> bool {
        match s.code.kind() {
            TermKind::App(..) => false,
            TermKind::Lam(..) => s.stack.is_empty(),
            TermKind::Var(_) => true,
        }
    }

    fn decoded_size(&self, s: &SearchState) -> u64 {
        s.code.size() as u64 + s.stack_size + s.stack.len() as u64
    }

    fn decode_unchecked(&self, s: &SearchState) -> Term {
        Term::apps(s.code.clone(), s.stack.iter().rev().cloned())
    }

    fn measure(&self, s: &SearchState) -> StateMeasure {
        StateMeasure {
            size: s.code.size() as u64 + s.stack_size,
            code_size: s.code.size() as u64,
            env_len: 0,
            stack_len: s.stack.len() as u64,
        }
    }
}
