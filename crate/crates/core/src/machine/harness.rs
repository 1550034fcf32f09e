//! Runnable checks relating a machine to the weak head strategy.
//!
//! Implementation is checked by sampling: executions and derivations are
//! compared on given inputs within fuel, which falsifies but does not
//! verify the quantified statement.

use std::fmt;

use crate::strategy::{is_whnf, wh_normalize, wh_step, Normalization, Outcome, ReduceOptions, WhStep};
use crate::term::{alpha_eq, Term};

use super::{run_with, AuditContext, Machine, RunOptions, RunReport, RunStatus, Step, TraceRecord, Violation};
use super::{Kind, MachineId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Mismatch,
    /// The reference stopped on its size limit, so nothing can be compared.
    Inconclusive,
}

/// How the final results were compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    /// Full α-equivalence of the decoded result.
    Terms,
    /// Sizes only, the result being above the decoding cap.
    Sizes,
    /// Nothing to compare (a run did not terminate).
    None,
}

#[derive(Clone, Debug)]
pub struct ConformanceVerdict {
    pub machine: MachineId,
    pub verdict: Verdict,
    pub comparison: Comparison,
    pub machine_beta: u64,
    pub machine_status: RunStatus,
    pub reference_len: u64,
    pub reference_outcome: Outcome,
    /// Number of β-transitions after which the decoded state first differs
    /// from the derivation, when a mismatch could be located.
    pub first_divergence: Option<u64>,
    pub detail: String,
}

impl ConformanceVerdict {
    pub fn is_ok(&self) -> bool {
        self.verdict == Verdict::Ok
    }
}

impl fmt::Display for ConformanceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {:?} (machine β={} {}, reference {} steps {:?})",
            self.machine, self.verdict, self.machine_beta, self.machine_status, self.reference_len, self.reference_outcome
        )?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Compares a finished run against a reference normalisation.
pub fn compare_with_reference(report: &RunReport, reference: &Normalization, decode_cap: u64) -> ConformanceVerdict {
    let reference_len = reference.derivation.len() as u64;
    let mut v = ConformanceVerdict {
        machine: report.machine,
        verdict: Verdict::Ok,
        comparison: Comparison::None,
        machine_beta: report.beta_count,
        machine_status: report.status,
        reference_len,
        reference_outcome: reference.outcome,
        first_divergence: None,
        detail: String::new(),
    };
    let fail = |v: &mut ConformanceVerdict, detail: String| {
        v.verdict = Verdict::Mismatch;
        v.detail = detail;
    };
    match (report.status, reference.outcome) {
        (_, Outcome::SizeLimit) => {
            v.verdict = Verdict::Inconclusive;
            v.detail = "reference hit its size limit".into();
        }
        (RunStatus::Final, Outcome::Normal) => {
            if report.beta_count != reference_len {
                fail(&mut v, format!("β-count {} but derivation length {}", report.beta_count, reference_len));
                return v;
            }
            let nf = &reference.derivation.last;
            match &report.decoded {
                Some(d) if nf.size() as u64 <= decode_cap => {
                    v.comparison = Comparison::Terms;
                    if !alpha_eq(d, nf) {
                        fail(&mut v, format!("decoded {d} but the normal form is {nf}"));
                    }
                }
                _ => {
                    v.comparison = Comparison::Sizes;
                    if report.decoded_size != Some(nf.size() as u64) {
                        fail(
                            &mut v,
                            format!("decoded size {:?} but the normal form has size {}", report.decoded_size, nf.size()),
                        );
                    }
                }
            }
        }
        (RunStatus::Final, Outcome::FuelExhausted) => fail(
            &mut v,
            format!("machine stopped after {} β but the reference goes beyond {}", report.beta_count, reference_len),
        ),
        (_, Outcome::Normal) => {
            // the machine ran out of fuel (transitions) first
            if report.beta_count > reference_len {
                fail(
                    &mut v,
                    format!("{} β-transitions exceed the derivation length {}", report.beta_count, reference_len),
                );
            }
        }
        (_, Outcome::FuelExhausted) => {}
    }
    v
}

/// Runs `m` and the weak head reference on `t` with the same fuel and
/// compares them. On a mismatch the first divergent β-step is located.
pub fn check_implementation<M: Machine>(m: &M, t: &Term, fuel: u64, decode_cap: u64) -> ConformanceVerdict {
    let reference = wh_normalize(t, &ReduceOptions::with_fuel(fuel));
    let opts = RunOptions {
        fuel,
        decode_cap,
        ..RunOptions::default()
    };
    let report = run_with(m, t, &opts).report;
    let mut v = compare_with_reference(&report, &reference, decode_cap);
    if v.verdict == Verdict::Mismatch {
        v.first_divergence = first_divergence(m, t, &reference, fuel, decode_cap);
    }
    v
}

/// Replays `m` and returns the number of β-transitions after which its
/// decoded state first differs from the reference derivation.
pub fn first_divergence<M: Machine>(
    m: &M,
    t: &Term,
    reference: &Normalization,
    fuel: u64,
    decode_cap: u64,
) -> Option<u64> {
    let mut s = m.compile(t);
    let mut betas = 0u64;
    for _ in 0..fuel {
        match m.step(s) {
            Step::Final(_) => return None,
            Step::Next(label, next) => {
                s = next;
                if !label.kind.is_beta() {
                    continue;
                }
                betas += 1;
                let Some(step) = reference.derivation.steps.get(betas as usize - 1) else {
                    return Some(betas);
                };
                if let (Some(expected), Ok(got)) = (&step.term, m.decode(&s, decode_cap)) {
                    if !alpha_eq(expected, &got) {
                        return Some(betas);
                    }
                }
            }
        }
    }
    None
}

/// Re-steps every state twice and requires identical labels and successors.
pub fn check_determinism<M: Machine>(m: &M, states: &[M::State]) -> Result<(), String> {
    for (i, s) in states.iter().enumerate() {
        let same = match (m.step(s.clone()), m.step(s.clone())) {
            (Step::Final(a), Step::Final(b)) => a == b,
            (Step::Next(la, a), Step::Next(lb, b)) => la == lb && a == b,
            _ => false,
        };
        if !same {
            return Err(format!("{}: state {i} steps two different ways", m.id()));
        }
    }
    Ok(())
}

/// Every state must be final and decode to a weak head normal form.
/// States whose decoding exceeds the cap are only checked for finality.
pub fn check_progress<M: Machine>(m: &M, states: &[M::State], decode_cap: u64) -> Result<(), String> {
    for (i, s) in states.iter().enumerate() {
        if !m.is_final(s) {
            return Err(format!("{}: state {i} is not final", m.id()));
        }
        if let Ok(t) = m.decode(s, decode_cap) {
            if !is_whnf(&t) {
                return Err(format!("{}: final state {i} decodes to {t}, not a whnf", m.id()));
            }
        }
    }
    Ok(())
}

/// Applies the machine's invariant predicates to each `(step, state)`.
pub fn audit_invariants<M: Machine>(m: &M, t0: &Term, snapshots: &[(u64, M::State)]) -> Vec<Violation> {
    let mut ctx = AuditContext::new(t0);
    let mut out = Vec::new();
    for (step, s) in snapshots {
        ctx.step = *step;
        m.audit(&ctx, s, &mut out);
    }
    out
}

/// Checks every transition of a run within fuel: overhead transitions leave
/// the decoding unchanged and β-transitions make it take one weak head step.
/// Pairs whose decodings exceed the cap are skipped.
pub fn check_transitions_decoding<M: Machine>(m: &M, t: &Term, fuel: u64, decode_cap: u64) -> Result<(), String> {
    let mut s = m.compile(t);
    let mut before = m.decode(&s, decode_cap).ok();
    if let Some(d) = &before {
        if !alpha_eq(d, t) {
            return Err(format!("{}: initial state decodes to {d}, not {t}", m.id()));
        }
    }
    for i in 0..fuel {
        let Step::Next(label, next) = m.step(s) else {
            return Ok(());
        };
        s = next;
        let after = m.decode(&s, decode_cap).ok();
        if let (Some(b), Some(a)) = (&before, &after) {
            let expected = if label.kind.is_beta() {
                match wh_step(b) {
                    WhStep::Reduced(r) => r,
                    WhStep::NormalForm => {
                        return Err(format!("{}: β-transition {i} from a whnf {b}", m.id()));
                    }
                }
            } else {
                b.clone()
            };
            if !alpha_eq(&expected, a) {
                return Err(format!(
                    "{}: transition {i} ({}) decodes to {a}, expected {expected}",
                    m.id(),
                    label.kind
                ));
            }
        }
        before = after;
    }
    Ok(())
}

/// From every `stride`-th non-final state, runs overhead transitions to
/// exhaustion and then one β-transition, which must reach the decoding's
/// weak head reduct. A state whose decoding is a whnf must instead reach a
/// final state through overhead transitions only.
pub fn check_one_step_simulation<M: Machine>(
    m: &M,
    t: &Term,
    fuel: u64,
    stride: u64,
    decode_cap: u64,
) -> Result<(), String> {
    let stride = stride.max(1);
    let mut s = m.compile(t);
    for i in 0..fuel {
        if i % stride == 0 {
            if let Ok(d) = m.decode(&s, decode_cap) {
                simulate_one(m, &s, &d, fuel, decode_cap).map_err(|e| format!("{}: from state {i}: {e}", m.id()))?;
            }
        }
        match m.step(s) {
            Step::Final(_) => return Ok(()),
            Step::Next(_, next) => s = next,
        }
    }
    Ok(())
}

fn simulate_one<M: Machine>(m: &M, s: &M::State, d: &Term, fuel: u64, decode_cap: u64) -> Result<(), String> {
    let target = wh_step(d);
    let mut cur = s.clone();
    for _ in 0..fuel {
        match (m.step(cur), &target) {
            (Step::Final(_), WhStep::NormalForm) => return Ok(()),
            (Step::Final(_), WhStep::Reduced(_)) => {
                return Err(format!("reached a final state but {d} is not a whnf"));
            }
            (Step::Next(label, next), _) if !label.kind.is_beta() => cur = next,
            (Step::Next(..), WhStep::NormalForm) => {
                return Err(format!("β-transition although {d} is a whnf"));
            }
            (Step::Next(_, next), WhStep::Reduced(expected)) => {
                return match m.decode(&next, decode_cap) {
                    Ok(got) if alpha_eq(&got, expected) => Ok(()),
                    Ok(got) => Err(format!("reached {got}, expected {expected}")),
                    Err(_) => Ok(()),
                };
            }
        }
    }
    Ok(())
}

/// Maximal runs of consecutive transitions of one kind, as
/// `(first index, length)`.
pub fn segments(trace: &[TraceRecord], mut member: impl FnMut(Kind) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, r) in trace.iter().enumerate() {
        match (member(r.kind), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, trace.len() - s));
    }
    out
}

/// Overhead termination bounds on a recorded trace: consecutive Search
/// transitions never outnumber the code size at the start of the segment
/// and, for global-environment machines, consecutive VarSub transitions
/// never outnumber the environment length at the start.
pub fn check_overhead_segments(machine: MachineId, trace: &[TraceRecord]) -> Result<(), String> {
    for (start, len) in segments(trace, |k| k == Kind::Search) {
        let code = trace[start].before.code_size;
        if len as u64 > code {
            return Err(format!("{machine}: {len} consecutive searches from a code of size {code} at {start}"));
        }
    }
    if matches!(machine, MachineId::Micro | MachineId::Mam | MachineId::MamEff) {
        for (start, len) in segments(trace, |k| k == Kind::VarSub) {
            let env = trace[start].before.env_len;
            if len as u64 > env {
                return Err(format!(
                    "{machine}: {len} consecutive micro-substitutions with {env} environment entries at {start}"
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{gen_family, FamilyKind};
    use crate::kam::{CopiedArray, Kam, SharedList};
    use crate::mam::Mam;
    use crate::micro_am::MicroAm;
    use crate::search_am::SearchingAm;
    use crate::term::parse;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn all_ok(t: &Term, fuel: u64) {
        let cap = 1 << 16;
        assert!(check_implementation(&SearchingAm, t, fuel, cap).is_ok());
        assert!(check_implementation(&MicroAm, t, fuel, cap).is_ok());
        assert!(check_implementation(&Mam::plain(), t, fuel, cap).is_ok());
        assert!(check_implementation(&Mam::efficient(), t, fuel, cap).is_ok());
        assert!(check_implementation(&Kam::<SharedList>::new(), t, fuel, cap).is_ok());
        assert!(check_implementation(&Kam::<CopiedArray>::new(), t, fuel, cap).is_ok());
    }

    #[test]
    fn small_terms_conform() {
        all_ok(&p("\\z. z"), 10);
        all_ok(&p("(\\x. x x) (\\z. z)"), 100);
        all_ok(&p("(\\x. \\y. x) a b"), 100);
        all_ok(&p("(\\x. x x) (\\x. x x)"), 300);
        for n in 1..=6 {
            all_ok(&gen_family(FamilyKind::UI, n).unwrap(), 10_000);
        }
    }

    #[test]
    fn searching_am_beta_count() {
        let v = check_implementation(&SearchingAm, &p("(\\x. x x) (\\z. z)"), 100, 1 << 16);
        assert!(v.is_ok());
        assert_eq!((v.machine_beta, v.reference_len), (2, 2));
    }

    #[test]
    fn transitions_decode_and_simulate() {
        let t = gen_family(FamilyKind::UI, 3).unwrap();
        check_transitions_decoding(&Mam::plain(), &t, 1000, 1 << 16).unwrap();
        check_transitions_decoding(&MicroAm, &t, 1000, 1 << 16).unwrap();
        check_transitions_decoding(&Kam::<SharedList>::new(), &t, 1000, 1 << 16).unwrap();
        check_one_step_simulation(&Mam::efficient(), &t, 1000, 1, 1 << 16).unwrap();
        check_one_step_simulation(&SearchingAm, &t, 1000, 1, 1 << 16).unwrap();
    }

    #[test]
    fn segment_extraction() {
        let rec = |kind| TraceRecord {
            index: 0,
            kind,
            cost_units: 1,
            search_work: 0,
            before: Default::default(),
            beta_before: 0,
            state_size_after: 0,
        };
        let trace: Vec<_> = [Kind::Search, Kind::Search, Kind::Beta, Kind::Search].map(rec).to_vec();
        assert_eq!(segments(&trace, |k| k == Kind::Search), [(0, 2), (3, 1)]);
    }
}
