//! The abstraction shared by every machine: states, labelled transitions,
//! compilation, decoding, and fueled execution with metering.

pub mod genv;
pub mod harness;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{SubtermIndex, Term};

/// Transition kinds across all machines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    /// Root β with a delayed (MAM, KAM) or meta-level (Searching AM) substitution.
    Beta,
    /// Efficient MAM: β on a variable argument, substituted on the fly.
    BetaV1,
    /// Efficient MAM: β on a non-variable argument, delayed.
    BetaV2,
    /// Pushing an argument on the stack (`@l`).
    Search,
    /// Micro-substitution of one variable occurrence.
    VarSub,
    /// Micro AM's delaying β.
    DelayedBeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    BetaClass,
    OverheadClass,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Beta,
        Kind::BetaV1,
        Kind::BetaV2,
        Kind::Search,
        Kind::VarSub,
        Kind::DelayedBeta,
    ];

    pub fn class(self) -> Class {
        match self {
            Kind::Beta | Kind::BetaV1 | Kind::BetaV2 | Kind::DelayedBeta => Class::BetaClass,
            Kind::Search | Kind::VarSub => Class::OverheadClass,
        }
    }

    pub fn is_beta(self) -> bool {
        self.class() == Class::BetaClass
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Beta => "beta",
            Kind::BetaV1 => "beta_v1",
            Kind::BetaV2 => "beta_v2",
            Kind::Search => "search",
            Kind::VarSub => "varsub",
            Kind::DelayedBeta => "delayed_beta",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classification and metered cost of one transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionLabel {
    pub kind: Kind,
    /// Elementary operations charged to the transition.
    pub cost_units: u64,
    /// Part of `cost_units` spent re-locating the head (Micro AM only).
    pub search_work: u64,
}

impl TransitionLabel {
    pub fn new(kind: Kind, cost_units: u64) -> Self {
        TransitionLabel {
            kind,
            cost_units,
            search_work: 0,
        }
    }

    pub fn class(&self) -> Class {
        self.kind.class()
    }
}

pub enum Step<S> {
    Next(TransitionLabel, S),
    Final(S),
}

/// Sizes of a state's components, in symbols or entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StateMeasure {
    pub size: u64,
    pub code_size: u64,
    /// Global environment length, or local environment length for the KAM.
    pub env_len: u64,
    pub stack_len: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MachineId {
    #[serde(rename = "search")]
    Search,
    #[serde(rename = "micro")]
    Micro,
    #[serde(rename = "mam")]
    Mam,
    #[serde(rename = "mam-eff")]
    MamEff,
    #[serde(rename = "kam-list")]
    KamList,
    #[serde(rename = "kam-array")]
    KamArray,
}

impl MachineId {
    pub const ALL: [MachineId; 6] = [
        MachineId::Search,
        MachineId::Micro,
        MachineId::Mam,
        MachineId::MamEff,
        MachineId::KamList,
        MachineId::KamArray,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MachineId::Search => "search",
            MachineId::Micro => "micro",
            MachineId::Mam => "mam",
            MachineId::MamEff => "mam-eff",
            MachineId::KamList => "kam-list",
            MachineId::KamArray => "kam-array",
        }
    }

    /// Machines whose overhead is bounded like the MAM's.
    pub fn is_mam_family(self) -> bool {
        matches!(
            self,
            MachineId::Mam | MachineId::MamEff | MachineId::KamList | MachineId::KamArray
        )
    }
}

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown machine {0:?}")]
pub struct UnknownMachine(pub String);

impl FromStr for MachineId {
    type Err = UnknownMachine;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MachineId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMachine(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("decoded term would have {size} symbols, above the cap of {cap}")]
    SizeCap { size: u64, cap: u64 },
}

/// One invariant failure found while auditing a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub step: u64,
    pub component: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {} violated by {}", self.step, self.invariant, self.component)
    }
}

/// What invariant predicates see besides the state itself.
pub struct AuditContext {
    pub initial: SubtermIndex,
    pub step: u64,
}

impl AuditContext {
    pub fn new(t0: &Term) -> Self {
        AuditContext {
            initial: SubtermIndex::new(t0),
            step: 0,
        }
    }

    pub fn t0_size(&self) -> usize {
        self.initial.root_size()
    }

    pub fn violation(&self, invariant: &'static str, component: impl Into<String>) -> Violation {
        Violation {
            invariant,
            step: self.step,
            component: component.into(),
        }
    }
}

/// An abstract machine for the weak head strategy.
pub trait Machine {
    type State: Clone + PartialEq + fmt::Debug;

    fn id(&self) -> MachineId;

    /// Initial state on a well-named copy of `t`.
    fn compile(&self, t: &Term) -> Self::State;

    fn step(&self, s: Self::State) -> Step<Self::State>;

    fn is_final(&self, s: &Self::State) -> bool;

    /// Size of the decoded term, computed without building it.
    fn decoded_size(&self, s: &Self::State) -> u64;

    fn decode_unchecked(&self, s: &Self::State) -> Term;

    fn decode(&self, s: &Self::State, cap: u64) -> Result<Term, DecodeError> {
        let size = self.decoded_size(s);
        if size > cap {
            return Err(DecodeError::SizeCap { size, cap });
        }
        Ok(self.decode_unchecked(s))
    }

    fn measure(&self, s: &Self::State) -> StateMeasure;

    /// Appends every violation of this machine's invariants found in `s`.
    fn audit(&self, _ctx: &AuditContext, _s: &Self::State, _out: &mut Vec<Violation>) {}
}

/// Per-kind counters; doubles as a per-kind cost breakdown.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub beta: u64,
    pub search: u64,
    pub varsub: u64,
    pub beta_v1: u64,
    pub beta_v2: u64,
    pub delayed_beta: u64,
}

impl Tallies {
    fn slot(&mut self, kind: Kind) -> &mut u64 {
        match kind {
            Kind::Beta => &mut self.beta,
            Kind::BetaV1 => &mut self.beta_v1,
            Kind::BetaV2 => &mut self.beta_v2,
            Kind::Search => &mut self.search,
            Kind::VarSub => &mut self.varsub,
            Kind::DelayedBeta => &mut self.delayed_beta,
        }
    }

    pub fn add(&mut self, kind: Kind, n: u64) {
        *self.slot(kind) += n;
    }

    pub fn get(&self, kind: Kind) -> u64 {
        let mut copy = *self;
        *copy.slot(kind)
    }

    pub fn total(&self) -> u64 {
        Kind::ALL.iter().map(|&k| self.get(k)).sum()
    }

    pub fn beta_class(&self) -> u64 {
        Kind::ALL
            .iter()
            .filter(|k| k.is_beta())
            .map(|&k| self.get(k))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    Final,
    FuelExhausted,
    /// The state outgrew the configured size limit (only machines whose
    /// codes are not bounded by the initial term can hit this).
    SizeLimit,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Final => "Final",
            RunStatus::FuelExhausted => "FuelExhausted",
            RunStatus::SizeLimit => "SizeLimit",
        })
    }
}

/// Summary of one execution.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub machine: MachineId,
    pub term_size: u64,
    pub tallies: Tallies,
    /// |ρ|_β
    pub beta_count: u64,
    /// |ρ|
    pub length: u64,
    pub cost_units: u64,
    pub cost_by_kind: Tallies,
    pub search_work: u64,
    pub peak_state_size: u64,
    pub final_state_size: u64,
    pub status: RunStatus,
    pub decoded: Option<Term>,
    pub decoded_size: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuditPlan {
    /// Every state up to this many transitions is audited.
    pub dense_prefix: u64,
    /// Past the prefix, every `stride`-th state is audited.
    pub stride: u64,
}

impl AuditPlan {
    pub fn every_step() -> Self {
        AuditPlan {
            dense_prefix: u64::MAX,
            stride: 1,
        }
    }

    pub fn every(stride: u64) -> Self {
        AuditPlan {
            dense_prefix: 0,
            stride: stride.max(1),
        }
    }

    fn wants(&self, step: u64) -> bool {
        step < self.dense_prefix || step.is_multiple_of(self.stride)
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Maximum number of transitions.
    pub fuel: u64,
    /// Final states are decoded only when the result has at most this size.
    pub decode_cap: u64,
    /// Execution stops with [`RunStatus::SizeLimit`] above this state size.
    pub size_limit: u64,
    pub record_trace: bool,
    pub audit: Option<AuditPlan>,
    /// Keep a clone of every `n`-th state (and the final one).
    pub sample_every: Option<u64>,
}

impl RunOptions {
    pub fn with_fuel(fuel: u64) -> Self {
        RunOptions {
            fuel,
            ..RunOptions::default()
        }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            fuel: 10_000,
            decode_cap: crate::family::size_cap() as u64,
            size_limit: 1 << 24,
            record_trace: false,
            audit: None,
            sample_every: None,
        }
    }
}

/// One transition as seen by the trace recorder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub index: u64,
    pub kind: Kind,
    pub cost_units: u64,
    pub search_work: u64,
    /// Measure of the state the transition started from.
    pub before: StateMeasure,
    /// β-transitions strictly before this one.
    pub beta_before: u64,
    pub state_size_after: u64,
}

/// Everything an execution produced.
#[derive(Clone, Debug)]
pub struct Execution<S> {
    pub report: RunReport,
    pub trace: Vec<TraceRecord>,
    pub violations: Vec<Violation>,
    pub samples: Vec<S>,
    pub final_state: S,
}

/// Runs `m` on `t` with the given options.
pub fn run_with<M: Machine>(m: &M, t: &Term, opts: &RunOptions) -> Execution<M::State> {
    let mut state = m.compile(t);
    let mut ctx = opts.audit.map(|_| AuditContext::new(t));
    let mut violations = Vec::new();
    let mut samples = Vec::new();
    let mut trace = Vec::new();
    let mut tallies = Tallies::default();
    let mut costs = Tallies::default();
    let (mut cost_units, mut search_work) = (0u64, 0u64);
    let mut measure = m.measure(&state);
    let mut peak = measure.size;
    let mut length = 0u64;

    let audit_now = |ctx: &mut Option<AuditContext>, violations: &mut Vec<Violation>, s: &M::State, step: u64| {
        if let (Some(ctx), Some(plan)) = (ctx.as_mut(), opts.audit) {
            if plan.wants(step) {
                ctx.step = step;
                m.audit(ctx, s, violations);
            }
        }
    };
    audit_now(&mut ctx, &mut violations, &state, 0);
    if opts.sample_every.is_some() {
        samples.push(state.clone());
    }

    let status = loop {
        if measure.size > opts.size_limit {
            break RunStatus::SizeLimit;
        }
        if length >= opts.fuel {
            break if m.is_final(&state) {
                RunStatus::Final
            } else {
                RunStatus::FuelExhausted
            };
        }
        match m.step(state) {
            Step::Final(s) => {
                state = s;
                break RunStatus::Final;
            }
            Step::Next(label, s) => {
                state = s;
                let before = measure;
                measure = m.measure(&state);
                peak = peak.max(measure.size);
                if opts.record_trace {
                    trace.push(TraceRecord {
                        index: length,
                        kind: label.kind,
                        cost_units: label.cost_units,
                        search_work: label.search_work,
                        before,
                        beta_before: tallies.beta_class(),
                        state_size_after: measure.size,
                    });
                }
                tallies.add(label.kind, 1);
                costs.add(label.kind, label.cost_units);
                cost_units += label.cost_units;
                search_work += label.search_work;
                length += 1;
                audit_now(&mut ctx, &mut violations, &state, length);
                if let Some(every) = opts.sample_every {
                    if length.is_multiple_of(every.max(1)) {
                        samples.push(state.clone());
                    }
                }
            }
        }
    };
    if let Some(ctx) = ctx.as_mut() {
        if opts.audit.is_some_and(|p| !p.wants(length)) {
            ctx.step = length;
            m.audit(ctx, &state, &mut violations);
        }
    }
    if let Some(every) = opts.sample_every {
        if !length.is_multiple_of(every.max(1)) {
            samples.push(state.clone());
        }
    }

    let decoded_size = m.decoded_size(&state);
    let decoded = (status == RunStatus::Final && decoded_size <= opts.decode_cap)
        .then(|| m.decode_unchecked(&state));
    Execution {
        report: RunReport {
            machine: m.id(),
            term_size: t.size() as u64,
            tallies,
            beta_count: tallies.beta_class(),
            length,
            cost_units,
            cost_by_kind: costs,
            search_work,
            peak_state_size: peak,
            final_state_size: measure.size,
            status,
            decoded,
            decoded_size: Some(decoded_size),
        },
        trace,
        violations,
        samples,
        final_state: state,
    }
}

/// Runs `m` on `t` for at most `fuel` transitions.
pub fn run<M: Machine>(m: &M, t: &Term, fuel: u64) -> RunReport {
    run_with(m, t, &RunOptions::with_fuel(fuel)).report
}

/// Plain-text trace: one `step_index kind cost state_size` line per
/// transition, the size being that of the state reached.
pub fn dump_trace(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&format!(
            "{} {} {} {}\n",
            r.index, r.kind, r.cost_units, r.state_size_after
        ));
    }
    out
}

/// Expands to `$body` with `$m` bound to the machine named by `$id`.
#[macro_export]
macro_rules! with_machine {
    ($id:expr, $m:ident => $body:expr) => {
        match $id {
            $crate::machine::MachineId::Search => {
                let $m = $crate::search_am::SearchingAm;
                $body
            }
            $crate::machine::MachineId::Micro => {
                let $m = $crate::micro_am::MicroAm;
                $body
            }
            $crate::machine::MachineId::Mam => {
                let $m = $crate::mam::Mam::plain();
                $body
            }
            $crate::machine::MachineId::MamEff => {
                let $m = $crate::mam::Mam::efficient();
                $body
            }
            $crate::machine::MachineId::KamList => {
                let $m = $crate::kam::Kam::<$crate::kam::SharedList>::new();
                $body
            }
            $crate::machine::MachineId::KamArray => {
                let $m = $crate::kam::Kam::<$crate::kam::CopiedArray>::new();
                $body
            }
        }
    };
}

/// [`run_with`] for a machine chosen at runtime; states are dropped.
pub fn run_machine(id: MachineId, t: &Term, opts: &RunOptions) -> (RunReport, Vec<TraceRecord>, Vec<Violation>) {
    with_machine!(id, m => {
        let e = run_with(&m, t, opts);
        (e.report, e.trace, e.violations)
    })
}
