//! Conformance, invariant and bound suites over a seeded corpus and the
//! term families, as run by `wham check`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{generate, CorpusConfig};
use crate::family::{gen_chain, gen_expected, gen_family, FamilyKind};
use crate::machine::harness::{
    check_determinism, check_overhead_segments, check_progress, compare_with_reference, Verdict,
};
use crate::machine::{run_with, AuditPlan, Kind, Machine, MachineId, RunOptions, RunReport, RunStatus};
use crate::metrics::{calibrate, check_bounds, check_segments, tercile_split};
use crate::strategy::{ri_normalize, wh_normalize, Outcome, ReduceOptions};
use crate::term::{alpha_eq, Term};
use crate::with_machine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    /// Exact reduction lengths and results on the `t`/`s` and `u I`/`r` families.
    Families,
    /// β-count and result agreement with the weak head reference.
    Conformance,
    /// Audited machine invariants, determinism and progress.
    Invariants,
    /// Transition-count and cost bounds for the MAM family.
    Bounds,
    /// Agreement of the two KAM environment backends with each other and the MAM.
    Kam,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Families, Suite::Conformance, Suite::Invariants, Suite::Bounds, Suite::Kam];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Families => "families",
            Suite::Conformance => "conformance",
            Suite::Invariants => "invariants",
            Suite::Bounds => "bounds",
            Suite::Kam => "kam",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown suite `{0}` (expected all, families, conformance, invariants, bounds or kam)")]
pub struct UnknownSuite(pub String);

/// Parses a suite name; `all` selects every suite.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>, UnknownSuite> {
    if s == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Suite::from_str(s).map(|x| vec![x])
}

impl FromStr for Suite {
    type Err = UnknownSuite;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub corpus_seed: u64,
    pub corpus_count: usize,
    pub fuel: u64,
    pub decode_cap: u64,
    /// Machine and reference runs stop once terms or states outgrow this.
    pub size_limit: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            corpus_seed: 42,
            corpus_count: 500,
            fuel: 10_000,
            decode_cap: 1 << 16,
            size_limit: 1 << 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{}: {verdict} ({})", self.suite, self.detail)
    }
}

struct RunRecord {
    term: usize,
    report: RunReport,
    verdict: Verdict,
    verdict_detail: String,
    problems: Vec<String>,
    bound_failures: Vec<String>,
    kinds: Vec<Kind>,
}

struct Runs {
    terms: Vec<Term>,
    by_machine: HashMap<MachineId, Vec<RunRecord>>,
}

fn record<M: Machine>(m: &M, term: usize, t: &Term, cfg: &SuiteConfig) -> RunRecord {
    let opts = RunOptions {
        fuel: cfg.fuel,
        decode_cap: cfg.decode_cap,
        size_limit: cfg.size_limit,
        record_trace: true,
        audit: Some(AuditPlan {
            dense_prefix: 256,
            stride: 16,
        }),
        sample_every: Some(64),
    };
    let e = run_with(m, t, &opts);
    let mut problems: Vec<String> = e.violations.iter().map(|v| v.to_string()).collect();
    problems.extend(check_determinism(m, &e.samples).err());
    if e.report.status == RunStatus::Final {
        problems.extend(check_progress(m, std::slice::from_ref(&e.final_state), cfg.decode_cap).err());
    }
    problems.extend(check_overhead_segments(m.id(), &e.trace).err());
    let mut bound_failures = Vec::new();
    if e.report.status == RunStatus::Final {
        let size = t.size() as u64;
        let mut checks = check_bounds(&e.report, size, None);
        checks.extend(check_segments(m.id(), &e.trace, size));
        bound_failures.extend(checks.iter().filter(|c| !c.pass).map(|c| c.to_string()));
    }
    RunRecord {
        term,
        report: e.report,
        verdict: Verdict::Inconclusive,
        verdict_detail: String::new(),
        problems,
        bound_failures,
        kinds: e.trace.iter().map(|r| r.kind).collect(),
    }
}

fn collect_runs(cfg: &SuiteConfig) -> Runs {
    let mut terms: Vec<Term> = generate(&CorpusConfig {
        seed: cfg.corpus_seed,
        count: cfg.corpus_count,
        ..CorpusConfig::default()
    })
    .into_iter()
    .map(|e| e.term)
    .collect();
    terms.extend((1..=8).filter_map(|n| gen_family(FamilyKind::UI, n).ok()));
    terms.extend((1..=16).filter_map(|n| gen_chain(n).ok()));

    let jobs: Vec<(MachineId, usize)> = MachineId::ALL
        .into_iter()
        .flat_map(|m| (0..terms.len()).map(move |i| (m, i)))
        .collect();
    let runs: Vec<(MachineId, RunRecord)> = jobs
        .par_iter()
        .map(|&(id, i)| (id, with_machine!(id, m => record(&m, i, &terms[i], cfg))))
        .collect();

    // the reference only has to go one step beyond the longest machine run
    let mut longest = vec![0u64; terms.len()];
    for (_, r) in &runs {
        longest[r.term] = longest[r.term].max(r.report.beta_count);
    }
    let references: Vec<_> = terms
        .par_iter()
        .zip(&longest)
        .map(|(t, &beta)| {
            let opts = ReduceOptions {
                fuel: beta + 1,
                store_cap: 0,
                size_limit: cfg.size_limit as usize,
            };
            wh_normalize(t, &opts)
        })
        .collect();

    let mut by_machine: HashMap<MachineId, Vec<RunRecord>> = HashMap::new();
    for (id, mut r) in runs {
        let v = compare_with_reference(&r.report, &references[r.term], cfg.decode_cap);
        r.verdict_detail = v.to_string();
        r.verdict = v.verdict;
        by_machine.entry(id).or_default().push(r);
    }
    for v in by_machine.values_mut() {
        v.sort_by_key(|r| r.term);
    }
    Runs { terms, by_machine }
}

fn families() -> (bool, String) {
    for n in 0..=12 {
        let (Ok(t), Ok(s)) = (gen_family(FamilyKind::T, n), gen_expected(FamilyKind::T, n)) else {
            return (false, format!("t_{n} could not be built"));
        };
        let r = ri_normalize(&t, &ReduceOptions::with_fuel(1000));
        let ok = r.outcome == Outcome::Normal
            && r.derivation.len() == n as usize
            && alpha_eq(&r.derivation.last, &s);
        if !ok {
            return (false, format!("t_{n} does not reach s_{n} in {n} innermost steps"));
        }
    }
    for n in 1..=10 {
        let (Ok(t), Ok(r)) = (gen_family(FamilyKind::UI, n), gen_expected(FamilyKind::UI, n)) else {
            return (false, format!("u_{n} I could not be built"));
        };
        let w = wh_normalize(&t, &ReduceOptions::with_fuel(1000));
        let ok = w.outcome == Outcome::Normal
            && w.derivation.len() == n as usize
            && alpha_eq(&w.derivation.last, &r);
        if !ok {
            return (false, format!("u_{n} I does not reach r_{n} in {n} weak head steps"));
        }
    }
    (true, "t_n -> s_n for n <= 12 and u_n I -> r_n for n <= 10, exact lengths".into())
}

fn conformance(runs: &Runs) -> (bool, String) {
    let (mut finals, mut inconclusive) = (0, 0);
    for (id, records) in &runs.by_machine {
        for r in records {
            match r.verdict {
                Verdict::Mismatch => return (false, format!("{id} on term {}: {}", r.term, r.verdict_detail)),
                Verdict::Inconclusive => inconclusive += 1,
                Verdict::Ok => {}
            }
            finals += usize::from(r.report.status == RunStatus::Final);
        }
    }
    (
        true,
        format!(
            "{} terms x {} machines, {finals} final runs matched, {inconclusive} inconclusive",
            runs.terms.len(),
            runs.by_machine.len()
        ),
    )
}

fn invariants(runs: &Runs) -> (bool, String) {
    let mut audited = 0;
    for (id, records) in &runs.by_machine {
        for r in records {
            if let Some(p) = r.problems.first() {
                return (false, format!("{id} on term {}: {p}", r.term));
            }
            audited += 1;
        }
    }
    (true, format!("{audited} audited runs clean"))
}

fn bounds(runs: &Runs) -> (bool, String) {
    let mut constants = Vec::new();
    let mut ids: Vec<MachineId> = runs.by_machine.keys().copied().filter(|m| m.is_mam_family()).collect();
    ids.sort();
    for id in ids {
        let records = &runs.by_machine[&id];
        if let Some(r) = records.iter().find(|r| !r.bound_failures.is_empty()) {
            return (false, format!("{id} on term {}: {}", r.term, r.bound_failures[0]));
        }
        let samples: Vec<(u64, u64, u64)> = records
            .iter()
            .filter(|r| r.report.status == RunStatus::Final)
            .map(|r| (r.report.term_size, r.report.beta_count, r.report.cost_units))
            .collect();
        let (small, rest) = tercile_split(samples, |s| s.0);
        let c = calibrate(id, &small);
        for &(size, beta, cost) in &rest {
            let checks = check_bounds(
                &RunReport {
                    cost_units: cost,
                    beta_count: beta,
                    ..records[0].report.clone()
                },
                size,
                Some(c),
            );
            if let Some(bad) = checks.last().filter(|b| !b.pass) {
                return (false, format!("{id}: calibrated c={c} fails on a held-out run: {bad}"));
            }
        }
        constants.push(format!("{id} c={c}"));
    }
    (true, format!("transition bounds exact on every final run; {}", constants.join(", ")))
}

fn kam(runs: &Runs) -> (bool, String) {
    let (Some(list), Some(array), Some(mam)) = (
        runs.by_machine.get(&MachineId::KamList),
        runs.by_machine.get(&MachineId::KamArray),
        runs.by_machine.get(&MachineId::Mam),
    ) else {
        return (false, "missing runs".into());
    };
    for ((l, a), m) in list.iter().zip(array).zip(mam) {
        if l.kinds != a.kinds {
            return (false, format!("term {}: backends take different transitions", l.term));
        }
        if l.report.tallies != m.report.tallies {
            return (false, format!("term {}: KAM and MAM tallies differ", l.term));
        }
    }
    (true, format!("{} terms: identical backend traces, tallies equal to the MAM", list.len()))
}

/// Runs the selected suites; machine runs are shared between suites.
pub fn run_suites(suites: &[Suite], cfg: &SuiteConfig) -> Vec<SuiteOutcome> {
    let needs_runs = suites.iter().any(|s| *s != Suite::Families);
    let runs = needs_runs.then(|| collect_runs(cfg));
    suites
        .iter()
        .map(|&suite| {
            let (pass, detail) = match (suite, &runs) {
                (Suite::Families, _) => families(),
                (Suite::Conformance, Some(r)) => conformance(r),
                (Suite::Invariants, Some(r)) => invariants(r),
                (Suite::Bounds, Some(r)) => bounds(r),
                (Suite::Kam, Some(r)) => kam(r),
                (_, None) => unreachable!("runs are collected for every suite but families"),
            };
            SuiteOutcome { suite, pass, detail }
        })
        .collect()
}
