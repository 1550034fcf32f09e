//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the per-criterion lines are always
//! printed, whatever the capture settings.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use wham_core::corpus::{generate, CorpusConfig};
use wham_core::family::{gen_chain, gen_expected, gen_family, FamilyKind};
use wham_core::kam::{CopiedArray, EnvBackend, Kam, SharedList};
use wham_core::machine::harness::{
    check_determinism, check_overhead_segments, check_progress, compare_with_reference, Verdict,
};
use wham_core::machine::{
    run_machine, run_with, AuditPlan, DecodeError, Kind, Machine, MachineId, RunOptions, RunReport, RunStatus,
    Step,
};
use wham_core::metrics::{calibrate, check_bounds, check_segments, cost_budget, loglog_slope, tercile_split};
use wham_core::strategy::{ri_normalize, wh_normalize, Normalization, Outcome, ReduceOptions};
use wham_core::term::{alpha_eq, is_beta_normal, is_closed, well_name, Term, TermKind};
use wham_core::with_machine;

const FUEL: u64 = 10_000;
const DECODE_CAP: u64 = 1 << 16;
const STACK: usize = 256 << 20;
/// Runs whose terms outgrow this are inconclusive rather than slow.
const SIZE_LIMIT: u64 = 1 << 20;

/// The reference only needs to go one step past the longest β-count the
/// machines reached on the term.
fn reference_options(beta: u64) -> ReduceOptions {
    ReduceOptions {
        fuel: beta + 1,
        // only the final term and the length are compared
        store_cap: 0,
        size_limit: SIZE_LIMIT as usize,
    }
}

struct Check {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Check {
    Check {
        pass: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Check {
    Check {
        pass: false,
        detail: detail.into(),
    }
}

fn within(limit: Duration, started: Instant, o: Check) -> Check {
    let took = started.elapsed();
    if o.pass && took > limit {
        return fail(format!("{} but took {:.2?} (limit {:.0?})", o.detail, took, limit));
    }
    Check {
        pass: o.pass,
        detail: format!("{} in {:.2?}", o.detail, took),
    }
}

// Closed forms written out independently of the generators.
fn t_size(n: u32) -> usize {
    5 * n as usize + 1
}

fn s_size(n: u32) -> usize {
    (1usize << (n + 1)) - 1
}

fn r_size(n: u32) -> u64 {
    6 * (1u64 << n) - 4
}

fn criterion_1() -> Check {
    let started = Instant::now();
    for n in 0..=12 {
        let t = gen_family(FamilyKind::T, n).unwrap();
        let s = gen_expected(FamilyKind::T, n).unwrap();
        if t.size() != t_size(n) || s.size() != s_size(n) {
            return fail(format!("n={n}: sizes {} and {}", t.size(), s.size()));
        }
        let r = ri_normalize(&t, &ReduceOptions::with_fuel(1000));
        if r.outcome != Outcome::Normal || r.derivation.len() != n as usize {
            return fail(format!("n={n}: {} steps, {:?}", r.derivation.len(), r.outcome));
        }
        if !alpha_eq(&r.derivation.last, &s) {
            return fail(format!("n={n}: result is not s_n"));
        }
    }
    within(Duration::from_secs(5), started, pass("t_n reaches s_n in n steps for n in 0..=12"))
}

fn criterion_2() -> Check {
    let started = Instant::now();
    for n in 1..=10 {
        let t = gen_family(FamilyKind::UI, n).unwrap();
        let r_n = gen_expected(FamilyKind::UI, n).unwrap();
        if !is_closed(&t) || !is_beta_normal(&r_n) || r_n.size() as u64 != r_size(n) {
            return fail(format!("n={n}: shape of u_n I or r_n is wrong"));
        }
        let r = wh_normalize(&t, &ReduceOptions::with_fuel(1000));
        if r.outcome != Outcome::Normal || r.derivation.len() != n as usize {
            return fail(format!("n={n}: {} steps, {:?}", r.derivation.len(), r.outcome));
        }
        if !alpha_eq(&r.derivation.last, &r_n) {
            return fail(format!("n={n}: result is not r_n"));
        }
    }
    within(Duration::from_secs(5), started, pass("u_n I reaches r_n in n weak head steps for n in 1..=10"))
}

/// Everything later criteria need from one (term, machine) run.
struct RunSummary {
    term: usize,
    report: RunReport,
    verdict: Verdict,
    verdict_detail: String,
    violations: Vec<String>,
    determinism: Result<(), String>,
    progress: Result<(), String>,
    segments_ok: Result<(), String>,
    bound_failures: Vec<String>,
    /// Kinds and costs of every transition (MAM and KAM runs only).
    trace: Vec<(Kind, u64)>,
}

fn examine<M: Machine>(m: &M, index: usize, t: &Term) -> RunSummary {
    let opts = RunOptions {
        fuel: FUEL,
        decode_cap: DECODE_CAP,
        record_trace: true,
        audit: Some(AuditPlan {
            dense_prefix: 256,
            stride: 16,
        }),
        sample_every: Some(64),
        size_limit: SIZE_LIMIT,
    };
    let e = run_with(m, t, &opts);
    let finals: Vec<M::State> = if e.report.status == RunStatus::Final {
        vec![e.final_state.clone()]
    } else {
        Vec::new()
    };
    let mut bound_failures = Vec::new();
    if e.report.status == RunStatus::Final {
        let size = t.size() as u64;
        let mut checks = check_bounds(&e.report, size, None);
        checks.extend(check_segments(m.id(), &e.trace, size));
        for c in checks.into_iter().filter(|c| !c.pass) {
            bound_failures.push(c.to_string());
        }
    }
    let keep_trace = matches!(
        m.id(),
        MachineId::Mam | MachineId::KamList | MachineId::KamArray
    );
    RunSummary {
        term: index,
        verdict: Verdict::Inconclusive,
        verdict_detail: String::new(),
        violations: e.violations.iter().map(|v| v.to_string()).collect(),
        determinism: check_determinism(m, &e.samples),
        progress: check_progress(m, &finals, DECODE_CAP),
        segments_ok: check_overhead_segments(m.id(), &e.trace),
        bound_failures,
        trace: if keep_trace {
            e.trace.iter().map(|r| (r.kind, r.cost_units)).collect()
        } else {
            Vec::new()
        },
        report: e.report,
    }
}

struct Conformance {
    terms: Vec<Term>,
    runs: HashMap<MachineId, Vec<RunSummary>>,
    elapsed: Duration,
}

fn conformance_runs() -> Conformance {
    let started = Instant::now();
    let mut terms: Vec<Term> = generate(&CorpusConfig {
        seed: 42,
        count: 500,
        ..CorpusConfig::default()
    })
    .into_iter()
    .map(|e| e.term)
    .collect();
    terms.extend((1..=8).map(|n| gen_family(FamilyKind::UI, n).unwrap()));
    terms.extend((1..=16).map(|n| gen_chain(n).unwrap()));
    let jobs: Vec<(MachineId, usize)> = MachineId::ALL
        .into_iter()
        .flat_map(|m| (0..terms.len()).map(move |i| (m, i)))
        .collect();
    let results: Vec<(MachineId, RunSummary)> = jobs
        .par_iter()
        .map(|&(id, i)| (id, with_machine!(id, m => examine(&m, i, &terms[i]))))
        .collect();
    let mut longest = vec![0u64; terms.len()];
    for (_, s) in &results {
        longest[s.term] = longest[s.term].max(s.report.beta_count);
    }
    let references: Vec<Normalization> = terms
        .par_iter()
        .zip(&longest)
        .map(|(t, &beta)| wh_normalize(t, &reference_options(beta)))
        .collect();
    let results: Vec<(MachineId, RunSummary)> = results
        .into_par_iter()
        .map(|(id, mut s)| {
            let v = compare_with_reference(&s.report, &references[s.term], DECODE_CAP);
            s.verdict_detail = v.to_string();
            s.verdict = v.verdict;
            (id, s)
        })
        .collect();
    let mut runs: HashMap<MachineId, Vec<RunSummary>> = HashMap::new();
    for (id, s) in results {
        runs.entry(id).or_default().push(s);
    }
    for v in runs.values_mut() {
        v.sort_by_key(|s| s.term);
    }
    Conformance {
        terms,
        runs,
        elapsed: started.elapsed(),
    }
}

fn criterion_3(c: &Conformance) -> Check {
    let (mut finals, mut terms_compared, mut inconclusive) = (0, 0, 0);
    for (id, runs) in &c.runs {
        for r in runs {
            match r.verdict {
                Verdict::Mismatch => return fail(format!("{id} on term {}: {}", r.term, r.verdict_detail)),
                Verdict::Inconclusive => inconclusive += 1,
                Verdict::Ok => {}
            }
            if r.report.status == RunStatus::Final {
                finals += 1;
                if r.report.decoded.is_some() {
                    terms_compared += 1;
                }
            }
        }
    }
    let o = pass(format!(
        "{} terms x {} machines, {finals} final runs matched ({terms_compared} by full result), {inconclusive} inconclusive",
        c.terms.len(),
        c.runs.len()
    ));
    if c.elapsed > Duration::from_secs(60) {
        return fail(format!("{} but took {:.2?}", o.detail, c.elapsed));
    }
    Check {
        pass: true,
        detail: format!("{} in {:.2?}", o.detail, c.elapsed),
    }
}

fn criterion_4(c: &Conformance) -> Check {
    let mut snapshots_ok = 0;
    for (id, runs) in &c.runs {
        for r in runs {
            if let Some(v) = r.violations.first() {
                return fail(format!("{id} on term {}: {v}", r.term));
            }
            if let Err(e) = &r.determinism {
                return fail(format!("term {}: {e}", r.term));
            }
            if let Err(e) = &r.progress {
                return fail(format!("term {}: {e}", r.term));
            }
            if let Err(e) = &r.segments_ok {
                return fail(format!("term {}: {e}", r.term));
            }
            snapshots_ok += 1;
        }
    }
    pass(format!(
        "{snapshots_ok} audited runs: name, subterm, local-environment, determinism, progress and overhead-termination checks clean"
    ))
}

/// Calibrated constants per machine, from the smallest tercile of final runs.
fn constants(c: &Conformance) -> HashMap<MachineId, (u64, Vec<&RunSummary>)> {
    let mut out = HashMap::new();
    for id in [MachineId::Mam, MachineId::MamEff, MachineId::KamList, MachineId::KamArray] {
        let finals: Vec<&RunSummary> = c.runs[&id]
            .iter()
            .filter(|r| r.report.status == RunStatus::Final)
            .collect();
        let (small, rest) = tercile_split(finals, |r| r.report.term_size);
        let samples: Vec<(u64, u64, u64)> = small
            .iter()
            .map(|r| (r.report.term_size, r.report.beta_count, r.report.cost_units))
            .collect();
        out.insert(id, (calibrate(id, &samples), rest));
    }
    out
}

fn criterion_5(c: &Conformance) -> Check {
    let mut details = Vec::new();
    for (id, (k, rest)) in constants(c) {
        for r in &c.runs[&id] {
            if let Some(f) = r.bound_failures.first() {
                return fail(format!("{id} on term {}: {f}", r.term));
            }
            let rep = &r.report;
            if rep.status == RunStatus::Final && rep.peak_state_size > rep.term_size * (rep.length + 1) {
                return fail(format!("{id} on term {}: state size {} above |t0|(|rho|+1)", r.term, rep.peak_state_size));
            }
        }
        for r in &rest {
            let rep = &r.report;
            let budget = k * cost_budget(id, rep.term_size, rep.beta_count);
            if rep.cost_units > budget {
                return fail(format!("{id} on term {}: cost {} above {k}*budget = {budget}", r.term, rep.cost_units));
            }
        }
        details.push(format!("{id} c={k} on {} held-out runs", rest.len()));
    }
    details.sort();
    pass(format!("all transition bounds exact on every final run; total cost: {}", details.join(", ")))
}

fn criterion_6(mam_c: u64) -> Check {
    let started = Instant::now();
    let opts = RunOptions {
        fuel: 1_000_000,
        decode_cap: 0,
        ..RunOptions::default()
    };
    let mut prev: Option<(u64, f64)> = None;
    let mut ratios = Vec::new();
    for n in 6..=14 {
        let t = gen_family(FamilyKind::UI, n).unwrap();
        let (s, _, _) = run_machine(MachineId::Search, &t, &opts);
        let (m, _, _) = run_machine(MachineId::Mam, &t, &opts);
        let budget = mam_c * cost_budget(MachineId::Mam, m.term_size, m.beta_count);
        if m.cost_units > budget {
            return fail(format!("n={n}: MAM cost {} above {budget}", m.cost_units));
        }
        let ratio = s.cost_units as f64 / m.cost_units as f64;
        if let Some((prev_cost, prev_ratio)) = prev {
            if s.cost_units < 2 * prev_cost {
                return fail(format!("n={n}: searching cost {} less than double {prev_cost}", s.cost_units));
            }
            if ratio <= prev_ratio {
                return fail(format!("n={n}: ratio {ratio:.1} not above {prev_ratio:.1}"));
            }
        }
        prev = Some((s.cost_units, ratio));
        ratios.push(format!("{ratio:.0}"));
    }
    within(
        Duration::from_secs(30),
        started,
        pass(format!("searching cost doubles per n; cost ratios {}", ratios.join(" < "))),
    )
}

fn criterion_7(c: &Conformance) -> Check {
    for r in &c.runs[&MachineId::MamEff] {
        if r.violations.iter().any(|v| v.contains("no renaming entries")) {
            return fail(format!("term {}: renaming entry in the environment", r.term));
        }
    }
    let (mut plain_pts, mut eff_pts) = (Vec::new(), Vec::new());
    for n in 2..=64 {
        let t = gen_chain(n).unwrap();
        let opts = RunOptions {
            fuel: 1_000_000,
            decode_cap: 0,
            ..RunOptions::default()
        };
        let plain = run_with(&wham_core::mam::Mam::plain(), &t, &opts);
        let e = run_with(&wham_core::mam::Mam::efficient(), &t, &opts);
        if let Some((x, _)) = e.final_state.env.oldest_first().iter().find(|(_, c)| c.is_var()) {
            return fail(format!("chain {n}: entry for {x:?} is a renaming"));
        }
        plain_pts.push((f64::from(n), plain.report.tallies.varsub as f64));
        eff_pts.push((f64::from(n), e.report.tallies.varsub as f64));
    }
    let (a, b) = (loglog_slope(&plain_pts).unwrap(), loglog_slope(&eff_pts).unwrap());
    let detail = format!("VarSub log-log slope on chains: MAM {a:.2} (need >= 1.8), efficient {b:.2} (need <= 1.2)");
    if a >= 1.8 && b <= 1.2 {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Replays a backend and checks each transition's cost against an
/// independent computation on the state it starts from.
fn kam_costs<B: EnvBackend>(t: &Term, expected: impl Fn(&wham_core::kam::KamState<B>, Kind) -> u64) -> Result<(), String> {
    let m = Kam::<B>::new();
    let mut s = m.compile(t);
    for i in 0..FUEL {
        // computed before stepping, while the state holds the only handles
        let wants = Kind::ALL.map(|k| (k, expected(&s, k)));
        match m.step(s) {
            Step::Final(_) => return Ok(()),
            Step::Next(label, next) => {
                let want = wants.iter().find(|w| w.0 == label.kind).map_or(0, |w| w.1);
                if label.cost_units != want {
                    return Err(format!("{} transition {i} costs {} not {want}", label.kind, label.cost_units));
                }
                s = next;
            }
        }
    }
    Ok(())
}

fn criterion_8(c: &Conformance) -> Check {
    let (list, array, mam) = (
        &c.runs[&MachineId::KamList],
        &c.runs[&MachineId::KamArray],
        &c.runs[&MachineId::Mam],
    );
    let mut searches = 0u64;
    let mut env_total = 0u64;
    for ((l, a), m) in list.iter().zip(array).zip(mam) {
        let kinds = |r: &RunSummary| r.trace.iter().map(|x| x.0).collect::<Vec<_>>();
        if kinds(l) != kinds(a) {
            return fail(format!("term {}: backends disagree on the transition sequence", l.term));
        }
        if l.report.tallies != m.report.tallies {
            return fail(format!("term {}: KAM tallies {:?} vs MAM {:?}", l.term, l.report.tallies, m.report.tallies));
        }
        let t = &c.terms[l.term];
        let slots = (well_name(t).supply.peek() - 1).max(1) as u64;
        let list_costs = kam_costs::<SharedList>(t, |s, kind| match (kind, s.code.kind()) {
            (Kind::VarSub, TermKind::Var(x)) => {
                SharedList::bindings(&s.env).iter().position(|(y, _)| y == x).map_or(0, |p| p as u64 + 1)
            }
            _ => 1,
        });
        let array_costs = kam_costs::<CopiedArray>(t, |s, kind| match kind {
            Kind::Search => slots,
            Kind::Beta if std::rc::Rc::strong_count(&s.env) > 1 => slots,
            _ => 1,
        });
        if let Err(e) = list_costs {
            return fail(format!("term {} on the list backend: {e}", l.term));
        }
        if let Err(e) = array_costs {
            return fail(format!("term {} on the array backend: {e}", l.term));
        }
        for (kind, cost) in &a.trace {
            if *kind == Kind::Search {
                searches += 1;
                env_total += cost;
            }
        }
    }
    pass(format!(
        "identical traces and tallies; list: search 1, var = lookup depth; array: var 1, search = slot count (mean {:.1} slots per push)",
        env_total as f64 / searches.max(1) as f64
    ))
}

fn criterion_9() -> Check {
    let cap = 1 << 10;
    for n in 8..=14 {
        let t = gen_family(FamilyKind::UI, n).unwrap();
        let m = wham_core::mam::Mam::plain();
        let opts = RunOptions {
            fuel: 1_000_000,
            decode_cap: cap,
            ..RunOptions::default()
        };
        let e = run_with(&m, &t, &opts);
        let r = &e.report;
        let final_size = m.measure(&e.final_state).size;
        if final_size > r.term_size * (r.length + 1) {
            return fail(format!("n={n}: final state size {final_size} above |t0|(|rho|+1)"));
        }
        if r.decoded.is_some() {
            return fail(format!("n={n}: result was materialised above the cap"));
        }
        match m.decode(&e.final_state, cap) {
            Err(DecodeError::SizeCap { size, .. }) if size == r_size(n) => {}
            other => return fail(format!("n={n}: expected a cap notice for size {}, got {other:?}", r_size(n))),
        }
    }
    pass("final MAM states stay linear while decoding r_n reports the cap for n in 8..=14")
}

fn main() -> ExitCode {
    let handle = std::thread::Builder::new()
        .stack_size(STACK)
        .spawn(|| {
            rayon::ThreadPoolBuilder::new()
                .stack_size(STACK)
                .build_global()
                .expect("configure thread pool");
            let mut results = vec![(1, "family exactness", criterion_1()), (2, "strategy-independent family", criterion_2())];
            let conf = conformance_runs();
            results.push((3, "beta-matching", criterion_3(&conf)));
            results.push((4, "invariant suites", criterion_4(&conf)));
            results.push((5, "MAM bounds", criterion_5(&conf)));
            let mam_c = constants(&conf)[&MachineId::Mam].0;
            results.push((6, "unreasonableness separation", criterion_6(mam_c)));
            results.push((7, "efficient MAM", criterion_7(&conf)));
            results.push((8, "KAM backends", criterion_8(&conf)));
            results.push((9, "exponential-result sharing", criterion_9()));
            let mut ok = true;
            for (n, name, o) in results {
                ok &= o.pass;
                println!("criterion {n} ({name}): {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            }
            ok
        })
        .expect("spawn acceptance thread");
    if handle.join().unwrap_or(false) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
