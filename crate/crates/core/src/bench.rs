//! Grid runs of machines over term families, with growth-rate fits.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::family::{gen_family, FamilyError, FamilyKind};
use crate::machine::{run_machine, MachineId, RunOptions, RunReport, RunStatus, Tallies};
use crate::metrics::{loglog_slope, semilog2_slope};
use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub machine: MachineId,
    pub family: String,
    pub n: u32,
    pub term_size: u64,
    pub tallies: Tallies,
    pub cost_units: u64,
    pub peak_state: u64,
    pub wall_ns: u64,
    pub status: RunStatus,
}

impl BenchRow {
    pub fn from_report(family: &str, n: u32, r: &RunReport, wall_ns: u64) -> Self {
        BenchRow {
            machine: r.machine,
            family: family.to_string(),
            n,
            term_size: r.term_size,
            tallies: r.tallies,
            cost_units: r.cost_units,
            peak_state: r.peak_state_size,
            wall_ns,
            status: r.status,
        }
    }

    /// Row flagged as not having reached a final state.
    pub fn is_flagged(&self) -> bool {
        self.status != RunStatus::Final
    }

    /// The row without its timing field, for reproducibility checks.
    pub fn deterministic_part(&self) -> BenchRow {
        BenchRow {
            wall_ns: 0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub families: Vec<FamilyKind>,
    pub machines: Vec<MachineId>,
    pub n_min: u32,
    pub n_max: u32,
    pub fuel: u64,
}

fn measure(machine: MachineId, family: &str, n: u32, t: &Term, fuel: u64) -> BenchRow {
    // results are not decoded: only costs matter here
    let opts = RunOptions {
        fuel,
        decode_cap: 0,
        ..RunOptions::default()
    };
    let start = Instant::now();
    let (report, _, _) = run_machine(machine, t, &opts);
    let wall = start.elapsed().as_nanos() as u64;
    BenchRow::from_report(family, n, &report, wall)
}

/// Runs every (machine, family, n) combination, concurrently, and returns
/// the rows sorted by machine, family and n. Family members that cannot be
/// materialised are skipped.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, FamilyError> {
    let mut jobs = Vec::new();
    for &family in &cfg.families {
        for n in cfg.n_min..=cfg.n_max {
            let t = match gen_family(family, n) {
                Ok(t) => t,
                Err(FamilyError::OutOfRange { .. }) => continue,
                Err(e) => return Err(e),
            };
            for &machine in &cfg.machines {
                jobs.push((machine, family, n, t.clone()));
            }
        }
    }
    let mut rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|(machine, family, n, t)| measure(*machine, family.name(), *n, t, cfg.fuel))
        .collect();
    sort_rows(&mut rows);
    Ok(rows)
}

/// Runs machines over arbitrary terms, reported under family `corpus` with
/// `n` the term's index.
pub fn bench_terms(machines: &[MachineId], terms: &[Term], fuel: u64) -> Vec<BenchRow> {
    let jobs: Vec<(MachineId, usize)> = machines
        .iter()
        .flat_map(|&m| (0..terms.len()).map(move |i| (m, i)))
        .collect();
    let mut rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(m, i)| measure(m, "corpus", i as u32, &terms[i], fuel))
        .collect();
    sort_rows(&mut rows);
    rows
}

pub fn sort_rows(rows: &mut [BenchRow]) {
    rows.sort_by(|a, b| (a.machine, &a.family, a.n).cmp(&(b.machine, &b.family, b.n)));
}

/// Growth of `cost_units` with `n` for one machine on one family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub machine: MachineId,
    pub family: String,
    pub points: usize,
    /// Exponent `k` of a fit `cost ≈ n^k`.
    pub loglog: Option<f64>,
    /// Rate `r` of a fit `cost ≈ 2^(r·n)`.
    pub semilog2: Option<f64>,
}

/// Fits over the Final rows of each (machine, family) group.
pub fn fit_slopes(rows: &[BenchRow]) -> Vec<SlopeFit> {
    fit_slopes_by(rows, |r| r.cost_units)
}

/// Like [`fit_slopes`] with a chosen measurement.
pub fn fit_slopes_by(rows: &[BenchRow], value: impl Fn(&BenchRow) -> u64) -> Vec<SlopeFit> {
    let mut groups: Vec<(MachineId, String)> = rows.iter().map(|r| (r.machine, r.family.clone())).collect();
    groups.sort();
    groups.dedup();
    groups
        .into_iter()
        .map(|(machine, family)| {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.machine == machine && r.family == family && !r.is_flagged())
                .map(|r| (f64::from(r.n), value(r) as f64))
                .collect();
            SlopeFit {
                machine,
                family,
                points: points.len(),
                loglog: loglog_slope(&points),
                semilog2: semilog2_slope(&points),
            }
        })
        .collect()
}
