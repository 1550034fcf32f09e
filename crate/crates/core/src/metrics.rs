//! Overhead bounds as exact integer checks, and calibration of the
//! constant in the total-cost bound.

use std::fmt;

use crate::machine::harness::segments;
use crate::machine::{Kind, MachineId, RunReport, TraceRecord};

/// One inequality `lhs ≤ rhs` observed on a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: u64,
    pub rhs: u64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(name: &'static str, lhs: u64, rhs: u64) -> Self {
        BoundCheck {
            name,
            lhs,
            rhs,
            pass: lhs <= rhs,
        }
    }
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "pass" } else { "FAIL" };
        write!(f, "{}: {} <= {} {}", self.name, self.lhs, self.rhs, verdict)
    }
}

/// Exponent of `|t₀|` in a machine's total-cost bound: copying arrays on
/// every push makes the array KAM quadratic in the initial term.
pub fn size_exponent(machine: MachineId) -> u32 {
    match machine {
        MachineId::KamArray => 2,
        _ => 1,
    }
}

/// `|t₀|^p · (β² + 1)`, saturating.
pub fn cost_budget(machine: MachineId, t0_size: u64, beta: u64) -> u64 {
    t0_size
        .saturating_pow(size_exponent(machine))
        .saturating_mul(beta.saturating_mul(beta).saturating_add(1))
}

/// Global bounds for a finished run.
///
/// For machines related to the MAM: `|ρ|_var ≤ |ρ|_β²`,
/// `|ρ|_@l ≤ |t₀|·(|ρ|_var + 1)`, and with a calibrated constant `c`,
/// `cost ≤ c·|t₀|^p·(|ρ|_β² + 1)`. Other machines have no bound here.
pub fn check_bounds(report: &RunReport, t0_size: u64, c: Option<u64>) -> Vec<BoundCheck> {
    let m = report.machine;
    if !m.is_mam_family() {
        return Vec::new();
    }
    let beta = report.beta_count;
    let var = report.tallies.varsub;
    let mut out = vec![
        BoundCheck::new("var <= beta^2", var, beta.saturating_mul(beta)),
        BoundCheck::new(
            "search <= |t0|*(var+1)",
            report.tallies.search,
            t0_size.saturating_mul(var + 1),
        ),
    ];
    if let Some(c) = c {
        out.push(BoundCheck::new(
            "cost <= c*|t0|^p*(beta^2+1)",
            report.cost_units,
            c.saturating_mul(cost_budget(m, t0_size, beta)),
        ));
    }
    out
}

/// Local bounds read off a recorded trace.
///
/// Every β-free segment performs at most as many micro-substitutions as
/// there are environment entries at its start (global environment length;
/// for the KAM, the number of β-transitions so far), and every segment
/// without micro-substitutions has at most `|t₀|` transitions.
pub fn check_segments(machine: MachineId, trace: &[TraceRecord], t0_size: u64) -> Vec<BoundCheck> {
    if !machine.is_mam_family() {
        return Vec::new();
    }
    let mut worst_var = None::<BoundCheck>;
    for (start, len) in segments(trace, |k| !k.is_beta()) {
        let var = trace[start..start + len]
            .iter()
            .filter(|r| r.kind == Kind::VarSub)
            .count() as u64;
        let env = match machine {
            MachineId::KamList | MachineId::KamArray => trace[start].beta_before,
            _ => trace[start].before.env_len,
        };
        let check = BoundCheck::new("beta-free segment var <= |E|", var, env);
        if worst_var.as_ref().is_none_or(|w| w.pass && (!check.pass || var > w.lhs)) {
            worst_var = Some(check);
        }
    }
    let longest = segments(trace, |k| k != Kind::VarSub)
        .into_iter()
        .map(|(_, len)| len as u64)
        .max()
        .unwrap_or(0);
    let mut out: Vec<BoundCheck> = worst_var.into_iter().collect();
    out.push(BoundCheck::new("search/beta segment <= |t0|", longest, t0_size));
    out
}

/// Smallest `c` with `cost ≤ c·|t₀|^p·(β² + 1)` on every sample, where a
/// sample is `(|t₀|, β, cost)`.
pub fn calibrate(machine: MachineId, samples: &[(u64, u64, u64)]) -> u64 {
    samples
        .iter()
        .map(|&(size, beta, cost)| cost.div_ceil(cost_budget(machine, size, beta).max(1)))
        .max()
        .unwrap_or(1)
        .max(1)
}

/// Splits samples by initial-term size into the smallest third (used for
/// calibration) and the rest, keeping ties together on the calibration side.
pub fn tercile_split<T: Clone>(mut samples: Vec<T>, size: impl Fn(&T) -> u64) -> (Vec<T>, Vec<T>) {
    samples.sort_by_key(&size);
    if samples.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mut cut = samples.len() / 3;
    if cut == 0 {
        cut = 1;
    }
    let boundary = size(&samples[cut - 1]);
    while cut < samples.len() && size(&samples[cut]) == boundary {
        cut += 1;
    }
    let rest = samples.split_off(cut);
    (samples, rest)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = (0..n).map(|i| (xs[i] - mx) * (ys[i] - my)).sum();
    let sxx: f64 = (0..n).map(|i| (xs[i] - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `ln y` against `ln x`, skipping non-positive points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    slope(&xs, &ys)
}

/// Slope of `log₂ y` against `x`: about 1 when `y` doubles per unit of `x`.
pub fn semilog2_slope(points: &[(f64, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|(x, y)| (*x, y.log2()))
        .unzip();
    slope(&xs, &ys)
}
