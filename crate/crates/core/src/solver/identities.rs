//! Algebraic identities every averaged-PDMM trace must satisfy.
//!
//! These are checked against recorded traces, independently of the update
//! code: they only read `x`, the recorded intervals and the z history.

use super::{Branch, RunTrace};
use crate::error::{Error, Result};
use crate::graph::sign;
use crate::solver::PrivateData;

/// Outcome of one identity check over a trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdentityReport {
    /// Number of individual comparisons made.
    pub checked: usize,
    /// Human-readable description of each failing comparison.
    pub violations: Vec<String>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(detail());
        }
    }
}

fn require_half_averaging(trace: &RunTrace) -> Result<()> {
    if trace.config.theta != 0.5 {
        return Err(Error::invalid(
            "theta",
            format!("identity holds for theta = 1/2 only, trace has {}", trace.config.theta),
        ));
    }
    Ok(())
}

/// `x_i(t)` is bitwise `s_i` exactly when `s_i` lies in the closed interval.
pub fn branch_equivalence(trace: &RunTrace, s: &PrivateData) -> IdentityReport {
    let mut report = IdentityReport::default();
    for round in &trace.rounds {
        for (i, (&x, iv)) in round.x.iter().zip(&round.intervals).enumerate() {
            let held = x.to_bits() == s[i].to_bits();
            report.record(held == iv.contains(s[i]), || {
                format!("round {} node {i}: x={x} s={} iv=[{}, {}]", round.t, s[i], iv.lo, iv.hi)
            });
        }
    }
    report
}

/// Width `hi - lo` equals `2 / (c d_i)` to the given relative tolerance.
pub fn interval_width(trace: &RunTrace, rel_tol: f64) -> IdentityReport {
    let mut report = IdentityReport::default();
    let c = trace.config.c;
    for round in &trace.rounds {
        for (i, iv) in round.intervals.iter().enumerate() {
            let expected = 2.0 / (c * trace.graph.degree(i) as f64);
            let err = (iv.width() - expected).abs();
            report.record(err <= rel_tol * expected, || {
                format!("round {} node {i}: width {} vs {expected}", round.t, iv.width())
            });
        }
    }
    report
}

/// For `t >= 1`:
/// `z_{j|i}(t+1) - z_{j|i}(t) = c A_ij (x_i(t) - x_i(t-1)/2 - x_j(t-1)/2)`.
///
/// The tolerance is relative to the largest operand magnitude, since both
/// sides are differences of O(|z|) quantities.
pub fn z_difference(trace: &RunTrace, rel_tol: f64) -> Result<IdentityReport> {
    require_half_averaging(trace)?;
    let g = &trace.graph;
    let c = trace.config.c;
    let history: Vec<_> = trace.z_history().collect();
    let mut report = IdentityReport::default();
    for t in 1..trace.rounds.len() {
        let (x, x_prev) = (&trace.rounds[t].x, &trace.rounds[t - 1].x);
        let (z_next, z_now) = (history[t + 1].values(), history[t].values());
        for (e, j, i) in g.directed_edges() {
            let lhs = z_next[e] - z_now[e];
            let a = sign(i, j);
            let rhs = c * a * (x[i] - 0.5 * x_prev[i] - 0.5 * x_prev[j]);
            let scale = [z_next[e], z_now[e], c * x[i], c * x_prev[i], c * x_prev[j]]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            report.record((lhs - rhs).abs() <= rel_tol * scale, || {
                format!("t={t} edge ({j}|{i}): lhs {lhs} rhs {rhs}")
            });
        }
    }
    Ok(report)
}

/// For nodes whose updates at `t-1`, `t` and `t+1` all took a clamped
/// branch, the residual
/// `x_j(t+1) - x_j(t) - (1/d_j) sum_k (x_k(t) - x_k(t-1)/2 - x_j(t-1)/2)`
/// is one of `0` or `+-2 / (c d_j)`.
pub fn x_residual(trace: &RunTrace, s: &PrivateData, abs_tol: f64) -> Result<IdentityReport> {
    require_half_averaging(trace)?;
    let g = &trace.graph;
    let c = trace.config.c;
    let rounds = &trace.rounds;
    let mut report = IdentityReport::default();
    for t in 1..rounds.len().saturating_sub(1) {
        for j in 0..g.n() {
            let clamped = (t - 1..=t + 1).all(|u| rounds[u].branch(j, s[j]) != Branch::Hold);
            if !clamped {
                continue;
            }
            let d = g.degree(j) as f64;
            let (prev, now, next) = (&rounds[t - 1].x, &rounds[t].x, &rounds[t + 1].x);
            let drift: f64 = g
                .neighbors(j)
                .iter()
                .map(|&k| now[k] - 0.5 * prev[k] - 0.5 * prev[j])
                .sum::<f64>()
                / d;
            let residual = next[j] - now[j] - drift;
            let jump = 2.0 / (c * d);
            let ok = [0.0, jump, -jump]
                .iter()
                .any(|r| (residual - r).abs() <= abs_tol);
            report.record(ok, || format!("t={t} node {j}: residual {residual}, jump {jump}"));
        }
    }
    Ok(report)
}
