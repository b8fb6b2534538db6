//! Zero-leakage audit and adversary simulation.
//!
//! An honest node leaks nothing about its private value exactly when that
//! value stays outside its decision interval in every executed round.
//! Equivalently, it never broadcasts `x_i = s_i`. When it does, an adversary
//! that tracks the z recursion from the initial messages and the broadcasts
//! can recompute the interval and read `s_i` off the wire.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::solver::{decision_interval, z_round, PrivateData, RunTrace, ZState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAudit {
    pub node: usize,
    pub secure: bool,
    pub first_violation: Option<usize>,
    /// Rounds in which `s_i` was inside the closed decision interval.
    pub violation_rounds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub nodes: Vec<NodeAudit>,
}

impl AuditReport {
    pub fn secure_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.secure).count()
    }

    pub fn secure_set(&self) -> BTreeSet<usize> {
        self.nodes.iter().filter(|n| n.secure).map(|n| n.node).collect()
    }
}

pub fn audit(trace: &RunTrace, s: &PrivateData) -> Result<AuditReport> {
    if s.len() != trace.graph.n() {
        return Err(Error::invalid("s", "length does not match the trace's graph"));
    }
    let nodes = (0..s.len())
        .map(|i| {
            let violation_rounds: Vec<usize> = trace
                .rounds
                .iter()
                .filter(|r| r.intervals[i].contains(s[i]))
                .map(|r| r.t)
                .collect();
            NodeAudit {
                node: i,
                secure: violation_rounds.is_empty(),
                first_violation: violation_rounds.first().copied(),
                violation_rounds,
            }
        })
        .collect();
    Ok(AuditReport { nodes })
}

/// Fraction of all nodes (median holder included) that stayed secure.
pub fn secure_fraction(report: &AuditReport) -> f64 {
    assert!(!report.nodes.is_empty(), "empty audit report");
    report.secure_count() as f64 / report.nodes.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Broadcast {
    pub t: usize,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptNode {
    pub node: usize,
    pub s: f64,
    /// `z_{j|k}(t)` for every neighbor `k`, in neighbor order, for every
    /// round of the run plus the final state.
    pub z_history: Vec<Vec<f64>>,
}

/// Everything the adversaries see: the initial z messages and every x
/// broadcast on the channels, plus the internals of corrupt nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub initial_z: ZState,
    pub broadcasts: Vec<Broadcast>,
    pub corrupt_set: BTreeSet<usize>,
    pub corrupt_internals: Vec<CorruptNode>,
}

pub fn build_transcript(
    trace: &RunTrace,
    s: &PrivateData,
    corrupt_set: &BTreeSet<usize>,
) -> Result<Transcript> {
    let g = &trace.graph;
    if let Some(&bad) = corrupt_set.iter().find(|&&j| j >= g.n()) {
        return Err(Error::invalid("corrupt_set", format!("node {bad} not in graph")));
    }
    let corrupt_internals = corrupt_set
        .iter()
        .map(|&j| CorruptNode {
            node: j,
            s: s[j],
            z_history: trace
                .z_history()
                .map(|z| g.out_edges(j).map(|e| z.values()[e]).collect())
                .collect(),
        })
        .collect();
    Ok(Transcript {
        initial_z: trace.initial_z.clone(),
        broadcasts: trace
            .rounds
            .iter()
            .map(|r| Broadcast {
                t: r.t,
                x: r.x.clone(),
            })
            .collect(),
        corrupt_set: corrupt_set.clone(),
        corrupt_internals,
    })
}

/// Replays the z recursion from the transcript alone. Returns
/// `z(0), ..., z(k)` for a transcript holding `k` broadcast rounds.
pub fn track_z(transcript: &Transcript, g: &Graph, c: f64, theta: f64) -> Result<Vec<ZState>> {
    if transcript.initial_z.values().len() != g.num_directed_edges() {
        return Err(Error::IncompleteTranscript(
            "initial z does not cover every directed edge".into(),
        ));
    }
    let mut history = Vec::with_capacity(transcript.broadcasts.len() + 1);
    history.push(transcript.initial_z.clone());
    for (expected, b) in transcript.broadcasts.iter().enumerate() {
        if b.t != expected {
            return Err(Error::IncompleteTranscript(format!(
                "expected broadcast round {expected}, found {}",
                b.t
            )));
        }
        if b.x.len() != g.n() {
            return Err(Error::IncompleteTranscript(format!(
                "round {} has {} of {} broadcasts",
                b.t,
                b.x.len(),
                g.n()
            )));
        }
        let next = z_round(g, history.last().unwrap(), &b.x, c, theta);
        history.push(next);
    }
    Ok(history)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakFinding {
    pub node: usize,
    pub round: usize,
    pub value: f64,
    /// The broadcast sat on an interval endpoint, so it may be a clamp
    /// rather than the private value.
    pub boundary_ambiguous: bool,
}

/// Recomputes each node's decision interval from the tracked z and flags
/// broadcasts that can only be the private value (strict interior) or might
/// be (endpoint).
pub fn adversary_reconstruct(
    transcript: &Transcript,
    g: &Graph,
    c: f64,
    theta: f64,
) -> Result<Vec<LeakFinding>> {
    let history = track_z(transcript, g, c, theta)?;
    let mut findings = Vec::new();
    for (b, z) in transcript.broadcasts.iter().zip(&history) {
        for (i, &x) in b.x.iter().enumerate() {
            let iv = decision_interval(i, z, g, c);
            if iv.contains_strictly(x) {
                findings.push(LeakFinding {
                    node: i,
                    round: b.t,
                    value: x,
                    boundary_ambiguous: false,
                });
            } else if x == iv.lo || x == iv.hi {
                findings.push(LeakFinding {
                    node: i,
                    round: b.t,
                    value: x,
                    boundary_ambiguous: true,
                });
            }
        }
    }
    Ok(findings)
}

/// Adds `N(0, sigma_dp^2)` to every private value once, before the run.
pub fn dp_perturb<R: Rng + ?Sized>(s: &PrivateData, sigma_dp: f64, rng: &mut R) -> Result<PrivateData> {
    if !(sigma_dp >= 0.0 && sigma_dp.is_finite()) {
        return Err(Error::invalid("dp_sigma", format!("must be finite and >= 0, got {sigma_dp}")));
    }
    if sigma_dp == 0.0 {
        return Ok(s.clone());
    }
    let noisy = s
        .values()
        .iter()
        .map(|&v| {
            let n: f64 = StandardNormal.sample(rng);
            v + sigma_dp * n
        })
        .collect();
    PrivateData::new(noisy)
}
