//! Averaged PDMM for the L1 median-consensus problem.
//!
//! Each node `i` minimizes `|x - s_i| + sum_j z_{i|j} A_ij x + (c d_i / 2) x^2`
//! per round. The minimizer is `s_i` clamped to the node's *decision
//! interval*
//!
//! ```text
//! [(-1 - zsum_i) / (c d_i), (1 - zsum_i) / (c d_i)],   zsum_i = sum_j A_ij z_{i|j}
//! ```
//!
//! after which every directed edge mixes in the neighbor's reply:
//!
//! ```text
//! z_{j|i} <- (1 - theta) z_{j|i} + theta (z_{i|j} + 2 c A_ij x_i)
//! ```
//!
//! Rounds are synchronous: all `x` are computed from `z(t)`, then all `z`
//! are updated from the same `z(t)`. `theta = 1/2` is the ADMM-equivalent
//! averaged variant; `theta = 1` is plain PDMM, which does not converge on
//! this objective.

pub mod identities;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_connected, sign, Graph};
use crate::oracle::MedianInterval;

/// Private measurements, one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateData(Vec<f64>);

impl PrivateData {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("s", format!("value at node {i} is not finite")));
        }
        Ok(PrivateData(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for PrivateData {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence parameter, `c > 0`.
    pub c: f64,
    /// Averaging constant in `(0, 1]`.
    pub theta: f64,
    /// Maximum number of rounds executed.
    pub t_max: usize,
    /// Early stop when both the max successive change in `x` and the spread
    /// `max x - min x` stay below this. Zero disables early stopping.
    pub stop_tol: f64,
    /// Consecutive quiet rounds required for the early stop.
    pub stop_patience: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 1.0,
            theta: 0.5,
            t_max: 500,
            stop_tol: 1e-10,
            stop_patience: 5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c", format!("must be positive and finite, got {}", self.c)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::invalid("theta", format!("must lie in (0, 1], got {}", self.theta)));
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max", "must be at least 1"));
        }
        if self.stop_tol.is_nan() || self.stop_tol < 0.0 {
            return Err(Error::invalid("stop_tol", format!("must be >= 0, got {}", self.stop_tol)));
        }
        if self.stop_patience == 0 {
            return Err(Error::invalid("stop_patience", "must be at least 1"));
        }
        Ok(())
    }
}

/// Auxiliary variables `z_{i|j}`, one per directed edge in the graph's
/// canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZState {
    values: Vec<f64>,
}

impl ZState {
    pub fn zeros(g: &Graph) -> Self {
        ZState {
            values: vec![0.0; g.num_directed_edges()],
        }
    }

    pub fn from_values(g: &Graph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.num_directed_edges() {
            return Err(Error::invalid(
                "z",
                format!(
                    "expected {} directed-edge values, got {}",
                    g.num_directed_edges(),
                    values.len()
                ),
            ));
        }
        Ok(ZState { values })
    }

    /// `z_{i|j}`, if `(i, j)` is an edge.
    pub fn get(&self, g: &Graph, i: usize, j: usize) -> Option<f64> {
        g.edge_index(i, j).map(|e| self.values[e])
    }

    pub fn set(&mut self, g: &Graph, i: usize, j: usize, value: f64) -> Result<()> {
        let e = g
            .edge_index(i, j)
            .ok_or_else(|| Error::invalid("z", format!("({i}, {j}) is not an edge")))?;
        self.values[e] = value;
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bitwise equality, treating `0.0` and `-0.0` as different.
    pub fn bits_eq(&self, other: &ZState) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Draws `z_{i|j}(0) ~ N(mu A_ij, sigma^2)` independently in canonical
/// directed-edge order.
pub fn init_z<R: Rng + ?Sized>(g: &Graph, mu: f64, sigma: f64, rng: &mut R) -> Result<ZState> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be finite and >= 0, got {sigma}")));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("mu", "must be finite"));
    }
    let values = g
        .directed_edges()
        .map(|(_, i, j)| {
            let mean = mu * sign(i, j);
            if sigma == 0.0 {
                mean
            } else {
                let n: f64 = StandardNormal.sample(rng);
                mean + sigma * n
            }
        })
        .collect();
    Ok(ZState { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionInterval {
    pub lo: f64,
    pub hi: f64,
}

impl DecisionInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Closed-interval membership.
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_strictly(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }
}

/// Sum `sum_{j in N_i} A_ij z_{i|j}`, accumulated in neighbor order.
pub fn zsum(i: usize, z: &ZState, g: &Graph) -> f64 {
    g.out_edges(i)
        .zip(g.neighbors(i))
        .map(|(e, &j)| sign(i, j) * z.values[e])
        .sum()
}

/// Decision interval of node `i` under the current `z`.
pub fn decision_interval(i: usize, z: &ZState, g: &Graph, c: f64) -> DecisionInterval {
    let zs = zsum(i, z, g);
    let scale = c * g.degree(i) as f64;
    DecisionInterval {
        lo: (-1.0 - zs) / scale,
        hi: (1.0 - zs) / scale,
    }
}

/// Closed-form x-update: `s` clamped to the decision interval. Returns `s`
/// itself (bitwise) when it lies in the closed interval.
pub fn x_update(s: f64, iv: DecisionInterval) -> f64 {
    if iv.lo > s {
        iv.lo
    } else if iv.hi < s {
        iv.hi
    } else {
        s
    }
}

/// Which case of the x-update fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `x = lo > s`.
    Lower,
    /// `x = s`: the private value was broadcast.
    Hold,
    /// `x = hi < s`.
    Upper,
}

impl Branch {
    pub fn of(s: f64, iv: DecisionInterval) -> Self {
        if iv.lo > s {
            Branch::Lower
        } else if iv.hi < s {
            Branch::Upper
        } else {
            Branch::Hold
        }
    }

    pub fn is_clamped(self) -> bool {
        self != Branch::Hold
    }
}

/// One synchronous z-round, all directed edges updated from the old state.
pub fn z_round(g: &Graph, z: &ZState, x: &[f64], c: f64, theta: f64) -> ZState {
    let keep = 1.0 - theta;
    let values = g
        .directed_edges()
        .map(|(e, j, i)| {
            // e is (j|i): node j's variable for the message from neighbor i.
            let reply = z.values[g.reverse(e)] + 2.0 * c * sign(i, j) * x[i];
            keep * z.values[e] + theta * reply
        })
        .collect();
    ZState { values }
}

/// Per-round record.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub t: usize,
    pub x: Vec<f64>,
    pub intervals: Vec<DecisionInterval>,
    /// `z(t)`, the state the round's intervals were computed from.
    pub z: ZState,
}

impl Round {
    pub fn branch(&self, node: usize, s: f64) -> Branch {
        Branch::of(s, self.intervals[node])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxRounds,
    Tolerance,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::MaxRounds => "t_max",
            StopReason::Tolerance => "tolerance",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub graph: Graph,
    pub config: SolverConfig,
    pub initial_z: ZState,
    pub rounds: Vec<Round>,
    /// `z` after the last executed round.
    pub final_z: ZState,
    pub stop_reason: StopReason,
}

impl RunTrace {
    /// Index of the last executed round.
    pub fn stopped_at(&self) -> usize {
        self.rounds.len() - 1
    }

    pub fn final_x(&self) -> &[f64] {
        &self.rounds.last().expect("a trace has at least one round").x
    }

    /// Full z history `z(0), ..., z(T)`, including the post-run state.
    pub fn z_history(&self) -> impl Iterator<Item = &ZState> {
        self.rounds.iter().map(|r| &r.z).chain(std::iter::once(&self.final_z))
    }
}

/// Resumable solver state between rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    /// Index of the next round to execute.
    pub t: usize,
    pub z: ZState,
    pub prev_x: Option<Vec<f64>>,
    /// Consecutive rounds with max |dx| below the stop tolerance.
    pub quiet: usize,
}

impl SolverState {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Round-by-round driver over a fixed graph and data set.
#[derive(Debug)]
pub struct Solver<'a> {
    graph: &'a Graph,
    data: &'a PrivateData,
    config: SolverConfig,
    initial_z: ZState,
    state: SolverState,
    rounds: Vec<Round>,
}

impl<'a> Solver<'a> {
    pub fn new(g: &'a Graph, s: &'a PrivateData, cfg: SolverConfig, z0: ZState) -> Result<Self> {
        let state = SolverState {
            t: 0,
            z: z0,
            prev_x: None,
            quiet: 0,
        };
        Self::resume(g, s, cfg, state)
    }

    /// Continues from a saved state. Rounds executed before the save are not
    /// part of the new solver's record.
    pub fn resume(g: &'a Graph, s: &'a PrivateData, cfg: SolverConfig, state: SolverState) -> Result<Self> {
        cfg.validate()?;
        if s.len() != g.n() {
            return Err(Error::invalid(
                "s",
                format!("{} values for a {}-node graph", s.len(), g.n()),
            ));
        }
        if !is_connected(g) {
            return Err(Error::invalid("graph", "consensus needs a connected graph"));
        }
        if state.z.values.len() != g.num_directed_edges() {
            return Err(Error::invalid("z0", "does not match the graph's directed edges"));
        }
        if let Some(e) = state.z.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("z0", format!("non-finite value on directed edge {e}")));
        }
        Ok(Solver {
            graph: g,
            data: s,
            config: cfg,
            initial_z: state.z.clone(),
            state,
            rounds: Vec::new(),
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        if self.state.quiet >= self.config.stop_patience {
            Some(StopReason::Tolerance)
        } else if self.state.t >= self.config.t_max {
            Some(StopReason::MaxRounds)
        } else {
            None
        }
    }

    /// Executes one round: intervals and x from `z(t)`, then the z-round.
    pub fn step(&mut self) -> Result<&Round> {
        let (g, cfg, t) = (self.graph, &self.config, self.state.t);
        let intervals: Vec<_> = (0..g.n())
            .map(|i| decision_interval(i, &self.state.z, g, cfg.c))
            .collect();
        let x: Vec<f64> = intervals
            .iter()
            .zip(self.data.values())
            .map(|(&iv, &s)| x_update(s, iv))
            .collect();
        if let Some(node) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericFailure { round: t, node });
        }
        let next_z = z_round(g, &self.state.z, &x, cfg.c, cfg.theta);
        if let Some(e) = next_z.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                round: t,
                node: g.directed_edge(e).0,
            });
        }

        if let Some(prev) = &self.state.prev_x {
            let change = prev
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            // A node holding x = s sits still while z keeps moving, so a quiet
            // round only counts once the nodes also agree.
            let (lo, hi) = x
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            if change < cfg.stop_tol && hi - lo < cfg.stop_tol {
                self.state.quiet += 1;
            } else {
                self.state.quiet = 0;
            }
        }

        let z = std::mem::replace(&mut self.state.z, next_z);
        self.state.prev_x = Some(x.clone());
        self.state.t += 1;
        self.rounds.push(Round { t, x, intervals, z });
        Ok(self.rounds.last().unwrap())
    }

    pub fn run_to_end(mut self) -> Result<RunTrace> {
        let stop_reason = loop {
            if let Some(reason) = self.stop_reason() {
                break reason;
            }
            self.step()?;
        };
        Ok(RunTrace {
            graph: self.graph.clone(),
            config: self.config,
            initial_z: self.initial_z,
            rounds: self.rounds,
            final_z: self.state.z,
            stop_reason,
        })
    }
}

/// Runs to `t_max` or the early-stop criterion and returns the full trace.
pub fn run(g: &Graph, s: &PrivateData, cfg: &SolverConfig, z0: ZState) -> Result<RunTrace> {
    Solver::new(g, s, cfg.clone(), z0)?.run_to_end()
}

/// Euclidean distance of `x` to the median interval.
pub fn convergence_error(x: &[f64], target: &MedianInterval) -> f64 {
    x.iter()
        .map(|&v| {
            let d = if v < target.lo {
                target.lo - v
            } else if v > target.hi {
                v - target.hi
            } else {
                0.0
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
