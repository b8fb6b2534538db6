//! Scripted experiments: single scenarios and multi-trial sweeps.
//!
//! Every random quantity in a trial comes from its own stream, seeded by
//! [`derive_seed`] from `(master_seed, trial, stream)`. Streams are
//! `"graph"`, `"data"`, `"zinit"` and `"dp"`, and they do not depend on the
//! sweep cell. Trial `t` therefore sees the same private data in every cell,
//! and in a c-sweep also the same graph and initial z.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{complete, rgg, ring, Graph, RggParams};
use crate::oracle::{median_interval, MedianInterval};
use crate::privacy::{adversary_reconstruct, audit, build_transcript, dp_perturb, AuditReport, LeakFinding};
use crate::solver::{convergence_error, identities, init_z, run, PrivateData, RunTrace, SolverConfig};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Times a sweep redraws a random geometric graph (each with its own full
/// retry budget) before giving up on a trial.
pub const GRAPH_REDRAWS: usize = 10;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer, a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial, per-stream seed:
///
/// ```text
/// base = mix64(master + fnv1a(stream))
/// seed = mix64(base ^ (trial * 0x9e3779b97f4a7c15))
/// ```
///
/// Both steps are bijections for a fixed master seed, so distinct streams
/// (with distinct FNV-1a hashes) and distinct trials never collide.
pub fn derive_seed(master_seed: u64, trial: u64, stream: &str) -> u64 {
    let base = mix64(master_seed.wrapping_add(fnv1a(stream.as_bytes())));
    mix64(base ^ trial.wrapping_mul(GOLDEN_GAMMA))
}

fn stream_rng(master_seed: u64, trial: u64, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial, stream))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Ring,
    Complete,
    /// Random geometric graph; `radius: None` uses the default radius.
    Rgg {
        radius: Option<f64>,
        max_retries: usize,
    },
    /// A graph supplied by the caller, reused for every trial.
    Fixed(Graph),
}

impl Topology {
    pub fn rgg_default() -> Self {
        Topology::Rgg {
            radius: None,
            max_retries: 100,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Topology::Ring => "ring",
            Topology::Complete => "complete",
            Topology::Rgg { .. } => "rgg",
            Topology::Fixed(_) => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Fixed(Vec<f64>),
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub n: usize,
    pub data: DataSource,
    /// Mean scale of the initial z draw, `z_{i|j}(0) ~ N(mu A_ij, sigma^2)`.
    pub mu: f64,
    pub sigma: f64,
    pub solver: SolverConfig,
    /// Standard deviation of the input offset; zero disables it.
    pub dp_sigma: f64,
    pub trials: usize,
    pub master_seed: u64,
}

impl ScenarioConfig {
    /// Five-node geometric graph started near the median: `mu = 0`,
    /// `sigma^2 = 1e-2`.
    pub fn near_median() -> Self {
        ScenarioConfig {
            topology: Topology::rgg_default(),
            n: 5,
            data: DataSource::StandardNormal,
            mu: 0.0,
            sigma: 0.1,
            solver: SolverConfig::default(),
            dp_sigma: 0.0,
            trials: 1,
            master_seed: 0,
        }
    }

    /// Far-off initialization, `mu = -10`, `sigma^2 = 1`, optionally with an
    /// input offset of variance `1e-2`.
    pub fn biased_init(dp: bool) -> Self {
        ScenarioConfig {
            mu: -10.0,
            sigma: 1.0,
            dp_sigma: if dp { 0.1 } else { 0.0 },
            ..Self::near_median()
        }
    }

    /// Base configuration for the sweeps: 15 nodes, 100 trials, near-median
    /// initialization.
    pub fn sweep_default() -> Self {
        ScenarioConfig {
            n: 15,
            trials: 100,
            ..Self::near_median()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be finite and >= 0, got {}", self.sigma)));
        }
        if !self.mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        if !(self.dp_sigma >= 0.0 && self.dp_sigma.is_finite()) {
            return Err(Error::invalid(
                "dp_sigma",
                format!("must be finite and >= 0, got {}", self.dp_sigma),
            ));
        }
        match &self.topology {
            Topology::Ring if self.n < 3 => {
                return Err(Error::invalid("n", format!("ring needs n >= 3, got {}", self.n)))
            }
            Topology::Fixed(g) if g.n() != self.n => {
                return Err(Error::invalid(
                    "n",
                    format!("topology file has {} nodes, config says {}", g.n(), self.n),
                ))
            }
            Topology::Rgg { radius, max_retries } => RggParams {
                n: self.n,
                radius: radius.unwrap_or(RggParams::default_radius(self.n)),
                max_retries: *max_retries,
            }
            .validate()?,
            _ if self.n < 2 => {
                return Err(Error::invalid("n", format!("need at least 2 nodes, got {}", self.n)))
            }
            _ => {}
        }
        if let DataSource::Fixed(s) = &self.data {
            if s.len() != self.n {
                return Err(Error::invalid(
                    "s",
                    format!("{} private values for {} nodes", s.len(), self.n),
                ));
            }
        }
        Ok(())
    }
}

/// Everything produced by one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub graph: Graph,
    /// Failed geometric-graph draws before this trial's graph.
    pub graph_redraws: usize,
    /// The nodes' true private values.
    pub s: PrivateData,
    /// What the solver actually ran on (`s` plus any input offset).
    pub solver_input: PrivateData,
    pub trace: RunTrace,
    pub audit: AuditReport,
    /// Eavesdropper reconstruction; empty when not requested.
    pub leaks: Vec<LeakFinding>,
    /// Median interval of the true values.
    pub target: MedianInterval,
    pub final_error: f64,
}

impl TrialOutcome {
    /// Mean of the final `x`; all nodes agree on it after convergence.
    pub fn consensus_value(&self) -> f64 {
        let x = self.trace.final_x();
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn build_graph(cfg: &ScenarioConfig, trial: u64) -> Result<(Graph, usize)> {
    match &cfg.topology {
        Topology::Ring => Ok((ring(cfg.n)?, 0)),
        Topology::Complete => Ok((complete(cfg.n)?, 0)),
        Topology::Fixed(g) => Ok((g.clone(), 0)),
        Topology::Rgg { radius, max_retries } => {
            let params = RggParams {
                n: cfg.n,
                radius: radius.unwrap_or(RggParams::default_radius(cfg.n)),
                max_retries: *max_retries,
            };
            let mut last = None;
            for redraw in 0..GRAPH_REDRAWS {
                let stream = if redraw == 0 {
                    "graph".to_string()
                } else {
                    format!("graph/{redraw}")
                };
                match rgg(&params, &mut stream_rng(cfg.master_seed, trial, &stream)) {
                    Ok(g) => return Ok((g, redraw)),
                    Err(e @ Error::GenerationFailure { .. }) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.unwrap())
        }
    }
}

fn draw_data(cfg: &ScenarioConfig, trial: u64) -> Result<PrivateData> {
    match &cfg.data {
        DataSource::Fixed(s) => PrivateData::new(s.clone()),
        DataSource::StandardNormal => {
            let mut rng = stream_rng(cfg.master_seed, trial, "data");
            PrivateData::new((0..cfg.n).map(|_| StandardNormal.sample(&mut rng)).collect())
        }
    }
}

/// Runs trial `trial` of `cfg`. With `with_leaks`, also runs the
/// eavesdropping adversary over the trial's transcript.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64, with_leaks: bool) -> Result<TrialOutcome> {
    cfg.validate()?;
    let (graph, graph_redraws) = build_graph(cfg, trial)?;
    let s = draw_data(cfg, trial)?;
    let solver_input = dp_perturb(&s, cfg.dp_sigma, &mut stream_rng(cfg.master_seed, trial, "dp"))?;
    let z0 = init_z(&graph, cfg.mu, cfg.sigma, &mut stream_rng(cfg.master_seed, trial, "zinit"))?;
    let trace = run(&graph, &solver_input, &cfg.solver, z0)?;
    // The audit concerns the value the node actually fed into the protocol.
    let report = audit(&trace, &solver_input)?;
    let leaks = if with_leaks {
        let transcript = build_transcript(&trace, &solver_input, &BTreeSet::new())?;
        adversary_reconstruct(&transcript, &graph, cfg.solver.c, cfg.solver.theta)?
    } else {
        Vec::new()
    };
    let target = median_interval(s.values())?;
    let final_error = convergence_error(trace.final_x(), &target);
    Ok(TrialOutcome {
        trial,
        graph,
        graph_redraws,
        s,
        solver_input,
        trace,
        audit: report,
        leaks,
        target,
        final_error,
    })
}

/// Single-run scenario (trial 0) with the adversary's reconstruction.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<TrialOutcome> {
    run_trial(cfg, 0, true)
}

/// Near-median scenario with the preset defaults and the given seed.
pub fn scenario_near_median(master_seed: u64) -> Result<TrialOutcome> {
    run_scenario(&ScenarioConfig {
        master_seed,
        ..ScenarioConfig::near_median()
    })
}

/// Biased-initialization scenario, optionally with the input offset.
pub fn scenario_biased_init(dp: bool, master_seed: u64) -> Result<TrialOutcome> {
    run_scenario(&ScenarioConfig {
        master_seed,
        ..ScenarioConfig::biased_init(dp)
    })
}

/// One row of the per-trial sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub cell_label: String,
    pub trial: u64,
    pub secure_count: usize,
    pub n: usize,
    pub secure_fraction: f64,
    pub final_error: f64,
    pub rounds_executed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub label: String,
    pub mean_secure_fraction: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_secure_fraction: f64,
    pub mean_final_error: f64,
    pub trials: usize,
    pub graph_redraws: usize,
}

impl SweepCell {
    /// Standard error of the mean secure fraction.
    pub fn standard_error(&self) -> f64 {
        self.std_secure_fraction / (self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    /// Per-trial rows, grouped by cell and sorted by trial id.
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn cell(&self, label: &str) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.label == label)
    }
}

/// Checks the branch, width and (for `theta = 1/2`) z-difference identities.
pub fn check_trace_invariants(outcome: &TrialOutcome) -> Result<()> {
    let trace = &outcome.trace;
    let fail = |invariant, report: identities::IdentityReport| -> Result<()> {
        match report.violations.first() {
            None => Ok(()),
            Some(detail) => Err(Error::InvariantViolation {
                invariant,
                trial: outcome.trial,
                detail: detail.clone(),
            }),
        }
    };
    fail(
        "branch equivalence",
        identities::branch_equivalence(trace, &outcome.solver_input),
    )?;
    fail("interval width", identities::interval_width(trace, 1e-12))?;
    if trace.config.theta == 0.5 {
        fail("z difference", identities::z_difference(trace, 1e-9)?)?;
    }
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_cell(label: &str, cfg: &ScenarioConfig) -> Result<(SweepCell, Vec<TrialRecord>)> {
    cfg.validate()?;
    let outcomes: Vec<(TrialRecord, usize)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let outcome = run_trial(cfg, trial, false)?;
            // Sample every tenth trial for the full identity suite.
            if trial % 10 == 0 {
                check_trace_invariants(&outcome)?;
            }
            let n = outcome.graph.n();
            let secure_count = outcome.audit.secure_count();
            Ok((
                TrialRecord {
                    cell_label: label.to_string(),
                    trial,
                    secure_count,
                    n,
                    secure_fraction: secure_count as f64 / n as f64,
                    final_error: outcome.final_error,
                    rounds_executed: outcome.trace.rounds.len(),
                },
                outcome.graph_redraws,
            ))
        })
        .collect::<Result<_>>()?;

    let fractions: Vec<f64> = outcomes.iter().map(|(r, _)| r.secure_fraction).collect();
    let errors: Vec<f64> = outcomes.iter().map(|(r, _)| r.final_error).collect();
    let (mean, std) = mean_std(&fractions);
    let cell = SweepCell {
        label: label.to_string(),
        mean_secure_fraction: mean,
        std_secure_fraction: std,
        mean_final_error: mean_std(&errors).0,
        trials: outcomes.len(),
        graph_redraws: outcomes.iter().map(|(_, k)| k).sum(),
    };
    Ok((cell, outcomes.into_iter().map(|(r, _)| r).collect()))
}

fn run_cells(cells: Vec<(String, ScenarioConfig)>, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    pool.install(|| {
        let mut result = SweepResult {
            cells: Vec::new(),
            records: Vec::new(),
        };
        for (label, cfg) in &cells {
            let (cell, records) = run_cell(label, cfg)?;
            result.cells.push(cell);
            result.records.extend(records);
        }
        Ok(result)
    })
}

/// Ring, geometric and complete graphs on `cfg.n` nodes. The geometric cell
/// uses `cfg.topology`'s radius when it is a geometric graph, else the
/// default.
pub fn sweep_topology(cfg: &ScenarioConfig, workers: usize) -> Result<SweepResult> {
    let rgg_topology = match &cfg.topology {
        t @ Topology::Rgg { .. } => t.clone(),
        _ => Topology::rgg_default(),
    };
    let cells = [Topology::Ring, rgg_topology, Topology::Complete]
        .into_iter()
        .map(|topology| {
            (
                topology.label().to_string(),
                ScenarioConfig {
                    topology,
                    ..cfg.clone()
                },
            )
        })
        .collect();
    run_cells(cells, workers)
}

/// One cell per convergence parameter, all on `cfg.topology`.
pub fn sweep_c(values: &[f64], cfg: &ScenarioConfig, workers: usize) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::invalid("values", "need at least one c value"));
    }
    if let Some(bad) = values.iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::invalid("values", format!("c must be positive, got {bad}")));
    }
    let cells = values
        .iter()
        .map(|&c| {
            let mut cell_cfg = cfg.clone();
            cell_cfg.solver.c = c;
            (format!("c={c}"), cell_cfg)
        })
        .collect();
    run_cells(cells, workers)
}
