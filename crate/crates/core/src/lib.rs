//! Privacy-audited distributed median consensus.
//!
//! Nodes of a connected graph each hold a private scalar and agree on the
//! median by running averaged PDMM (ADMM) on the L1 consensus problem
//!
//! ```text
//! minimize  sum_i |x_i - s_i|   subject to  x_i = x_j  for every edge (i, j)
//! ```
//!
//! Every round is recorded, and the [`privacy`] module audits the exact
//! zero-leakage condition on the recorded decision intervals: a node's value
//! stays hidden from passive and eavesdropping adversaries iff it never falls
//! inside its decision interval. The [`harness`] module scripts the standard
//! experiments (near-median and biased initialization, topology and
//! convergence-parameter sweeps).
//!
//! ```
//! use medcon::graph::ring;
//! use medcon::solver::{run, PrivateData, SolverConfig, ZState};
//! use medcon::privacy::audit;
//!
//! let g = ring(3)?;
//! let s = PrivateData::new(vec![1.0, 2.0, 3.0])?;
//! let trace = run(&g, &s, &SolverConfig::default(), ZState::zeros(&g))?;
//! assert!(trace.final_x().iter().all(|x| (x - 2.0).abs() < 1e-8));
//!
//! let report = audit(&trace, &s)?;
//! assert!(!report.nodes[1].secure); // the median holder broadcasts its value
//! # Ok::<(), medcon::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod oracle;
pub mod plot;
pub mod privacy;
pub mod solver;

pub use error::{Error, Result};

// Book chapters are compiled as doctests so their snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/topologies.md")]
    mod topologies {}
    #[doc = include_str!("../../../book/src/algorithm.md")]
    mod algorithm {}
    #[doc = include_str!("../../../book/src/privacy.md")]
    mod privacy {}
    #[doc = include_str!("../../../book/src/adversary.md")]
    mod adversary {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
