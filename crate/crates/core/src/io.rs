//! CSV tables and key=value metadata sidecars.
//!
//! Floats are written in Rust's shortest round-trip form, so every table
//! reads back bit-exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::harness::{SweepCell, TrialRecord};
use crate::privacy::{AuditReport, LeakFinding};
use crate::solver::{PrivateData, RunTrace};

pub const TRACE_COLUMNS: &[&str] = &["t", "node", "x", "lo", "hi", "s_in_interval"];
pub const AUDIT_COLUMNS: &[&str] = &["node", "secure", "first_violation", "n_violations"];
pub const LEAK_COLUMNS: &[&str] = &["node", "round", "value", "boundary_ambiguous"];
pub const SWEEP_COLUMNS: &[&str] = &[
    "cell_label",
    "trial",
    "secure_count",
    "n",
    "secure_fraction",
    "final_error",
    "rounds_executed",
];
pub const SUMMARY_COLUMNS: &[&str] = &[
    "cell_label",
    "mean_secure_fraction",
    "std_secure_fraction",
    "mean_final_error",
    "trials",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub node: usize,
    pub x: f64,
    pub lo: f64,
    pub hi: f64,
    pub s_in_interval: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub node: usize,
    pub secure: bool,
    pub first_violation: Option<usize>,
    pub n_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakRow {
    pub node: usize,
    pub round: usize,
    pub value: f64,
    pub boundary_ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell_label: String,
    pub trial: u64,
    pub secure_count: usize,
    pub n: usize,
    pub secure_fraction: f64,
    pub final_error: f64,
    pub rounds_executed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell_label: String,
    pub mean_secure_fraction: f64,
    pub std_secure_fraction: f64,
    pub mean_final_error: f64,
    pub trials: usize,
}

impl From<&TrialRecord> for SweepRow {
    fn from(r: &TrialRecord) -> Self {
        SweepRow {
            cell_label: r.cell_label.clone(),
            trial: r.trial,
            secure_count: r.secure_count,
            n: r.n,
            secure_fraction: r.secure_fraction,
            final_error: r.final_error,
            rounds_executed: r.rounds_executed,
        }
    }
}

impl From<&SweepCell> for SummaryRow {
    fn from(c: &SweepCell) -> Self {
        SummaryRow {
            cell_label: c.label.clone(),
            mean_secure_fraction: c.mean_secure_fraction,
            std_secure_fraction: c.std_secure_fraction,
            mean_final_error: c.mean_final_error,
            trials: c.trials,
        }
    }
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Like [`write_rows`] but emits the header even for an empty table.
fn write_table<W: Write, T: Serialize>(w: W, columns: &[&str], rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(columns)?;
        writer.flush().map_err(csv::Error::from)?;
        return Ok(());
    }
    write_rows(w, rows)
}

/// Checks the header against `columns` exactly, naming the first mismatch.
fn check_header(context: &str, header: &csv::StringRecord, columns: &[&str]) -> Result<()> {
    for (k, want) in columns.iter().enumerate() {
        match header.get(k) {
            Some(got) if got == *want => {}
            Some(got) => {
                return Err(Error::parse(
                    context,
                    format!("column {k}: expected `{want}`, found `{got}`"),
                ))
            }
            None => return Err(Error::parse(context, format!("missing column `{want}`"))),
        }
    }
    if let Some(extra) = header.get(columns.len()) {
        return Err(Error::parse(context, format!("unexpected column `{extra}`")));
    }
    Ok(())
}

fn read_table<R: Read, T: DeserializeOwned>(r: R, context: &str, columns: &[&str]) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(r);
    check_header(context, reader.headers()?, columns)?;
    reader
        .deserialize()
        .enumerate()
        .map(|(k, row)| row.map_err(|e| Error::parse(context, format!("row {}: {e}", k + 1))))
        .collect()
}

/// Header of a CSV without consuming the rest; used to tell table kinds apart.
pub fn read_header(text: &str) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    Ok(reader.headers()?.iter().map(str::to_string).collect())
}

pub fn trace_rows(trace: &RunTrace, s: &PrivateData) -> Vec<TraceRow> {
    trace
        .rounds
        .iter()
        .flat_map(|round| {
            round.x.iter().zip(&round.intervals).enumerate().map(move |(node, (&x, iv))| TraceRow {
                t: round.t,
                node,
                x,
                lo: iv.lo,
                hi: iv.hi,
                s_in_interval: iv.contains(s[node]),
            })
        })
        .collect()
}

pub fn write_trace_csv<W: Write>(w: W, trace: &RunTrace, s: &PrivateData) -> Result<()> {
    write_table(w, TRACE_COLUMNS, &trace_rows(trace, s))
}

pub fn read_trace_csv<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    read_table(r, "trace csv", TRACE_COLUMNS)
}

pub fn audit_rows(report: &AuditReport) -> Vec<AuditRow> {
    report
        .nodes
        .iter()
        .map(|a| AuditRow {
            node: a.node,
            secure: a.secure,
            first_violation: a.first_violation,
            n_violations: a.violation_rounds.len(),
        })
        .collect()
}

pub fn write_audit_csv<W: Write>(w: W, report: &AuditReport) -> Result<()> {
    write_table(w, AUDIT_COLUMNS, &audit_rows(report))
}

pub fn read_audit_csv<R: Read>(r: R) -> Result<Vec<AuditRow>> {
    read_table(r, "audit csv", AUDIT_COLUMNS)
}

pub fn write_leaks_csv<W: Write>(w: W, leaks: &[LeakFinding]) -> Result<()> {
    let rows: Vec<LeakRow> = leaks
        .iter()
        .map(|l| LeakRow {
            node: l.node,
            round: l.round,
            value: l.value,
            boundary_ambiguous: l.boundary_ambiguous,
        })
        .collect();
    write_table(w, LEAK_COLUMNS, &rows)
}

pub fn read_leaks_csv<R: Read>(r: R) -> Result<Vec<LeakRow>> {
    read_table(r, "leaks csv", LEAK_COLUMNS)
}

pub fn write_sweep_csv<W: Write>(w: W, records: &[TrialRecord]) -> Result<()> {
    let rows: Vec<SweepRow> = records.iter().map(SweepRow::from).collect();
    write_table(w, SWEEP_COLUMNS, &rows)
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    read_table(r, "sweep csv", SWEEP_COLUMNS)
}

pub fn write_summary_csv<W: Write>(w: W, cells: &[SweepCell]) -> Result<()> {
    let rows: Vec<SummaryRow> = cells.iter().map(SummaryRow::from).collect();
    write_table(w, SUMMARY_COLUMNS, &rows)
}

pub fn read_summary_csv<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    read_table(r, "summary csv", SUMMARY_COLUMNS)
}

/// SHA-256 of the graph's edge-list text, hex encoded.
pub fn topology_hash(g: &Graph) -> String {
    hex::encode(Sha256::digest(g.to_edge_list().as_bytes()))
}

/// Flat `key = value` text with `#` comments. Keys are kept sorted so the
/// rendered file is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(BTreeMap<String, String>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    /// Floats use `{:?}`, which round-trips exactly.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, format!("{value:?}"));
    }

    pub fn set_f64_list(&mut self, key: &str, values: &[f64]) {
        let text: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        self.set(key, text.join(","));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::parse("metadata", format!("missing key `{key}`")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::parse("metadata", format!("`{key}` is not a number: {raw}")))
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::parse("metadata", format!("`{key}` has a bad entry: {v}")))
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_key_values(text).map(|pairs| Metadata(pairs.into_iter().collect()))
    }
}

/// Parses `key = value` lines, skipping blanks and `#` comments. Keeps file
/// order and rejects duplicate keys.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse("key=value", format!("line {}: no `=` in `{line}`", k + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse("key=value", format!("line {}: empty key", k + 1)));
        }
        if out.iter().any(|(existing, _)| existing == key) {
            return Err(Error::parse("key=value", format!("line {}: duplicate key `{key}`", k + 1)));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Sidecar for a single-run trace: solver config, topology hash, stop
/// reason and the values the median is measured against.
pub fn trace_metadata(trace: &RunTrace, solver_input: &PrivateData, true_s: &PrivateData) -> Result<Metadata> {
    let mut m = Metadata::new();
    let cfg = &trace.config;
    m.set("n", trace.graph.n());
    m.set("edges", trace.graph.edges().len());
    m.set("topology_sha256", topology_hash(&trace.graph));
    m.set_f64("c", cfg.c);
    m.set_f64("theta", cfg.theta);
    m.set("t_max", cfg.t_max);
    m.set_f64("stop_tol", cfg.stop_tol);
    m.set("stop_patience", cfg.stop_patience);
    m.set("stop_reason", trace.stop_reason);
    m.set("rounds_executed", trace.rounds.len());
    m.set_f64_list("s", true_s.values());
    m.set_f64_list("solver_input", solver_input.values());
    let target = crate::oracle::median_interval(true_s.values())?;
    m.set_f64("median_lo", target.lo);
    m.set_f64("median_hi", target.hi);
    Ok(m)
}
