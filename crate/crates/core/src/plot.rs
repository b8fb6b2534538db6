//! Standalone SVG charts for traces and sweep tables.
//!
//! Output is plain SVG 1.1 on a fixed 800x500 view box with no external
//! assets. Coordinates are printed with two decimals, so the same input
//! always gives the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::{self, Metadata, SummaryRow, TraceRow};
use crate::oracle::MedianInterval;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
/// Errors below this are drawn at the floor of the log axis.
const LOG_FLOOR: f64 = 1e-16;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Convergence,
    PerNodeX,
    SweepBars,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Convergence => "convergence",
            PlotKind::PerNodeX => "per-node-x",
            PlotKind::SweepBars => "sweep-bars",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(PlotKind::Convergence),
            "per-node-x" => Ok(PlotKind::PerNodeX),
            "sweep-bars" => Ok(PlotKind::SweepBars),
            other => Err(Error::parse("plot kind", format!("unknown kind `{other}`"))),
        }
    }
}

/// `out/run_7_trace.csv` -> `out/run_7_meta.txt`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let base = stem.strip_suffix("_trace").unwrap_or(stem);
    csv_path.with_file_name(format!("{base}_meta.txt"))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads `csv_path` (and, for trace plots, its metadata sidecar) and
/// renders the requested chart.
pub fn plot_file(csv_path: &Path, kind: PlotKind) -> Result<String> {
    let text = read_text(csv_path)?;
    match kind {
        PlotKind::Convergence | PlotKind::PerNodeX => {
            let rows = io::read_trace_csv(text.as_bytes())?;
            let meta = Metadata::parse(&read_text(&sidecar_path(csv_path))?)?;
            if kind == PlotKind::Convergence {
                convergence_svg(&rows, &meta)
            } else {
                per_node_svg(&rows, &meta)
            }
        }
        PlotKind::SweepBars => sweep_bars_svg(&summary_from_csv(&text)?),
    }
}

/// Accepts either a summary table or a per-trial sweep table, which is
/// aggregated per cell in order of first appearance.
pub fn summary_from_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let header = io::read_header(text)?;
    if header.iter().any(|h| h == "mean_secure_fraction") {
        return io::read_summary_csv(text.as_bytes());
    }
    let rows = io::read_sweep_csv(text.as_bytes())?;
    let mut labels: Vec<&str> = Vec::new();
    for r in &rows {
        if !labels.contains(&r.cell_label.as_str()) {
            labels.push(&r.cell_label);
        }
    }
    Ok(labels
        .into_iter()
        .map(|label| {
            let cell: Vec<_> = rows.iter().filter(|r| r.cell_label == label).collect();
            let k = cell.len() as f64;
            let mean = cell.iter().map(|r| r.secure_fraction).sum::<f64>() / k;
            let std = if cell.len() < 2 {
                0.0
            } else {
                (cell.iter().map(|r| (r.secure_fraction - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            };
            SummaryRow {
                cell_label: label.to_string(),
                mean_secure_fraction: mean,
                std_secure_fraction: std,
                mean_final_error: cell.iter().map(|r| r.final_error).sum::<f64>() / k,
                trials: cell.len(),
            }
        })
        .collect())
}

/// Groups trace rows into per-round `x` vectors, checking that every round
/// has the same node set `0..n`.
fn rounds_of(rows: &[TraceRow]) -> Result<Vec<Vec<f64>>> {
    let mut rounds: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        if row.t == rounds.len() {
            rounds.push(Vec::new());
        }
        if row.t + 1 != rounds.len() {
            return Err(Error::parse("trace csv", format!("rounds out of order at t={}", row.t)));
        }
        let round = rounds.last_mut().expect("just checked");
        if row.node != round.len() {
            return Err(Error::parse(
                "trace csv",
                format!("round {}: expected node {}, found {}", row.t, round.len(), row.node),
            ));
        }
        round.push(row.x);
    }
    if rounds.is_empty() {
        return Err(Error::parse("trace csv", "no rows"));
    }
    let n = rounds[0].len();
    if let Some(t) = rounds.iter().position(|r| r.len() != n) {
        return Err(Error::parse("trace csv", format!("round {t} has a different node count")));
    }
    Ok(rounds)
}

/// Euclidean distance of each round's `x` to the median interval.
pub fn convergence_errors(rows: &[TraceRow], target: &MedianInterval) -> Result<Vec<f64>> {
    Ok(rounds_of(rows)?
        .iter()
        .map(|x| x.iter().map(|&v| target.distance(v).powi(2)).sum::<f64>().sqrt())
        .collect())
}

struct Frame {
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        HEIGHT - BOTTOM - (y - a) / (b - a) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open_svg(title: &str, x_label: &str, y_label: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    svg
}

fn close_svg(mut svg: String) -> String {
    svg.push_str("</svg>\n");
    svg
}

fn y_tick(svg: &mut String, frame: &Frame, y: f64, label: &str) {
    let py = frame.py(y);
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
        LEFT - 5.0,
        LEFT - 8.0,
        py + 4.0
    );
}

fn x_tick(svg: &mut String, frame: &Frame, x: f64, label: &str) {
    let px = frame.px(x);
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(
        svg,
        r##"<line x1="{px:.2}" y1="{base:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
        base + 5.0,
        base + 20.0,
        escape(label)
    );
}

/// Up to ~8 round-number ticks covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn round_ticks(svg: &mut String, frame: &Frame, rounds: usize) {
    for t in nice_ticks(0.0, (rounds.max(2) - 1) as f64) {
        x_tick(svg, frame, t, &format!("{t}"));
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, color: &str, extra: &str) -> String {
    let pts: Vec<String> = points.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>"#,
        pts.join(" ")
    )
}

pub fn convergence_svg(rows: &[TraceRow], meta: &Metadata) -> Result<String> {
    let target = MedianInterval {
        lo: meta.get_f64("median_lo")?,
        hi: meta.get_f64("median_hi")?,
    };
    let errors = convergence_errors(rows, &target)?;
    let logs: Vec<f64> = errors.iter().map(|e| e.max(LOG_FLOOR).log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil().max(lo + 1.0);
    let frame = Frame {
        x_range: (0.0, (errors.len().max(2) - 1) as f64),
        y_range: (lo, hi),
    };
    let mut svg = open_svg("Convergence error", "round", "distance to median (log scale)");
    let decades = (hi - lo) as i64;
    let stride = (decades / 8 + 1) as usize;
    for k in (lo as i64..=hi as i64).step_by(stride) {
        y_tick(&mut svg, &frame, k as f64, &format!("1e{k}"));
    }
    round_ticks(&mut svg, &frame, errors.len());
    let line = polyline(
        logs.iter().enumerate().map(|(t, &y)| (frame.px(t as f64), frame.py(y))),
        PALETTE[0],
        "",
    );
    let _ = writeln!(svg, "{line}");
    Ok(close_svg(svg))
}

pub fn per_node_svg(rows: &[TraceRow], meta: &Metadata) -> Result<String> {
    let rounds = rounds_of(rows)?;
    let n = rounds[0].len();
    let s = meta.get_f64_list("solver_input")?;
    if s.len() != n {
        return Err(Error::parse(
            "metadata",
            format!("`solver_input` has {} values for {n} nodes", s.len()),
        ));
    }
    let all = rounds.iter().flatten().chain(&s);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.05).max(1e-3);
    let frame = Frame {
        x_range: (0.0, (rounds.len().max(2) - 1) as f64),
        y_range: (lo - pad, hi + pad),
    };
    let mut svg = open_svg("Per-node estimates", "round", "x");
    for y in nice_ticks(lo - pad, hi + pad) {
        y_tick(&mut svg, &frame, y, &format!("{}", (y * 1e6).round() / 1e6));
    }
    round_ticks(&mut svg, &frame, rounds.len());
    let x_end = frame.px(frame.x_range.1);
    for (i, &si) in s.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let sy = frame.py(si);
        let _ = writeln!(
            svg,
            r#"<line x1="{LEFT}" y1="{sy:.2}" x2="{x_end:.2}" y2="{sy:.2}" stroke="{color}" stroke-dasharray="4 3" stroke-opacity="0.7"/>"#
        );
        let line = polyline(
            rounds.iter().enumerate().map(|(t, x)| (frame.px(t as f64), frame.py(x[i]))),
            color,
            "",
        );
        let _ = writeln!(svg, "{line}");
        let ly = TOP + 12.0 + 16.0 * i as f64;
        if ly < HEIGHT - BOTTOM {
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">s{i} = {:.4}</text>"#,
                x_end + 10.0,
                ly - 4.0,
                x_end + 30.0,
                ly - 4.0,
                x_end + 35.0,
                ly,
                si
            );
        }
    }
    Ok(close_svg(svg))
}

pub fn sweep_bars_svg(cells: &[SummaryRow]) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::parse("sweep csv", "no cells to plot"));
    }
    let top = cells
        .iter()
        .map(|c| c.mean_secure_fraction + c.std_secure_fraction)
        .fold(1.0f64, f64::max);
    let k = cells.len() as f64;
    let frame = Frame {
        x_range: (0.0, k),
        y_range: (0.0, top),
    };
    let mut svg = open_svg("Proportion of secure nodes", "cell", "mean secure fraction");
    for y in nice_ticks(0.0, top) {
        y_tick(&mut svg, &frame, y, &format!("{}", (y * 100.0).round() / 100.0));
    }
    let slot = frame.px(1.0) - frame.px(0.0);
    for (j, cell) in cells.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let center = j as f64 + 0.5;
        let x0 = frame.px(center) - 0.3 * slot;
        let y0 = frame.py(cell.mean_secure_fraction);
        let _ = writeln!(
            svg,
            r#"<rect class="bar" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.8"/>"#,
            0.6 * slot,
            frame.py(0.0) - y0
        );
        let (wlo, whi) = (
            (cell.mean_secure_fraction - cell.std_secure_fraction).max(0.0),
            cell.mean_secure_fraction + cell.std_secure_fraction,
        );
        let cx = frame.px(center);
        let (ya, yb) = (frame.py(wlo), frame.py(whi));
        let _ = writeln!(
            svg,
            r##"<path d="M{cx:.2},{ya:.2}V{yb:.2}M{:.2},{ya:.2}H{:.2}M{:.2},{yb:.2}H{:.2}" stroke="#000" fill="none"/>"##,
            cx - 6.0,
            cx + 6.0,
            cx - 6.0,
            cx + 6.0
        );
        x_tick(&mut svg, &frame, center, &cell.cell_label);
    }
    Ok(close_svg(svg))
}
