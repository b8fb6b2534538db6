//! Command-line front end: argument and config-file parsing, scenario and
//! sweep execution, CSV/SVG output.
//!
//! Every subcommand writes `<subcommand>_<seed>_<kind>.<ext>` files into the
//! output directory. Files are first written under temporary names and only
//! renamed once the whole set is on disk.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::graph::Graph;
use crate::harness::{self, DataSource, ScenarioConfig, SweepResult, Topology, TrialOutcome};
use crate::io::{self, Metadata};
use crate::plot::{self, PlotKind};

pub const DEFAULT_C_VALUES: &[f64] = &[0.2, 0.5, 1.0, 2.0, 5.0];
pub const DEFAULT_DP_SIGMA: f64 = 0.1;
pub const OUT_ENV: &str = "MEDCON_OUT";

const SCENARIO_DEFAULTS: &str = "\
Defaults: rgg topology, n = 5, radius = sqrt(2 ln n / n), max-retries = 100,
s ~ N(0, 1), mu = 0, sigma = 0.1, c = 1, theta = 0.5, t-max = 500,
stop-tol = 1e-10, stop-patience = 5, dp off (dp-sigma = 0.1 when on), seed = 0.";

const FIG2_DEFAULTS: &str = "\
Defaults: rgg topology, n = 5, radius = sqrt(2 ln n / n), max-retries = 100,
s ~ N(0, 1), mu = -10, sigma = 1, c = 1, theta = 0.5, t-max = 500,
stop-tol = 1e-10, stop-patience = 5, dp off (dp-sigma = 0.1 when on), seed = 0.";

const SWEEP_DEFAULTS: &str = "\
Defaults: n = 15, trials = 100, rgg radius = sqrt(2 ln n / n), s ~ N(0, 1)
per trial, mu = 0, sigma = 0.1, c = 1, theta = 0.5, t-max = 500,
stop-tol = 1e-10, stop-patience = 5, dp off, seed = 0, workers = 1.
sweep-c: topology = rgg, values = 0.2,0.5,1,2,5.";

#[derive(Debug, Parser)]
#[command(
    name = "medcon",
    version,
    about = "Privacy-audited distributed median consensus",
    after_help = "Flags given on the command line override values from --config.\n\
                  The output directory falls back to $MEDCON_OUT, then ./out."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single run on any topology, with audit and adversary reconstruction.
    #[command(after_help = SCENARIO_DEFAULTS)]
    Run(ScenarioArgs),
    /// Near-median start: 5-node geometric graph, mu = 0, sigma = 0.1.
    #[command(after_help = SCENARIO_DEFAULTS)]
    Fig1(ScenarioArgs),
    /// Far-off start: mu = -10, sigma = 1; `--dp true` adds an input offset.
    #[command(after_help = FIG2_DEFAULTS)]
    Fig2(ScenarioArgs),
    /// Secure-node proportion on ring, geometric and complete graphs.
    #[command(after_help = SWEEP_DEFAULTS)]
    SweepTopology(ScenarioArgs),
    /// Secure-node proportion as a function of c.
    #[command(after_help = SWEEP_DEFAULTS)]
    SweepC(ScenarioArgs),
    /// Render an SVG from a CSV written by another subcommand.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyKind {
    Ring,
    Complete,
    Rgg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKindArg {
    Convergence,
    PerNodeX,
    SweepBars,
}

impl From<PlotKindArg> for PlotKind {
    fn from(k: PlotKindArg) -> Self {
        match k {
            PlotKindArg::Convergence => PlotKind::Convergence,
            PlotKindArg::PerNodeX => PlotKind::PerNodeX,
            PlotKindArg::SweepBars => PlotKind::SweepBars,
        }
    }
}

/// Scenario and sweep flags. Unset flags fall back to the config file, then
/// to the subcommand's defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Flat `key = value` file (keys are flag names without `--`).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Graph family [default: rgg].
    #[arg(long, value_enum)]
    pub topology: Option<TopologyKind>,
    /// Edge-list file (`n <count>` then one `i j` per line); overrides --topology.
    #[arg(long, value_name = "PATH")]
    pub topology_file: Option<PathBuf>,
    /// Node count [default: 5; sweeps: 15].
    #[arg(long)]
    pub n: Option<usize>,
    /// Geometric-graph radius [default: sqrt(2 ln n / n)].
    #[arg(long)]
    pub radius: Option<f64>,
    /// Geometric-graph resampling budget [default: 100].
    #[arg(long)]
    pub max_retries: Option<usize>,
    /// Fixed private values, comma separated [default: standard-normal draw].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub s: Option<Vec<f64>>,
    /// Mean scale of the initial z draw [default: 0; fig2: -10].
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Standard deviation of the initial z draw [default: 0.1; fig2: 1].
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Convergence parameter, > 0 [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Averaging constant in (0, 1] [default: 0.5].
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Maximum rounds [default: 500].
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Early-stop tolerance; 0 disables [default: 1e-10].
    #[arg(long, allow_negative_numbers = true)]
    pub stop_tol: Option<f64>,
    /// Quiet rounds before an early stop [default: 5].
    #[arg(long)]
    pub stop_patience: Option<usize>,
    /// Add a normal offset to each private value before the run [default: false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub dp: Option<bool>,
    /// Offset standard deviation; implies --dp when > 0 [default: 0.1 with --dp].
    #[arg(long, allow_negative_numbers = true)]
    pub dp_sigma: Option<f64>,
    /// Trials per sweep cell [default: 100 for sweeps, 1 otherwise].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// c values for sweep-c, comma separated [default: 0.2,0.5,1,2,5].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Option<Vec<f64>>,
    /// Worker threads for sweeps [default: 1].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory [default: $MEDCON_OUT or ./out].
    #[arg(long, value_name = "PATH")]
    pub out_dir: Option<PathBuf>,
}

impl ScenarioArgs {
    /// Field-wise `self` over `fallback`.
    fn or(self, fallback: ScenarioArgs) -> ScenarioArgs {
        ScenarioArgs {
            config: self.config,
            topology: self.topology.or(fallback.topology),
            topology_file: self.topology_file.or(fallback.topology_file),
            n: self.n.or(fallback.n),
            radius: self.radius.or(fallback.radius),
            max_retries: self.max_retries.or(fallback.max_retries),
            s: self.s.or(fallback.s),
            mu: self.mu.or(fallback.mu),
            sigma: self.sigma.or(fallback.sigma),
            c: self.c.or(fallback.c),
            theta: self.theta.or(fallback.theta),
            t_max: self.t_max.or(fallback.t_max),
            stop_tol: self.stop_tol.or(fallback.stop_tol),
            stop_patience: self.stop_patience.or(fallback.stop_patience),
            dp: self.dp.or(fallback.dp),
            dp_sigma: self.dp_sigma.or(fallback.dp_sigma),
            trials: self.trials.or(fallback.trials),
            seed: self.seed.or(fallback.seed),
            values: self.values.or(fallback.values),
            workers: self.workers.or(fallback.workers),
            out_dir: self.out_dir.or(fallback.out_dir),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// CSV written by run/fig1/fig2 (trace) or by a sweep (sweep or summary).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKindArg,
    /// Output SVG [default: input path with `_<kind>.svg` replacing `.csv`].
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Run,
    Fig1,
    Fig2,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Run => "run",
            ScenarioKind::Fig1 => "fig1",
            ScenarioKind::Fig2 => "fig2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Scenario(ScenarioKind),
    SweepTopology { workers: usize },
    SweepC { values: Vec<f64>, workers: usize },
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum CliConfig {
    Experiment {
        action: Action,
        scenario: Box<ScenarioConfig>,
        out_dir: PathBuf,
    },
    Plot {
        input: PathBuf,
        kind: PlotKind,
        output: PathBuf,
    },
}

impl CliConfig {
    pub fn scenario(&self) -> Option<&ScenarioConfig> {
        match self {
            CliConfig::Experiment { scenario, .. } => Some(scenario),
            CliConfig::Plot { .. } => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

/// Rewrites parameter errors in terms of the flag that set the value.
fn usage(err: Error) -> CliError {
    match err {
        Error::InvalidParameter { name, reason } => {
            CliError::Usage(format!("invalid value for `--{}`: {reason}", name.replace('_', "-")))
        }
        other => CliError::Usage(other.to_string()),
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Run(_) => "run",
        Command::Fig1(_) => "fig1",
        Command::Fig2(_) => "fig2",
        Command::SweepTopology(_) => "sweep-topology",
        Command::SweepC(_) => "sweep-c",
        Command::Plot(_) => "plot",
    }
}

/// Reads a config file into the same flag structure the command line uses.
fn config_file_args(sub: &str, path: &Path) -> Result<ScenarioArgs, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let pairs = io::parse_key_values(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let command = Cli::command();
    let known: Vec<String> = command
        .find_subcommand(sub)
        .expect("subcommand exists")
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|long| long != "config")
        .collect();
    let mut argv: Vec<String> = vec!["medcon".into(), sub.into()];
    for (key, value) in pairs {
        let flag = key.replace('_', "-");
        if !known.contains(&flag) {
            return Err(CliError::Usage(format!("{}: unknown key `{key}`", path.display())));
        }
        argv.push(format!("--{flag}={value}"));
    }
    let parsed = Cli::try_parse_from(argv)
        .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.render().to_string().trim())))?;
    match parsed.command {
        Command::Run(a) | Command::Fig1(a) | Command::Fig2(a) | Command::SweepTopology(a) | Command::SweepC(a) => {
            Ok(a)
        }
        Command::Plot(_) => unreachable!("config files only apply to experiment subcommands"),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn build_scenario(sub: &str, a: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    let sweep = sub.starts_with("sweep");
    let mut cfg = match sub {
        "fig2" => ScenarioConfig::biased_init(false),
        _ if sweep => ScenarioConfig::sweep_default(),
        _ => ScenarioConfig::near_median(),
    };
    if sub == "sweep-topology" && (a.topology.is_some() || a.topology_file.is_some()) {
        return Err(CliError::Usage(
            "`--topology` does not apply to sweep-topology, which runs every family".into(),
        ));
    }
    if sub != "sweep-c" && a.values.is_some() {
        return Err(CliError::Usage(format!("`--values` only applies to sweep-c, not {sub}")));
    }

    if let Some(path) = &a.topology_file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g = Graph::parse_edge_list(&text).map_err(usage)?;
        cfg.n = g.n();
        cfg.topology = Topology::Fixed(g);
    } else if let Some(kind) = a.topology {
        cfg.topology = match kind {
            TopologyKind::Ring => Topology::Ring,
            TopologyKind::Complete => Topology::Complete,
            TopologyKind::Rgg => Topology::rgg_default(),
        };
    }
    match &mut cfg.topology {
        Topology::Rgg { radius, max_retries } => {
            if a.radius.is_some() {
                *radius = a.radius;
            }
            if let Some(k) = a.max_retries {
                *max_retries = k;
            }
        }
        _ if a.radius.is_some() || a.max_retries.is_some() => {
            return Err(CliError::Usage(
                "`--radius` and `--max-retries` only apply to the rgg topology".into(),
            ))
        }
        _ => {}
    }
    if let Some(s) = &a.s {
        if a.n.is_none() && !matches!(cfg.topology, Topology::Fixed(_)) {
            cfg.n = s.len();
        }
        cfg.data = DataSource::Fixed(s.clone());
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(v) = a.mu {
        cfg.mu = v;
    }
    if let Some(v) = a.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = a.c {
        cfg.solver.c = v;
    }
    if let Some(v) = a.theta {
        cfg.solver.theta = v;
    }
    if let Some(v) = a.t_max {
        cfg.solver.t_max = v;
    }
    if let Some(v) = a.stop_tol {
        cfg.solver.stop_tol = v;
    }
    if let Some(v) = a.stop_patience {
        cfg.solver.stop_patience = v;
    }
    cfg.dp_sigma = match (a.dp, a.dp_sigma) {
        (Some(false), Some(v)) if v > 0.0 => {
            return Err(CliError::Usage("`--dp false` contradicts a positive `--dp-sigma`".into()))
        }
        (Some(false), _) => 0.0,
        (_, Some(v)) => v,
        (Some(true), None) => DEFAULT_DP_SIGMA,
        (None, None) => cfg.dp_sigma,
    };
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if !sweep && cfg.trials != 1 {
        return Err(CliError::Usage(format!("`--trials` only applies to sweeps, not {sub}")));
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

/// Parses and validates a full argument vector (program name first).
pub fn parse<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let sub = subcommand_name(&cli.command);
    let args = match cli.command {
        Command::Plot(p) => {
            let kind: PlotKind = p.kind.into();
            let output = p.output.unwrap_or_else(|| default_plot_output(&p.input, kind));
            return Ok(CliConfig::Plot {
                input: p.input,
                kind,
                output,
            });
        }
        Command::Run(a) | Command::Fig1(a) | Command::Fig2(a) | Command::SweepTopology(a) | Command::SweepC(a) => a,
    };
    let args = match &args.config {
        Some(path) => {
            let file = config_file_args(sub, path)?;
            args.or(file)
        }
        None => args,
    };
    let scenario = build_scenario(sub, &args)?;
    let workers = args.workers.unwrap_or(1);
    if workers == 0 {
        return Err(CliError::Usage("invalid value for `--workers`: must be at least 1".into()));
    }
    let action = match sub {
        "run" => Action::Scenario(ScenarioKind::Run),
        "fig1" => Action::Scenario(ScenarioKind::Fig1),
        "fig2" => Action::Scenario(ScenarioKind::Fig2),
        "sweep-topology" => Action::SweepTopology { workers },
        _ => {
            let values = args.values.unwrap_or_else(|| DEFAULT_C_VALUES.to_vec());
            if values.is_empty() {
                return Err(CliError::Usage("invalid value for `--values`: need at least one c".into()));
            }
            if let Some(bad) = values.iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
                return Err(CliError::Usage(format!(
                    "invalid value for `--values`: c must be positive, got {bad}"
                )));
            }
            Action::SweepC { values, workers }
        }
    };
    Ok(CliConfig::Experiment {
        action,
        scenario: Box::new(scenario),
        out_dir: args.out_dir.unwrap_or_else(default_out_dir),
    })
}

fn default_plot_output(input: &Path, kind: PlotKind) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    input.with_file_name(format!("{stem}_{}.svg", kind.name()))
}

/// Files staged in memory and committed together.
struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    fn new(dir: &Path) -> Self {
        OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: String, bytes: impl Into<Vec<u8>>) {
        self.files.push((name, bytes.into()));
    }

    /// Writes every file under a temporary name, then renames them all.
    /// On failure the temporaries are removed and existing files are left
    /// untouched.
    fn commit(self) -> Result<Vec<PathBuf>, Error> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let pid = std::process::id();
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = std::fs::remove_file(tmp);
            }
        };
        for (name, bytes) in &self.files {
            let tmp = self.dir.join(format!(".{name}.{pid}.tmp"));
            if let Err(e) = std::fs::write(&tmp, bytes) {
                cleanup(&staged);
                let _ = std::fs::remove_file(&tmp);
                return Err(Error::io(tmp, e));
            }
            staged.push((tmp, self.dir.join(name)));
        }
        for (k, (tmp, dest)) in staged.iter().enumerate() {
            if let Err(e) = std::fs::rename(tmp, dest) {
                cleanup(&staged[k..]);
                return Err(Error::io(dest, e));
            }
        }
        Ok(staged.into_iter().map(|(_, dest)| dest).collect())
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn scenario_metadata(kind: ScenarioKind, cfg: &ScenarioConfig, out: &TrialOutcome) -> Result<Metadata, Error> {
    let mut m = io::trace_metadata(&out.trace, &out.solver_input, &out.s)?;
    m.set("subcommand", kind.name());
    m.set("master_seed", cfg.master_seed);
    m.set("topology", cfg.topology.label());
    if let Topology::Rgg { radius, max_retries } = &cfg.topology {
        m.set_f64("radius", radius.unwrap_or(crate::graph::RggParams::default_radius(cfg.n)));
        m.set("max_retries", max_retries);
    }
    m.set("graph_redraws", out.graph_redraws);
    m.set_f64("mu", cfg.mu);
    m.set_f64("sigma", cfg.sigma);
    m.set_f64("dp_sigma", cfg.dp_sigma);
    m.set_f64("final_error", out.final_error);
    m.set("secure_count", out.audit.secure_count());
    Ok(m)
}

fn sweep_files(set: &mut OutputSet, prefix: &str, result: &SweepResult) -> Result<(), Error> {
    let sweep = csv_bytes(|b| io::write_sweep_csv(b, &result.records))?;
    let summary = csv_bytes(|b| io::write_summary_csv(b, &result.cells))?;
    let svg = plot::sweep_bars_svg(&plot::summary_from_csv(std::str::from_utf8(&summary).expect("utf-8 csv"))?)?;
    set.add(format!("{prefix}_sweep.csv"), sweep);
    set.add(format!("{prefix}_summary.csv"), summary);
    set.add(format!("{prefix}_sweep-bars.svg"), svg);
    Ok(())
}

/// Runs a validated invocation. Returns the paths written and a short
/// human-readable report.
pub fn execute(cfg: &CliConfig) -> Result<(Vec<PathBuf>, String), Error> {
    match cfg {
        CliConfig::Plot { input, kind, output } => {
            let svg = plot::plot_file(input, *kind)?;
            let dir = output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut set = OutputSet::new(dir);
            let name = output
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Error::parse("--output", "not a file name"))?;
            set.add(name.to_string(), svg);
            let written = set.commit()?;
            Ok((written, format!("wrote {} plot", kind.name())))
        }
        CliConfig::Experiment {
            action,
            scenario,
            out_dir,
        } => {
            let sub = match action {
                Action::Scenario(k) => k.name(),
                Action::SweepTopology { .. } => "sweep-topology",
                Action::SweepC { .. } => "sweep-c",
            };
            let prefix = format!("{sub}_{}", scenario.master_seed);
            let mut set = OutputSet::new(out_dir);
            let report = match action {
                Action::Scenario(kind) => {
                    let out = harness::run_scenario(scenario)?;
                    let trace = csv_bytes(|b| io::write_trace_csv(b, &out.trace, &out.solver_input))?;
                    let meta = scenario_metadata(*kind, scenario, &out)?;
                    // Plots go through the CSV so they see exactly what a later
                    // `plot` call would.
                    let rows = io::read_trace_csv(trace.as_slice())?;
                    set.add(format!("{prefix}_convergence.svg"), plot::convergence_svg(&rows, &meta)?);
                    set.add(format!("{prefix}_per-node-x.svg"), plot::per_node_svg(&rows, &meta)?);
                    set.add(format!("{prefix}_trace.csv"), trace);
                    set.add(format!("{prefix}_meta.txt"), meta.render());
                    set.add(
                        format!("{prefix}_audit.csv"),
                        csv_bytes(|b| io::write_audit_csv(b, &out.audit))?,
                    );
                    set.add(
                        format!("{prefix}_leaks.csv"),
                        csv_bytes(|b| io::write_leaks_csv(b, &out.leaks))?,
                    );
                    set.add(format!("{prefix}_topology.txt"), out.graph.to_edge_list());
                    let insecure: Vec<String> = out
                        .audit
                        .nodes
                        .iter()
                        .filter(|a| !a.secure)
                        .map(|a| a.node.to_string())
                        .collect();
                    format!(
                        "{sub} seed {}: n={} rounds={} ({}) error={:e} insecure=[{}] leaks={}",
                        scenario.master_seed,
                        out.graph.n(),
                        out.trace.rounds.len(),
                        out.trace.stop_reason,
                        out.final_error,
                        insecure.join(","),
                        out.leaks.len()
                    )
                }
                Action::SweepTopology { workers } => {
                    let result = harness::sweep_topology(scenario, *workers)?;
                    sweep_files(&mut set, &prefix, &result)?;
                    summary_report(sub, &result)
                }
                Action::SweepC { values, workers } => {
                    let result = harness::sweep_c(values, scenario, *workers)?;
                    sweep_files(&mut set, &prefix, &result)?;
                    summary_report(sub, &result)
                }
            };
            let written = set.commit()?;
            Ok((written, report))
        }
    }
}

fn summary_report(sub: &str, result: &SweepResult) -> String {
    let mut lines = vec![format!("{sub}:")];
    for c in &result.cells {
        lines.push(format!(
            "  {:<10} secure fraction {:.3} +- {:.3} (sd), mean error {:.2e}, {} trials",
            c.label, c.mean_secure_fraction, c.std_secure_fraction, c.mean_final_error, c.trials
        ));
    }
    lines.join("\n")
}

/// Entry point used by the binary; returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse(argv).and_then(|cfg| execute(&cfg).map_err(CliError::from));
    match result {
        Ok((written, report)) => {
            println!("{report}");
            for path in written {
                println!("  {}", path.display());
            }
            0
        }
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("medcon: error: {e}");
            e.exit_code()
        }
    }
}
