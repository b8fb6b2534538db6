use std::path::Path;
use std::process::{Command, Output, Stdio};

use medcon::io::{self, Metadata};
use medcon::plot::{convergence_errors, sidecar_path};

fn medcon(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medcon"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("MEDCON_OUT")
        .output()
        .expect("spawn medcon")
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn fig1_writes_a_complete_set_twice_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(medcon(&["fig1", "--seed", "42"], a.path()).status.success());
    assert!(medcon(&["fig1", "--seed", "42"], b.path()).status.success());
    let names = files(a.path());
    assert_eq!(
        names,
        [
            "fig1_42_audit.csv",
            "fig1_42_convergence.svg",
            "fig1_42_leaks.csv",
            "fig1_42_meta.txt",
            "fig1_42_per-node-x.svg",
            "fig1_42_topology.txt",
            "fig1_42_trace.csv",
        ]
    );
    for name in &names {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn fig1_convergence_decreases() {
    let dir = tempfile::tempdir().unwrap();
    assert!(medcon(&["fig1", "--seed", "42"], dir.path()).status.success());
    let trace = dir.path().join("fig1_42_trace.csv");
    let rows = io::read_trace_csv(std::fs::File::open(&trace).unwrap()).unwrap();
    let meta = Metadata::parse(&std::fs::read_to_string(sidecar_path(&trace)).unwrap()).unwrap();
    let target = medcon::oracle::MedianInterval {
        lo: meta.get_f64("median_lo").unwrap(),
        hi: meta.get_f64("median_hi").unwrap(),
    };
    let errors = convergence_errors(&rows, &target).unwrap();
    assert!(errors.last().unwrap() < errors.first().unwrap());
    assert!(*errors.last().unwrap() < 1e-6);
    assert_eq!(meta.get("stop_reason"), Some("tolerance"));
}

#[test]
fn every_written_csv_plots() {
    let dir = tempfile::tempdir().unwrap();
    assert!(medcon(&["fig2", "--seed", "3"], dir.path()).status.success());
    assert!(medcon(&["sweep-c", "--values", "1", "--trials", "4", "--seed", "3"], dir.path()).status.success());
    let cases = [
        ("fig2_3_trace.csv", "convergence"),
        ("fig2_3_trace.csv", "per-node-x"),
        ("sweep-c_3_sweep.csv", "sweep-bars"),
        ("sweep-c_3_summary.csv", "sweep-bars"),
    ];
    for (csv, kind) in cases {
        let input = dir.path().join(csv);
        let output = dir.path().join(format!("replot_{kind}_{csv}.svg"));
        let status = Command::new(env!("CARGO_BIN_EXE_medcon"))
            .args(["plot", "--kind", kind, "--input"])
            .arg(&input)
            .arg("--output")
            .arg(&output)
            .stdout(Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "plot {kind} of {csv}");
        let svg = std::fs::read_to_string(&output).unwrap();
        assert!(svg.contains(r#"viewBox="0 0 800 500""#));
    }
    // A single c value gives a single bar.
    let svg = std::fs::read_to_string(dir.path().join("sweep-c_3_sweep-bars.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="bar""#).count(), 1);
}

#[test]
fn sweep_topology_defaults_give_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = medcon(&["sweep-topology", "--workers", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = io::read_summary_csv(std::fs::File::open(dir.path().join("sweep-topology_0_summary.csv")).unwrap()).unwrap();
    let labels: Vec<_> = summary.iter().map(|r| r.cell_label.as_str()).collect();
    assert_eq!(labels, ["ring", "rgg", "complete"]);
    assert!(summary.iter().all(|r| r.trials == 100));
    let sweep = io::read_sweep_csv(std::fs::File::open(dir.path().join("sweep-topology_0_sweep.csv")).unwrap()).unwrap();
    assert_eq!(sweep.len(), 300);
}

#[test]
fn errors_exit_nonzero_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = medcon(&["run", "--topology", "ring", "--n", "2"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--n"), "{stderr}");
    let out = medcon(&["run", "--c", "-1"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--c"));
    let out = medcon(&["run", "--nonsense"], dir.path());
    assert!(!out.status.success());
    assert!(files(dir.path()).is_empty());
}

#[test]
fn help_succeeds() {
    let out = Command::new(env!("CARGO_BIN_EXE_medcon")).args(["run", "--help"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("--stop-patience") && text.contains("[default: 5]"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "# ring run\ntopology = ring\nn = 4\nc = 2\nseed = 5\nmu = -1\n").unwrap();
    let out = medcon(&["run", "--config", config.to_str().unwrap(), "--c", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = Metadata::parse(&std::fs::read_to_string(dir.path().join("run_5_meta.txt")).unwrap()).unwrap();
    assert_eq!(meta.get("topology"), Some("ring"));
    assert_eq!(meta.get("n"), Some("4"));
    assert_eq!(meta.get_f64("c").unwrap(), 3.0);
    assert_eq!(meta.get_f64("mu").unwrap(), -1.0);

    std::fs::write(&config, "colour = blue\n").unwrap();
    let out = medcon(&["run", "--config", config.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `colour`"));
}

#[test]
fn topology_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(medcon(&["fig1", "--seed", "11"], dir.path()).status.success());
    let topo = dir.path().join("fig1_11_topology.txt");
    let out = medcon(
        &["run", "--topology-file", topo.to_str().unwrap(), "--seed", "11", "--mu", "0", "--sigma", "0.1"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();
    // Same graph, same seeded data and initialization, so the same trace.
    assert_eq!(read("fig1_11_trace.csv"), read("run_11_trace.csv"));
    let a = Metadata::parse(&read("fig1_11_meta.txt")).unwrap();
    let b = Metadata::parse(&read("run_11_meta.txt")).unwrap();
    assert_eq!(a.get("topology_sha256"), b.get("topology_sha256"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_medcon"))
        .args(["fig1", "--seed", "1", "--t-max", "20"])
        .env("MEDCON_OUT", dir.path())
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("fig1_1_trace.csv").exists());
}

#[test]
fn plot_schema_mismatch_names_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "cell_label,trial,secure,n\nring,0,1,3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_medcon"))
        .args(["plot", "--kind", "sweep-bars", "--input"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("secure_count"));
    assert!(!dir.path().join("bad_sweep-bars.svg").exists());
}
