use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn herzlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herzlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HERZLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn diagnostic(o: &Output) -> Value {
    let stderr = String::from_utf8(o.stderr.clone()).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(
        lines.len(),
        1,
        "expected one diagnostic line, got {stderr:?}"
    );
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn norms_report_has_values_and_tail_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(
        &[
            "norms",
            "--function",
            "gaussian",
            "--p",
            "2",
            "--alpha",
            "0.5",
            "--q",
            "1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert_eq!(r["command"], "norms");
    assert_eq!(r["pass"], true);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    let hom = &r["results"]["homogeneous"];
    assert!(hom["norm"].as_f64().unwrap() > 0.0);
    assert!(r["results"]["non_homogeneous"]["norm"].as_f64().unwrap() > 0.0);
    assert!(r["results"]["truncation"]["outer_mass"].as_f64().unwrap() >= 0.0);
    assert!(r["results"]["truncation"]["inner_tail"].as_f64().unwrap() >= 0.0);
}

#[test]
fn gaussian_lp_norm_matches_closed_form() {
    // ||exp(-x^2)||_2 = (pi / 2)^{1/4}.
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(&["norms", "--function", "gaussian", "--p", "2"], dir.path());
    assert!(o.status.success());
    let lp = report(dir.path())["results"]["lp_norm"].as_f64().unwrap();
    assert!(
        (lp - (std::f64::consts::PI / 2.0).powf(0.25)).abs() <= 1e-8,
        "{lp}"
    );
}

#[test]
fn malformed_p_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["2,x", "0.5", "2,3,4", ""] {
        let o = herzlab(&["norms", "--p", bad], dir.path());
        assert_eq!(o.status.code(), Some(2), "p = {bad:?}");
        let d = diagnostic(&o);
        assert_eq!(d["error"], "invalid_config");
        assert_eq!(d["field"], "p", "p = {bad:?}: {d}");
    }
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn other_invalid_fields_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["norms", "--alpha", "abc"], "alpha"),
        (&["norms", "--function", "nope"], "function"),
        (&["operator", "--kernel", "riesz7"], "kernel"),
        (&["operator", "--alpha", "0.2"], "alpha"),
        (&["duality", "--radii", "1,0.5"], "radii"),
    ];
    for (args, field) in cases {
        let o = herzlab(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(diagnostic(&o)["field"], field, "{args:?}");
    }
}

#[test]
fn invalid_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_herzlab"))
        .args(["norms", "--out"])
        .arg(dir.path())
        .env("HERZLAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(diagnostic(&o)["field"], "HERZLAB_THREADS");
    let o = Command::new(env!("CARGO_BIN_EXE_herzlab"))
        .args(["norms", "--out"])
        .arg(dir.path())
        .env("HERZLAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["duality", "--function", "random", "--seed", "7"];
    assert!(herzlab(&args, a.path()).status.success());
    assert!(herzlab(&args, b.path()).status.success());
    for file in [
        "report.json",
        "campanato_per_radius.csv",
        "campanato_per_radius.svg",
    ] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    assert!(herzlab(
        &["duality", "--function", "random", "--seed", "8"],
        c.path()
    )
    .status
    .success());
    assert_ne!(
        report(a.path())["config_hash"],
        report(c.path())["config_hash"]
    );
}

#[test]
fn every_figure_has_its_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(
        &["operator", "--kernel", "hilbert", "--alpha", "0.5"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    let figures = r["figures"].as_array().unwrap();
    assert!(!figures.is_empty());
    for f in figures {
        let name = f.as_str().unwrap();
        let svg = fs::read_to_string(dir.path().join(format!("{name}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let csv = fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("series,x,y"));
        assert!(lines.count() > 0);
    }
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "svg") {
            assert!(path.with_extension("csv").exists(), "{}", path.display());
        }
    }
}

#[test]
fn operator_and_duality_runs_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(
        &[
            "operator", "--kernel", "hilbert", "--alpha", "0.5", "--q", "1", "--p", "2",
            "--scales", "-2,0,2",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let r = report(dir.path());
    assert_eq!(
        r["results"]["harness"]["norms"].as_array().unwrap().len(),
        3
    );
    assert_eq!(r["checks"]["regularity"], true);

    let o = herzlab(
        &[
            "duality",
            "--alpha",
            "0.5",
            "--p",
            "2",
            "--s",
            "0",
            "--radii",
            "0.25,0.5,1,2",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let r = report(dir.path());
    assert_eq!(r["results"]["pairings"].as_array().unwrap().len(), 4);
    assert_eq!(
        r["results"]["campanato"]["per_radius"]
            .as_array()
            .unwrap()
            .len(),
        4
    );
}

#[test]
fn failing_check_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(&["operator", "--kernel", "oscillatory"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["pass"], false);
    assert_eq!(r["checks"]["regularity"], false);
}

#[test]
fn numerical_failure_keeps_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(
        &[
            "decompose",
            "--function",
            "random",
            "--alpha",
            "1.5",
            "--s",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let r = report(dir.path());
    assert_eq!(r["status"], "numerical_failure");
    assert_eq!(r["pass"], false);
    assert!(r["error"].as_str().unwrap().contains("lost L1 mass"));
    assert_eq!(r["command"], "decompose");
}

#[test]
fn decompose_writes_decomposition_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(
        &[
            "decompose",
            "--alpha",
            "0.5",
            "--q",
            "1",
            "--p",
            "2",
            "--eps",
            "0.2",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let entries: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("decomposition.json")).unwrap())
            .unwrap();
    let entries = entries.as_array().unwrap();
    assert_eq!(
        entries.len() as u64,
        report(dir.path())["results"]["entries"].as_u64().unwrap()
    );
    for key in ["lambda", "shell", "kind", "multi_index", "atom"] {
        assert!(entries[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn stored_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    assert!(herzlab(
        &["norms", "--function", "bump", "--p", "3", "--alpha", "0.8"],
        a.path()
    )
    .status
    .success());
    let cfg = report(a.path())["config"].clone();
    let path = a.path().join("config.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = herzlab(&["run", "--config", path.to_str().unwrap()], b.path());
    assert!(o.status.success());
    assert_eq!(
        fs::read(a.path().join("report.json")).unwrap(),
        fs::read(b.path().join("report.json")).unwrap()
    );

    fs::write(
        &path,
        r#"{"grid":{"dim":1,"extent":null,"points":null},"seed":1}"#,
    )
    .unwrap();
    let o = herzlab(&["run", "--config", path.to_str().unwrap()], b.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(diagnostic(&o)["field"], "config");
}

#[test]
fn suite_subset_prints_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = herzlab(&["suite", "--criteria", "1,9"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        stdout
            .lines()
            .filter(|l| l.starts_with("criterion "))
            .count(),
        2
    );
    let r = report(dir.path());
    assert_eq!(r["results"]["criteria"].as_array().unwrap().len(), 2);
}
