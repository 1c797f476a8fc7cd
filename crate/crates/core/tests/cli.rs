use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn voi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn data_lines(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn eval_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let res = voi(&["eval", scenario_file("fig4.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# latent-voi"));
    assert!(text.contains("# kappa = 0.15"));
    let rows = data_lines(&text);
    assert_eq!(rows[0].join(","), "t,voi,voi_ou,voi_single,voi_asymptotic,bound_general,bound_single,aoi,n_used");
    assert_eq!(rows.len(), 1 + 391);
    let last = &rows[391];
    assert_eq!(last[0], "21.5");
    assert_eq!(last[6], "", "bound_single is absent with 10 observations");
    assert_eq!(last[8], "10");
}

#[test]
fn eval_is_bit_identical_and_bits_scale() {
    let path = scenario_file("fig6_bad.toml");
    let a = voi(&["eval", path.to_str().unwrap()]);
    let b = voi(&["eval", path.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let bits = voi(&["eval", path.to_str().unwrap(), "--bits"]);
    let nats = data_lines(&String::from_utf8(a.stdout).unwrap());
    let bits = data_lines(&String::from_utf8(bits.stdout).unwrap());
    let v = |rows: &[Vec<String>]| rows[100][1].parse::<f64>().unwrap();
    assert!((v(&bits) * std::f64::consts::LN_2 - v(&nats)).abs() < 1e-15);
}

#[test]
fn invalid_scenario_exits_with_one_and_names_the_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario_file("fig4.toml"))
        .unwrap()
        .replace("receive_times = [2.0, 4.2, 6.5,", "receive_times = [2.0, 4.2, 4.9,");
    std::fs::write(&path, text).unwrap();
    let res = voi(&["eval", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("update 3"), "{err}");
}

#[test]
fn missing_file_exits_with_one() {
    assert_eq!(voi(&["eval", "/nonexistent/x.toml"]).status.code(), Some(1));
}

#[test]
fn unknown_figure_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let res = voi(&["figure", "fig9", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown figure"));
}

#[test]
fn every_figure_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let expected = [
        ("fig4", vec!["fig4.csv"]),
        ("fig5", vec!["fig5_gamma_0.1.csv", "fig5_gamma_20.csv"]),
        ("fig6", vec!["fig6_good.csv", "fig6_bad_bounds.csv"]),
        ("fig7", vec!["fig7_kappa_0.4.csv", "fig7_summary.csv"]),
    ];
    for (name, files) in expected {
        let res = voi(&["figure", name, "--out-dir", dir.path().to_str().unwrap()]);
        assert!(res.status.success(), "{name}: {}", String::from_utf8_lossy(&res.stderr));
        for f in files {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }
    let fig5 = std::fs::read_to_string(dir.path().join("fig5_gamma_0.1.csv")).unwrap();
    let rows = data_lines(&fig5);
    assert_eq!(rows[0].join(","), "window,t,voi,voi_ou,ratio");
    assert_eq!(rows.len(), 11);

    let bounds = std::fs::read_to_string(dir.path().join("fig6_good_bounds.csv")).unwrap();
    assert!(data_lines(&bounds).iter().skip(1).all(|r| r[5] == "latent"));
}

#[test]
fn figure_reads_an_override_directory() {
    let scenarios = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario_file("fig4.toml"))
        .unwrap()
        .replace("step = 0.05", "step = 0.5");
    std::fs::write(scenarios.path().join("fig4.toml"), text).unwrap();
    let res = voi(&[
        "figure",
        "fig4",
        "--out-dir",
        out.path().to_str().unwrap(),
        "--scenario-dir",
        scenarios.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let csv = std::fs::read_to_string(out.path().join("fig4.csv")).unwrap();
    assert_eq!(data_lines(&csv).len(), 1 + 40);
}

#[test]
fn verify_reports_json_and_exit_status() {
    let res = voi(&["verify", scenario_file("fig4.toml").to_str().unwrap(), "--samples", "100000", "--seed", "5"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["seed"], 5);
    assert_eq!(report["checks"].as_array().unwrap().len(), 7);

    let starved = voi(&["verify", scenario_file("fig4.toml").to_str().unwrap(), "--samples", "50"]);
    assert_eq!(starved.status.code(), Some(3));
}

#[test]
fn verify_on_empty_schedule_skips_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(
        &path,
        "[params]\nkappa = 0.15\nsigma = 10.0\n[schedule]\nsample_times = []\nreceive_times = []\n[noise]\ngamma = 1.5\n[grid]\ntimes = [3.0]\n",
    )
    .unwrap();
    let res = voi(&["verify", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["status"] == "skipped"));

    let eval = voi(&["eval", path.to_str().unwrap()]);
    let rows = data_lines(&String::from_utf8(eval.stdout).unwrap());
    assert_eq!(rows[1].join(","), "3,0,0,,,0,,,0");
}
