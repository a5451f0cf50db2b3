use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn oscbath(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscbath")).args(args).current_dir(cwd).output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| vec!["run", "--preset", "fig9", "--set", "m=60", "--grid", "0:50:51", "--out", out];
    for out in ["a", "b"] {
        let o = oscbath(&args(out), tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let names =
        ["exact.csv", "redfield.csv", "cp_redfield.csv", "global.csv", "local.csv", "mixture.csv", "summary.json"];
    for name in names {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
    let exact = fs::read_to_string(tmp.path().join("a/exact.csv")).unwrap();
    assert!(exact.lines().next().unwrap().ends_with("e_s0,e_sg,e_1,e_e"));
    assert_eq!(exact.lines().count(), 52);
}

#[test]
fn presets_report_cp_thresholds() {
    let tmp = tempfile::tempdir().unwrap();
    for (preset, want) in [("fig4", 0.989), ("fig9b", 0.4813), ("fig10a", 0.9998)] {
        let o =
            oscbath(&["run", "--preset", preset, "--schemes", "local", "--grid", "0:1:2", "--out", preset], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let s = summary(&tmp.path().join(preset));
        let got = s["cp_threshold"].as_f64().unwrap();
        assert!((got - want).abs() <= 1e-3, "{preset}: {got}");
    }
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = oscbath(&["run", "--schemes", ""], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least one scheme"));

    let o = oscbath(&["run", "--schemes", "mixture,local"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(tmp.path().join("bad.toml"), "schemes = [\"local\"]\n\n[model]\ng = 0.1\nkappa = 0.04\n").unwrap();
    let o = oscbath(&["run", "--config", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kappa") && err.contains("bad.toml"), "{err}");

    let o = oscbath(&["sweep", "--preset", "fig4", "--axis", "g", "--values", ""], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_log_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let toml = "schemes = [\"global\"]\nlamb_shift = false\n[model]\nn0 = 2.0\n[grid]\nstart = 0.1\nstop = 100.0\ncount = 4\nspacing = \"log\"\n";
    fs::write(tmp.path().join("run.toml"), toml).unwrap();
    let o = oscbath(&["run", "--config", "run.toml", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("o/global.csv")).unwrap();
    let t = column(&csv, "t");
    assert_eq!(t.len(), 4);
    assert!((t[1] - 1.0).abs() < 1e-12 && t[3] == 100.0);
    assert_eq!(summary(&tmp.path().join("o"))["lamb_shift"], Value::Bool(false));
}

#[test]
fn fidelity_against_itself_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = oscbath(
        &["fidelity", "--preset", "fig9", "--reference", "local", "--grid", "0:100:101", "--out", "f"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("f/fidelity.csv")).unwrap();
    for f in column(&csv, "f2_local") {
        assert!((f - 1.0).abs() < 1e-10, "{f}");
    }
    assert!(column(&csv, "f2_global")[50] < 1.0);
}

#[test]
fn sweep_over_filter_is_linear_in_steady_coherence() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--preset",
        "fig4",
        "--schemes",
        "cg_redfield",
        "--grid",
        "0:1:2",
        "--axis",
        "s",
        "--values",
        "0,0.5,1",
        "--out",
        "sw",
    ];
    let o = oscbath(&args, tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let index: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("sw/index.json")).unwrap()).unwrap();
    let cross: Vec<f64> = index["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            assert_eq!(e["status"], "ok");
            let s = summary(&tmp.path().join("sw").join(e["dir"].as_str().unwrap()));
            s["steady_states"]["cg_redfield"]["re_cross"].as_f64().unwrap()
        })
        .collect();
    assert_eq!(cross[0], 0.0);
    // linear to first order in s; the exact steady solve bends by about 2% at s = 1
    let bend = (cross[1] - 0.5 * cross[2]).abs() / cross[2].abs();
    assert!(bend > 1e-3 && bend < 0.03, "{cross:?}");
}

#[test]
fn sweep_over_bath_size_reports_recurrence_time() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--preset",
        "fig4",
        "--schemes",
        "local",
        "--grid",
        "0:1:2",
        "--axis",
        "m",
        "--values",
        "50,100,400",
        "--out",
        "m",
    ];
    let o = oscbath(&args, tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (i, m) in [50.0, 100.0, 400.0].into_iter().enumerate() {
        let s = summary(&tmp.path().join(format!("m/m-{i:03}")));
        let want = 2.0 * std::f64::consts::PI * m / 3.0;
        assert!((s["t_rec"].as_f64().unwrap() - want).abs() < 1e-9 * want);
    }
}

#[test]
fn oracle_check_passes_at_low_temperature() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["verify", "--set", "n0=0.1", "--schemes", "local,global,cp_redfield", "--grid", "0:10:3"];
    let o = oscbath(&args, tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], Value::Bool(true));

    let o = oscbath(&["verify", "--preset", "fig4", "--schemes", "local"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn local_wins_early_and_global_wins_late() {
    let tmp = tempfile::tempdir().unwrap();
    let o = oscbath(&["fidelity", "--preset", "fig9", "--grid", "0:300:301", "--out", "f"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("f/fidelity.csv")).unwrap();
    let (t, local, global) = (column(&csv, "t"), column(&csv, "f2_local"), column(&csv, "f2_global"));
    for k in 0..t.len() {
        if t[k] > 0.0 && t[k] <= 5.0 {
            assert!(local[k] > global[k], "t {}: {} vs {}", t[k], local[k], global[k]);
        }
        if t[k] >= 200.0 {
            assert!(global[k] > local[k], "t {}: {} vs {}", t[k], global[k], local[k]);
        }
    }
    let mixture = column(&csv, "f2_mixture_lower_bound");
    assert!(mixture.iter().zip(local.iter().zip(&global)).all(|(m, (l, g))| *m >= l.min(*g) - 1e-12 && *m <= 1.0));
}
