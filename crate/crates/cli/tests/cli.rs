//! End-to-end tests of the installed binary: flags, outputs, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsedoa"))
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn decompose_wide_contains_both_worked_pairs_and_ranks_them() {
    let output = bin()
        .args([
            "decompose",
            "--array",
            "0,1,3,4,5,6,7,8",
            "--ns",
            "4",
            "--l",
            "3",
            "--k",
            "2",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("{0,1,3,4}"), "{text}");
    assert!(text.contains("{0,3,4,5}"), "{text}");
    // the separable geometry carries a counterexample and ranks below
    let pos_good = text.find("{0,3,4,5}").unwrap();
    let pos_bad = text.find("{0,1,3,4}").unwrap();
    assert!(pos_good < pos_bad, "{text}");
    assert!(text.contains("counterexample"), "{text}");
}

#[test]
fn decompose_narrow_contains_sparse_ruler() {
    let output = bin()
        .args([
            "decompose",
            "--array",
            "0,1,3,4,5,6,7,8",
            "--ns",
            "4",
            "--l",
            "2",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("{0,3,5,7}"));
}

#[test]
fn decompose_identity_only() {
    let output = bin()
        .args(["decompose", "--array", "0,2,5", "--ns", "3", "--l", "1"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("1 decomposition(s)"), "{text}");
    assert!(text.contains("{0,2,5}"), "{text}");
}

#[test]
fn decompose_infeasible_exits_2_with_diagnostic() {
    let output = bin()
        .args(["decompose", "--array", "0,1", "--ns", "3", "--l", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());
}

#[test]
fn check_proves_coprime_shift_set_and_leaves_ruler_unknown() {
    let output = bin()
        .args(["check", "--sb", "0,3,5,7", "--sc", "0,4,9", "--k", "2"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["verdict_b"]["status"], "proven_sufficient");
    assert!(report["verdict_b"]["rule"]
        .as_str()
        .unwrap()
        .contains("coprime_triple"));
    assert_eq!(report["verdict_a"]["status"], "unknown");
    assert!(report["verdict_a"]["min_sv"].as_f64().unwrap() > 1e-3);
}

#[test]
fn check_finds_counterexample_on_stretched_shifts() {
    let output = bin()
        .args(["check", "--sc", "0,5,10", "--k", "2"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["verdict_b"]["status"], "counterexample_found");
    assert!(report["verdict_b"]["min_sv"].as_f64().unwrap() < 1e-8);
    assert_eq!(
        report["verdict_b"]["counterexample_deg"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn check_ula_single_source() {
    let output = bin()
        .args(["check", "--sb", "0,1,2", "--k", "1"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["verdict_a"]["status"], "proven_sufficient");
    assert!(report["verdict_a"]["rule"]
        .as_str()
        .unwrap()
        .contains("ula_segment"));
}

#[test]
fn check_without_arrays_exits_2() {
    let output = bin().args(["check", "--k", "2"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn music_runs_config_and_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scene.json");
    std::fs::write(
        &config_path,
        r#"{
            "scene": {"preset": "s3", "targets_deg": [10.0, 12.0], "snr_db": null, "seed": 3},
            "music": {"k": 2}
        }"#,
    )
    .unwrap();

    let run = |spectrum: &Path, peaks: &Path| {
        let output = bin()
            .args([
                "music",
                "--config",
                config_path.to_str().unwrap(),
                "--out-spectrum",
                spectrum.to_str().unwrap(),
                "--out-peaks",
                peaks.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
        stdout(&output)
    };

    let s1 = dir.path().join("a.csv");
    let p1 = dir.path().join("a.json");
    let s2 = dir.path().join("b.csv");
    let p2 = dir.path().join("b.json");
    let out1 = run(&s1, &p1);
    let out2 = run(&s2, &p2);
    assert_eq!(out1, out2);
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

    let spectrum = std::fs::read_to_string(&s1).unwrap();
    assert!(spectrum.starts_with("theta_deg,p_db\n"));
    assert_eq!(spectrum.lines().count(), 9001); // header + 9000 grid points

    let peaks: serde_json::Value = serde_json::from_str(&out1).unwrap();
    let mut angles: Vec<f64> = peaks["angles_deg"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((angles[0] - 10.0).abs() < 0.05);
    assert!((angles[1] - 12.0).abs() < 0.05);
    assert_eq!(peaks["k_hat"], 2);
    assert_eq!(peaks["shortfall"], false);
}

#[test]
fn music_smoothed_dump_has_interleaved_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scene.json");
    std::fs::write(
        &config_path,
        r#"{
            "scene": {"array": [0,1,3,4,5,6,7,8], "targets_deg": [5.0], "seed": 0},
            "decomposition": {"basic": [0,3,5,7], "shifts": [0,1]},
            "music": {"k": 1}
        }"#,
    )
    .unwrap();
    let dump = dir.path().join("smoothed.csv");
    let output = bin()
        .args([
            "music",
            "--config",
            config_path.to_str().unwrap(),
            "--dump-smoothed",
            dump.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("position,re_shift0,im_shift0,re_shift1,im_shift1\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn music_bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scene.json");
    std::fs::write(
        &config_path,
        r#"{"scene": {"preset": "nope", "targets_deg": [0.0], "seed": 0}}"#,
    )
    .unwrap();
    let output = bin()
        .args(["music", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn reproduce_fig2_writes_expected_summary() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["reproduce-fig2", "--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["s3"]["scene1"]["resolved"], true);
    assert_eq!(summary["s1"]["scene1"]["resolved"], false);
    assert_eq!(summary["s2"]["scene2"]["resolved"], false);
    assert_eq!(summary["s3"]["scene2"]["resolved"], true);
    for name in [
        "s1_scene1.csv",
        "s1_scene2.csv",
        "s2_scene1.csv",
        "s2_scene2.csv",
        "s3_scene1.csv",
        "s3_scene2.csv",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
}
