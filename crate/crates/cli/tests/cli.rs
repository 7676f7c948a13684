//! End-to-end tests of the `qlm` binary: scene execution, report values
//! against closed forms, byte-identical reruns, parse-time rejection, and
//! the describe registry.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qlm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qlm"))
}

fn write_scene(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Cells of the first data row of a table artifact, keyed by column name.
fn csv_row(path: &Path) -> Vec<(String, String)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), row.len(), "ragged table in {}", path.display());
    header.iter().map(|s| s.to_string()).zip(row.iter().map(|s| s.to_string())).map(|(a, b)| (a, b)).collect()
}

fn cell(row: &[(String, String)], name: &str) -> String {
    row.iter().find(|(c, _)| c == name).unwrap_or_else(|| panic!("no column {name}")).1.clone()
}

#[test]
fn version_smoke() {
    let out = qlm().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains(qlm_core::VERSION));
}

#[test]
fn schwarzschild_masses_row_matches_the_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "schw.toml",
        r#"
        [data]
        catalog = "schwarzschild_slice"
        params = { m = 1.0 }

        [[surfaces]]
        name = "S4"
        radius = 4.0

        [[tasks]]
        masses = { surface = "S4" }
        "#,
    );
    let out_dir = tmp.path().join("out");
    let out = qlm().arg("run").arg(&scene).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let row = csv_row(&out_dir.join("01_masses_S4.csv"));
    let m_by: f64 = cell(&row, "m_by").parse().unwrap();
    let want = 4.0 * (1.0 - (0.5f64).sqrt());
    assert!((m_by - want).abs() <= 1e-3, "m_by = {m_by}, want {want}");
    // time-symmetric slice: all four functionals coincide
    let e_wy: f64 = cell(&row, "e_wy").parse().unwrap();
    assert!((e_wy - m_by).abs() <= 1e-6, "e_wy = {e_wy}");
    assert_eq!(cell(&row, "by_admissible"), "true");
    assert_eq!(cell(&row, "kly_clamped"), "0");
}

#[test]
fn flat_scene_reports_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "flat.toml",
        r#"
        [data]
        catalog = "flat"

        [[surfaces]]
        name = "S1"
        radius = 1.0

        [[regions]]
        name = "ball"
        ball = { center = [0.0, 0.0, 0.0], radius = 1.0 }
        shape = [4, 6, 8]

        [[tasks]]
        constraints = { region = "ball" }

        [[tasks]]
        masses = { surface = "S1" }
        "#,
    );
    let out_dir = tmp.path().join("out");
    let out = qlm().arg("run").arg(&scene).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.join("01_constraints_ball.json")).unwrap(),
    )
    .unwrap();
    let report = &summary["report"];
    assert!(report["max_abs_mu"].as_f64().unwrap() <= 1e-6);
    assert!(report["max_j_norm"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["dec"]["satisfied"], serde_json::json!(true));

    let row = csv_row(&out_dir.join("02_masses_S1.csv"));
    for col in ["m_by", "m_kly", "m_w", "e_wy"] {
        let v: f64 = cell(&row, col).parse().unwrap();
        assert!(v.abs() <= 1e-6, "{col} = {v}");
    }
}

#[test]
fn flow_summary_reaches_the_closed_form_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "flow.toml",
        r#"
        [data]
        catalog = "flat"

        [[tasks]]
        flow = { r0 = 1.0, u0 = 2.0 }
        "#,
    );
    let out_dir = tmp.path().join("out");
    let out = qlm().arg("run").arg(&scene).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("01_flow_param.json")).unwrap())
            .unwrap();
    let report = &summary["report"];
    assert!((report["extension_energy"].as_f64().unwrap() - 0.375).abs() <= 1e-6);
    assert!(report["max_q_increase"].as_f64().unwrap() <= 1e-12);
    assert_eq!(report["boundary_u"], serde_json::Value::Null);

    let leaves = fs::read_to_string(out_dir.join("01_flow_param_leaves.csv")).unwrap();
    let data_rows = leaves.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, 200);
}

#[test]
fn shield_and_fillin_reports_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "shield.toml",
        r#"
        [data]
        catalog = "cmc_hyperboloid"
        params = { a = 1.0 }

        [[surfaces]]
        name = "S1"
        radius = 1.0
        grid = [16, 32]

        [[tasks]]
        shield = { sigma = 1.0, n = 3, d = 0.5235987755982988, l = 0.3333333333333333 }

        [[tasks]]
        fillin = { surface = "S1", h0 = 0.0, c0 = 0.0, export_record = true }
        "#,
    );
    let out_dir = tmp.path().join("out");
    let out = qlm().arg("run").arg(&scene).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let shield: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("01_shield.json")).unwrap()).unwrap();
    assert!((shield["report"]["lambda"].as_f64().unwrap() - 1.5).abs() <= 1e-12);
    assert!((shield["report"]["psi"].as_f64().unwrap() - 2.0).abs() <= 1e-9);

    let fillin: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("02_fillin_S1.json")).unwrap())
            .unwrap();
    // round sphere in the a=1 hyperboloid: f = |pi(nu,.)| = tr_S k = 2
    let (min_f, max_f) = (
        fillin["report"]["min_f"].as_f64().unwrap(),
        fillin["report"]["max_f"].as_f64().unwrap(),
    );
    assert!((min_f - 2.0).abs() <= 1e-9 && (max_f - 2.0).abs() <= 1e-9, "f in [{min_f}, {max_f}]");

    // exported record feeds back through the record path
    let scene2 = write_scene(
        tmp.path(),
        "record.toml",
        r#"
        [data]
        catalog = "flat"

        [[tasks]]
        fillin = { record = "out/02_fillin_S1_record.txt", h0 = 0.0, c0 = 0.0 }
        "#,
    );
    let out_dir2 = tmp.path().join("out2");
    let out = qlm().arg("run").arg(&scene2).arg("--out").arg(&out_dir2).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let again: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir2.join("01_fillin_record.json")).unwrap())
            .unwrap();
    assert_eq!(again["report"]["min_f"], fillin["report"]["min_f"]);
    assert_eq!(again["report"]["integral_h_minus_f"], fillin["report"]["integral_h_minus_f"]);
}

#[test]
fn reruns_are_byte_identical_modulo_the_timestamp_line() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "repro.toml",
        r#"
        [data]
        catalog = "schwarzschild_slice"
        params = { m = 1.0 }

        [[surfaces]]
        name = "S3"
        radius = 3.0
        grid = [16, 32]

        [[regions]]
        name = "shell"
        shell = { center = [0.0, 0.0, 0.0], r_min = 2.5, r_max = 5.0 }
        shape = [3, 4, 6]

        [[tasks]]
        constraints = { region = "shell" }

        [[tasks]]
        masses = { surface = "S3" }

        [[tasks]]
        embed = { surface = "S3" }

        [[tasks]]
        flow = { surface = "S3" }
        "#,
    );
    let run_into = |dir: &Path| {
        let out = qlm().arg("run").arg(&scene).arg("--out").arg(dir).output().unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    };
    let (dir_a, dir_b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_into(&dir_a);
    run_into(&dir_b);

    let names = |dir: &Path| -> Vec<String> {
        let mut v: Vec<String> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    let files = names(&dir_a);
    assert_eq!(files, names(&dir_b));
    assert!(files.len() >= 6, "artifacts: {files:?}");

    let strip_timestamp = |path: &Path| -> String {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("generated"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    for name in &files {
        let a = strip_timestamp(&dir_a.join(name));
        let b = strip_timestamp(&dir_b.join(name));
        assert_eq!(a, b, "artifact {name} differs between reruns");
    }
}

#[test]
fn dangling_reference_is_rejected_at_parse_time() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "bad.toml",
        r#"
        [data]
        catalog = "flat"

        [[surfaces]]
        name = "S1"
        radius = 1.0

        [[tasks]]
        masses = { surface = "S9" }
        "#,
    );
    for verb in ["validate", "run"] {
        let out = qlm().arg(verb).arg(&scene).output().unwrap();
        assert!(!out.status.success(), "{verb} accepted a dangling reference");
        assert!(stderr(&out).contains("\"S9\""), "{verb} stderr: {}", stderr(&out));
    }
}

#[test]
fn unknown_scene_keys_are_rejected_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "typo.toml",
        "[data]\ncatalog = \"flat\"\nradiuss = 2.0\n",
    );
    let out = qlm().arg("validate").arg(&scene).output().unwrap();
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("radiuss"), "stderr: {err}");
    assert!(err.contains("line 3") || err.contains("3,"), "no position in: {err}");
}

#[test]
fn validate_reports_counts_and_scene_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(
        tmp.path(),
        "ok.toml",
        r#"
        [data]
        catalog = "flat"

        [[surfaces]]
        name = "S1"
        radius = 1.0

        [[tasks]]
        embed = { surface = "S1" }
        "#,
    );
    let out = qlm().arg("validate").arg(&scene).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("OK") && text.contains("1 surface(s)") && text.contains("1 task(s)"));
}

#[test]
fn describe_covers_the_registry_and_rejects_unknown_topics() {
    let out = qlm().args(["describe", "psi"]).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("lambda(d)") && text.contains("infinity"), "{text}");

    let out = qlm().args(["describe", "kly"]).output().unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("Kijowski"));

    let out = qlm().args(["describe", "no-such-topic"]).output().unwrap();
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("available topics") && err.contains("brown-york"), "{err}");
}

#[test]
fn task_error_yields_nonzero_exit_but_other_tasks_still_run() {
    let tmp = tempfile::tempdir().unwrap();
    // radius 1.5 lies below the r > 2m chart boundary, so the first task
    // errors while the second still runs
    let scene = write_scene(
        tmp.path(),
        "partial.toml",
        r#"
        [data]
        catalog = "schwarzschild_slice"
        params = { m = 1.0 }

        [[surfaces]]
        name = "inside"
        radius = 1.5
        grid = [16, 32]

        [[tasks]]
        masses = { surface = "inside" }

        [[tasks]]
        flow = { r0 = 1.0, u0 = 2.0 }
        "#,
    );
    let out_dir = tmp.path().join("out");
    let out = qlm().arg("run").arg(&scene).arg("--out").arg(&out_dir).output().unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("task 1 failed"), "stderr: {}", stderr(&out));
    // the later task still produced its artifact
    assert!(out_dir.join("02_flow_param.json").exists());
}
