//! Binary-level checks: argument wiring, exit codes, artifact layout, and
//! the manifest contract. Everything runs the compiled executable.

use std::path::Path;
use std::process::Command;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_basinflow"))
        .args(args)
        .output()
        .expect("spawning the binary must succeed");
    (
        out.status.code().expect("process must exit normally"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().expect("tempdir")
}

fn manifest(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("manifest.txt")).expect("manifest.txt must exist")
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let d = tmp();
    let (code, _, stderr) = run_cli(&[
        "simulate",
        "--preset",
        "heat",
        "--out",
        d.path().to_str().unwrap(),
        "--set",
        "stepper.dtt=0.1",
    ]);
    assert_eq!(code, 1, "unknown key must exit 1, stderr: {stderr}");
    assert!(
        stderr.contains("stepper.dtt"),
        "error should name the offending key, got: {stderr}"
    );
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let d = tmp();
    let (code, _, stderr) = run_cli(&[
        "simulate",
        "--preset",
        "examplezero",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 1, "unknown preset must exit 1, stderr: {stderr}");
    assert!(stderr.contains("examplezero"), "got: {stderr}");
}

#[test]
fn malformed_set_flag_is_a_usage_error() {
    let d = tmp();
    let (code, _, stderr) = run_cli(&[
        "simulate",
        "--preset",
        "heat",
        "--out",
        d.path().to_str().unwrap(),
        "--set",
        "grid.nx",
    ]);
    assert_eq!(code, 1, "a --set without '=' must exit 1, stderr: {stderr}");
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let (code, _, stderr) = run_cli(&["simulate", "--config", "/nonexistent/run.conf"]);
    assert_eq!(code, 1, "missing config file must exit 1, stderr: {stderr}");
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let d = tmp();
    let conf = d.path().join("run.conf");
    std::fs::write(
        &conf,
        "# tiny smoke run\npreset = heat\ngrid.nx = 9\ngrid.ny = 9\nclassifier.t_max = 0.02\n",
    )
    .unwrap();
    let out_dir = d.path().join("out");
    let (code, _, stderr) = run_cli(&[
        "simulate",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--set",
        "init.scale=0.5",
    ]);
    assert_eq!(code, 0, "smoke run must succeed, stderr: {stderr}");
    let m = manifest(&out_dir);
    assert!(
        m.contains("config.init.scale = 0.5"),
        "--set must override the file; manifest:\n{m}"
    );
    assert!(m.contains("config.grid.nx = 9"), "file keys must apply");
    // The final field dump advertises the grid in its header.
    let dump = std::fs::read_to_string(out_dir.join("u_final.txt")).unwrap();
    let header = dump.lines().next().unwrap();
    assert!(
        header.starts_with("9 9 1"),
        "field header should carry nx ny lx ly, got: {header}"
    );
}

#[test]
fn classify_writes_verdict_row_with_stable_columns() {
    let d = tmp();
    let (code, _, stderr) = run_cli(&[
        "classify",
        "--preset",
        "example2",
        "--out",
        d.path().to_str().unwrap(),
        "--set",
        "grid.nx=9",
        "--set",
        "grid.ny=9",
        "--set",
        "init.scale=0.01",
        "--set",
        "classifier.t_max=2",
        "--set",
        "mhat.budget=2",
    ]);
    assert_eq!(code, 0, "classify must succeed, stderr: {stderr}");
    let verdict = std::fs::read_to_string(d.path().join("verdict.csv")).unwrap();
    let mut lines = verdict.lines();
    let header = lines.next().unwrap();
    let row = lines.next().expect("verdict.csv needs a data row");
    assert_eq!(
        header.split(',').count(),
        row.split(',').count(),
        "header and row widths must agree"
    );
    assert!(
        row.starts_with("decay_to_zero"),
        "a tiny datum must decay, got row: {row}"
    );
    assert!(d.path().join("trace.csv").exists());
    assert!(d.path().join("concavity.csv").exists());
}

#[test]
fn threshold_without_upper_bracket_exits_with_method_error() {
    let d = tmp();
    let (code, _, stderr) = run_cli(&[
        "threshold",
        "--preset",
        "heat",
        "--out",
        d.path().to_str().unwrap(),
        "--set",
        "grid.nx=7",
        "--set",
        "grid.ny=7",
        "--set",
        "classifier.t_max=5",
    ]);
    assert_eq!(
        code, 2,
        "pure diffusion has no blow-up side and must exit 2, stderr: {stderr}"
    );
    let m = manifest(&d.path());
    assert!(
        m.contains("no upper bracket"),
        "manifest should carry the bracket diagnostic:\n{m}"
    );
}

#[test]
fn verify_conditions_passes_both_shipped_presets() {
    for preset in ["example1", "example2"] {
        let d = tmp();
        let (code, stdout, stderr) = run_cli(&[
            "verify-conditions",
            "--preset",
            preset,
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{preset} must pass, stderr: {stderr}");
        assert!(
            stdout.contains("pass"),
            "report should be printed, got: {stdout}"
        );
        let csv = std::fs::read_to_string(d.path().join("conditions.csv")).unwrap();
        assert!(
            csv.contains("coefficient_saturation,pass"),
            "conditions.csv should list per-check verdicts:\n{csv}"
        );
    }
}

#[test]
fn oracle_check_accepts_the_shipped_stepper() {
    let d = tmp();
    let (code, _, stderr) = run_cli(&[
        "oracle-check",
        "--preset",
        "example2",
        "--out",
        d.path().to_str().unwrap(),
        "--set",
        "grid.nx=9",
        "--set",
        "grid.ny=9",
        "--set",
        "init.scale=0.05",
    ]);
    assert_eq!(code, 0, "oracle check must pass, stderr: {stderr}");
    let csv = std::fs::read_to_string(d.path().join("oracle.csv")).unwrap();
    assert!(
        csv.lines().count() >= 5,
        "expected one row per checkpoint:\n{csv}"
    );
}

#[test]
fn manifest_inventory_covers_every_artifact() {
    let d = tmp();
    let (code, _, stderr) = run_cli(&[
        "simulate",
        "--preset",
        "heat",
        "--out",
        d.path().to_str().unwrap(),
        "--set",
        "grid.nx=9",
        "--set",
        "grid.ny=9",
        "--set",
        "classifier.t_max=0.02",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let m = manifest(&d.path());
    let hashed: Vec<&str> = m
        .lines()
        .filter_map(|l| {
            l.strip_prefix("file.")
                .and_then(|r| r.split(".sha256").next())
        })
        .collect();
    for entry in std::fs::read_dir(d.path()).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        if name == "manifest.txt" {
            assert!(
                m.contains("manifest_self"),
                "manifest must declare itself unhashed"
            );
            continue;
        }
        assert!(
            hashed.contains(&name.as_str()),
            "artifact {name} missing from the manifest inventory:\n{m}"
        );
    }
    assert!(m.contains("exit_code = 0"), "manifest records the exit code");
    assert!(m.contains("stage.evolve = ok"), "stages are recorded:\n{m}");
}

#[test]
fn seed_changes_certificate_sampling_but_not_the_trajectory() {
    let run = |seed: &str| {
        let d = tmp();
        let (code, _, stderr) = run_cli(&[
            "classify",
            "--preset",
            "cubic",
            "--out",
            d.path().to_str().unwrap(),
            "--seed",
            seed,
            "--set",
            "grid.nx=9",
            "--set",
            "grid.ny=9",
            "--set",
            "init.scale=50",
            "--set",
            "classifier.t_max=1",
            "--set",
            "mhat.budget=4",
        ]);
        assert_eq!(code, 0, "stderr: {stderr}");
        let trace = std::fs::read_to_string(d.path().join("trace.csv")).unwrap();
        let verdict = std::fs::read_to_string(d.path().join("verdict.csv")).unwrap();
        (trace, verdict)
    };
    let (trace_a, verdict_a) = run("1");
    let (trace_b, verdict_b) = run("2");
    assert_eq!(trace_a, trace_b, "the trajectory must not depend on the seed");
    assert!(
        verdict_a.lines().nth(1).unwrap().starts_with("blow_up"),
        "a huge cubic datum blows up: {verdict_a}"
    );
    assert!(verdict_b.lines().nth(1).unwrap().starts_with("blow_up"));
}
