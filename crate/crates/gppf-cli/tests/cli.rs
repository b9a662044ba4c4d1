//! Black-box tests of the `gppf` binary: flag validation, output files,
//! and run-to-run determinism.

use std::path::Path;
use std::process::{Command, Output};

fn gppf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gppf"))
}

fn run(args: &[&str]) -> Output {
    gppf().args(args).output().expect("spawning gppf")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn help_exits_zero_everywhere() {
    for args in [
        vec!["--help"],
        vec!["trial", "--help"],
        vec!["campaign", "--help"],
        vec!["surface-info", "--help"],
        vec!["export-curves", "--help"],
    ] {
        let o = run(&args);
        assert!(o.status.success(), "{args:?}");
        let text = stdout(&o);
        assert!(text.contains("Usage"), "{args:?}");
    }
    // The campaign help lists every flag with its default.
    let o = run(&["campaign", "--help"]);
    let text = stdout(&o);
    for flag in [
        "--surface", "--dem", "--policy", "--trials", "--seed", "--noise-std", "--stopping",
        "--norm", "--jobs", "--out", "--townsend-classic", "--cold-start",
    ] {
        assert!(text.contains(flag), "campaign help lacks {flag}");
    }
    assert!(text.contains("default"), "defaults not shown");
}

#[test]
fn bad_flags_exit_nonzero_with_usage() {
    let o = run(&["campaign", "--bogus"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage") || stderr(&o).contains("usage"));

    let o = run(&["campaign"]); // missing --surface and --out
    assert!(!o.status.success());
}

#[test]
fn domain_errors_exit_one_with_a_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "trial", "--surface", "parabola", "--policy", "constrained:0", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error:"), "stderr: {err}");
    assert_eq!(err.trim_end().lines().count(), 1, "stderr: {err}");

    let o = run(&["trial", "--surface", "parabola", "--noise-std=-0.5", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn surface_info_prints_the_parabola_facts() {
    let o = run(&["surface-info", "--surface", "parabola"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("441"), "{text}");
    assert!(text.contains("2.00"), "{text}");
    assert!(text.contains("(1, 0)"), "{text}");
}

#[test]
fn lunar_without_dem_warns_and_uses_the_crater() {
    let o = run(&["surface-info", "--surface", "lunar"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("synthetic crater"));
    assert!(stdout(&o).contains("synthetic-crater"));
}

fn tiny_dem() -> String {
    // A 4x4 grid; target x1 + 2*x2, elevation 0.1*x1, one gap.
    let axis = [0.0, 0.25, 0.5, 0.75];
    let mut text = String::from("x1,x2,elevation,target\n");
    for (row, &x2) in axis.iter().enumerate() {
        for &x1 in &axis {
            if row == 2 && x1 == 0.5 {
                text.push_str(&format!("{x1},{x2},{:.3},\n", 0.1 * x1));
            } else {
                text.push_str(&format!("{x1},{x2},{:.3},{}\n", 0.1 * x1, x1 + 2.0 * x2));
            }
        }
    }
    text
}

#[test]
fn trial_on_a_dem_writes_a_full_length_trace() {
    let dir = tempfile::tempdir().unwrap();
    let dem = dir.path().join("site.csv");
    std::fs::write(&dem, tiny_dem()).unwrap();
    let out = dir.path().join("runs");
    let o = run(&[
        "trial",
        "--surface",
        "lunar",
        "--dem",
        dem.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let trace = std::fs::read_to_string(out.join("trace_conventional_trial00.csv")).unwrap();
    // 16 grid points, paper stopping clamps to the grid size.
    assert_eq!(trace.lines().count(), 17);
}

#[test]
fn gppf_out_env_is_the_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let dem = dir.path().join("site.csv");
    std::fs::write(&dem, tiny_dem()).unwrap();
    let out = dir.path().join("env_runs");
    let o = gppf()
        .args(["trial", "--surface", "lunar", "--dem", dem.to_str().unwrap()])
        .env("GPPF_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    assert!(out.join("trace_conventional_trial00.csv").exists());
}

#[test]
fn repeated_trials_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = run(&[
            "trial", "--surface", "parabola", "--policy", "normalized", "--seed", "7", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "stderr: {}", stderr(&o));
        bytes.push(std::fs::read(out.join("trace_normalized_trial00.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn campaign_writes_all_artifacts_and_jobs_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let base: Vec<&str> = vec![
        "campaign",
        "--surface",
        "parabola",
        "--trials",
        "1",
        "--policy",
        "conventional",
        "--policy",
        "constrained:3",
        "--seed",
        "5",
    ];
    let out1 = dir.path().join("j2");
    let o = run(
        &[base.clone(), vec!["--jobs", "2", "--out", out1.to_str().unwrap()]].concat(),
    );
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("conventional:"), "{text}");
    assert!(text.contains("constrained-3:"), "{text}");

    let names: Vec<String> = dir_bytes(&out1).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "curve_constrained-3.csv",
            "curve_conventional.csv",
            "manifest.json",
            "summary.csv",
            "trace_constrained-3_trial00.csv",
            "trace_conventional_trial00.csv",
        ]
    );

    let out2 = dir.path().join("j1");
    let o = run(
        &[base, vec!["--jobs", "1", "--out", out2.to_str().unwrap()]].concat(),
    );
    assert!(o.status.success());
    assert_eq!(dir_bytes(&out1), dir_bytes(&out2));
}

#[test]
fn export_curves_reproduces_the_campaign_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("camp");
    let o = run(&[
        "campaign",
        "--surface",
        "parabola",
        "--trials",
        "2",
        "--policy",
        "constrained:2",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));

    let exported = dir.path().join("exported");
    let o = run(&[
        "export-curves",
        "--in",
        out.to_str().unwrap(),
        "--metric",
        "nrmse-vs-distance",
        "--out",
        exported.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let original = std::fs::read(out.join("curve_constrained-2.csv")).unwrap();
    let rebuilt = std::fs::read(exported.join("curve_constrained-2.csv")).unwrap();
    assert_eq!(original, rebuilt);

    let o = run(&["export-curves", "--in", out.to_str().unwrap(), "--metric", "spaghetti"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown metric"));
}
