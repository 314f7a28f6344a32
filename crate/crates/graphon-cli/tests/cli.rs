//! End-to-end tests of the `graphon` binary: artifact determinism, the
//! manifest lifecycle, machine-readable failures, and the documented
//! subcommand examples.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn graphon(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphon"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("missing artifact {name}"))
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap_or_else(|_| panic!("invalid JSON in {name}"))
}

/// Stderr of a failed run must be one machine-readable JSON object.
fn error_message(output: &Output) -> String {
    assert!(!output.status.success(), "expected a failing exit status");
    let stderr = String::from_utf8_lossy(&output.stderr);
    let value: Value = serde_json::from_str(stderr.trim()).expect("stderr is JSON");
    value["error"]["message"]
        .as_str()
        .expect("error.message present")
        .to_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn sample_artifacts_are_byte_identical_across_runs() {
    let temp = tempfile::tempdir().unwrap();
    let config = write_config(temp.path(), "[sample]\nn = 40\n");
    for out in ["first", "second"] {
        let output = graphon(&["sample", "--config", &config, "--out", out], temp.path());
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let first = temp.path().join("first");
    let second = temp.path().join("second");
    for name in [
        "latents.txt",
        "probability.txt",
        "adjacency.txt",
        "sample_summary.json",
    ] {
        assert_eq!(
            read(&first, name),
            read(&second, name),
            "{name} differs between runs"
        );
    }
    // Manifests agree except for the timestamp, which sits on its own line.
    let strip = |text: String| -> Vec<String> {
        text.lines()
            .filter(|line| !line.contains("timestamp_unix_seconds"))
            .map(str::to_owned)
            .collect()
    };
    assert_eq!(
        strip(read(&first, "manifest.json")),
        strip(read(&second, "manifest.json"))
    );
}

#[test]
fn seed_flag_changes_artifacts() {
    let temp = tempfile::tempdir().unwrap();
    let config = write_config(temp.path(), "[sample]\nn = 40\n");
    for (out, seed) in [("a", "1"), ("b", "2")] {
        let output = graphon(
            &["sample", "--config", &config, "--seed", seed, "--out", out],
            temp.path(),
        );
        assert!(output.status.success());
    }
    assert_ne!(
        read(&temp.path().join("a"), "adjacency.txt"),
        read(&temp.path().join("b"), "adjacency.txt")
    );
}

#[test]
fn estimate_on_zero_adjacency_returns_zeros_with_rank_zero() {
    let temp = tempfile::tempdir().unwrap();
    let n = 16;
    let mut text = format!("{n}\n");
    for _ in 0..n {
        text.push_str(&vec!["0"; n].join(" "));
        text.push('\n');
    }
    fs::write(temp.path().join("zero.txt"), text).unwrap();

    let output = graphon(
        &["estimate", "--input", "zero.txt", "--out", "est"],
        temp.path(),
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let out = temp.path().join("est");
    let estimate = read(&out, "estimate.txt");
    let mut lines = estimate.lines();
    assert_eq!(lines.next(), Some("16"));
    for line in lines {
        for token in line.split_whitespace() {
            assert_eq!(token.parse::<f64>().unwrap(), 0.0);
        }
    }
    let sidecar = read_json(&out, "estimate_summary.json");
    assert_eq!(sidecar["retained_rank"], 0);
    assert_eq!(sidecar["n"], 16);
}

#[test]
fn packing_verify_rejects_tampered_frame_file() {
    let temp = tempfile::tempdir().unwrap();
    let config = write_config(
        temp.path(),
        "[packing]\nm = 12\nk = 2\ndelta = 0.25\ntarget = 3\nbudget = 512\n",
    );
    let output = graphon(
        &["packing", "build", "--config", &config, "--out", "pack"],
        temp.path(),
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    // The untouched file verifies clean.
    let output = graphon(
        &[
            "packing",
            "verify",
            "--config",
            &config,
            "--frames",
            "pack/frames.txt",
            "--out",
            "verify",
        ],
        temp.path(),
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = read_json(&temp.path().join("verify"), "verification.json");
    assert_eq!(report["frames"], 3);

    // Perturb one entry: the column sum breaks and the invariant is named.
    let text = read(&temp.path().join("pack"), "frames.txt");
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let row = 2; // first data row: header, blank line, then the frame
    let mut fields: Vec<String> = lines[row].split_whitespace().map(str::to_owned).collect();
    let bumped: f64 = fields[0].parse::<f64>().unwrap() + 0.5;
    fields[0] = format!("{bumped}");
    lines[row] = fields.join(" ");
    fs::write(temp.path().join("tampered.txt"), lines.join("\n") + "\n").unwrap();

    let output = graphon(
        &[
            "packing",
            "verify",
            "--config",
            &config,
            "--frames",
            "tampered.txt",
            "--out",
            "verify2",
        ],
        temp.path(),
    );
    let message = error_message(&output);
    assert!(
        message.contains("not centered"),
        "invariant not named: {message}"
    );
}

#[test]
fn rate_experiment_writes_csv_fit_and_manifest() {
    let temp = tempfile::tempdir().unwrap();
    let config = write_config(
        temp.path(),
        "[experiment]\nn_grid = [16, 32]\nreplicates = 2\n",
    );
    let output = graphon(
        &["experiment", "rate", "--config", &config, "--out", "rate"],
        temp.path(),
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let out = temp.path().join("rate");
    let rows = read(&out, "rate_rows.csv");
    assert!(rows.starts_with("n,replicate,mse,retained_rank,seed_stream\n"));
    assert_eq!(rows.lines().count(), 1 + 4, "two sizes x two replicates");
    let summary = read(&out, "rate_summary.csv");
    assert!(summary.starts_with("n,mean_mse,stderr,mean_rank\n"));

    let fit = read_json(&out, "fit.json");
    for key in ["slope", "intercept", "r2", "theory_slope"] {
        assert!(fit.get(key).is_some(), "fit.json missing {key}");
    }

    let manifest = read_json(&out, "manifest.json");
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["command"], "experiment rate");
    assert_eq!(manifest["config"]["estimate"]["c"], 4.0);
    let artifacts: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(artifacts, ["rate_rows.csv", "rate_summary.csv", "fit.json"]);
}

#[test]
fn failed_run_leaves_incomplete_manifest() {
    let temp = tempfile::tempdir().unwrap();
    let output = graphon(
        &["estimate", "--input", "missing.txt", "--out", "est"],
        temp.path(),
    );
    let message = error_message(&output);
    assert!(message.contains("missing.txt"), "{message}");
    let manifest = read_json(&temp.path().join("est"), "manifest.json");
    assert_eq!(manifest["status"], "incomplete");
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let temp = tempfile::tempdir().unwrap();
    let config = write_config(temp.path(), "taus = [1, 2]\n");
    let output = graphon(&["sample", "--config", &config, "--out", "x"], temp.path());
    let message = error_message(&output);
    assert!(message.contains("taus"), "unknown key not named: {message}");
}

#[test]
fn conditioning_and_invariance_reports_parse() {
    let temp = tempfile::tempdir().unwrap();
    let config = write_config(
        temp.path(),
        "[experiment]\nn = 120\ntrials = 40\ngrid = 128\nmaps = [\"identity\", \"half-swap\"]\n",
    );
    let output = graphon(
        &[
            "experiment",
            "conditioning",
            "--config",
            &config,
            "--out",
            "cond",
        ],
        temp.path(),
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = read_json(&temp.path().join("cond"), "conditioning.json");
    assert_eq!(report["trials"], 40);
    assert!(report["joint"]["frequency"].as_f64().unwrap() <= 1.0);

    let output = graphon(
        &[
            "experiment",
            "invariance",
            "--config",
            &config,
            "--out",
            "inv",
        ],
        temp.path(),
    );
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let rows = read_json(&temp.path().join("inv"), "invariance.json");
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["map"], "identity");
    assert_eq!(rows[0]["max_deviation"], 0.0);
    assert!(rows[1]["max_deviation"].as_f64().unwrap() < 1e-6);
}
