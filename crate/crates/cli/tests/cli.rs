use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridprec"))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hybridprec-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_tiny_config(dir: &PathBuf) -> PathBuf {
    let path = dir.join("tiny.cfg");
    std::fs::write(
        &path,
        "n_t = 16\nn_r = 4\nn_s = 2\nn_rf_t = 2\nn_rf_r = 2\n\
         algorithms = digital, pe-altmin\nsnr_db = 0\nrealizations = 3\n\
         clusters = 3\nrays = 4\nseed = 11\n",
    )
    .unwrap();
    path
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn run_is_deterministic_and_lists_written_files() {
    let dir = scratch_dir("run");
    let cfg = write_tiny_config(&dir);

    let run = |out_name: &str, workers: &str| {
        let out_dir = dir.join(out_name);
        let output = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(&out_dir)
            .args(["--format", "plot-script", "--workers", workers])
            .output()
            .unwrap();
        assert!(output.status.success(), "{output:?}");
        (out_dir, output)
    };

    let (dir_a, out_a) = run("a", "1");
    let (dir_b, _) = run("b", "2");

    let csv_a = std::fs::read_to_string(dir_a.join("results.csv")).unwrap();
    let csv_b = std::fs::read_to_string(dir_b.join("results.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "same config must give identical bytes");
    assert!(csv_a.starts_with(
        "algorithm,structure,snr_db,n_rf,subcarriers,mean_rate,std_rate,mean_energy_eff,realizations,wall_time_s\n"
    ));
    assert!(dir_a.join("results.py").exists());

    let lines = stdout_lines(&out_a);
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with("results.csv"));
    assert!(lines[1].ends_with("results.py"));
}

#[test]
fn seed_override_changes_output() {
    let dir = scratch_dir("seed");
    let cfg = write_tiny_config(&dir);
    let run = |seed: &str, name: &str| {
        let out_dir = dir.join(name);
        let output = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(&out_dir)
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert!(output.status.success());
        std::fs::read_to_string(out_dir.join("results.csv")).unwrap()
    };
    let a = run("1", "s1");
    let b = run("2", "s2");
    let a_again = run("1", "s1b");
    assert_ne!(a, b);
    assert_eq!(a, a_again);
}

#[test]
fn validation_error_exits_two_without_output() {
    let dir = scratch_dir("invalid");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "n_t = 16\nn_r = 4\nn_s = 3\nn_rf_t = 2\nn_rf_r = 3\n").unwrap();
    let out_dir = dir.join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error:"));
    assert!(!out_dir.join("results.csv").exists());
}

#[test]
fn bad_format_and_missing_config_exit_codes() {
    let dir = scratch_dir("codes");
    let cfg = write_tiny_config(&dir);

    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--format", "glossy-print"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    let output = bin()
        .args(["run", "--config", "/nonexistent/path.cfg"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("/nonexistent/path.cfg"));
}

#[test]
fn sweep_concatenates_chain_counts() {
    let dir = scratch_dir("sweep");
    let cfg = write_tiny_config(&dir);
    let out_dir = dir.join("out");
    let output = bin()
        .args(["sweep", "--axis", "n_rf", "--values", "2,3", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(out_dir.join("sweep-n_rf.csv")).unwrap();
    let chains: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(chains, vec!["2", "2", "3", "3"]);

    // A value below the stream count must be rejected up front.
    let output = bin()
        .args(["sweep", "--axis", "n_rf", "--values", "1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn negative_snr_sweep_values_parse() {
    let dir = scratch_dir("snr");
    let cfg = write_tiny_config(&dir);
    let out_dir = dir.join("out");
    let output = bin()
        .args(["sweep", "--axis", "snr", "--values=-10,-5", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(out_dir.join("sweep-snr.csv")).unwrap();
    let snrs: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(snrs, vec!["-10", "-10", "-5", "-5"]);
}

#[test]
fn figure_preset_runs_scaled_down() {
    let dir = scratch_dir("figure");
    let out_dir = dir.join("out");
    let output = bin()
        .args(["figure", "4", "--realizations", "1", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(out_dir.join("figure4.csv")).unwrap();
    let mut algorithms: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    algorithms.dedup();
    assert_eq!(
        algorithms,
        vec!["digital", "mo-altmin", "pe-altmin", "omp", "analog", "sdr-altmin"]
    );
    assert!(text
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("sdr-altmin"))
        .all(|l| l.split(',').nth(1) == Some("partially")));

    let output = bin().args(["figure", "12"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}
