use std::path::Path;
use std::process::Command;

use vtf_harness::report::{read_records, strip_timing_columns, SUMMARY_COLUMNS};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vtf-rlbfgs"));
    cmd.env_remove("VTF_OUT").env_remove("VTF_JOBS").env("RUST_LOG", "warn");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const ONE_RUN: &str = r#"{
    "components": [2], "dims": [2], "separations": ["high"],
    "modes": ["inverse_sqrt"], "runs": 1, "seed": 5
}"#;

const SMALL_GRID: &str = r#"
components = [2]
dims = [2, 3]
separations = ["mid", "high"]
step_rules = ["exp_map", "taylor_retraction"]
runs = 2
seed = 11
"#;

#[test]
fn one_run_one_mode_gives_one_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "one.json", ONE_RUN);
    let out = tmp.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let file = read_records(&out).unwrap();
    assert_eq!(file.records.len(), 1);
    assert_eq!(file.config.seed, 5);

    let summary = std::fs::read_to_string(out.join("summary_exp_map.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_COLUMNS.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..5], ["2", "2", "40", "high", "vtf_isr"]);
    assert_eq!(row[6], "0");
    assert!(lines.next().is_none());

    let trace = std::fs::read_to_string(out.join("traces/K2_n2_N40_high_exp_map/vtf_isr_run00.csv")).unwrap();
    assert!(trace.starts_with("iteration,cost_gap\n"));
    assert_eq!(trace.lines().count(), file.records[0].cost_trace.len() + 1);
}

#[test]
fn toml_grid_writes_one_summary_per_step_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "grid.toml", SMALL_GRID);
    let out = tmp.path().join("grid");
    assert!(bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status
        .success());
    let records = read_records(&out).unwrap().records;
    // 4 cells x 2 runs x 2 rules x 3 modes
    assert_eq!(records.len(), 48);
    for name in ["summary_exp_map.csv", "summary_taylor_retraction.csv"] {
        let csv = std::fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4 * 3, "{name}");
    }
}

#[test]
fn same_seed_same_summary_and_other_seed_differs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "grid.toml", SMALL_GRID);
    let run = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        let status = bin()
            .arg("run")
            .arg("--config")
            .arg(&cfg)
            .args(["--seed", seed, "--jobs", "3", "--out"])
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        strip_timing_columns(&std::fs::read_to_string(out.join("summary_exp_map.csv")).unwrap())
    };
    let a = run("a", "3");
    let b = run("b", "3");
    let c = run("c", "4");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn summarize_rebuilds_the_same_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "grid.toml", SMALL_GRID);
    let out = tmp.path().join("s");
    assert!(bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status
        .success());
    let before = std::fs::read_to_string(out.join("summary_taylor_retraction.csv")).unwrap();
    std::fs::remove_file(out.join("summary_taylor_retraction.csv")).unwrap();
    std::fs::remove_dir_all(out.join("traces")).unwrap();

    let output = bin().arg("summarize").arg("--records").arg(&out).output().unwrap();
    assert!(output.status.success());
    let after = std::fs::read_to_string(out.join("summary_taylor_retraction.csv")).unwrap();
    assert_eq!(before, after);
    assert!(out.join("traces").is_dir());
    assert!(String::from_utf8(output.stdout)
        .unwrap()
        .contains("== summary_exp_map.csv"));
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "one.json", ONE_RUN);
    let out = tmp.path().join("from_env");
    let status = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .env("VTF_OUT", &out)
        .env("VTF_JOBS", "1")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(out.join("records.json").is_file());
}

#[test]
fn invalid_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{"runs": 0}"#);
    let output = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("never"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8(output.stderr)
        .unwrap()
        .contains("runs must be positive"));
    assert!(!tmp.path().join("never").exists());
}

#[test]
fn missing_records_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .arg("summarize")
        .arg("--records")
        .arg(tmp.path())
        .output()
        .unwrap()
        .status;
    assert!(!status.success());
}

#[test]
fn saved_datasets_match_what_the_solvers_saw() {
    use vtf_core::gmm::Dataset;
    use vtf_harness::config::ExperimentConfig;
    use vtf_harness::experiment::prepare_run;

    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "data.toml",
        "components = [2]\ndims = [3]\nruns = 2\nseed = 9\nsave_datasets = true\n",
    );
    let out = tmp.path().join("d");
    assert!(bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap().status.success());
    let config = ExperimentConfig::load(&cfg).unwrap();
    let cell = config.cells()[0];
    for run in 0..2 {
        let path = out.join(format!("datasets/{}_run{run:02}.csv", cell.slug()));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), cell.len);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 3);
        let back = Dataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.as_flat(), prepare_run(&config, &cell, run).unwrap().data.as_flat());
    }
}
