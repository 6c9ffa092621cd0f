use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 7

[numerics]
nx = 16
ny = 32
dt = 2.5e-4
T = 0.01

[analysis]
report_every = 10
lift_nodes = 32
"#;

fn hydrolim(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrolim"))
        .args(args)
        .env("HYDROLIM_THREADS", threads)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&hydrolim(&["frobnicate"], "1")), 2);
    assert_eq!(code(&hydrolim(&["run", "--config", "/nonexistent/config.toml"], "1")), 2);
    assert_eq!(code(&hydrolim(&["verify", "--level", "extreme"], "1")), 2);
    assert_eq!(code(&hydrolim(&["rate-fit"], "1")), 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[sweep]\nepsilons = [0.1, 0.2]\n");
    let out = hydrolim(&["gen-data", "--config", &bad, "--out", &path(&dir.path().join("o"))], "1");
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let unknown = write_config(dir.path(), "[numerics]\nwidth = 3\n");
    assert_eq!(code(&hydrolim(&["gen-data", "--config", &unknown], "1")), 2);

    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&hydrolim(&["plot", &path(&empty), "--out", &path(&dir.path().join("p"))], "1")), 2);
}

#[test]
fn gen_data_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let out_dir = dir.path().join("data");
    let out = hydrolim(&["gen-data", "--config", &config, "--out", &path(&out_dir)], "1");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    for name in ["u0.hlim", "v0.hlim", "data_report.json"] {
        assert!(out_dir.join(name).is_file(), "{name}");
    }
    assert_eq!(&fs::read(out_dir.join("u0.hlim")).unwrap()[..5], b"HLIM1");
}

#[test]
fn run_is_deterministic_and_feeds_rate_fit_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = hydrolim(&["run", "--config", &config, "--out", &path(&a)], "1");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("slope L2"));
    assert_eq!(code(&hydrolim(&["run", "--config", &config, "--out", &path(&b)], "3")), 0);
    for name in ["summary.json", "monitor.csv", "eps_0.05/report.json", "eps_0.05/errors.csv", "eps_0.2/u.hlim"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 7);

    let seeded = dir.path().join("seeded");
    assert_eq!(code(&hydrolim(&["run", "--config", &config, "--out", &path(&seeded), "--seed", "11"], "1")), 0);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(seeded.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);

    let fit_path = dir.path().join("fit.json");
    let out = hydrolim(&["rate-fit", &path(&a), "--out", &path(&fit_path)], "1");
    assert!(matches!(code(&out), 0 | 1));
    let fit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fit["epsilons"].as_array().unwrap().len(), 3);
    assert_eq!(fit["passed"] == true, code(&out) == 0);
    assert!(fit_path.is_file());

    let single = hydrolim(&["rate-fit", &path(&a.join("eps_0.1").join("report.json"))], "1");
    assert_eq!(code(&single), 2);

    let plots = dir.path().join("plots");
    assert_eq!(code(&hydrolim(&["plot", &path(&a), "--out", &path(&plots)], "1")), 0);
    assert!(plots.join("errors_vs_eps.csv").is_file());
    assert!(plots.join("gevrey_radius.gp").is_file());
}

#[test]
fn quick_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hydrolim(&["verify", "--level", "quick", "--out", &path(dir.path())], "1");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["seed"], 20240531);
    assert!(!report["checks"].as_array().unwrap().is_empty());
}
