use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;
use wcsck::run::PlotData;
use wcsck::{execute, export_plots, parse_scenario, HarnessError, Task};

const FS: &str = "seed = 5\n\n[grid]\nn = 257\n";

const EXPONENTIAL: &str = r#"
seed = 5

[grid]
n = 1025

[weights.v]
preset = "exponential"
a = 0.3

[weights.w]
preset = "exponential"
a = 0.3

[march]
t_max = 0.2
"#;

fn wcsck(dir: &Path, task: &str, scenario: &str, extra: &[&str]) -> (i32, String) {
    let file = dir.join(format!("{task}.toml"));
    fs::write(&file, scenario).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wcsck"))
        .arg(task)
        .arg("--scenario")
        .arg(&file)
        .arg("--out")
        .arg(dir.join(task))
        .args(extra)
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn identities_on_fubini_study_pass() {
    let tmp = TempDir::new().unwrap();
    let (code, text) = wcsck(tmp.path(), "verify-identities", FS, &[]);
    assert_eq!(code, 0, "{text}");
    let m = manifest(&tmp.path().join("verify-identities"));
    assert_eq!(m["passed"], true);
    assert_eq!(m["scenario_hash"].as_str().unwrap().len(), 64);
    assert!(m["conventions"].as_array().unwrap().iter().any(|c| c["name"] == "jxi"));
    assert!(m["calibration"]["constants"].as_object().unwrap().len() >= 9);
    assert!(m["started"].is_string() && m["finished"].is_string() && m["version"].is_string());
    let events = fs::read_to_string(tmp.path().join("verify-identities/events.jsonl")).unwrap();
    for line in events.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
    assert!(events.lines().count() > 9);
}

#[test]
fn log_convex_weight_fails_the_gate() {
    let tmp = TempDir::new().unwrap();
    let scenario = "[grid]\nn = 257\n\n[weights.v]\npreset = \"cosh\"\nk = 2.0\ncenter = 0.5\n";
    let (code, text) = wcsck(tmp.path(), "verify-identities", scenario, &[]);
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("refused"), "{text}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let (code, text) = wcsck(tmp.path(), "futaki", "foo = 1\n", &[]);
    assert_eq!(code, 3);
    assert!(text.contains("foo"), "{text}");
    let (code, _) = wcsck(tmp.path(), "march", "task = \"futaki\"\n", &[]);
    assert_eq!(code, 3);
}

#[test]
fn tolerance_overrides_come_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("s.toml");
    fs::write(&file, FS).unwrap();
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_wcsck"))
            .args(["futaki", "--scenario"])
            .arg(&file)
            .arg("--out")
            .arg(tmp.path().join("f"))
            .env("WCSCK_FUTAKI", value)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(run("1e-30"), 2);
    assert_eq!(run("zero"), 3);
    let recorded = manifest(&tmp.path().join("f"))["scenario"]["tolerances"]["futaki"].as_f64().unwrap();
    assert!((recorded / 1e-30 - 1.0).abs() < 1e-12, "{recorded}");
}

#[test]
fn same_seed_gives_identical_summaries() {
    let tmp = TempDir::new().unwrap();
    let mut summaries = Vec::new();
    for (k, seed) in ["5", "5", "6"].iter().enumerate() {
        let dir = tmp.path().join(k.to_string());
        fs::create_dir_all(&dir).unwrap();
        let (code, text) = wcsck(&dir, "functionals", FS, &["--seed", seed]);
        assert_eq!(code, 0, "{text}");
        summaries.push(fs::read(dir.join("functionals/summary.csv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
    assert_ne!(summaries[0], summaries[2]);
}

#[test]
fn degenerate_twist_march_fails() {
    let tmp = TempDir::new().unwrap();
    let scenario = format!("{FS}\n[twist]\npreset = \"cubic\"\neps = 0.0\n");
    let (code, text) = wcsck(tmp.path(), "march", &scenario, &[]);
    assert_ne!(code, 0, "{text}");
    assert_eq!(code, 2);
    let m = manifest(&tmp.path().join("march"));
    assert_eq!(m["passed"], false);
    assert!(m["error"].as_str().unwrap().contains("step size underflow"), "{m}");
}

#[test]
fn march_exports_three_plot_tables_and_resumes() {
    let tmp = TempDir::new().unwrap();
    let (code, text) = wcsck(tmp.path(), "march", EXPONENTIAL, &[]);
    assert_eq!(code, 0, "{text}");
    let dir = tmp.path().join("march");
    for name in ["plot_t_residual.csv", "plot_t_diagnostics.csv", "plot_t_mabuchi.csv", "summary.csv", "last_state.json"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let residual = fs::read_to_string(dir.join("plot_t_residual.csv")).unwrap();
    assert!(residual.starts_with("t,residual\n") && residual.lines().count() > 3);
    let resumed = EXPONENTIAL.replace("t_max = 0.2", "t_max = 0.25");
    let last = dir.join("last_state.json");
    let sub = tmp.path().join("resumed");
    fs::create_dir_all(&sub).unwrap();
    let (code, text) = wcsck(&sub, "march", &resumed, &["--resume", last.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let summary = fs::read_to_string(sub.join("march/summary.csv")).unwrap();
    let first_t: f64 = summary.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((first_t - 0.2).abs() < 1e-12, "{first_t}");
}

#[test]
fn coercivity_exports_the_envelope() {
    let tmp = TempDir::new().unwrap();
    let (code, text) = wcsck(tmp.path(), "coercivity", FS, &[]);
    assert_eq!(code, 0, "{text}");
    let env = fs::read_to_string(tmp.path().join("coercivity/plot_coercivity_envelope.csv")).unwrap();
    assert!(env.starts_with("s,mabuchi,envelope\n"));
    assert_eq!(env.lines().count(), 7);
}

#[test]
fn empty_run_has_no_trace() {
    let s = parse_scenario(FS).unwrap();
    let tmp = TempDir::new().unwrap();
    let futaki = execute(&s, Task::Futaki, None).unwrap();
    assert!(matches!(export_plots(&futaki, tmp.path()), Err(HarnessError::MissingTrace { .. })));
    let mut march = futaki.clone();
    march.task = Task::March;
    march.plots = PlotData::March(Default::default());
    assert!(matches!(export_plots(&march, tmp.path()), Err(HarnessError::MissingTrace { .. })));
}

#[test]
fn solve_converges_on_the_fine_grid() {
    let tmp = TempDir::new().unwrap();
    let (code, text) = wcsck(tmp.path(), "solve", EXPONENTIAL, &[]);
    assert_eq!(code, 0, "{text}");
    let solution = fs::read_to_string(tmp.path().join("solve/solution.csv")).unwrap();
    assert_eq!(solution.lines().count(), 1026);
}
