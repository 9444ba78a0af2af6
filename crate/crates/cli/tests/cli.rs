use std::fs;
use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
seed = 4

[model]
n_sites = 4
m = 0.2

[optimizer]
budget = 3000
refit_cadence = 10

[checkpoints]
count = 3
shots = 500

[qse]
shots = 500
resamples = 10

[sweep]
masses = [-1.5, 0.5]

[scalability]
sites = [2, 4]
max_layers = 4
delta_masses = [0.0, 1.0]
starts = 2
max_iters = 100
"#;

fn vqs(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_vqs")).args(args).env("RUST_LOG", "warn").output().unwrap();
    assert!(out.status.success(), "vqs {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn manifest_files(dir: &Path) -> Vec<String> {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect()
}

#[test]
fn every_verb_writes_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let text = vqs(&["ground-state", "-c", cfg, "-o", &s(&dir("gs"))]);
    assert!(text.contains("E(θ_opt)"));
    let files = manifest_files(&dir("gs"));
    assert!(files.iter().any(|f| f == "trajectory.jsonl"));

    // Same config and seed: same report.
    vqs(&["ground-state", "-c", cfg, "-o", &s(&dir("gs2"))]);
    assert_eq!(fs::read(dir("gs").join("report.json")).unwrap(), fs::read(dir("gs2").join("report.json")).unwrap());
    // The emitted config is itself a valid input reproducing the run.
    let emitted = s(&dir("gs").join("config.toml"));
    vqs(&["ground-state", "-c", &emitted, "-o", &s(&dir("gs3"))]);
    assert_eq!(fs::read(dir("gs").join("report.json")).unwrap(), fs::read(dir("gs3").join("report.json")).unwrap());

    let refused = Command::new(env!("CARGO_BIN_EXE_vqs")).args(["ground-state", "-c", cfg, "-o", &s(&dir("gs"))]).output().unwrap();
    assert!(!refused.status.success());

    let text = vqs(&["verify", "-c", cfg, "-o", &s(&dir("verify")), "--from-run", &s(&dir("gs"))]);
    assert!(text.contains("ℰ ="));
    vqs(&["verify", "-c", cfg, "-o", &s(&dir("verify2")), "--theta", "0,0,0,0,0,0"]);

    let text = vqs(&["reevaluate", "-c", cfg, "-o", &s(&dir("re")), "--run", &s(&dir("gs"))]);
    assert!(text.contains("re-scored"));
    let csv = fs::read_to_string(dir("re").join("estimates.csv")).unwrap();
    assert!(csv.lines().count() > 2);

    vqs(&["mass-sweep", "-c", cfg, "-o", &s(&dir("sweep"))]);
    let sweep = fs::read_to_string(dir("sweep").join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
    assert!(manifest_files(&dir("sweep")).iter().any(|f| f.ends_with("report.json")));

    let text = vqs(&["scalability", "-c", cfg, "-o", &s(&dir("scal"))]);
    assert!(text.contains("N =  2"));
    assert!(dir("scal").join("required_depth.csv").exists());
}
