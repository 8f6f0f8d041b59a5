use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fprinciple(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fprinciple"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

// smoke with fewer steps, written to `dir`
fn quick_config(dir: &Path) -> std::path::PathBuf {
    let o = fprinciple(&["presets", "--show", "smoke"]);
    assert!(o.status.success());
    let text = stdout(&o).replace("steps = 200", "steps = 60");
    let path = dir.join("quick.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn presets_lists_every_name() {
    let o = fprinciple(&["presets"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["smoke", "three-tone-desk", "three-tone-p4-desk", "fig1-desk", "fig2-desk", "fig2-full"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
    let o = fprinciple(&["presets", "--show", "fig1-desk"]);
    assert!(stdout(&o).contains("widths = [1, 200, 50, 1]"));
}

#[test]
fn run_writes_the_bundle_and_replay_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = dir.path().join("run");
    let o = fprinciple(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("output_split"));
    for f in ["trajectory.fpt", "diagnostics.csv", "summary.json", "target_spectrum.tsv", "config.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["checks"].as_array().unwrap().len() >= 6);

    let replayed = dir.path().join("replayed");
    let o = fprinciple(&["replay", out.to_str().unwrap(), "--out", replayed.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(out.join("diagnostics.csv")).unwrap(),
        fs::read(replayed.join("diagnostics.csv")).unwrap()
    );

    // the stored config round-trips as a run input
    let again = dir.path().join("again");
    let stored = out.join("config.toml");
    let o = fprinciple(&["run", "--config", stored.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(out.join("diagnostics.csv")).unwrap(),
        fs::read(again.join("diagnostics.csv")).unwrap()
    );
}

#[test]
fn overrides_change_the_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = dir.path().join("eta");
    let o = fprinciple(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--eta",
        "0.5,1,2",
        "--grid-m",
        "128",
        "--seed",
        "99",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    // 7 checkpoints times 3 cutoffs
    assert_eq!(csv.lines().count(), 1 + 7 * 3);
    let config = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(config.contains("seed = 99"));
    assert!(config.contains("m = 128"));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = dir.path().join("sweep");
    let o = fprinciple(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--axis",
        "width",
        "--values",
        "8,16,32",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("width,") && r.contains(",ok,")));
    assert!(out.join("width_2").join("trajectory.fpt").exists());
}

#[test]
fn validate_reports_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("kind = \"mse\"", "kind = \"power\"\np = 1.5");
    fs::write(&cfg, text).unwrap();
    let o = fprinciple(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("loss_sandwich") && text.contains("FAIL"), "{text}");
    assert!(text.contains("smoothstep_quintic"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // 1: validation
    let o = fprinciple(&["run", "--preset", "no-such-preset"]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = quick_config(dir.path());
    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(&cfg).unwrap().replace("count = 100", "count = 0");
    fs::write(&bad, text).unwrap();
    let o = fprinciple(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("samples.count"), "{}", stderr(&o));

    // 2: divergence
    let hot = dir.path().join("hot.toml");
    let text = fs::read_to_string(&cfg).unwrap().replace("step = 0.02", "step = 500.0");
    fs::write(&hot, text).unwrap();
    let o = fprinciple(&["run", "--config", hot.to_str().unwrap(), "--out", dir.path().join("hot").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    // 3: I/O and format
    let o = fprinciple(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let junk = dir.path().join("junk.fpt");
    fs::write(&junk, b"not a trajectory").unwrap();
    let o = fprinciple(&["replay", junk.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}
