use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use subdiff_cli::config::RunConfig;
use tempfile::TempDir;

const ONE: &str = r#"
version = 1
algorithm = "one"

[model]
time_steps = 32

[mesh]
h_far = 0.2
near_divisions = 4.0

[noise]
sigma = 0.01
seed = 3

[[inclusions]]
center = [0.2, 0.3]
size = 0.1
gamma = 50.0
"#;

const MULTI: &str = r#"
version = 1
algorithm = "multi"

[model]
time_steps = 32

[mesh]
h_far = 0.2
near_divisions = 4.0

[[inclusions]]
center = [0.3, 0.2]
size = 0.05
gamma = 3.0

[[inclusions]]
center = [-0.4, 0.0]
size = 0.05
gamma = 3.0

[multi.scan]
resolution = 41
"#;

fn subdiff(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subdiff"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn locate_one_reports_error_and_reruns_identically() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "one.toml", ONE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = subdiff(&["locate-one"], &cfg, &a);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&a.join("result.csv"));
    assert_eq!(rows[0].last().unwrap(), "error");
    let err: f64 = rows[1].last().unwrap().parse().unwrap();
    assert!(err < 0.1, "error {err}");
    let profile = csv_rows(&a.join("profile.csv"));
    assert_eq!(profile.len(), 1 + 2 * 41);

    let out = subdiff(&["locate-one"], &a.join("manifest.toml"), &b);
    assert!(out.status.success());
    for f in ["result.csv", "profile.csv", "manifest.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "one.toml", ONE);
    let out_dir = dir.path().join("s");
    let out = subdiff(&["locate-one", "--seed", "17", "--jobs", "2"], &cfg, &out_dir);
    assert!(out.status.success());
    let manifest = fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 17"));
}

#[test]
fn forward_without_inclusions_writes_background_only() {
    let dir = TempDir::new().unwrap();
    let text = ONE.split("[[inclusions]]").next().unwrap().replace("near_divisions = 4.0", "h_near = 0.2");
    let cfg = write_config(&dir, "empty.toml", &text);
    let out_dir = dir.path().join("f");
    let out = subdiff(&["forward"], &cfg, &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("trace_U_x1.csv").exists());
    assert!(out_dir.join("mesh.txt").exists());
    assert!(!out_dir.join("trace_u_x1.csv").exists());
    let snap = csv_rows(&out_dir.join("snapshot_x2.csv"));
    assert_eq!(snap[0], ["node", "x", "y", "U_t0", "U_t16", "U_t32"]);
}

#[test]
fn forward_with_inclusion_writes_differences() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "one.toml", ONE);
    let out_dir = dir.path().join("f");
    assert!(subdiff(&["forward"], &cfg, &out_dir).status.success());
    for f in ["trace_u_x1.csv", "trace_diff_x2.csv", "trace_u_noisy_x1.csv", "snapshot_x1.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let header = &csv_rows(&out_dir.join("trace_diff_x1.csv"))[0];
    assert_eq!(header.len(), 2 + 33);
}

#[test]
fn oracle_check_emits_relative_differences() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "one.toml", ONE);
    let out_dir = dir.path().join("o");
    let out = subdiff(&["oracle-check"], &cfg, &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out_dir.join("oracle_check.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows[1..] {
        let rel: f64 = r[5].parse().unwrap();
        assert!(rel < 0.05, "rel {rel}");
    }
}

#[test]
fn locate_multi_finds_two_peaks() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "multi.toml", MULTI);
    let out_dir = dir.path().join("m");
    let out = subdiff(&["locate-multi"], &cfg, &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let peaks = csv_rows(&out_dir.join("peaks.csv"));
    assert_eq!(peaks.len(), 3);
    for r in &peaks[1..] {
        let err: f64 = r[5].parse().unwrap();
        assert!(err < 0.06, "peak error {err}");
    }
    let grid = csv_rows(&out_dir.join("indicator.csv"));
    assert_eq!(grid[0], ["x", "y", "W", "flagged"]);
    assert!(out_dir.join("singular_values.csv").exists());
    assert!(out_dir.join("data_matrix.csv").exists());
}

#[test]
fn sweep_varies_size_and_noise() {
    let dir = TempDir::new().unwrap();
    let text = format!("{ONE}\n[sweep]\nsizes = [0.08, 0.1]\nsigmas = [0.0, 0.01]\nrepeats = 2\n");
    let cfg = write_config(&dir, "sweep.toml", &text);
    let out_dir = dir.path().join("w");
    let out = subdiff(&["sweep"], &cfg, &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out_dir.join("sweep.csv"));
    assert_eq!(rows.len(), 1 + 2 * 3);
    assert!(rows[1..].iter().all(|r| r[8] == "ok"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("x");
    let bad = write_config(&dir, "bad.toml", &ONE.replace("size = 0.1", "size = -0.1"));
    assert_eq!(subdiff(&["locate-one"], &bad, &out_dir).status.code(), Some(2));
    let cfg = write_config(&dir, "one.toml", ONE);
    assert_eq!(subdiff(&["locate-multi"], &cfg, &out_dir).status.code(), Some(2));
    assert_eq!(subdiff(&["sweep"], &cfg, &out_dir).status.code(), Some(2));

    let far = format!(
        "{}\n[[one.segments]]\ncenter = [5.0, 2.0]\ndirection = [1.0, 0.0]\nhalf_length = 1.0\n\
         [[one.segments]]\ncenter = [2.0, 0.0]\ndirection = [0.0, 1.0]\nhalf_length = 1.0\n",
        ONE.replace("sigma = 0.01", "sigma = 0.0")
    );
    let far = write_config(&dir, "far.toml", &far);
    let out = subdiff(&["locate-one"], &far, &out_dir);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("root finding"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names = Vec::new();
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let resolved = cfg.resolved();
        assert_eq!(RunConfig::parse(&resolved.to_toml()).unwrap(), resolved);
        assert_eq!(resolved.model.time_steps, 128);
        names.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    names.sort();
    assert_eq!(names, ["example_4_1.toml", "example_4_2.toml", "example_4_3.toml", "example_4_4.toml", "example_4_5.toml"]);
}
