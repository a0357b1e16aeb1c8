use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn levelscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelscale")).args(args).output().unwrap()
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.conf");
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    levelscale(&args)
}

const SMALL: &str = "kind = grid\nm = 2\nschedule.eps = 0.49\nschedule.n = 1, 2, 3, 4, 5, 6, 7, 8\nschedule.alpha = 0.3, 0.5\n";

#[test]
fn missing_kind_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "m = 2\n");
    let out = run("mdim", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`kind`"));
}

#[test]
fn unknown_key_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "kind = grid\nm = 2\nschedule.epsilon = 0.1\n");
    let out = run("entropy-scale", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn missing_config_flag_is_an_input_error() {
    let out = levelscale(&["mdim"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_3_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "kind = grid\nm = 2\nbudget.tuples = 10\n");
    let out = run("spec-demo", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hint"));
}

#[test]
fn held_lock_blocks_a_second_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out_dir = dir.path().join("o");
    fs::create_dir_all(&out_dir).unwrap();
    fs::write(out_dir.join(".levelscale.lock"), "").unwrap();
    let out = run("entropy-scale", &cfg, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("in use"));
    fs::remove_file(out_dir.join(".levelscale.lock")).unwrap();
    let out = run("entropy-scale", &cfg, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out_dir.join(".levelscale.lock").exists());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    for cmd in ["entropy-scale", "level-spectrum", "hphi", "oracle"] {
        let a = dir.path().join(format!("{cmd}-a"));
        let b = dir.path().join(format!("{cmd}-b"));
        assert_eq!(run(cmd, &cfg, &a, &["--seed", "11"]).status.code(), Some(0), "{cmd}");
        assert_eq!(run(cmd, &cfg, &b, &["--seed", "11"]).status.code(), Some(0), "{cmd}");
        for entry in fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{cmd}: {name:?}");
        }
    }
}

#[test]
fn summary_lines_are_json_with_common_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out_dir = dir.path().join("o");
    assert_eq!(run("level-spectrum", &cfg, &out_dir, &[]).status.code(), Some(0));
    let text = fs::read_to_string(out_dir.join("level_spectrum_summary.jsonl")).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        for key in ["\"system\":", "\"phi\":", "\"alpha\":", "\"epsilon\":", "\"n\":", "\"rate\":", "\"flags\":"] {
            assert!(line.starts_with('{') && line.contains(key), "{key} in {line}");
        }
    }
}

#[test]
fn mdim_reaches_the_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "kind = grid\nm = 2\n");
    let out_dir = dir.path().join("o");
    assert_eq!(run("mdim", &cfg, &out_dir, &[]).status.code(), Some(0));
    let text = fs::read_to_string(out_dir.join("mdim.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "ratio").unwrap();
    let last: f64 = text.lines().last().unwrap().split(',').nth(col).unwrap().parse().unwrap();
    assert!(last >= 0.8, "final ratio {last}");
}

#[test]
fn variational_check_passes_on_the_binary_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "kind = grid\nm = 2\nschedule.alpha = 0.2, 0.5, 0.8\n");
    let out = run("variational-check", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        levelscale::config::ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}
