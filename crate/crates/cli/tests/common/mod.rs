#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn toy() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geocell-kit"));
    c.env_remove("GEOCELL_KIT_THREADS").env("RUST_LOG", "warn");
    c
}

pub fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = bin();
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("spawning geocell-kit")
}

pub fn ok(args: &[&str], env: &[(&str, &str)]) -> Output {
    let out = run(args, env);
    assert!(
        out.status.success(),
        "geocell-kit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// build, labels, index and refine on the toy fixture into `out`. `refine_args`
/// go to the refine step only.
pub fn toy_pipeline(out: &Path, refine_args: &[&str], env: &[(&str, &str)]) {
    let t = toy();
    let (samples, admins) = (t.join("samples.csv"), t.join("admins.geojson"));
    let with = |cmd: &str, rest: Vec<String>| {
        let mut a = vec![cmd.to_string()];
        a.extend(rest);
        if cmd == "refine" {
            a.extend(refine_args.iter().map(|x| x.to_string()));
        }
        a
    };
    let geocells = out.join("geocells.geojson");
    let index = out.join("index");
    let steps = [
        with("build", vec!["--samples".into(), s(&samples).into(), "--admins".into(), s(&admins).into()]),
        with("labels", vec!["--samples".into(), s(&samples).into(), "--geocells".into(), s(&geocells).into()]),
        with(
            "index",
            vec![
                "--samples".into(),
                s(&samples).into(),
                "--geocells".into(),
                s(&geocells).into(),
                "--embeddings".into(),
                s(&t.join("embeddings.embd")).into(),
            ],
        ),
        with(
            "refine",
            vec![
                "--index".into(),
                s(&index).into(),
                "--predictions".into(),
                s(&t.join("predictions.csv")).into(),
                "--queries".into(),
                s(&t.join("queries.embd")).into(),
            ],
        ),
    ];
    for mut step in steps {
        step.extend(["--out".to_string(), s(out).to_string()]);
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        ok(&args, env);
    }
}

/// Relative path and bytes of every file below `dir`, sorted by path.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Output hashes recorded in a run manifest.
pub fn manifest_output_hashes(path: &Path) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    v["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["sha256"].as_str().unwrap().to_string())
        .collect()
}
