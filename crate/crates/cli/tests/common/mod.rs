#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn hrch() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hrch"))
}

pub fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn schema() -> serde_json::Value {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("report.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Runs `hrch <args> --out <dir>` and returns the output.
pub fn run(args: &[&str], out: &Path) -> Output {
    hrch().args(args).arg("--out").arg(out).output().expect("binary runs")
}

pub fn run_with_config(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut cmd = hrch();
    cmd.arg(sub).arg("--config").arg(cfg).arg("--out").arg(out).args(extra);
    cmd.output().expect("binary runs")
}

pub fn report(out: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema()).unwrap();
    if let Err(e) = validator.validate(&value) {
        panic!("report does not match the schema: {e}");
    }
    value
}

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("test.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_owned();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}
