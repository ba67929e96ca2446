//! Report and CSV writers. Reals are printed with Rust's shortest
//! round-trip formatting, so every value parses back bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use heisenberg_rch::rch::Trajectory;
use heisenberg_rch::reduction::ReducedTrajectory;
use heisenberg_rch::CheckResult;
use serde::Serialize;

pub const TRAJECTORY_HEADER: &str = "t,q1,q2,q3,p1,p2,p3,H,J1,J2,J3";

/// Per-check records plus the run metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub command: String,
    pub seed: u64,
    pub metadata: BTreeMap<String, f64>,
    pub passed: bool,
    pub records: Vec<CheckResult>,
}

impl InvariantReport {
    pub fn new(command: &str, seed: u64, records: Vec<CheckResult>) -> Self {
        Self {
            command: command.to_owned(),
            seed,
            metadata: BTreeMap::new(),
            passed: records.iter().all(|r| r.passed),
            records,
        }
    }

    pub fn with_metadata(mut self, key: &str, value: f64) -> Self {
        self.metadata.insert(key.to_owned(), value);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for ((t, x), (h, j)) in traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(traj.energy.iter().zip(&traj.momentum))
    {
        let j = j.map_or([f64::NAN; 3], |j| [j.mu.x1, j.mu.x2, j.nu]);
        let row = [*t, x.q[0], x.q[1], x.q[2], x.p[0], x.p[1], x.p[2], *h, j[0], j[1], j[2]];
        push_row(&mut out, &row);
    }
    out
}

pub fn reduced_header(k: usize) -> String {
    let mut cols = vec!["t".to_owned(), "rho1".into(), "rho2".into(), "nu".into()];
    cols.extend((1..=k).map(|i| format!("theta{i}")));
    cols.extend((1..=k).map(|i| format!("lambda{i}")));
    cols.push("h".into());
    cols.join(",")
}

pub fn reduced_csv(traj: &ReducedTrajectory, k: usize) -> String {
    let mut out = reduced_header(k);
    out.push('\n');
    for ((t, o), h) in traj.times.iter().zip(&traj.points).zip(&traj.energy) {
        let mut row = vec![*t, o.rho.x1, o.rho.x2, o.nu];
        row.extend(o.theta.iter());
        row.extend(o.lambda.iter());
        row.push(*h);
        push_row(&mut out, &row);
    }
    out
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v}").expect("writing to a string");
    }
    out.push('\n');
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> std::io::Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        let mut s = String::new();
        push_row(&mut s, &[0.1 + 0.2, 1e-300, -2.5]);
        let back: Vec<f64> = s.trim().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(back, [0.1 + 0.2, 1e-300, -2.5]);
    }

    #[test]
    fn reduced_header_lists_internal_columns() {
        assert_eq!(reduced_header(0), "t,rho1,rho2,nu,h");
        assert_eq!(reduced_header(2), "t,rho1,rho2,nu,theta1,theta2,lambda1,lambda2,h");
    }

    #[test]
    fn nan_residual_serializes_as_null_and_fails() {
        let r = InvariantReport::new("check", 1, vec![CheckResult::new("x", 1, f64::NAN, 1.0)]);
        assert!(!r.passed);
        assert!(r.to_json().contains("\"max_residual\": null"));
    }
}
