//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//! Criteria 1–9 run the library sweeps directly; 10 and 11 go through the
//! `hrch` binary.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};

use heisenberg_rch::suite::{run_check, CheckOptions};
use heisenberg_rch::CheckResult;

/// A record that must pass at a tolerance no looser than `tol`.
struct Req {
    name: &'static str,
    tol: f64,
    min_samples: usize,
}

const fn req(name: &'static str, tol: f64, min_samples: usize) -> Req {
    Req { name, tol, min_samples }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn gather(checks: &[&str]) -> Result<BTreeMap<String, CheckResult>, String> {
    let opts = CheckOptions::default();
    let mut out = BTreeMap::new();
    for c in checks {
        for r in run_check(c, &opts).map_err(|e| format!("{c}: {e}"))? {
            out.insert(r.name.clone(), r);
        }
    }
    Ok(out)
}

fn evaluate(checks: &[&str], reqs: &[Req], negatives: &[(&str, f64)]) -> Outcome {
    let records = match gather(checks) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: e,
            }
        }
    };
    let mut problems = Vec::new();
    let mut worst: f64 = 0.0;
    for q in reqs {
        match records.get(q.name) {
            None => problems.push(format!("{} missing", q.name)),
            Some(r) => {
                // NaN compares false, so it never satisfies the bound.
                let ok = r.passed && r.threshold <= q.tol && r.max_residual <= q.tol && r.samples >= q.min_samples;
                if !ok {
                    problems.push(format!(
                        "{} residual {:e} threshold {:e} samples {} (need <= {:e}, >= {} samples)",
                        q.name, r.max_residual, r.threshold, r.samples, q.tol, q.min_samples
                    ));
                }
                worst = worst.max(r.max_residual / q.tol.max(f64::MIN_POSITIVE));
            }
        }
    }
    for (name, floor) in negatives {
        match records.get(*name) {
            Some(r) if r.max_residual >= *floor && !r.passed => {}
            Some(r) => problems.push(format!(
                "negative {name} residual {:e} (need >= {floor:e})",
                r.max_residual
            )),
            None => problems.push(format!("{name} missing")),
        }
    }
    Outcome {
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "{} records, worst residual/tolerance {worst:.1e}",
                reqs.len() + negatives.len()
            )
        } else {
            problems.join("; ")
        },
    }
}

fn hrch(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hrch"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("hrch runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

fn report_records(dir: &Path) -> Result<Vec<serde_json::Value>, String> {
    let text = std::fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(v["records"].as_array().cloned().unwrap_or_default())
}

fn mr_criterion() -> Outcome {
    let mut problems = Vec::new();
    let dir = tempfile::tempdir().expect("temp dir");
    let o = hrch(&["mr-check", "--config", &config("mr_identity.cfg")], dir.path());
    if o.status.code() != Some(0) {
        problems.push(format!("identity exit {:?}", o.status.code()));
    }
    match report_records(dir.path()) {
        Ok(records) => {
            let names: Vec<_> = records.iter().filter_map(|r| r["name"].as_str()).collect();
            for want in [
                "mr.identity.mr1",
                "mr.identity.mr2",
                "mr.identity.mr3_horizontal",
                "mr.identity.mr3_vertical",
            ] {
                if !names.contains(&want) {
                    problems.push(format!("{want} missing"));
                }
            }
            for r in &records {
                match r["max_residual"].as_f64() {
                    Some(x) if x <= 1e-10 => {}
                    other => problems.push(format!("{} residual {other:?} > 1e-10", r["name"])),
                }
            }
        }
        Err(e) => problems.push(e),
    }
    for fixture in ["shear", "level_mismatch", "zero_control"] {
        let dir = tempfile::tempdir().expect("temp dir");
        let o = hrch(
            &["mr-check", "--config", &config(&format!("mr_{fixture}.cfg"))],
            dir.path(),
        );
        if o.status.success() {
            problems.push(format!("{fixture} exited 0"));
        }
        match report_records(dir.path()) {
            Ok(records) if !records.is_empty() => {
                for r in &records {
                    let x = r["max_residual"].as_f64().unwrap_or(f64::INFINITY);
                    if x < 1e-2 || r["passed"] != false {
                        problems.push(format!("{fixture}: {} residual {x:e}", r["name"]));
                    }
                }
            }
            Ok(_) => problems.push(format!("{fixture}: empty report")),
            Err(e) => problems.push(e),
        }
    }
    Outcome {
        detail: if problems.is_empty() {
            "identity <= 1e-10, shear/level_mismatch/zero_control fail with exit 1".into()
        } else {
            problems.join("; ")
        },
        passed: problems.is_empty(),
    }
}

fn reproducibility_criterion() -> Outcome {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().expect("temp dir");
            let o = hrch(&["check", "--all", "--seed", "2024"], dir.path());
            (o.status.code(), std::fs::read(dir.path().join("report.json")).ok())
        })
        .collect();
    let passed = runs[0].0 == Some(0) && runs[0].1.is_some() && runs[0] == runs[1];
    Outcome {
        passed,
        detail: match (&runs[0], &runs[1]) {
            ((c0, Some(a)), (c1, Some(b))) => {
                format!("exit {c0:?}/{c1:?}, {} bytes, identical: {}", a.len(), a == b)
            }
            _ => "report missing".into(),
        },
    }
}

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "group structure",
            Box::new(|| {
                evaluate(
                    &["group_axioms"],
                    &[
                        req("group.associativity", 1e-12, 1000),
                        req("group.inverse", 1e-12, 1000),
                        req("group.identity", 1e-12, 1000),
                        req("group.matrix_homomorphism", 1e-12, 1000),
                    ],
                    &[],
                )
            }),
        ),
        (
            "representation consistency",
            Box::new(|| {
                evaluate(
                    &["representation"],
                    &[
                        req("representation.adjoint_fd", 1e-8, 1),
                        req("representation.coad_star_fd", 1e-8, 1),
                        req("representation.pairing", 1e-12, 1000),
                    ],
                    &[],
                )
            }),
        ),
        (
            "magnetic bracket",
            Box::new(|| {
                evaluate(
                    &["bracket"],
                    &[
                        req("bracket.antisymmetry", 1e-12, 1),
                        req("bracket.leibniz", 1e-8, 1),
                        req("bracket.jacobi", 1e-9, 1),
                        req("bracket.lie_poisson_oracle", 1e-10, 1),
                    ],
                    &[],
                )
            }),
        ),
        (
            "orbit form",
            Box::new(|| {
                evaluate(
                    &["orbit"],
                    &[
                        req("orbit.form_vs_bracket", 1e-10, 1),
                        req("orbit.chart_determinant", 1e-10, 1),
                        req("orbit.point_classification", 0.0, 1),
                    ],
                    &[],
                )
            }),
        ),
        (
            "connection pipeline",
            Box::new(|| {
                evaluate(
                    &["connection"],
                    &[
                        req("connection.right_invariance", 1e-12, 1),
                        req("connection.metric_pairing", 1e-12, 1),
                        req("connection.curvature_fd", 1e-6, 1),
                        req("connection.nu_component_cocycle", 0.0, 1),
                    ],
                    &[],
                )
            }),
        ),
        (
            "magnetic dynamics",
            Box::new(|| {
                evaluate(
                    &["dynamics"],
                    &[
                        req("dynamics.hamiltonian_field", 1e-9, 1000),
                        req("dynamics.cyclotron_period", 1e-5, 1),
                        req("dynamics.energy_drift", 1e-8, 10_001),
                        req("dynamics.flow_symplecticity", 1e-6, 1),
                    ],
                    &[],
                )
            }),
        ),
        (
            "momentum shift",
            Box::new(|| {
                evaluate(
                    &["momentum_shift"],
                    &[
                        req("shift.modified_hamiltonian", 1e-12, 1),
                        req("shift.pullback", 1e-6, 1),
                        req("shift.conjugated_flows", 1e-8, 10_001),
                    ],
                    &[],
                )
            }),
        ),
        (
            "noether and reduction",
            Box::new(|| {
                evaluate(
                    &["noether", "reduction", "negative_commutation"],
                    &[
                        req("noether.momentum_drift_rate", 1e-8, 1),
                        req("reduction.reduced_form", 1e-5, 1),
                        req("reduction.commutation", 1e-5, 100),
                    ],
                    &[("negative.commutation_scaled_hamiltonian", 1e-2)],
                )
            }),
        ),
        (
            "kaluza-klein",
            Box::new(|| {
                evaluate(
                    &["kaluza_klein"],
                    &[
                        req("kk.lambda_conservation", 1e-8, 1),
                        req("kk.curvature", 1e-6, 1),
                        req("kk.trajectory", 1e-6, 1),
                    ],
                    &[],
                )
            }),
        ),
        ("matching checkers", Box::new(mr_criterion)),
        ("reproducibility", Box::new(reproducibility_criterion)),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        let outcome = run();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {title:<28} {} ({:.2}s)",
            i + 1,
            outcome.detail,
            t.elapsed().as_secs_f64()
        );
        failed += usize::from(!outcome.passed);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
