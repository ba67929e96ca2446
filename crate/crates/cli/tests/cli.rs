mod common;

use common::*;

#[test]
fn bundled_particle_simulation_conserves_energy() {
    let out = tempfile::tempdir().unwrap();
    let o = run_with_config("simulate", &config("heisenberg_particle.cfg"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&out.path().join("trajectory.csv"));
    assert_eq!(header, "t,q1,q2,q3,p1,p2,p3,H,J1,J2,J3");
    assert_eq!(rows.len(), 10_001);
    assert_eq!(rows.last().unwrap()[0], 10.0);
    let h0 = rows[0][7];
    let drift = rows.iter().map(|r| (r[7] - h0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-8, "{drift:e}");
    // The invariant particle also conserves its momentum map.
    for r in &rows {
        assert!((r[8] - rows[0][8]).abs() <= 1e-8 && (r[10] - rows[0][10]).abs() <= 1e-8);
    }
    let rep = report(out.path());
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["records"][0]["name"], "simulate.energy_drift");
}

#[test]
fn zero_field_moves_in_straight_lines() {
    let out = tempfile::tempdir().unwrap();
    let o = run_with_config("simulate", &config("zero_field.cfg"), out.path(), &[]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&out.path().join("trajectory.csv"));
    for r in &rows {
        let t = r[0];
        for i in 0..3 {
            assert!((r[1 + i] - r[4 + i] * t).abs() <= 1e-12);
            assert_eq!(r[4 + i], rows[0][4 + i]);
        }
    }
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "system.mass = 1.0\nrun.step = fast\n");
    let o = run_with_config("simulate", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("run.step"), "{err}");

    let cfg = write_config(dir.path(), "sytem.mass = 1.0\n");
    let o = run_with_config("check", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sytem.mass"));

    let o = run_with_config("check", &dir.path().join("missing.cfg"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reduction_at_nu_one() {
    let out = tempfile::tempdir().unwrap();
    let o = run_with_config("reduce", &config("heisenberg_particle.cfg"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(out.path());
    assert_eq!(rep["records"][0]["name"], "reduction.commutation");
    assert!(rep["records"][0]["max_residual"].as_f64().unwrap() <= 1e-5);
    let (header, rows) = csv_rows(&out.path().join("reduced.csv"));
    assert_eq!(header, "t,rho1,rho2,nu,h");
    let h0 = rows[0][4];
    assert!(rows.iter().all(|r| (r[4] - h0).abs() <= 1e-8 && r[3] == 1.0));
}

#[test]
fn reduction_with_internal_space_writes_its_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "system.k = 2\ninitial.theta1 = 0.3\ninitial.lambda2 = -0.1\nrun.t_end = 0.1\n",
    );
    let o = run_with_config("reduce", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&dir.path().join("reduced.csv"));
    assert_eq!(header, "t,rho1,rho2,nu,theta1,theta2,lambda1,lambda2,h");
    assert_eq!(&rows[0][4..8], &[0.3, 0.0, 0.0, -0.1]);
}

#[test]
fn point_orbit_is_an_irregular_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reduce.nu = 0\nreduce.expect = plane\n");
    let o = run_with_config("reduce", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("point orbit"));
}

#[test]
fn non_invariant_system_cannot_be_reduced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "system.metric = euclidean\n");
    let o = run_with_config("reduce", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not invariant"));
}

#[test]
fn empty_check_list_succeeds_with_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "check.names =\n");
    let o = run_with_config("check", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let rep = report(dir.path());
    assert_eq!(rep["records"].as_array().unwrap().len(), 0);
    assert_eq!(rep["passed"], true);
}

#[test]
fn negative_controls_fail_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_config("check", &config("negative_controls.cfg"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let rep = report(dir.path());
    let records = rep["records"].as_array().unwrap();
    assert_eq!(records.len(), 4);
    for r in records {
        assert_eq!(r["passed"], false);
        assert!(r["max_residual"].as_f64().unwrap() >= 1e-2, "{r}");
    }
}

#[test]
fn thresholds_and_samples_are_configurable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "check.names = group_axioms\ncheck.group_axioms.samples = 7\ncheck.group.inverse.threshold = 0\n",
    );
    let o = run_with_config("check", &cfg, dir.path(), &["--seed", "5"]);
    let rep = report(dir.path());
    assert_eq!(rep["seed"], 5);
    let inverse = rep["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == "group.inverse")
        .unwrap();
    assert_eq!(inverse["samples"], 7);
    assert_eq!(inverse["threshold"], 0.0);
    let zero = inverse["max_residual"].as_f64().unwrap() == 0.0;
    assert_eq!(o.status.code(), Some(if zero { 0 } else { 1 }));
}

#[test]
fn unknown_check_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "check.names = group_axioms, jacobi_everything\n");
    let o = run_with_config("check", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("jacobi_everything"));
}

#[test]
fn divergent_integration_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "field.strength = 500\ninitial.p1 = 3\nrun.step = 0.5\nrun.t_end = 1\n",
    );
    let o = run_with_config("simulate", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 1"));
}

#[test]
fn constant_field_is_rejected_by_kk_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "field.kind = constant\nfield.b12 = 1\n");
    let o = run_with_config("kk-compare", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("field.kind"));
}

#[test]
fn kk_comparison_for_a_linear_potential() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_config("kk-compare", &config("kk_linear.cfg"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(dir.path());
    assert_eq!(rep["records"].as_array().unwrap().len(), 3);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for sub in ["simulate", "reduce"] {
        for d in [&a, &b] {
            assert!(run_with_config(sub, &config("heisenberg_particle.cfg"), d.path(), &[])
                .status
                .success());
        }
        for f in ["trajectory.csv", "reduced.csv", "report.json"] {
            let (x, y) = (a.path().join(f), b.path().join(f));
            if x.exists() {
                assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap(), "{sub}: {f}");
            }
        }
    }
}

#[test]
fn mr_fixtures_exit_status() {
    for (fixture, code) in [
        ("identity", 0),
        ("translation", 0),
        ("shear", 1),
        ("level_mismatch", 1),
        ("zero_control", 1),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = run_with_config("mr-check", &config(&format!("mr_{fixture}.cfg")), dir.path(), &[]);
        assert_eq!(o.status.code(), Some(code), "{fixture}");
        report(dir.path());
    }
}

#[test]
fn defaults_need_no_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["mr-check"], dir.path());
    assert!(o.status.success());
}
