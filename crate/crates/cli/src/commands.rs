use std::path::{Path, PathBuf};

use heisenberg_rch::heisenberg::Vec2;
use heisenberg_rch::magnetic::PhasePoint;
use heisenberg_rch::poisson::OrbitKind;
use heisenberg_rch::rch::{
    heisenberg_particle_with_metric, integrate, ControlSubset, FiberMap, Hamiltonian, RCHSystem, RchError,
};
use heisenberg_rch::reduction::{
    check_commutation, check_kk_curvature, integrate_reduced, kaluza_klein_system_with_metric, kk_reduce_and_compare,
    reduce_system_with, ReduceOptions, KK_TOL,
};
use heisenberg_rch::suite::{run_check, CheckOptions, SuiteError, DEFAULT_CHECKS};
use heisenberg_rch::{CheckResult, ReductionError};
use log::info;
use nalgebra::DVector;
use thiserror::Error;

use crate::config::{CheckConfig, ConfigError, ExperimentConfig, FieldSpec, MrFixture, SubsetKind};
use crate::output::{reduced_csv, trajectory_csv, write_file, InvariantReport};

/// Sample count for sweeps embedded in `reduce` and `kk-compare` when the
/// config does not set one.
const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid system: {0}")]
    Setup(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

impl From<RchError> for CliError {
    fn from(e: RchError) -> Self {
        match e {
            RchError::Flow(_) => CliError::Numerical(e.to_string()),
            other => CliError::Setup(other.to_string()),
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Flow(_) | ReductionError::Rch(RchError::Flow(_)) => CliError::Numerical(e.to_string()),
            other => CliError::Setup(other.to_string()),
        }
    }
}

impl From<SuiteError> for CliError {
    fn from(e: SuiteError) -> Self {
        match e {
            SuiteError::UnknownCheck(name) => ConfigError::Semantic {
                field: "check.names".into(),
                message: format!("unknown check `{name}`"),
            }
            .into(),
            SuiteError::Reduction(r) => r.into(),
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.to_owned(),
                source,
            })?;
            Ok(text.parse()?)
        }
    }
}

/// Where a command writes and which seed it uses.
pub struct RunContext {
    pub out: PathBuf,
    pub seed: u64,
}

impl RunContext {
    fn write(&self, name: &str, content: &str) -> Result<(), CliError> {
        let path = write_file(&self.out, name, content).map_err(|source| CliError::Write {
            path: self.out.join(name),
            source,
        })?;
        info!("wrote {}", path.display());
        Ok(())
    }

    fn finish(&self, cfg: &ExperimentConfig, report: InvariantReport) -> Result<InvariantReport, CliError> {
        self.write(&cfg.output.report, &report.to_json())?;
        Ok(report)
    }
}

pub fn build_system(cfg: &ExperimentConfig) -> Result<RCHSystem, CliError> {
    let s = &cfg.system;
    let mut sys = heisenberg_particle_with_metric(s.mass, s.charge, s.light_speed, s.field.build(), s.metric)?;
    if s.k > 0 {
        sys = RCHSystem::new(
            sys.field.clone(),
            sys.hamiltonian.sum(&Hamiltonian::v_oscillator(s.v_stiffness)),
            s.k,
        )
        .with_params(sys.params)?;
    }
    if let Some(scale) = s.force_scale {
        sys = sys.with_force(FiberMap::scaling(scale));
    }
    if let Some((scale, subset)) = s.control {
        let subset = match subset {
            SubsetKind::Full => ControlSubset::full(s.k),
            SubsetKind::Zero => ControlSubset::zero(s.k),
        };
        sys = sys
            .with_control(FiberMap::scaling(scale), subset)
            .map_err(|e| ConfigError::Semantic {
                field: "control.scale".into(),
                message: e.to_string(),
            })?;
    }
    Ok(sys)
}

fn initial_state(cfg: &ExperimentConfig) -> PhasePoint {
    let i = &cfg.initial;
    PhasePoint::new(i.q, i.p).with_v(DVector::from_vec(i.theta.clone()), DVector::from_vec(i.lambda.clone()))
}

fn is_conservative(cfg: &ExperimentConfig) -> bool {
    cfg.system.force_scale.is_none() && cfg.system.control.is_none()
}

/// Applies per-record threshold overrides and recomputes `passed`.
fn apply_thresholds(records: Vec<CheckResult>, check: &CheckConfig) -> Vec<CheckResult> {
    records
        .into_iter()
        .map(|r| match check.thresholds.get(&r.name) {
            Some(&t) => CheckResult::new(&r.name, r.samples, r.max_residual, t),
            None => r,
        })
        .collect()
}

pub fn simulate(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<InvariantReport, CliError> {
    let sys = build_system(cfg)?;
    let traj = integrate(&sys, &initial_state(cfg), cfg.run.t_end, cfg.run.step, cfg.run.method)?;
    ctx.write(&cfg.output.trajectory, &trajectory_csv(&traj))?;
    let steps = traj.len() - 1;
    let mut records = Vec::new();
    if is_conservative(cfg) {
        records.push(CheckResult::new(
            "simulate.energy_drift",
            steps,
            traj.energy_drift(),
            cfg.run.energy_tolerance,
        ));
    }
    let mut report = InvariantReport::new("simulate", ctx.seed, apply_thresholds(records, &cfg.check))
        .with_metadata("t_end", cfg.run.t_end)
        .with_metadata("step", cfg.run.step)
        .with_metadata("steps", steps as f64)
        .with_metadata("energy_drift", traj.energy_drift())
        .with_metadata("relative_energy_drift", traj.relative_energy_drift());
    if let Some(d) = traj.momentum_drift() {
        report = report.with_metadata("momentum_drift", d);
    }
    ctx.finish(cfg, report)
}

pub fn reduce(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<InvariantReport, CliError> {
    let sys = build_system(cfg)?;
    let r = &cfg.reduce;
    let options = ReduceOptions {
        chart: r.chart,
        expect: r.expect_plane.then_some(OrbitKind::Plane),
    };
    let red = reduce_system_with(&sys, r.level, &options)?;
    let mut o0 = red.base_point();
    if let Some((r1, r2)) = r.rho {
        o0.rho = Vec2::new(r1, r2);
    }
    o0 = o0.with_v(
        DVector::from_vec(cfg.initial.theta.clone()),
        DVector::from_vec(cfg.initial.lambda.clone()),
    );
    let traj = integrate_reduced(&red, &o0, cfg.run.t_end, cfg.run.step, cfg.run.method)?;
    ctx.write(&cfg.output.reduced, &reduced_csv(&traj, red.k()))?;
    let mut commutation = check_commutation(&sys, &red, r.samples, ctx.seed)?;
    commutation.name = "reduction.commutation".into();
    let mut records = vec![commutation];
    if is_conservative(cfg) {
        records.push(CheckResult::new(
            "reduction.energy_drift",
            traj.times.len() - 1,
            traj.energy_drift(),
            cfg.run.energy_tolerance,
        ));
    }
    let report = InvariantReport::new("reduce", ctx.seed, apply_thresholds(records, &cfg.check))
        .with_metadata("mu1", r.level.mu.x1)
        .with_metadata("mu2", r.level.mu.x2)
        .with_metadata("nu", r.level.nu)
        .with_metadata("t_end", cfg.run.t_end)
        .with_metadata("step", cfg.run.step);
    ctx.finish(cfg, report)
}

fn run_named(names: &[&str], cfg: &ExperimentConfig, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let mut records = Vec::new();
    for name in names {
        let opts = CheckOptions {
            seed,
            samples: cfg.check.group_samples.get(*name).copied().or(cfg.check.samples),
        };
        info!("running {name}");
        records.extend(run_check(name, &opts)?);
    }
    Ok(apply_thresholds(records, &cfg.check))
}

pub fn check(cfg: &ExperimentConfig, ctx: &RunContext, all: bool) -> Result<InvariantReport, CliError> {
    let names: Vec<&str> = if all {
        DEFAULT_CHECKS.to_vec()
    } else {
        cfg.check.names.iter().map(String::as_str).collect()
    };
    let records = run_named(&names, cfg, ctx.seed)?;
    ctx.finish(cfg, InvariantReport::new("check", ctx.seed, records))
}

pub fn kk_compare(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<InvariantReport, CliError> {
    if matches!(cfg.system.field, FieldSpec::Constant(_)) {
        return Err(ConfigError::Semantic {
            field: "field.kind".into(),
            message: "kk-compare needs a field with a potential (zero, potential or left_invariant)".into(),
        }
        .into());
    }
    let kk = kaluza_klein_system_with_metric(cfg.system.field.build(), cfg.system.mass, cfg.kk.mu, cfg.system.metric)?;
    let x0 = PhasePoint::new(cfg.initial.q, cfg.initial.p);
    let cmp = kk_reduce_and_compare(&kk, &x0, cfg.run.t_end, cfg.run.step)?;
    let samples = cfg.check.samples.unwrap_or(DEFAULT_SAMPLES);
    let mut curvature = check_kk_curvature(&kk, samples, ctx.seed);
    curvature.name = "kk.curvature".into();
    let records = vec![
        CheckResult::new("kk.lambda_conservation", cmp.steps, cmp.lambda_drift, 1e-8),
        curvature,
        CheckResult::new("kk.trajectory", cmp.steps, cmp.max_discrepancy, KK_TOL),
    ];
    let report = InvariantReport::new("kk-compare", ctx.seed, apply_thresholds(records, &cfg.check))
        .with_metadata("mu", cfg.kk.mu)
        .with_metadata("t_end", cfg.run.t_end)
        .with_metadata("step", cfg.run.step);
    ctx.finish(cfg, report)
}

pub fn mr_check(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<InvariantReport, CliError> {
    let (check, prefix) = match cfg.mr.fixture {
        MrFixture::Identity => ("mr", "mr.identity."),
        MrFixture::Translation => ("mr", "mr.translation."),
        MrFixture::Shear => ("negative_mr1_shear", ""),
        MrFixture::LevelMismatch => ("negative_mr2_level_mismatch", ""),
        MrFixture::ZeroControl => ("negative_mr3_zero_control", ""),
    };
    let opts = CheckOptions {
        seed: ctx.seed,
        samples: cfg.mr.samples.or(cfg.check.samples),
    };
    let records: Vec<_> = run_check(check, &opts)?
        .into_iter()
        .filter(|r| r.name.starts_with(prefix))
        .collect();
    ctx.finish(
        cfg,
        InvariantReport::new("mr-check", ctx.seed, apply_thresholds(records, &cfg.check)),
    )
}
