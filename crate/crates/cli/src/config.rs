//! Flat `key = value` configuration with dotted keys.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Every key must be recognised by some block, so a typo fails loudly with
//! the line it came from.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use heisenberg_rch::magnetic::{MagneticField, ReductionChart};
use heisenberg_rch::numerics::Method;
use heisenberg_rch::rch::KineticMetric;
use heisenberg_rch::CoAlgebraElement;
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: field `{field}` is set twice (first on line {first})")]
    Duplicate { line: usize, first: usize, field: String },
    #[error("line {line}: unknown field `{field}`")]
    UnknownField { line: usize, field: String },
    #[error("line {line}: field `{field}`: {message}")]
    Invalid {
        line: usize,
        field: String,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Semantic { field: String, message: String },
}

/// Parsed key/value pairs with their source lines.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_owned(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let valid_key = !key.is_empty()
                && key
                    .split('.')
                    .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
            if !valid_key {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_owned(),
                });
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(ConfigError::Duplicate {
                    line,
                    first: *first,
                    field: key.to_owned(),
                });
            }
            entries.insert(key.to_owned(), (value.to_owned(), line));
        }
        Ok(Self { entries })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(_, l)| *l)
    }
}

/// Typed reader over a [`RawConfig`] that remembers which keys it consumed.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Self {
            raw,
            used: BTreeSet::new(),
        }
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            line: self.raw.line(key),
            field: key.to_owned(),
            message: message.into(),
        }
    }

    fn str(&mut self, key: &str) -> Option<&'a str> {
        let v = self.raw.entries.get(key).map(|(v, _)| v.as_str());
        if v.is_some() {
            self.used.insert(key.to_owned());
        }
        v
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: T, what: &str) -> Result<T, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| self.invalid(key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn real(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v: f64 = self.parse(key, default, "a real number")?;
        if !v.is_finite() {
            return Err(self.invalid(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.real(key, default)?;
        if v <= 0.0 {
            return Err(self.invalid(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.parse(key, default, "a non-negative integer")
    }

    fn choice<T: Copy>(&mut self, key: &str, default: T, options: &[(&str, T)]) -> Result<T, ConfigError> {
        let Some(v) = self.str(key) else {
            return Ok(default);
        };
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
                self.invalid(key, format!("expected one of {}, got `{v}`", names.join(", ")))
            })
    }

    fn vector(&mut self, prefix: &str, names: [&str; 3]) -> Result<Vector3<f64>, ConfigError> {
        let mut v = Vector3::zeros();
        for (i, n) in names.iter().enumerate() {
            v[i] = self.real(&format!("{prefix}.{n}"), 0.0)?;
        }
        Ok(v)
    }

    fn indexed(&mut self, prefix: &str, k: usize) -> Result<Vec<f64>, ConfigError> {
        (1..=k).map(|i| self.real(&format!("{prefix}{i}"), 0.0)).collect()
    }

    /// Keys matching `check.<name>.<suffix>` with their `<name>` parts.
    fn check_keys(&self, suffix: &str) -> Vec<(String, String)> {
        self.raw
            .entries
            .keys()
            .filter_map(|k| {
                let name = k.strip_prefix("check.")?.strip_suffix(suffix)?.strip_suffix('.')?;
                (!name.is_empty()).then(|| (k.clone(), name.to_owned()))
            })
            .collect()
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.raw.entries.iter().find(|(k, _)| !self.used.contains(*k)) {
            Some((k, (_, line))) => Err(ConfigError::UnknownField {
                line: *line,
                field: k.clone(),
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Zero,
    /// Constant matrix with entries `b12, b13, b23`; no potential.
    Constant(Matrix3<f64>),
    /// Linear potential `A(q) = M q`.
    Potential(Matrix3<f64>),
    /// The left-invariant field of the given strength.
    LeftInvariant(f64),
}

impl FieldSpec {
    pub fn build(&self) -> MagneticField {
        match self {
            FieldSpec::Zero => MagneticField::zero(),
            FieldSpec::Constant(b) => MagneticField::constant(*b).expect("antisymmetric by construction"),
            FieldSpec::Potential(m) => MagneticField::linear_potential(*m),
            FieldSpec::LeftInvariant(b) => MagneticField::left_invariant(*b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetKind {
    Full,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub mass: f64,
    pub charge: f64,
    pub light_speed: f64,
    pub metric: KineticMetric,
    pub k: usize,
    pub v_stiffness: f64,
    pub field: FieldSpec,
    pub force_scale: Option<f64>,
    pub control: Option<(f64, SubsetKind)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub q: Vector3<f64>,
    pub p: Vector3<f64>,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub step: f64,
    pub method: Method,
    pub seed: u64,
    pub energy_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReduceConfig {
    pub level: CoAlgebraElement,
    pub chart: ReductionChart,
    pub expect_plane: bool,
    pub samples: usize,
    /// Initial `ρ`; defaults to the base point of the reduced space.
    pub rho: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckConfig {
    pub names: Vec<String>,
    pub samples: Option<usize>,
    /// Per-group sample counts keyed by check name.
    pub group_samples: BTreeMap<String, usize>,
    /// Per-record thresholds keyed by record name.
    pub thresholds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub trajectory: String,
    pub reduced: String,
    pub report: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KkConfig {
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrFixture {
    Identity,
    Translation,
    Shear,
    LevelMismatch,
    ZeroControl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrConfig {
    pub fixture: MrFixture,
    pub samples: Option<usize>,
}

/// Everything a subcommand needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub initial: InitialConfig,
    pub run: RunConfig,
    pub reduce: ReduceConfig,
    pub check: CheckConfig,
    pub output: OutputConfig,
    pub kk: KkConfig,
    pub mr: MrConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_raw(&RawConfig::default()).expect("defaults are valid")
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(s)?)
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader::new(raw);
        let system = read_system(&mut r)?;
        let k = system.k;
        let initial = InitialConfig {
            q: r.vector("initial", ["q1", "q2", "q3"])?,
            p: r.vector("initial", ["p1", "p2", "p3"])?,
            theta: r.indexed("initial.theta", k)?,
            lambda: r.indexed("initial.lambda", k)?,
        };
        let run = RunConfig {
            t_end: r.positive("run.t_end", 1.0)?,
            step: r.positive("run.step", 1e-3)?,
            method: r.choice(
                "run.method",
                Method::Midpoint,
                &[("midpoint", Method::Midpoint), ("rk4", Method::Rk4)],
            )?,
            seed: r.parse("run.seed", 2024, "an unsigned integer")?,
            energy_tolerance: r.positive("run.energy_tolerance", 1e-8)?,
        };
        if run.step > run.t_end {
            return Err(r.invalid("run.step", "must not exceed run.t_end"));
        }
        let rho = match (r.str("reduce.rho1").is_some(), r.str("reduce.rho2").is_some()) {
            (false, false) => None,
            _ => Some((r.real("reduce.rho1", 0.0)?, r.real("reduce.rho2", 0.0)?)),
        };
        let reduce = ReduceConfig {
            level: CoAlgebraElement::new(
                r.real("reduce.mu1", 0.3)?,
                r.real("reduce.mu2", -0.2)?,
                r.real("reduce.nu", 1.0)?,
            ),
            chart: r.choice(
                "reduce.chart",
                ReductionChart::Shifted,
                &[
                    ("shifted", ReductionChart::Shifted),
                    ("magnetic", ReductionChart::Magnetic),
                ],
            )?,
            expect_plane: r.choice("reduce.expect", true, &[("plane", true), ("any", false)])?,
            samples: r.count("reduce.samples", 100)?,
            rho,
        };
        let check = read_check(&mut r)?;
        let output = OutputConfig {
            trajectory: file_name(&mut r, "output.trajectory", "trajectory.csv")?,
            reduced: file_name(&mut r, "output.reduced", "reduced.csv")?,
            report: file_name(&mut r, "output.report", "report.json")?,
        };
        let kk = KkConfig {
            mu: r.real("kk.mu", 1.0)?,
        };
        let mr = MrConfig {
            fixture: r.choice(
                "mr.fixture",
                MrFixture::Identity,
                &[
                    ("identity", MrFixture::Identity),
                    ("translation", MrFixture::Translation),
                    ("shear", MrFixture::Shear),
                    ("level_mismatch", MrFixture::LevelMismatch),
                    ("zero_control", MrFixture::ZeroControl),
                ],
            )?,
            samples: match r.str("mr.samples") {
                None => None,
                Some(_) => Some(r.count("mr.samples", 0)?),
            },
        };
        r.finish()?;
        Ok(Self {
            system,
            initial,
            run,
            reduce,
            check,
            output,
            kk,
            mr,
        })
    }
}

fn read_system(r: &mut Reader) -> Result<SystemConfig, ConfigError> {
    let field = match r.choice(
        "field.kind",
        "left_invariant",
        &[
            ("zero", "zero"),
            ("constant", "constant"),
            ("potential", "potential"),
            ("left_invariant", "left_invariant"),
        ],
    )? {
        "zero" => FieldSpec::Zero,
        "constant" => {
            let (b12, b13, b23) = (
                r.real("field.b12", 0.0)?,
                r.real("field.b13", 0.0)?,
                r.real("field.b23", 0.0)?,
            );
            FieldSpec::Constant(Matrix3::new(0.0, b12, b13, -b12, 0.0, b23, -b13, -b23, 0.0))
        }
        "potential" => {
            let mut m = Matrix3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = r.real(&format!("field.m{}{}", i + 1, j + 1), 0.0)?;
                }
            }
            FieldSpec::Potential(m)
        }
        _ => FieldSpec::LeftInvariant(r.real("field.strength", 0.8)?),
    };
    let k = r.count("system.k", 0)?;
    let force_scale = match r.choice("force.kind", false, &[("none", false), ("scaling", true)])? {
        true => Some(r.real("force.scale", 0.0)?),
        false => None,
    };
    let control = match r.choice("control.kind", false, &[("none", false), ("scaling", true)])? {
        true => Some((
            r.real("control.scale", 0.0)?,
            r.choice(
                "control.subset",
                SubsetKind::Full,
                &[("full", SubsetKind::Full), ("zero", SubsetKind::Zero)],
            )?,
        )),
        false => None,
    };
    Ok(SystemConfig {
        mass: r.positive("system.mass", 1.0)?,
        charge: r.real("system.charge", 1.0)?,
        light_speed: r.positive("system.light_speed", 1.0)?,
        metric: r.choice(
            "system.metric",
            KineticMetric::LeftInvariant,
            &[
                ("euclidean", KineticMetric::Euclidean),
                ("left_invariant", KineticMetric::LeftInvariant),
            ],
        )?,
        k,
        v_stiffness: r.positive("system.v_stiffness", 1.0)?,
        field,
        force_scale,
        control,
    })
}

fn read_check(r: &mut Reader) -> Result<CheckConfig, ConfigError> {
    let names = match r.str("check.names") {
        None => Vec::new(),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect(),
    };
    for name in &names {
        if !heisenberg_rch::suite::is_known_check(name) {
            return Err(r.invalid("check.names", format!("unknown check `{name}`")));
        }
    }
    let samples = match r.str("check.samples") {
        None => None,
        Some(_) => Some(r.count("check.samples", 0)?),
    };
    let mut group_samples = BTreeMap::new();
    for (key, name) in r.check_keys("samples") {
        if !heisenberg_rch::suite::is_known_check(&name) {
            return Err(r.invalid(&key, format!("unknown check `{name}`")));
        }
        group_samples.insert(name, r.count(&key, 0)?);
    }
    let mut thresholds = BTreeMap::new();
    for (key, name) in r.check_keys("threshold") {
        let t = r.real(&key, 0.0)?;
        if t < 0.0 {
            return Err(r.invalid(&key, "must be non-negative"));
        }
        thresholds.insert(name, t);
    }
    Ok(CheckConfig {
        names,
        samples,
        group_samples,
        thresholds,
    })
}

fn file_name(r: &mut Reader, key: &str, default: &str) -> Result<String, ConfigError> {
    let name = r.str(key).unwrap_or(default);
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(r.invalid(key, "must be a plain file name inside the output directory"));
    }
    Ok(name.to_owned())
}
