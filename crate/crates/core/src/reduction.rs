//! Regular point reduction of RCH systems and the numerical checks of the
//! reduction and matching results: the commutation of full and reduced
//! dynamics, the reduced form relation, the Kaluza–Klein construction and
//! the three matching conditions of magnetic RCH-equivalence.
//!
//! Reduced spaces are charted by [`OrbitPoint`]s. Flat orbit tangents use
//! the layout `[δρ1, δρ2, δθ…, δλ…]` with `ν` fixed.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::heisenberg::{CoAlgebraElement, GroupElement, Vec2};
use crate::magnetic::{
    left_action, left_action_extended, level_set_point, lift_evaluated, lift_orbit_point, magnetic_form, momentum_map,
    momentum_map_phase, orbit_projection, random_phase_point, reduced_hamiltonian, ExtendedPhasePoint, MagneticError,
    MagneticField, PhasePoint, ReductionChart, INVARIANCE_SAMPLES, INVARIANCE_TOL,
};
use crate::numerics::{
    fd_directional, fd_exterior_derivative_1form, integrate_flow, random_dvector, random_group, random_vector3,
    sweep_rng, uniform, FlowError, Method, StepError, SweepRng, GRADIENT_STEP, TANGENT_STEP,
};
use crate::poisson::{
    canonical_v_field, classify_orbit, evaluate_extended_orbit_form, orbit_hamiltonian_vector_field, BracketSign,
    MagneticCocycle, OrbitDescriptor, OrbitFunction, OrbitKind, OrbitPoint, OrbitVector, PoissonError,
};
use crate::rch::{
    fiber_part, integrate, rch_vector_field, vertical_from_fiber, vertical_lift, ControlSubset, FiberMap, Hamiltonian,
    KineticMetric, RCHSystem, RchError, Trajectory,
};
use crate::report::{nan_max, CheckResult, MaxAbs, MaxResidual};

/// Pass threshold of the commutation check.
pub const COMMUTATION_TOL: f64 = 1e-5;
/// Pass threshold of the reduced form relation.
pub const REDUCED_FORM_TOL: f64 = 1e-5;
/// Finite-difference step for the projection's tangent map.
pub const PROJECTION_STEP: f64 = 1e-6;
/// Pass threshold of the Kaluza–Klein trajectory comparison.
pub const KK_TOL: f64 = 1e-6;
pub const MR1_TOL: f64 = 1e-5;
pub const MR2_TOL: f64 = 1e-7;
pub const MR3_VERTICAL_TOL: f64 = 1e-6;
pub const MR3_HORIZONTAL_TOL: f64 = 1e-8;
pub const REDUCED_MR3_TOL: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("{what} is not invariant under the left action (residual {residual:e})")]
    NotInvariant { what: String, residual: f64 },
    #[error("level ν = {nu} gives a point orbit, but a plane orbit was expected")]
    IrregularLevel { nu: f64 },
    #[error("the first system has no control subset")]
    ControlSubsetMissing,
    #[error("the diffeomorphism has no inverse lift")]
    MissingInverseLift,
    #[error(transparent)]
    Magnetic(#[from] MagneticError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Rch(#[from] RchError),
    #[error("reduced integration failed at {0}")]
    Flow(#[from] FlowError),
}

/// Options for [`reduce_system_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReduceOptions {
    pub chart: ReductionChart,
    /// Reject levels whose orbit is not of this kind.
    pub expect: Option<OrbitKind>,
}

/// A map of the extended orbit charted by `OrbitPoint`s.
#[derive(Clone)]
pub struct OrbitMap {
    map: Arc<dyn Fn(&OrbitPoint) -> OrbitPoint + Send + Sync>,
}

impl fmt::Debug for OrbitMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("OrbitMap")
    }
}

impl OrbitMap {
    pub fn new(map: impl Fn(&OrbitPoint) -> OrbitPoint + Send + Sync + 'static) -> Self {
        Self { map: Arc::new(map) }
    }

    pub fn apply(&self, o: &OrbitPoint) -> OrbitPoint {
        (self.map)(o)
    }

    /// Tangent map on flat orbit tangents, by central differences.
    pub fn tangent(&self, o: &OrbitPoint, v: &OrbitVector) -> OrbitVector {
        let nu = o.nu;
        let chart = |y: &DVector<f64>| orbit_chart_coords(&self.apply(&orbit_from_chart(y, nu)));
        OrbitVector::from_flat(&fd_directional(
            chart,
            &orbit_chart_coords(o),
            &v.to_flat(),
            GRADIENT_STEP,
        ))
    }
}

/// `[ρ1, ρ2, θ…, λ…]`.
pub fn orbit_chart_coords(o: &OrbitPoint) -> DVector<f64> {
    let k = o.k();
    let mut v = DVector::zeros(2 + 2 * k);
    v[0] = o.rho.x1;
    v[1] = o.rho.x2;
    v.rows_mut(2, k).copy_from(&o.theta);
    v.rows_mut(2 + k, k).copy_from(&o.lambda);
    v
}

pub fn orbit_from_chart(y: &DVector<f64>, nu: f64) -> OrbitPoint {
    let k = (y.len() - 2) / 2;
    OrbitPoint::new(Vec2::new(y[0], y[1]), nu).with_v(y.rows(2, k).into_owned(), y.rows(2 + k, k).into_owned())
}

/// The reduced control: a law on the extended orbit and `π(C)`.
#[derive(Debug, Clone)]
pub struct ReducedControl {
    pub law: OrbitMap,
    pub subset: ControlSubset,
}

/// The reduced system `(Õ, ω̃⁻, h, f, C_red)` at a level `(μ, ν)`.
///
/// Reduced vertical lifts are the projections `Tπ · vlift(F)` taken at the
/// lift over the identity. Equivariance of `F` makes them lift-independent.
/// Forces may move `ν`; [`ReducedRCHSystem::vector_field_with_nu`] reports
/// that rate next to the orbit-chart field.
#[derive(Debug, Clone)]
pub struct ReducedRCHSystem {
    pub mu_nu: CoAlgebraElement,
    pub orbit: OrbitDescriptor,
    pub chart: ReductionChart,
    /// Cocycle of the orbit form in `chart`.
    pub cocycle: MagneticCocycle,
    pub hamiltonian: OrbitFunction,
    pub force: Option<OrbitMap>,
    pub control: Option<ReducedControl>,
    full: RCHSystem,
}

/// `c·L(e)ᵀA(e)`, the body shift at the identity.
fn identity_shift(field: &MagneticField) -> Vector3<f64> {
    field
        .body_potential(GroupElement::IDENTITY)
        .map(|a| a * field.charge_factor())
        .unwrap_or_else(|_| Vector3::zeros())
}

/// The point over the identity that projects to `o` in `chart`.
pub fn identity_lift(o: &OrbitPoint, field: &MagneticField, chart: ReductionChart) -> ExtendedPhasePoint {
    let rho = match chart {
        ReductionChart::Shifted => CoAlgebraElement::from_vector(&(o.coalgebra().to_vector() - identity_shift(field))),
        ReductionChart::Magnetic => o.coalgebra(),
    };
    ExtendedPhasePoint::new(GroupElement::IDENTITY, rho).with_v(o.theta.clone(), o.lambda.clone())
}

impl ReducedRCHSystem {
    pub fn k(&self) -> usize {
        self.full.k()
    }

    pub fn field(&self) -> &MagneticField {
        &self.full.field
    }

    /// Replaces the reduced Hamiltonian, e.g. to build a negative control.
    pub fn with_hamiltonian(mut self, h: OrbitFunction) -> Self {
        self.hamiltonian = h;
        self
    }

    /// The orbit point of the level itself over the identity.
    pub fn base_point(&self) -> OrbitPoint {
        let shift = match self.chart {
            ReductionChart::Shifted => Vector3::zeros(),
            ReductionChart::Magnetic => identity_shift(self.field()),
        };
        let v = self.mu_nu.to_vector() - shift;
        let k = self.k();
        OrbitPoint::new(Vec2::new(v[0], v[1]), v[2]).with_v(DVector::zeros(k), DVector::zeros(k))
    }

    /// Momentum level of the orbit through `o`.
    pub fn level_through(&self, o: &OrbitPoint) -> Result<CoAlgebraElement, MagneticError> {
        momentum_map(&identity_lift(o, self.field(), self.chart), self.field())
    }

    fn on_level(&self, o: &OrbitPoint) -> bool {
        self.level_through(o)
            .map(|l| (l.nu - self.mu_nu.nu).abs() <= 1e-12 * self.mu_nu.nu.abs().max(1.0))
            .unwrap_or(false)
    }

    /// The reduced Hamiltonian, or its analogue at the level through `o`
    /// when a force or control leaves the level.
    fn hamiltonian_at(&self, o: &OrbitPoint) -> Result<OrbitFunction, MagneticError> {
        if self.on_level(o) {
            return Ok(self.hamiltonian.clone());
        }
        let level = self.level_through(o)?;
        Ok(lift_evaluated(&self.full.hamiltonian, level, self.field(), self.chart))
    }

    /// `X_h` on the extended orbit; on a point orbit `ρ` is frozen.
    pub fn hamiltonian_vector_field(&self, o: &OrbitPoint) -> Result<OrbitVector, ReductionError> {
        let h = self.hamiltonian_at(o)?;
        let point_orbit = matches!(self.orbit, OrbitDescriptor::Point { .. }) && self.on_level(o);
        if point_orbit {
            return Ok(canonical_v_field(&h.gradient(o)));
        }
        Ok(orbit_hamiltonian_vector_field(
            &h,
            o,
            &self.cocycle,
            BracketSign::Minus,
        )?)
    }

    /// Reduced vertical lift of a full fiber map and the `ν`-rate it induces.
    fn vertical_parts(&self, map: &FiberMap, o: &OrbitPoint) -> (OrbitVector, f64) {
        let k = self.k();
        let x = identity_lift(o, self.field(), self.chart).to_phase();
        // At the identity L = I, so δρ = δp for vertical vectors.
        let v = vertical_lift(map, &self.full, &x);
        let out = OrbitVector {
            d_rho: Vec2::new(v[3], v[4]),
            d_theta: DVector::zeros(k),
            d_lambda: v.rows(6 + k, k).into_owned(),
        };
        (out, v[5])
    }

    /// `X_h + vlift(f) + vlift(u)` in the orbit chart, and `dν/dt`.
    pub fn vector_field_with_nu(&self, o: &OrbitPoint) -> Result<(OrbitVector, f64), ReductionError> {
        let mut v = self.hamiltonian_vector_field(o)?.to_flat();
        let mut nu_rate = 0.0;
        let maps = self.full.force.iter().chain(self.full.control.as_ref().map(|c| &c.law));
        for map in maps {
            let (lift, rate) = self.vertical_parts(map, o);
            v += lift.to_flat();
            nu_rate += rate;
        }
        Ok((OrbitVector::from_flat(&v), nu_rate))
    }

    pub fn vector_field(&self, o: &OrbitPoint) -> Result<OrbitVector, ReductionError> {
        Ok(self.vector_field_with_nu(o)?.0)
    }
}

fn group_invariance_residual_map(map: &FiberMap, k: usize, seed: u64) -> f64 {
    let mut rng = sweep_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..INVARIANCE_SAMPLES {
        let x = random_phase_point(&mut rng, k, 2.0);
        let h = random_group(&mut rng, 2.0);
        let a = map.apply(&left_action(h, &x)).to_flat();
        let b = left_action(h, &map.apply(&x)).to_flat();
        worst = nan_max(worst, (a - b).max_abs() / x.to_flat().max_abs().max(1.0));
    }
    worst
}

fn reduce_fiber_map(map: &FiberMap, field: &MagneticField, chart: ReductionChart) -> OrbitMap {
    let (map, field) = (map.clone(), field.clone());
    OrbitMap::new(move |o| {
        let x = identity_lift(o, &field, chart);
        let image = ExtendedPhasePoint::from_phase(&map.apply(&x.to_phase()));
        orbit_projection(&image, &field, chart).unwrap_or_else(|_| nan_orbit_point(o))
    })
}

fn nan_orbit_point(o: &OrbitPoint) -> OrbitPoint {
    let k = o.k();
    OrbitPoint::new(Vec2::new(f64::NAN, f64::NAN), f64::NAN)
        .with_v(DVector::from_element(k, f64::NAN), DVector::from_element(k, f64::NAN))
}

/// `π(C)` in orbit fiber coordinates `[ρ1, ρ2, λ…]`, taken at the lift over
/// the identity. Requires a left-invariant subset.
fn reduce_control_subset(
    subset: &ControlSubset,
    field: &MagneticField,
    chart: ReductionChart,
    k: usize,
) -> Result<ControlSubset, ReductionError> {
    let shift = match chart {
        ReductionChart::Shifted => field
            .body_potential(GroupElement::IDENTITY)
            .map(|a| a * field.charge_factor())
            .unwrap_or_else(|_| Vector3::zeros()),
        ReductionChart::Magnetic => Vector3::zeros(),
    };
    // At g = e the body momentum equals p, so dropping the ν row projects C.
    let keep: Vec<usize> = (0..2).chain(3..3 + k).collect();
    let mut offset = DVector::zeros(2 + k);
    for (j, &i) in keep.iter().enumerate() {
        offset[j] = subset.offset()[i] + if i < 3 { shift[i] } else { 0.0 };
    }
    let rows = DMatrix::from_fn(2 + k, subset.rank(), |r, c| subset.span()[(keep[r], c)]);
    let basis = if rows.ncols() == 0 {
        DMatrix::zeros(2 + k, 0)
    } else {
        let svd = rows.svd(true, false);
        let u = svd.u.expect("requested");
        let rank = svd
            .singular_values
            .iter()
            .filter(|s| **s > crate::rch::RANK_TOL)
            .count();
        u.columns(0, rank).into_owned()
    };
    Ok(ControlSubset::new(offset, basis)?)
}

/// Reduces `sys` at `mu_nu` in the shifted chart.
pub fn reduce_system(sys: &RCHSystem, mu_nu: CoAlgebraElement) -> Result<ReducedRCHSystem, ReductionError> {
    reduce_system_with(sys, mu_nu, &ReduceOptions::default())
}

pub fn reduce_system_with(
    sys: &RCHSystem,
    mu_nu: CoAlgebraElement,
    options: &ReduceOptions,
) -> Result<ReducedRCHSystem, ReductionError> {
    let orbit = classify_orbit(&mu_nu);
    if options.expect == Some(OrbitKind::Plane) && orbit.kind() == OrbitKind::Point {
        return Err(ReductionError::IrregularLevel { nu: mu_nu.nu });
    }
    let field = &sys.field;
    if !field.has_potential() {
        return Err(MagneticError::MissingPotential.into());
    }
    if !field.is_declared_left_invariant() {
        let residual = field.potential_invariance_residual(0xa11, INVARIANCE_SAMPLES)?;
        if residual > INVARIANCE_TOL {
            return Err(ReductionError::NotInvariant {
                what: "magnetic potential".into(),
                residual,
            });
        }
    }
    let k = sys.k();
    let chart = options.chart;
    let hamiltonian = reduced_hamiltonian(&sys.hamiltonian, mu_nu, field, chart, k).map_err(|e| match e {
        MagneticError::NotInvariant { what, residual } => ReductionError::NotInvariant { what, residual },
        other => other.into(),
    })?;
    let force = match &sys.force {
        Some(f) => {
            let residual = group_invariance_residual_map(f, k, 0xf0);
            if residual > INVARIANCE_TOL {
                return Err(ReductionError::NotInvariant {
                    what: "force map".into(),
                    residual,
                });
            }
            Some(reduce_fiber_map(f, field, chart))
        }
        None => None,
    };
    let control = match &sys.control {
        Some(c) => {
            let residual = group_invariance_residual_map(&c.law, k, 0xc0);
            if residual > INVARIANCE_TOL {
                return Err(ReductionError::NotInvariant {
                    what: "control law".into(),
                    residual,
                });
            }
            Some(ReducedControl {
                law: reduce_fiber_map(&c.law, field, chart),
                subset: reduce_control_subset(&c.subset, field, chart, k)?,
            })
        }
        None => None,
    };
    let red = ReducedRCHSystem {
        mu_nu,
        orbit,
        chart,
        cocycle: chart.cocycle(field),
        hamiltonian,
        force,
        control,
        full: sys.clone(),
    };
    let spread = lift_independence(&red, sys)?;
    if spread > INVARIANCE_TOL {
        return Err(ReductionError::NotInvariant {
            what: "reduced maps (lift dependence)".into(),
            residual: spread,
        });
    }
    Ok(red)
}

/// Largest disagreement of the reduced maps evaluated through different
/// isotropy lifts of the same orbit point.
fn lift_independence(red: &ReducedRCHSystem, sys: &RCHSystem) -> Result<f64, ReductionError> {
    let mut rng = sweep_rng(0x11f7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let g = random_group(&mut rng, 2.0);
        let (theta, lambda) = (
            random_dvector(&mut rng, red.k(), 1.0),
            random_dvector(&mut rng, red.k(), 1.0),
        );
        let x = level_set_point(g, red.mu_nu, red.field(), theta, lambda)?;
        let o = orbit_projection(&x, red.field(), red.chart)?;
        let base_h = red.hamiltonian.evaluate(&o);
        for alpha in [-1.3, 0.4, 2.2] {
            let moved = left_action_extended(GroupElement::central(alpha), &x);
            let phase = moved.to_phase();
            worst = nan_max(worst, (sys.hamiltonian.evaluate(&phase) - base_h).abs());
            let maps = sys
                .force
                .iter()
                .chain(sys.control.as_ref().map(|c| &c.law))
                .zip(red.force.iter().chain(red.control.as_ref().map(|c| &c.law)));
            for (full, reduced) in maps {
                let via_lift = orbit_projection(
                    &ExtendedPhasePoint::from_phase(&full.apply(&phase)),
                    red.field(),
                    red.chart,
                )?;
                let direct = reduced.apply(&o);
                worst = nan_max(
                    worst,
                    (orbit_chart_coords(&via_lift) - orbit_chart_coords(&direct)).max_abs(),
                );
                worst = nan_max(worst, (via_lift.nu - direct.nu).abs());
            }
        }
    }
    Ok(worst)
}

/// `Tπ · v` at `x`, by central differences of the projection.
pub fn projection_tangent(
    x: &PhasePoint,
    v: &DVector<f64>,
    field: &MagneticField,
    chart: ReductionChart,
) -> Result<(OrbitVector, f64), MagneticError> {
    let project = |y: &DVector<f64>| -> DVector<f64> {
        match orbit_projection(&ExtendedPhasePoint::from_phase(&PhasePoint::from_flat(y)), field, chart) {
            Ok(o) => o.to_flat(),
            Err(_) => DVector::from_element(3 + 2 * x.k(), f64::NAN),
        }
    };
    // Validate once so that a missing potential surfaces as an error.
    orbit_projection(&ExtendedPhasePoint::from_phase(x), field, chart)?;
    let d = fd_directional(project, &x.to_flat(), v, PROJECTION_STEP);
    let k = x.k();
    let mut chart_part = DVector::zeros(2 + 2 * k);
    chart_part[0] = d[0];
    chart_part[1] = d[1];
    chart_part.rows_mut(2, 2 * k).copy_from(&d.rows(3, 2 * k));
    Ok((OrbitVector::from_flat(&chart_part), d[2]))
}

/// Random level-set point for sample sweeps.
pub fn sample_level_point(
    rng: &mut SweepRng,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    k: usize,
) -> Result<ExtendedPhasePoint, MagneticError> {
    let g = random_group(rng, 2.0);
    level_set_point(
        g,
        mu_nu,
        field,
        random_dvector(rng, k, 1.0),
        random_dvector(rng, k, 1.0),
    )
}

/// `max |Tπ · X(x) − X_red(π(x))|` over random level-set points.
pub fn check_commutation(
    sys: &RCHSystem,
    red: &ReducedRCHSystem,
    samples: usize,
    seed: u64,
) -> Result<CheckResult, ReductionError> {
    let mut rng = sweep_rng(seed);
    let mut worst = MaxResidual::default();
    for _ in 0..samples {
        let x = sample_level_point(&mut rng, red.mu_nu, &sys.field, red.k())?;
        let phase = x.to_phase();
        let full = rch_vector_field(sys, &phase);
        let (pushed, dnu) = projection_tangent(&phase, &full, &sys.field, red.chart)?;
        let o = orbit_projection(&x, &sys.field, red.chart)?;
        let (reduced, nu_rate) = red.vector_field_with_nu(&o)?;
        let r = nan_max((pushed.to_flat() - reduced.to_flat()).max_abs(), (dnu - nu_rate).abs());
        worst.push(r);
    }
    Ok(worst.finish("commutation", COMMUTATION_TOL))
}

fn level_parametrization(
    params: &DVector<f64>,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    k: usize,
) -> Result<PhasePoint, MagneticError> {
    let g = GroupElement::new(params[0], params[1], params[2]);
    let x = level_set_point(
        g,
        mu_nu,
        field,
        params.rows(3, k).into_owned(),
        params.rows(3 + k, k).into_owned(),
    )?;
    Ok(x.to_phase())
}

/// `π*ω̃ = i*ω_B` on random pairs of level-set tangents, obtained by
/// differentiating the parametrization `(g, θ, λ) ↦ J⁻¹(μ, ν)`.
pub fn check_reduced_form(
    field: &MagneticField,
    mu_nu: CoAlgebraElement,
    chart: ReductionChart,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<CheckResult, ReductionError> {
    let cocycle = chart.cocycle(field);
    let mut rng = sweep_rng(seed);
    let mut worst = MaxResidual::default();
    let n = 3 + 2 * k;
    for _ in 0..samples {
        let params = random_dvector(&mut rng, n, 2.0);
        let x = level_parametrization(&params, mu_nu, field, k)?;
        let embed = |y: &DVector<f64>| match level_parametrization(y, mu_nu, field, k) {
            Ok(p) => p.to_flat(),
            Err(_) => DVector::from_element(6 + 2 * k, f64::NAN),
        };
        let (a1, a2) = (random_dvector(&mut rng, n, 1.0), random_dvector(&mut rng, n, 1.0));
        let v1 = fd_directional(embed, &params, &a1, TANGENT_STEP);
        let v2 = fd_directional(embed, &params, &a2, TANGENT_STEP);
        let full = magnetic_form(&x, &v1, &v2, field);
        let (t1, _) = projection_tangent(&x, &v1, field, chart)?;
        let (t2, _) = projection_tangent(&x, &v2, field, chart)?;
        let o = orbit_projection(&ExtendedPhasePoint::from_phase(&x), field, chart)?;
        let reduced = evaluate_extended_orbit_form(&o, &t1, &t2, &cocycle, BracketSign::Minus)?;
        worst.push((full - reduced).abs());
    }
    Ok(worst.finish("reduced_form", REDUCED_FORM_TOL))
}

/// A reduced trajectory with the reduced energy.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<OrbitPoint>,
    pub energy: Vec<f64>,
}

impl ReducedTrajectory {
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().fold(0.0, |m, e| m.max((e - e0).abs()))
    }
}

/// Integrates the reduced dynamics in flat orbit coordinates
/// `[ρ1, ρ2, ν, θ…, λ…]`; `ν` stays fixed unless a force moves it.
pub fn integrate_reduced(
    red: &ReducedRCHSystem,
    o0: &OrbitPoint,
    t_end: f64,
    h: f64,
    method: Method,
) -> Result<ReducedTrajectory, ReductionError> {
    let k = red.k();
    let f = |y: &DVector<f64>| -> Result<DVector<f64>, StepError> {
        let (v, nu_rate) = red
            .vector_field_with_nu(&OrbitPoint::from_flat(y))
            .map_err(|e| StepError::Field(e.to_string()))?;
        let v = v.to_flat();
        let mut out = DVector::zeros(3 + 2 * k);
        out[0] = v[0];
        out[1] = v[1];
        out[2] = nu_rate;
        out.rows_mut(3, 2 * k).copy_from(&v.rows(2, 2 * k));
        if out.iter().all(|c| c.is_finite()) {
            Ok(out)
        } else {
            Err(StepError::NonFinite)
        }
    };
    if !(h.is_finite() && h > 0.0) {
        return Err(RchError::InvalidParameter { name: "step", value: h }.into());
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(RchError::InvalidParameter {
            name: "t_end",
            value: t_end,
        }
        .into());
    }
    let (times, states) = integrate_flow(&f, &o0.to_flat(), t_end, h, method)?;
    let points: Vec<_> = states.iter().map(OrbitPoint::from_flat).collect();
    let energy = points
        .iter()
        .map(|o| red.hamiltonian_at(o).map(|h| h.evaluate(o)).unwrap_or(f64::NAN))
        .collect();
    Ok(ReducedTrajectory { times, points, energy })
}

/// Geodesic flow on `Q = H × S¹` for the connection-coupled metric, written
/// on `T*Q` with `(θ, λ)` the circle coordinate and its momentum.
#[derive(Debug, Clone)]
pub struct KKSystem {
    pub field: MagneticField,
    pub mass: f64,
    pub mu: f64,
    pub metric: KineticMetric,
    system: RCHSystem,
}

impl KKSystem {
    /// The canonical system with `H(q, θ, p, λ) = |p − λ A(q)|²/2m + λ²/2`.
    pub fn as_rch(&self) -> &RCHSystem {
        &self.system
    }

    /// `J_Q(q, θ, p, λ) = λ`.
    pub fn momentum_map(&self, z: &PhasePoint) -> f64 {
        z.lambda[0]
    }

    /// Lift of a point of `T*H` to the level `λ = μ` with `θ = 0`.
    pub fn lift(&self, x: &PhasePoint) -> Result<PhasePoint, MagneticError> {
        let a = self.field.require_potential(&x.q)?;
        Ok(PhasePoint::new(x.q, x.p + a * self.mu)
            .with_v(DVector::from_element(1, 0.0), DVector::from_element(1, self.mu)))
    }

    /// Drops `(θ, λ)` and returns to kinetic momenta.
    pub fn project(&self, z: &PhasePoint) -> Result<PhasePoint, MagneticError> {
        let a = self.field.require_potential(&z.q)?;
        Ok(PhasePoint::new(z.q, z.p - a * z.lambda[0]))
    }

    /// `α_μ = μ (A·dq + dθ)` on `Q`, in coordinates `(q, θ)`.
    pub fn alpha_mu(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let a = self
            .field
            .potential(&Vector3::new(x[0], x[1], x[2]))
            .unwrap_or_else(Vector3::zeros);
        self.mu * (a.dot(&Vector3::new(v[0], v[1], v[2])) + v[3])
    }

    /// The magnetic particle on `(T*H, ω₀ − μB)` that the reduction reproduces.
    pub fn magnetic_counterpart(&self) -> Result<RCHSystem, RchError> {
        let mut sys = RCHSystem::new(
            self.field.clone().with_charge_factor(self.mu),
            Hamiltonian::kinetic(self.mass, self.metric),
            0,
        );
        sys.params.mass = self.mass;
        Ok(sys)
    }
}

pub fn kaluza_klein_system(field: MagneticField, m: f64, mu: f64) -> Result<KKSystem, ReductionError> {
    kaluza_klein_system_with_metric(field, m, mu, KineticMetric::Euclidean)
}

pub fn kaluza_klein_system_with_metric(
    field: MagneticField,
    m: f64,
    mu: f64,
    metric: KineticMetric,
) -> Result<KKSystem, ReductionError> {
    if !field.has_potential() {
        return Err(MagneticError::MissingPotential.into());
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(RchError::InvalidParameter { name: "mass", value: m }.into());
    }
    let base = Hamiltonian::kinetic(m, metric);
    let f = field.clone().with_charge_factor(1.0);
    let minimal = |z: &PhasePoint, f: &MagneticField| -> PhasePoint {
        let a = f.potential(&z.q).expect("checked above");
        PhasePoint::new(z.q, z.p - a * z.lambda[0])
    };
    let value = {
        let (base, f) = (base.clone(), f.clone());
        move |z: &PhasePoint| base.evaluate(&minimal(z, &f)) + 0.5 * z.lambda[0] * z.lambda[0]
    };
    let hamiltonian = {
        let (base, f) = (base.clone(), f.clone());
        Hamiltonian::new(value).with_gradient(move |z| {
            let kinetic = minimal(z, &f);
            let g = base.gradient(&kinetic);
            let a = f.potential(&z.q).expect("checked above");
            let jac = f.potential_jacobian(&z.q).expect("checked above");
            let lambda = z.lambda[0];
            let dp = g.fixed_rows::<3>(3).into_owned();
            let mut out = DVector::zeros(8);
            let dq = g.fixed_rows::<3>(0).into_owned() - jac.transpose() * dp * lambda;
            out.fixed_rows_mut::<3>(0).copy_from(&dq);
            out.fixed_rows_mut::<3>(3).copy_from(&dp);
            out[7] = lambda - a.dot(&dp);
            out
        })
    };
    let system = RCHSystem::new(MagneticField::zero(), hamiltonian, 1);
    Ok(KKSystem {
        field: f,
        mass: m,
        mu,
        metric,
        system,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KKComparison {
    /// `max_t |proj(KK(t)) − magnetic(t)|` over the state components.
    pub max_discrepancy: f64,
    /// `max_t |λ(t) − μ|`.
    pub lambda_drift: f64,
    pub steps: usize,
}

/// Integrates the KK geodesic flow from the lift of `x0` and the magnetic
/// particle from `x0`, both by the implicit midpoint rule.
pub fn kk_reduce_and_compare(
    kk: &KKSystem,
    x0: &PhasePoint,
    t_end: f64,
    h: f64,
) -> Result<KKComparison, ReductionError> {
    let z0 = kk.lift(x0)?;
    let kk_traj: Trajectory = integrate(kk.as_rch(), &z0, t_end, h, Method::Midpoint)?;
    let mag_traj = integrate(&kk.magnetic_counterpart()?, x0, t_end, h, Method::Midpoint)?;
    let mut max_discrepancy = 0.0f64;
    let mut lambda_drift = 0.0f64;
    for (z, x) in kk_traj.states.iter().zip(&mag_traj.states) {
        let projected = kk.project(z)?;
        max_discrepancy = nan_max(max_discrepancy, (projected.to_flat() - x.to_flat()).max_abs());
        lambda_drift = nan_max(lambda_drift, (kk.momentum_map(z) - kk.mu).abs());
    }
    Ok(KKComparison {
        max_discrepancy,
        lambda_drift,
        steps: kk_traj.len() - 1,
    })
}

/// `dα_μ = μ·𝔅` on `Q`, with `𝔅` padded by a zero circle row and column.
pub fn check_kk_curvature(kk: &KKSystem, samples: usize, seed: u64) -> CheckResult {
    let mut rng = sweep_rng(seed);
    let mut worst = MaxResidual::default();
    for _ in 0..samples {
        let x = random_dvector(&mut rng, 4, 2.0);
        let (v, w) = (random_dvector(&mut rng, 4, 1.0), random_dvector(&mut rng, 4, 1.0));
        let d = fd_exterior_derivative_1form(|y, t| kk.alpha_mu(y, t), &x, &v, &w, TANGENT_STEP);
        let q = Vector3::new(x[0], x[1], x[2]);
        let expected = kk.mu
            * kk.field
                .two_form(&q, &Vector3::new(v[0], v[1], v[2]), &Vector3::new(w[0], w[1], w[2]));
        worst.push((d - expected).abs());
    }
    worst.finish("kk_curvature", 1e-6)
}

type BaseFn = Arc<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&Vector3<f64>) -> Matrix3<f64> + Send + Sync>;
type LiftFn = Arc<dyn Fn(&PhasePoint) -> PhasePoint + Send + Sync>;
type LiftTangentFn = Arc<dyn Fn(&PhasePoint, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A diffeomorphism `φ: H → H` (identity on `V`) and its cotangent lift
/// `φ*: T*Q₂ → T*Q₁, (q₂, p₂) ↦ (φ⁻¹ q₂, Dφ(φ⁻¹ q₂)ᵀ p₂)`.
#[derive(Clone)]
pub struct DiffeoSpec {
    forward: BaseFn,
    inverse: BaseFn,
    jacobian: Option<JacobianFn>,
    lift_override: Option<(LiftFn, Option<LiftFn>)>,
    lift_tangent: Option<LiftTangentFn>,
}

impl fmt::Debug for DiffeoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffeoSpec")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("lift_override", &self.lift_override.is_some())
            .finish()
    }
}

impl DiffeoSpec {
    pub fn new(
        forward: impl Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
        inverse: impl Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            jacobian: None,
            lift_override: None,
            lift_tangent: None,
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&Vector3<f64>) -> Matrix3<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    /// Replaces the cotangent lift by an arbitrary map, for negative controls.
    pub fn with_lift_override(
        mut self,
        lift: impl Fn(&PhasePoint) -> PhasePoint + Send + Sync + 'static,
        inverse: Option<LiftFn>,
    ) -> Self {
        self.lift_override = Some((Arc::new(lift), inverse));
        self.lift_tangent = None;
        self
    }

    pub fn identity() -> Self {
        let mut d = Self::new(|q| *q, |q| *q).with_jacobian(|_| Matrix3::identity());
        d.lift_tangent = Some(Arc::new(|_, v| v.clone()));
        d
    }

    /// Left translation `q ↦ h·q`; its tangent does not depend on `q`.
    pub fn translation(h: GroupElement) -> Self {
        let hi = h.inverse();
        let tl = h.left_translation_tangent();
        let tl_inv = hi.left_translation_tangent();
        let mut d = Self::new(
            move |q| h.multiply(GroupElement::from_vector(q)).to_vector(),
            move |q| hi.multiply(GroupElement::from_vector(q)).to_vector(),
        )
        .with_jacobian(move |_| tl);
        d.lift_tangent = Some(Arc::new(move |_, v| {
            let mut out = v.clone();
            let dq = tl_inv * v.fixed_rows::<3>(0);
            let dp = tl.transpose() * v.fixed_rows::<3>(3);
            out.fixed_rows_mut::<3>(0).copy_from(&dq);
            out.fixed_rows_mut::<3>(3).copy_from(&dp);
            out
        }));
        d
    }

    /// The fiber shear `p ↦ p + s·p₂ e₁` over the identity: not the cotangent
    /// lift of any base map, and not symplectic.
    pub fn shear(s12: f64) -> Self {
        let apply = move |x: &PhasePoint, s: f64| {
            let mut y = x.clone();
            y.p[0] += s * x.p[1];
            y
        };
        Self::identity().with_lift_override(move |x| apply(x, s12), Some(Arc::new(move |x| apply(x, -s12))))
    }

    pub fn forward(&self, q: &Vector3<f64>) -> Vector3<f64> {
        (self.forward)(q)
    }

    pub fn inverse(&self, q: &Vector3<f64>) -> Vector3<f64> {
        (self.inverse)(q)
    }

    pub fn jacobian(&self, q: &Vector3<f64>) -> Matrix3<f64> {
        match &self.jacobian {
            Some(j) => j(q),
            None => {
                let x = DVector::from_column_slice(q.as_slice());
                let jac = crate::numerics::fd_jacobian(
                    |y| DVector::from_column_slice(self.forward(&Vector3::new(y[0], y[1], y[2])).as_slice()),
                    &x,
                    TANGENT_STEP,
                );
                Matrix3::from_fn(|i, j| jac[(i, j)])
            }
        }
    }

    /// `φ*` applied to a point of `T*Q₂`.
    pub fn cotangent_lift(&self, x2: &PhasePoint) -> PhasePoint {
        if let Some((lift, _)) = &self.lift_override {
            return lift(x2);
        }
        let q1 = self.inverse(&x2.q);
        PhasePoint {
            q: q1,
            p: self.jacobian(&q1).transpose() * x2.p,
            theta: x2.theta.clone(),
            lambda: x2.lambda.clone(),
        }
    }

    /// `φ_* = (φ*)⁻¹` applied to a point of `T*Q₁`.
    pub fn cotangent_lift_inverse(&self, x1: &PhasePoint) -> Result<PhasePoint, ReductionError> {
        if let Some((_, inverse)) = &self.lift_override {
            return inverse
                .as_ref()
                .map(|f| f(x1))
                .ok_or(ReductionError::MissingInverseLift);
        }
        let jac = self.jacobian(&x1.q);
        let p2 = jac
            .transpose()
            .try_inverse()
            .ok_or(ReductionError::MissingInverseLift)?
            * x1.p;
        Ok(PhasePoint {
            q: self.forward(&x1.q),
            p: p2,
            theta: x1.theta.clone(),
            lambda: x1.lambda.clone(),
        })
    }

    /// `T φ* · v` at `x2`; central differences at step `1e-5` unless the
    /// map is a built-in with a known tangent.
    pub fn lift_tangent(&self, x2: &PhasePoint, v: &DVector<f64>) -> DVector<f64> {
        match &self.lift_tangent {
            Some(t) => t(x2, v),
            None => fd_directional(
                |y| self.cotangent_lift(&PhasePoint::from_flat(y)).to_flat(),
                &x2.to_flat(),
                v,
                TANGENT_STEP,
            ),
        }
    }
}

/// MR-1: `ω_{B₁}(φ*x)(Tφ* v, Tφ* w) = ω_{B₂}(x)(v, w)` on random samples.
pub fn check_mr1(
    phi: &DiffeoSpec,
    field1: &MagneticField,
    field2: &MagneticField,
    k: usize,
    samples: usize,
    seed: u64,
) -> CheckResult {
    let mut rng = sweep_rng(seed);
    let mut worst = MaxResidual::default();
    let n = 6 + 2 * k;
    for _ in 0..samples {
        let x = random_phase_point(&mut rng, k, 2.0);
        let (v, w) = (random_dvector(&mut rng, n, 1.0), random_dvector(&mut rng, n, 1.0));
        let y = phi.cotangent_lift(&x);
        let (tv, tw) = (phi.lift_tangent(&x, &v), phi.lift_tangent(&x, &w));
        let lhs = magnetic_form(&y, &tv, &tw, field1);
        let rhs = magnetic_form(&x, &v, &w, field2);
        worst.push((lhs - rhs).abs());
    }
    worst.finish("mr1_symplectic", MR1_TOL)
}

/// Isotropy samples at `level`: central elements, plus random elements that
/// are verified numerically to fix `level`.
pub fn isotropy_samples(rng: &mut SweepRng, level: CoAlgebraElement, count: usize) -> Vec<GroupElement> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        out.push(GroupElement::central(uniform(rng, 3.0)));
        let candidate = random_group(rng, 2.0);
        if out.len() < count && candidate.coadjoint(level).approx_eq(level, 1e-12) {
            out.push(candidate);
        }
    }
    out
}

/// MR-2: `φ*` maps `J₂⁻¹(level2)` into `J₁⁻¹(level1)`, commutes with sampled
/// isotropy elements, and so induces a well-defined map of reduced points.
#[allow(clippy::too_many_arguments)]
pub fn check_mr2_equivariance(
    phi: &DiffeoSpec,
    field1: &MagneticField,
    field2: &MagneticField,
    level1: CoAlgebraElement,
    level2: CoAlgebraElement,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<CheckResult, ReductionError> {
    let mut rng = sweep_rng(seed);
    let mut worst = MaxResidual::default();
    for _ in 0..samples {
        let x2 = sample_level_point(&mut rng, level2, field2, k)?;
        let phase2 = x2.to_phase();
        let y = phi.cotangent_lift(&phase2);
        let containment = momentum_map_phase(&y, field1)?.distance(level1);
        let reduced = orbit_projection(&ExtendedPhasePoint::from_phase(&y), field1, ReductionChart::Shifted)?;
        let mut r = containment;
        for h in isotropy_samples(&mut rng, level2, 3) {
            let a = phi.cotangent_lift(&left_action(h, &phase2));
            let b = left_action(h, &y);
            r = nan_max(r, (a.to_flat() - b.to_flat()).max_abs());
            let ra = orbit_projection(&ExtendedPhasePoint::from_phase(&a), field1, ReductionChart::Shifted)?;
            r = nan_max(r, (ra.to_flat() - reduced.to_flat()).max_abs());
        }
        worst.push(r);
    }
    Ok(worst.finish("mr2_equivariance", MR2_TOL))
}

/// Horizontal and vertical parts of the MR-3 residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mr3Report {
    /// `max |q-part|` of the residual field; must vanish for membership.
    pub horizontal: CheckResult,
    /// `max` distance of the fiber part from the control span after least squares.
    pub vertical: CheckResult,
}

impl Mr3Report {
    pub fn passed(&self) -> bool {
        self.horizontal.passed && self.vertical.passed
    }
}

/// MR-3: `X_{H₁} + vlift(F₁) − Tφ* X_{H₂} − vlift(φ* F₂ φ_*)` takes values
/// in `vlift(C₁)`, evaluated at `φ*(x)` for random `x ∈ T*Q₂`.
pub fn check_mr3_matching(
    sys1: &RCHSystem,
    sys2: &RCHSystem,
    phi: &DiffeoSpec,
    samples: usize,
    seed: u64,
) -> Result<Mr3Report, ReductionError> {
    let subset = sys1.control_subset().ok_or(ReductionError::ControlSubsetMissing)?;
    let k = sys1.k();
    let mut rng = sweep_rng(seed);
    let (mut horizontal, mut vertical) = (MaxResidual::default(), MaxResidual::default());
    let conjugated = sys2.force.as_ref().map(|f2| {
        let (f2, phi) = (f2.clone(), phi.clone());
        FiberMap::new(move |y| {
            let image = phi
                .cotangent_lift_inverse(y)
                .map(|x| phi.cotangent_lift(&f2.apply(&x)))
                .unwrap_or_else(|_| PhasePoint::from_flat(&DVector::from_element(y.dim(), f64::NAN)));
            (image.p, image.lambda)
        })
    });
    for _ in 0..samples {
        let x = random_phase_point(&mut rng, k, 2.0);
        let y = phi.cotangent_lift(&x);
        let mut r = crate::rch::hamiltonian_vector_field(sys1, &y);
        if let Some(f1) = &sys1.force {
            r += vertical_lift(f1, sys1, &y);
        }
        r -= phi.lift_tangent(&x, &crate::rch::hamiltonian_vector_field(sys2, &x));
        if let Some(g) = &conjugated {
            r -= vertical_lift(g, sys1, &y);
        }
        horizontal.push(r.fixed_rows::<3>(0).max_abs());
        let theta_part = r.rows(6, k).max_abs();
        let fiber = fiber_part(&r, k);
        vertical.push(nan_max(subset.orthogonal_residual(&fiber).max_abs(), theta_part));
    }
    Ok(Mr3Report {
        horizontal: horizontal.finish("mr3_horizontal", MR3_HORIZONTAL_TOL),
        vertical: vertical.finish("mr3_vertical", MR3_VERTICAL_TOL),
    })
}

/// Reduced analogue of MR-3 for force-free systems related by `phi`: the
/// mismatch `X_red₁(φ̄ o) − Tφ̄ X_red₂(o)` must lie in the reduced control
/// directions of system 1.
pub fn check_reduced_mr3(
    red1: &ReducedRCHSystem,
    red2: &ReducedRCHSystem,
    phi: &DiffeoSpec,
    samples: usize,
    seed: u64,
) -> Result<CheckResult, ReductionError> {
    let subset = red1
        .control
        .as_ref()
        .map(|c| c.subset.clone())
        .unwrap_or_else(|| ControlSubset::zero(red1.k()));
    let (field1, field2) = (red1.field().clone(), red2.field().clone());
    let (chart1, chart2, level2) = (red1.chart, red2.chart, red2.mu_nu);
    let induced = {
        let phi = phi.clone();
        OrbitMap::new(move |o| {
            lift_orbit_point(o, level2, &field2, chart2, 0.0)
                .ok()
                .and_then(|x| {
                    let y = phi.cotangent_lift(&x.to_phase());
                    orbit_projection(&ExtendedPhasePoint::from_phase(&y), &field1, chart1).ok()
                })
                .unwrap_or_else(|| nan_orbit_point(o))
        })
    };
    let mut rng = sweep_rng(seed);
    let mut worst = MaxResidual::default();
    let k = red1.k();
    for _ in 0..samples {
        let x2 = sample_level_point(&mut rng, level2, red2.field(), k)?;
        let o2 = orbit_projection(&x2, red2.field(), chart2)?;
        let o1 = induced.apply(&o2);
        let lhs = red1.vector_field(&o1)?;
        let rhs = induced.tangent(&o2, &red2.vector_field(&o2)?);
        let r = lhs.to_flat() - rhs.to_flat();
        let mut fiber = DVector::zeros(2 + k);
        fiber[0] = r[0];
        fiber[1] = r[1];
        fiber.rows_mut(2, k).copy_from(&r.rows(2 + k, k));
        let theta_part = r.rows(2, k).max_abs();
        worst.push(nan_max(subset.orthogonal_residual(&fiber).max_abs(), theta_part));
    }
    Ok(worst.finish("reduced_mr3", REDUCED_MR3_TOL))
}

/// `π(c)` lies in the reduced control subset for random `c ∈ C` over
/// random level-set base points.
pub fn check_reduced_control_subset(
    sys: &RCHSystem,
    red: &ReducedRCHSystem,
    samples: usize,
    seed: u64,
) -> Result<CheckResult, ReductionError> {
    let (Some(full), Some(reduced)) = (sys.control_subset(), red.control.as_ref().map(|c| &c.subset)) else {
        return Ok(CheckResult::new("reduced_control_subset", 0, 0.0, INVARIANCE_TOL));
    };
    let mut rng = sweep_rng(seed);
    let mut worst = MaxResidual::default();
    let k = red.k();
    for _ in 0..samples {
        let coeffs = random_dvector(&mut rng, full.rank(), 1.0);
        let fiber = full.offset() + full.span() * coeffs;
        let x = PhasePoint::new(Vector3::zeros(), fiber.fixed_rows::<3>(0).into_owned())
            .with_v(random_dvector(&mut rng, k, 1.0), fiber.rows(3, k).into_owned());
        let o = orbit_projection(&ExtendedPhasePoint::from_phase(&x), red.field(), red.chart)?;
        let mut image = DVector::zeros(2 + k);
        image[0] = o.rho.x1;
        image[1] = o.rho.x2;
        image.rows_mut(2, k).copy_from(&o.lambda);
        worst.push(reduced.distance(&image));
    }
    Ok(worst.finish("reduced_control_subset", INVARIANCE_TOL))
}

/// The Noether residual: `max_t |J(t) − J(0)| / t_end` along a trajectory.
pub fn noether_drift_rate(traj: &Trajectory) -> Option<f64> {
    traj.momentum_drift()
        .map(|d| d / traj.duration().max(f64::MIN_POSITIVE))
}

/// Convenience: level-set point at the identity with momentum level `mu_nu`.
pub fn level_point_at_identity(
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    k: usize,
) -> Result<ExtendedPhasePoint, MagneticError> {
    level_set_point(
        GroupElement::IDENTITY,
        mu_nu,
        field,
        DVector::zeros(k),
        DVector::zeros(k),
    )
}

/// `J` of a trivialized point; re-exported for callers of this module.
pub fn level_of(x: &ExtendedPhasePoint, field: &MagneticField) -> Result<CoAlgebraElement, MagneticError> {
    momentum_map(x, field)
}

/// Vertical vector from a reduced fiber block; exposed for tests.
pub fn vertical_vector(f: &DVector<f64>, k: usize) -> DVector<f64> {
    vertical_from_fiber(f, k)
}

/// A random base point helper for callers that need one.
pub fn random_base(rng: &mut SweepRng) -> Vector3<f64> {
    random_vector3(rng, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rch::heisenberg_particle_with_metric;

    fn particle(b: f64) -> RCHSystem {
        heisenberg_particle_with_metric(
            1.0,
            1.0,
            1.0,
            MagneticField::left_invariant(b),
            KineticMetric::LeftInvariant,
        )
        .unwrap()
    }

    #[test]
    fn reduced_hamiltonian_is_kinetic_on_b_zero_orbit() {
        let sys = particle(0.0);
        let mu_nu = CoAlgebraElement::new(0.0, 0.0, 1.0);
        let red = reduce_system(&sys, mu_nu).unwrap();
        let o = OrbitPoint::new(Vec2::new(0.3, -0.4), 1.0);
        assert!((red.hamiltonian.evaluate(&o) - 0.5 * (0.09 + 0.16 + 1.0)).abs() < 1e-12);
        assert!(red.force.is_none() && red.control.is_none());
    }

    #[test]
    fn irregular_level_is_rejected() {
        let sys = particle(0.5);
        let opts = ReduceOptions {
            expect: Some(OrbitKind::Plane),
            ..Default::default()
        };
        assert!(matches!(
            reduce_system_with(&sys, CoAlgebraElement::new(1.0, 0.0, 0.0), &opts),
            Err(ReductionError::IrregularLevel { .. })
        ));
    }

    #[test]
    fn non_invariant_hamiltonian_is_rejected() {
        let sys = heisenberg_particle_with_metric(
            1.0,
            1.0,
            1.0,
            MagneticField::left_invariant(0.5),
            KineticMetric::Euclidean,
        )
        .unwrap();
        assert!(matches!(
            reduce_system(&sys, CoAlgebraElement::new(0.0, 0.0, 1.0)),
            Err(ReductionError::NotInvariant { .. })
        ));
    }

    #[test]
    fn commutation_small_sweep() {
        for chart in [ReductionChart::Shifted, ReductionChart::Magnetic] {
            let sys = particle(0.6).with_params(crate::rch::ParticleParams {
                mass: 1.0,
                charge: 1.0,
                light_speed: 1.0,
            });
            let sys = sys.unwrap();
            let opts = ReduceOptions { chart, expect: None };
            let red = reduce_system_with(&sys, CoAlgebraElement::new(0.2, -0.1, 1.0), &opts).unwrap();
            let r = check_commutation(&sys, &red, 10, 3).unwrap();
            assert!(r.passed, "{chart:?}: {}", r.max_residual);
        }
    }

    #[test]
    fn reduced_form_small_sweep() {
        let field = MagneticField::left_invariant(0.6).with_charge_factor(1.3);
        for chart in [ReductionChart::Shifted, ReductionChart::Magnetic] {
            let r = check_reduced_form(&field, CoAlgebraElement::new(0.2, -0.1, 1.0), chart, 1, 20, 4).unwrap();
            assert!(r.passed, "{chart:?}: {}", r.max_residual);
        }
    }

    #[test]
    fn shear_is_not_symplectic() {
        let f = MagneticField::zero();
        assert!(check_mr1(&DiffeoSpec::identity(), &f, &f, 0, 20, 1).max_residual <= 1e-12);
        assert!(check_mr1(&DiffeoSpec::shear(0.5), &f, &f, 0, 20, 1).max_residual >= 1e-2);
    }
}
