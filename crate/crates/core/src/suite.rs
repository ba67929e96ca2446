//! Named property sweeps over the whole crate, shared by the command-line
//! driver and the integration tests. Every sweep is seeded, so a report is
//! reproducible from its seed alone.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

use crate::connection::{
    center_momentum_map, curvature, curvature_cocycle, infinitesimal_generator, mechanical_connection,
    right_invariant_metric,
};
use crate::heisenberg::{coad_star, exp, tangent_right_translation, AlgebraElement, CoAlgebraElement, GroupElement};
use crate::magnetic::{
    magnetic_form, magnetic_form_matrix, momentum_shift, momentum_unshift, MagneticField, PhasePoint, ReductionChart,
};
use crate::numerics::{
    fd_directional, fd_exterior_derivative_1form, fd_jacobian, integrate_flow, midpoint_step, random_algebra,
    random_coalgebra, random_dvector, random_group, random_vector3, sweep_rng, uniform, Method, StepError, SweepRng,
    TANGENT_STEP,
};
use crate::poisson::{
    chart_form_matrix, check_jacobi, classify_orbit, evaluate_extended_orbit_form, magnetic_lie_poisson,
    orbit_generator, BracketSign, DualFunction, MagneticCocycle, OrbitKind, OrbitPoint, OrbitVector,
};
use crate::rch::{
    heisenberg_particle, heisenberg_particle_with_metric, integrate, magnetic_hamiltonian_field, modified_hamiltonian,
    rch_vector_field, shifted_system, ControlSubset, FiberMap, Hamiltonian, KineticMetric, RCHSystem,
};
use crate::reduction::{
    check_commutation, check_kk_curvature, check_mr1, check_mr2_equivariance, check_mr3_matching, check_reduced_form,
    check_reduced_mr3, kaluza_klein_system, kk_reduce_and_compare, noether_drift_rate, reduce_system, DiffeoSpec,
    ReductionError, KK_TOL,
};
use crate::report::{nan_max, CheckResult, MaxAbs, MaxResidual};

/// Checks run by `--all`, in report order.
pub const DEFAULT_CHECKS: &[&str] = &[
    "group_axioms",
    "representation",
    "bracket",
    "orbit",
    "connection",
    "dynamics",
    "momentum_shift",
    "noether",
    "reduction",
    "kaluza_klein",
    "mr",
];

/// Deliberately broken inputs; every record here is expected to fail.
pub const NEGATIVE_CHECKS: &[&str] = &[
    "negative_commutation",
    "negative_mr1_shear",
    "negative_mr2_level_mismatch",
    "negative_mr3_zero_control",
];

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

impl From<crate::rch::RchError> for SuiteError {
    fn from(e: crate::rch::RchError) -> Self {
        Self::Reduction(e.into())
    }
}

impl From<crate::magnetic::MagneticError> for SuiteError {
    fn from(e: crate::magnetic::MagneticError) -> Self {
        Self::Reduction(e.into())
    }
}

/// Seed and optional sample-count override for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub seed: u64,
    pub samples: Option<usize>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            samples: None,
        }
    }
}

impl CheckOptions {
    fn samples(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn rng(&self, stream: u64) -> SweepRng {
        sweep_rng(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(stream))
    }

    fn seed_for(&self, stream: u64) -> u64 {
        self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(stream)
    }
}

pub fn is_known_check(name: &str) -> bool {
    DEFAULT_CHECKS.contains(&name) || NEGATIVE_CHECKS.contains(&name)
}

/// Runs one named sweep and returns its records.
pub fn run_check(name: &str, opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    match name {
        "group_axioms" => Ok(group_axioms(opts)),
        "representation" => Ok(representation(opts)),
        "bracket" => Ok(bracket(opts)),
        "orbit" => Ok(orbit(opts)),
        "connection" => Ok(connection(opts)),
        "dynamics" => dynamics(opts),
        "momentum_shift" => momentum_shift_checks(opts),
        "noether" => noether(opts),
        "reduction" => reduction(opts),
        "kaluza_klein" => kaluza_klein(opts),
        "mr" => mr(opts),
        "negative_commutation" => negative_commutation(opts),
        "negative_mr1_shear" => Ok(vec![negative_mr1_shear(opts)]),
        "negative_mr2_level_mismatch" => negative_mr2_level_mismatch(opts),
        "negative_mr3_zero_control" => negative_mr3_zero_control(opts),
        other => Err(SuiteError::UnknownCheck(other.to_owned())),
    }
}

/// Runs [`DEFAULT_CHECKS`] in order.
pub fn run_default(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let mut out = Vec::new();
    for name in DEFAULT_CHECKS {
        out.extend(run_check(name, opts)?);
    }
    Ok(out)
}

/// Standard systems used by the sweeps.
pub mod fixtures {
    use super::*;

    /// Level `(μ, ν)` used by the reduction sweeps.
    pub const LEVEL: CoAlgebraElement = CoAlgebraElement::new(0.3, -0.2, 1.0);
    /// Strength of the left-invariant field.
    pub const FIELD_STRENGTH: f64 = 0.8;

    /// `b·(dq¹∧dq²)` as a constant matrix.
    pub fn constant_field(b: f64) -> MagneticField {
        MagneticField::area_block(b)
    }

    /// A position-dependent field with the quadratic potential
    /// `A = (−½β q₂q₃, ½β q₁q₃, ½γ q₁²)`.
    pub fn quadratic_potential_field(beta: f64, gamma: f64) -> MagneticField {
        let b = move |q: &Vector3<f64>| {
            let (b01, b02, b12) = (beta * q[2], gamma * q[0] + 0.5 * beta * q[1], -0.5 * beta * q[0]);
            Matrix3::new(0.0, b01, b02, -b01, 0.0, b12, -b02, -b12, 0.0)
        };
        let a = move |q: &Vector3<f64>| {
            Vector3::new(
                -0.5 * beta * q[1] * q[2],
                0.5 * beta * q[0] * q[2],
                0.5 * gamma * q[0] * q[0],
            )
        };
        MagneticField::custom(b, Some(Arc::new(a)))
    }

    /// Invariant particle: left-invariant metric and field.
    pub fn invariant_particle() -> RCHSystem {
        heisenberg_particle_with_metric(
            1.0,
            1.0,
            1.0,
            MagneticField::left_invariant(FIELD_STRENGTH),
            KineticMetric::LeftInvariant,
        )
        .expect("valid parameters")
    }

    /// The invariant particle with one internal oscillator and a fully
    /// actuated scaling control.
    pub fn controlled_particle() -> RCHSystem {
        let mut sys = invariant_particle();
        sys = RCHSystem::new(
            sys.field.clone(),
            sys.hamiltonian.sum(&Hamiltonian::v_oscillator(1.0)),
            1,
        )
        .with_params(sys.params)
        .expect("valid parameters");
        sys.with_control(FiberMap::scaling(0.2), ControlSubset::full(1))
            .expect("full subset contains every fiber point")
    }

    /// Linear potential used by the Kaluza–Klein comparison.
    pub fn kk_potential() -> MagneticField {
        MagneticField::linear_potential(Matrix3::new(0.0, -0.5, 0.0, 0.5, 0.0, 0.3, 0.2, 0.0, 0.0))
    }

    pub fn kk_initial_state() -> PhasePoint {
        PhasePoint::new(Vector3::new(0.1, -0.2, 0.3), Vector3::new(0.4, 0.1, -0.2))
    }

    /// Translation used by the equivalent-pair fixtures.
    pub fn translation() -> GroupElement {
        GroupElement::new(0.7, -0.4, 0.25)
    }

    /// `(sys1, sys2)` differing only in their force scalings, no control.
    pub fn zero_control_pair() -> (RCHSystem, RCHSystem) {
        let base = invariant_particle();
        let make = |s: f64| {
            base.clone()
                .with_force(FiberMap::scaling(s))
                .with_control(FiberMap::scaling(0.0), ControlSubset::zero(0))
                .expect("zero law lies in the zero subset")
        };
        (make(0.5), make(-0.3))
    }
}

fn random_quadratic(rng: &mut SweepRng, scale: f64) -> (Matrix3<f64>, Vector3<f64>, f64) {
    let q = Matrix3::from_fn(|_, _| uniform(rng, scale));
    let q = (q + q.transpose()) * 0.5;
    (q, random_vector3(rng, scale), uniform(rng, scale))
}

fn group_axioms(opts: &CheckOptions) -> Vec<CheckResult> {
    let n = opts.samples(1000);
    let mut rng = opts.rng(1);
    let [mut assoc, mut inv, mut id, mut hom] = [MaxResidual::default(); 4];
    let diff = |a: GroupElement, b: GroupElement| (a.to_vector() - b.to_vector()).max_abs();
    for _ in 0..n {
        let (g, h, k) = (
            random_group(&mut rng, 2.0),
            random_group(&mut rng, 2.0),
            random_group(&mut rng, 2.0),
        );
        assoc.push(diff(g.multiply(h).multiply(k), g.multiply(h.multiply(k))));
        inv.push(nan_max(
            diff(g.multiply(g.inverse()), GroupElement::IDENTITY),
            diff(g.inverse().multiply(g), GroupElement::IDENTITY),
        ));
        id.push(nan_max(
            diff(g.multiply(GroupElement::IDENTITY), g),
            diff(GroupElement::IDENTITY.multiply(g), g),
        ));
        hom.push((g.multiply(h).to_matrix() - g.to_matrix() * h.to_matrix()).max_abs());
    }
    vec![
        assoc.finish("group.associativity", 1e-12),
        inv.finish("group.inverse", 1e-12),
        id.finish("group.identity", 1e-12),
        hom.finish("group.matrix_homomorphism", 1e-12),
    ]
}

fn representation(opts: &CheckOptions) -> Vec<CheckResult> {
    let n = opts.samples(1000);
    let mut rng = opts.rng(2);
    let (mut ad, mut coad, mut pairing) = (MaxResidual::default(), MaxResidual::default(), MaxResidual::default());
    let origin = DVector::from_element(1, 0.0);
    let unit = DVector::from_element(1, 1.0);
    for _ in 0..n {
        let g = random_group(&mut rng, 2.0);
        let xi = random_algebra(&mut rng, 2.0);
        let p = random_coalgebra(&mut rng, 2.0);
        let conj =
            |t: &DVector<f64>| DVector::from_column_slice(g.conjugate(exp(xi.scale(t[0]))).to_vector().as_slice());
        let fd_ad = fd_directional(conj, &origin, &unit, TANGENT_STEP);
        ad.push((fd_ad - DVector::from_column_slice(g.adjoint(xi).to_vector().as_slice())).max_abs());
        let orbit =
            |t: &DVector<f64>| DVector::from_column_slice(exp(xi.scale(-t[0])).coadjoint(p).to_vector().as_slice());
        let fd_coad = fd_directional(orbit, &origin, &unit, TANGENT_STEP);
        coad.push((fd_coad - DVector::from_column_slice(coad_star(xi, p).to_vector().as_slice())).max_abs());
        pairing.push((g.coadjoint(p).pair(xi) - p.pair(g.inverse().adjoint(xi))).abs());
    }
    vec![
        ad.finish("representation.adjoint_fd", 1e-8),
        coad.finish("representation.coad_star_fd", 1e-8),
        pairing.finish("representation.pairing", 1e-12),
    ]
}

fn bracket(opts: &CheckOptions) -> Vec<CheckResult> {
    let n = opts.samples(200);
    let mut rng = opts.rng(3);
    let mut records = [MaxResidual::default(); 4];
    for i in 0..n {
        let sign = if i % 2 == 0 {
            BracketSign::Minus
        } else {
            BracketSign::Plus
        };
        let cocycle = MagneticCocycle::new({
            let v = random_vector3(&mut rng, 1.0);
            Matrix3::new(0.0, v[0], v[1], -v[0], 0.0, v[2], -v[1], -v[2], 0.0)
        })
        .expect("antisymmetric by construction");
        let (qf, bf, cf) = random_quadratic(&mut rng, 0.5);
        let (qg, bg, cg) = random_quadratic(&mut rng, 0.5);
        let (qh, bh, ch) = random_quadratic(&mut rng, 0.5);
        let f = DualFunction::quadratic(qf, bf, cf);
        let g = DualFunction::quadratic(qg, bg, cg);
        let h = DualFunction::quadratic(qh, bh, ch);
        let p = random_coalgebra(&mut rng, 1.0);
        let br = |a: &DualFunction, b: &DualFunction| magnetic_lie_poisson(a, b, &p, &cocycle, sign);
        records[0].push((br(&f, &g) + br(&g, &f)).abs());
        // Product differentiated by central differences, independent of the
        // analytic derivative rules.
        let fg = {
            let (f, g) = (f.clone(), g.clone());
            DualFunction::new(move |p| f.evaluate(p) * g.evaluate(p))
        };
        let leibniz = br(&fg, &h) - f.evaluate(&p) * br(&g, &h) - g.evaluate(&p) * br(&f, &h);
        records[1].push(leibniz.abs());
        records[2].push(check_jacobi([&f, &g, &h], &p, &cocycle, sign).residual);
        let v = p.to_vector();
        let (df, dg) = (qf * v + bf, qg * v + bg);
        let oracle = sign.factor() * p.nu * (df[0] * dg[1] - df[1] * dg[0]);
        records[3].push((magnetic_lie_poisson(&f, &g, &p, &MagneticCocycle::zero(), sign) - oracle).abs());
    }
    vec![
        records[0].finish("bracket.antisymmetry", 1e-12),
        records[1].finish("bracket.leibniz", 1e-8),
        records[2].finish("bracket.jacobi", 1e-9),
        records[3].finish("bracket.lie_poisson_oracle", 1e-10),
    ]
}

fn orbit(opts: &CheckOptions) -> Vec<CheckResult> {
    let n = opts.samples(1000);
    let mut rng = opts.rng(4);
    let (mut form, mut det, mut point) = (MaxResidual::default(), MaxResidual::default(), MaxResidual::default());
    for i in 0..n {
        let sign = if i % 2 == 0 {
            BracketSign::Minus
        } else {
            BracketSign::Plus
        };
        let nu = {
            let s = uniform(&mut rng, 1.0);
            s.signum() * (0.5 + 1.5 * s.abs())
        };
        let cocycle = MagneticCocycle::area_block(uniform(&mut rng, 0.3));
        let p = CoAlgebraElement::new(uniform(&mut rng, 2.0), uniform(&mut rng, 2.0), nu);
        let (xi, eta) = (random_algebra(&mut rng, 1.0), random_algebra(&mut rng, 1.0));
        let o = OrbitPoint::from_coalgebra(p);
        let tangent = |z: AlgebraElement| OrbitVector {
            d_rho: orbit_generator(z, &p, &cocycle, sign),
            ..OrbitVector::zeros(0)
        };
        let value = evaluate_extended_orbit_form(&o, &tangent(xi), &tangent(eta), &cocycle, sign).unwrap_or(f64::NAN);
        let restricted = magnetic_lie_poisson(
            &DualFunction::linear(xi),
            &DualFunction::linear(eta),
            &p,
            &cocycle,
            sign,
        );
        form.push((value - restricted).abs());
        let k2 = chart_form_matrix(nu, &MagneticCocycle::zero(), sign);
        det.push((k2.determinant() - nu * nu).abs());
        let fixed = CoAlgebraElement::new(uniform(&mut rng, 2.0), uniform(&mut rng, 2.0), 0.0);
        let g = random_group(&mut rng, 3.0);
        let moved = g.coadjoint(fixed);
        let misclassified = classify_orbit(&fixed).kind() != OrbitKind::Point;
        point.push(if misclassified {
            f64::INFINITY
        } else {
            (moved.to_vector() - fixed.to_vector()).max_abs()
        });
    }
    vec![
        form.finish("orbit.form_vs_bracket", 1e-10),
        det.finish("orbit.chart_determinant", 1e-10),
        point.finish("orbit.point_classification", 0.0),
    ]
}

fn connection(opts: &CheckOptions) -> Vec<CheckResult> {
    let n = opts.samples(1000);
    let mut rng = opts.rng(5);
    let mut records = [MaxResidual::default(); 4];
    let alpha = |x: &DVector<f64>, v: &DVector<f64>| {
        mechanical_connection(
            GroupElement::new(x[0], x[1], x[2]),
            AlgebraElement::new(v[0], v[1], v[2]),
        )
    };
    let as_dvec = |a: AlgebraElement| DVector::from_column_slice(a.to_vector().as_slice());
    for _ in 0..n {
        let g = random_group(&mut rng, 2.0);
        let (v, w) = (random_algebra(&mut rng, 1.0), random_algebra(&mut rng, 1.0));
        let b = uniform(&mut rng, 2.0);
        let tv = tangent_right_translation(g, v, g.inverse()).to_vector();
        let tw = tangent_right_translation(g, w, g.inverse()).to_vector();
        records[0].push((right_invariant_metric(g, v, w) - tv.dot(&tw)).abs());
        let generator = infinitesimal_generator(g, b);
        records[1].push((center_momentum_map(g, v, b) - right_invariant_metric(g, v, generator)).abs());
        let x = DVector::from_column_slice(g.to_vector().as_slice());
        let d = fd_exterior_derivative_1form(alpha, &x, &as_dvec(v), &as_dvec(w), TANGENT_STEP);
        records[2].push((d - curvature(g, v, w)).abs());
        let nu = uniform(&mut rng, 3.0);
        let field = MagneticField::left_invariant(nu).cocycle_at_identity();
        let residual = (curvature_cocycle(nu).matrix() - field.matrix()).max_abs();
        records[3].push(residual);
    }
    vec![
        records[0].finish("connection.right_invariance", 1e-12),
        records[1].finish("connection.metric_pairing", 1e-12),
        records[2].finish("connection.curvature_fd", 1e-6),
        records[3].finish("connection.nu_component_cocycle", 0.0),
    ]
}

fn dynamics(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let n = opts.samples(1000);
    let mut rng = opts.rng(6);
    // i_{X_H} ω_B = dH on a position-dependent field; H is quadratic, so
    // the central difference of H is exact up to rounding.
    let field = fixtures::quadratic_potential_field(0.7, 0.4).with_charge_factor(1.3);
    let h = Hamiltonian::kinetic(1.5, KineticMetric::Euclidean);
    let mut contraction = MaxResidual::default();
    for _ in 0..n {
        let x = PhasePoint::new(random_vector3(&mut rng, 2.0), random_vector3(&mut rng, 2.0));
        let w = random_dvector(&mut rng, 6, 1.0);
        let xh = magnetic_hamiltonian_field(&h, &field, &x);
        let dh = fd_directional(
            |y| DVector::from_element(1, h.evaluate(&PhasePoint::from_flat(y))),
            &x.to_flat(),
            &w,
            1e-4,
        )[0];
        contraction.push((magnetic_form(&x, &xh, &w, &field) - dh).abs());
    }

    // Cyclotron motion: p rotates with frequency c·b/m in the (p1, p2) plane.
    let (m, b, cf) = (1.0, 1.0, 1.0);
    let particle = heisenberg_particle(m, cf, 1.0, fixtures::constant_field(b))?;
    let period = 2.0 * std::f64::consts::PI * m / (cf * b).abs();
    let x0 = PhasePoint::new(Vector3::new(0.1, 0.2, 0.0), Vector3::new(0.6, -0.3, 0.2));
    let traj = integrate(&particle, &x0, period, 1e-3, Method::Midpoint)?;
    let period_residual = (traj.last().p - x0.p).max_abs();

    // Energy on a long midpoint run.
    let long = integrate(&particle, &x0, 10.0, 1e-3, Method::Midpoint)?;

    // One-step Jacobian of the midpoint map for a non-quadratic H.
    let sym_sys = heisenberg_particle_with_metric(
        1.0,
        1.0,
        1.0,
        MagneticField::left_invariant(0.8),
        KineticMetric::LeftInvariant,
    )?;
    let omega = magnetic_form_matrix(&Vector3::zeros(), &sym_sys.field, 0);
    let mut symplecticity = MaxResidual::default();
    for _ in 0..opts.samples(20).min(50) {
        let x = PhasePoint::new(random_vector3(&mut rng, 1.0), random_vector3(&mut rng, 1.0));
        let f = |y: &DVector<f64>| -> Result<DVector<f64>, StepError> {
            Ok(rch_vector_field(&sym_sys, &PhasePoint::from_flat(y)))
        };
        let step = |y: &DVector<f64>| midpoint_step(&f, y, 1e-2).unwrap_or_else(|_| DVector::from_element(6, f64::NAN));
        let jac: DMatrix<f64> = fd_jacobian(step, &x.to_flat(), TANGENT_STEP);
        symplecticity.push((jac.transpose() * &omega * &jac - &omega).max_abs());
    }
    Ok(vec![
        contraction.finish("dynamics.hamiltonian_field", 1e-9),
        CheckResult::new("dynamics.cyclotron_period", 1, period_residual, 1e-5),
        CheckResult::new("dynamics.energy_drift", long.len(), long.relative_energy_drift(), 1e-8),
        symplecticity.finish("dynamics.flow_symplecticity", 1e-6),
    ])
}

fn momentum_shift_checks(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let n = opts.samples(200);
    let mut rng = opts.rng(7);
    let field = fixtures::quadratic_potential_field(0.6, 0.5);
    let sys = heisenberg_particle(1.2, 1.0, 0.8, field)?;
    let field = sys.field.clone();
    let (mut hamiltonian, mut pullback) = (MaxResidual::default(), MaxResidual::default());
    for _ in 0..n {
        let x = PhasePoint::new(random_vector3(&mut rng, 2.0), random_vector3(&mut rng, 2.0));
        let shifted = momentum_shift(&x, &field)?;
        hamiltonian.push((modified_hamiltonian(&sys, &shifted)? - sys.hamiltonian.evaluate(&x)).abs());
        let (v, w) = (random_dvector(&mut rng, 6, 1.0), random_dvector(&mut rng, 6, 1.0));
        let shift = |y: &DVector<f64>| {
            momentum_shift(&PhasePoint::from_flat(y), &field)
                .map(|z| z.to_flat())
                .unwrap_or_else(|_| DVector::from_element(6, f64::NAN))
        };
        let tv = fd_directional(shift, &x.to_flat(), &v, TANGENT_STEP);
        let tw = fd_directional(shift, &x.to_flat(), &w, TANGENT_STEP);
        let canonical = magnetic_form(&shifted, &tv, &tw, &MagneticField::zero());
        pullback.push((canonical - magnetic_form(&x, &v, &w, &field)).abs());
    }

    // Flow of (ω_B, H) against t_A⁻¹ of the flow of (ω₀, H_A), both RK4.
    let x0 = PhasePoint::new(Vector3::new(0.2, -0.1, 0.3), Vector3::new(0.5, 0.2, -0.4));
    let (t_end, h) = (1.0, 1e-4);
    let direct =
        |y: &DVector<f64>| -> Result<DVector<f64>, StepError> { Ok(rch_vector_field(&sys, &PhasePoint::from_flat(y))) };
    let (_, states) =
        integrate_flow(&direct, &x0.to_flat(), t_end, h, Method::Rk4).map_err(crate::rch::RchError::from)?;
    let canonical = shifted_system(&sys)?;
    let conj = integrate(&canonical, &momentum_shift(&x0, &field)?, t_end, h, Method::Rk4)?;
    let mut flows = MaxResidual::default();
    for (a, z) in states.iter().zip(&conj.states) {
        let back = momentum_unshift(z, &field)?;
        flows.push((a - back.to_flat()).max_abs());
    }
    Ok(vec![
        hamiltonian.finish("shift.modified_hamiltonian", 1e-12),
        pullback.finish("shift.pullback", 1e-6),
        flows.finish("shift.conjugated_flows", 1e-8),
    ])
}

fn noether(_opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let sys = fixtures::invariant_particle();
    let x0 = PhasePoint::new(Vector3::new(0.3, -0.5, 0.2), Vector3::new(0.7, 0.4, -0.6));
    let traj = integrate(&sys, &x0, 2.0, 1e-3, Method::Midpoint)?;
    let rate = noether_drift_rate(&traj).unwrap_or(f64::NAN);
    Ok(vec![CheckResult::new(
        "noether.momentum_drift_rate",
        traj.len(),
        rate,
        1e-8,
    )])
}

fn reduction(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let n = opts.samples(100);
    let sys = fixtures::invariant_particle();
    let red = reduce_system(&sys, fixtures::LEVEL)?;
    let mut out = Vec::new();
    let mut form = check_reduced_form(
        &sys.field,
        fixtures::LEVEL,
        ReductionChart::Shifted,
        1,
        n,
        opts.seed_for(8),
    )?;
    form.name = "reduction.reduced_form".into();
    out.push(form);
    let mut comm = check_commutation(&sys, &red, n, opts.seed_for(9))?;
    comm.name = "reduction.commutation".into();
    out.push(comm);
    let controlled = fixtures::controlled_particle();
    let red_c = reduce_system(&controlled, fixtures::LEVEL)?;
    let mut comm_c = check_commutation(&controlled, &red_c, n, opts.seed_for(10))?;
    comm_c.name = "reduction.commutation_controlled".into();
    out.push(comm_c);
    Ok(out)
}

fn kaluza_klein(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let kk = kaluza_klein_system(fixtures::kk_potential(), 1.0, 1.0)?;
    let cmp = kk_reduce_and_compare(&kk, &fixtures::kk_initial_state(), 1.0, 1e-4)?;
    let mut curv = check_kk_curvature(&kk, opts.samples(100), opts.seed_for(11));
    curv.name = "kk.curvature".into();
    Ok(vec![
        CheckResult::new("kk.lambda_conservation", cmp.steps, cmp.lambda_drift, 1e-8),
        curv,
        CheckResult::new("kk.trajectory", cmp.steps, cmp.max_discrepancy, KK_TOL),
    ])
}

/// MR records for the identity setup followed by the translated pair.
fn mr(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let n = opts.samples(100);
    let mut out = Vec::new();
    let sys = fixtures::invariant_particle()
        .with_force(FiberMap::scaling(0.5))
        .with_control(FiberMap::scaling(0.2), ControlSubset::full(0))?;
    let field = sys.field.clone();
    let id = DiffeoSpec::identity();
    let rename = |mut r: CheckResult, name: &str| {
        r.name = name.into();
        r
    };
    out.push(rename(
        check_mr1(&id, &field, &field, 0, n, opts.seed_for(12)),
        "mr.identity.mr1",
    ));
    out.push(rename(
        check_mr2_equivariance(
            &id,
            &field,
            &field,
            fixtures::LEVEL,
            fixtures::LEVEL,
            0,
            n,
            opts.seed_for(13),
        )?,
        "mr.identity.mr2",
    ));
    let report = check_mr3_matching(&sys, &sys, &id, n, opts.seed_for(14))?;
    out.push(rename(report.horizontal, "mr.identity.mr3_horizontal"));
    out.push(rename(report.vertical, "mr.identity.mr3_vertical"));

    let h = fixtures::translation();
    let phi = DiffeoSpec::translation(h);
    let level1 = h.inverse().coadjoint(fixtures::LEVEL);
    out.push(rename(
        check_mr1(&phi, &field, &field, 0, n, opts.seed_for(15)),
        "mr.translation.mr1",
    ));
    out.push(rename(
        check_mr2_equivariance(&phi, &field, &field, level1, fixtures::LEVEL, 0, n, opts.seed_for(16))?,
        "mr.translation.mr2",
    ));
    let report = check_mr3_matching(&sys, &sys, &phi, n, opts.seed_for(17))?;
    out.push(rename(report.horizontal, "mr.translation.mr3_horizontal"));
    out.push(rename(report.vertical, "mr.translation.mr3_vertical"));

    let controlled = fixtures::controlled_particle();
    let red1 = reduce_system(&controlled, level1)?;
    let red2 = reduce_system(&controlled, fixtures::LEVEL)?;
    out.push(rename(
        check_reduced_mr3(&red1, &red2, &phi, n, opts.seed_for(18))?,
        "mr.translation.reduced_mr3",
    ));
    Ok(out)
}

fn negative_commutation(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let sys = fixtures::invariant_particle();
    let red = reduce_system(&sys, fixtures::LEVEL)?;
    let broken = red.clone().with_hamiltonian(red.hamiltonian.scaled(2.0));
    let mut r = check_commutation(&sys, &broken, opts.samples(100), opts.seed_for(9))?;
    r.name = "negative.commutation_scaled_hamiltonian".into();
    Ok(vec![r])
}

fn negative_mr1_shear(opts: &CheckOptions) -> CheckResult {
    let field = MagneticField::left_invariant(fixtures::FIELD_STRENGTH);
    let mut r = check_mr1(
        &DiffeoSpec::shear(0.5),
        &field,
        &field,
        0,
        opts.samples(100),
        opts.seed_for(19),
    );
    r.name = "negative.mr1_shear".into();
    r
}

fn negative_mr2_level_mismatch(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let field = MagneticField::left_invariant(fixtures::FIELD_STRENGTH);
    let mut level1 = fixtures::LEVEL;
    level1.mu.x1 += 0.1;
    let mut r = check_mr2_equivariance(
        &DiffeoSpec::identity(),
        &field,
        &field,
        level1,
        fixtures::LEVEL,
        0,
        opts.samples(100),
        opts.seed_for(20),
    )?;
    r.name = "negative.mr2_level_mismatch".into();
    Ok(vec![r])
}

fn negative_mr3_zero_control(opts: &CheckOptions) -> Result<Vec<CheckResult>, SuiteError> {
    let (sys1, sys2) = fixtures::zero_control_pair();
    let report = check_mr3_matching(
        &sys1,
        &sys2,
        &DiffeoSpec::identity(),
        opts.samples(100),
        opts.seed_for(21),
    )?;
    let mut r = report.vertical;
    r.name = "negative.mr3_zero_control".into();
    Ok(vec![r])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_potential_field_is_consistent() {
        let r = fixtures::quadratic_potential_field(0.7, 0.4).consistency_residuals(1, 50);
        assert!(r.antisymmetry == 0.0 && r.closedness < 1e-6);
        assert!(r.potential.unwrap() < 1e-6);
    }

    #[test]
    fn unknown_check_is_an_error() {
        assert!(matches!(
            run_check("no_such_check", &CheckOptions::default()),
            Err(SuiteError::UnknownCheck(_))
        ));
        assert!(is_known_check("mr") && is_known_check("negative_mr1_shear"));
    }

    #[test]
    fn cheap_sweeps_pass() {
        let opts = CheckOptions {
            seed: 7,
            samples: Some(50),
        };
        for name in ["group_axioms", "representation", "bracket", "orbit", "connection"] {
            for r in run_check(name, &opts).unwrap() {
                assert!(r.passed, "{}: {:e}", r.name, r.max_residual);
            }
        }
    }
}
