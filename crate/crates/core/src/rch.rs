//! Regular controlled Hamiltonian systems on the magnetic cotangent bundle:
//! Hamiltonian vector fields, vertical lifts of force and control maps, the
//! combined dynamical vector field, and fixed-step integration.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heisenberg::{CoAlgebraElement, GroupElement};
use crate::magnetic::{
    momentum_map_phase, momentum_shift, momentum_shift_tangent, momentum_unshift, random_phase_point, MagneticError,
    MagneticField, PhasePoint,
};
use crate::numerics::{
    fd_directional, fd_gradient, integrate_flow, sweep_rng, FlowError, Method, StepError, GRADIENT_STEP,
};

/// Tolerance for control images lying in the control subset.
pub const CONTROL_SUBSET_TOL: f64 = 1e-10;
/// Singular-value cutoff for the control span rank check.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RchError {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("control span has rank {rank} but {columns} columns")]
    RankDeficient { rank: usize, columns: usize },
    #[error("control image leaves the control subset (residual {residual:e})")]
    ControlOutsideSubset { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Magnetic(#[from] MagneticError),
    #[error("integration failed at {0}")]
    Flow(#[from] FlowError),
}

type ScalarFn = Arc<dyn Fn(&PhasePoint) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&PhasePoint) -> DVector<f64> + Send + Sync>;

/// A Hamiltonian on `T*Q` with an optional analytic gradient in the flat
/// layout `[∂q, ∂p, ∂θ, ∂λ]`.
#[derive(Clone)]
pub struct Hamiltonian {
    value: ScalarFn,
    gradient: Option<GradientFn>,
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("gradient_is_analytic", &self.gradient_is_analytic())
            .finish()
    }
}

/// Kinetic metric used by the particle Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KineticMetric {
    /// `|p|²/2m` in the global chart; `∂H/∂q = 0`.
    #[default]
    Euclidean,
    /// `|L(q)ᵀ p|²/2m`, invariant under left translations.
    LeftInvariant,
}

impl Hamiltonian {
    pub fn new(value: impl Fn(&PhasePoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&PhasePoint) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0).with_gradient(|x| DVector::zeros(x.dim()))
    }

    pub fn kinetic(m: f64, metric: KineticMetric) -> Self {
        match metric {
            KineticMetric::Euclidean => Self::new(move |x| x.p.norm_squared() / (2.0 * m)).with_gradient(move |x| {
                let mut g = DVector::zeros(x.dim());
                g.fixed_rows_mut::<3>(3).copy_from(&(x.p / m));
                g
            }),
            KineticMetric::LeftInvariant => {
                let rho = |x: &PhasePoint| x.group().body_frame().transpose() * x.p;
                Self::new(move |x| rho(x).norm_squared() / (2.0 * m)).with_gradient(move |x| {
                    let r = rho(x);
                    let p3 = x.p[2];
                    let mut g = DVector::zeros(x.dim());
                    g[0] = 0.5 * p3 * r[1] / m;
                    g[1] = -0.5 * p3 * r[0] / m;
                    g.fixed_rows_mut::<3>(3).copy_from(&(x.group().body_frame() * r / m));
                    g
                })
            }
        }
    }

    /// `½|λ|² + ½ s |θ|²` on `V × V*`.
    pub fn v_oscillator(stiffness: f64) -> Self {
        Self::new(move |x| 0.5 * x.lambda.norm_squared() + 0.5 * stiffness * x.theta.norm_squared()).with_gradient(
            move |x| {
                let k = x.k();
                let mut g = DVector::zeros(x.dim());
                g.rows_mut(6, k).copy_from(&(&x.theta * stiffness));
                g.rows_mut(6 + k, k).copy_from(&x.lambda);
                g
            },
        )
    }

    pub fn sum(&self, other: &Hamiltonian) -> Hamiltonian {
        let (a, b) = (self.clone(), other.clone());
        let mut out = {
            let (a, b) = (a.clone(), b.clone());
            Hamiltonian::new(move |x| a.evaluate(x) + b.evaluate(x))
        };
        if a.gradient_is_analytic() && b.gradient_is_analytic() {
            out = out.with_gradient(move |x| a.gradient(x) + b.gradient(x));
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Hamiltonian {
        let a = self.clone();
        let mut out = {
            let a = a.clone();
            Hamiltonian::new(move |x| s * a.evaluate(x))
        };
        if a.gradient_is_analytic() {
            out = out.with_gradient(move |x| a.gradient(x) * s);
        }
        out
    }

    pub fn evaluate(&self, x: &PhasePoint) -> f64 {
        (self.value)(x)
    }

    pub fn gradient_is_analytic(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &PhasePoint) -> DVector<f64> {
        match &self.gradient {
            Some(g) => g(x),
            None => fd_gradient(
                |y| self.evaluate(&PhasePoint::from_flat(y)),
                &x.to_flat(),
                GRADIENT_STEP,
            ),
        }
    }

    /// `H ∘ t_A⁻¹`, the Hamiltonian in the canonical chart.
    pub fn modified(&self, field: &MagneticField) -> Hamiltonian {
        let (h, f) = (self.clone(), field.clone());
        let mut out = {
            let (h, f) = (h.clone(), f.clone());
            Hamiltonian::new(move |x| match momentum_unshift(x, &f) {
                Ok(y) => h.evaluate(&y),
                Err(_) => f64::NAN,
            })
        };
        if h.gradient_is_analytic() {
            out = out.with_gradient(move |x| {
                let (Ok(y), Ok(jac)) = (momentum_unshift(x, &f), f.potential_jacobian(&x.q)) else {
                    return DVector::from_element(x.dim(), f64::NAN);
                };
                let mut g = h.gradient(&y);
                let dp = g.fixed_rows::<3>(3).into_owned();
                let dq = g.fixed_rows::<3>(0).into_owned() - jac.transpose() * dp * f.charge_factor();
                g.fixed_rows_mut::<3>(0).copy_from(&dq);
                g
            });
        }
        out
    }
}

type FiberFn = Arc<dyn Fn(&PhasePoint) -> (Vector3<f64>, DVector<f64>) + Send + Sync>;
type TangentFn = Arc<dyn Fn(&PhasePoint, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A fiber-preserving map of `T*Q`. The closure returns only the new fiber
/// coordinates `(p, λ)`, so `(q, θ)` is preserved by construction.
#[derive(Clone)]
pub struct FiberMap {
    map: FiberFn,
    tangent: Option<TangentFn>,
}

impl fmt::Debug for FiberMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiberMap")
            .field("tangent_is_analytic", &self.tangent.is_some())
            .finish()
    }
}

impl FiberMap {
    pub fn new(map: impl Fn(&PhasePoint) -> (Vector3<f64>, DVector<f64>) + Send + Sync + 'static) -> Self {
        Self {
            map: Arc::new(map),
            tangent: None,
        }
    }

    pub fn with_tangent(
        mut self,
        tangent: impl Fn(&PhasePoint, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.tangent = Some(Arc::new(tangent));
        self
    }

    pub fn identity() -> Self {
        Self::new(|x| (x.p, x.lambda.clone())).with_tangent(|_, v| v.clone())
    }

    /// `(p, λ) ↦ (P p, Λ λ)`.
    pub fn linear(p_map: Matrix3<f64>, lambda_map: DMatrix<f64>) -> Self {
        let lm = lambda_map.clone();
        Self::new(move |x| (p_map * x.p, &lm * &x.lambda)).with_tangent(move |x, v| {
            let k = x.k();
            let mut out = v.clone();
            let dp = p_map * v.fixed_rows::<3>(3);
            out.fixed_rows_mut::<3>(3).copy_from(&dp);
            let dl = &lambda_map * v.rows(6 + k, k);
            out.rows_mut(6 + k, k).copy_from(&dl);
            out
        })
    }

    /// `(p, λ) ↦ (s p, s λ)`.
    pub fn scaling(s: f64) -> Self {
        Self::new(move |x| (x.p * s, &x.lambda * s)).with_tangent(move |_, v| {
            let mut out = v.clone();
            let n = v.len();
            let k = (n - 6) / 2;
            for i in (3..6).chain(6 + k..n) {
                out[i] *= s;
            }
            out
        })
    }

    pub fn apply(&self, x: &PhasePoint) -> PhasePoint {
        let (p, lambda) = (self.map)(x);
        PhasePoint {
            q: x.q,
            p,
            theta: x.theta.clone(),
            lambda,
        }
    }

    /// The fiber block `[p, λ]` of the image.
    pub fn fiber_image(&self, x: &PhasePoint) -> DVector<f64> {
        fiber_part(&self.apply(x).to_flat(), x.k())
    }

    /// `T_x F · v`, by central differences unless an analytic tangent is set.
    pub fn tangent(&self, x: &PhasePoint, v: &DVector<f64>) -> DVector<f64> {
        match &self.tangent {
            Some(t) => t(x, v),
            None => fd_directional(
                |y| self.apply(&PhasePoint::from_flat(y)).to_flat(),
                &x.to_flat(),
                v,
                GRADIENT_STEP,
            ),
        }
    }
}

/// Indices of the fiber coordinates `(p, λ)` in the flat layout.
pub fn fiber_indices(k: usize) -> Vec<usize> {
    (3..6).chain(6 + k..6 + 2 * k).collect()
}

pub fn fiber_part(v: &DVector<f64>, k: usize) -> DVector<f64> {
    DVector::from_iterator(3 + k, fiber_indices(k).into_iter().map(|i| v[i]))
}

/// The vertical vector with fiber block `f`.
pub fn vertical_from_fiber(f: &DVector<f64>, k: usize) -> DVector<f64> {
    let mut out = DVector::zeros(6 + 2 * k);
    for (j, i) in fiber_indices(k).into_iter().enumerate() {
        out[i] = f[j];
    }
    out
}

/// An affine subset of each fiber `{offset + span · c}`, fiber coordinates
/// ordered `[p(3), λ(k)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSubset {
    offset: DVector<f64>,
    span: DMatrix<f64>,
}

impl ControlSubset {
    pub fn new(offset: DVector<f64>, span: DMatrix<f64>) -> Result<Self, RchError> {
        if span.nrows() != offset.len() {
            return Err(RchError::DimensionMismatch {
                expected: offset.len(),
                actual: span.nrows(),
            });
        }
        let columns = span.ncols();
        if columns > 0 {
            let rank = span.clone().svd(false, false).rank(RANK_TOL);
            if rank < columns {
                return Err(RchError::RankDeficient { rank, columns });
            }
        }
        Ok(Self { offset, span })
    }

    /// The whole fiber.
    pub fn full(k: usize) -> Self {
        Self::new(DVector::zeros(3 + k), DMatrix::identity(3 + k, 3 + k)).expect("identity has full rank")
    }

    /// The zero section only.
    pub fn zero(k: usize) -> Self {
        Self::new(DVector::zeros(3 + k), DMatrix::zeros(3 + k, 0)).expect("empty span")
    }

    pub fn fiber_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn rank(&self) -> usize {
        self.span.ncols()
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn span(&self) -> &DMatrix<f64> {
        &self.span
    }

    /// Least-squares decomposition of a fiber vector `v = span·c + r` with
    /// `r ⟂ span`. Returns `r`.
    pub fn orthogonal_residual(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.span.ncols() == 0 {
            return v.clone();
        }
        let svd = self.span.clone().svd(true, true);
        let c = svd.solve(v, RANK_TOL).expect("both factors requested");
        v - &self.span * c
    }

    /// Distance from a fiber point to the affine subset.
    pub fn distance(&self, fiber_point: &DVector<f64>) -> f64 {
        self.orthogonal_residual(&(fiber_point - &self.offset)).norm()
    }
}

/// A control law together with the subset it must take values in.
#[derive(Debug, Clone)]
pub struct Control {
    pub law: FiberMap,
    pub subset: ControlSubset,
}

/// Physical constants of a charged particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleParams {
    pub mass: f64,
    pub charge: f64,
    pub light_speed: f64,
}

impl Default for ParticleParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            charge: 1.0,
            light_speed: 1.0,
        }
    }
}

impl ParticleParams {
    pub fn validate(&self) -> Result<(), RchError> {
        for (name, value) in [("mass", self.mass), ("light_speed", self.light_speed)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(RchError::InvalidParameter { name, value });
            }
        }
        if !self.charge.is_finite() {
            return Err(RchError::InvalidParameter {
                name: "charge",
                value: self.charge,
            });
        }
        Ok(())
    }

    pub fn charge_factor(&self) -> f64 {
        self.charge / self.light_speed
    }
}

/// `(T*Q, ω_B, H, F, C)` with an optional control law.
#[derive(Debug, Clone)]
pub struct RCHSystem {
    pub field: MagneticField,
    pub hamiltonian: Hamiltonian,
    pub force: Option<FiberMap>,
    pub control: Option<Control>,
    pub params: ParticleParams,
    k: usize,
}

/// Number of random states used to validate a control law at construction.
const CONTROL_CHECK_SAMPLES: usize = 16;

impl RCHSystem {
    pub fn new(field: MagneticField, hamiltonian: Hamiltonian, k: usize) -> Self {
        Self {
            field,
            hamiltonian,
            force: None,
            control: None,
            params: ParticleParams::default(),
            k,
        }
    }

    pub fn with_params(mut self, params: ParticleParams) -> Result<Self, RchError> {
        params.validate()?;
        self.params = params;
        Ok(self)
    }

    pub fn with_force(mut self, force: FiberMap) -> Self {
        self.force = Some(force);
        self
    }

    /// Attaches a control law, checking that its images lie in the subset
    /// within [`CONTROL_SUBSET_TOL`] at seeded random states.
    pub fn with_control(mut self, law: FiberMap, subset: ControlSubset) -> Result<Self, RchError> {
        if subset.fiber_dim() != 3 + self.k {
            return Err(RchError::DimensionMismatch {
                expected: 3 + self.k,
                actual: subset.fiber_dim(),
            });
        }
        let mut rng = sweep_rng(0xc0417);
        for _ in 0..CONTROL_CHECK_SAMPLES {
            let x = random_phase_point(&mut rng, self.k, 2.0);
            let residual = subset.distance(&law.fiber_image(&x));
            if residual > CONTROL_SUBSET_TOL {
                return Err(RchError::ControlOutsideSubset { residual });
            }
        }
        self.control = Some(Control { law, subset });
        Ok(self)
    }

    pub fn without_force(mut self) -> Self {
        self.force = None;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn control_subset(&self) -> Option<&ControlSubset> {
        self.control.as_ref().map(|c| &c.subset)
    }

    fn check_dim(&self, x: &PhasePoint) -> Result<(), RchError> {
        if x.k() != self.k {
            return Err(RchError::DimensionMismatch {
                expected: self.k,
                actual: x.k(),
            });
        }
        Ok(())
    }
}

/// Solves `i_X ω_B = dH`:
/// `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q + c 𝔅(q) ∂H/∂p`, `θ̇ = ∂H/∂λ`, `λ̇ = −∂H/∂θ`.
pub fn magnetic_hamiltonian_field(h: &Hamiltonian, field: &MagneticField, x: &PhasePoint) -> DVector<f64> {
    let k = x.k();
    let grad = h.gradient(x);
    let dq = grad.fixed_rows::<3>(0).into_owned();
    let dp = grad.fixed_rows::<3>(3).into_owned();
    let mut out = DVector::zeros(6 + 2 * k);
    out.fixed_rows_mut::<3>(0).copy_from(&dp);
    let pdot = -dq + field.b_matrix(&x.q) * dp * field.charge_factor();
    out.fixed_rows_mut::<3>(3).copy_from(&pdot);
    out.rows_mut(6, k).copy_from(&grad.rows(6 + k, k));
    out.rows_mut(6 + k, k).copy_from(&(-grad.rows(6, k)));
    out
}

pub fn hamiltonian_vector_field(sys: &RCHSystem, x: &PhasePoint) -> DVector<f64> {
    magnetic_hamiltonian_field(&sys.hamiltonian, &sys.field, x)
}

/// `vlift(F)(x)`: the vertical vector at `x` whose fiber block is that of
/// `T F · X_H(F(x))`. Fibers are linear, so transport back to `x` is the
/// identity on fiber components.
pub fn vertical_lift(map: &FiberMap, sys: &RCHSystem, x: &PhasePoint) -> DVector<f64> {
    let y = map.apply(x);
    let xh = hamiltonian_vector_field(sys, &y);
    let pushed = map.tangent(&y, &xh);
    vertical_from_fiber(&fiber_part(&pushed, x.k()), x.k())
}

/// `X_H + vlift(F) + vlift(u)`, omitting absent terms.
pub fn rch_vector_field(sys: &RCHSystem, x: &PhasePoint) -> DVector<f64> {
    let mut v = hamiltonian_vector_field(sys, x);
    if let Some(f) = &sys.force {
        v += vertical_lift(f, sys, x);
    }
    if let Some(c) = &sys.control {
        v += vertical_lift(&c.law, sys, x);
    }
    v
}

/// How [`integrate`] discretized the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationRoute {
    /// Directly in `(q, p)`; `ω_B` has a constant matrix.
    Direct,
    /// In the canonical chart `t_A(q, p)`, mapped back through `t_A⁻¹`.
    ShiftedChart,
    /// Position-dependent field without potential; explicit RK4 only.
    Rk4Fallback,
}

/// A discrete trajectory with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub energy: Vec<f64>,
    /// `None` when the field admits no momentum map.
    pub momentum: Vec<Option<CoAlgebraElement>>,
    pub method: Method,
    pub route: IntegrationRoute,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &PhasePoint {
        self.states.last().expect("trajectories contain the initial state")
    }

    /// `max_t |H(t) − H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().fold(0.0, |m, e| m.max((e - e0).abs()))
    }

    /// Energy drift relative to `max(|H(0)|, tiny)`.
    pub fn relative_energy_drift(&self) -> f64 {
        self.energy_drift() / self.energy[0].abs().max(f64::MIN_POSITIVE)
    }

    /// `max_t |J(t) − J(0)|`, if the momentum map exists.
    pub fn momentum_drift(&self) -> Option<f64> {
        let j0 = self.momentum.first().copied().flatten()?;
        self.momentum
            .iter()
            .try_fold(0.0f64, |m, j| j.map(|j| m.max(j.distance(j0))))
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times[0]
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), RchError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(RchError::InvalidParameter { name, value })
    }
}

/// Integrates `ẋ = rch_vector_field(x)` over `[0, t_end]` with step `h`.
pub fn integrate(sys: &RCHSystem, x0: &PhasePoint, t_end: f64, h: f64, method: Method) -> Result<Trajectory, RchError> {
    positive("step", h)?;
    positive("t_end", t_end)?;
    sys.check_dim(x0)?;
    let field_fn = |y: &DVector<f64>| -> Result<DVector<f64>, StepError> {
        let v = rch_vector_field(sys, &PhasePoint::from_flat(y));
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(StepError::NonFinite)
        }
    };
    let (route, times, states) = if sys.field.is_constant() {
        let (t, s) = integrate_flow(&field_fn, &x0.to_flat(), t_end, h, method)?;
        (
            IntegrationRoute::Direct,
            t,
            s.iter().map(PhasePoint::from_flat).collect::<Vec<_>>(),
        )
    } else if sys.field.has_potential() {
        let shifted = |z: &DVector<f64>| -> Result<DVector<f64>, StepError> {
            let x =
                momentum_unshift(&PhasePoint::from_flat(z), &sys.field).map_err(|e| StepError::Field(e.to_string()))?;
            let v = field_fn(&x.to_flat())?;
            momentum_shift_tangent(&x, &v, &sys.field).map_err(|e| StepError::Field(e.to_string()))
        };
        let z0 = momentum_shift(x0, &sys.field)?;
        let (t, s) = integrate_flow(&shifted, &z0.to_flat(), t_end, h, method)?;
        let states = s
            .iter()
            .map(|z| momentum_unshift(&PhasePoint::from_flat(z), &sys.field))
            .collect::<Result<Vec<_>, _>>()?;
        (IntegrationRoute::ShiftedChart, t, states)
    } else {
        if method == Method::Midpoint {
            log::warn!("position-dependent field without potential: falling back to non-symplectic rk4");
        }
        let (t, s) = integrate_flow(&field_fn, &x0.to_flat(), t_end, h, Method::Rk4)?;
        (
            IntegrationRoute::Rk4Fallback,
            t,
            s.iter().map(PhasePoint::from_flat).collect::<Vec<_>>(),
        )
    };
    let energy = states.iter().map(|x| sys.hamiltonian.evaluate(x)).collect();
    let momentum = states.iter().map(|x| momentum_map_phase(x, &sys.field).ok()).collect();
    Ok(Trajectory {
        times,
        states,
        energy,
        momentum,
        method: if route == IntegrationRoute::Rk4Fallback {
            Method::Rk4
        } else {
            method
        },
        route,
    })
}

/// The charged particle of mass `m` and charge `e` on `H`, with charge
/// factor `e/c` and no force or control.
pub fn heisenberg_particle(m: f64, e: f64, c: f64, field: MagneticField) -> Result<RCHSystem, RchError> {
    heisenberg_particle_with_metric(m, e, c, field, KineticMetric::Euclidean)
}

pub fn heisenberg_particle_with_metric(
    m: f64,
    e: f64,
    c: f64,
    field: MagneticField,
    metric: KineticMetric,
) -> Result<RCHSystem, RchError> {
    let params = ParticleParams {
        mass: m,
        charge: e,
        light_speed: c,
    };
    params.validate()?;
    let field = field.with_charge_factor(params.charge_factor());
    RCHSystem::new(field, Hamiltonian::kinetic(m, metric), 0).with_params(params)
}

/// `H_A(x) = H(t_A⁻¹ x)`; for the particle `|p − (e/c)A(q)|²/2m`.
pub fn modified_hamiltonian(sys: &RCHSystem, x: &PhasePoint) -> Result<f64, RchError> {
    Ok(sys.hamiltonian.evaluate(&momentum_unshift(x, &sys.field)?))
}

/// The canonical system `(T*Q, ω₀, H_A)` conjugate to `sys` through `t_A`.
pub fn shifted_system(sys: &RCHSystem) -> Result<RCHSystem, RchError> {
    if !sys.field.has_potential() {
        return Err(MagneticError::MissingPotential.into());
    }
    Ok(RCHSystem {
        field: MagneticField::zero(),
        hamiltonian: sys.hamiltonian.modified(&sys.field),
        force: None,
        control: None,
        params: sys.params,
        k: sys.k,
    })
}

/// Base point helper used by the examples: the origin of `H` with momentum `p`.
pub fn at_origin(p: Vector3<f64>) -> PhasePoint {
    PhasePoint::new(GroupElement::IDENTITY.to_vector(), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetic::magnetic_form;
    use crate::numerics::random_dvector;

    fn particle(b: f64) -> RCHSystem {
        heisenberg_particle(1.0, 1.0, 1.0, MagneticField::area_block(b)).unwrap()
    }

    #[test]
    fn free_and_rotating_fields() {
        let x = at_origin(Vector3::new(1.0, 0.0, 0.0));
        let free = hamiltonian_vector_field(&particle(0.0), &x);
        assert_eq!(free.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let rot = hamiltonian_vector_field(&particle(1.0), &x);
        assert_eq!(rot.fixed_rows::<3>(3).into_owned(), Vector3::new(0.0, -1.0, 0.0));
    }

    #[test]
    fn defining_equation_residual() {
        let mut sys = particle(0.8);
        sys.hamiltonian = Hamiltonian::kinetic(2.0, KineticMetric::LeftInvariant);
        let mut rng = sweep_rng(21);
        for _ in 0..100 {
            let x = random_phase_point(&mut rng, 0, 2.0);
            let xh = hamiltonian_vector_field(&sys, &x);
            let grad = sys.hamiltonian.gradient(&x);
            for _ in 0..10 {
                let w = random_dvector(&mut rng, 6, 1.0);
                let r = magnetic_form(&x, &xh, &w, &sys.field) - grad.dot(&w);
                assert!(r.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn left_invariant_gradient_matches_fd() {
        let h = Hamiltonian::kinetic(1.5, KineticMetric::LeftInvariant);
        let plain = Hamiltonian::new({
            let h = h.clone();
            move |x| h.evaluate(x)
        });
        let mut rng = sweep_rng(2);
        for _ in 0..50 {
            let x = random_phase_point(&mut rng, 0, 2.0);
            assert!((h.gradient(&x) - plain.gradient(&x)).amax() < 1e-5);
        }
    }

    #[test]
    fn vertical_lift_examples() {
        let sys = particle(0.0);
        let x = at_origin(Vector3::new(0.3, -0.2, 0.5));
        let id = vertical_lift(&FiberMap::identity(), &sys, &x);
        assert_eq!(id, DVector::zeros(6));
        let doubled = vertical_lift(&FiberMap::scaling(2.0), &sys, &x);
        assert_eq!(doubled.amax(), 0.0);
        let rotating = particle(1.0);
        let lift = vertical_lift(&FiberMap::identity(), &rotating, &x);
        let xh = hamiltonian_vector_field(&rotating, &x);
        assert_eq!(lift.fixed_rows::<3>(0).into_owned(), Vector3::zeros());
        assert_eq!(lift.fixed_rows::<3>(3), xh.fixed_rows::<3>(3));
    }

    #[test]
    fn forces_do_not_change_qdot() {
        let sys = particle(1.0).with_force(FiberMap::scaling(-0.5));
        let x = at_origin(Vector3::new(0.3, 0.7, -0.1));
        let full = rch_vector_field(&sys, &x);
        let xh = hamiltonian_vector_field(&sys, &x);
        assert_eq!(full.fixed_rows::<3>(0), xh.fixed_rows::<3>(0));
        let sum = &xh + vertical_lift(sys.force.as_ref().unwrap(), &sys, &x);
        assert!((full - sum).amax() < 1e-12);
    }

    #[test]
    fn control_subset_rank_and_membership() {
        let span = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!(matches!(
            ControlSubset::new(DVector::zeros(3), span),
            Err(RchError::RankDeficient { rank: 1, columns: 2 })
        ));
        let plane = ControlSubset::new(
            DVector::zeros(3),
            DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
        )
        .unwrap();
        assert!(plane.distance(&DVector::from_vec(vec![1.0, 2.0, 0.0])) < 1e-14);
        assert!((plane.distance(&DVector::from_vec(vec![1.0, 2.0, 3.0])) - 3.0).abs() < 1e-14);
        let sys = particle(0.0);
        let bad = sys
            .clone()
            .with_control(FiberMap::identity(), ControlSubset::zero(0))
            .unwrap_err();
        assert!(matches!(bad, RchError::ControlOutsideSubset { .. }));
        assert!(sys.with_control(FiberMap::identity(), ControlSubset::full(0)).is_ok());
    }

    #[test]
    fn free_motion_is_straight() {
        let sys = particle(0.0);
        let x0 = at_origin(Vector3::new(0.5, -1.0, 0.25));
        for method in [Method::Midpoint, Method::Rk4] {
            let traj = integrate(&sys, &x0, 1.0, 0.01, method).unwrap();
            assert!((traj.last().q - x0.p).amax() < 1e-12);
            assert_eq!(traj.route, IntegrationRoute::Direct);
        }
    }

    #[test]
    fn modified_hamiltonian_identity() {
        let sys = heisenberg_particle(1.3, 0.7, 1.1, MagneticField::left_invariant(0.9)).unwrap();
        let mut rng = sweep_rng(17);
        for _ in 0..100 {
            let x = random_phase_point(&mut rng, 0, 2.0);
            let shifted = momentum_shift(&x, &sys.field).unwrap();
            let lhs = modified_hamiltonian(&sys, &shifted).unwrap();
            assert!((lhs - sys.hamiltonian.evaluate(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            heisenberg_particle(0.0, 1.0, 1.0, MagneticField::zero()),
            Err(RchError::InvalidParameter { name: "mass", .. })
        ));
        let sys = particle(0.0);
        assert!(integrate(&sys, &at_origin(Vector3::zeros()), 1.0, -0.1, Method::Rk4).is_err());
    }
}
