//! The magnetic cotangent bundle `(T*Q, ω_B)` for `Q = H × V`.
//!
//! Conventions:
//! - a two-form on `H` is stored as an antisymmetric matrix `𝔅(q)` with
//!   `B(X, Y) = Xᵀ 𝔅(q) Y`;
//! - `ω_B = ω₀ − c·π*B` where `c` is the field's charge factor;
//! - flat tangent vectors are laid out `[δq(3), δp(3), δθ(k), δλ(k)]`;
//! - the body momentum of `(q, p)` is `ρ = L(q)ᵀ p` with `L(q) = T_e L_q`.
//!
//! The momentum map of the left action is `J₀(g, ρ) = Ad*_{g⁻¹} ρ`, and its
//! magnetic version is `J_B = J₀ ∘ t_A` for an invariant potential `A`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heisenberg::{CoAlgebraElement, GroupElement, Vec2, DEFAULT_TOL};
use crate::numerics::{
    fd_exterior_derivative_1form, fd_exterior_derivative_2form, fd_jacobian, random_dvector, random_group,
    random_vector3, sweep_rng, GRADIENT_STEP, TANGENT_STEP,
};
use crate::poisson::{classify_orbit, MagneticCocycle, OrbitDescriptor, OrbitPoint, OrbitVector};
use crate::rch::Hamiltonian;

/// Default tolerance for level-set membership.
pub const LEVEL_TOL: f64 = 1e-8;
/// Tolerance of the invariance and lift-independence sweeps.
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Number of random pairs used by the invariance sweeps.
pub const INVARIANCE_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagneticError {
    #[error("the magnetic field has no potential one-form")]
    MissingPotential,
    #[error("field matrix is not antisymmetric (max |𝔅 + 𝔅ᵀ| = {max_asymmetry:e})")]
    NotAntisymmetric { max_asymmetry: f64 },
    #[error("point is not on the level set (distance {distance:e}, tolerance {tolerance:e})")]
    NotOnLevelSet { distance: f64, tolerance: f64 },
    #[error("orbit point has ν = {actual}, expected {expected}")]
    NotOnOrbit { expected: f64, actual: f64 },
    #[error("{what} is not invariant under the left action (residual {residual:e})")]
    NotInvariant { what: String, residual: f64 },
    #[error("dimension mismatch: expected k = {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

type MatrixFn = Arc<dyn Fn(&Vector3<f64>) -> Matrix3<f64> + Send + Sync>;
/// A shared potential one-form `q ↦ A(q)`.
pub type VectorFn = Arc<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>;

#[derive(Clone)]
enum FieldKind {
    Constant(Matrix3<f64>),
    /// `A(q) = M q + a₀`, giving the constant field `𝔅 = Mᵀ − M`.
    Affine {
        m: Matrix3<f64>,
        offset: Vector3<f64>,
    },
    Custom {
        b: MatrixFn,
        potential: Option<VectorFn>,
    },
}

/// A closed two-form on `H` with an optional potential.
#[derive(Clone)]
pub struct MagneticField {
    kind: FieldKind,
    charge_factor: f64,
    left_invariant: bool,
}

impl fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("MagneticField");
        match &self.kind {
            FieldKind::Constant(b) => s.field("constant", b),
            FieldKind::Affine { m, offset } => s.field("potential_matrix", m).field("potential_offset", offset),
            FieldKind::Custom { potential, .. } => s.field("custom_with_potential", &potential.is_some()),
        };
        s.field("charge_factor", &self.charge_factor)
            .field("left_invariant", &self.left_invariant)
            .finish()
    }
}

fn check_antisymmetric(b: &Matrix3<f64>) -> Result<(), MagneticError> {
    let max_asymmetry = (b + b.transpose()).amax();
    if max_asymmetry > MagneticCocycle::ANTISYMMETRY_TOL {
        return Err(MagneticError::NotAntisymmetric { max_asymmetry });
    }
    Ok(())
}

impl MagneticField {
    /// The zero field with the zero potential; invariant.
    pub fn zero() -> Self {
        Self::linear_potential(Matrix3::zeros()).declare_left_invariant()
    }

    /// A constant field given by its matrix, without a potential.
    pub fn constant(b: Matrix3<f64>) -> Result<Self, MagneticError> {
        check_antisymmetric(&b)?;
        Ok(Self {
            kind: FieldKind::Constant(b),
            charge_factor: 1.0,
            left_invariant: false,
        })
    }

    /// Constant field `b·(dq¹∧dq²)` in matrix form, without a potential.
    pub fn area_block(b: f64) -> Self {
        Self::constant(MagneticCocycle::area_block(b).matrix().to_owned()).expect("antisymmetric")
    }

    /// Field of the linear potential `A(q) = M q`.
    pub fn linear_potential(m: Matrix3<f64>) -> Self {
        Self::affine_potential(m, Vector3::zeros())
    }

    /// Field of the affine potential `A(q) = M q + a₀`.
    pub fn affine_potential(m: Matrix3<f64>, offset: Vector3<f64>) -> Self {
        Self {
            kind: FieldKind::Affine { m, offset },
            charge_factor: 1.0,
            left_invariant: false,
        }
    }

    /// The bi-invariant field `b·ω` with its left-invariant potential
    /// `A(q) = b (−q₂/2, q₁/2, −1)`, whose body components are `(0, 0, −b)`.
    pub fn left_invariant(b: f64) -> Self {
        let m = Matrix3::new(0.0, -0.5 * b, 0.0, 0.5 * b, 0.0, 0.0, 0.0, 0.0, 0.0);
        Self::affine_potential(m, Vector3::new(0.0, 0.0, -b)).declare_left_invariant()
    }

    /// A general field. The caller is responsible for closedness and, when a
    /// potential is supplied, for `dA = 𝔅`; both are checkable with
    /// [`MagneticField::consistency_residuals`].
    pub fn custom(
        b: impl Fn(&Vector3<f64>) -> Matrix3<f64> + Send + Sync + 'static,
        potential: Option<VectorFn>,
    ) -> Self {
        Self {
            kind: FieldKind::Custom {
                b: Arc::new(b),
                potential,
            },
            charge_factor: 1.0,
            left_invariant: false,
        }
    }

    pub fn with_charge_factor(mut self, charge_factor: f64) -> Self {
        self.charge_factor = charge_factor;
        self
    }

    /// Declares the potential left-invariant, enabling the magnetic momentum
    /// map. Use [`MagneticField::potential_invariance_residual`] to verify.
    pub fn declare_left_invariant(mut self) -> Self {
        self.left_invariant = true;
        self
    }

    pub fn charge_factor(&self) -> f64 {
        self.charge_factor
    }

    pub fn is_declared_left_invariant(&self) -> bool {
        self.left_invariant
    }

    pub fn has_potential(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) => false,
            FieldKind::Affine { .. } => true,
            FieldKind::Custom { potential, .. } => potential.is_some(),
        }
    }

    /// True when `𝔅` does not depend on `q`.
    pub fn is_constant(&self) -> bool {
        !matches!(self.kind, FieldKind::Custom { .. })
    }

    pub fn b_matrix(&self, q: &Vector3<f64>) -> Matrix3<f64> {
        match &self.kind {
            FieldKind::Constant(b) => *b,
            FieldKind::Affine { m, .. } => m.transpose() - m,
            FieldKind::Custom { b, .. } => b(q),
        }
    }

    pub fn two_form(&self, q: &Vector3<f64>, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
        x.dot(&(self.b_matrix(q) * y))
    }

    pub fn potential(&self, q: &Vector3<f64>) -> Option<Vector3<f64>> {
        match &self.kind {
            FieldKind::Constant(_) => None,
            FieldKind::Affine { m, offset } => Some(m * q + offset),
            FieldKind::Custom { potential, .. } => potential.as_ref().map(|a| a(q)),
        }
    }

    pub fn require_potential(&self, q: &Vector3<f64>) -> Result<Vector3<f64>, MagneticError> {
        self.potential(q).ok_or(MagneticError::MissingPotential)
    }

    /// Jacobian `∂A_i/∂q_j`.
    pub fn potential_jacobian(&self, q: &Vector3<f64>) -> Result<Matrix3<f64>, MagneticError> {
        match &self.kind {
            FieldKind::Affine { m, .. } => Ok(*m),
            FieldKind::Custom { potential: Some(a), .. } => {
                let x = DVector::from_column_slice(q.as_slice());
                let jac = fd_jacobian(
                    |y| DVector::from_column_slice(a(&Vector3::new(y[0], y[1], y[2])).as_slice()),
                    &x,
                    GRADIENT_STEP,
                );
                Ok(Matrix3::from_fn(|i, j| jac[(i, j)]))
            }
            _ => Err(MagneticError::MissingPotential),
        }
    }

    /// Body components `L(q)ᵀ A(q)` of the potential.
    pub fn body_potential(&self, g: GroupElement) -> Result<Vector3<f64>, MagneticError> {
        let q = g.to_vector();
        Ok(g.body_frame().transpose() * self.require_potential(&q)?)
    }

    /// The value of `c·𝔅` at the identity as an algebra cocycle.
    pub fn cocycle_at_identity(&self) -> MagneticCocycle {
        MagneticCocycle::new(self.b_matrix(&Vector3::zeros()) * self.charge_factor)
            .expect("field matrices are antisymmetric")
    }

    /// Largest violation over `samples` random points of: antisymmetry of
    /// `𝔅`, closedness `d𝔅 = 0`, and `dA = 𝔅` when a potential exists.
    pub fn consistency_residuals(&self, seed: u64, samples: usize) -> FieldResiduals {
        let mut rng = sweep_rng(seed);
        let mut out = FieldResiduals::default();
        let beta = |x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| {
            let q = Vector3::new(x[0], x[1], x[2]);
            self.two_form(&q, &Vector3::new(a[0], a[1], a[2]), &Vector3::new(b[0], b[1], b[2]))
        };
        for _ in 0..samples {
            let q = random_vector3(&mut rng, 2.0);
            let b = self.b_matrix(&q);
            out.antisymmetry = out.antisymmetry.max((b + b.transpose()).amax());
            let x = DVector::from_column_slice(q.as_slice());
            let (u, v, w) = (
                random_dvector(&mut rng, 3, 1.0),
                random_dvector(&mut rng, 3, 1.0),
                random_dvector(&mut rng, 3, 1.0),
            );
            let d = fd_exterior_derivative_2form(beta, &x, &u, &v, &w, TANGENT_STEP);
            out.closedness = out.closedness.max(d.abs());
            if self.has_potential() {
                let alpha = |y: &DVector<f64>, t: &DVector<f64>| {
                    let a = self.potential(&Vector3::new(y[0], y[1], y[2])).unwrap();
                    a.dot(&Vector3::new(t[0], t[1], t[2]))
                };
                let da = fd_exterior_derivative_1form(alpha, &x, &u, &v, TANGENT_STEP);
                let bv = beta(&x, &u, &v);
                out.potential = Some(out.potential.unwrap_or(0.0).max((da - bv).abs()));
            }
        }
        out
    }

    /// `max |L_h* A − A|` over random `(h, q)`, in chart components.
    pub fn potential_invariance_residual(&self, seed: u64, samples: usize) -> Result<f64, MagneticError> {
        let mut rng = sweep_rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let h = random_group(&mut rng, 2.0);
            let q = random_group(&mut rng, 2.0);
            let a = self.require_potential(&q.to_vector())?;
            let moved = self.require_potential(&h.multiply(q).to_vector())?;
            let pulled = h.left_translation_tangent().transpose() * moved;
            worst = worst.max((pulled - a).amax());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FieldResiduals {
    pub antisymmetry: f64,
    pub closedness: f64,
    pub potential: Option<f64>,
}

/// A point `(q, p, θ, λ)` of `T*Q` in the global chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vector3<f64>,
    pub p: Vector3<f64>,
    pub theta: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl PhasePoint {
    pub fn new(q: Vector3<f64>, p: Vector3<f64>) -> Self {
        Self {
            q,
            p,
            theta: DVector::zeros(0),
            lambda: DVector::zeros(0),
        }
    }

    pub fn with_v(mut self, theta: DVector<f64>, lambda: DVector<f64>) -> Self {
        assert_eq!(theta.len(), lambda.len(), "θ and λ must share dimension");
        self.theta = theta;
        self.lambda = lambda;
        self
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn dim(&self) -> usize {
        6 + 2 * self.k()
    }

    pub fn group(&self) -> GroupElement {
        GroupElement::from_vector(&self.q)
    }

    pub fn to_flat(&self) -> DVector<f64> {
        let k = self.k();
        let mut v = DVector::zeros(6 + 2 * k);
        v.fixed_rows_mut::<3>(0).copy_from(&self.q);
        v.fixed_rows_mut::<3>(3).copy_from(&self.p);
        v.rows_mut(6, k).copy_from(&self.theta);
        v.rows_mut(6 + k, k).copy_from(&self.lambda);
        v
    }

    pub fn from_flat(v: &DVector<f64>) -> Self {
        let k = (v.len() - 6) / 2;
        Self {
            q: v.fixed_rows::<3>(0).into_owned(),
            p: v.fixed_rows::<3>(3).into_owned(),
            theta: v.rows(6, k).into_owned(),
            lambda: v.rows(6 + k, k).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }
}

/// A point `(g, ρ, θ, λ)` of `H × η* × V × V*` in the left trivialization.
/// `rho` is the body momentum of the point, before any momentum shift.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPhasePoint {
    pub g: GroupElement,
    pub rho: CoAlgebraElement,
    pub theta: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl ExtendedPhasePoint {
    pub fn new(g: GroupElement, rho: CoAlgebraElement) -> Self {
        Self {
            g,
            rho,
            theta: DVector::zeros(0),
            lambda: DVector::zeros(0),
        }
    }

    pub fn with_v(mut self, theta: DVector<f64>, lambda: DVector<f64>) -> Self {
        assert_eq!(theta.len(), lambda.len(), "θ and λ must share dimension");
        self.theta = theta;
        self.lambda = lambda;
        self
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn from_phase(x: &PhasePoint) -> Self {
        let g = x.group();
        Self {
            g,
            rho: CoAlgebraElement::from_vector(&spatial_to_body(g, &x.p)),
            theta: x.theta.clone(),
            lambda: x.lambda.clone(),
        }
    }

    pub fn to_phase(&self) -> PhasePoint {
        PhasePoint {
            q: self.g.to_vector(),
            p: body_to_spatial(self.g, &self.rho.to_vector()),
            theta: self.theta.clone(),
            lambda: self.lambda.clone(),
        }
    }
}

/// `ρ = L(g)ᵀ p`.
pub fn spatial_to_body(g: GroupElement, p: &Vector3<f64>) -> Vector3<f64> {
    g.body_frame().transpose() * p
}

/// `p = L(g)⁻ᵀ ρ`.
pub fn body_to_spatial(g: GroupElement, rho: &Vector3<f64>) -> Vector3<f64> {
    let (q1, q2) = (g.u.x1, g.u.x2);
    Vector3::new(rho[0] + 0.5 * q2 * rho[2], rho[1] - 0.5 * q1 * rho[2], rho[2])
}

/// Pushes a trivialized tangent vector `[δq, δρ, δθ, δλ]` at `x` to the
/// chart tangent `[δq, δp, δθ, δλ]`.
pub fn extended_tangent_to_phase(x: &ExtendedPhasePoint, v: &DVector<f64>) -> DVector<f64> {
    let (q1, q2) = (x.g.u.x1, x.g.u.x2);
    let r3 = x.rho.nu;
    let mut out = v.clone();
    let (dq1, dq2) = (v[0], v[1]);
    let (dr1, dr2, dr3) = (v[3], v[4], v[5]);
    out[3] = dr1 + 0.5 * (dq2 * r3 + q2 * dr3);
    out[4] = dr2 - 0.5 * (dq1 * r3 + q1 * dr3);
    out[5] = dr3;
    out
}

/// Constant-in-`p` matrix `Ω_B(q)` with `ω_B(v₁, v₂) = v₁ᵀ Ω_B v₂`.
pub fn magnetic_form_matrix(q: &Vector3<f64>, field: &MagneticField, k: usize) -> DMatrix<f64> {
    let n = 6 + 2 * k;
    let mut m = DMatrix::zeros(n, n);
    let b = field.b_matrix(q) * field.charge_factor();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = -b[(i, j)];
        }
        m[(i, 3 + i)] = 1.0;
        m[(3 + i, i)] = -1.0;
    }
    for i in 0..k {
        m[(6 + i, 6 + k + i)] = 1.0;
        m[(6 + k + i, 6 + i)] = -1.0;
    }
    m
}

/// `ω_B(x)(v₁, v₂)` for chart tangent vectors at `x`.
pub fn magnetic_form(x: &PhasePoint, v1: &DVector<f64>, v2: &DVector<f64>, field: &MagneticField) -> f64 {
    let dq1 = v1.fixed_rows::<3>(0).into_owned();
    let dq2 = v2.fixed_rows::<3>(0).into_owned();
    let dp1 = v1.fixed_rows::<3>(3).into_owned();
    let dp2 = v2.fixed_rows::<3>(3).into_owned();
    let k = x.k();
    let canonical = dq1.dot(&dp2) - dp1.dot(&dq2);
    let v_part = v2.rows(6 + k, k).dot(&v1.rows(6, k)) - v1.rows(6 + k, k).dot(&v2.rows(6, k));
    canonical + v_part - field.charge_factor() * field.two_form(&x.q, &dq1, &dq2)
}

/// `ω_B` at a trivialized point, for trivialized tangents `[δq, δρ, δθ, δλ]`.
pub fn magnetic_form_extended(
    x: &ExtendedPhasePoint,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
    field: &MagneticField,
) -> f64 {
    magnetic_form(
        &x.to_phase(),
        &extended_tangent_to_phase(x, v1),
        &extended_tangent_to_phase(x, v2),
        field,
    )
}

/// `t_A(q, p) = (q, p + c·A(q))`.
pub fn momentum_shift(x: &PhasePoint, field: &MagneticField) -> Result<PhasePoint, MagneticError> {
    let a = field.require_potential(&x.q)?;
    let mut out = x.clone();
    out.p += a * field.charge_factor();
    Ok(out)
}

/// `t_A⁻¹(q, p) = (q, p − c·A(q))`.
pub fn momentum_unshift(x: &PhasePoint, field: &MagneticField) -> Result<PhasePoint, MagneticError> {
    let a = field.require_potential(&x.q)?;
    let mut out = x.clone();
    out.p -= a * field.charge_factor();
    Ok(out)
}

/// Tangent map of `t_A` applied to a chart tangent at `x`.
pub fn momentum_shift_tangent(
    x: &PhasePoint,
    v: &DVector<f64>,
    field: &MagneticField,
) -> Result<DVector<f64>, MagneticError> {
    let jac = field.potential_jacobian(&x.q)?;
    let dq = v.fixed_rows::<3>(0).into_owned();
    let mut out = v.clone();
    let dp = out.fixed_rows::<3>(3).into_owned() + jac * dq * field.charge_factor();
    out.fixed_rows_mut::<3>(3).copy_from(&dp);
    Ok(out)
}

/// The body momentum after the momentum shift: `ρ + c·L(g)ᵀ A(g)`.
pub fn shifted_body_momentum(x: &ExtendedPhasePoint, field: &MagneticField) -> Result<CoAlgebraElement, MagneticError> {
    if !field.has_potential() && field.b_matrix(&x.g.to_vector()).amax() == 0.0 {
        return Ok(x.rho);
    }
    let a = field.body_potential(x.g)?;
    Ok(CoAlgebraElement::from_vector(
        &(x.rho.to_vector() + a * field.charge_factor()),
    ))
}

/// `J(g, ρ) = Ad*_{g⁻¹}(ρ')`, with `ρ'` the shifted body momentum.
pub fn momentum_map(x: &ExtendedPhasePoint, field: &MagneticField) -> Result<CoAlgebraElement, MagneticError> {
    Ok(x.g.coadjoint(shifted_body_momentum(x, field)?))
}

pub fn momentum_map_phase(x: &PhasePoint, field: &MagneticField) -> Result<CoAlgebraElement, MagneticError> {
    momentum_map(&ExtendedPhasePoint::from_phase(x), field)
}

pub fn level_set_distance(
    x: &ExtendedPhasePoint,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
) -> Result<f64, MagneticError> {
    Ok(momentum_map(x, field)?.distance(mu_nu))
}

pub fn level_set_contains(
    x: &ExtendedPhasePoint,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    tol: f64,
) -> Result<bool, MagneticError> {
    Ok(level_set_distance(x, mu_nu, field)? <= tol)
}

/// The point of `J⁻¹(μ, ν)` over `g` with the given `V × V*` data.
pub fn level_set_point(
    g: GroupElement,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    theta: DVector<f64>,
    lambda: DVector<f64>,
) -> Result<ExtendedPhasePoint, MagneticError> {
    let shifted = g.inverse().coadjoint(mu_nu).to_vector();
    let rho = if field.has_potential() {
        shifted - field.body_potential(g)? * field.charge_factor()
    } else if field.b_matrix(&g.to_vector()).amax() == 0.0 {
        shifted
    } else {
        return Err(MagneticError::MissingPotential);
    };
    Ok(ExtendedPhasePoint::new(g, CoAlgebraElement::from_vector(&rho)).with_v(theta, lambda))
}

/// Coordinates used on the reduced space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionChart {
    /// Shifted body momentum `ρ' = ρ + c·A_body`; the orbit form is the plain
    /// `ω⁻` and the orbit sits at `ν' = ν`.
    #[default]
    Shifted,
    /// Unshifted body momentum `ρ`; the orbit form carries the magnetic
    /// cocycle `−c·𝔅(e)`.
    Magnetic,
}

impl ReductionChart {
    /// Cocycle of the orbit form in this chart.
    pub fn cocycle(self, field: &MagneticField) -> MagneticCocycle {
        match self {
            ReductionChart::Shifted => MagneticCocycle::zero(),
            ReductionChart::Magnetic => field.cocycle_at_identity().scaled(-1.0),
        }
    }
}

/// `π(x)` in the chosen chart, without checking level-set membership.
pub fn orbit_projection(
    x: &ExtendedPhasePoint,
    field: &MagneticField,
    chart: ReductionChart,
) -> Result<OrbitPoint, MagneticError> {
    let rho = match chart {
        ReductionChart::Shifted => shifted_body_momentum(x, field)?,
        ReductionChart::Magnetic => x.rho,
    };
    Ok(OrbitPoint::from_coalgebra(rho).with_v(x.theta.clone(), x.lambda.clone()))
}

/// `π_{(μ,ν)}`: the orbit representative of a level-set point.
pub fn reduce_point(
    x: &ExtendedPhasePoint,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
) -> Result<OrbitPoint, MagneticError> {
    reduce_point_in(x, mu_nu, field, ReductionChart::Shifted, LEVEL_TOL)
}

pub fn reduce_point_in(
    x: &ExtendedPhasePoint,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    chart: ReductionChart,
    tol: f64,
) -> Result<OrbitPoint, MagneticError> {
    let distance = level_set_distance(x, mu_nu, field)?;
    if distance > tol {
        return Err(MagneticError::NotOnLevelSet {
            distance,
            tolerance: tol,
        });
    }
    orbit_projection(x, field, chart)
}

/// A level-set point over `o` with center coordinate `alpha`. Every lift of
/// `o` has this form.
pub fn lift_orbit_point(
    o: &OrbitPoint,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    chart: ReductionChart,
    alpha: f64,
) -> Result<ExtendedPhasePoint, MagneticError> {
    let body_shift = |g: GroupElement| -> Result<Vector3<f64>, MagneticError> {
        if field.has_potential() {
            Ok(field.body_potential(g)? * field.charge_factor())
        } else if field.b_matrix(&g.to_vector()).amax() == 0.0 {
            Ok(Vector3::zeros())
        } else {
            Err(MagneticError::MissingPotential)
        }
    };
    let probe = GroupElement::central(alpha);
    let shifted_nu = match chart {
        ReductionChart::Shifted => o.nu,
        ReductionChart::Magnetic => o.nu + body_shift(probe)?[2],
    };
    if (shifted_nu - mu_nu.nu).abs() > LEVEL_TOL * mu_nu.nu.abs().max(1.0) {
        return Err(MagneticError::NotOnOrbit {
            expected: mu_nu.nu,
            actual: shifted_nu,
        });
    }
    // Solve Ad*_{g⁻¹} ρ' = (μ, ν), i.e. μ' + ν J u = μ, for u.
    let u = match classify_orbit(&mu_nu) {
        OrbitDescriptor::Point { .. } => Vec2::ZERO,
        OrbitDescriptor::Plane { nu } => {
            // In the magnetic chart ρ' depends on g through the shift, so
            // iterate; for an invariant potential one pass suffices.
            let mut u = Vec2::ZERO;
            for _ in 0..50 {
                let g = GroupElement { u, alpha };
                let shifted_mu = match chart {
                    ReductionChart::Shifted => o.rho,
                    ReductionChart::Magnetic => {
                        let s = body_shift(g)?;
                        o.rho + Vec2::new(s[0], s[1])
                    }
                };
                let d = mu_nu.mu - shifted_mu;
                let next = Vec2::new(-d.x2 / nu, d.x1 / nu);
                if next.approx_eq(u, DEFAULT_TOL) {
                    u = next;
                    break;
                }
                u = next;
            }
            u
        }
    };
    let g = GroupElement { u, alpha };
    let rho = match chart {
        ReductionChart::Shifted => CoAlgebraElement::from_vector(&(o.coalgebra().to_vector() - body_shift(g)?)),
        ReductionChart::Magnetic => o.coalgebra(),
    };
    Ok(ExtendedPhasePoint::new(g, rho).with_v(o.theta.clone(), o.lambda.clone()))
}

/// Cotangent lift of left translation by `h`, acting on the `H` factor.
pub fn left_action(h: GroupElement, x: &PhasePoint) -> PhasePoint {
    let g = x.group();
    PhasePoint {
        q: h.multiply(g).to_vector(),
        p: h.inverse().left_translation_tangent().transpose() * x.p,
        theta: x.theta.clone(),
        lambda: x.lambda.clone(),
    }
}

/// The same action in the trivialization: `(g, ρ) ↦ (h g, ρ)`.
pub fn left_action_extended(h: GroupElement, x: &ExtendedPhasePoint) -> ExtendedPhasePoint {
    ExtendedPhasePoint {
        g: h.multiply(x.g),
        ..x.clone()
    }
}

/// Random phase point with `k`-dimensional `V`.
pub fn random_phase_point(rng: &mut crate::numerics::SweepRng, k: usize, half_width: f64) -> PhasePoint {
    PhasePoint::new(random_vector3(rng, half_width), random_vector3(rng, half_width))
        .with_v(random_dvector(rng, k, half_width), random_dvector(rng, k, half_width))
}

/// `max |H(Φ_h x) − H(x)|` over random pairs, scaled by `max(1, |H(x)|)`.
pub fn hamiltonian_invariance_residual(h: &Hamiltonian, k: usize, seed: u64, samples: usize) -> f64 {
    let mut rng = sweep_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_phase_point(&mut rng, k, 2.0);
        let g = random_group(&mut rng, 2.0);
        let base = h.evaluate(&x);
        let moved = h.evaluate(&left_action(g, &x));
        worst = worst.max((moved - base).abs() / base.abs().max(1.0));
    }
    worst
}

/// `h_{(μ,ν)}` with `h ∘ π = H ∘ i`, evaluated at the lift with `α = 0`.
///
/// Fails with `NotInvariant` when `H` is not left-invariant on random
/// samples. The gradient is analytic whenever `H`'s is.
pub fn reduced_hamiltonian(
    h_full: &Hamiltonian,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    chart: ReductionChart,
    k: usize,
) -> Result<crate::poisson::OrbitFunction, MagneticError> {
    let residual = hamiltonian_invariance_residual(h_full, k, 0x5eed, INVARIANCE_SAMPLES);
    if residual > INVARIANCE_TOL {
        return Err(MagneticError::NotInvariant {
            what: "Hamiltonian".into(),
            residual,
        });
    }
    Ok(lift_evaluated(h_full, mu_nu, field, chart))
}

/// The orbit function `o ↦ H(lift(o))`, with no invariance pre-check.
pub fn lift_evaluated(
    h_full: &Hamiltonian,
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    chart: ReductionChart,
) -> crate::poisson::OrbitFunction {
    let (h1, f1) = (h_full.clone(), field.clone());
    let value = move |o: &OrbitPoint| -> f64 {
        match lift_orbit_point(o, mu_nu, &f1, chart, 0.0) {
            Ok(x) => h1.evaluate(&x.to_phase()),
            Err(_) => f64::NAN,
        }
    };
    let f = crate::poisson::OrbitFunction::new(value);
    if !h_full.gradient_is_analytic() {
        return f;
    }
    let (h2, f2) = (h_full.clone(), field.clone());
    f.with_gradient(move |o| {
        let k = o.k();
        let x = match lift_orbit_point(o, mu_nu, &f2, chart, 0.0) {
            Ok(x) => x,
            Err(_) => return OrbitVector::from_flat(&DVector::from_element(2 + 2 * k, f64::NAN)),
        };
        let grad = h2.gradient(&x.to_phase());
        // p = L⁻ᵀ ρ at fixed g, so ∂h/∂ρ = L⁻¹ ∂H/∂p.
        let dp = grad.fixed_rows::<3>(3).into_owned();
        let l_inv = x.g.inverse().body_frame();
        let d_rho = l_inv * dp;
        OrbitVector {
            d_rho: Vec2::new(d_rho[0], d_rho[1]),
            d_theta: grad.rows(6, k).into_owned(),
            d_lambda: grad.rows(6 + k, k).into_owned(),
        }
    })
}

/// Largest spread of `h(lift(o, α))` over `alphas` at the given orbit points.
pub fn lift_independence_residual(
    h_full: &Hamiltonian,
    points: &[OrbitPoint],
    alphas: &[f64],
    mu_nu: CoAlgebraElement,
    field: &MagneticField,
    chart: ReductionChart,
) -> Result<f64, MagneticError> {
    let mut worst = 0.0f64;
    for o in points {
        let base = h_full.evaluate(&lift_orbit_point(o, mu_nu, field, chart, 0.0)?.to_phase());
        for &a in alphas {
            let v = h_full.evaluate(&lift_orbit_point(o, mu_nu, field, chart, a)?.to_phase());
            worst = worst.max((v - base).abs());
        }
    }
    Ok(worst)
}
