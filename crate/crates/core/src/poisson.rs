//! Magnetic Lie–Poisson brackets on the dual algebra, coadjoint-orbit
//! classification, and the magnetic orbit symplectic form.
//!
//! The magnetic term is a constant antisymmetric form on the algebra (its
//! value at the identity). In matrix terms the bracket of two functions is
//! `∇fᵀ K(p) ∇g` with `K(p) = ±ν E − Σ`, where `E` is the area form on the
//! planar block and `Σ` the cocycle matrix.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heisenberg::{bracket, AlgebraElement, CoAlgebraElement, Vec2, DEFAULT_TOL};
use crate::numerics::{fd_gradient, GRADIENT_STEP};

/// Jacobi tolerance when every gradient and Hessian is analytic.
pub const JACOBI_TOL: f64 = 1e-9;
/// Jacobi tolerance when any derivative falls back to finite differences.
pub const JACOBI_TOL_DEGRADED: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoissonError {
    #[error("cocycle matrix is not antisymmetric (max |Σ + Σᵀ| = {max_asymmetry:e})")]
    NotAntisymmetric { max_asymmetry: f64 },
    #[error("cocycle couples the center direction (Σ13 = {s13}, Σ23 = {s23}); ν is not a Casimir and the orbits are not planes")]
    IncompatibleCocycle { s13: f64, s23: f64 },
    #[error("orbit form matrix is singular: {matrix:?}")]
    SingularForm { matrix: [[f64; 2]; 2] },
    #[error("dimension mismatch: expected V of dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Which of the two magnetic Lie–Poisson structures to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketSign {
    Plus,
    /// Pairs with left reduction; the default.
    #[default]
    Minus,
}

impl BracketSign {
    pub fn factor(self) -> f64 {
        match self {
            BracketSign::Plus => 1.0,
            BracketSign::Minus => -1.0,
        }
    }
}

/// Constant antisymmetric two-form on the algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticCocycle {
    form: Matrix3<f64>,
}

impl MagneticCocycle {
    pub const ANTISYMMETRY_TOL: f64 = 1e-14;

    pub fn new(form: Matrix3<f64>) -> Result<Self, PoissonError> {
        let max_asymmetry = (form + form.transpose()).amax();
        if max_asymmetry > Self::ANTISYMMETRY_TOL {
            return Err(PoissonError::NotAntisymmetric { max_asymmetry });
        }
        Ok(Self { form })
    }

    pub fn zero() -> Self {
        Self { form: Matrix3::zeros() }
    }

    /// `b · ω` on the planar block.
    pub fn area_block(b: f64) -> Self {
        let mut form = Matrix3::zeros();
        form[(0, 1)] = b;
        form[(1, 0)] = -b;
        Self { form }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.form
    }

    pub fn eval(&self, xi: AlgebraElement, eta: AlgebraElement) -> f64 {
        xi.to_vector().dot(&(self.form * eta.to_vector()))
    }

    /// The planar entry `Σ(e1, e2)`.
    pub fn planar(&self) -> f64 {
        self.form[(0, 1)]
    }

    pub fn is_zero(&self) -> bool {
        self.form.amax() == 0.0
    }

    pub fn check_orbit_compatible(&self) -> Result<(), PoissonError> {
        let (s13, s23) = (self.form[(0, 2)], self.form[(1, 2)]);
        if s13.abs() > DEFAULT_TOL || s23.abs() > DEFAULT_TOL {
            return Err(PoissonError::IncompatibleCocycle { s13, s23 });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { form: self.form * s }
    }
}

type ScalarFn = Arc<dyn Fn(&CoAlgebraElement) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&CoAlgebraElement) -> AlgebraElement + Send + Sync>;
type HessianFn = Arc<dyn Fn(&CoAlgebraElement) -> Matrix3<f64> + Send + Sync>;

/// A smooth function on the dual algebra together with its functional
/// derivative `δf/δp ∈ η`.
#[derive(Clone)]
pub struct DualFunction {
    value: ScalarFn,
    gradient: Option<GradientFn>,
    hessian: Option<HessianFn>,
}

impl fmt::Debug for DualFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualFunction")
            .field("gradient_is_analytic", &self.gradient_is_analytic())
            .field("hessian_is_analytic", &self.hessian.is_some())
            .finish()
    }
}

impl DualFunction {
    /// A function whose derivatives are taken by central differences.
    pub fn new(value: impl Fn(&CoAlgebraElement) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&CoAlgebraElement) -> AlgebraElement + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&CoAlgebraElement) -> Matrix3<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// `p ↦ ⟨p, ξ⟩`.
    pub fn linear(xi: AlgebraElement) -> Self {
        Self::new(move |p| p.pair(xi))
            .with_gradient(move |_| xi)
            .with_hessian(|_| Matrix3::zeros())
    }

    /// The `i`-th coordinate (`μ1`, `μ2`, `ν` for `i = 0, 1, 2`).
    pub fn coordinate(i: usize) -> Self {
        Self::linear(AlgebraElement::basis(i))
    }

    /// `p ↦ ½ pᵀ Q p + bᵀ p + c` with `Q` symmetrized.
    pub fn quadratic(q: Matrix3<f64>, b: Vector3<f64>, c: f64) -> Self {
        let q = (q + q.transpose()) * 0.5;
        Self::new(move |p| {
            let v = p.to_vector();
            0.5 * v.dot(&(q * v)) + b.dot(&v) + c
        })
        .with_gradient(move |p| AlgebraElement::from_vector(&(q * p.to_vector() + b)))
        .with_hessian(move |_| q)
    }

    pub fn evaluate(&self, p: &CoAlgebraElement) -> f64 {
        (self.value)(p)
    }

    pub fn gradient_is_analytic(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_analytic_second_derivatives(&self) -> bool {
        self.gradient.is_some() && self.hessian.is_some()
    }

    /// `δf/δp`, analytic when supplied, otherwise central differences.
    pub fn gradient(&self, p: &CoAlgebraElement) -> AlgebraElement {
        match &self.gradient {
            Some(g) => g(p),
            None => {
                let x = DVector::from_column_slice(p.to_vector().as_slice());
                let g = fd_gradient(
                    |y| self.evaluate(&CoAlgebraElement::new(y[0], y[1], y[2])),
                    &x,
                    GRADIENT_STEP,
                );
                AlgebraElement::new(g[0], g[1], g[2])
            }
        }
    }

    pub fn hessian(&self, p: &CoAlgebraElement) -> Option<Matrix3<f64>> {
        self.hessian.as_ref().map(|h| h(p))
    }

    /// Pointwise product, keeping analytic derivatives when both factors
    /// have them.
    pub fn product(&self, other: &DualFunction) -> DualFunction {
        let (f, g) = (self.clone(), other.clone());
        let mut out = {
            let (f, g) = (f.clone(), g.clone());
            DualFunction::new(move |p| f.evaluate(p) * g.evaluate(p))
        };
        if f.gradient_is_analytic() && g.gradient_is_analytic() {
            let (f1, g1) = (f.clone(), g.clone());
            out = out.with_gradient(move |p| {
                let v = f1.gradient(p).to_vector() * g1.evaluate(p) + g1.gradient(p).to_vector() * f1.evaluate(p);
                AlgebraElement::from_vector(&v)
            });
            if f.hessian.is_some() && g.hessian.is_some() {
                out = out.with_hessian(move |p| {
                    let (df, dg) = (f.gradient(p).to_vector(), g.gradient(p).to_vector());
                    f.hessian(p).unwrap() * g.evaluate(p)
                        + g.hessian(p).unwrap() * f.evaluate(p)
                        + df * dg.transpose()
                        + dg * df.transpose()
                });
            }
        }
        out
    }
}

/// `K(p) = ±ν E − Σ`, so that `{f, g}(p) = ∇fᵀ K(p) ∇g`.
pub fn bracket_matrix(p: &CoAlgebraElement, cocycle: &MagneticCocycle, sign: BracketSign) -> Matrix3<f64> {
    let s = sign.factor() * p.nu;
    Matrix3::new(0.0, s, 0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0) - cocycle.matrix()
}

/// `{f, g}^B_±(p) = ±⟨p, [δf, δg]⟩ − Σ(δf, δg)`.
pub fn magnetic_lie_poisson(
    f: &DualFunction,
    g: &DualFunction,
    p: &CoAlgebraElement,
    cocycle: &MagneticCocycle,
    sign: BracketSign,
) -> f64 {
    let (df, dg) = (f.gradient(p), g.gradient(p));
    sign.factor() * p.pair(bracket(df, dg)) - cocycle.eval(df, dg)
}

/// The function `p ↦ {f, g}(p)`. Its gradient is analytic when both inputs
/// carry analytic Hessians.
pub fn bracket_function(
    f: &DualFunction,
    g: &DualFunction,
    cocycle: &MagneticCocycle,
    sign: BracketSign,
) -> DualFunction {
    let (f0, g0, c0) = (f.clone(), g.clone(), *cocycle);
    let out = DualFunction::new(move |p| magnetic_lie_poisson(&f0, &g0, p, &c0, sign));
    if f.has_analytic_second_derivatives() && g.has_analytic_second_derivatives() {
        let (f, g, cocycle) = (f.clone(), g.clone(), *cocycle);
        out.with_gradient(move |p| {
            let k = bracket_matrix(p, &cocycle, sign);
            let (df, dg) = (f.gradient(p), g.gradient(p));
            let (hf, hg) = (f.hessian(p).unwrap(), g.hessian(p).unwrap());
            let (vf, vg) = (df.to_vector(), dg.to_vector());
            let mut grad = hf * (k * vg) - hg * (k * vf);
            grad[2] += sign.factor() * crate::heisenberg::area_form(df.x, dg.x);
            AlgebraElement::from_vector(&grad)
        })
    } else {
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiReport {
    /// `|{{f,g},h} + {{g,h},f} + {{h,f},g}|` at the sample point.
    pub residual: f64,
    pub tolerance: f64,
    /// True when some derivative was taken by finite differences.
    pub degraded: bool,
}

impl JacobiReport {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Cyclic Jacobi sum of the magnetic bracket at `p`.
pub fn check_jacobi(
    fs: [&DualFunction; 3],
    p: &CoAlgebraElement,
    cocycle: &MagneticCocycle,
    sign: BracketSign,
) -> JacobiReport {
    let degraded = fs.iter().any(|f| !f.has_analytic_second_derivatives());
    let [f, g, h] = fs;
    let term = |a: &DualFunction, b: &DualFunction, c: &DualFunction| {
        let ab = bracket_function(a, b, cocycle, sign);
        magnetic_lie_poisson(&ab, c, p, cocycle, sign)
    };
    let residual = (term(f, g, h) + term(g, h, f) + term(h, f, g)).abs();
    JacobiReport {
        residual,
        tolerance: if degraded { JACOBI_TOL_DEGRADED } else { JACOBI_TOL },
        degraded,
    }
}

/// The two kinds of coadjoint orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OrbitDescriptor {
    /// `{(μ, 0)}`.
    Point { mu: Vec2 },
    /// `R² × {ν}`.
    Plane { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitKind {
    Point,
    Plane,
}

impl OrbitDescriptor {
    pub fn kind(&self) -> OrbitKind {
        match self {
            OrbitDescriptor::Point { .. } => OrbitKind::Point,
            OrbitDescriptor::Plane { .. } => OrbitKind::Plane,
        }
    }
}

pub fn classify_orbit(p: &CoAlgebraElement) -> OrbitDescriptor {
    if p.nu.abs() <= DEFAULT_TOL {
        OrbitDescriptor::Point { mu: p.mu }
    } else {
        OrbitDescriptor::Plane { nu: p.nu }
    }
}

/// A point of the extended orbit `O × V × V*`, charted by `ρ ∈ R²` with `ν`
/// fixed, plus `(θ, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPoint {
    pub rho: Vec2,
    pub nu: f64,
    pub theta: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl OrbitPoint {
    pub fn new(rho: Vec2, nu: f64) -> Self {
        Self {
            rho,
            nu,
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

    pub fn from_coalgebra(p: CoAlgebraElement) -> Self {
        Self::new(p.mu, p.nu)
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn coalgebra(&self) -> CoAlgebraElement {
        CoAlgebraElement {
            mu: self.rho,
            nu: self.nu,
        }
    }

    /// Flat layout `[ρ1, ρ2, ν, θ…, λ…]`.
    pub fn to_flat(&self) -> DVector<f64> {
        let k = self.k();
        let mut v = DVector::zeros(3 + 2 * k);
        v[0] = self.rho.x1;
        v[1] = self.rho.x2;
        v[2] = self.nu;
        v.rows_mut(3, k).copy_from(&self.theta);
        v.rows_mut(3 + k, k).copy_from(&self.lambda);
        v
    }

    pub fn from_flat(v: &DVector<f64>) -> Self {
        let k = (v.len() - 3) / 2;
        Self {
            rho: Vec2::new(v[0], v[1]),
            nu: v[2],
            theta: v.rows(3, k).into_owned(),
            lambda: v.rows(3 + k, k).into_owned(),
        }
    }
}

/// A tangent vector (or covector) on `O × V × V*` in the orbit chart.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitVector {
    pub d_rho: Vec2,
    pub d_theta: DVector<f64>,
    pub d_lambda: DVector<f64>,
}

impl OrbitVector {
    pub fn zeros(k: usize) -> Self {
        Self {
            d_rho: Vec2::ZERO,
            d_theta: DVector::zeros(k),
            d_lambda: DVector::zeros(k),
        }
    }

    pub fn k(&self) -> usize {
        self.d_theta.len()
    }

    /// Flat layout `[δρ1, δρ2, δθ…, δλ…]`.
    pub fn to_flat(&self) -> DVector<f64> {
        let k = self.k();
        let mut v = DVector::zeros(2 + 2 * k);
        v[0] = self.d_rho.x1;
        v[1] = self.d_rho.x2;
        v.rows_mut(2, k).copy_from(&self.d_theta);
        v.rows_mut(2 + k, k).copy_from(&self.d_lambda);
        v
    }

    pub fn from_flat(v: &DVector<f64>) -> Self {
        let k = (v.len() - 2) / 2;
        Self {
            d_rho: Vec2::new(v[0], v[1]),
            d_theta: v.rows(2, k).into_owned(),
            d_lambda: v.rows(2 + k, k).into_owned(),
        }
    }
}

type OrbitScalarFn = Arc<dyn Fn(&OrbitPoint) -> f64 + Send + Sync>;
type OrbitGradientFn = Arc<dyn Fn(&OrbitPoint) -> OrbitVector + Send + Sync>;

/// A function on the extended orbit with its chart gradient.
#[derive(Clone)]
pub struct OrbitFunction {
    value: OrbitScalarFn,
    gradient: Option<OrbitGradientFn>,
}

impl fmt::Debug for OrbitFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrbitFunction")
            .field("gradient_is_analytic", &self.gradient.is_some())
            .finish()
    }
}

impl OrbitFunction {
    pub fn new(value: impl Fn(&OrbitPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&OrbitPoint) -> OrbitVector + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_gradient(|p| OrbitVector::zeros(p.k()))
    }

    pub fn evaluate(&self, p: &OrbitPoint) -> f64 {
        (self.value)(p)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let inner = self.clone();
        let mut out = {
            let inner = inner.clone();
            OrbitFunction::new(move |p| s * inner.evaluate(p))
        };
        if inner.gradient.is_some() {
            out = out.with_gradient(move |p| OrbitVector::from_flat(&(inner.gradient(p).to_flat() * s)));
        }
        out
    }

    /// Gradient in the chart `(ρ1, ρ2, θ, λ)`; `ν` is held fixed.
    pub fn gradient(&self, p: &OrbitPoint) -> OrbitVector {
        if let Some(g) = &self.gradient {
            return g(p);
        }
        let k = p.k();
        let base = p.to_flat();
        let chart = |y: &DVector<f64>| {
            let mut full = base.clone();
            full[0] = y[0];
            full[1] = y[1];
            full.rows_mut(3, 2 * k).copy_from(&y.rows(2, 2 * k));
            self.evaluate(&OrbitPoint::from_flat(&full))
        };
        let mut y = DVector::zeros(2 + 2 * k);
        y[0] = base[0];
        y[1] = base[1];
        y.rows_mut(2, 2 * k).copy_from(&base.rows(3, 2 * k));
        OrbitVector::from_flat(&fd_gradient(chart, &y, GRADIENT_STEP))
    }
}

/// Result of evaluating the orbit form; `degenerate` flags a point orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitFormValue {
    pub value: f64,
    pub degenerate: bool,
}

/// `ω^±(ad*_ξ p, ad*_η p) = ±⟨p, [ξ, η]⟩ − Σ(ξ, η)`.
pub fn orbit_symplectic_form(
    p: &OrbitPoint,
    xi: AlgebraElement,
    eta: AlgebraElement,
    cocycle: &MagneticCocycle,
    sign: BracketSign,
) -> OrbitFormValue {
    let point = p.coalgebra();
    let value = sign.factor() * point.pair(bracket(xi, eta)) - cocycle.eval(xi, eta);
    let degenerate = point.nu.abs() <= DEFAULT_TOL && cocycle.planar().abs() <= DEFAULT_TOL;
    OrbitFormValue { value, degenerate }
}

/// Matrix of the orbit form in generator coordinates `ξ.X`.
pub fn chart_form_matrix(nu: f64, cocycle: &MagneticCocycle, sign: BracketSign) -> Matrix2<f64> {
    let k = bracket_matrix(&CoAlgebraElement::new(0.0, 0.0, nu), cocycle, sign);
    k.fixed_view::<2, 2>(0, 0).into_owned()
}

/// Chart tangent vector generated by `ξ` at `p`: the Hamiltonian vector field
/// of `⟨·, ξ⟩` under the magnetic bracket. Equals `ad*_ξ p` for the minus
/// bracket with zero cocycle.
pub fn orbit_generator(xi: AlgebraElement, p: &CoAlgebraElement, cocycle: &MagneticCocycle, sign: BracketSign) -> Vec2 {
    let v = bracket_matrix(p, cocycle, sign) * xi.to_vector();
    Vec2::new(v[0], v[1])
}

fn planar_form_in_rho(nu: f64, cocycle: &MagneticCocycle, sign: BracketSign) -> Result<Matrix2<f64>, PoissonError> {
    cocycle.check_orbit_compatible()?;
    let k2 = chart_form_matrix(nu, cocycle, sign);
    // δρ = K₂ X, so the form on ρ-vectors is K₂^{-T} K₂ K₂^{-1} = K₂^{-T}.
    k2.transpose()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()) && k2.determinant().abs() > DEFAULT_TOL)
        .ok_or(PoissonError::SingularForm {
            matrix: [[k2[(0, 0)], k2[(0, 1)]], [k2[(1, 0)], k2[(1, 1)]]],
        })
}

/// Matrix of `ω^±_O ⊕ ω_V` on flat chart vectors `[δρ, δθ, δλ]`.
pub fn extended_orbit_form_matrix(
    p: &OrbitPoint,
    cocycle: &MagneticCocycle,
    sign: BracketSign,
) -> Result<DMatrix<f64>, PoissonError> {
    let planar = planar_form_in_rho(p.nu, cocycle, sign)?;
    let k = p.k();
    let mut m = DMatrix::zeros(2 + 2 * k, 2 + 2 * k);
    m.view_mut((0, 0), (2, 2)).copy_from(&planar);
    for i in 0..k {
        // ω_V((θ1, λ1), (θ2, λ2)) = ⟨λ2, θ1⟩ − ⟨λ1, θ2⟩
        m[(2 + i, 2 + k + i)] = 1.0;
        m[(2 + k + i, 2 + i)] = -1.0;
    }
    Ok(m)
}

/// Evaluates `ω̃^±` on two chart tangent vectors. On a point orbit the
/// planar part is identically zero and only `ω_V` contributes.
pub fn evaluate_extended_orbit_form(
    p: &OrbitPoint,
    v1: &OrbitVector,
    v2: &OrbitVector,
    cocycle: &MagneticCocycle,
    sign: BracketSign,
) -> Result<f64, PoissonError> {
    let k = p.k();
    if v1.k() != k || v2.k() != k {
        return Err(PoissonError::DimensionMismatch {
            expected: k,
            actual: v1.k().max(v2.k()),
        });
    }
    let planar = match planar_form_in_rho(p.nu, cocycle, sign) {
        Ok(m) => {
            let a = nalgebra::Vector2::new(v1.d_rho.x1, v1.d_rho.x2);
            let b = nalgebra::Vector2::new(v2.d_rho.x1, v2.d_rho.x2);
            a.dot(&(m * b))
        }
        Err(PoissonError::SingularForm { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let canonical = v2.d_lambda.dot(&v1.d_theta) - v1.d_lambda.dot(&v2.d_theta);
    Ok(planar + canonical)
}

/// Solves `i_X ω̃^± = dh` at `p` in the orbit chart.
pub fn orbit_hamiltonian_vector_field(
    h: &OrbitFunction,
    p: &OrbitPoint,
    cocycle: &MagneticCocycle,
    sign: BracketSign,
) -> Result<OrbitVector, PoissonError> {
    let omega = extended_orbit_form_matrix(p, cocycle, sign)?;
    let grad = h.gradient(p).to_flat();
    // i_X ω = dh  ⇔  ωᵀ X = ∇h
    let x = omega
        .transpose()
        .lu()
        .solve(&grad)
        .ok_or_else(|| PoissonError::SingularForm {
            matrix: [[omega[(0, 0)], omega[(0, 1)]], [omega[(1, 0)], omega[(1, 1)]]],
        })?;
    Ok(OrbitVector::from_flat(&x))
}

/// Canonical Hamiltonian field on `V × V*` alone: `θ̇ = ∂h/∂λ`, `λ̇ = −∂h/∂θ`.
pub fn canonical_v_field(grad: &OrbitVector) -> OrbitVector {
    OrbitVector {
        d_rho: Vec2::ZERO,
        d_theta: grad.d_lambda.clone(),
        d_lambda: -grad.d_theta.clone(),
    }
}
