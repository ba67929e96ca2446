//! The Heisenberg group `R² ⊕ R`, its Lie algebra, the dual, and the
//! (co)adjoint representations.
//!
//! Everything lives in the single global chart `(u1, u2, α)`. Algebra and
//! coalgebra elements are identified with `R³` through the Euclidean pairing.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Default absolute tolerance for algebraic identities.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    /// `J(u1, u2) = (u2, -u1)`, the matrix of the standard area form.
    pub fn symplectic_j(self) -> Vec2 {
        Vec2::new(self.x2, -self.x1)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn approx_eq(self, other: Vec2, tol: f64) -> bool {
        (self.x1 - other.x1).abs() <= tol && (self.x2 - other.x2).abs() <= tol
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self * rhs.x1, self * rhs.x2)
    }
}

/// The fixed matrix `[[0, 1], [-1, 0]]` of the area form.
pub const SYMPLECTIC_J: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

/// Standard area form `u1 v2 - u2 v1` on the plane.
pub fn area_form(u: Vec2, v: Vec2) -> f64 {
    u.x1 * v.x2 - u.x2 * v.x1
}

/// A point `(u, α)` of the group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub u: Vec2,
    pub alpha: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        u: Vec2::ZERO,
        alpha: 0.0,
    };

    pub const fn new(u1: f64, u2: f64, alpha: f64) -> Self {
        Self {
            u: Vec2::new(u1, u2),
            alpha,
        }
    }

    /// The central element `(0, α)`.
    pub const fn central(alpha: f64) -> Self {
        Self::new(0.0, 0.0, alpha)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.u.x1, self.u.x2, self.alpha)
    }

    pub fn is_central(self) -> bool {
        self.u == Vec2::ZERO
    }

    pub fn multiply(self, h: GroupElement) -> GroupElement {
        GroupElement {
            u: self.u + h.u,
            alpha: self.alpha + h.alpha + 0.5 * area_form(self.u, h.u),
        }
    }

    pub fn inverse(self) -> GroupElement {
        GroupElement {
            u: -self.u,
            alpha: -self.alpha,
        }
    }

    /// Upper unitriangular matrix image; a group homomorphism.
    pub fn to_matrix(self) -> Matrix3<f64> {
        let (u1, u2) = (self.u.x1, self.u.x2);
        Matrix3::new(1.0, u1, self.alpha + 0.5 * u1 * u2, 0.0, 1.0, u2, 0.0, 0.0, 1.0)
    }

    /// Inverse of [`GroupElement::to_matrix`]. Ignores entries below the diagonal.
    pub fn from_matrix(m: &Matrix3<f64>) -> GroupElement {
        let (u1, u2) = (m[(0, 1)], m[(1, 2)]);
        GroupElement::new(u1, u2, m[(0, 2)] - 0.5 * u1 * u2)
    }

    /// Inner automorphism `h ↦ self · h · self⁻¹`.
    pub fn conjugate(self, h: GroupElement) -> GroupElement {
        GroupElement {
            u: h.u,
            alpha: h.alpha + area_form(self.u, h.u),
        }
    }

    /// `Ad_g ξ`.
    pub fn adjoint(self, xi: AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            x: xi.x,
            a: xi.a + area_form(self.u, xi.x),
        }
    }

    /// Left coadjoint action `Ad*_{g⁻¹}(μ, ν) = (μ + ν J u, ν)`.
    ///
    /// Satisfies `⟨coadjoint(g, p), ξ⟩ = ⟨p, Ad_{g⁻¹} ξ⟩` and
    /// `coadjoint(g h, p) = coadjoint(g, coadjoint(h, p))`.
    pub fn coadjoint(self, p: CoAlgebraElement) -> CoAlgebraElement {
        CoAlgebraElement {
            mu: p.mu + p.nu * self.u.symplectic_j(),
            nu: p.nu,
        }
    }

    /// Tangent of left translation `T_q L_self` in the global chart.
    /// Independent of the base point `q`.
    pub fn left_translation_tangent(self) -> Matrix3<f64> {
        let (w1, w2) = (self.u.x1, self.u.x2);
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -0.5 * w2, 0.5 * w1, 1.0)
    }

    /// `T_e L_self`, the map from the algebra to the tangent space at `self`.
    /// Body momenta are `ρ = (T_e L_g)ᵀ p`.
    pub fn body_frame(self) -> Matrix3<f64> {
        self.left_translation_tangent()
    }

    pub fn is_finite(self) -> bool {
        self.u.is_finite() && self.alpha.is_finite()
    }

    pub fn approx_eq(self, other: GroupElement, tol: f64) -> bool {
        self.u.approx_eq(other.u, tol) && (self.alpha - other.alpha).abs() <= tol
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.multiply(rhs)
    }
}

/// An element `(X, a)` of the Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub x: Vec2,
    pub a: f64,
}

impl AlgebraElement {
    pub const ZERO: AlgebraElement = AlgebraElement { x: Vec2::ZERO, a: 0.0 };

    pub const fn new(x1: f64, x2: f64, a: f64) -> Self {
        Self {
            x: Vec2::new(x1, x2),
            a,
        }
    }

    pub fn basis(i: usize) -> Self {
        let mut v = Vector3::zeros();
        v[i] = 1.0;
        Self::from_vector(&v)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x.x1, self.x.x2, self.a)
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            x: s * self.x,
            a: s * self.a,
        }
    }

    pub fn approx_eq(self, other: AlgebraElement, tol: f64) -> bool {
        self.x.approx_eq(other.x, tol) && (self.a - other.a).abs() <= tol
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> Self {
        Self {
            x: self.x + rhs.x,
            a: self.a + rhs.a,
        }
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> Self {
        Self {
            x: self.x - rhs.x,
            a: self.a - rhs.a,
        }
    }
}

/// An element `(μ, ν)` of the dual algebra.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoAlgebraElement {
    pub mu: Vec2,
    pub nu: f64,
}

impl CoAlgebraElement {
    pub const ZERO: CoAlgebraElement = CoAlgebraElement {
        mu: Vec2::ZERO,
        nu: 0.0,
    };

    pub const fn new(mu1: f64, mu2: f64, nu: f64) -> Self {
        Self {
            mu: Vec2::new(mu1, mu2),
            nu,
        }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.mu.x1, self.mu.x2, self.nu)
    }

    /// Natural pairing with an algebra element.
    pub fn pair(self, xi: AlgebraElement) -> f64 {
        self.mu.dot(xi.x) + self.nu * xi.a
    }

    pub fn distance(self, other: CoAlgebraElement) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    pub fn approx_eq(self, other: CoAlgebraElement, tol: f64) -> bool {
        self.mu.approx_eq(other.mu, tol) && (self.nu - other.nu).abs() <= tol
    }
}

impl Add for CoAlgebraElement {
    type Output = CoAlgebraElement;
    fn add(self, rhs: Self) -> Self {
        Self {
            mu: self.mu + rhs.mu,
            nu: self.nu + rhs.nu,
        }
    }
}

impl Sub for CoAlgebraElement {
    type Output = CoAlgebraElement;
    fn sub(self, rhs: Self) -> Self {
        Self {
            mu: self.mu - rhs.mu,
            nu: self.nu - rhs.nu,
        }
    }
}

/// Lie bracket `[(X, a), (Y, b)] = (0, ω(X, Y))`.
pub fn bracket(xi: AlgebraElement, eta: AlgebraElement) -> AlgebraElement {
    AlgebraElement {
        x: Vec2::ZERO,
        a: area_form(xi.x, eta.x),
    }
}

/// Infinitesimal coadjoint action: `⟨ad*_ξ p, η⟩ = ⟨p, [ξ, η]⟩`.
pub fn coad_star(xi: AlgebraElement, p: CoAlgebraElement) -> CoAlgebraElement {
    CoAlgebraElement {
        mu: Vec2::new(-p.nu * xi.x.x2, p.nu * xi.x.x1),
        nu: 0.0,
    }
}

/// The exponential map, which is the identity of `R³` in this chart.
pub fn exp(xi: AlgebraElement) -> GroupElement {
    GroupElement { u: xi.x, alpha: xi.a }
}

/// `T_g R_h v`: pushes the tangent vector `v` at `g` to `g · h`.
pub fn tangent_right_translation(_g: GroupElement, v: AlgebraElement, h: GroupElement) -> AlgebraElement {
    AlgebraElement {
        x: v.x,
        a: v.a + 0.5 * area_form(v.x, h.u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_form_values() {
        assert_eq!(area_form(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)), 1.0);
        assert_eq!(area_form(Vec2::new(1.0, 2.0), Vec2::new(3.0, 4.0)), -2.0);
        let u = Vec2::new(0.3, -7.0);
        assert_eq!(area_form(u, u), 0.0);
    }

    #[test]
    fn multiply_examples() {
        let g = GroupElement::new(1.0, 0.0, 0.0);
        let h = GroupElement::new(0.0, 1.0, 0.0);
        assert_eq!(g * h, GroupElement::new(1.0, 1.0, 0.5));
        assert_eq!(GroupElement::IDENTITY * h, h);
        let c = GroupElement::central(2.5);
        let v = GroupElement::new(-1.0, 4.0, 0.25);
        assert_eq!(c * v, GroupElement::new(-1.0, 4.0, 2.75));
        assert_eq!(c * v, v * c);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            GroupElement::new(2.0, 3.0, 5.0).inverse(),
            GroupElement::new(-2.0, -3.0, -5.0)
        );
        assert_eq!(GroupElement::IDENTITY.inverse(), GroupElement::IDENTITY);
    }

    #[test]
    fn matrix_examples() {
        let m = GroupElement::new(1.0, 2.0, 0.0).to_matrix();
        assert_eq!(m, Matrix3::new(1.0, 1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0));
        assert_eq!(GroupElement::IDENTITY.to_matrix(), Matrix3::identity());
        let g = GroupElement::new(0.4, -1.5, 3.0);
        assert!(GroupElement::from_matrix(&g.to_matrix()).approx_eq(g, 1e-15));
    }

    #[test]
    fn conjugate_examples() {
        let g = GroupElement::new(1.0, 0.0, 0.0);
        let h = GroupElement::new(0.0, 1.0, 0.0);
        assert_eq!(g.conjugate(h), GroupElement::new(0.0, 1.0, 1.0));
        assert_eq!(GroupElement::IDENTITY.conjugate(h), h);
        let c = GroupElement::central(-3.0);
        assert_eq!(GroupElement::new(5.0, 1.0, 2.0).conjugate(c), c);
    }

    #[test]
    fn adjoint_examples() {
        let g = GroupElement::new(1.0, 2.0, 7.0);
        let xi = AlgebraElement::new(3.0, 4.0, 0.0);
        assert_eq!(g.adjoint(xi), AlgebraElement::new(3.0, 4.0, -2.0));
        assert_eq!(GroupElement::IDENTITY.adjoint(xi), xi);
    }

    #[test]
    fn bracket_examples() {
        let xi = AlgebraElement::new(1.0, 0.0, 5.0);
        let eta = AlgebraElement::new(0.0, 1.0, 9.0);
        assert_eq!(bracket(xi, eta), AlgebraElement::new(0.0, 0.0, 1.0));
        assert_eq!(bracket(xi, xi), AlgebraElement::ZERO);
        let zeta = AlgebraElement::new(-2.0, 3.0, 1.0);
        assert_eq!(bracket(bracket(xi, eta), zeta), AlgebraElement::ZERO);
    }

    #[test]
    fn coadjoint_examples() {
        let g = GroupElement::new(1.0, 2.0, 0.0);
        let p = CoAlgebraElement::new(0.0, 0.0, 3.0);
        assert_eq!(g.coadjoint(p), CoAlgebraElement::new(6.0, -3.0, 3.0));
        let fixed = CoAlgebraElement::new(3.0, 4.0, 0.0);
        assert_eq!(g.coadjoint(fixed), fixed);
    }

    #[test]
    fn coad_star_examples() {
        let xi = AlgebraElement::new(1.0, 0.0, 0.0);
        let p = CoAlgebraElement::new(0.0, 0.0, 2.0);
        assert_eq!(coad_star(xi, p), CoAlgebraElement::new(0.0, 2.0, 0.0));
        let flat = CoAlgebraElement::new(1.0, -1.0, 0.0);
        assert_eq!(
            coad_star(AlgebraElement::new(3.0, 2.0, 1.0), flat),
            CoAlgebraElement::ZERO
        );
    }

    #[test]
    fn exp_examples() {
        assert_eq!(
            exp(AlgebraElement::new(1.0, 2.0, 3.0)),
            GroupElement::new(1.0, 2.0, 3.0)
        );
        assert_eq!(exp(AlgebraElement::ZERO), GroupElement::IDENTITY);
        let xi = AlgebraElement::new(0.7, -0.2, 1.1);
        let lhs = exp(xi.scale(0.3)) * exp(xi.scale(1.2));
        assert!(lhs.approx_eq(exp(xi.scale(1.5)), 1e-15));
    }

    #[test]
    fn right_translation_examples() {
        let g = GroupElement::new(1.0, 0.0, 4.0);
        let v = AlgebraElement::new(0.0, 2.0, 3.0);
        assert_eq!(
            tangent_right_translation(g, v, g.inverse()),
            AlgebraElement::new(0.0, 2.0, 4.0)
        );
        assert_eq!(tangent_right_translation(g, v, GroupElement::IDENTITY), v);
    }

    #[test]
    fn left_translation_tangent_matches_body_momentum_convention() {
        // ρ = (T_e L_g)ᵀ p for g.u = (2, 0), p = e3 gives ρ = (0, 1, 1).
        let g = GroupElement::new(2.0, 0.0, 0.0);
        let rho = g.body_frame().transpose() * Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(rho, Vector3::new(0.0, 1.0, 1.0));
    }
}
