//! Right-invariant metric on the group and the mechanical connection of the
//! bundle `H → R²` (quotient by the center). Tangent vectors at `g` are
//! written in the global chart as `AlgebraElement`s `(X, a)`.

use std::sync::Arc;

use nalgebra::Matrix3;

use crate::heisenberg::{area_form, AlgebraElement, GroupElement, Vec2};
use crate::poisson::MagneticCocycle;

/// `⟪v, w⟫_g`, the right translate of the Euclidean product on the algebra.
pub fn right_invariant_metric(g: GroupElement, v: AlgebraElement, w: AlgebraElement) -> f64 {
    let u = g.u;
    let (wx, wy) = (area_form(v.x, u), area_form(w.x, u));
    v.x.dot(w.x) + v.a * w.a - 0.5 * v.a * wy - 0.5 * w.a * wx + 0.25 * wx * wy
}

/// Generator of the right action of the center: `a_H(g) = (0, a)`.
pub fn infinitesimal_generator(_g: GroupElement, a: f64) -> AlgebraElement {
    AlgebraElement::new(0.0, 0.0, a)
}

/// `I(g)(a, b) = ⟪a_H(g), b_H(g)⟫_g = ab`.
pub fn locked_inertia(_g: GroupElement, a: f64, b: f64) -> f64 {
    a * b
}

/// Momentum map of the center action paired with `b`.
pub fn center_momentum_map(g: GroupElement, v: AlgebraElement, b: f64) -> f64 {
    mechanical_connection(g, v) * b
}

/// `A(g)(v) = a − ½ ω(X, u)`. The locked inertia is 1, so this is also the
/// momentum map of `v`.
pub fn mechanical_connection(g: GroupElement, v: AlgebraElement) -> f64 {
    v.a - 0.5 * area_form(v.x, g.u)
}

/// `B(g)(v, w) = dA(v, w) = ω(X, Y)`.
pub fn curvature(_g: GroupElement, v: AlgebraElement, w: AlgebraElement) -> f64 {
    area_form(v.x, w.x)
}

/// `B^ν = ν B`.
pub fn nu_component(nu: f64, g: GroupElement, v: AlgebraElement, w: AlgebraElement) -> f64 {
    nu * curvature(g, v, w)
}

/// The constant algebra cocycle obtained by evaluating `B^ν` at the identity.
pub fn curvature_cocycle(nu: f64) -> MagneticCocycle {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = nu_component(
                nu,
                GroupElement::IDENTITY,
                AlgebraElement::basis(i),
                AlgebraElement::basis(j),
            );
        }
    }
    MagneticCocycle::new(m).expect("curvature is antisymmetric")
}

/// A principal connection one-form on `H → R²`.
#[derive(Clone)]
pub struct ConnectionOneForm {
    form: Arc<dyn Fn(GroupElement, AlgebraElement) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ConnectionOneForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ConnectionOneForm")
    }
}

impl ConnectionOneForm {
    pub fn new(form: impl Fn(GroupElement, AlgebraElement) -> f64 + Send + Sync + 'static) -> Self {
        Self { form: Arc::new(form) }
    }

    pub fn mechanical() -> Self {
        Self::new(mechanical_connection)
    }

    pub fn evaluate(&self, g: GroupElement, v: AlgebraElement) -> f64 {
        (self.form)(g, v)
    }

    /// `|A(g)(a_H(g)) − a|`.
    pub fn axiom_residual(&self, g: GroupElement, a: f64) -> f64 {
        (self.evaluate(g, infinitesimal_generator(g, a)) - a).abs()
    }
}

/// Horizontal lift of a base velocity `X` at `g`: the unique tangent vector
/// over `X` annihilated by the mechanical connection.
pub fn horizontal_lift(g: GroupElement, x: Vec2) -> AlgebraElement {
    AlgebraElement {
        x,
        a: 0.5 * area_form(x, g.u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::tangent_right_translation;
    use crate::numerics::{fd_exterior_derivative_1form, random_algebra, random_group, sweep_rng, TANGENT_STEP};
    use nalgebra::DVector;

    #[test]
    fn metric_example() {
        let g = GroupElement::new(1.0, 0.0, 0.0);
        let v = AlgebraElement::new(0.0, 1.0, 0.0);
        assert_eq!(right_invariant_metric(g, v, v), 1.25);
        let id = GroupElement::IDENTITY;
        let (a, b) = (AlgebraElement::new(1.0, 2.0, 3.0), AlgebraElement::new(-1.0, 0.5, 2.0));
        assert_eq!(right_invariant_metric(id, a, b), -1.0 + 1.0 + 6.0);
    }

    #[test]
    fn metric_is_right_translated_euclidean() {
        let mut rng = sweep_rng(3);
        for _ in 0..1000 {
            let g = random_group(&mut rng, 3.0);
            let (v, w) = (random_algebra(&mut rng, 2.0), random_algebra(&mut rng, 2.0));
            let tv = tangent_right_translation(g, v, g.inverse()).to_vector();
            let tw = tangent_right_translation(g, w, g.inverse()).to_vector();
            assert!((right_invariant_metric(g, v, w) - tv.dot(&tw)).abs() < 1e-12);
        }
    }

    #[test]
    fn connection_examples() {
        let g = GroupElement::new(1.0, 0.0, 0.0);
        let v = AlgebraElement::new(0.0, 2.0, 3.0);
        assert_eq!(center_momentum_map(g, v, 1.0), 4.0);
        assert_eq!(mechanical_connection(g, v), 4.0);
        assert_eq!(locked_inertia(g, 2.0, 3.0), 6.0);
        assert_eq!(ConnectionOneForm::mechanical().axiom_residual(g, 2.5), 0.0);
        assert_eq!(mechanical_connection(g, horizontal_lift(g, Vec2::new(0.3, -1.0))), 0.0);
    }

    #[test]
    fn curvature_matches_fd_exterior_derivative() {
        let mut rng = sweep_rng(8);
        let alpha = |x: &DVector<f64>, v: &DVector<f64>| {
            mechanical_connection(
                GroupElement::new(x[0], x[1], x[2]),
                AlgebraElement::new(v[0], v[1], v[2]),
            )
        };
        for _ in 0..100 {
            let g = random_group(&mut rng, 2.0);
            let (v, w) = (random_algebra(&mut rng, 1.0), random_algebra(&mut rng, 1.0));
            let x = DVector::from_column_slice(g.to_vector().as_slice());
            let dv = DVector::from_column_slice(v.to_vector().as_slice());
            let dw = DVector::from_column_slice(w.to_vector().as_slice());
            let fd = fd_exterior_derivative_1form(alpha, &x, &dv, &dw, TANGENT_STEP);
            assert!((fd - curvature(g, v, w)).abs() < 1e-6);
        }
    }

    #[test]
    fn nu_component_reproduces_area_cocycle() {
        assert_eq!(curvature_cocycle(1.0), MagneticCocycle::area_block(1.0));
        let v = AlgebraElement::new(1.0, 0.0, 0.0);
        let w = AlgebraElement::new(0.0, 1.0, 0.0);
        assert_eq!(nu_component(3.0, GroupElement::IDENTITY, v, w), 3.0);
    }
}
