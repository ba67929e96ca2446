use approx::assert_abs_diff_eq;
use heisenberg_rch::heisenberg::{bracket, coad_star, exp, AlgebraElement, CoAlgebraElement, GroupElement};
use heisenberg_rch::numerics::{fd_directional, TANGENT_STEP};
use nalgebra::DVector;
use proptest::prelude::*;

fn group() -> impl Strategy<Value = GroupElement> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| GroupElement::new(a, b, c))
}

fn algebra() -> impl Strategy<Value = AlgebraElement> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| AlgebraElement::new(a, b, c))
}

fn coalgebra() -> impl Strategy<Value = CoAlgebraElement> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| CoAlgebraElement::new(a, b, c))
}

fn close(a: GroupElement, b: GroupElement) -> bool {
    (a.to_vector() - b.to_vector()).amax() <= 1e-12
}

proptest! {
    #[test]
    fn multiplication_is_associative(g in group(), h in group(), k in group()) {
        prop_assert!(close(g.multiply(h).multiply(k), g.multiply(h.multiply(k))));
    }

    #[test]
    fn inverse_and_identity(g in group()) {
        prop_assert!(close(g.multiply(g.inverse()), GroupElement::IDENTITY));
        prop_assert!(close(g.inverse().multiply(g), GroupElement::IDENTITY));
        prop_assert!(close(g.multiply(GroupElement::IDENTITY), g));
    }

    #[test]
    fn matrix_embedding_is_an_injective_homomorphism(g in group(), h in group()) {
        prop_assert!((g.multiply(h).to_matrix() - g.to_matrix() * h.to_matrix()).amax() <= 1e-12);
        prop_assert!(close(GroupElement::from_matrix(&g.to_matrix()), g));
    }

    #[test]
    fn adjoint_is_linear_and_composes(g in group(), h in group(), xi in algebra(), eta in algebra(), s in -2.0..2.0f64) {
        let lhs = g.adjoint(AlgebraElement::from_vector(&(xi.to_vector() * s + eta.to_vector())));
        let rhs = g.adjoint(xi).to_vector() * s + g.adjoint(eta).to_vector();
        prop_assert!((lhs.to_vector() - rhs).amax() <= 1e-12);
        prop_assert!(g.multiply(h).adjoint(xi).approx_eq(g.adjoint(h.adjoint(xi)), 1e-12));
    }

    #[test]
    fn coadjoint_is_a_left_action(g in group(), h in group(), p in coalgebra()) {
        prop_assert!(g.multiply(h).coadjoint(p).approx_eq(g.coadjoint(h.coadjoint(p)), 1e-12));
        prop_assert!((g.coadjoint(p).pair(AlgebraElement::new(0.3, -0.7, 1.1))
            - p.pair(g.inverse().adjoint(AlgebraElement::new(0.3, -0.7, 1.1)))).abs() <= 1e-12);
    }

    #[test]
    fn bracket_is_antisymmetric_and_nested_brackets_vanish(a in algebra(), b in algebra(), c in algebra()) {
        prop_assert!(bracket(a, b).approx_eq(bracket(b, a).scale(-1.0), 1e-12));
        let jacobi = bracket(a, bracket(b, c)).to_vector()
            + bracket(b, bracket(c, a)).to_vector()
            + bracket(c, bracket(a, b)).to_vector();
        prop_assert_eq!(jacobi.amax(), 0.0);
        prop_assert_eq!(bracket(a, bracket(b, c)).to_vector().amax(), 0.0);
    }

    #[test]
    fn differentials_match_finite_differences(g in group(), xi in algebra(), p in coalgebra()) {
        let t0 = DVector::from_element(1, 0.0);
        let dt = DVector::from_element(1, 1.0);
        let conj = |t: &DVector<f64>| DVector::from_column_slice(g.conjugate(exp(xi.scale(t[0]))).to_vector().as_slice());
        let fd = fd_directional(conj, &t0, &dt, TANGENT_STEP);
        prop_assert!((fd - DVector::from_column_slice(g.adjoint(xi).to_vector().as_slice())).amax() <= 1e-8);
        let orbit = |t: &DVector<f64>| DVector::from_column_slice(exp(xi.scale(-t[0])).coadjoint(p).to_vector().as_slice());
        let fd = fd_directional(orbit, &t0, &dt, TANGENT_STEP);
        prop_assert!((fd - DVector::from_column_slice(coad_star(xi, p).to_vector().as_slice())).amax() <= 1e-8);
    }
}

#[test]
fn group_law_example() {
    // (1,0,0)(0,1,0) = (1,1,½) with α + β + ½ ω(u, v).
    let g = GroupElement::new(1.0, 0.0, 0.0).multiply(GroupElement::new(0.0, 1.0, 0.0));
    assert_abs_diff_eq!(g.alpha, 0.5, epsilon = 1e-15);
    assert_eq!((g.u.x1, g.u.x2), (1.0, 1.0));
}
