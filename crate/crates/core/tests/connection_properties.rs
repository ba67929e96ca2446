use heisenberg_rch::connection::{
    curvature, curvature_cocycle, infinitesimal_generator, mechanical_connection, nu_component, right_invariant_metric,
};
use heisenberg_rch::heisenberg::{tangent_right_translation, AlgebraElement, GroupElement};
use heisenberg_rch::poisson::MagneticCocycle;
use proptest::prelude::*;

fn group() -> impl Strategy<Value = GroupElement> {
    prop::array::uniform3(-3.0..3.0f64).prop_map(|[a, b, c]| GroupElement::new(a, b, c))
}

fn tangent() -> impl Strategy<Value = AlgebraElement> {
    prop::array::uniform3(-2.0..2.0f64).prop_map(|[a, b, c]| AlgebraElement::new(a, b, c))
}

proptest! {
    #[test]
    fn metric_is_symmetric_bilinear_and_positive(g in group(), v in tangent(), w in tangent(), z in tangent(), s in -2.0..2.0f64) {
        prop_assert!((right_invariant_metric(g, v, w) - right_invariant_metric(g, w, v)).abs() <= 1e-12);
        let sv_plus_z = AlgebraElement::from_vector(&(v.to_vector() * s + z.to_vector()));
        let lhs = right_invariant_metric(g, sv_plus_z, w);
        let rhs = s * right_invariant_metric(g, v, w) + right_invariant_metric(g, z, w);
        prop_assert!((lhs - rhs).abs() <= 1e-11);
        if v.to_vector().norm() > 1e-3 {
            prop_assert!(right_invariant_metric(g, v, v) > 0.0);
        }
    }

    #[test]
    fn metric_is_right_invariant(g in group(), h in group(), v in tangent(), w in tangent()) {
        let (tv, tw) = (tangent_right_translation(g, v, h), tangent_right_translation(g, w, h));
        let moved = right_invariant_metric(g.multiply(h), tv, tw);
        prop_assert!((moved - right_invariant_metric(g, v, w)).abs() <= 1e-12 * (1.0 + moved.abs()));
    }

    #[test]
    fn connection_axiom_is_exact(g in group(), a in -3.0..3.0f64) {
        prop_assert_eq!(mechanical_connection(g, infinitesimal_generator(g, a)), a);
    }

    #[test]
    fn curvature_sees_only_horizontal_parts(g in group(), h in group(), v in tangent(), w in tangent(), a in -2.0..2.0f64) {
        let shifted = AlgebraElement { a, ..v };
        prop_assert_eq!(curvature(g, v, w), curvature(h, shifted, w));
    }

    #[test]
    fn nu_component_matches_the_area_cocycle(nu in -3.0..3.0f64, v in tangent(), w in tangent()) {
        let cocycle = MagneticCocycle::area_block(nu);
        let direct = nu_component(nu, GroupElement::IDENTITY, v, w);
        prop_assert!((direct - cocycle.eval(v, w)).abs() <= 1e-12);
        prop_assert_eq!(curvature_cocycle(nu), cocycle);
    }
}
