use heisenberg_rch::heisenberg::{AlgebraElement, CoAlgebraElement};
use heisenberg_rch::poisson::{
    chart_form_matrix, check_jacobi, magnetic_lie_poisson, orbit_symplectic_form, BracketSign, DualFunction,
    MagneticCocycle, OrbitPoint,
};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn quadratic() -> impl Strategy<Value = DualFunction> {
    (
        prop::array::uniform9(-0.5..0.5f64),
        prop::array::uniform3(-0.5..0.5f64),
        -0.5..0.5f64,
    )
        .prop_map(|(q, b, c)| DualFunction::quadratic(Matrix3::from_row_slice(&q), Vector3::from(b), c))
}

fn point() -> impl Strategy<Value = CoAlgebraElement> {
    (-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64).prop_map(|(a, b, c)| CoAlgebraElement::new(a, b, c))
}

fn cocycle() -> impl Strategy<Value = MagneticCocycle> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_map(|[a, b, c]| MagneticCocycle::new(Matrix3::new(0.0, a, b, -a, 0.0, c, -b, -c, 0.0)).unwrap())
}

fn sign() -> impl Strategy<Value = BracketSign> {
    prop_oneof![Just(BracketSign::Minus), Just(BracketSign::Plus)]
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric(f in quadratic(), g in quadratic(), p in point(), c in cocycle(), s in sign()) {
        let fg = magnetic_lie_poisson(&f, &g, &p, &c, s);
        let gf = magnetic_lie_poisson(&g, &f, &p, &c, s);
        prop_assert!((fg + gf).abs() <= 1e-12);
    }

    #[test]
    fn leibniz_rule(f in quadratic(), g in quadratic(), h in quadratic(), p in point(), c in cocycle(), s in sign()) {
        let fg = f.product(&g);
        let lhs = magnetic_lie_poisson(&fg, &h, &p, &c, s);
        let rhs = f.evaluate(&p) * magnetic_lie_poisson(&g, &h, &p, &c, s)
            + g.evaluate(&p) * magnetic_lie_poisson(&f, &h, &p, &c, s);
        prop_assert!((lhs - rhs).abs() <= 1e-8);
    }

    #[test]
    fn jacobi_for_polynomials(f in quadratic(), g in quadratic(), h in quadratic(), p in point(), c in cocycle(), s in sign()) {
        let report = check_jacobi([&f, &g, &h], &p, &c, s);
        prop_assert!(!report.degraded);
        prop_assert!(report.residual <= 1e-9, "{}", report.residual);
    }

    #[test]
    fn nu_is_a_casimir_without_field(f in quadratic(), p in point(), s in sign()) {
        let nu = DualFunction::coordinate(2);
        prop_assert!(magnetic_lie_poisson(&f, &nu, &p, &MagneticCocycle::zero(), s).abs() <= 1e-12);
    }

    #[test]
    fn orbit_form_is_antisymmetric_and_nondegenerate(
        rho in prop::array::uniform2(-2.0..2.0f64),
        nu in prop_oneof![-2.0..-0.1f64, 0.1..2.0f64],
        xi in prop::array::uniform3(-1.0..1.0f64),
        eta in prop::array::uniform3(-1.0..1.0f64),
        s in sign(),
    ) {
        let o = OrbitPoint::from_coalgebra(CoAlgebraElement::new(rho[0], rho[1], nu));
        let (a, b) = (AlgebraElement::new(xi[0], xi[1], xi[2]), AlgebraElement::new(eta[0], eta[1], eta[2]));
        let zero = MagneticCocycle::zero();
        let ab = orbit_symplectic_form(&o, a, b, &zero, s).value;
        let ba = orbit_symplectic_form(&o, b, a, &zero, s).value;
        prop_assert!((ab + ba).abs() <= 1e-12);
        prop_assert!((chart_form_matrix(nu, &zero, s).determinant() - nu * nu).abs() <= 1e-10);
    }
}
