use approx::assert_relative_eq;
use loxo_core::flat_model::LoxodromeSpec;
use loxo_core::mobius::MobiusStructure;
use loxo_core::tensor::MetricField;
use loxo_core::verify::{
    apply_partial_residual, bundle_b_norm_residual, bundle_b_transform_residual, direct_check_residual,
    lift_equivariance_residual, partial_psi_residual, partial_xi_residual, tractor_cocycle_residual,
};
use loxo_core::{classify, integrate, parse, Expr, Func, IntegratorConfig, Jet, KinematicState, Model, Scheme, Var};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Law = fn(&mut ChaCha8Rng) -> loxo_core::Result<f64>;

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-2.0..2.0f64).prop_map(Expr::num), Just(Expr::var(Var::X)), Just(Expr::var(Var::Y)),];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(b)),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| a.pow(2.0)),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner.prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
        ]
    })
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-1.0..1.0f64, -1.0..1.0f64]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn printing_round_trips(e in expr(), x in point()) {
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        prop_assert!(close(back.evaluate(&x).unwrap(), e.evaluate(&x).unwrap()), "{printed}");
        let again = back.to_string();
        prop_assert_eq!(parse(&again).unwrap().to_string(), again);
    }

    #[test]
    fn differentiation_is_linear(a in expr(), b in expr(), c in -3.0..3.0f64, x in point()) {
        let lhs = a.clone().add(Expr::num(c).mul(b.clone())).differentiate(Var::X).evaluate(&x).unwrap();
        let rhs = a.differentiate(Var::X).evaluate(&x).unwrap() + c * b.differentiate(Var::X).evaluate(&x).unwrap();
        prop_assert!(close(lhs, rhs));
    }

    #[test]
    fn mixed_partials_commute(e in expr(), x in point()) {
        let xy = e.differentiate(Var::X).differentiate(Var::Y).evaluate(&x).unwrap();
        let yx = e.differentiate(Var::Y).differentiate(Var::X).evaluate(&x).unwrap();
        prop_assert!(close(xy, yx));
    }

    #[test]
    fn jets_match_symbolic_derivatives(e in expr(), x in point()) {
        let jx = e.evaluate_real(&[Jet::<3>::variable(x[0]), Jet::constant(x[1])]).unwrap();
        let d1 = e.differentiate(Var::X);
        let d2 = d1.differentiate(Var::X);
        prop_assert!(close(jx.value(), e.evaluate(&x).unwrap()));
        prop_assert!(close(jx.nth_derivative(1), d1.evaluate(&x).unwrap()));
        prop_assert!(close(jx.nth_derivative(2), d2.evaluate(&x).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tractor_identities_hold(seed in any::<u64>()) {
        let laws: [(&str, Law); 8] = [
            ("cocycle", tractor_cocycle_residual),
            ("direct check", direct_check_residual),
            ("bundle transform", bundle_b_transform_residual),
            ("partial psi", partial_psi_residual),
            ("partial xi", partial_xi_residual),
            ("apply partial", apply_partial_residual),
            ("lift equivariance", lift_equivariance_residual),
            ("bundle norm", bundle_b_norm_residual),
        ];
        for (name, law) in laws {
            let r = law(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert!(r < 1e-9, "{name}: {r:e}");
        }
    }

    #[test]
    fn flows_compose(
        k in [-1.0..1.0f64, -1.0..1.0, -1.0..1.0, -1.0..1.0, -1.0..1.0, -1.0..1.0],
        t1 in -0.3..0.3f64,
        t2 in -0.3..0.3f64,
        z in [-0.5..0.5f64, -0.5..0.5],
    ) {
        let k = loxo_core::KillingCoefficients { u: k[0], v: k[1], lambda: k[2], f: k[3], p: k[4], q: k[5] };
        let z0 = Complex64::new(z[0], z[1]);
        let once = k.flow(t1 + t2, z0).unwrap();
        let twice = k.flow(t2, k.flow(t1, z0).unwrap()).unwrap();
        prop_assert!((once - twice).norm() < 1e-9 * (1.0 + once.norm()));
    }

    #[test]
    fn loxodromes_classify_with_their_bearing(
        p in [-1.0..1.0f64, -1.0..1.0],
        dq in [0.2..1.0f64, -1.0..1.0],
        beta in prop_oneof![-4.0..-0.1f64, 0.1..4.0f64],
    ) {
        let p = Complex64::new(p[0], p[1]);
        let spec = LoxodromeSpec::new(p, p + Complex64::new(dq[0], dq[1]), beta).unwrap();
        let c = classify(&spec.generator()).unwrap();
        assert_relative_eq!(c.beta.unwrap(), beta, max_relative = 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flat_circles_have_radius_one_over_curvature(
        x in point(),
        heading in 0.0..std::f64::consts::TAU,
        k in prop_oneof![-3.0..-0.3f64, 0.3..3.0f64],
    ) {
        let s = MobiusStructure::flat_model(MetricField::flat()).unwrap();
        let (c, sn) = (heading.cos(), heading.sin());
        let init = KinematicState::new(x, [c, sn], [-k * sn, k * c], s.name());
        let cfg = IntegratorConfig { scheme: Scheme::Rk45Adaptive, step: 0.05, tol: 1e-11, max_length: 2.0, ..Default::default() };
        let trace = integrate(Model::Circle, &s, &init, &cfg).unwrap();
        prop_assert!(trace.termination.is_complete());
        let centre = [x[0] - sn / k, x[1] + c / k];
        for p in trace.points() {
            let r = (p[0] - centre[0]).hypot(p[1] - centre[1]);
            prop_assert!((r - 1.0 / k.abs()).abs() < 1e-8, "radius {r}");
        }
        let res = trace.max_residuals();
        prop_assert!(res.unit < 1e-9 && res.ortho_a < 1e-9);
    }
}
