use proptest::prelude::*;
use subcurv::expr::{parse, Func};
use subcurv::{Environment, Expr, VariableTable};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        prop::sample::select(vec!["x", "y"]).prop_map(Expr::var),
        (-3.0f64..3.0).prop_map(Expr::constant),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, Expr::add(Expr::one(), b.powi(2)))),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Cos, a))),
            (inner, 0i32..4).prop_map(|(a, n)| a.powi(n)),
        ]
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn render_then_parse_evaluates_the_same(e in expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let table = VariableTable::new(["x", "y"]).unwrap();
        let back = parse(&e.to_string(), &table).unwrap();
        let env = Environment::from_pairs(&[("x", x), ("y", y)]);
        prop_assert!(close(e.eval(&env).unwrap(), back.eval(&env).unwrap()));
    }

    #[test]
    fn product_rule(a in expr(), b in expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let env = Environment::from_pairs(&[("x", x), ("y", y)]);
        let lhs = Expr::mul(a.clone(), b.clone()).diff("x").eval(&env).unwrap();
        let rhs = Expr::add(Expr::mul(a.diff("x"), b.clone()), Expr::mul(a, b.diff("x"))).eval(&env).unwrap();
        prop_assert!(close(lhs, rhs));
    }

    #[test]
    fn mixed_partials_commute(e in expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let env = Environment::from_pairs(&[("x", x), ("y", y)]);
        let xy = e.diff("x").diff("y").eval(&env).unwrap();
        let yx = e.diff("y").diff("x").eval(&env).unwrap();
        prop_assert!(close(xy, yx));
    }

    #[test]
    fn delta_sign_is_invariant_under_scaling(s in 0.1f64..10.0, sign in prop::sample::select(vec![-1i8, 1])) {
        use subcurv::symbol::{delta_invariant, normal_form_g, normal_form_omega};
        let d = delta_invariant(&(normal_form_g() * s), &(normal_form_omega(sign) * (1.0 / s))).unwrap();
        prop_assert_eq!(d.sign, sign);
    }
}
