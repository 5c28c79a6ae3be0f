use num_complex::Complex64;
use proptest::prelude::*;
use spectra::expr::{parse, Expr, Func, Var};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => Just(Expr::x()),
        2 => Just(Expr::lambda()),
        1 => prop::sample::select(vec![1.0, 2.0, -1.0, 0.5, 3.0]).prop_map(Expr::real),
        1 => Just(Expr::imag_unit()),
    ]
}

/// Random trees; coefficients come from a small set so arithmetic on them stays exact.
fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b + Expr::real(2.0))),
            inner.clone().prop_map(|a| -a),
            (inner.clone(), -2i32..=3).prop_map(|(a, n)| a.powi(n)),
            (inner.clone(), prop::sample::select(vec![Func::Exp, Func::Sin, Func::Cos, Func::Atan]))
                .prop_map(|(a, f)| Expr::call(f, a * Expr::real(0.5))),
            inner.clone().prop_map(|a| Expr::call(Func::Sqrt, Expr::real(3.0) + a.powi(2))),
            inner.prop_map(|a| Expr::call(Func::Log, Expr::real(3.0) + a.powi(2))),
        ]
    })
}

fn point() -> impl Strategy<Value = (f64, Complex64)> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, a, b)| (x, Complex64::new(a, b)))
}

fn central(e: &Expr, x: f64, l: Complex64, h: f64) -> Option<Complex64> {
    Some((e.eval(x + h, l).ok()? - e.eval(x - h, l).ok()?) / (2.0 * h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivative_matches_central_difference(e in arb_expr(), (x, l) in point()) {
        let value = e.eval(x, l);
        prop_assume!(matches!(value, Ok(v) if v.norm() < 1e4));
        let d = e.differentiate(Var::X);
        let exact = d.eval(x, l);
        prop_assume!(matches!(exact, Ok(v) if v.norm() < 1e4));
        let exact = exact.unwrap();
        let h = 1e-5;
        let fd = central(&e, x, l, h);
        let fd_half = central(&e, x, l, h / 2.0);
        prop_assume!(fd.is_some() && fd_half.is_some());
        let (fd, fd_half) = (fd.unwrap(), fd_half.unwrap());
        // Skip points where the difference quotient itself is not settled (branch cuts, near-poles).
        prop_assume!((fd - fd_half).norm() <= 1e-6 * (1.0 + fd.norm()));
        let v = value.unwrap();
        prop_assert!((exact - fd).norm() <= 1e-6 * (1.0 + v.norm().max(exact.norm())),
            "e = {e}, d = {d}, x = {x}, l = {l}, exact = {exact}, fd = {fd}");
    }

    #[test]
    fn simplify_is_sound(e in arb_expr(), pts in prop::collection::vec(point(), 20)) {
        let s = e.simplify();
        for (x, l) in pts {
            let (Ok(a), Ok(b)) = (e.eval(x, l), s.eval(x, l)) else { continue };
            if a.norm() > 1e6 {
                continue;
            }
            prop_assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()) * (1.0 + e.node_count() as f64),
                "e = {e}\ns = {s}\nx = {x}, l = {l}: {a} vs {b}");
        }
    }

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let once = e.simplify();
        let twice = once.simplify();
        prop_assert_eq!(&once, &twice, "e = {}", e);
    }

    #[test]
    fn print_then_parse_evaluates_identically(e in arb_expr(), (x, l) in point()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        match (e.eval(x, l), back.eval(x, l)) {
            (Ok(a), Ok(b)) => prop_assert!(a == b || (a - b).norm() <= 1e-15 * a.norm(), "{text}: {a} vs {b}"),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{}: {:?} vs {:?}", text, a, b),
        }
    }
}
