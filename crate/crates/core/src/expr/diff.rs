use super::{Expr, Func, Node, Var};

pub(crate) fn differentiate(e: &Expr, var: Var) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if *v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Neg(a) => -differentiate(a, var),
        Node::Add(a, b) => differentiate(a, var) + differentiate(b, var),
        Node::Sub(a, b) => differentiate(a, var) - differentiate(b, var),
        Node::Mul(a, b) => differentiate(a, var) * b + a * differentiate(b, var),
        Node::Div(a, b) => {
            (differentiate(a, var) * b - a * differentiate(b, var)) / b.powi(2)
        }
        Node::Pow(_, 0) => Expr::zero(),
        Node::Pow(a, n) => Expr::real(*n as f64) * a.powi(n - 1) * differentiate(a, var),
        Node::Call(f, a) => {
            let inner = differentiate(a, var);
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Sin => Expr::call(Func::Cos, a.clone()),
                Func::Cos => -Expr::call(Func::Sin, a.clone()),
                Func::Sqrt => Expr::real(0.5) / e,
                Func::Log => Expr::one() / a,
                Func::Atan => Expr::one() / (Expr::one() + a.powi(2)),
            };
            outer * inner
        }
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use crate::expr::{parse, Var};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square() {
        let d = parse("x^2").unwrap().differentiate(Var::X).simplify();
        for x in [-1.5, 0.0, 2.0] {
            assert_eq!(d.eval(x, c(0.0, 0.0)).unwrap(), c(2.0 * x, 0.0));
        }
        assert_eq!(d, parse("2*x").unwrap().simplify());
    }

    #[test]
    fn rational_against_central_difference() {
        let e = parse("-1/(x^2+lambda)").unwrap();
        let d = e.differentiate(Var::X);
        let l = c(1.0, 0.0);
        let exact = d.eval(1.0, l).unwrap();
        assert!((exact - c(0.5, 0.0)).norm() < 1e-14);
        let h = 1e-5;
        let fd = (e.eval(1.0 + h, l).unwrap() - e.eval(1.0 - h, l).unwrap()) / (2.0 * h);
        assert!((fd - exact).norm() < 1e-8);
    }

    #[test]
    fn gaussian_chain_rule() {
        let d = parse("exp(-x^2/2)").unwrap().differentiate(Var::X);
        let want = parse("-x*exp(-x^2/2)").unwrap();
        for x in [-2.0, -0.3, 0.0, 1.1, 3.0] {
            let (a, b) = (d.eval(x, c(0.0, 0.0)).unwrap(), want.eval(x, c(0.0, 0.0)).unwrap());
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn lambda_derivative() {
        let d = parse("lambda^3 * x + sin(lambda)").unwrap().differentiate(Var::Lambda);
        let l = c(0.4, -0.7);
        let want = 3.0 * l * l * 2.0 + l.cos();
        assert!((d.eval(2.0, l).unwrap() - want).norm() < 1e-14);
    }
}
