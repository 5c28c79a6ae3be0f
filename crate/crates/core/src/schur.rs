//! Coefficients of the first Schur complement
//!
//! ```text
//! τ_S(λ) = τ11 − λ − τ12 (d − λ)^{-1} τ21 = Σ_j p_j(x, λ) D^j
//! ```
//!
//! obtained by pushing each D^β of τ12 through the product (c_γ / (d − λ)) D^γ
//! with the Leibniz rule.

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{EvalError, Expr, Tape, Var};
use crate::model::{OperatorMatrix, StructureError};
use crate::poly::ComplexPoly;

pub const DEFAULT_NODE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchurError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("Schur coefficient {coefficient} grew to {nodes} nodes (limit {limit})")]
    Complexity {
        coefficient: String,
        nodes: usize,
        limit: usize,
    },
}

#[derive(Clone, Debug)]
pub struct SchurSymbol {
    p: Vec<Expr>,
    tape: Tape,
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// (−i)^r
fn minus_i_pow(r: usize) -> Complex64 {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ][r % 4]
}

fn guard(e: Expr, name: &str, limit: usize) -> Result<Expr, SchurError> {
    let nodes = e.node_count();
    if nodes > limit {
        return Err(SchurError::Complexity { coefficient: name.to_string(), nodes, limit });
    }
    Ok(e)
}

impl SchurSymbol {
    pub fn build(op: &OperatorMatrix) -> Result<SchurSymbol, SchurError> {
        SchurSymbol::build_with_limit(op, DEFAULT_NODE_LIMIT)
    }

    pub fn build_with_limit(op: &OperatorMatrix, limit: usize) -> Result<SchurSymbol, SchurError> {
        op.check_structure()?;
        let m = op.m();
        let resolvent = op.d() - Expr::lambda();
        let mut coupled: Vec<Vec<Expr>> = vec![Vec::new(); m + 1];
        for (gamma, c) in op.c().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // g^(r) for r = 0..=n, the x-derivatives of c_γ / (d − λ).
            let mut g = guard((c / &resolvent).simplify(), &format!("c{gamma}/(d-lambda)"), limit)?;
            for r in 0..=op.n() {
                for (beta, b) in op.b().iter().enumerate().skip(r) {
                    if b.is_zero() {
                        continue;
                    }
                    let scale = Expr::constant(minus_i_pow(r) * binomial(beta, r));
                    coupled[beta - r + gamma].push(scale * b * &g);
                }
                if r < op.n() {
                    g = guard(g.differentiate(Var::X).simplify(), &format!("d^{}(c{gamma}/(d-lambda))", r + 1), limit)?;
                }
            }
        }
        let mut p = Vec::with_capacity(m + 1);
        for (j, terms) in coupled.into_iter().enumerate() {
            let mut e = op.a()[j].clone();
            if j == 0 {
                e = e - Expr::lambda();
            }
            for t in terms {
                e = e - t;
            }
            p.push(guard(e.simplify(), &format!("p{j}"), limit)?);
        }
        Ok(SchurSymbol::from_coefficients(p))
    }

    /// Wraps explicitly given coefficients p_0..p_m.
    pub fn from_coefficients(p: Vec<Expr>) -> SchurSymbol {
        assert!(p.len() >= 2, "a Schur symbol needs at least p_0 and p_1");
        let tape = Tape::compile(&p);
        SchurSymbol { p, tape }
    }

    pub fn m(&self) -> usize {
        self.p.len() - 1
    }

    pub fn coefficients(&self) -> &[Expr] {
        &self.p
    }

    /// Compiled program evaluating p_0..p_m together.
    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    /// All p_j(x, λ).
    pub fn eval_coefficients(&self, x: f64, lambda: Complex64) -> Result<Vec<Complex64>, EvalError> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.p.len()];
        self.tape.eval(x, lambda, &mut out)?;
        Ok(out)
    }

    /// σ_λ(x, ξ) = Σ p_j(x, λ) ξ^j.
    pub fn symbol_eval(&self, x: f64, xi: f64, lambda: Complex64) -> Result<Complex64, EvalError> {
        let p = self.eval_coefficients(x, lambda)?;
        Ok(p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * xi + c))
    }

    /// (Σ p_j D^j u)(x) for a polynomial test function u.
    pub fn apply_operator(&self, u: &ComplexPoly, x: f64, lambda: Complex64) -> Result<Complex64, EvalError> {
        let p = self.eval_coefficients(x, lambda)?;
        let xc = Complex64::new(x, 0.0);
        let mut du = u.clone();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, pj) in p.iter().enumerate() {
            acc += pj * minus_i_pow(j) * du.eval(xc);
            du = du.derivative();
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quadratic_well() -> OperatorMatrix {
        OperatorMatrix::parse(&["0", "0", "1"], &["0", "-i"], &["0", "i"], "-x^2").unwrap()
    }

    fn gaussian_coupled() -> OperatorMatrix {
        OperatorMatrix::parse(
            &["x^2/(x^2+1)", "0", "i", "0", "1"],
            &["cos(x)/sqrt(1+x^2)", "1"],
            &["x^2/(i+x^2)", "0", "0", "i"],
            "exp(-x^2/2) + i/(1+x^2)",
        )
        .unwrap()
    }

    /// Applies Σ_j coeffs[j] D^j to the expression `u` by symbolic differentiation.
    fn apply_direct(coeffs: &[Expr], u: &Expr) -> Expr {
        let mut du = u.clone();
        let mut acc = Expr::zero();
        for cj in coeffs {
            acc = acc + cj * &du;
            du = Expr::constant(c(0.0, -1.0)) * du.differentiate(Var::X);
        }
        acc
    }

    /// τ11 u − λu − τ12((d − λ)^{-1} τ21 u), composed without any expansion.
    fn nested(op: &OperatorMatrix, u: &Expr) -> Expr {
        let inner = apply_direct(op.c(), u) / (op.d() - Expr::lambda());
        apply_direct(op.a(), u) - Expr::lambda() * u - apply_direct(op.b(), &inner)
    }

    fn poly_expr(u: &ComplexPoly) -> Expr {
        u.coeffs()
            .iter()
            .enumerate()
            .fold(Expr::zero(), |acc, (j, &cj)| acc + Expr::constant(cj) * Expr::x().powi(j as i32))
    }

    #[test]
    fn quadratic_well_coefficients() {
        let s = SchurSymbol::build(&quadratic_well()).unwrap();
        let p2 = parse("1 + 1/(x^2+lambda)").unwrap();
        let p1_printed = parse("-2*i*x/(x^2+lambda)^2").unwrap();
        for x in [-3.0, -0.5, 0.0, 1.0, 2.5] {
            for l in [c(2.0, 1.0), c(0.0, 2.0), c(-0.5, -3.0), c(7.0, 0.0)] {
                let p = s.eval_coefficients(x, l).unwrap();
                assert!((p[0] + l).norm() <= 1e-10);
                assert!((p[2] - p2.eval(x, l).unwrap()).norm() <= 1e-10);
                // Composition with D = -i d/dx yields the printed p_1 with the opposite sign.
                assert!((p[1] + p1_printed.eval(x, l).unwrap()).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn symbol_of_quadratic_well() {
        let s = SchurSymbol::build(&quadratic_well()).unwrap();
        let l = c(-1.0, 0.0);
        // At x=0: p_2 = 1 + 1/(0-1) = 0, p_1 = 0, p_0 = 1.
        let p2 = 1.0 + 1.0 / (0.0 + l);
        let p1 = c(0.0, 2.0) * 0.0 / (0.0 + l).powi(2);
        let want = p2 + p1 + (-l);
        assert!((s.symbol_eval(0.0, 1.0, l).unwrap() - want).norm() < 1e-15);
        assert_eq!(s.symbol_eval(1.0, 1.0, l), Err(EvalError::Pole));
        let l = c(0.3, 0.4);
        assert_eq!(s.symbol_eval(0.7, 0.0, l).unwrap(), s.eval_coefficients(0.7, l).unwrap()[0]);
    }

    #[test]
    fn uncoupled_operator_keeps_a() {
        let op = OperatorMatrix::parse(&["x", "sin(x)", "3"], &["0", "0"], &["0", "1"], "x^2").unwrap();
        let s = SchurSymbol::build(&op).unwrap();
        for x in [-1.0, 0.5] {
            let l = c(0.1, 0.9);
            let p = s.eval_coefficients(x, l).unwrap();
            assert!((p[0] - (x - l)).norm() < 1e-15);
            assert!((p[1] - x.sin()).norm() < 1e-15);
            assert_eq!(p[2], c(3.0, 0.0));
        }
    }

    #[test]
    fn gaussian_leading_coefficient() {
        let op = gaussian_coupled();
        let s = SchurSymbol::build(&op).unwrap();
        for x in [-4.0f64, -1.0, 0.0, 0.3, 2.0, 9.0] {
            for l in [c(2.0, -1.0), c(-3.0, 2.0), c(0.5, 0.5)] {
                let d = (-x * x / 2.0).exp() + c(0.0, 1.0) / (1.0 + x * x);
                let want = 1.0 - c(0.0, 1.0) / (d - l);
                let got = s.eval_coefficients(x, l).unwrap()[4];
                assert!((got - want).norm() <= 1e-12, "x={x} l={l}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn constant_symbol_is_x_independent() {
        let op = OperatorMatrix::parse(&["1", "2", "i"], &["0.5", "-1"], &["i", "2"], "3 - i").unwrap();
        let s = SchurSymbol::build(&op).unwrap();
        let l = c(0.4, 1.3);
        let (a, b) = (s.symbol_eval(-7.0, 1.3, l).unwrap(), s.symbol_eval(11.0, 1.3, l).unwrap());
        assert!((a - b).norm() <= 1e-12);
    }

    #[test]
    fn apply_operator_simple_cases() {
        let s = SchurSymbol::build(&quadratic_well()).unwrap();
        let (x, l) = (0.7, c(1.0, 2.0));
        let p = s.eval_coefficients(x, l).unwrap();
        assert_eq!(s.apply_operator(&ComplexPoly::constant(c(1.0, 0.0)), x, l).unwrap(), p[0]);
        let got = s.apply_operator(&ComplexPoly::z(), x, l).unwrap();
        assert!((got - (p[0] * x + p[1] * c(0.0, -1.0))).norm() < 1e-15);
    }

    #[test]
    fn apply_operator_matches_nested_composition() {
        let u = ComplexPoly::new(vec![c(1.0, -1.0), c(0.5, 0.0), c(0.0, 2.0), c(-1.0, 0.5), c(0.25, 0.0), c(0.0, 0.1), c(0.3, 0.0)]);
        let ue = poly_expr(&u);
        for op in [quadratic_well(), gaussian_coupled()] {
            let s = SchurSymbol::build(&op).unwrap();
            let direct = nested(&op, &ue);
            for x in [-2.0, -0.3, 0.0, 1.1] {
                for l in [c(2.0, -1.0), c(-3.0, 2.0)] {
                    let a = s.apply_operator(&u, x, l).unwrap();
                    let b = direct.eval(x, l).unwrap();
                    assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0), "x={x} l={l}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn resolvent_pole_order() {
        // (d − λ)^(n+1) p_j stays bounded and converges as λ approaches d(x).
        let op = gaussian_coupled();
        let s = SchurSymbol::build(&op).unwrap();
        let x = 0.4;
        let d = op.d().eval(x, c(0.0, 0.0)).unwrap();
        let scaled = |l: Complex64| -> Vec<Complex64> {
            let p = s.eval_coefficients(x, l).unwrap();
            p.iter().map(|pj| pj * (d - l).powi(2)).collect()
        };
        let mut prev: Option<Vec<Complex64>> = None;
        for t in [1e-2, 1e-3, 1e-4, 1e-5] {
            for angle in [0.3, 2.0, 4.4] {
                let cur = scaled(d + Complex64::from_polar(t, angle));
                if let Some(p) = &prev {
                    for (a, b) in cur.iter().zip(p) {
                        assert!((a - b).norm() <= 50.0 * t * (1.0 + b.norm()), "radius {t}");
                    }
                }
                if angle == 4.4 {
                    prev = Some(cur);
                }
            }
        }
    }

    #[test]
    fn node_limit() {
        let err = SchurSymbol::build_with_limit(&gaussian_coupled(), 10).unwrap_err();
        assert!(matches!(err, SchurError::Complexity { limit: 10, .. }));
    }
}
