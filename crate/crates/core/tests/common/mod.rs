#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spectra::expr::{Expr, Var};
use spectra::model::OperatorMatrix;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn quadratic_well() -> OperatorMatrix {
    OperatorMatrix::parse(&["0", "0", "1"], &["0", "-i"], &["0", "i"], "-x^2").unwrap()
}

pub fn gaussian_coupled() -> OperatorMatrix {
    OperatorMatrix::parse(
        &["x^2/(x^2+1)", "0", "i", "0", "1"],
        &["cos(x)/sqrt(1+x^2)", "1"],
        &["x^2/(i+x^2)", "0", "0", "i"],
        "exp(-x^2/2) + i/(1+x^2)",
    )
    .unwrap()
}

pub fn lit(z: Complex64) -> String {
    format!("({} + {}*i)", z.re, z.im)
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(|s| s.as_str()).collect()
}

pub fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    c(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

/// A smooth, bounded coefficient with random constants.
fn random_coefficient(rng: &mut ChaCha8Rng) -> String {
    let (a, b) = (lit(rand_c(rng, 2.0)), lit(rand_c(rng, 2.0)));
    match rng.gen_range(0..4) {
        0 => a,
        1 => format!("{a} + {b}*x/(1+x^2)"),
        2 => format!("{a}*exp(-x^2/4) + {b}"),
        _ => format!("{a} + {b}*cos(x)/(2+x^2)"),
    }
}

/// Variable-coefficient operator of order m with a_m bounded away from zero.
pub fn random_operator(rng: &mut ChaCha8Rng, m: usize) -> OperatorMatrix {
    let n = rng.gen_range(1..m);
    let k = m - n;
    let mut a: Vec<String> = (0..m).map(|_| random_coefficient(rng)).collect();
    a.push(format!("{} * (2 + x^2/(1+x^2))", lit(c(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)))));
    let b: Vec<String> = (0..=n).map(|_| random_coefficient(rng)).collect();
    let cc: Vec<String> = (0..=k).map(|_| random_coefficient(rng)).collect();
    let d = format!("{} + {}/(1+x^2)", lit(rand_c(rng, 2.0)), lit(rand_c(rng, 1.0)));
    OperatorMatrix::parse(&refs(&a), &refs(&b), &refs(&cc), &d).unwrap()
}

/// Constant-coefficient operator with every coefficient of modulus at most 2 and a_m = 1.
pub fn random_constant(rng: &mut ChaCha8Rng, m: usize) -> OperatorMatrix {
    let n = m / 2;
    let mut z = || {
        let r = rng.gen_range(0.0..2.0);
        Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
    };
    let mut a: Vec<String> = (0..m).map(|_| lit(z())).collect();
    a.push("1".into());
    let b: Vec<String> = (0..=n).map(|_| lit(z())).collect();
    let cc: Vec<String> = (0..=m - n).map(|_| lit(z())).collect();
    let d = lit(z());
    OperatorMatrix::parse(&refs(&a), &refs(&b), &refs(&cc), &d).unwrap()
}

/// D = −i d/dx applied symbolically.
pub fn d_op(e: &Expr) -> Expr {
    (Expr::constant(c(0.0, -1.0)) * e.differentiate(Var::X)).simplify()
}

/// Σ coeffs[j] D^j u.
pub fn apply(coeffs: &[Expr], u: &Expr) -> Expr {
    let mut du = u.clone();
    let mut acc = Expr::zero();
    for (j, cj) in coeffs.iter().enumerate() {
        if j > 0 {
            du = d_op(&du);
        }
        acc = (acc + cj * &du).simplify();
    }
    acc
}

/// (A − λ)u − B (d − λ)^{-1} C u, built by nested composition.
pub fn schur_direct(op: &OperatorMatrix, u: &Expr, lambda: Complex64) -> Expr {
    let l = Expr::constant(lambda);
    let au = (apply(op.a(), u) - &l * u).simplify();
    let w = (apply(op.c(), u) / (op.d() - &l)).simplify();
    (au - apply(op.b(), &w)).simplify()
}
