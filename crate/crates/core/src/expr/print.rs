use std::fmt::{self, Write};

use num_complex::Complex64;

use super::{Expr, Node, Var};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => ADD,
        Node::Mul(..) | Node::Div(..) => MUL,
        Node::Neg(_) => NEG,
        Node::Pow(..) => 4,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => ATOM,
    }
}

fn write_real(f: &mut impl Write, v: f64) -> fmt::Result {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        write!(f, "{v:e}")
    } else {
        write!(f, "{v}")
    }
}

fn write_const(f: &mut impl Write, c: Complex64) -> fmt::Result {
    if c.im == 0.0 {
        if c.re < 0.0 || (c.re == 0.0 && c.re.is_sign_negative()) {
            f.write_str("(")?;
            write_real(f, c.re)?;
            return f.write_str(")");
        }
        return write_real(f, c.re);
    }
    if c.re == 0.0 && c.im == 1.0 {
        return f.write_str("i");
    }
    f.write_str("(")?;
    if c.re != 0.0 {
        write_real(f, c.re)?;
        f.write_str(if c.im < 0.0 { "-" } else { "+" })?;
    } else if c.im < 0.0 {
        f.write_str("-")?;
    }
    if c.im.abs() != 1.0 {
        write_real(f, c.im.abs())?;
        f.write_str("*")?;
    }
    f.write_str("i)")
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        f.write_str("(")?;
        write_expr(f, e)?;
        f.write_str(")")
    } else {
        write_expr(f, e)
    }
}

/// Writes `e` so that parsing the output reproduces the same tree shape.
pub(crate) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write_const(f, *c),
        Node::Var(Var::X) => f.write_str("x"),
        Node::Var(Var::Lambda) => f.write_str("lambda"),
        Node::Neg(a) => {
            f.write_str("-")?;
            write_child(f, a, NEG)
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_child(f, a, ADD)?;
            f.write_str(if matches!(e.node(), Node::Add(..)) { " + " } else { " - " })?;
            write_child(f, b, MUL)
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_child(f, a, MUL)?;
            f.write_str(if matches!(e.node(), Node::Mul(..)) { "*" } else { "/" })?;
            write_child(f, b, NEG)
        }
        Node::Pow(a, n) => {
            write_child(f, a, ATOM)?;
            write!(f, "^{n}")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            f.write_str(")")
        }
    }
}
