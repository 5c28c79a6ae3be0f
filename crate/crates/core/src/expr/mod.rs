//! Coefficient expression language.
//!
//! An [`Expr`] is an immutable, reference-counted tree over the real variable
//! `x` and the complex spectral parameter `lambda`. Trees are cheap to clone and
//! can be shared across threads; every transformation returns a new tree.

mod diff;
mod eval;
mod parse;
mod print;
mod simplify;

use std::fmt;
use std::ops;
use std::sync::Arc;

use num_complex::Complex64;

pub use eval::{EvalError, Tape, XFrame, POLE_THRESHOLD};
pub use parse::{parse, ParseError};

/// The two variables an expression may mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Lambda,
}

/// Built-in functions, all on the principal branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Log,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            "atan" => Func::Atan,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(Complex64),
    Var(Var),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Integer power; general powers are rewritten as `exp(p*log(b))`.
    Pow(Expr, i32),
    Call(Func, Expr),
}

/// Immutable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(c: Complex64) -> Expr {
        Expr::from_node(Node::Const(c))
    }

    pub fn real(v: f64) -> Expr {
        Expr::constant(Complex64::new(v, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    pub fn imag_unit() -> Expr {
        Expr::constant(Complex64::i())
    }

    pub fn x() -> Expr {
        Expr::from_node(Node::Var(Var::X))
    }

    pub fn lambda() -> Expr {
        Expr::from_node(Node::Var(Var::Lambda))
    }

    pub fn var(v: Var) -> Expr {
        Expr::from_node(Node::Var(v))
    }

    pub fn powi(&self, exponent: i32) -> Expr {
        Expr::from_node(Node::Pow(self.clone(), exponent))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::from_node(Node::Call(f, arg))
    }

    /// Returns the literal value if this node is a constant.
    pub fn as_const(&self) -> Option<Complex64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(Complex64::new(0.0, 0.0))
    }

    /// Number of nodes in the tree (shared subtrees counted once per use).
    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.node_count(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.depends_on(v),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    /// Evaluates the expression at `(x, lambda)`.
    pub fn eval(&self, x: f64, lambda: Complex64) -> Result<Complex64, EvalError> {
        eval::eval(self, x, lambda)
    }

    /// Exact symbolic derivative with respect to `var`. The result is not simplified.
    pub fn differentiate(&self, var: Var) -> Expr {
        diff::differentiate(self, var)
    }

    /// Best-effort rational normalization; see the `simplify` module.
    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Expr {
        Expr::real(v)
    }
}

impl From<Complex64> for Expr {
    fn from(c: Complex64) -> Expr {
        Expr::constant(c)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::from_node(Node::$variant(self, rhs))
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::from_node(Node::$variant(self, rhs.clone()))
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::from_node(Node::$variant(self.clone(), rhs))
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::from_node(Node::$variant(self.clone(), rhs.clone()))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_node(Node::Neg(self))
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_node(Node::Neg(self.clone()))
    }
}
