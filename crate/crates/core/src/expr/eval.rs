//! Complex evaluation, both directly on trees and through a compiled [`Tape`].

use std::collections::HashMap;

use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func, Node, Var};

/// Divisors with magnitude below this are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by a value of magnitude below 1e-300 (pole)")]
    Pole,
    #[error("{0} evaluated at 0")]
    Domain(&'static str),
    #[error("non-finite intermediate value")]
    Overflow,
}

fn finite(v: Complex64) -> Result<Complex64, EvalError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Overflow)
    }
}

fn div(a: Complex64, b: Complex64) -> Result<Complex64, EvalError> {
    if b.norm() < POLE_THRESHOLD {
        return Err(EvalError::Pole);
    }
    // Smith's algorithm; the textbook formula squares |b| and underflows early.
    let q = if b.im == 0.0 {
        Complex64::new(a.re / b.re, a.im / b.re)
    } else if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let t = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / t, (a.im - a.re * r) / t)
    } else {
        let r = b.re / b.im;
        let t = b.re * r + b.im;
        Complex64::new((a.re * r + a.im) / t, (a.im * r - a.re) / t)
    };
    finite(q)
}

fn powi(base: Complex64, n: i32) -> Result<Complex64, EvalError> {
    let mut e = n.unsigned_abs();
    let mut acc = Complex64::new(1.0, 0.0);
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= sq;
        }
        e >>= 1;
        if e > 0 {
            sq = sq * sq;
        }
    }
    if n < 0 {
        if base.norm() < POLE_THRESHOLD {
            return Err(EvalError::Pole);
        }
        div(Complex64::new(1.0, 0.0), acc)
    } else {
        finite(acc)
    }
}

pub(crate) fn call(f: Func, v: Complex64) -> Result<Complex64, EvalError> {
    let r = match f {
        Func::Exp => v.exp(),
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Sqrt => v.sqrt(),
        Func::Log => {
            if v.re == 0.0 && v.im == 0.0 {
                return Err(EvalError::Domain("log"));
            }
            v.ln()
        }
        Func::Atan => v.atan(),
    };
    finite(r)
}

pub(crate) fn eval(e: &Expr, x: f64, lambda: Complex64) -> Result<Complex64, EvalError> {
    match e.node() {
        Node::Const(c) => Ok(*c),
        Node::Var(Var::X) => Ok(Complex64::new(x, 0.0)),
        Node::Var(Var::Lambda) => Ok(lambda),
        Node::Neg(a) => Ok(-eval(a, x, lambda)?),
        Node::Add(a, b) => finite(eval(a, x, lambda)? + eval(b, x, lambda)?),
        Node::Sub(a, b) => finite(eval(a, x, lambda)? - eval(b, x, lambda)?),
        Node::Mul(a, b) => finite(eval(a, x, lambda)? * eval(b, x, lambda)?),
        Node::Div(a, b) => div(eval(a, x, lambda)?, eval(b, x, lambda)?),
        Node::Pow(a, n) => powi(eval(a, x, lambda)?, *n),
        Node::Call(f, a) => call(*f, eval(a, x, lambda)?),
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(Complex64),
    X,
    Lambda,
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, i32),
    Call(Func, u32),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Const(u64, u64),
    X,
    Lambda,
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, i32),
    Call(Func, u32),
}

/// A set of expressions compiled into one straight-line program with shared
/// subexpressions merged.
///
/// Instructions that do not depend on `lambda` can be evaluated once per `x`
/// into an [`XFrame`] and reused for many values of `lambda`.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    lambda_dependent: Vec<bool>,
    outputs: Vec<u32>,
}

/// Register file holding the `lambda`-independent part of a [`Tape`] at a fixed `x`.
#[derive(Clone, Debug)]
pub struct XFrame {
    x: f64,
    regs: Vec<Complex64>,
    error: Option<EvalError>,
}

impl XFrame {
    pub fn x(&self) -> f64 {
        self.x
    }
}

struct Builder {
    ops: Vec<Op>,
    dep: Vec<bool>,
    keys: HashMap<Key, u32>,
    seen: HashMap<*const Node, u32>,
}

impl Builder {
    fn push(&mut self, key: Key, op: Op, dep: bool) -> u32 {
        if let Some(&id) = self.keys.get(&key) {
            return id;
        }
        let id = self.ops.len() as u32;
        self.ops.push(op);
        self.dep.push(dep);
        self.keys.insert(key, id);
        id
    }

    fn intern(&mut self, e: &Expr) -> u32 {
        let ptr = std::sync::Arc::as_ptr(&e.0);
        if let Some(&id) = self.seen.get(&ptr) {
            return id;
        }
        let id = match e.node() {
            Node::Const(c) => self.push(Key::Const(c.re.to_bits(), c.im.to_bits()), Op::Const(*c), false),
            Node::Var(Var::X) => self.push(Key::X, Op::X, false),
            Node::Var(Var::Lambda) => self.push(Key::Lambda, Op::Lambda, true),
            Node::Neg(a) => {
                let a = self.intern(a);
                let d = self.dep[a as usize];
                self.push(Key::Neg(a), Op::Neg(a), d)
            }
            Node::Pow(a, n) => {
                let a = self.intern(a);
                let d = self.dep[a as usize];
                self.push(Key::Pow(a, *n), Op::Pow(a, *n), d)
            }
            Node::Call(f, a) => {
                let a = self.intern(a);
                let d = self.dep[a as usize];
                self.push(Key::Call(*f, a), Op::Call(*f, a), d)
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let (ia, ib) = (self.intern(a), self.intern(b));
                let d = self.dep[ia as usize] || self.dep[ib as usize];
                let (key, op) = match e.node() {
                    Node::Add(..) => (Key::Add(ia, ib), Op::Add(ia, ib)),
                    Node::Sub(..) => (Key::Sub(ia, ib), Op::Sub(ia, ib)),
                    Node::Mul(..) => (Key::Mul(ia, ib), Op::Mul(ia, ib)),
                    _ => (Key::Div(ia, ib), Op::Div(ia, ib)),
                };
                self.push(key, op, d)
            }
        };
        self.seen.insert(ptr, id);
        id
    }
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut b = Builder {
            ops: Vec::new(),
            dep: Vec::new(),
            keys: HashMap::new(),
            seen: HashMap::new(),
        };
        let outputs = exprs.iter().map(|e| b.intern(e)).collect();
        Tape {
            ops: b.ops,
            lambda_dependent: b.dep,
            outputs,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    fn step(op: Op, regs: &[Complex64], x: f64, lambda: Complex64) -> Result<Complex64, EvalError> {
        let r = |i: u32| regs[i as usize];
        match op {
            Op::Const(c) => Ok(c),
            Op::X => Ok(Complex64::new(x, 0.0)),
            Op::Lambda => Ok(lambda),
            Op::Neg(a) => Ok(-r(a)),
            Op::Add(a, b) => finite(r(a) + r(b)),
            Op::Sub(a, b) => finite(r(a) - r(b)),
            Op::Mul(a, b) => finite(r(a) * r(b)),
            Op::Div(a, b) => div(r(a), r(b)),
            Op::Pow(a, n) => powi(r(a), n),
            Op::Call(f, a) => call(f, r(a)),
        }
    }

    /// Evaluates every output at `(x, lambda)` into `out`.
    pub fn eval(&self, x: f64, lambda: Complex64, out: &mut [Complex64]) -> Result<(), EvalError> {
        let mut regs = vec![Complex64::new(0.0, 0.0); self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            regs[i] = Self::step(*op, &regs, x, lambda)?;
        }
        for (o, &id) in out.iter_mut().zip(&self.outputs) {
            *o = regs[id as usize];
        }
        Ok(())
    }

    /// Precomputes all `lambda`-independent registers at `x`.
    pub fn bind_x(&self, x: f64) -> XFrame {
        let mut regs = vec![Complex64::new(0.0, 0.0); self.ops.len()];
        let dummy = Complex64::new(0.0, 0.0);
        for (i, op) in self.ops.iter().enumerate() {
            if self.lambda_dependent[i] {
                continue;
            }
            match Self::step(*op, &regs, x, dummy) {
                Ok(v) => regs[i] = v,
                Err(e) => {
                    return XFrame {
                        x,
                        regs,
                        error: Some(e),
                    }
                }
            }
        }
        XFrame { x, regs, error: None }
    }

    /// Evaluates every output using a frame from [`Tape::bind_x`]; `scratch` is reused storage.
    pub fn eval_frame(
        &self,
        frame: &XFrame,
        lambda: Complex64,
        scratch: &mut Vec<Complex64>,
        out: &mut [Complex64],
    ) -> Result<(), EvalError> {
        if let Some(e) = frame.error {
            return Err(e);
        }
        scratch.clear();
        scratch.extend_from_slice(&frame.regs);
        for (i, op) in self.ops.iter().enumerate() {
            if self.lambda_dependent[i] {
                scratch[i] = Self::step(*op, scratch, frame.x, lambda)?;
            }
        }
        for (o, &id) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[id as usize];
        }
        Ok(())
    }
}
