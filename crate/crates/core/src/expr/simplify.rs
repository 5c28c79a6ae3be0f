//! Rational normalization of expression trees.
//!
//! An expression is rewritten as a sum of terms `c * prod(base^k)` where a base
//! is a variable, a function application, or an irreducible multi-term sum, and
//! `k` is a nonzero integer. The rewrite folds constants, merges like terms and
//! like factors (so identical factors cancel), and brings every sum that
//! contains reciprocals over a single common denominator.
//!
//! Sums are never multiplied out against each other; a sum becomes a factor
//! after its scalar and common monomial content are pulled out, which is what
//! lets `(lambda+i)/lambda * lambda/(lambda+i)` collapse to `1`. The result is
//! a normal form for this rewrite system, not a canonical form for rational
//! functions: two equal functions may still print differently.
//!
//! Canonical terms obey two rules that keep the rewrite idempotent:
//! a term without reciprocals never carries exactly one sum factor of
//! exponent one (it is distributed instead), and a sum with two or more terms
//! never contains reciprocals (it is collected into a single quotient).

use std::cmp::Ordering;
use std::collections::HashMap;

use num_complex::Complex64;

use super::{eval, Expr, Func, Node, Var};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Clone, Debug)]
enum Base {
    Var(Var),
    Call(Func, Box<Poly>),
    Sum(Box<Poly>),
    /// Anything the rewrite leaves alone, e.g. a literal zero under a negative power.
    Opaque(Expr),
}

#[derive(Clone, Debug, Default)]
struct Mono(Vec<(Base, i32)>);

#[derive(Clone, Debug)]
struct Term {
    mono: Mono,
    coef: C,
}

#[derive(Clone, Debug, Default)]
struct Poly(Vec<Term>);

fn cmp_c(a: C, b: C) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn cmp_base(a: &Base, b: &Base) -> Ordering {
    fn rank(b: &Base) -> u8 {
        match b {
            Base::Var(_) => 0,
            Base::Call(..) => 1,
            Base::Sum(_) => 2,
            Base::Opaque(_) => 3,
        }
    }
    match (a, b) {
        (Base::Var(x), Base::Var(y)) => x.cmp(y),
        (Base::Call(f, p), Base::Call(g, q)) => f.cmp(g).then_with(|| cmp_poly(p, q)),
        (Base::Sum(p), Base::Sum(q)) => cmp_poly(p, q),
        (Base::Opaque(x), Base::Opaque(y)) => x.to_string().cmp(&y.to_string()),
        _ => rank(a).cmp(&rank(b)),
    }
}

fn cmp_mono(a: &Mono, b: &Mono) -> Ordering {
    for ((ba, ea), (bb, eb)) in a.0.iter().zip(&b.0) {
        let o = cmp_base(ba, bb).then(ea.cmp(eb));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.0.len().cmp(&b.0.len())
}

fn cmp_poly(a: &Poly, b: &Poly) -> Ordering {
    for (ta, tb) in a.0.iter().zip(&b.0) {
        let o = cmp_mono(&ta.mono, &tb.mono).then_with(|| cmp_c(ta.coef, tb.coef));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.0.len().cmp(&b.0.len())
}

impl Mono {
    fn single(base: Base, exp: i32) -> Mono {
        Mono(vec![(base, exp)])
    }

    fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match cmp_base(&a[i].0, &b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    fn pow(&self, n: i32) -> Mono {
        if n == 0 {
            return Mono::default();
        }
        Mono(self.0.iter().map(|(b, e)| (b.clone(), e * n)).collect())
    }

    fn has_negative(&self) -> bool {
        self.0.iter().any(|(_, e)| *e < 0)
    }

    fn has_positive_sum(&self) -> bool {
        self.0.iter().any(|(b, e)| matches!(b, Base::Sum(_)) && *e > 0)
    }

    /// Index of the only sum factor when the term must be distributed over it.
    fn lone_sum(&self) -> Option<usize> {
        if self.has_negative() {
            return None;
        }
        let mut sums = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, (b, _))| matches!(b, Base::Sum(_)));
        match (sums.next(), sums.next()) {
            (Some((i, (_, 1))), None) => Some(i),
            _ => None,
        }
    }

    /// Common factor of all monomials: bases present everywhere, at their minimum exponent.
    fn common(monos: &[&Mono]) -> Mono {
        let Some((first, rest)) = monos.split_first() else {
            return Mono::default();
        };
        let mut out = Vec::new();
        for (base, e) in &first.0 {
            let mut min = *e;
            let mut everywhere = true;
            for m in rest {
                match m.0.iter().find(|(b, _)| cmp_base(b, base) == Ordering::Equal) {
                    Some((_, f)) => min = min.min(*f),
                    None => {
                        everywhere = false;
                        break;
                    }
                }
            }
            if everywhere && min > 0 {
                out.push((base.clone(), min));
            }
        }
        Mono(out)
    }
}

fn push_normalized(term: Term, out: &mut Vec<Term>) {
    if term.coef == ZERO {
        return;
    }
    match term.mono.lone_sum() {
        Some(idx) => {
            let mut rest = term.mono.0.clone();
            let (base, _) = rest.remove(idx);
            let Base::Sum(sum) = base else { unreachable!() };
            let rest = Mono(rest);
            for t in sum.0 {
                push_normalized(
                    Term {
                        mono: rest.mul(&t.mono),
                        coef: term.coef * t.coef,
                    },
                    out,
                );
            }
        }
        None => out.push(term),
    }
}

fn combine(mut terms: Vec<Term>) -> Poly {
    terms.sort_by(|a, b| cmp_mono(&a.mono, &b.mono));
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if cmp_mono(&last.mono, &t.mono) == Ordering::Equal => last.coef += t.coef,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coef != ZERO);
    Poly(out)
}

impl Poly {
    fn constant(c: C) -> Poly {
        if c == ZERO {
            Poly::default()
        } else {
            Poly(vec![Term {
                mono: Mono::default(),
                coef: c,
            }])
        }
    }

    fn from_base(b: Base) -> Poly {
        Poly(vec![Term {
            mono: Mono::single(b, 1),
            coef: ONE,
        }])
    }

    fn as_constant(&self) -> Option<C> {
        match self.0.as_slice() {
            [] => Some(ZERO),
            [t] if t.mono.0.is_empty() => Some(t.coef),
            _ => None,
        }
    }

    /// Brings the terms into canonical shape: distributes lone sums, merges like
    /// terms, and collects reciprocals over a common denominator.
    fn finish(terms: Vec<Term>) -> Poly {
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            push_normalized(t, &mut flat);
        }
        let p = combine(flat);
        if p.0.iter().any(|t| t.mono.has_negative()) {
            p.together()
        } else {
            p
        }
    }

    fn together(&self) -> Poly {
        let mut denom: Vec<(Base, i32)> = Vec::new();
        for t in &self.0 {
            for (b, e) in &t.mono.0 {
                if *e >= 0 {
                    continue;
                }
                match denom.iter_mut().find(|(d, _)| cmp_base(d, b) == Ordering::Equal) {
                    Some((_, k)) => *k = (*k).max(-e),
                    None => denom.push((b.clone(), -e)),
                }
            }
        }
        denom.sort_by(|a, b| cmp_base(&a.0, &b.0));
        let denom = Mono(denom);
        let mut numer = Vec::with_capacity(self.0.len());
        for t in &self.0 {
            push_normalized(
                Term {
                    mono: t.mono.mul(&denom),
                    coef: t.coef,
                },
                &mut numer,
            );
        }
        let numer = combine(numer);
        if numer.0.is_empty() {
            return Poly::default();
        }
        let (c, common, rest) = numer.content();
        let mut mono = common.mul(&denom.pow(-1));
        if rest.0.len() >= 2 {
            mono = mono.mul(&Mono::single(Base::Sum(Box::new(rest)), 1));
        }
        let mut out = Vec::new();
        push_normalized(Term { mono, coef: c }, &mut out);
        combine(out)
    }

    /// Splits a reciprocal-free polynomial as `c * common * rest` where `rest`
    /// has no common monomial factor and a leading coefficient of one.
    fn content(&self) -> (C, Mono, Poly) {
        if let [t] = self.0.as_slice() {
            return (t.coef, t.mono.clone(), Poly::constant(ONE));
        }
        let monos: Vec<&Mono> = self.0.iter().map(|t| &t.mono).collect();
        let common = Mono::common(&monos);
        let inv = common.pow(-1);
        let mut terms: Vec<Term> = self
            .0
            .iter()
            .map(|t| Term {
                mono: t.mono.mul(&inv),
                coef: t.coef,
            })
            .collect();
        terms.sort_by(|a, b| cmp_mono(&a.mono, &b.mono));
        let lead = terms[0].coef;
        for t in &mut terms {
            t.coef = if t.coef == lead { ONE } else { t.coef / lead };
        }
        (lead, common, Poly(terms))
    }

    fn neg(self) -> Poly {
        Poly(
            self.0
                .into_iter()
                .map(|t| Term {
                    mono: t.mono,
                    coef: -t.coef,
                })
                .collect(),
        )
    }

    fn add(self, other: Poly) -> Poly {
        let mut terms = self.0;
        terms.extend(other.0);
        Poly::finish(terms)
    }

    fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::default();
        }
        match (self.0.as_slice(), other.0.as_slice()) {
            ([a], [b]) => Poly::finish(vec![Term {
                mono: a.mono.mul(&b.mono),
                coef: a.coef * b.coef,
            }]),
            ([a], _) => other.mul_term(a),
            (_, [b]) => self.mul_term(b),
            _ => {
                let (ca, ma, ra) = self.content();
                let (cb, mb, rb) = other.content();
                let mono = ma
                    .mul(&mb)
                    .mul(&Mono::single(Base::Sum(Box::new(ra)), 1))
                    .mul(&Mono::single(Base::Sum(Box::new(rb)), 1));
                Poly::finish(vec![Term {
                    mono,
                    coef: ca * cb,
                }])
            }
        }
    }

    /// Product of a multi-term sum with a single term. The sum is distributed unless
    /// the term already carries sum factors, in which case the sum joins them.
    fn mul_term(&self, t: &Term) -> Poly {
        if t.mono.has_positive_sum() {
            let (c, common, rest) = self.content();
            let mut mono = t.mono.mul(&common);
            if rest.0.len() >= 2 {
                mono = mono.mul(&Mono::single(Base::Sum(Box::new(rest)), 1));
            }
            return Poly::finish(vec![Term {
                mono,
                coef: t.coef * c,
            }]);
        }
        Poly::finish(
            self.0
                .iter()
                .map(|s| Term {
                    mono: t.mono.mul(&s.mono),
                    coef: t.coef * s.coef,
                })
                .collect(),
        )
    }

    fn pow(&self, n: i32) -> Poly {
        if n == 0 {
            return Poly::constant(ONE);
        }
        if n == 1 {
            return self.clone();
        }
        match self.0.as_slice() {
            [] if n > 0 => Poly::default(),
            [] => Poly(vec![Term {
                mono: Mono::single(Base::Opaque(Expr::zero()), n),
                coef: ONE,
            }]),
            [t] => {
                let coef = match eval::eval(&Expr::constant(t.coef).powi(n), 0.0, ZERO) {
                    Ok(c) => c,
                    Err(_) => {
                        return Poly(vec![Term {
                            mono: Mono::single(Base::Opaque(Expr::constant(t.coef).powi(n)), 1)
                                .mul(&t.mono.pow(n)),
                            coef: ONE,
                        }])
                    }
                };
                Poly::finish(vec![Term {
                    mono: t.mono.pow(n),
                    coef,
                }])
            }
            _ => {
                let (c, common, rest) = self.content();
                let mono = common
                    .pow(n)
                    .mul(&Mono::single(Base::Sum(Box::new(rest)), n));
                let coef = eval::eval(&Expr::constant(c).powi(n), 0.0, ZERO).unwrap_or(c.powi(n));
                Poly::finish(vec![Term { mono, coef }])
            }
        }
    }

    fn call(f: Func, arg: Poly) -> Poly {
        if let Some(c) = arg.as_constant() {
            if let Ok(v) = eval::call(f, c) {
                return Poly::constant(v);
            }
        }
        Poly::from_base(Base::Call(f, Box::new(arg)))
    }
}

struct Simplifier {
    memo: HashMap<*const Node, Poly>,
}

impl Simplifier {
    fn poly(&mut self, e: &Expr) -> Poly {
        let key = std::sync::Arc::as_ptr(&e.0);
        if let Some(p) = self.memo.get(&key) {
            return p.clone();
        }
        let p = match e.node() {
            Node::Const(c) => Poly::constant(*c),
            Node::Var(v) => Poly::from_base(Base::Var(*v)),
            Node::Neg(a) => self.poly(a).neg(),
            Node::Add(a, b) => self.poly(a).add(self.poly(b)),
            Node::Sub(a, b) => self.poly(a).add(self.poly(b).neg()),
            Node::Mul(a, b) => self.poly(a).mul(&self.poly(b)),
            Node::Div(a, b) => self.poly(a).mul(&self.poly(b).pow(-1)),
            Node::Pow(a, n) => self.poly(a).pow(*n),
            Node::Call(f, a) => Poly::call(*f, self.poly(a)),
        };
        self.memo.insert(key, p.clone());
        p
    }
}

fn base_expr(b: &Base) -> Expr {
    match b {
        Base::Var(v) => Expr::var(*v),
        Base::Call(f, p) => Expr::call(*f, poly_expr(p)),
        Base::Sum(p) => poly_expr(p),
        Base::Opaque(e) => e.clone(),
    }
}

fn power_expr(b: &Base, e: i32) -> Expr {
    let base = base_expr(b);
    if e == 1 {
        base
    } else {
        base.powi(e)
    }
}

fn product(factors: impl Iterator<Item = Expr>) -> Option<Expr> {
    factors.reduce(|acc, f| acc * f)
}

/// Builds `coef * mono`. Factors are emitted scalars first, then plain bases, then
/// sums, so re-simplifying the output reproduces the same normal form.
fn term_expr(mono: &Mono, coef: C) -> Expr {
    if mono.0.is_empty() {
        return Expr::constant(coef);
    }
    let ordered = mono
        .0
        .iter()
        .filter(|(b, e)| *e > 0 && !matches!(b, Base::Sum(_)))
        .chain(mono.0.iter().filter(|(b, e)| *e > 0 && matches!(b, Base::Sum(_))));
    let numer_factors: Vec<Expr> = ordered.map(|(b, e)| power_expr(b, *e)).collect();
    let denom = product(mono.0.iter().filter(|(_, e)| *e < 0).map(|(b, e)| power_expr(b, -e)));

    let negate = coef == -ONE;
    let scalar = (!negate && coef != ONE).then(|| Expr::constant(coef));
    let numer = product(scalar.into_iter().chain(numer_factors)).unwrap_or_else(Expr::one);
    let body = match denom {
        Some(d) => numer / d,
        None => numer,
    };
    if negate {
        -body
    } else {
        body
    }
}

fn poly_expr(p: &Poly) -> Expr {
    let mut acc: Option<Expr> = None;
    for t in &p.0 {
        let negative = t.coef.im == 0.0 && t.coef.re < 0.0;
        acc = Some(match acc {
            None => term_expr(&t.mono, t.coef),
            Some(a) if negative => a - term_expr(&t.mono, -t.coef),
            Some(a) => a + term_expr(&t.mono, t.coef),
        });
    }
    acc.unwrap_or_else(Expr::zero)
}

pub(crate) fn simplify(e: &Expr) -> Expr {
    let mut s = Simplifier { memo: HashMap::new() };
    poly_expr(&s.poly(e))
}
