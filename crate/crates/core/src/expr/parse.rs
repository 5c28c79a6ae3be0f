//! Recursive-descent parser for coefficient expressions.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' factor)?
//! base   := number | 'i' | 'pi' | 'e' | 'x' | 'lambda' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. An exponent that
//! folds to an integer constant becomes a power node; anything else is rewritten
//! as `exp(p*log(b))`.

use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<(usize, Tok), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((start, Tok::End));
        };
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((start, t));
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number(start).map(|v| (start, Tok::Num(v)));
        }
        if c.is_alphabetic() || c == '_' {
            let len: usize = rest
                .char_indices()
                .find(|(_, ch)| !(ch.is_alphanumeric() || *ch == '_'))
                .map(|(i, _)| i)
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((start, Tok::Ident(rest[..len].to_string())));
        }
        Err(ParseError {
            position: start,
            message: format!("unexpected character {c:?}"),
        })
    }

    fn number(&mut self, start: usize) -> Result<f64, ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        // Scientific exponent only when digits follow, so `2*e` style input is not swallowed.
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        self.src[start..i].parse::<f64>().map_err(|_| ParseError {
            position: start,
            message: format!("malformed number {:?}", &self.src[start..i]),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok_pos, tok) = lexer.next_token()?;
        Ok(Parser { lexer, tok, tok_pos })
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (pos, tok) = self.lexer.next_token()?;
        self.tok = tok;
        self.tok_pos = pos;
        Ok(())
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.tok_pos,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.advance()?;
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.advance()?;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.advance()?;
                    lhs = lhs * self.factor()?;
                }
                Tok::Slash => {
                    self.advance()?;
                    lhs = lhs / self.factor()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.advance()?;
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.advance()?;
        let exponent = self.factor()?;
        Ok(power(base, exponent))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::real(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.tok_pos;
                self.advance()?;
                match name.as_str() {
                    "x" => Ok(Expr::var(Var::X)),
                    "lambda" | "λ" => Ok(Expr::var(Var::Lambda)),
                    "i" => Ok(Expr::imag_unit()),
                    "pi" => Ok(Expr::real(std::f64::consts::PI)),
                    "e" => Ok(Expr::real(std::f64::consts::E)),
                    other => match Func::from_name(other) {
                        Some(f) => {
                            if self.tok != Tok::LParen {
                                return self.error(format!("expected '(' after {other}"));
                            }
                            self.advance()?;
                            let arg = self.expr()?;
                            self.expect_rparen()?;
                            Ok(Expr::call(f, arg))
                        }
                        None => Err(ParseError {
                            position: at,
                            message: format!("unknown identifier {other:?}"),
                        }),
                    },
                }
            }
            Tok::End => self.error("unexpected end of input"),
            other => self.error(format!("unexpected token {other:?}")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return self.error("expected ')'");
        }
        self.advance()
    }
}

fn power(base: Expr, exponent: Expr) -> Expr {
    let as_int = (!exponent.depends_on(Var::X) && !exponent.depends_on(Var::Lambda))
        .then(|| exponent.eval(0.0, Complex64::new(0.0, 0.0)).ok())
        .flatten()
        .filter(|v| v.im == 0.0 && v.re.fract() == 0.0 && v.re.abs() <= i32::MAX as f64);
    match as_int {
        Some(v) => base.powi(v.re as i32),
        None => Expr::call(Func::Exp, exponent * Expr::call(Func::Log, base)),
    }
}

/// Parses a coefficient expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let clamp = |mut err: ParseError| {
        err.position = err.position.min(text.len().saturating_sub(1));
        err
    };
    let mut p = Parser::new(text).map_err(clamp)?;
    let e = p.expr().map_err(clamp)?;
    if p.tok != Tok::End {
        return Err(clamp(ParseError {
            position: p.tok_pos,
            message: format!("unexpected trailing token {:?}", p.tok),
        }));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_is_power_node() {
        let e = parse("x^2").unwrap();
        match e.node() {
            Node::Pow(b, 2) => assert_eq!(b.node(), &Node::Var(Var::X)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn example_coefficient_at_origin() {
        let e = parse("exp(-x^2/2) + i/(1+x^2)").unwrap();
        let v = e.eval(0.0, c(0.0, 0.0)).unwrap();
        assert!((v - c(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn malformed_input_offset() {
        let err = parse("2*)x").unwrap_err();
        assert_eq!(err.position, 2);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-x^2 - 1").unwrap();
        assert_eq!(e.eval(2.0, c(0.0, 0.0)).unwrap(), c(-5.0, 0.0));
        let e = parse("2^-1").unwrap();
        assert_eq!(e.eval(0.0, c(0.0, 0.0)).unwrap(), c(0.5, 0.0));
    }

    #[test]
    fn precedence_and_associativity() {
        let z = c(0.0, 0.0);
        assert_eq!(parse("8/2/2").unwrap().eval(0.0, z).unwrap(), c(2.0, 0.0));
        assert_eq!(parse("1-2-3").unwrap().eval(0.0, z).unwrap(), c(-4.0, 0.0));
        assert_eq!(parse("2^3^2").unwrap().eval(0.0, z).unwrap(), c(512.0, 0.0));
        assert_eq!(parse("2*3+4*5").unwrap().eval(0.0, z).unwrap(), c(26.0, 0.0));
    }

    #[test]
    fn identifiers_and_constants() {
        let l = c(0.5, -2.0);
        let e = parse("lambda * i + pi - e").unwrap();
        let want = l * Complex64::i() + std::f64::consts::PI - std::f64::consts::E;
        assert!((e.eval(0.0, l).unwrap() - want).norm() < 1e-15);
        assert!(parse("y + 1").is_err());
        assert_eq!(parse("1 + foo").unwrap_err().position, 4);
    }

    #[test]
    fn fractional_power_goes_through_exp_log() {
        let e = parse("x^0.5").unwrap();
        assert!(matches!(e.node(), Node::Call(Func::Exp, _)));
        let v = e.eval(4.0, c(0.0, 0.0)).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3 * 2E2").unwrap();
        assert!((e.eval(0.0, c(0.0, 0.0)).unwrap() - c(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn errors_stay_inside_input() {
        for bad in ["", "(", "x +", "sin x", "3 4", "x^", "#"] {
            let err = parse(bad).unwrap_err();
            assert!(err.position <= bad.len().saturating_sub(1), "{bad:?}: {err}");
        }
    }
}
