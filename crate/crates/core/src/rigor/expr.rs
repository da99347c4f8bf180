//! A small expression language in one variable `x`.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := '-' factor | power
//! power    := primary ('^' exponent)?
//! exponent := '-' exponent | primary
//! primary  := number | 'x' | '(' expr ')' | 'abs' '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. Exponents
//! must fold to a rational constant. Numbers are exact decimals; `1/3`
//! folds to the exact rational one third.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::interval::{parse_rational, Interval};
use crate::error::{Error, Result};

/// An exact rational constant together with its tight enclosure.
#[derive(Clone)]
pub struct Rational {
    value: BigRational,
    enclosure: Interval,
}

impl Rational {
    pub fn new(value: BigRational) -> Self {
        let enclosure = Interval::from_ratio(&value);
        Rational { value, enclosure }
    }

    pub fn from_i64(p: i64, q: i64) -> Self {
        Rational::new(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn enclosure(&self) -> Interval {
        self.enclosure
    }

    pub fn is_integer(&self) -> bool {
        self.value.is_integer()
    }

    /// `(p, q)` with `q > 0`, when both fit in an `i64`.
    pub fn small_parts(&self) -> Option<(i64, i64)> {
        Some((self.value.numer().to_i64()?, self.value.denom().to_i64()?))
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    X,
    Const(Rational),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    /// Power with an exact rational exponent.
    Pow(Box<Expr>, Rational),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        Parser::new(text)?.parse_all()
    }

    pub fn constant(value: BigRational) -> Expr {
        Expr::Const(Rational::new(value))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::Const(Rational::from_i64(p, q))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Substitutes `inner` for `x`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.compose(inner));
        match self {
            Expr::X => inner.clone(),
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Abs(a) => Expr::Abs(sub(a)),
            Expr::Pow(a, r) => Expr::Pow(sub(a), r.clone()),
        }
    }

    /// Interval extension of the expression.
    pub fn eval(&self, x: Interval) -> Result<Interval> {
        Ok(match self {
            Expr::X => x,
            Expr::Const(c) => c.enclosure,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => a.eval(x)?.div(b.eval(x)?)?,
            Expr::Abs(a) => a.eval(x)?.abs(),
            Expr::Pow(a, r) => pow_interval(a.eval(x)?, r)?,
        })
    }

    /// Plain floating-point value and first derivative. Used only to
    /// steer searches; never for certified quantities.
    pub fn eval_f64(&self, x: f64) -> (f64, f64) {
        match self {
            Expr::X => (x, 1.0),
            Expr::Const(c) => (c.enclosure.mid(), 0.0),
            Expr::Neg(a) => {
                let (v, d) = a.eval_f64(x);
                (-v, -d)
            }
            Expr::Add(a, b) => {
                let ((u, du), (v, dv)) = (a.eval_f64(x), b.eval_f64(x));
                (u + v, du + dv)
            }
            Expr::Sub(a, b) => {
                let ((u, du), (v, dv)) = (a.eval_f64(x), b.eval_f64(x));
                (u - v, du - dv)
            }
            Expr::Mul(a, b) => {
                let ((u, du), (v, dv)) = (a.eval_f64(x), b.eval_f64(x));
                (u * v, du * v + u * dv)
            }
            Expr::Div(a, b) => {
                let ((u, du), (v, dv)) = (a.eval_f64(x), b.eval_f64(x));
                (u / v, (du * v - u * dv) / (v * v))
            }
            Expr::Abs(a) => {
                let (v, d) = a.eval_f64(x);
                if v < 0.0 {
                    (-v, -d)
                } else {
                    (v, d)
                }
            }
            Expr::Pow(a, r) => {
                let (v, d) = a.eval_f64(x);
                let e = r.enclosure.mid();
                if r.is_integer() {
                    let n = e as i32;
                    (v.powi(n), e * v.powi(n - 1) * d)
                } else {
                    (v.powf(e), e * v.powf(e - 1.0) * d)
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.value.is_negative() => 3,
            Expr::Const(c) if !c.is_integer() => 2,
            _ => 5,
        }
    }
}

pub(crate) fn pow_interval(base: Interval, r: &Rational) -> Result<Interval> {
    let (p, q) = r
        .small_parts()
        .ok_or_else(|| Error::Domain(format!("exponent {} is too large", r.value)))?;
    base.pow_rational(p, q)
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

fn fmt_rational(r: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Operands are parenthesised whenever re-parsing could regroup them;
        // the right operand of - and / also when it has equal precedence.
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::X => write!(f, "x"),
            Expr::Const(c) => fmt_rational(&c.value, f),
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 3)
            }
            Expr::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, " - ")?;
                child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, "*")?;
                child(f, b, 3)
            }
            Expr::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, "/")?;
                child(f, b, 5)
            }
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Pow(a, r) => {
                child(f, a, 5)?;
                write!(f, "^")?;
                if r.is_integer() && !r.value.is_negative() {
                    fmt_rational(&r.value, f)
                } else {
                    write!(f, "(")?;
                    fmt_rational(&r.value, f)?;
                    write!(f, ")")
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Sym(char),
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        position,
        message: message.into(),
    })
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            match parse_rational(&lit) {
                Some(r) => out.push((Tok::Num(r), col)),
                None => return err(col, format!("malformed number {lit:?}")),
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return err(col, format!("unexpected character {c:?}"));
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

fn fold(e: Expr) -> Result<Expr> {
    use Expr::*;
    let c = |r: BigRational| Ok(Expr::constant(r));
    match e {
        Neg(a) => match *a {
            Const(x) => c(-x.value),
            a => Ok(Neg(Box::new(a))),
        },
        Add(a, b) => match (*a, *b) {
            (Const(x), Const(y)) => c(x.value + y.value),
            (a, b) => Ok(Add(Box::new(a), Box::new(b))),
        },
        Sub(a, b) => match (*a, *b) {
            (Const(x), Const(y)) => c(x.value - y.value),
            (a, b) => Ok(Sub(Box::new(a), Box::new(b))),
        },
        Mul(a, b) => match (*a, *b) {
            (Const(x), Const(y)) => c(x.value * y.value),
            (a, b) => Ok(Mul(Box::new(a), Box::new(b))),
        },
        Div(a, b) => match (*a, *b) {
            (Const(x), Const(y)) => {
                if y.value.is_zero() {
                    Err(Error::Domain("division by the constant 0".into()))
                } else {
                    c(x.value / y.value)
                }
            }
            (a, b) => Ok(Div(Box::new(a), Box::new(b))),
        },
        Abs(a) => match *a {
            Const(x) => c(x.value.abs()),
            a => Ok(Abs(Box::new(a))),
        },
        Pow(a, r) => match *a {
            Const(x) if r.is_integer() => {
                let n =
                    r.value.numer().to_i32().ok_or_else(|| {
                        Error::Domain(format!("exponent {} is too large", r.value))
                    })?;
                if n < 0 && x.value.is_zero() {
                    return Err(Error::Domain("negative power of 0".into()));
                }
                c(num_traits::Pow::pow(x.value, n))
            }
            a => Ok(Pow(Box::new(a), r)),
        },
        e => Ok(e),
    }
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            err(self.col(), format!("expected '{c}'"))
        }
    }

    fn parse_all(mut self) -> Result<Expr> {
        if *self.peek() == Tok::End {
            return err(self.col(), "empty expression");
        }
        let e = self.expr()?;
        if *self.peek() != Tok::End {
            return err(self.col(), "unexpected trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(c @ ('+' | '-')) => *c,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = fold(if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            })?;
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(c @ ('*' | '/')) => *c,
                _ => return Ok(lhs),
            };
            let col = self.col();
            self.bump();
            let rhs = self.factor()?;
            lhs = fold(if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            })
            .map_err(|e| match e {
                Error::Domain(m) => Error::Parse {
                    position: col,
                    message: m,
                },
                e => e,
            })?;
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            let inner = self.factor()?;
            return fold(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let col = self.col();
        let exponent = self.exponent()?;
        let r = match exponent {
            Expr::Const(r) => r,
            _ => return err(col, "exponent must be a rational constant"),
        };
        if r.small_parts().is_none() {
            return err(col, "exponent numerator or denominator too large");
        }
        fold(Expr::Pow(Box::new(base), r)).map_err(|e| match e {
            Error::Domain(m) => Error::Parse {
                position: col,
                message: m,
            },
            e => e,
        })
    }

    fn exponent(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            let inner = self.exponent()?;
            return fold(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let (tok, col) = self.bump();
        match tok {
            Tok::Num(r) => Ok(Expr::constant(r)),
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "abs" => {
                    self.expect('(')?;
                    let inner = self.expr()?;
                    self.expect(')')?;
                    fold(Expr::Abs(Box::new(inner)))
                }
                _ => err(col, format!("unknown identifier {name:?}")),
            },
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::End => err(col, "unexpected end of input"),
            Tok::Sym(c) => err(col, format!("unexpected '{c}'")),
        }
    }
}

/// Parses `text` as an expression in `x`.
pub fn parse_expr(text: &str) -> Result<Expr> {
    Expr::parse(text)
}

impl Rational {
    pub fn one() -> Self {
        Rational::new(BigRational::one())
    }
}
