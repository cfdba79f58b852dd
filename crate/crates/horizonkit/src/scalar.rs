//! Closed-form scalar expressions over chart coordinates.
//!
//! This is the component grammar used by spacetime spec files: `+`, `-`, `*`,
//! `^` (integer powers), `sin`, `cos`, `exp` over named coordinates and
//! numeric literals. Expressions differentiate exactly, so every coordinate
//! partial used downstream is free of finite-difference noise.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScalarParseError {
    #[error("unexpected character `{0}` at offset {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {expected} at offset {at}")]
    Expected { expected: &'static str, at: usize },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("exponent must be a non-negative integer literal")]
    BadExponent,
}

/// Expression tree for one scalar component.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Num(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(x) if *x == 0.0)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::Coord(i) => point[*i],
            Expr::Add(a, b) => a.eval(point) + b.eval(point),
            Expr::Sub(a, b) => a.eval(point) - b.eval(point),
            Expr::Mul(a, b) => a.eval(point) * b.eval(point),
            Expr::Neg(a) => -a.eval(point),
            Expr::Pow(a, n) => a.eval(point).powi(*n as i32),
            Expr::Sin(a) => a.eval(point).sin(),
            Expr::Cos(a) => a.eval(point).cos(),
            Expr::Exp(a) => a.eval(point).exp(),
        }
    }

    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::zero(),
            Expr::Coord(j) => {
                if *j == i {
                    Expr::Num(1.0)
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(a, b) => add(a.diff(i), b.diff(i)),
            Expr::Sub(a, b) => sub(a.diff(i), b.diff(i)),
            Expr::Mul(a, b) => add(
                mul(a.diff(i), (**b).clone()),
                mul((**a).clone(), b.diff(i)),
            ),
            Expr::Neg(a) => neg(a.diff(i)),
            Expr::Pow(a, n) => {
                if *n == 0 {
                    Expr::zero()
                } else {
                    let inner = a.diff(i);
                    mul(
                        mul(Expr::Num(*n as f64), Expr::Pow(a.clone(), *n - 1)),
                        inner,
                    )
                }
            }
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.diff(i)),
            Expr::Cos(a) => neg(mul(Expr::Sin(a.clone()), a.diff(i))),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.diff(i)),
        }
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x + y);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if let Expr::Num(x) = a {
        if x == 1.0 {
            return b;
        }
        if let Expr::Num(y) = b {
            return Expr::Num(x * y);
        }
        return Expr::Mul(Box::new(Expr::Num(x)), Box::new(b));
    }
    if let Expr::Num(y) = b {
        if y == 1.0 {
            return a;
        }
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    if a.is_zero() {
        return a;
    }
    if let Expr::Num(x) = a {
        return Expr::Num(-x);
    }
    Expr::Neg(Box::new(a))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Coord(i) => write!(f, "x{i}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

/// Parse a component expression. `coords` gives the coordinate names in chart
/// order; any other identifier is rejected.
pub fn parse(src: &str, coords: &[String]) -> Result<Expr, ScalarParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        coords,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ScalarParseError::UnexpectedChar(
            p.src[p.pos] as char,
            p.pos,
        ));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: &'a [String],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ScalarParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ScalarParseError> {
        let mut acc = self.factor()?;
        while let Some(b'*') = self.peek() {
            self.pos += 1;
            acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ScalarParseError> {
        let base = self.atom()?;
        if let Some(b'^') = self.peek() {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(ScalarParseError::BadExponent);
            }
            let n: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| ScalarParseError::BadExponent)?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ScalarParseError> {
        match self.peek() {
            None => Err(ScalarParseError::UnexpectedEnd),
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ScalarParseError::Expected {
                        expected: "`)`",
                        at: self.pos,
                    });
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                s.parse::<f64>()
                    .map(Expr::Num)
                    .map_err(|_| ScalarParseError::Expected {
                        expected: "number",
                        at: start,
                    })
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .to_string();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(ScalarParseError::Expected {
                            expected: "`)`",
                            at: self.pos,
                        });
                    }
                    self.pos += 1;
                    return match name.as_str() {
                        "sin" => Ok(Expr::Sin(Box::new(arg))),
                        "cos" => Ok(Expr::Cos(Box::new(arg))),
                        "exp" => Ok(Expr::Exp(Box::new(arg))),
                        _ => Err(ScalarParseError::UnknownFunction(name)),
                    };
                }
                match self.coords.iter().position(|c| *c == name) {
                    Some(i) => Ok(Expr::Coord(i)),
                    None => Err(ScalarParseError::UnknownCoordinate(name)),
                }
            }
            Some(c) => Err(ScalarParseError::UnexpectedChar(c as char, self.pos)),
        }
    }
}

/// A scalar field with cached exact partial derivatives.
///
/// Partials are keyed by a sorted multi-index (coordinate partials commute),
/// computed on demand up to the order requested at construction.
#[derive(Debug, Clone)]
pub struct ScalarField {
    dim: usize,
    partials: HashMap<Vec<usize>, Expr>,
}

impl ScalarField {
    pub fn new(expr: Expr, dim: usize, max_order: usize) -> Self {
        let mut partials = HashMap::new();
        partials.insert(Vec::new(), expr);
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..max_order {
            let mut next = Vec::new();
            for key in frontier {
                let base = partials.get(&key).unwrap().clone();
                for c in 0..dim {
                    let mut k2 = key.clone();
                    k2.push(c);
                    k2.sort_unstable();
                    if !partials.contains_key(&k2) {
                        partials.insert(k2.clone(), base.diff(c));
                        next.push(k2);
                    }
                }
            }
            frontier = next;
        }
        ScalarField { dim, partials }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        ScalarField::new(Expr::Num(value), dim, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.partials[&Vec::new()].eval(point)
    }

    /// Value of ∂_{multi} f at `point`; the multi-index need not be sorted.
    pub fn partial(&self, multi: &[usize], point: &[f64]) -> f64 {
        let mut key = multi.to_vec();
        key.sort_unstable();
        match self.partials.get(&key) {
            Some(e) => e.eval(point),
            // beyond the cached order: differentiate on the fly
            None => {
                let mut k = key.clone();
                let last = k.pop().unwrap();
                let mut expr = self.partials[&Vec::new()].clone();
                for &c in &k {
                    expr = expr.diff(c);
                }
                expr.diff(last).eval(point)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords() -> Vec<String> {
        vec!["t".into(), "psi".into()]
    }

    #[test]
    fn parses_and_evaluates_misner_component() {
        let e = parse("2*t + t^2", &coords()).unwrap();
        assert_eq!(e.eval(&[0.3, 1.0]), 0.69);
    }

    #[test]
    fn differentiates_products_and_powers() {
        let e = parse("t^3*psi + sin(psi)", &coords()).unwrap();
        let dt = e.diff(0);
        let dpsi = e.diff(1);
        let p = [2.0, 0.5];
        assert!((dt.eval(&p) - 3.0 * 4.0 * 0.5).abs() < 1e-14);
        assert!((dpsi.eval(&p) - (8.0 + 0.5f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn field_partials_match_direct_diff() {
        let e = parse("exp(t)*cos(psi) - psi^2", &coords()).unwrap();
        let f = ScalarField::new(e.clone(), 2, 3);
        let p = [0.2, 1.3];
        let d_tpp = e.diff(0).diff(1).diff(1).eval(&p);
        assert!((f.partial(&[1, 0, 1], &p) - d_tpp).abs() < 1e-13);
    }

    #[test]
    fn rejects_unknown_symbols() {
        assert!(parse("q + 1", &coords()).is_err());
        assert!(parse("tan(t)", &coords()).is_err());
    }

    #[test]
    fn partial_beyond_cache_still_exact() {
        let e = parse("t^4", &coords()).unwrap();
        let f = ScalarField::new(e, 2, 1);
        assert!((f.partial(&[0, 0, 0, 0], &[1.0, 0.0]) - 24.0).abs() < 1e-12);
    }
}
