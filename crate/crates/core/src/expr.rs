//! Expression language for registry entries. An expression denotes an exact
//! q-series built from rational constants, `q`, eta quotients and theta
//! blocks, Rademacher-backed series `R(N,M)` and `G(N,M)`, named registry
//! forms, and the curve variables `X`/`Y` bound during curve verification.
//!
//! Grammar (integer literals, `+ - * /`, `^` with an integer exponent,
//! parentheses, unary minus):
//!
//! ```text
//! atom := integer | q | X | Y
//!       | eta(d) | psi(n) | phi(n) | theta(a,b)
//!       | R(N,M) | G(N,M) | form(name)
//!       | dilate(e,d) | contract(e,d) | qdq(e)
//! ```
//!
//! `dilate(e,d)` substitutes q -> q^d; `contract(e,d)` keeps every d-th
//! coefficient, mapping sum a(n) q^n to sum a(d n) q^n.

use crate::error::{Error, Result};
use crate::qseries::{eta_series, phi_series, psi_series, theta_series, QSeries};
use rug::Rational;

/// Source of the series that an expression cannot build on its own.
/// `R(N,M)` and `G(N,M)` come from Rademacher sums (integer-snapped), and
/// `form(name)` from the registry; the provider owns precision and caching.
pub trait SeriesProvider {
    /// Sum over n of R_{N,M}(n) q^n as exact rationals, to order k.
    fn rademacher_series(&self, level: u64, m: u64, k: usize) -> Result<QSeries>;
    /// Sum over n of the scheme-subtracted integers G_{N,M}(n) q^n, to order k.
    fn subtracted_series(&self, level: u64, m: u64, k: usize) -> Result<QSeries>;
    /// q-expansion of a named weight-2 form from the registry, to order k.
    fn form_series(&self, name: &str, k: usize) -> Result<QSeries>;
}

/// A provider for contexts where only symbolic atoms are legal (tests,
/// standalone eta identities). Any R/G/form reference is an error.
pub struct NoProvider;

impl SeriesProvider for NoProvider {
    fn rademacher_series(&self, level: u64, m: u64, _k: usize) -> Result<QSeries> {
        Err(Error::Registry(format!(
            "R({level},{m}) not available in this context"
        )))
    }
    fn subtracted_series(&self, level: u64, m: u64, _k: usize) -> Result<QSeries> {
        Err(Error::Registry(format!(
            "G({level},{m}) not available in this context"
        )))
    }
    fn form_series(&self, name: &str, _k: usize) -> Result<QSeries> {
        Err(Error::Registry(format!(
            "form({name}) not available in this context"
        )))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Q,
    X,
    Y,
    Eta(u64),
    Psi(u64),
    Phi(u64),
    Theta(u64, u64),
    R(u64, u64),
    G(u64, u64),
    Form(String),
    Dilate(Box<Expr>, u64),
    Contract(Box<Expr>, u64),
    QdQ(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

/// Bindings for the curve variables during verification.
#[derive(Default)]
pub struct Bindings<'a> {
    pub x: Option<&'a QSeries>,
    pub y: Option<&'a QSeries>,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.parse_expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Registry(format!(
                "trailing input in expression at token {}: {text}",
                p.pos
            )));
        }
        Ok(e)
    }

    /// True if the expression references Rademacher-backed series, i.e. it
    /// cannot be evaluated purely symbolically.
    pub fn uses_rademacher(&self) -> bool {
        match self {
            Expr::R(..) | Expr::G(..) => true,
            Expr::Num(_)
            | Expr::Q
            | Expr::X
            | Expr::Y
            | Expr::Eta(_)
            | Expr::Psi(_)
            | Expr::Phi(_)
            | Expr::Theta(..)
            | Expr::Form(_) => false,
            Expr::Dilate(e, _) | Expr::Contract(e, _) | Expr::QdQ(e) | Expr::Neg(e) => {
                e.uses_rademacher()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_rademacher() || b.uses_rademacher()
            }
            Expr::Pow(e, _) => e.uses_rademacher(),
        }
    }

    /// Evaluate to an exact q-series with k coefficients of working order.
    pub fn eval(
        &self,
        provider: &dyn SeriesProvider,
        k: usize,
        bind: &Bindings,
    ) -> Result<QSeries> {
        match self {
            Expr::Num(c) => Ok(QSeries::constant(c.clone(), k)),
            Expr::Q => Ok(QSeries::q(k)),
            Expr::X => bind
                .x
                .map(|s| s.clone().truncated(k))
                .ok_or_else(|| Error::Registry("X is not bound in this context".into())),
            Expr::Y => bind
                .y
                .map(|s| s.clone().truncated(k))
                .ok_or_else(|| Error::Registry("Y is not bound in this context".into())),
            Expr::Eta(d) => Ok(eta_series(*d, k)),
            Expr::Psi(n) => psi_series(*n, k),
            Expr::Phi(n) => phi_series(*n, k),
            Expr::Theta(a, b) => Ok(theta_series(*a, *b, k)),
            Expr::R(level, m) => provider.rademacher_series(*level, *m, k),
            Expr::G(level, m) => provider.subtracted_series(*level, *m, k),
            Expr::Form(name) => provider.form_series(name, k),
            Expr::Dilate(e, d) => Ok(e.eval(provider, k, bind)?.dilate(*d)),
            // Contraction keeps only every d-th exponent, so the inner
            // series must be evaluated d times deeper to preserve coverage.
            Expr::Contract(e, d) => contract(&e.eval(provider, k * *d as usize, bind)?, *d),
            Expr::QdQ(e) => Ok(e.eval(provider, k, bind)?.qdq()),
            Expr::Neg(e) => Ok(e.eval(provider, k, bind)?.neg()),
            Expr::Add(a, b) => a.eval(provider, k, bind)?.add(&b.eval(provider, k, bind)?),
            Expr::Sub(a, b) => a.eval(provider, k, bind)?.sub(&b.eval(provider, k, bind)?),
            Expr::Mul(a, b) => Ok(a.eval(provider, k, bind)?.mul(&b.eval(provider, k, bind)?)),
            Expr::Div(a, b) => a.eval(provider, k, bind)?.div(&b.eval(provider, k, bind)?),
            Expr::Pow(e, exp) => e.eval(provider, k, bind)?.pow(*exp),
        }
    }
}

/// Keep every d-th coefficient: sum a(n) q^n  ->  sum a(d n) q^n.
/// Requires integer exponents (offset divisible by 24).
fn contract(s: &QSeries, d: u64) -> Result<QSeries> {
    if d == 0 {
        return Err(Error::Domain("contract step must be positive".into()));
    }
    if s.offset24.rem_euclid(24) != 0 {
        return Err(Error::Domain(
            "contract requires integer q-exponents".into(),
        ));
    }
    if s.order() == 0 {
        return Ok(QSeries::new(0, vec![]));
    }
    // Highest integer exponent with a known coefficient.
    let top = s.offset24 / 24 + s.order() as i64 - 1;
    if top < 0 {
        return Ok(QSeries::new(0, vec![]));
    }
    let k_out = (top / d as i64 + 1) as usize;
    let coeffs = (0..k_out)
        .map(|n| {
            s.coeff_int(d as i64 * n as i64)
                .expect("exponent within known range")
        })
        .collect();
    Ok(QSeries::new(0, coeffs))
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(i64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v: i64 = text[start..i]
                    .parse()
                    .map_err(|_| Error::Registry(format!("integer overflow in: {text}")))?;
                out.push(Token::Int(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Token::Ident(text[start..i].to_string()));
            }
            _ => {
                return Err(Error::Registry(format!(
                    "unexpected character {c:?} in expression: {text}"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Registry(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_primary()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let negative = if self.peek() == Some(&Token::Minus) {
                self.pos += 1;
                true
            } else {
                false
            };
            match self.next() {
                Some(Token::Int(e)) => {
                    let e = if negative { -e } else { e };
                    Ok(Expr::Pow(Box::new(base), e))
                }
                got => Err(Error::Registry(format!(
                    "exponent must be an integer literal, found {got:?}"
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn parse_primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Int(v)) => Ok(Expr::Num(Rational::from(v))),
            Some(Token::LParen) => {
                let e = self.parse_expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => self.parse_call(&name),
            got => Err(Error::Registry(format!(
                "expected a value, found {got:?}"
            ))),
        }
    }

    fn parse_call(&mut self, name: &str) -> Result<Expr> {
        match name {
            "q" => return Ok(Expr::Q),
            "X" => return Ok(Expr::X),
            "Y" => return Ok(Expr::Y),
            _ => {}
        }
        self.expect(Token::LParen)?;
        if name == "form" {
            // The argument is a bare registry name, not an expression.
            let inner = match self.next() {
                Some(Token::Ident(n)) => n,
                got => {
                    return Err(Error::Registry(format!(
                        "form() takes a bare name, found {got:?}"
                    )))
                }
            };
            self.expect(Token::RParen)?;
            return Ok(Expr::Form(inner));
        }
        let mut args = Vec::new();
        if self.peek() != Some(&Token::RParen) {
            loop {
                args.push(self.parse_expr()?);
                if self.peek() == Some(&Token::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Token::RParen)?;
        let int_arg = |e: &Expr| -> Result<u64> {
            if let Expr::Num(c) = e {
                if c.denom() == &1 {
                    if let Some(v) = c.numer().to_u64() {
                        return Ok(v);
                    }
                }
            }
            Err(Error::Registry(format!(
                "argument of {name} must be a positive integer literal"
            )))
        };
        match (name, args.len()) {
            ("eta", 1) => Ok(Expr::Eta(int_arg(&args[0])?)),
            ("psi", 1) => Ok(Expr::Psi(int_arg(&args[0])?)),
            ("phi", 1) => Ok(Expr::Phi(int_arg(&args[0])?)),
            ("theta", 2) => Ok(Expr::Theta(int_arg(&args[0])?, int_arg(&args[1])?)),
            ("R", 2) => Ok(Expr::R(int_arg(&args[0])?, int_arg(&args[1])?)),
            ("G", 2) => Ok(Expr::G(int_arg(&args[0])?, int_arg(&args[1])?)),
            ("dilate", 2) => Ok(Expr::Dilate(
                Box::new(args[0].clone()),
                int_arg(&args[1])?,
            )),
            ("contract", 2) => Ok(Expr::Contract(
                Box::new(args[0].clone()),
                int_arg(&args[1])?,
            )),
            ("qdq", 1) => Ok(Expr::QdQ(Box::new(args[0].clone()))),
            _ => Err(Error::Registry(format!(
                "unknown function {name} with {} argument(s)",
                args.len()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(text: &str, k: usize) -> QSeries {
        Expr::parse(text)
            .unwrap()
            .eval(&NoProvider, k, &Bindings::default())
            .unwrap()
    }

    fn int_coeffs(s: &QSeries, from: i64, upto: i64) -> Vec<i64> {
        (from..=upto)
            .map(|n| {
                let c = s.coeff_int(n).unwrap();
                assert_eq!(c.denom(), &1, "coefficient of q^{n} not integral");
                c.numer().to_i64().unwrap()
            })
            .collect()
    }

    #[test]
    fn parses_and_evaluates_hauptmodul() {
        // Level 6 Hauptmodul begins q + 5q^2 + 19q^3 + 61q^4 + 174q^5.
        let s = series("eta(2)*eta(6)^5/(eta(1)^5*eta(3))", 16);
        assert_eq!(int_coeffs(&s, 1, 5), vec![1, 5, 19, 61, 174]);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let s = series("-3 + 2*4^2 - 10/5", 4);
        assert_eq!(s.coeff_int(0).unwrap(), Rational::from(27));
        let t = series("(1 - q)^2", 8);
        assert_eq!(int_coeffs(&t, 0, 2), vec![1, -2, 1]);
    }

    #[test]
    fn rational_constants_survive_division() {
        let s = series("(3/2)*q + q/2", 6);
        assert_eq!(s.coeff_int(1).unwrap(), Rational::from(2));
    }

    #[test]
    fn contract_picks_every_second_coefficient() {
        // eta(25)/eta(1) = q + q^2 + 2q^3 + 3q^4 + 5q^5 + 7q^6 + ...;
        // contracting by 2 keeps the even-exponent entries 1, 3, 7.
        let s = series("contract(eta(25)/eta(1), 2)", 30);
        assert_eq!(int_coeffs(&s, 1, 3), vec![1, 3, 7]);
    }

    #[test]
    fn dilate_shifts_exponents() {
        let s = series("dilate(eta(25)/eta(1), 3)", 12);
        assert_eq!(int_coeffs(&s, 1, 6), vec![0, 0, 1, 0, 0, 1]);
    }

    #[test]
    fn negative_power_inverts() {
        let s = series("eta(1)^-1 * eta(1)", 10);
        assert_eq!(int_coeffs(&s, 0, 3), vec![1, 0, 0, 0]);
    }

    #[test]
    fn variables_require_bindings() {
        let e = Expr::parse("X^2 + Y").unwrap();
        assert!(e.eval(&NoProvider, 8, &Bindings::default()).is_err());
        let x = QSeries::q(8);
        let y = QSeries::one(8);
        let b = Bindings {
            x: Some(&x),
            y: Some(&y),
        };
        let s = e.eval(&NoProvider, 8, &b).unwrap();
        assert_eq!(int_coeffs(&s, 0, 2), vec![1, 0, 1]);
    }

    #[test]
    fn rademacher_atoms_are_flagged() {
        assert!(Expr::parse("R(3,2) - 1").unwrap().uses_rademacher());
        assert!(Expr::parse("G(21,2)/7").unwrap().uses_rademacher());
        assert!(!Expr::parse("eta(2)^24/eta(1)^24")
            .unwrap()
            .uses_rademacher());
    }

    #[test]
    fn form_takes_a_bare_name() {
        assert_eq!(Expr::parse("form(f11)").unwrap(), Expr::Form("f11".into()));
        assert!(Expr::parse("form(3)").is_err());
    }

    #[test]
    fn reports_parse_errors() {
        assert!(Expr::parse("eta(2").is_err());
        assert!(Expr::parse("2 +").is_err());
        assert!(Expr::parse("frob(3)").is_err());
        assert!(Expr::parse("eta(q)").is_err());
        assert!(Expr::parse("2^q").is_err());
    }
}
