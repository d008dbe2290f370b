//! Plain-text monomial syntax: `2 q^2 p - 0.5 p^3 + 1/3 i h q`.
//!
//! A term is a product of factors separated by spaces or `*`: an unsigned
//! number (integer, decimal or `a/b`), `i`, and powers of `h`, `q`, `p`.
//! Printing produces the same syntax with exact fractions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::{Coefficient, PolynomialObservable};
use super::series::FormalSeries;
use super::StarError;

/// Exact value of a plain decimal literal such as `-12.075`.
pub(crate) fn parse_decimal(text: &str) -> Option<BigRational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let r = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Some(if neg { -r } else { r })
}

#[derive(Debug, Default)]
struct Term {
    coeff: Option<BigRational>,
    imaginary: bool,
    h: usize,
    q: u32,
    p: u32,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> StarError {
        StarError::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_whitespace(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if f(c)) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn exponent(&mut self) -> Result<u32, StarError> {
        if self.peek() != Some('^') {
            return Ok(1);
        }
        self.pos += 1;
        let digits = self.take_while(|c| c.is_ascii_digit());
        digits.parse().map_err(|_| self.error("expected an exponent after '^'"))
    }

    fn number(&mut self) -> Result<BigRational, StarError> {
        let start = self.pos;
        let lit = self.take_while(|c| c.is_ascii_digit() || c == '.');
        let num = parse_decimal(lit).ok_or_else(|| StarError::Parse {
            position: start,
            message: format!("malformed number '{lit}'"),
        })?;
        if self.peek() != Some('/') {
            return Ok(num);
        }
        self.pos += 1;
        let den = self.take_while(|c| c.is_ascii_digit() || c == '.');
        let den = parse_decimal(den).ok_or_else(|| self.error("malformed denominator"))?;
        if den.is_zero() {
            return Err(self.error("zero denominator"));
        }
        Ok(num / den)
    }

    fn terms(&mut self) -> Result<Vec<(bool, Term)>, StarError> {
        let mut out = Vec::new();
        self.skip_whitespace();
        if self.peek().is_none() {
            return Err(self.error("empty expression"));
        }
        loop {
            self.skip_whitespace();
            let mut negative = false;
            match self.peek() {
                Some('+') => self.pos += 1,
                Some('-') => {
                    negative = true;
                    self.pos += 1;
                }
                _ if !out.is_empty() => return Err(self.error("expected '+' or '-'")),
                _ => {}
            }
            let mut term = Term::default();
            let mut factors = 0;
            loop {
                self.skip_whitespace();
                let starred = self.peek() == Some('*');
                if starred {
                    if factors == 0 {
                        return Err(self.error("'*' needs a factor on its left"));
                    }
                    self.pos += 1;
                    self.skip_whitespace();
                }
                match self.peek() {
                    Some(c) if c.is_ascii_digit() || c == '.' => {
                        let n = self.number()?;
                        term.coeff = Some(term.coeff.take().unwrap_or_else(BigRational::one) * n);
                    }
                    Some('i') => {
                        self.pos += 1;
                        if term.imaginary {
                            negative = !negative;
                        }
                        term.imaginary = !term.imaginary;
                    }
                    Some(v @ ('h' | 'q' | 'p')) => {
                        self.pos += 1;
                        let e = self.exponent()?;
                        match v {
                            'h' => term.h += e as usize,
                            'q' => term.q += e,
                            _ => term.p += e,
                        }
                    }
                    Some('+' | '-') | None if !starred => break,
                    Some('+' | '-') | None => return Err(self.error("expected a factor after '*'")),
                    Some(c) => return Err(self.error(format!("unexpected character '{c}'"))),
                }
                factors += 1;
            }
            if factors == 0 {
                return Err(self.error("empty term"));
            }
            out.push((negative, term));
            if self.peek().is_none() {
                return Ok(out);
            }
        }
    }
}

fn term_coefficient(negative: bool, t: &Term) -> Coefficient {
    let mut r = t.coeff.clone().unwrap_or_else(BigRational::one);
    if negative {
        r = -r;
    }
    if t.imaginary {
        Complex::new(BigRational::zero(), r)
    } else {
        Complex::new(r, BigRational::zero())
    }
}

/// Parses a series; the order is the larger of `order` and the highest `h`
/// power present.
pub fn parse_series(text: &str, order: usize) -> Result<FormalSeries, StarError> {
    let terms = Parser { src: text, pos: 0 }.terms()?;
    let top = terms.iter().map(|(_, t)| t.h).max().unwrap_or(0).max(order);
    let mut coeffs = vec![PolynomialObservable::zero(); top + 1];
    for (neg, t) in &terms {
        coeffs[t.h].add_term(t.q, t.p, term_coefficient(*neg, t));
    }
    Ok(FormalSeries::from_coefficients(coeffs))
}

impl FromStr for PolynomialObservable {
    type Err = StarError;

    fn from_str(s: &str) -> Result<Self, StarError> {
        let series = parse_series(s, 0)?;
        if series.order() > 0 {
            return Err(StarError::Parse {
                position: s.find('h').unwrap_or(0),
                message: "h is not allowed in a polynomial".into(),
            });
        }
        Ok(series.coefficient(0))
    }
}

fn write_power(out: &mut Vec<String>, var: &str, e: u64) {
    match e {
        0 => {}
        1 => out.push(var.to_string()),
        _ => out.push(format!("{var}^{e}")),
    }
}

fn write_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (usize, u32, u32, &'a Coefficient)>,
) -> fmt::Result {
    let mut first = true;
    for (n, a, b, c) in terms {
        for (part, imaginary) in [(&c.re, false), (&c.im, true)] {
            if part.is_zero() {
                continue;
            }
            let mut factors = Vec::new();
            if imaginary {
                factors.push("i".to_string());
            }
            write_power(&mut factors, "h", n as u64);
            write_power(&mut factors, "q", a as u64);
            write_power(&mut factors, "p", b as u64);
            let mag = part.abs();
            if !mag.is_one() || factors.is_empty() {
                factors.insert(0, mag.to_string());
            }
            let body = factors.join(" ");
            match (first, part.is_negative()) {
                (true, true) => write!(f, "-{body}")?,
                (true, false) => write!(f, "{body}")?,
                (false, true) => write!(f, " - {body}")?,
                (false, false) => write!(f, " + {body}")?,
            }
            first = false;
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

/// Terms are listed by descending total degree, then descending q-degree.
fn ordered(f: &PolynomialObservable) -> Vec<(u32, u32, &Coefficient)> {
    let mut v: Vec<_> = f.terms().map(|(&(a, b), c)| (a, b, c)).collect();
    v.sort_by(|x, y| (y.0 + y.1, y.0).cmp(&(x.0 + x.1, x.0)));
    v
}

impl fmt::Display for PolynomialObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, ordered(self).into_iter().map(|(a, b, c)| (0, a, b, c)))
    }
}

impl fmt::Display for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let all = self
            .coefficients()
            .iter()
            .enumerate()
            .flat_map(|(n, p)| ordered(p).into_iter().map(move |(a, b, c)| (n, a, b, c)));
        write_terms(f, all)
    }
}
