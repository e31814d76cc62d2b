//! Text format for axisymmetric potentials `V(rho, z)`.
//!
//! ```text
//! # comments run to the end of the line
//! 1/2*rho^2 + 1/2*rho^2*z^2 - 0.125*rho^4
//! ```
//!
//! Grammar: infix `+ - * /` with the usual precedence, `^` with a
//! non-negative integer exponent, parentheses, the symbols `rho` and `z`,
//! and decimal or scientific numbers. Division is only allowed by constants.

use std::collections::BTreeMap;

use crate::error::ParseError;

/// Real polynomial in `(rho, z)`, keyed by `(rho exponent, z exponent)`.
pub type RealPoly2 = BTreeMap<(u32, u32), f64>;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Rho,
    Z,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    text: String,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let ch = chars[i];
        let (tl, tc) = (line, col);
        let single = |tok: Tok| Token {
            tok,
            text: ch.to_string(),
            line: tl,
            column: tc,
        };
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '+' => out.push(single(Tok::Plus)),
            '-' => out.push(single(Tok::Minus)),
            '*' => out.push(single(Tok::Star)),
            '/' => out.push(single(Tok::Slash)),
            '^' => out.push(single(Tok::Caret)),
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    line: tl,
                    column: tc,
                    message: format!("malformed number '{text}'"),
                })?;
                col += i - start;
                out.push(Token {
                    tok: Tok::Num(value),
                    text,
                    line: tl,
                    column: tc,
                });
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let tok = match text.as_str() {
                    "rho" | "ρ" => Tok::Rho,
                    "z" => Tok::Z,
                    _ => {
                        return Err(ParseError::Syntax {
                            line: tl,
                            column: tc,
                            message: format!("unknown symbol '{text}' (expected rho or z)"),
                        })
                    }
                };
                col += i - start;
                out.push(Token {
                    tok,
                    text,
                    line: tl,
                    column: tc,
                });
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tl,
                    column: tc,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::End,
        text: String::new(),
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn poly_add(a: &RealPoly2, b: &RealPoly2, sign: f64) -> RealPoly2 {
    let mut out = a.clone();
    for (&k, &v) in b {
        *out.entry(k).or_insert(0.0) += sign * v;
    }
    out.retain(|_, v| *v != 0.0);
    out
}

fn poly_mul(a: &RealPoly2, b: &RealPoly2) -> RealPoly2 {
    let mut out = RealPoly2::new();
    for (&(ra, za), &va) in a {
        for (&(rb, zb), &vb) in b {
            *out.entry((ra + rb, za + zb)).or_insert(0.0) += va * vb;
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

fn constant(v: f64) -> RealPoly2 {
    let mut p = RealPoly2::new();
    if v != 0.0 {
        p.insert((0, 0), v);
    }
    p
}

fn as_constant(p: &RealPoly2) -> Option<f64> {
    match p.len() {
        0 => Some(0.0),
        1 => p.get(&(0, 0)).copied(),
        _ => None,
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, t: &Token, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<RealPoly2, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    acc = poly_add(&acc, &self.term()?, 1.0);
                }
                Tok::Minus => {
                    self.next();
                    acc = poly_add(&acc, &self.term()?, -1.0);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RealPoly2, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    acc = poly_mul(&acc, &self.unary()?);
                }
                Tok::Slash => {
                    let op = self.next();
                    let rhs = self.unary()?;
                    let d = as_constant(&rhs).ok_or_else(|| ParseError::NonPolynomial {
                        line: op.line,
                        column: op.column,
                        message: "division by a non-constant expression".into(),
                    })?;
                    if d == 0.0 {
                        return Err(self.syntax(&op, "division by zero"));
                    }
                    acc = poly_mul(&acc, &constant(1.0 / d));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RealPoly2, ParseError> {
        match self.peek().tok {
            Tok::Minus => {
                self.next();
                Ok(poly_mul(&constant(-1.0), &self.unary()?))
            }
            Tok::Plus => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RealPoly2, ParseError> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        let caret = self.next();
        let negative = if self.peek().tok == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        let Tok::Num(v) = t.tok else {
            return Err(self.syntax(&t, "expected an integer exponent after '^'"));
        };
        if negative || v.fract() != 0.0 || t.text.contains('.') || t.text.contains(['e', 'E']) {
            return Err(ParseError::NonPolynomial {
                line: caret.line,
                column: caret.column,
                message: format!(
                    "exponent {}{} is not a non-negative integer",
                    if negative { "-" } else { "" },
                    t.text
                ),
            });
        }
        let n = v as u32;
        let mut out = constant(1.0);
        for _ in 0..n {
            out = poly_mul(&out, &base);
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<RealPoly2, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(constant(v)),
            Tok::Rho => Ok(RealPoly2::from([((1, 0), 1.0)])),
            Tok::Z => Ok(RealPoly2::from([((0, 1), 1.0)])),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.next();
                if close.tok != Tok::RParen {
                    return Err(self.syntax(&close, "expected ')'"));
                }
                Ok(inner)
            }
            Tok::End => Err(self.syntax(&t, "unexpected end of input")),
            _ => Err(self.syntax(&t, format!("unexpected '{}'", t.text))),
        }
    }
}

/// Parses potential text into an expanded polynomial.
pub fn parse_polynomial(text: &str) -> Result<RealPoly2, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    if p.peek().tok == Tok::End {
        let t = p.peek().clone();
        return Err(p.syntax(&t, "empty potential"));
    }
    let poly = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return Err(p.syntax(&t, format!("unexpected '{}'", t.text)));
    }
    Ok(poly)
}

/// Prints a polynomial in the same grammar. Coefficients use the shortest
/// representation that reads back to the identical double.
pub fn format_polynomial(poly: &RealPoly2) -> String {
    let mut keys: Vec<&(u32, u32)> = poly.keys().collect();
    keys.sort_by_key(|&&(r, z)| (r + z, r, z));
    let mut out = String::new();
    for (i, &&(r, z)) in keys.iter().enumerate() {
        let c = poly[&(r, z)];
        let mag = c.abs();
        if i == 0 {
            if c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&format!("{mag:?}"));
        for (name, e) in [("rho", r), ("z", z)] {
            match e {
                0 => {}
                1 => out.push_str(&format!("*{name}")),
                _ => out.push_str(&format!("*{name}^{e}")),
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_term() {
        let p = parse_polynomial("0.5*rho^2").unwrap();
        assert_eq!(p, RealPoly2::from([((2, 0), 0.5)]));
    }

    #[test]
    fn rational_coefficients() {
        let p = parse_polynomial("1/2*rho^2 - 1/8*rho^4").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[&(2, 0)], 0.5);
        assert_eq!(p[&(4, 0)], -0.125);
    }

    #[test]
    fn parentheses_expand() {
        let p = parse_polynomial("(rho + z)^2 - 2*rho*z").unwrap();
        assert_eq!(p, RealPoly2::from([((2, 0), 1.0), ((0, 2), 1.0)]));
        let q = parse_polynomial("0.5*rho^2*(1 - rho^2/8)^2").unwrap();
        assert_eq!(q[&(6, 0)], 1.0 / 128.0);
    }

    #[test]
    fn comments_and_lines() {
        let p = parse_polynomial("# header\n 0.5*rho^2 # quadratic\n + rho^2*z^2").unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_polynomial("0.5*rho^2\n + * z").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 2,
                column: 4,
                message: "unexpected '*'".into()
            }
        );
        assert!(matches!(parse_polynomial("rho + x"), Err(ParseError::Syntax { column: 7, .. })));
        assert!(matches!(parse_polynomial("(rho"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_polynomial(""), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn non_polynomial_inputs() {
        assert!(matches!(parse_polynomial("rho^-2"), Err(ParseError::NonPolynomial { .. })));
        assert!(matches!(parse_polynomial("rho^0.5"), Err(ParseError::NonPolynomial { .. })));
        assert!(matches!(parse_polynomial("1/rho"), Err(ParseError::NonPolynomial { .. })));
    }

    #[test]
    fn format_round_trips() {
        let p = RealPoly2::from([((2, 0), 0.5), ((4, 2), -1.0 / 16.0), ((2, 2), 0.1 + 0.2)]);
        let text = format_polynomial(&p);
        assert_eq!(parse_polynomial(&text).unwrap(), p);
    }
}
