use std::f64::consts::PI;

use super::{CouplingFunction, Harmonic};
use crate::{Error, Result};

pub(super) const GRAMMAR: &str = "\
Coupling functions are sums of signed terms (whitespace ignored):
  term   := [coef '*'] wave | coef | 'c'
  wave   := ('sin' | 'cos') '(' order [',' 'phase=' number] ')'
  coef   := number | 'pi'
`sin(n)` is sin(n x), `sin(n,phase=p)` is sin(n x + p); `cos` likewise.
A trailing `-c` subtracts f(0) so that the result vanishes at x = 0.
Examples: `sin(1)`, `sin(1)+cos(3)`, `-sin(1)`, `sin(1,phase=0.6)-c`, `0.5*cos(2)-0.1`.";

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(spec: &str) -> Result<Vec<Token>> {
    let err = |reason: String| Error::Parse {
        spec: spec.to_string(),
        reason,
    };
    let chars: Vec<char> = spec.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || chars[i] == 'E'
                    || ((chars[i] == '-' || chars[i] == '+') && matches!(chars[i - 1], 'e' | 'E')))
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{text}`")))?;
            out.push(Token::Num(v));
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*(),=".contains(ch) {
            out.push(Token::Sym(ch));
            i += 1;
        } else {
            return Err(err(format!("unexpected character `{ch}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    spec: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            spec: self.spec.to_string(),
            reason: reason.into(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.next() {
            Some(Token::Sym(s)) if s == c => Ok(()),
            other => Err(self.err(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let sign = match self.peek() {
            Some(Token::Sym('-')) => {
                self.pos += 1;
                -1.0
            }
            Some(Token::Sym('+')) => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        match self.next() {
            Some(Token::Num(v)) => Ok(sign * v),
            Some(Token::Ident(id)) if id == "pi" => Ok(sign * PI),
            other => Err(self.err(format!("expected a number, found {other:?}"))),
        }
    }

    fn wave(&mut self, kind: &str, scale: f64) -> Result<Harmonic> {
        self.expect('(')?;
        let order = match self.next() {
            Some(Token::Num(v)) if v >= 1.0 && v.fract() == 0.0 && v <= 1e6 => v as u32,
            other => {
                return Err(self.err(format!(
                    "expected a positive integer order, found {other:?}"
                )))
            }
        };
        let mut phase = 0.0;
        if let Some(Token::Sym(',')) = self.peek() {
            self.pos += 1;
            match self.next() {
                Some(Token::Ident(id)) if id == "phase" => {}
                other => return Err(self.err(format!("expected `phase`, found {other:?}"))),
            }
            self.expect('=')?;
            phase = self.number()?;
        }
        self.expect(')')?;
        let (sp, cp) = phase.sin_cos();
        // sin(nx + p) = cos p sin(nx) + sin p cos(nx)
        // cos(nx + p) = cos p cos(nx) - sin p sin(nx)
        Ok(match kind {
            "sin" => Harmonic {
                order,
                cos: scale * sp,
                sin: scale * cp,
            },
            _ => Harmonic {
                order,
                cos: scale * cp,
                sin: -scale * sp,
            },
        })
    }

    fn parse(mut self) -> Result<CouplingFunction> {
        let mut constant = 0.0;
        let mut harmonics = Vec::new();
        let mut zero_at_origin = false;
        let mut first = true;
        while self.peek().is_some() {
            let sign = match self.peek() {
                Some(Token::Sym('+')) => {
                    self.pos += 1;
                    1.0
                }
                Some(Token::Sym('-')) => {
                    self.pos += 1;
                    -1.0
                }
                _ if first => 1.0,
                other => return Err(self.err(format!("expected `+` or `-`, found {other:?}"))),
            };
            first = false;
            match self.next() {
                Some(Token::Ident(id)) if id == "c" => {
                    if sign > 0.0 {
                        return Err(self.err("`c` may only be subtracted"));
                    }
                    zero_at_origin = true;
                }
                Some(Token::Ident(id)) if id == "sin" || id == "cos" => {
                    harmonics.push(self.wave(&id, sign)?);
                }
                Some(tok @ (Token::Num(_) | Token::Ident(_))) => {
                    let coef = match tok {
                        Token::Num(v) => v,
                        Token::Ident(id) if id == "pi" => PI,
                        Token::Ident(id) => return Err(self.err(format!("unknown name `{id}`"))),
                        Token::Sym(_) => unreachable!(),
                    };
                    if let Some(Token::Sym('*')) = self.peek() {
                        self.pos += 1;
                        match self.next() {
                            Some(Token::Ident(id)) if id == "sin" || id == "cos" => {
                                harmonics.push(self.wave(&id, sign * coef)?);
                            }
                            other => {
                                return Err(
                                    self.err(format!("expected `sin` or `cos`, found {other:?}"))
                                )
                            }
                        }
                    } else {
                        constant += sign * coef;
                    }
                }
                other => return Err(self.err(format!("unexpected token {other:?}"))),
            }
        }
        if first {
            return Err(self.err("empty expression"));
        }
        let mut f = CouplingFunction::new(constant, harmonics);
        if zero_at_origin {
            f.constant -= f.eval(0.0);
        }
        Ok(f)
    }
}

pub(super) fn parse(spec: &str) -> Result<CouplingFunction> {
    let tokens = tokenize(spec)?;
    Parser {
        spec,
        tokens,
        pos: 0,
    }
    .parse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CouplingFunction, b: &CouplingFunction) -> bool {
        (-30..=30).all(|i| {
            let x = i as f64 * 0.1;
            (a.eval(x) - b.eval(x)).abs() < 1e-14
        })
    }

    #[test]
    fn named_forms() {
        assert!(close(&parse("sin(1)").unwrap(), &CouplingFunction::sine()));
        assert!(close(
            &parse("sin(1)+cos(3)").unwrap(),
            &CouplingFunction::sine_plus_cos3()
        ));
        assert!(close(
            &parse("sin(1,phase=0.6)-c").unwrap(),
            &CouplingFunction::shifted_sine(0.6)
        ));
        let neg = parse("-sin(1)").unwrap();
        assert_eq!(neg.eval(1.0), -(1.0f64.sin()));
    }

    #[test]
    fn coefficients_and_constants() {
        let f = parse(" 0.5 * cos(2) - 2e-1 + pi*sin(1, phase = -pi)").unwrap();
        for x in [-1.0f64, 0.0, 2.5] {
            let want = 0.5 * (2.0 * x).cos() - 0.2 + PI * (x - PI).sin();
            assert!((f.eval(x) - want).abs() < 1e-14);
        }
        let g = parse("cos(1,phase=0.3)").unwrap();
        assert!((g.eval(0.7) - 1.0f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        for bad in [
            "",
            "sin",
            "sin(0)",
            "sin(1.5)",
            "tan(1)",
            "sin(1)+c",
            "sin(1) cos(1)",
            "sin(1)$",
        ] {
            assert!(parse(bad).is_err(), "{bad} should fail");
        }
    }
}
