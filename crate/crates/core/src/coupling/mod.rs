//! Coupling functions: finite trigonometric polynomials
//!
//! `f(x) = c + Σ_n (a_n cos(n x) + b_n sin(n x))`
//!
//! Restricting to trigonometric polynomials makes every coupling function
//! 2π-periodic and smooth by construction, and lets `f'` and `f''` be
//! evaluated exactly from the coefficients.

mod parse;
mod profile;

pub use profile::{Branch, CouplingProfile, DEFAULT_GRID};

use std::fmt;

use serde::{Deserialize, Serialize};

/// One harmonic `a cos(n x) + b sin(n x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub order: u32,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingFunction {
    constant: f64,
    harmonics: Vec<Harmonic>,
}

impl CouplingFunction {
    /// Builds `constant + Σ harmonics`. Harmonics of equal order are merged
    /// and the list is kept sorted by order; zero-order terms fold into the
    /// constant.
    pub fn new(constant: f64, harmonics: impl IntoIterator<Item = Harmonic>) -> Self {
        let mut constant = constant;
        let mut merged: Vec<Harmonic> = Vec::new();
        for h in harmonics {
            if h.order == 0 {
                constant += h.cos;
                continue;
            }
            match merged.iter_mut().find(|m| m.order == h.order) {
                Some(m) => {
                    m.cos += h.cos;
                    m.sin += h.sin;
                }
                None => merged.push(h),
            }
        }
        merged.sort_by_key(|h| h.order);
        Self {
            constant,
            harmonics: merged,
        }
    }

    /// `sin(x)`
    pub fn sine() -> Self {
        Self::new(
            0.0,
            [Harmonic {
                order: 1,
                cos: 0.0,
                sin: 1.0,
            }],
        )
    }

    /// `sin(x + shift) - sin(shift)`, a non-odd function with `f(0) = 0`.
    pub fn shifted_sine(shift: f64) -> Self {
        Self::new(
            -shift.sin(),
            [Harmonic {
                order: 1,
                cos: shift.sin(),
                sin: shift.cos(),
            }],
        )
    }

    /// `sin(x) + cos(3x)`
    pub fn sine_plus_cos3() -> Self {
        Self::new(
            0.0,
            [
                Harmonic {
                    order: 1,
                    cos: 0.0,
                    sin: 1.0,
                },
                Harmonic {
                    order: 3,
                    cos: 1.0,
                    sin: 0.0,
                },
            ],
        )
    }

    /// Parses the compact text form, see [`CouplingFunction::GRAMMAR`].
    pub fn parse(spec: &str) -> crate::Result<Self> {
        parse::parse(spec)
    }

    pub const GRAMMAR: &'static str = parse::GRAMMAR;

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_constant(&self) -> bool {
        self.harmonics.iter().all(|h| h.cos == 0.0 && h.sin == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.constant;
        for h in &self.harmonics {
            let (s, c) = (h.order as f64 * x).sin_cos();
            acc += h.cos * c + h.sin * s;
        }
        acc
    }

    /// Termwise analytic derivative.
    pub fn derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for h in &self.harmonics {
            let n = h.order as f64;
            let (s, c) = (n * x).sin_cos();
            acc += n * (h.sin * c - h.cos * s);
        }
        acc
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for h in &self.harmonics {
            let n = h.order as f64;
            let (s, c) = (n * x).sin_cos();
            acc -= n * n * (h.cos * c + h.sin * s);
        }
        acc
    }

    /// `f(x)` and `f'(x)` in one pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut v = self.constant;
        let mut d = 0.0;
        for h in &self.harmonics {
            let n = h.order as f64;
            let (s, c) = (n * x).sin_cos();
            v += h.cos * c + h.sin * s;
            d += n * (h.sin * c - h.cos * s);
        }
        (v, d)
    }

    /// The reflected function `x -> f(-x)`.
    pub fn reflected(&self) -> Self {
        Self {
            constant: self.constant,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic { sin: -h.sin, ..*h })
                .collect(),
        }
    }

    /// True when every cosine coefficient and the constant vanish.
    pub fn is_odd(&self) -> bool {
        self.constant == 0.0 && self.harmonics.iter().all(|h| h.cos == 0.0)
    }

    pub fn profile(&self) -> crate::Result<CouplingProfile> {
        CouplingProfile::new(self, DEFAULT_GRID)
    }
}

impl fmt::Display for CouplingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut term = |f: &mut fmt::Formatter<'_>, coeff: f64, body: &str| -> fmt::Result {
            if coeff == 0.0 {
                return Ok(());
            }
            if first {
                if coeff < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if coeff < 0.0 { "-" } else { "+" })?;
            }
            first = false;
            let a = coeff.abs();
            match (a == 1.0, body.is_empty()) {
                (_, true) => write!(f, "{a}"),
                (true, false) => write!(f, "{body}"),
                (false, false) => write!(f, "{a}*{body}"),
            }
        };
        for h in &self.harmonics {
            term(f, h.sin, &format!("sin({})", h.order))?;
            term(f, h.cos, &format!("cos({})", h.order))?;
        }
        term(f, self.constant, "")?;
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
