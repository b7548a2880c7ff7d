use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::CouplingFunction;
use crate::numeric::{bisect, wrap_angle, TAU};
use crate::{Error, Result};

/// Default number of grid points used to bracket extrema and zeros.
pub const DEFAULT_GRID: usize = 100_000;

const REFINE_TOL: f64 = 1e-14;

/// A maximal open interval on which `f' > 0`.
///
/// `start` lies in `(-π, π]`; `end` may exceed `π` when the interval wraps
/// around the period boundary. `f` maps the branch increasingly onto
/// `(low, high)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub start: f64,
    pub end: f64,
    pub low: f64,
    pub high: f64,
}

impl Branch {
    pub fn contains_value(&self, y: f64) -> bool {
        self.low < y && y < self.high
    }
}

/// Scalar and structural data about a coupling function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    /// Global maximum `f_u`.
    pub f_upper: f64,
    /// Global minimum `f_l`.
    pub f_lower: f64,
    /// `max |f'|`.
    pub max_abs_derivative: f64,
    /// Leftmost zero in `(-π, π]` with `f' > 0`.
    pub positive_slope_zero: f64,
    /// Increasing branches forming the inversion set, ordered by `start`.
    pub branches: Vec<Branch>,
}

/// Points in `[x_i, x_i + h]` where `g` changes sign, scanning the grid
/// cyclically. Each entry is `(root, rising)`.
fn sign_changes<G: Fn(f64) -> f64>(grid: &[f64], values: &[f64], h: f64, g: G) -> Vec<(f64, bool)> {
    let n = grid.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (values[i], values[(i + 1) % n]);
        if (a > 0.0) != (b > 0.0) {
            let lo = grid[i];
            let root = bisect(lo, lo + h, REFINE_TOL, &g);
            out.push((wrap_angle(root), b > 0.0));
        }
    }
    out
}

impl CouplingProfile {
    pub fn new(f: &CouplingFunction, grid_size: usize) -> Result<Self> {
        if f.is_constant() {
            return Err(Error::ConstantFunction);
        }
        let grid_size = grid_size.max(16);
        let h = TAU / grid_size as f64;
        let grid: Vec<f64> = (0..grid_size).map(|i| -PI + (i + 1) as f64 * h).collect();
        let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
        let slopes: Vec<f64> = grid.iter().map(|&x| f.derivative(x)).collect();
        let curvatures: Vec<f64> = grid.iter().map(|&x| f.second_derivative(x)).collect();

        // Critical points, sorted around the circle.
        let mut critical = sign_changes(&grid, &slopes, h, |x| f.derivative(x));
        if critical.is_empty() {
            return Err(Error::ConstantFunction);
        }
        critical.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut f_upper = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut f_lower = values.iter().copied().fold(f64::INFINITY, f64::min);
        for &(x, _) in &critical {
            let v = f.eval(x);
            f_upper = f_upper.max(v);
            f_lower = f_lower.min(v);
        }

        let mut max_abs_derivative = slopes.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for (x, _) in sign_changes(&grid, &curvatures, h, |x| f.second_derivative(x)) {
            max_abs_derivative = max_abs_derivative.max(f.derivative(x).abs());
        }

        if !(f_lower < 0.0 && 0.0 < f_upper) {
            return Err(Error::NoZeroCrossing {
                lower: f_lower,
                upper: f_upper,
            });
        }

        // f' rises through zero at a local minimum of f; each minimum opens a
        // branch that closes at the next maximum around the circle.
        let mut all_branches = Vec::new();
        let m = critical.len();
        for i in 0..m {
            let (start, rising) = critical[i];
            if !rising {
                continue;
            }
            let (mut end, next_rising) = critical[(i + 1) % m];
            if next_rising {
                continue;
            }
            if end <= start {
                end += TAU;
            }
            all_branches.push(Branch {
                start,
                end,
                low: f.eval(start),
                high: f.eval(end),
            });
        }
        all_branches.sort_by(|a, b| a.start.total_cmp(&b.start));
        let branches = covering_prefix(&all_branches, f_lower, f_upper);

        let positive_slope_zero = sign_changes(&grid, &values, h, |x| f.eval(x))
            .into_iter()
            .filter(|&(x, rising)| rising && f.derivative(x) > 0.0)
            .map(|(x, _)| if x - (-PI) < 1e-13 { PI } else { x })
            .min_by(|a, b| a.total_cmp(b))
            .ok_or(Error::NoZeroCrossing {
                lower: f_lower,
                upper: f_upper,
            })?;

        Ok(Self {
            f_upper,
            f_lower,
            max_abs_derivative,
            positive_slope_zero,
            branches,
        })
    }

    /// Returns the point on the first branch whose image contains `y`,
    /// wrapped into `(-π, π]`.
    pub fn invert(&self, f: &CouplingFunction, y: f64) -> Result<f64> {
        let out_of_range = || Error::OutOfRange {
            value: y,
            lower: self.f_lower,
            upper: self.f_upper,
        };
        if !(self.f_lower < y && y < self.f_upper) {
            return Err(out_of_range());
        }
        let branch = self
            .branches
            .iter()
            .find(|b| b.contains_value(y))
            .ok_or_else(out_of_range)?;
        let x = bisect(branch.start, branch.end, 0.0, |x| f.eval(x) - y);
        Ok(wrap_angle(x))
    }

    /// `1 + max(|f_l / f_u|, |f_u / f_l|)`
    pub fn ratio_upper_bound(&self) -> f64 {
        let r = (self.f_lower / self.f_upper).abs();
        1.0 + r.max(1.0 / r)
    }
}

/// Shortest prefix (by left endpoint) whose open images cover `(lower, upper)`.
fn covering_prefix(branches: &[Branch], lower: f64, upper: f64) -> Vec<Branch> {
    // Extremal values are attained exactly at branch endpoints, so they agree
    // with the global extrema up to refinement error.
    let slack = 1e-12 * (upper - lower);
    for len in 1..=branches.len() {
        let mut images: Vec<(f64, f64)> = branches[..len].iter().map(|b| (b.low, b.high)).collect();
        images.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = lower;
        let mut started = false;
        for (lo, hi) in images {
            let joins = if started {
                lo < reach
            } else {
                lo <= lower + slack
            };
            if joins {
                started = true;
                reach = reach.max(hi);
            }
        }
        if started && reach >= upper - slack {
            return branches[..len].to_vec();
        }
    }
    branches.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::Harmonic;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    #[test]
    fn sine_profile() {
        let p = CouplingFunction::sine().profile().unwrap();
        assert!((p.f_upper - 1.0).abs() < 1e-15);
        assert!((p.f_lower + 1.0).abs() < 1e-15);
        assert!((p.max_abs_derivative - 1.0).abs() < 1e-15);
        assert!(p.positive_slope_zero.abs() < 1e-14);
        assert_eq!(p.branches.len(), 1);
        assert!((p.branches[0].start + FRAC_PI_2).abs() < 1e-12);
        assert!((p.branches[0].end - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn shifted_sine_profile() {
        let p = CouplingFunction::shifted_sine(0.6).profile().unwrap();
        let s = 0.6f64.sin();
        assert!((p.f_upper - (1.0 - s)).abs() < 1e-14);
        assert!((p.f_lower - (-1.0 - s)).abs() < 1e-14);
        assert!((p.f_upper - 0.43535752660496463).abs() < 1e-12);
        assert!(p.positive_slope_zero.abs() < 1e-14);
        assert!((p.ratio_upper_bound() - 4.593925401029676).abs() < 1e-9);
    }

    #[test]
    fn negative_sine_branch_wraps() {
        let f = CouplingFunction::new(
            0.0,
            [Harmonic {
                order: 1,
                cos: 0.0,
                sin: -1.0,
            }],
        );
        let p = f.profile().unwrap();
        assert_eq!(p.branches.len(), 1);
        let b = p.branches[0];
        assert!((b.start - FRAC_PI_2).abs() < 1e-12);
        assert!((b.end - 3.0 * FRAC_PI_2).abs() < 1e-12);
        assert!((p.positive_slope_zero - PI).abs() < 1e-12);
        let x = p.invert(&f, 0.5).unwrap();
        assert!((f.eval(x) - 0.5).abs() < 1e-14);
        assert!(f.derivative(x) > 0.0);
        assert!(x > -PI && x <= PI);
    }

    #[test]
    fn invert_sine() {
        let f = CouplingFunction::sine();
        let p = f.profile().unwrap();
        assert!((p.invert(&f, 0.5).unwrap() - FRAC_PI_6).abs() < 1e-15);
        assert!(p.invert(&f, 0.0).unwrap().abs() < 1e-15);
        assert!(matches!(p.invert(&f, 1.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(p.invert(&f, -1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn inadmissible_functions() {
        let constant = CouplingFunction::new(1.0, []);
        assert!(matches!(constant.profile(), Err(Error::ConstantFunction)));
        let positive = CouplingFunction::parse("sin(1)+2").unwrap();
        assert!(matches!(
            positive.profile(),
            Err(Error::NoZeroCrossing { .. })
        ));
        // touches zero only at its minimum
        let touching = CouplingFunction::parse("cos(1)+1").unwrap();
        assert!(matches!(
            touching.profile(),
            Err(Error::NoZeroCrossing { .. })
        ));
    }
}
