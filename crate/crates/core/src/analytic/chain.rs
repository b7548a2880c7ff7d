use nalgebra::{DMatrix, DVector};

use super::{chain_threshold, check_stability, LockedState};
use crate::coupling::{CouplingFunction, CouplingProfile};
use crate::frequencies::FrequencyVector;
use crate::model::{Scheme, Topology};
use crate::numeric::bisect;
use crate::{Error, Result};

/// Stable telescopic chain state `φ_k = f|_Λ^{-1}(Γ D_k)`.
pub fn chain_locked_state(
    f: &CouplingFunction,
    p: &CouplingProfile,
    fv: &FrequencyVector,
    gamma: f64,
) -> Result<LockedState> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma must be non-negative, got {gamma}"
        )));
    }
    let cd = fv.cumulative_deviations();
    let threshold = chain_threshold(p, &cd);
    if gamma >= threshold {
        return Err(Error::AboveThreshold { gamma, threshold });
    }
    let phi =
        cd.d.iter()
            .map(|&d| p.invert(f, gamma * d))
            .collect::<Result<Vec<_>>>()?;
    let mut state = LockedState {
        phi,
        gamma,
        omega: gamma * fv.mean(),
        topology: Topology::Chain,
        scheme: Scheme::Telescopic,
        stable: false,
    };
    state.stable = check_stability(&state, f);
    Ok(state)
}

/// Outcome of the standard-coupling recursion for one trial frequency.
enum Shot {
    /// Links and the closing mismatch `ω_N + f(φ_{N-1}) - Ω`.
    Closed(Vec<f64>, f64),
    /// Some `f(-φ_k)` left `(f_l, f_u)`: above when `true`.
    Exit(bool),
}

/// Runs the standard-coupling recursion for a trial frequency `omega`:
/// `f(-φ_1) = Ω - ω_1`, `f(-φ_k) = Ω - ω_k - f(φ_{k-1})`. Each link is
/// taken from the increasing branch of `x -> f(x)` at `x = -φ_k`.
fn standard_recursion(
    f: &CouplingFunction,
    p: &CouplingProfile,
    omegas: &[f64],
    omega: f64,
) -> Shot {
    let n = omegas.len();
    let mut phi = Vec::with_capacity(n - 1);
    let mut incoming = 0.0;
    for &w in &omegas[..n - 1] {
        let y = omega - w - incoming;
        let Ok(x) = p.invert(f, y) else {
            return Shot::Exit(y >= p.f_upper);
        };
        let link = -x;
        incoming = f.eval(link);
        phi.push(link);
    }
    Shot::Closed(phi, omegas[n - 1] + incoming - omega)
}

const OMEGA_SCAN: usize = 4000;

/// Locked state of a chain with standard coupling, found by shooting on
/// the common frequency `Ω`.
///
/// The scan covers `[min ω - |f_l| - |f_u|, max ω + |f_l| + |f_u|]`. When
/// the recursion leaves the range of `f` the mismatch takes the sign of a
/// too large (negative) or too small (positive) `Ω`, so narrow windows of
/// admissible `Ω` still show up as sign changes. Every sign change is
/// refined by bisection; stable roots are preferred, then the one nearest
/// the mean natural frequency.
///
/// Shooting loses all precision for long chains, because errors in `Ω`
/// grow geometrically along the recursion. When the scan finds nothing,
/// the full system is solved by Newton continuation in `Γ`, starting
/// from the exact state `φ = 0` at `Γ = 0`.
pub fn standard_chain_locked_state(
    f: &CouplingFunction,
    p: &CouplingProfile,
    fv: &FrequencyVector,
    gamma: f64,
) -> Result<LockedState> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma must be non-negative, got {gamma}"
        )));
    }
    let omegas = fv.scaled(gamma);
    let mean = omegas.iter().sum::<f64>() / omegas.len() as f64;
    let reach = p.f_lower.abs() + p.f_upper.abs();
    let lo = omegas.iter().copied().fold(f64::INFINITY, f64::min) - reach;
    let hi = omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max) + reach;

    let mismatch = |om: f64| match standard_recursion(f, p, &omegas, om) {
        Shot::Closed(_, r) => r,
        Shot::Exit(true) => f64::NEG_INFINITY,
        Shot::Exit(false) => f64::INFINITY,
    };
    let mut grid: Vec<f64> = (0..=OMEGA_SCAN)
        .map(|i| lo + (hi - lo) * i as f64 / OMEGA_SCAN as f64)
        .collect();
    grid.push(mean);
    grid.sort_by(f64::total_cmp);
    let values: Vec<f64> = grid.iter().map(|&om| mismatch(om)).collect();

    let template = LockedState {
        phi: Vec::new(),
        gamma,
        omega: 0.0,
        topology: Topology::Chain,
        scheme: Scheme::Standard,
        stable: false,
    };
    // (stable, distance to the mean, state)
    let mut best: Option<(bool, f64, LockedState)> = None;
    for i in 0..grid.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        let root = if a == 0.0 {
            grid[i]
        } else if (a < 0.0) == (b < 0.0) {
            continue;
        } else {
            bisect(grid[i], grid[i + 1], 0.0, mismatch)
        };
        let Shot::Closed(phi, r) = standard_recursion(f, p, &omegas, root) else {
            continue;
        };
        // sign changes across exits and branch switches are jumps, not roots
        if r.abs() > 1e-10 * (1.0 + reach) {
            continue;
        }
        let mut state = LockedState {
            phi,
            omega: root,
            ..template.clone()
        };
        state.stable = check_stability(&state, f);
        let dist = (root - mean).abs();
        let better = best
            .as_ref()
            .is_none_or(|(s, d, _)| (state.stable, -dist) > (*s, -*d));
        if better {
            best = Some((state.stable, dist, state));
        }
    }
    if let Some((_, _, state)) = best {
        return Ok(state);
    }
    let (phi, omega) = standard_continuation(f, fv, gamma).ok_or(Error::NoSolution)?;
    let mut state = LockedState {
        phi,
        omega,
        ..template
    };
    state.stable = check_stability(&state, f);
    Ok(state)
}

const NEWTON_TOL: f64 = 1e-13;

/// Equations `ω_k + f(φ_{k-1}) + f(-φ_k) - Ω` in the unknowns
/// `(φ_1, ..., φ_{N-1}, Ω)`.
fn standard_system(
    f: &CouplingFunction,
    omegas: &[f64],
    x: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let n = omegas.len();
    let omega = x[n - 1];
    let mut r = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        r[k] = omegas[k] - omega;
        jac[(k, n - 1)] = -1.0;
        if k > 0 {
            let (v, d) = f.eval_with_derivative(x[k - 1]);
            r[k] += v;
            jac[(k, k - 1)] += d;
        }
        if k + 1 < n {
            let (v, d) = f.eval_with_derivative(-x[k]);
            r[k] += v;
            jac[(k, k)] -= d;
        }
    }
    (r, jac)
}

fn newton(f: &CouplingFunction, omegas: &[f64], start: &[f64]) -> Option<Vec<f64>> {
    let mut x = start.to_vec();
    for _ in 0..40 {
        let (r, jac) = standard_system(f, omegas, &x);
        if r.amax() < NEWTON_TOL {
            return Some(x);
        }
        let step = jac.lu().solve(&r)?;
        if step.amax() > 0.5 {
            return None;
        }
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi -= s;
        }
    }
    None
}

/// Tracks the solution branch through `φ = 0, Ω = 0` at `Γ = 0` up to
/// `gamma`, halving the step whenever Newton fails.
fn standard_continuation(
    f: &CouplingFunction,
    fv: &FrequencyVector,
    gamma: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = fv.len();
    let mut x = vec![0.0; n];
    let (mut g, mut step) = (0.0, gamma / 16.0);
    while g < gamma {
        let next = (g + step).min(gamma);
        match newton(f, &fv.scaled(next), &x) {
            Some(sol) => {
                x = sol;
                g = next;
                step *= 1.5;
            }
            None => {
                step *= 0.5;
                if step < gamma * 1e-9 {
                    return None;
                }
            }
        }
    }
    let omega = x.pop()?;
    Some((x, omega))
}

/// Absolute mismatches of the standard chain equations
/// `Ω = ω_k + f(φ_{k-1}) + f(-φ_k)` (boundary terms dropped), one per
/// oscillator.
pub fn standard_chain_residuals(
    f: &CouplingFunction,
    fv: &FrequencyVector,
    state: &LockedState,
) -> Vec<f64> {
    let omegas = fv.scaled(state.gamma);
    let n = omegas.len();
    (0..n)
        .map(|k| {
            let left = if k > 0 { f.eval(state.phi[k - 1]) } else { 0.0 };
            let right = if k + 1 < n {
                f.eval(-state.phi[k])
            } else {
                0.0
            };
            (omegas[k] + left + right - state.omega).abs()
        })
        .collect()
}
