use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::LockedState;
use crate::coupling::{CouplingFunction, CouplingProfile};
use crate::frequencies::{CumulativeDeviation, FrequencyVector};
use crate::model::{Scheme, Topology};
use crate::numeric::TAU;
use crate::{Error, Result};

/// Grid points per phase difference in [`ring_exact_solution_exists`].
pub const DEFAULT_SEARCH_GRID: usize = 200;

const MAX_SEARCH_DIM: usize = 4;
const POLISH_CANDIDATES: usize = 64;
const SOLUTION_TOL: f64 = 1e-8;

/// Ring state obtained by spreading the chain's total twist over all links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingApproximation {
    /// `φ^(R)_k = φ^(C)_k - (x₀ + Ψ) / (N - 1)`
    pub phi_ring: Vec<f64>,
    /// `Ψ = (Σ φ^(C)_k) mod 2π`, in `[0, 2π)`.
    pub psi: f64,
    pub x0: f64,
    /// Value of `f` on the closing edge; zero up to rounding.
    pub closing_value: f64,
    /// Absolute mismatch of each ring equation: `N - 1` link equations for
    /// telescopic coupling, `N` oscillator equations for standard coupling.
    pub residual: Vec<f64>,
    /// `f'_u |Ψ + x₀| / (N - 1)`
    pub residual_bound: f64,
}

impl RingApproximation {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn shift(&self) -> f64 {
        (self.x0 + self.psi) / self.phi_ring.len() as f64
    }
}

fn shift_chain(phi: &[f64], x0: f64) -> (Vec<f64>, f64) {
    let mut psi = phi.iter().sum::<f64>().rem_euclid(TAU);
    // a total twist of -1e-60 is zero, not 2π
    if TAU - psi < 1e-12 {
        psi = 0.0;
    }
    let shift = (x0 + psi) / phi.len() as f64;
    (phi.iter().map(|p| p - shift).collect(), psi)
}

fn require_chain(state: &LockedState, scheme: Scheme) -> Result<()> {
    if state.topology != Topology::Chain || state.scheme != scheme {
        return Err(Error::InvalidConfig(format!(
            "expected a {scheme} chain state, got {} {}",
            state.scheme, state.topology
        )));
    }
    Ok(())
}

/// Approximate ring solution built from a telescopic chain state. The
/// residuals of the ring equations `Γ D_k = f(φ_k) - f(-Σ φ_j)` never
/// exceed `residual_bound`.
pub fn ring_approximate_state(
    f: &CouplingFunction,
    p: &CouplingProfile,
    cd: &CumulativeDeviation,
    chain: &LockedState,
) -> Result<RingApproximation> {
    require_chain(chain, Scheme::Telescopic)?;
    if cd.d.len() != chain.phi.len() {
        return Err(Error::InvalidConfig(
            "deviation length does not match state".into(),
        ));
    }
    let x0 = p.positive_slope_zero;
    let (phi_ring, psi) = shift_chain(&chain.phi, x0);
    let closing_value = f.eval(-phi_ring.iter().sum::<f64>());
    debug_assert!(closing_value.abs() < 1e-9 * (1.0 + p.max_abs_derivative));
    let residual = phi_ring
        .iter()
        .zip(&cd.d)
        .map(|(&ph, &d)| (f.eval(ph) - closing_value - chain.gamma * d).abs())
        .collect();
    Ok(RingApproximation {
        residual_bound: p.max_abs_derivative * (psi + x0).abs() / phi_ring.len() as f64,
        phi_ring,
        psi,
        x0,
        closing_value,
        residual,
    })
}

/// Standard-coupling analogue of [`ring_approximate_state`]. Requires a
/// positive-slope zero at `0` or `π` so that both `f(x₀)` and `f(-x₀)`
/// vanish. Each residual combines at most two shifted terms, so it stays
/// below twice `residual_bound` plus the chain's own mismatch.
pub fn ring_standard_approximate_state(
    f: &CouplingFunction,
    p: &CouplingProfile,
    fv: &FrequencyVector,
    chain: &LockedState,
) -> Result<RingApproximation> {
    require_chain(chain, Scheme::Standard)?;
    if fv.len() != chain.len() {
        return Err(Error::InvalidConfig(
            "frequency length does not match state".into(),
        ));
    }
    let zero_tol = 1e-12 * (1.0 + p.f_upper - p.f_lower);
    let x0 = [0.0, PI]
        .into_iter()
        .find(|&x| f.eval(x).abs() < zero_tol && f.derivative(x) > 0.0)
        .ok_or(Error::NoSymmetricZero)?;
    let (phi_ring, psi) = shift_chain(&chain.phi, x0);
    let total: f64 = phi_ring.iter().sum();
    let closing_value = f.eval(-total);
    let omegas = fv.scaled(chain.gamma);
    let n = omegas.len();
    let residual = (0..n)
        .map(|k| {
            // neighbour k-1 (or N across the closing edge), then neighbour k+1 (or 1)
            let from_prev = if k == 0 {
                closing_value
            } else {
                f.eval(phi_ring[k - 1])
            };
            let from_next = if k == n - 1 {
                f.eval(total)
            } else {
                f.eval(-phi_ring[k])
            };
            (omegas[k] + from_prev + from_next - chain.omega).abs()
        })
        .collect();
    Ok(RingApproximation {
        residual_bound: p.max_abs_derivative * (psi + x0).abs() / phi_ring.len() as f64,
        phi_ring,
        psi,
        x0,
        closing_value,
        residual,
    })
}

/// Ring residuals `max_k |f(φ_k) - f(-Σ φ_j) - target_k|` and Newton
/// polishing for [`ring_exact_solution_exists`].
struct RingSystem<'a> {
    f: &'a CouplingFunction,
    targets: Vec<f64>,
}

impl RingSystem<'_> {
    fn residual(&self, phi: &[f64]) -> DVector<f64> {
        let closing = self.f.eval(-phi.iter().sum::<f64>());
        DVector::from_iterator(
            phi.len(),
            phi.iter()
                .zip(&self.targets)
                .map(|(&x, &t)| self.f.eval(x) - closing - t),
        )
    }

    fn jacobian(&self, phi: &[f64]) -> DMatrix<f64> {
        let m = phi.len();
        let closing = self.f.derivative(-phi.iter().sum::<f64>());
        DMatrix::from_fn(m, m, |i, j| {
            let diag = if i == j {
                self.f.derivative(phi[i])
            } else {
                0.0
            };
            diag + closing
        })
    }

    /// Damped Newton from `start`; returns the final max-norm residual.
    fn polish(&self, start: &[f64]) -> f64 {
        let mut phi = start.to_vec();
        let mut r = self.residual(&phi);
        let mut norm = r.amax();
        for _ in 0..60 {
            if norm < SOLUTION_TOL * 1e-3 {
                break;
            }
            let jac = self.jacobian(&phi);
            let step = match jac.clone().lu().solve(&r) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => match jac.svd(true, true).solve(&r, 1e-12) {
                    Ok(s) => s,
                    Err(_) => break,
                },
            };
            let mut lambda = 1.0;
            let mut improved = false;
            while lambda > 1e-6 {
                let trial: Vec<f64> = phi
                    .iter()
                    .zip(step.iter())
                    .map(|(x, s)| x - lambda * s)
                    .collect();
                let tr = self.residual(&trial);
                let tn = tr.amax();
                if tn < norm {
                    phi = trial;
                    r = tr;
                    norm = tn;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        norm
    }
}

/// Exhaustive grid search plus Newton polishing for a solution of the
/// ring equations `Γ D_k = f(φ_k) - f(-Σ φ_j)`. Only feasible for
/// `N - 1 ≤ 4`.
pub fn ring_exact_solution_exists(
    f: &CouplingFunction,
    cd: &CumulativeDeviation,
    gamma: f64,
    grid_size: usize,
) -> Result<bool> {
    let m = cd.d.len();
    if m > MAX_SEARCH_DIM {
        return Err(Error::DimensionTooLarge(m));
    }
    // even grids make -Σ φ land back on the grid
    let g = (grid_size.max(4) + 1) & !1;
    let h = TAU / g as f64;
    let values: Vec<f64> = (0..g).map(|i| f.eval(-PI + i as f64 * h)).collect();
    let targets: Vec<f64> = cd.d.iter().map(|d| gamma * d).collect();

    // -Σ(-π + i_j h) = -π + t h (mod 2π) with t = (m + 1) g / 2 - Σ i_j.
    let offset = ((m + 1) * g / 2) % g;
    let mut best: BinaryHeap<(OrderedFloat<f64>, Vec<usize>)> = BinaryHeap::new();
    let mut idx = vec![0usize; m];
    loop {
        let sum: usize = idx.iter().sum();
        let t = (offset + g * m - sum % g) % g;
        let closing = values[t];
        let mut worst = 0.0f64;
        for (k, &i) in idx.iter().enumerate() {
            worst = worst.max((values[i] - closing - targets[k]).abs());
        }
        if best.len() < POLISH_CANDIDATES {
            best.push((OrderedFloat(worst), idx.clone()));
        } else if worst < best.peek().map_or(f64::INFINITY, |b| b.0 .0) {
            best.pop();
            best.push((OrderedFloat(worst), idx.clone()));
        }
        // odometer
        let mut pos = 0;
        loop {
            if pos == m {
                break;
            }
            idx[pos] += 1;
            if idx[pos] < g {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == m {
            break;
        }
    }

    let system = RingSystem { f, targets };
    let mut candidates = best.into_sorted_vec();
    candidates.sort_by_key(|a| a.0);
    for (_, idx) in candidates {
        let start: Vec<f64> = idx.iter().map(|&i| -PI + i as f64 * h).collect();
        if system.polish(&start) < SOLUTION_TOL {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{chain_locked_state, chain_threshold, standard_chain_locked_state};
    use crate::coupling::Harmonic;

    fn counterexample() -> (CouplingFunction, CumulativeDeviation) {
        let fv = FrequencyVector::from_target_deviations(&[1.0, -1.0, -1.0]).unwrap();
        (CouplingFunction::sine(), fv.cumulative_deviations())
    }

    #[test]
    fn counterexample_ring_has_no_solution_at_one() {
        let (f, cd) = counterexample();
        assert!(!ring_exact_solution_exists(&f, &cd, 1.0, DEFAULT_SEARCH_GRID).unwrap());
    }

    #[test]
    fn counterexample_ring_solvable_below() {
        let (f, cd) = counterexample();
        assert!(ring_exact_solution_exists(&f, &cd, 0.5, DEFAULT_SEARCH_GRID).unwrap());
        assert!(ring_exact_solution_exists(&f, &cd, 0.0, DEFAULT_SEARCH_GRID).unwrap());
    }

    #[test]
    fn search_dimension_limit() {
        let fv = FrequencyVector::sample_uniform(6, 1).unwrap();
        let err = ring_exact_solution_exists(
            &CouplingFunction::sine(),
            &fv.cumulative_deviations(),
            0.1,
            20,
        );
        assert!(matches!(err, Err(Error::DimensionTooLarge(5))));
        let fv = FrequencyVector::sample_uniform(5, 1).unwrap();
        assert!(ring_exact_solution_exists(
            &CouplingFunction::sine(),
            &fv.cumulative_deviations(),
            0.1,
            40
        )
        .unwrap());
    }

    #[test]
    fn identity_shift_at_zero_width() {
        let f = CouplingFunction::sine();
        let p = f.profile().unwrap();
        let fv = FrequencyVector::sample_uniform(7, 2).unwrap();
        let chain = chain_locked_state(&f, &p, &fv, 0.0).unwrap();
        let approx = ring_approximate_state(&f, &p, &fv.cumulative_deviations(), &chain).unwrap();
        assert!(approx.psi < 1e-14);
        assert!(approx.x0.abs() < 1e-14);
        for (a, b) in approx.phi_ring.iter().zip(&chain.phi) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(approx.max_residual() < 1e-14);
    }

    #[test]
    fn residual_within_bound_and_decaying() {
        let f = CouplingFunction::new(
            0.0,
            [Harmonic {
                order: 1,
                cos: 0.0,
                sin: -1.0,
            }],
        );
        let p = f.profile().unwrap();
        for n in [8, 16, 32, 64] {
            let fv = FrequencyVector::sample_uniform(n, 100 + n as u64).unwrap();
            let cd = fv.cumulative_deviations();
            let chain = chain_locked_state(&f, &p, &fv, 0.5 * chain_threshold(&p, &cd)).unwrap();
            let approx = ring_approximate_state(&f, &p, &cd, &chain).unwrap();
            assert!(approx.closing_value.abs() < 1e-9);
            assert!(approx.max_residual() <= approx.residual_bound + 1e-12);
            assert!((0.0..TAU).contains(&approx.psi));
        }
    }

    #[test]
    fn standard_ring_zero_choice() {
        let fv = FrequencyVector::sample_uniform(9, 4).unwrap();
        for f in [
            CouplingFunction::sine(),
            CouplingFunction::shifted_sine(0.6),
        ] {
            let p = f.profile().unwrap();
            let chain = standard_chain_locked_state(&f, &p, &fv, 0.1).unwrap();
            let approx = ring_standard_approximate_state(&f, &p, &fv, &chain).unwrap();
            assert_eq!(approx.x0, 0.0);
            assert_eq!(approx.residual.len(), 9);
            assert!(approx.max_residual() <= 2.0 * approx.residual_bound + 1e-8);
        }
        // cos(x) - 0.5 has positive-slope zero at -π/3 only
        let f = CouplingFunction::parse("cos(1)-0.5").unwrap();
        let p = f.profile().unwrap();
        let chain = LockedState {
            phi: vec![0.0; 8],
            gamma: 0.0,
            omega: 0.0,
            topology: Topology::Chain,
            scheme: Scheme::Standard,
            stable: true,
        };
        assert!(matches!(
            ring_standard_approximate_state(&f, &p, &fv, &chain),
            Err(Error::NoSymmetricZero)
        ));
    }
}
