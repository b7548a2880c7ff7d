//! Closed-form thresholds and constructions of locked states.
//!
//! For telescopic coupling a chain is locked exactly when `f(φ_k) = Γ D_k`
//! for every link, which gives the chain threshold
//! `Γ_C = min(f_u / D_u, f_l / D_l)` directly. The ring satisfies
//! `Γ D_k = f(φ_k) - f(-Σ φ_j)`, which only yields an upper bound on its
//! threshold; ring states are instead approximated from chain states.

mod chain;
mod ring;
mod stability;

pub use chain::{chain_locked_state, standard_chain_locked_state, standard_chain_residuals};
pub use ring::{
    ring_approximate_state, ring_exact_solution_exists, ring_standard_approximate_state,
    RingApproximation, DEFAULT_SEARCH_GRID,
};
pub use stability::{check_stability, eigenvalues, jacobian, ZERO_EIGEN_TOL};

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingProfile;
use crate::frequencies::CumulativeDeviation;
use crate::model::{Scheme, Topology};

/// `a / b` with `x / 0 = +∞`.
fn ratio_or_inf(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Chain locking threshold `min(f_u / D_u, f_l / D_l)`; `+∞` iff every
/// `D_k` vanishes.
pub fn chain_threshold(p: &CouplingProfile, cd: &CumulativeDeviation) -> f64 {
    ratio_or_inf(p.f_upper, cd.upper).min(ratio_or_inf(p.f_lower, cd.lower))
}

/// Necessary condition for a ring locked state:
/// `Γ ≤ min((f_u - f_l) / D_u, (f_l - f_u) / D_l)`.
pub fn ring_upper_bound(p: &CouplingProfile, cd: &CumulativeDeviation) -> f64 {
    let span = p.f_upper - p.f_lower;
    ratio_or_inf(span, cd.upper).min(ratio_or_inf(-span, cd.lower))
}

/// Upper bound on `Γ_R / Γ_C` that depends only on `f`; always at least 2.
pub fn ratio_upper_bound(p: &CouplingProfile) -> f64 {
    p.ratio_upper_bound()
}

/// A phase-locked configuration described by its link differences
/// `φ_k = θ_k - θ_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockedState {
    pub phi: Vec<f64>,
    pub gamma: f64,
    /// Common locked frequency.
    pub omega: f64,
    pub topology: Topology,
    pub scheme: Scheme,
    pub stable: bool,
}

impl LockedState {
    pub fn len(&self) -> usize {
        self.phi.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `θ_N - θ_1 = -Σ φ_k`, the difference carried by the ring's closing edge.
    pub fn closing_difference(&self) -> f64 {
        -self.phi.iter().sum::<f64>()
    }

    /// Phases with `θ_1 = 0`.
    pub fn theta(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.len());
        theta.push(0.0);
        for (k, p) in self.phi.iter().enumerate() {
            theta.push(theta[k] - p);
        }
        theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingFunction;
    use crate::frequencies::FrequencyVector;

    fn cd_of(eta: &[f64]) -> CumulativeDeviation {
        FrequencyVector::new(eta.to_vec())
            .unwrap()
            .cumulative_deviations()
    }

    #[test]
    fn counterexample_thresholds() {
        let p = CouplingFunction::sine().profile().unwrap();
        let cd = cd_of(&[1.0, -2.0, 0.0, 1.0]);
        assert_eq!(chain_threshold(&p, &cd), 1.0);
        assert_eq!(ring_upper_bound(&p, &cd), 2.0);
    }

    #[test]
    fn two_oscillators() {
        let p = CouplingFunction::sine().profile().unwrap();
        let cd = cd_of(&[1.0, -1.0]);
        assert_eq!(chain_threshold(&p, &cd), 1.0);
        assert_eq!(ring_upper_bound(&p, &cd), 2.0);
    }

    #[test]
    fn identical_frequencies_never_unlock() {
        for f in [CouplingFunction::sine(), CouplingFunction::sine_plus_cos3()] {
            let p = f.profile().unwrap();
            let cd = cd_of(&[0.5; 6]);
            assert_eq!(chain_threshold(&p, &cd), f64::INFINITY);
            assert_eq!(ring_upper_bound(&p, &cd), f64::INFINITY);
        }
    }

    #[test]
    fn ratio_bounds() {
        let p = CouplingFunction::sine().profile().unwrap();
        assert!((ratio_upper_bound(&p) - 2.0).abs() < 1e-14);
        let p = CouplingFunction::shifted_sine(0.6).profile().unwrap();
        let s = 0.6f64.sin();
        assert!((ratio_upper_bound(&p) - (1.0 + (1.0 + s) / (1.0 - s))).abs() < 1e-12);
        let p = CouplingFunction::sine_plus_cos3().profile().unwrap();
        // grid oracle: extrema are ±1.878706850119895, so the bound is 2
        assert!((ratio_upper_bound(&p) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn theta_reconstruction() {
        let s = LockedState {
            phi: vec![0.5, -0.25],
            gamma: 0.0,
            omega: 0.0,
            topology: Topology::Chain,
            scheme: Scheme::Telescopic,
            stable: true,
        };
        assert_eq!(s.theta(), vec![0.0, -0.5, -0.25]);
        assert_eq!(s.closing_difference(), -0.25);
    }
}
