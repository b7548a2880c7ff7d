use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::analytic::{
    chain_locked_state, chain_threshold, ring_exact_solution_exists, DEFAULT_SEARCH_GRID,
};
use crate::coupling::CouplingFunction;
use crate::dynamics::{detect_lock, PhaseState, SystemConfig};
use crate::frequencies::FrequencyVector;
use crate::model::{Scheme, Topology};
use crate::Result;

/// Cumulative deviations of the four-oscillator counterexample.
pub const DEVIATIONS: [f64; 3] = [1.0, -1.0, -1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub eta: Vec<f64>,
    pub checks: Vec<Check>,
}

impl CounterexampleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Four oscillators with `f = sin` and `D = (1, -1, -1)`: the chain locks
/// for every `Γ < 1`, while the ring has no locked state at `Γ = 1`.
pub fn counterexample_experiment() -> Result<CounterexampleReport> {
    let f = CouplingFunction::sine();
    let p = f.profile()?;
    let fv = FrequencyVector::from_target_deviations(&DEVIATIONS)?;
    let cd = fv.cumulative_deviations();
    let mut checks = Vec::new();

    let gc = chain_threshold(&p, &cd);
    checks.push(check(
        "chain threshold equals 1",
        gc == 1.0,
        format!("Γ_C = {gc}"),
    ));

    let state = chain_locked_state(&f, &p, &fv, 1.0 - 1e-6)?;
    let target = [FRAC_PI_2, -FRAC_PI_2, -FRAC_PI_2];
    let dev = state
        .phi
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "chain state near (π/2, -π/2, -π/2) just below threshold",
        dev < 2e-3 && state.stable,
        format!(
            "φ = {:?}, max deviation {dev:.3e}, stable = {}",
            state.phi, state.stable
        ),
    ));

    let exists = ring_exact_solution_exists(&f, &cd, 1.0, DEFAULT_SEARCH_GRID)?;
    checks.push(check(
        "no ring solution at Γ = 1",
        !exists,
        format!(
            "grid search with {DEFAULT_SEARCH_GRID} points per axis found a solution: {exists}"
        ),
    ));

    let lock = |gamma: f64, topology: Topology| {
        let cfg = SystemConfig::new(f.clone(), fv.clone(), gamma, topology, Scheme::Telescopic);
        detect_lock(&cfg, &PhaseState::zeros(fv.len()))
    };
    let ring = lock(1.0, Topology::Ring)?;
    checks.push(check(
        "ring trajectory does not lock at Γ = 1",
        !ring.locked,
        format!(
            "frequency spread {:.3e}, phase drift {:.3e}",
            ring.max_frequency_spread, ring.max_phase_drift
        ),
    ));

    // Subtracting the first two ring equations forces φ_1 = π/2 and
    // φ_2 = φ_3 = -π/2, which violates the first equation.
    let forced_phi = [FRAC_PI_2, -FRAC_PI_2, -FRAC_PI_2];
    let forced = f.eval(forced_phi[0]) - f.eval(-forced_phi.iter().sum::<f64>());
    checks.push(check(
        "forced point violates the first ring equation",
        forced.abs() < 1e-12 && (forced - 1.0).abs() > 0.5,
        format!("f(φ_1) - f(-Σφ) = {forced} at the forced point, required 1"),
    ));

    let chain = lock(0.99, Topology::Chain)?;
    checks.push(check(
        "chain trajectory locks at Γ = 0.99",
        chain.locked,
        format!("frequency spread {:.3e}", chain.max_frequency_spread),
    ));

    let (c, r) = (lock(0.5, Topology::Chain)?, lock(0.5, Topology::Ring)?);
    let exists = ring_exact_solution_exists(&f, &cd, 0.5, DEFAULT_SEARCH_GRID)?;
    checks.push(check(
        "both topologies lock at Γ = 0.5",
        c.locked && r.locked && exists,
        format!(
            "chain {}, ring {}, ring solution found {exists}",
            c.locked, r.locked
        ),
    ));

    Ok(CounterexampleReport {
        eta: fv.eta().to_vec(),
        checks,
    })
}
