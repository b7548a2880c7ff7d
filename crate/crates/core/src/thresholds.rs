//! Empirical locking thresholds: bisection on `Γ` driven by the lock
//! detector, always integrating from `θ(0) = 0`.
//!
//! The estimates measure whether this particular trajectory locks, which
//! for rings is only a proxy for the existence of a stable locked state.

use serde::{Deserialize, Serialize};

use crate::analytic::{chain_threshold, ring_upper_bound};
use crate::coupling::{CouplingFunction, CouplingProfile};
use crate::dynamics::{self, PhaseState, SystemConfig};
use crate::frequencies::{CumulativeDeviation, FrequencyVector};
use crate::model::{Scheme, Topology};
use crate::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-3;
/// The upper bracket sits this factor above the analytic cap.
pub const BRACKET_MARGIN: f64 = 1.05;

/// Integration and bisection parameters shared by every probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub dt: f64,
    pub transient_time: f64,
    pub observation_time: f64,
    pub lock_tolerance: f64,
    pub rel_tol: f64,
    /// Doublings of the upper bracket allowed when it still locks. Only
    /// used for standard coupling, where the analytic caps are heuristic.
    pub bracket_expansions: u32,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            dt: dynamics::DEFAULT_DT,
            transient_time: dynamics::DEFAULT_TRANSIENT,
            observation_time: dynamics::DEFAULT_OBSERVATION,
            lock_tolerance: dynamics::DEFAULT_LOCK_TOL,
            rel_tol: DEFAULT_REL_TOL,
            bracket_expansions: 6,
        }
    }
}

impl ProbeSettings {
    pub fn config(
        &self,
        f: &CouplingFunction,
        fv: &FrequencyVector,
        topology: Topology,
        scheme: Scheme,
    ) -> SystemConfig {
        SystemConfig {
            dt: self.dt,
            transient_time: self.transient_time,
            observation_time: self.observation_time,
            lock_tolerance: self.lock_tolerance,
            ..SystemConfig::new(f.clone(), fv.clone(), 0.0, topology, scheme)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    /// Largest probed width that locked.
    pub gamma_low: f64,
    /// Smallest probed width that failed to lock.
    pub gamma_high: f64,
    pub iterations: u32,
    pub verdict_trace: Vec<(f64, bool)>,
}

impl ThresholdEstimate {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.gamma_low + self.gamma_high)
    }
}

/// Analytic ceiling for a topology: the chain threshold for chains, the
/// ring existence bound for rings.
pub fn analytic_cap(p: &CouplingProfile, cd: &CumulativeDeviation, topology: Topology) -> f64 {
    match topology {
        Topology::Chain => chain_threshold(p, cd),
        Topology::Ring => ring_upper_bound(p, cd),
    }
}

fn probe(template: &SystemConfig, gamma: f64) -> Result<bool> {
    let cfg = template.with_gamma(gamma);
    Ok(dynamics::detect_lock(&cfg, &PhaseState::zeros(cfg.len()))?.locked)
}

/// Bisection on `Γ ∈ [0, bracket_high]` until
/// `(gamma_high - gamma_low) / gamma_high < rel_tol`. The lower end is
/// taken as locked without probing.
pub fn bisect_threshold(
    template: &SystemConfig,
    bracket_high: f64,
    rel_tol: f64,
) -> Result<ThresholdEstimate> {
    if !bracket_high.is_finite() {
        return Err(Error::NotApplicable);
    }
    if !(bracket_high > 0.0 && rel_tol > 0.0) {
        return Err(Error::InvalidConfig(
            "bracket and tolerance must be positive".into(),
        ));
    }
    let mut trace = Vec::new();
    let top = probe(template, bracket_high)?;
    trace.push((bracket_high, top));
    if top {
        return Err(Error::BadBracket(bracket_high));
    }
    let (mut lo, mut hi) = (0.0, bracket_high);
    let mut iterations = 0;
    while (hi - lo) / hi >= rel_tol {
        let mid = 0.5 * (lo + hi);
        let locked = probe(template, mid)?;
        trace.push((mid, locked));
        if locked {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdEstimate {
        gamma_low: lo,
        gamma_high: hi,
        iterations,
        verdict_trace: trace,
    })
}

/// Bisection starting from `BRACKET_MARGIN` times the analytic cap. For
/// standard coupling a bracket that still locks is doubled up to
/// `settings.bracket_expansions` times.
pub fn estimate_threshold(
    f: &CouplingFunction,
    p: &CouplingProfile,
    fv: &FrequencyVector,
    topology: Topology,
    scheme: Scheme,
    settings: &ProbeSettings,
) -> Result<ThresholdEstimate> {
    let cd = fv.cumulative_deviations();
    let template = settings.config(f, fv, topology, scheme);
    let mut high = BRACKET_MARGIN * analytic_cap(p, &cd, topology);
    let mut expansions = 0;
    loop {
        match bisect_threshold(&template, high, settings.rel_tol) {
            Err(Error::BadBracket(_))
                if scheme == Scheme::Standard && expansions < settings.bracket_expansions =>
            {
                expansions += 1;
                high *= 2.0;
            }
            other => return other,
        }
    }
}

/// Thresholds of a ring and a chain sharing `f`, `η`, and `θ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub chain: ThresholdEstimate,
    pub ring: ThresholdEstimate,
    /// `Γ̂_R / Γ̂_C`
    pub ratio: f64,
}

pub fn matched_pair(
    f: &CouplingFunction,
    p: &CouplingProfile,
    fv: &FrequencyVector,
    scheme: Scheme,
    settings: &ProbeSettings,
) -> Result<MatchedPair> {
    let (chain, ring) = rayon::join(
        || estimate_threshold(f, p, fv, Topology::Chain, scheme, settings),
        || estimate_threshold(f, p, fv, Topology::Ring, scheme, settings),
    );
    let (chain, ring) = (chain?, ring?);
    let ratio = ring.estimate() / chain.estimate();
    Ok(MatchedPair { chain, ring, ratio })
}
