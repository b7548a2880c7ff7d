use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    chain_locked_state, chain_threshold, ring_approximate_state, ring_standard_approximate_state,
    standard_chain_locked_state, standard_chain_residuals,
};
use crate::coupling::CouplingFunction;
use crate::dynamics::{self, PhaseState, SystemConfig};
use crate::frequencies::FrequencyVector;
use crate::model::{Scheme, Topology};
use crate::numeric::{log_log_slope, wrap_angle};
use crate::{Error, Result};

/// Integration parameters for driving a system onto its locked state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettleSettings {
    pub dt: f64,
    /// Length of each integration chunk between convergence checks.
    pub chunk_time: f64,
    pub observation_time: f64,
    pub lock_tolerance: f64,
    /// Integration stops once the frequency spread drops below this.
    pub spread_tol: f64,
    pub max_time: f64,
}

impl Default for SettleSettings {
    fn default() -> Self {
        Self {
            dt: dynamics::DEFAULT_DT,
            chunk_time: dynamics::DEFAULT_TRANSIENT,
            observation_time: dynamics::DEFAULT_OBSERVATION,
            lock_tolerance: dynamics::DEFAULT_LOCK_TOL,
            spread_tol: 1e-10,
            max_time: 1e6,
        }
    }
}

impl SettleSettings {
    fn config(
        &self,
        f: &CouplingFunction,
        fv: &FrequencyVector,
        gamma: f64,
        topology: Topology,
    ) -> SystemConfig {
        SystemConfig {
            dt: self.dt,
            transient_time: self.chunk_time,
            observation_time: self.observation_time,
            lock_tolerance: self.lock_tolerance,
            ..SystemConfig::new(f.clone(), fv.clone(), gamma, topology, Scheme::Telescopic)
        }
    }
}

/// Seed of realization `j` of length `n`: `seed + n` for the first,
/// offset by multiples of `2^32` for the rest.
pub fn seed_for(seed: u64, n: usize, j: usize) -> u64 {
    seed.wrapping_add(n as u64).wrapping_add((j as u64) << 32)
}

/// Realization-averaged quantities for one chain length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    /// Realizations contributing to the means.
    pub count: usize,
    pub mean_separation: f64,
    pub mean_residual: f64,
    pub mean_bound: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn cases(n_values: &[usize], realizations: usize) -> Result<Vec<(usize, usize)>> {
    if realizations == 0 || n_values.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one size and one realization".into(),
        ));
    }
    Ok(n_values
        .iter()
        .flat_map(|&n| (0..realizations).map(move |j| (n, j)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub realization: usize,
    pub seed: u64,
    pub gamma: f64,
    pub gamma_c: f64,
    /// `max_k |φ^(chain)_k - φ^(ring)_k|` between the settled trajectories.
    pub separation: f64,
    pub psi: f64,
    pub x0: f64,
    /// Largest residual of the shifted chain state in the ring equations.
    pub analytic_residual: f64,
    pub residual_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub f_spec: String,
    pub gamma_fraction: f64,
    pub rows: Vec<ConvergenceRow>,
    pub sizes: Vec<SizeSummary>,
    /// Log-log slope of the mean separation against `N`; `None` for fewer
    /// than two sizes.
    pub separation_slope: Option<f64>,
    /// Same for the mean analytic residual.
    pub residual_slope: Option<f64>,
    /// Rows whose analytic residual exceeds its bound.
    pub bound_violations: usize,
}

fn settled_differences(
    cfg: &SystemConfig,
    s0: &PhaseState,
    settings: &SettleSettings,
    label: &'static str,
) -> Result<PhaseState> {
    let (verdict, end) = dynamics::settle(cfg, s0, settings.spread_tol, settings.max_time)?;
    if !verdict.locked {
        return Err(Error::NotLocked(label));
    }
    Ok(end)
}

fn convergence_row(
    f: &CouplingFunction,
    gamma_fraction: f64,
    n: usize,
    j: usize,
    seed: u64,
    settings: &SettleSettings,
) -> Result<ConvergenceRow> {
    let p = f.profile()?;
    let seed = seed_for(seed, n, j);
    let fv = FrequencyVector::sample_uniform(n, seed)?;
    let cd = fv.cumulative_deviations();
    let gamma_c = chain_threshold(&p, &cd);
    let gamma = gamma_fraction * gamma_c;

    let chain_cfg = settings.config(f, &fv, gamma, Topology::Chain);
    let chain_end = settled_differences(&chain_cfg, &PhaseState::zeros(n), settings, "chain")?;
    let ring_cfg = chain_cfg.with_topology(Topology::Ring);
    let ring_end = settled_differences(&ring_cfg, &chain_end, settings, "ring")?;
    let separation = chain_end
        .phase_differences()
        .iter()
        .zip(ring_end.phase_differences())
        .map(|(a, b)| wrap_angle(a - b).abs())
        .fold(0.0, f64::max);

    let chain = chain_locked_state(f, &p, &fv, gamma)?;
    let approx = ring_approximate_state(f, &p, &cd, &chain)?;
    Ok(ConvergenceRow {
        n,
        realization: j,
        seed,
        gamma,
        gamma_c,
        separation,
        psi: approx.psi,
        x0: approx.x0,
        analytic_residual: approx.max_residual(),
        residual_bound: approx.residual_bound,
    })
}

/// For each `N`, settles the telescopic chain from `θ(0) = 0` at
/// `Γ = gamma_fraction · Γ_C`, then settles the ring from the chain's
/// final state and measures how far the two sets of phase differences are
/// apart. Alongside, the analytic ring approximation is evaluated on the
/// same realization.
///
/// The separation depends on how far `x₀ + Ψ` is from a multiple of `2π`,
/// which is random, so slopes are fitted to means over `realizations`
/// draws per size.
pub fn convergence_experiment(
    f: &CouplingFunction,
    gamma_fraction: f64,
    n_values: &[usize],
    realizations: usize,
    seed: u64,
    settings: &SettleSettings,
) -> Result<ConvergenceReport> {
    if !(gamma_fraction > 0.0 && gamma_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma fraction must lie in (0, 1), got {gamma_fraction}"
        )));
    }
    let rows = cases(n_values, realizations)?
        .into_par_iter()
        .map(|(n, j)| convergence_row(f, gamma_fraction, n, j, seed, settings))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<SizeSummary> = n_values
        .iter()
        .map(|&n| {
            let of_n = || rows.iter().filter(move |r| r.n == n);
            SizeSummary {
                n,
                count: of_n().count(),
                mean_separation: mean(of_n().map(|r| r.separation)),
                mean_residual: mean(of_n().map(|r| r.analytic_residual)),
                mean_bound: mean(of_n().map(|r| r.residual_bound)),
            }
        })
        .collect();
    let ns: Vec<f64> = sizes.iter().map(|s| s.n as f64).collect();
    let sep: Vec<f64> = sizes.iter().map(|s| s.mean_separation).collect();
    let res: Vec<f64> = sizes.iter().map(|s| s.mean_residual).collect();
    Ok(ConvergenceReport {
        f_spec: f.to_string(),
        gamma_fraction,
        separation_slope: log_log_slope(&ns, &sep),
        residual_slope: log_log_slope(&ns, &res),
        bound_violations: rows
            .iter()
            .filter(|r| r.analytic_residual > r.residual_bound)
            .count(),
        sizes,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardResidualRow {
    pub n: usize,
    pub realization: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Whether the standard chain recursion closed.
    pub found: bool,
    pub chain_residual: f64,
    pub ring_residual: f64,
    pub psi: f64,
    pub residual_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardResidualReport {
    pub f_spec: String,
    pub gamma_fraction: f64,
    pub rows: Vec<StandardResidualRow>,
    /// Means over the realizations with a chain solution; the separation
    /// column is unused.
    pub sizes: Vec<SizeSummary>,
    /// Log-log slope of the mean ring residual against `N`.
    pub ring_residual_slope: Option<f64>,
}

/// Standard-coupling analogue of the analytic part of
/// [`convergence_experiment`]: builds the standard chain state at
/// `Γ = gamma_fraction · Γ_C` (telescopic formula) and measures the
/// residual of the shifted state in the standard ring equations.
pub fn standard_residual_experiment(
    f: &CouplingFunction,
    gamma_fraction: f64,
    n_values: &[usize],
    realizations: usize,
    seed: u64,
) -> Result<StandardResidualReport> {
    let p = f.profile()?;
    let rows = cases(n_values, realizations)?
        .into_par_iter()
        .map(|(n, j)| {
            let seed = seed_for(seed, n, j);
            let fv = FrequencyVector::sample_uniform(n, seed)?;
            let gamma = gamma_fraction * chain_threshold(&p, &fv.cumulative_deviations());
            let chain = match standard_chain_locked_state(f, &p, &fv, gamma) {
                Ok(s) => s,
                Err(Error::NoSolution) => {
                    return Ok(StandardResidualRow {
                        n,
                        realization: j,
                        seed,
                        gamma,
                        found: false,
                        chain_residual: f64::NAN,
                        ring_residual: f64::NAN,
                        psi: f64::NAN,
                        residual_bound: f64::NAN,
                    })
                }
                Err(e) => return Err(e),
            };
            let chain_residual = standard_chain_residuals(f, &fv, &chain)
                .into_iter()
                .fold(0.0, f64::max);
            let approx = ring_standard_approximate_state(f, &p, &fv, &chain)?;
            Ok(StandardResidualRow {
                n,
                realization: j,
                seed,
                gamma,
                found: true,
                chain_residual,
                ring_residual: approx.max_residual(),
                psi: approx.psi,
                residual_bound: approx.residual_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<SizeSummary> = n_values
        .iter()
        .map(|&n| {
            let of_n = || rows.iter().filter(move |r| r.n == n && r.found);
            SizeSummary {
                n,
                count: of_n().count(),
                mean_separation: f64::NAN,
                mean_residual: mean(of_n().map(|r| r.ring_residual)),
                mean_bound: mean(of_n().map(|r| r.residual_bound)),
            }
        })
        .filter(|s| s.count > 0)
        .collect();
    let ns: Vec<f64> = sizes.iter().map(|s| s.n as f64).collect();
    let res: Vec<f64> = sizes.iter().map(|s| s.mean_residual).collect();
    Ok(StandardResidualReport {
        f_spec: f.to_string(),
        gamma_fraction,
        ring_residual_slope: log_log_slope(&ns, &res),
        sizes,
        rows,
    })
}
