use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{chain_threshold, ring_upper_bound};
use crate::coupling::CouplingFunction;
use crate::frequencies::FrequencyVector;
use crate::model::Scheme;
use crate::thresholds::{matched_pair, ProbeSettings};
use crate::Result;

/// Slack allowed above the ratio bound before a trial counts as a violation.
pub const RATIO_SLACK: f64 = 0.05;

/// One matched ring/chain pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub seed: u64,
    pub n: usize,
    pub f_spec: String,
    pub scheme: Scheme,
    /// Empirical chain threshold.
    pub gamma_c_hat: f64,
    /// Empirical ring threshold.
    pub gamma_r_hat: f64,
    pub gamma_c_analytic: f64,
    pub ring_bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSummary {
    pub trials: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub below_one: usize,
    pub fraction_below_one: f64,
    /// `1 + max(|f_l/f_u|, |f_u/f_l|)`
    pub ratio_bound: f64,
    /// Trials with a ratio above `ratio_bound + RATIO_SLACK`.
    pub above_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterReport {
    pub rows: Vec<ScatterRow>,
    pub summary: ScatterSummary,
}

/// Draws `trials` uniform frequency vectors of length `n` (trial `i` uses
/// seed `seed0 + i`) and measures the chain and ring thresholds of each.
pub fn scatter_experiment(
    f: &CouplingFunction,
    scheme: Scheme,
    n: usize,
    trials: usize,
    seed0: u64,
    settings: &ProbeSettings,
) -> Result<ScatterReport> {
    let p = f.profile()?;
    let f_spec = f.to_string();
    let rows = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = seed0.wrapping_add(i);
            let fv = FrequencyVector::sample_uniform(n, seed)?;
            let cd = fv.cumulative_deviations();
            let pair = matched_pair(f, &p, &fv, scheme, settings)?;
            Ok(ScatterRow {
                seed,
                n,
                f_spec: f_spec.clone(),
                scheme,
                gamma_c_hat: pair.chain.estimate(),
                gamma_r_hat: pair.ring.estimate(),
                gamma_c_analytic: chain_threshold(&p, &cd),
                ring_bound: ring_upper_bound(&p, &cd),
                ratio: pair.ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio_bound = p.ratio_upper_bound();
    let summary = summarize(&rows, ratio_bound);
    Ok(ScatterReport { rows, summary })
}

pub fn summarize(rows: &[ScatterRow], ratio_bound: f64) -> ScatterSummary {
    let below_one = rows.iter().filter(|r| r.ratio < 1.0).count();
    ScatterSummary {
        trials: rows.len(),
        max_ratio: rows
            .iter()
            .map(|r| r.ratio)
            .fold(f64::NEG_INFINITY, f64::max),
        min_ratio: rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min),
        below_one,
        fraction_below_one: if rows.is_empty() {
            0.0
        } else {
            below_one as f64 / rows.len() as f64
        },
        ratio_bound,
        above_bound: rows
            .iter()
            .filter(|r| r.ratio > ratio_bound + RATIO_SLACK)
            .count(),
    }
}
