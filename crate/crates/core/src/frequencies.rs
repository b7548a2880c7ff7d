//! Base frequency vectors and their cumulative deviations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Base frequencies `η`; the natural frequencies are `ω_k = Γ η_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    eta: Vec<f64>,
    seed: Option<u64>,
}

impl FrequencyVector {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.len() < 2 {
            return Err(Error::TooFewOscillators(eta.len()));
        }
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "frequency entries must be finite".into(),
            ));
        }
        Ok(Self { eta, seed: None })
    }

    /// `n` i.i.d. draws from uniform `[-1, 1]`.
    ///
    /// The generator is ChaCha8 seeded through `seed_from_u64`, so a seed
    /// reproduces the same vector on every platform.
    pub fn sample_uniform(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewOscillators(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Ok(Self {
            eta,
            seed: Some(seed),
        })
    }

    /// Inverts the cumulative-deviation map with zero mean:
    /// `η_1 = d_1`, `η_k = d_k - d_{k-1}`, `η_N = -d_{N-1}`.
    pub fn from_target_deviations(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::TooFewOscillators(d.len() + 1));
        }
        let n = d.len() + 1;
        let eta = (0..n)
            .map(|k| {
                let cur = if k < d.len() { d[k] } else { 0.0 };
                let prev = if k == 0 { 0.0 } else { d[k - 1] };
                cur - prev
            })
            .collect();
        Self::new(eta)
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.eta.iter().sum::<f64>() / self.eta.len() as f64
    }

    /// Natural frequencies `Γ η`.
    pub fn scaled(&self, gamma: f64) -> Vec<f64> {
        self.eta.iter().map(|e| gamma * e).collect()
    }

    pub fn cumulative_deviations(&self) -> CumulativeDeviation {
        CumulativeDeviation::new(self)
    }
}

/// Partial sums `D_k = Σ_{j≤k} (η_j - η̄)` for `k = 1..N-1`, with
/// `D_u = max(0, max D_k)` and `D_l = min(0, min D_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeDeviation {
    pub d: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
}

impl CumulativeDeviation {
    pub fn new(fv: &FrequencyVector) -> Self {
        let mean = fv.mean();
        let n = fv.len();
        let mut d = Vec::with_capacity(n - 1);
        let mut acc = 0.0;
        for &e in &fv.eta()[..n - 1] {
            acc += e - mean;
            d.push(acc);
        }
        let upper = d.iter().copied().fold(0.0f64, f64::max);
        let lower = d.iter().copied().fold(0.0f64, f64::min);
        Self { d, upper, lower }
    }

    pub fn is_zero(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0)
    }
}
