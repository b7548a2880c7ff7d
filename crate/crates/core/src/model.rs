use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Open (chain) or periodic (ring) boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Chain,
    Ring,
}

/// How the pairwise coupling enters each oscillator's equation.
///
/// * `Standard`: `θ̇_k = ω_k + f(θ_{k-1} - θ_k) + f(θ_{k+1} - θ_k)`
/// * `Telescopic`: `θ̇_k = ω_k + f(θ_{k-1} - θ_k) - f(θ_k - θ_{k+1})`
///
/// The two agree whenever `f` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Standard,
    Telescopic,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Chain => "chain",
            Topology::Ring => "ring",
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Standard => "standard",
            Scheme::Telescopic => "telescopic",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chain" => Ok(Topology::Chain),
            "ring" => Ok(Topology::Ring),
            other => Err(Error::InvalidConfig(format!("unknown topology `{other}`"))),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Scheme::Standard),
            "telescopic" => Ok(Scheme::Telescopic),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}
