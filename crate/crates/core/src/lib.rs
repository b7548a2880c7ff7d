//! Locking thresholds for rings and chains of coupled phase oscillators.
//!
//! Oscillators obey `θ̇_k = Γ η_k + (coupling to k-1 and k+1)` on an open
//! chain or a periodic ring, with either standard or telescopic coupling
//! through a 2π-periodic coupling function `f`. The crate provides
//!
//! * [`coupling`]: trigonometric-polynomial coupling functions and their
//!   extrema and increasing branches,
//! * [`frequencies`]: base frequency vectors and cumulative deviations,
//! * [`analytic`]: closed-form chain thresholds, ring bounds, locked-state
//!   constructions and linear stability,
//! * [`dynamics`]: RK4 integration of the phase equations and lock detection,
//! * [`thresholds`]: empirical thresholds by bisection on `Γ`,
//! * [`experiments`]: the scatter, convergence and counterexample studies,
//! * [`io`]: CSV tables, metadata sidecars and plotting scripts.

pub mod analytic;
pub mod coupling;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod frequencies;
pub mod io;
pub mod model;
pub mod numeric;
pub mod ode;
pub mod thresholds;

pub use error::{Error, Result};
pub use model::{Scheme, Topology};
