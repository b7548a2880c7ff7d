//! End-to-end studies: threshold scatter over random realizations, decay
//! of the chain/ring separation with `N`, and the four-oscillator
//! counterexample.

mod convergence;
mod counterexample;
mod scatter;

pub use convergence::{
    convergence_experiment, seed_for, standard_residual_experiment, ConvergenceReport,
    ConvergenceRow, SettleSettings, SizeSummary, StandardResidualReport, StandardResidualRow,
};
pub use counterexample::{counterexample_experiment, Check, CounterexampleReport, DEVIATIONS};
pub use scatter::{
    scatter_experiment, summarize, ScatterReport, ScatterRow, ScatterSummary, RATIO_SLACK,
};
