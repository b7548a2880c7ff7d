//! Time stepping of the full phase equations and lock detection.
//!
//! Phases are never wrapped; the coupling only sees differences through
//! the periodic `f`, so unwrapped phases make drift directly measurable.

use serde::{Deserialize, Serialize};

use crate::analytic::LockedState;
use crate::coupling::CouplingFunction;
use crate::frequencies::FrequencyVector;
use crate::model::{Scheme, Topology};
use crate::ode::Rk4;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 0.125;
pub const DEFAULT_TRANSIENT: f64 = 2.0e3;
pub const DEFAULT_OBSERVATION: f64 = 5.0e2;
pub const DEFAULT_LOCK_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub f: CouplingFunction,
    pub fv: FrequencyVector,
    pub gamma: f64,
    pub topology: Topology,
    pub scheme: Scheme,
    pub dt: f64,
    pub transient_time: f64,
    pub observation_time: f64,
    /// Bound on both the frequency spread and the phase-difference drift
    /// over the observation window.
    pub lock_tolerance: f64,
}

impl SystemConfig {
    pub fn new(
        f: CouplingFunction,
        fv: FrequencyVector,
        gamma: f64,
        topology: Topology,
        scheme: Scheme,
    ) -> Self {
        Self {
            f,
            fv,
            gamma,
            topology,
            scheme,
            dt: DEFAULT_DT,
            transient_time: DEFAULT_TRANSIENT,
            observation_time: DEFAULT_OBSERVATION,
            lock_tolerance: DEFAULT_LOCK_TOL,
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    pub fn with_topology(&self, topology: Topology) -> Self {
        Self {
            topology,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.fv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fv.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.transient_time > 0.0 && self.observation_time > 0.0) {
            return bad("transient and observation times must be positive");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be finite and non-negative");
        }
        if !(self.lock_tolerance > 0.0) {
            return bad("lock tolerance must be positive");
        }
        Ok(())
    }

    fn field(&self) -> Field<'_> {
        Field {
            f: &self.f,
            omegas: self.fv.scaled(self.gamma),
            topology: self.topology,
            scheme: self.scheme,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub theta: Vec<f64>,
    pub time: f64,
}

impl PhaseState {
    pub fn zeros(n: usize) -> Self {
        Self {
            theta: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn from_locked(state: &LockedState) -> Self {
        Self {
            theta: state.theta(),
            time: 0.0,
        }
    }

    /// `φ_k = θ_k - θ_{k+1}`
    pub fn phase_differences(&self) -> Vec<f64> {
        self.theta.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockVerdict {
    pub locked: bool,
    /// `max_t max_k |θ̇_k - mean θ̇|` over the observation window.
    pub max_frequency_spread: f64,
    /// Largest excursion of any `θ_k - θ_{k+1}` over the window.
    pub max_phase_drift: f64,
    /// Mean observed frequency.
    pub omega_hat: f64,
}

struct Field<'a> {
    f: &'a CouplingFunction,
    omegas: Vec<f64>,
    topology: Topology,
    scheme: Scheme,
}

impl Field<'_> {
    /// Edge `(a, b)` carries `d = θ_a - θ_b`.
    #[inline]
    fn edge(&self, out: &mut [f64], a: usize, b: usize, d: f64) {
        match self.scheme {
            Scheme::Telescopic => {
                let v = self.f.eval(d);
                out[a] -= v;
                out[b] += v;
            }
            Scheme::Standard => {
                out[a] += self.f.eval(-d);
                out[b] += self.f.eval(d);
            }
        }
    }

    fn eval(&self, theta: &[f64], out: &mut [f64]) {
        let n = theta.len();
        out.copy_from_slice(&self.omegas);
        for k in 0..n - 1 {
            self.edge(out, k, k + 1, theta[k] - theta[k + 1]);
        }
        if self.topology == Topology::Ring {
            self.edge(out, n - 1, 0, theta[n - 1] - theta[0]);
        }
    }
}

/// `θ̇` at `s` for the configured topology and scheme, with `ω_k = Γ η_k`.
pub fn velocity_field(cfg: &SystemConfig, s: &PhaseState) -> Vec<f64> {
    let mut out = vec![0.0; s.theta.len()];
    cfg.field().eval(&s.theta, &mut out);
    out
}

fn check_len(cfg: &SystemConfig, s: &PhaseState) -> Result<()> {
    if s.theta.len() != cfg.len() {
        return Err(Error::InvalidConfig(format!(
            "state has {} phases, system has {} oscillators",
            s.theta.len(),
            cfg.len()
        )));
    }
    Ok(())
}

/// Stateful integrator for one trajectory.
struct Stepper<'a> {
    field: Field<'a>,
    rk: Rk4,
    dt: f64,
    theta: Vec<f64>,
    time: f64,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a SystemConfig, s0: &PhaseState) -> Self {
        Self {
            field: cfg.field(),
            rk: Rk4::new(s0.theta.len()),
            dt: cfg.dt,
            theta: s0.theta.clone(),
            time: s0.time,
        }
    }

    fn step(&mut self, h: f64) -> Result<()> {
        let field = &self.field;
        self.rk.step(
            &mut |y: &[f64], out: &mut [f64]| field.eval(y, out),
            &mut self.theta,
            h,
        );
        self.time += h;
        if self.theta.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteState { time: self.time })
        }
    }

    /// Full steps of `dt`, then one shortened step to land on `duration`.
    fn advance(&mut self, duration: f64) -> Result<()> {
        let target = self.time + duration;
        let full = (duration / self.dt).floor() as u64;
        for _ in 0..full {
            self.step(self.dt)?;
        }
        let rest = target - self.time;
        if rest > 1e-12 * self.dt {
            self.step(rest)?;
        }
        self.time = target;
        Ok(())
    }

    fn velocity(&self, out: &mut [f64]) {
        self.field.eval(&self.theta, out);
    }

    fn state(&self) -> PhaseState {
        PhaseState {
            theta: self.theta.clone(),
            time: self.time,
        }
    }

    /// Samples `θ̇` every `dt` over `window`, starting at the current state.
    fn observe(&mut self, window: f64, tol: f64) -> Result<LockVerdict> {
        let n = self.theta.len();
        let samples = (window / self.dt).ceil().max(1.0) as u64;
        let mut v = vec![0.0; n];
        let mut lo = vec![f64::INFINITY; n - 1];
        let mut hi = vec![f64::NEG_INFINITY; n - 1];
        let mut spread = 0.0f64;
        let mut omega_sum = 0.0;
        for i in 0..=samples {
            if i > 0 {
                self.step(self.dt)?;
            }
            self.velocity(&mut v);
            let mean = v.iter().sum::<f64>() / n as f64;
            omega_sum += mean;
            for &x in &v {
                spread = spread.max((x - mean).abs());
            }
            for k in 0..n - 1 {
                let d = self.theta[k] - self.theta[k + 1];
                lo[k] = lo[k].min(d);
                hi[k] = hi[k].max(d);
            }
        }
        let drift = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        Ok(LockVerdict {
            locked: spread < tol && drift < tol,
            max_frequency_spread: spread,
            max_phase_drift: drift,
            omega_hat: omega_sum / (samples + 1) as f64,
        })
    }
}

/// RK4 with the configured step, from `s0` for `duration` time units.
pub fn integrate(cfg: &SystemConfig, s0: &PhaseState, duration: f64) -> Result<PhaseState> {
    cfg.validate()?;
    check_len(cfg, s0)?;
    if !(duration >= 0.0) {
        return Err(Error::InvalidConfig("duration must be non-negative".into()));
    }
    let mut stepper = Stepper::new(cfg, s0);
    stepper.advance(duration)?;
    Ok(stepper.state())
}

/// Like [`integrate`], also recording the state every `every` steps
/// (the initial state included).
pub fn integrate_recording(
    cfg: &SystemConfig,
    s0: &PhaseState,
    duration: f64,
    every: usize,
) -> Result<Vec<PhaseState>> {
    cfg.validate()?;
    check_len(cfg, s0)?;
    let every = every.max(1) as u64;
    let mut stepper = Stepper::new(cfg, s0);
    let mut out = vec![stepper.state()];
    let full = (duration / cfg.dt).floor() as u64;
    for i in 1..=full {
        stepper.step(cfg.dt)?;
        if i % every == 0 {
            out.push(stepper.state());
        }
    }
    let rest = s0.time + duration - stepper.time;
    if rest > 1e-12 * cfg.dt {
        stepper.step(rest)?;
        out.push(stepper.state());
    }
    Ok(out)
}

/// Integrates the transient, then watches the observation window.
pub fn detect_lock(cfg: &SystemConfig, s0: &PhaseState) -> Result<LockVerdict> {
    detect_lock_with_state(cfg, s0).map(|(v, _)| v)
}

/// [`detect_lock`] that also returns the state at the end of the window.
pub fn detect_lock_with_state(
    cfg: &SystemConfig,
    s0: &PhaseState,
) -> Result<(LockVerdict, PhaseState)> {
    cfg.validate()?;
    check_len(cfg, s0)?;
    let mut stepper = Stepper::new(cfg, s0);
    stepper.advance(cfg.transient_time)?;
    let verdict = stepper.observe(cfg.observation_time, cfg.lock_tolerance)?;
    Ok((verdict, stepper.state()))
}

/// Integrates in chunks of `cfg.transient_time` until the instantaneous
/// frequency spread falls below `spread_tol` (or `max_time` elapses), then
/// observes one window. Used where a locked state is needed to high
/// precision rather than a yes/no verdict.
pub fn settle(
    cfg: &SystemConfig,
    s0: &PhaseState,
    spread_tol: f64,
    max_time: f64,
) -> Result<(LockVerdict, PhaseState)> {
    cfg.validate()?;
    check_len(cfg, s0)?;
    let n = s0.theta.len();
    let mut stepper = Stepper::new(cfg, s0);
    let mut v = vec![0.0; n];
    let start = stepper.time;
    loop {
        stepper.advance(cfg.transient_time)?;
        stepper.velocity(&mut v);
        let mean = v.iter().sum::<f64>() / n as f64;
        let spread = v.iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
        if spread < spread_tol || stepper.time - start >= max_time {
            break;
        }
    }
    let verdict = stepper.observe(cfg.observation_time, cfg.lock_tolerance)?;
    Ok((verdict, stepper.state()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn cfg(eta: Vec<f64>, gamma: f64, topology: Topology, scheme: Scheme) -> SystemConfig {
        SystemConfig::new(
            CouplingFunction::sine(),
            FrequencyVector::new(eta).unwrap(),
            gamma,
            topology,
            scheme,
        )
    }

    #[test]
    fn zero_state_is_fixed() {
        for topology in [Topology::Chain, Topology::Ring] {
            for scheme in [Scheme::Telescopic, Scheme::Standard] {
                let c = cfg(vec![0.3, -0.2, 0.9], 0.0, topology, scheme);
                let s = PhaseState::zeros(3);
                assert!(velocity_field(&c, &s).iter().all(|&v| v == 0.0));
                let end = integrate(&c, &s, 50.0).unwrap();
                assert!(end.theta.iter().all(|&v| v == 0.0));
                assert_eq!(end.time, 50.0);
            }
        }
    }

    #[test]
    fn two_oscillator_field() {
        let c = cfg(vec![1.0, -1.0], 0.0, Topology::Chain, Scheme::Telescopic);
        let s = PhaseState {
            theta: vec![FRAC_PI_2, 0.0],
            time: 0.0,
        };
        assert_eq!(velocity_field(&c, &s), vec![-1.0, 1.0]);
    }

    #[test]
    fn zero_duration_and_partial_step() {
        let c = cfg(
            vec![1.0, -1.0, 0.5],
            0.4,
            Topology::Ring,
            Scheme::Telescopic,
        );
        let s = PhaseState {
            theta: vec![0.1, 0.2, 0.3],
            time: 1.0,
        };
        assert_eq!(integrate(&c, &s, 0.0).unwrap(), s);
        let end = integrate(&c, &s, 0.3).unwrap();
        assert!((end.time - 1.3).abs() < 1e-15);
        assert!(integrate(&c, &s, -1.0).is_err());
    }

    #[test]
    fn pair_relaxes_to_arcsine() {
        // φ' = 2Γ - 2 sin φ
        let gamma = 0.6;
        let c = cfg(vec![1.0, -1.0], gamma, Topology::Chain, Scheme::Telescopic);
        let end = integrate(&c, &PhaseState::zeros(2), 200.0).unwrap();
        let phi = end.phase_differences()[0];
        assert!((phi - gamma.asin()).abs() < 1e-10);
    }

    #[test]
    fn lock_verdicts() {
        let c = cfg(vec![1.0, -1.0], 0.0, Topology::Chain, Scheme::Telescopic);
        let v = detect_lock(&c, &PhaseState::zeros(2)).unwrap();
        assert!(v.locked);
        assert_eq!(v.max_frequency_spread, 0.0);

        let c = cfg(
            vec![1.0, -2.0, 0.0, 1.0],
            1.05,
            Topology::Chain,
            Scheme::Telescopic,
        );
        assert!(!detect_lock(&c, &PhaseState::zeros(4)).unwrap().locked);

        let c = cfg(vec![1.0, -1.0], 1.5, Topology::Ring, Scheme::Telescopic);
        let v = detect_lock(&c, &PhaseState::zeros(2)).unwrap();
        assert!(v.locked);
        assert!(v.omega_hat.abs() < 1e-12);
    }

    #[test]
    fn non_finite_detected() {
        let c = cfg(vec![1.0, -1.0], 0.5, Topology::Chain, Scheme::Telescopic);
        let s = PhaseState {
            theta: vec![f64::NAN, 0.0],
            time: 0.0,
        };
        assert!(matches!(
            integrate(&c, &s, 1.0),
            Err(Error::NonFiniteState { .. })
        ));
    }

    #[test]
    fn recording_includes_endpoints() {
        let c = cfg(vec![1.0, -1.0, 0.2], 0.3, Topology::Chain, Scheme::Standard);
        let rec = integrate_recording(&c, &PhaseState::zeros(3), 1.0, 2).unwrap();
        assert_eq!(rec.len(), 5);
        assert_eq!(rec[0].time, 0.0);
        assert!((rec[4].time - 1.0).abs() < 1e-15);
        let direct = integrate(&c, &PhaseState::zeros(3), 1.0).unwrap();
        assert_eq!(rec[4].theta, direct.theta);
    }
}
