use proptest::prelude::*;

use ringlock::analytic::{
    chain_locked_state, chain_threshold, ratio_upper_bound, ring_approximate_state,
    ring_upper_bound, standard_chain_locked_state,
};
use ringlock::coupling::{CouplingFunction, Harmonic};
use ringlock::frequencies::FrequencyVector;

fn coupling() -> impl Strategy<Value = CouplingFunction> {
    prop::collection::vec((1u32..=3, -1.0f64..1.0, -1.0f64..1.0), 1..=3).prop_filter_map(
        "flat",
        |hs| {
            let f = CouplingFunction::new(
                0.0,
                hs.into_iter()
                    .map(|(order, cos, sin)| Harmonic { order, cos, sin }),
            );
            f.harmonics()
                .iter()
                .any(|h| h.cos.abs() + h.sin.abs() > 0.1)
                .then_some(f)
        },
    )
}

fn frequencies(max_n: usize) -> impl Strategy<Value = FrequencyVector> {
    // identical frequencies lock at any coupling strength
    prop::collection::vec(-1.0f64..1.0, 2..=max_n)
        .prop_filter("degenerate", |v| v.iter().any(|x| (x - v[0]).abs() > 1e-3))
        .prop_map(|v| FrequencyVector::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_bound_dominates_chain_threshold(f in coupling(), fv in frequencies(30)) {
        let p = f.profile().unwrap();
        let cd = fv.cumulative_deviations();
        prop_assert!(ring_upper_bound(&p, &cd) >= chain_threshold(&p, &cd));
        prop_assert!(ratio_upper_bound(&p) >= 2.0);
    }

    #[test]
    fn chain_state_solves_link_equations(f in coupling(), fv in frequencies(30), u in 0.0f64..0.999) {
        let p = f.profile().unwrap();
        let cd = fv.cumulative_deviations();
        let gamma = u * chain_threshold(&p, &cd);
        let s = chain_locked_state(&f, &p, &fv, gamma).unwrap();
        for (phi, d) in s.phi.iter().zip(&cd.d) {
            prop_assert!((f.eval(*phi) - gamma * d).abs() < 1e-9);
            prop_assert!(f.derivative(*phi) > 0.0);
        }
    }

    #[test]
    fn ring_approximation_respects_bound(f in coupling(), fv in frequencies(40), u in 0.0f64..0.999) {
        let p = f.profile().unwrap();
        let cd = fv.cumulative_deviations();
        let chain = chain_locked_state(&f, &p, &fv, u * chain_threshold(&p, &cd)).unwrap();
        let approx = ring_approximate_state(&f, &p, &cd, &chain).unwrap();
        prop_assert!((0.0..std::f64::consts::TAU).contains(&approx.psi));
        prop_assert!(approx.max_residual() <= approx.residual_bound);
        prop_assert!(f.eval(-approx.phi_ring.iter().sum::<f64>()).abs() < 1e-9);
    }

    /// For odd `f` the standard links obey the telescopic equations. The
    /// solvers may still pick different branches when `Λ ≠ -Λ`.
    #[test]
    fn odd_coupling_schemes_agree(
        sins in prop::collection::vec((1u32..=3, 0.1f64..1.0), 1..=2),
        fv in frequencies(12),
        u in 0.05f64..0.8,
    ) {
        let f = CouplingFunction::new(0.0, sins.into_iter().map(|(order, sin)| Harmonic { order, cos: 0.0, sin }));
        let p = f.profile().unwrap();
        let cd = fv.cumulative_deviations();
        let gamma = u * chain_threshold(&p, &cd);
        let tele = chain_locked_state(&f, &p, &fv, gamma).unwrap();
        let std = standard_chain_locked_state(&f, &p, &fv, gamma).unwrap();
        prop_assert!((std.omega - tele.omega).abs() < 1e-9);
        prop_assert!(std.stable && tele.stable);
        for (phi, d) in std.phi.iter().zip(&cd.d) {
            prop_assert!((f.eval(*phi) - gamma * d).abs() < 1e-9, "{:?}", std.phi);
            prop_assert!(f.derivative(*phi) > 0.0);
        }
    }
}
