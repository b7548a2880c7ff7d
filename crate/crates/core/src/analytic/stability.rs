use nalgebra::{Complex, DMatrix};

use super::LockedState;
use crate::coupling::CouplingFunction;
use crate::model::{Scheme, Topology};

/// Eigenvalues closer to zero than this count as the rotational zero mode.
pub const ZERO_EIGEN_TOL: f64 = 1e-8;

/// `∂θ̇_k / ∂θ_j` at a locked state. Rows sum to zero because a common
/// phase rotation leaves the field unchanged.
pub fn jacobian(state: &LockedState, f: &CouplingFunction) -> DMatrix<f64> {
    let n = state.len();
    let mut jac = DMatrix::zeros(n, n);
    // Each edge (a, b) carries the difference θ_a - θ_b = d.
    let mut edges: Vec<(usize, usize, f64)> = state
        .phi
        .iter()
        .enumerate()
        .map(|(k, &p)| (k, k + 1, p))
        .collect();
    if state.topology == Topology::Ring {
        edges.push((n - 1, 0, state.closing_difference()));
    }
    for (a, b, d) in edges {
        let (to_b, to_a) = match state.scheme {
            // θ̇_a ∋ -f(θ_a - θ_b), θ̇_b ∋ +f(θ_a - θ_b)
            Scheme::Telescopic => (f.derivative(d), f.derivative(d)),
            // θ̇_a ∋ f(θ_b - θ_a), θ̇_b ∋ f(θ_a - θ_b)
            Scheme::Standard => (f.derivative(-d), f.derivative(d)),
        };
        jac[(a, b)] += to_b;
        jac[(b, a)] += to_a;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| jac[(i, j)]).sum();
        jac[(i, i)] = -off;
    }
    jac
}

/// Eigenvalues of the Jacobian; the symmetric solver is used for
/// telescopic coupling.
pub fn eigenvalues(state: &LockedState, f: &CouplingFunction) -> Vec<Complex<f64>> {
    let jac = jacobian(state, f);
    match state.scheme {
        Scheme::Telescopic => jac
            .symmetric_eigenvalues()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect(),
        Scheme::Standard => jac.complex_eigenvalues().iter().copied().collect(),
    }
}

/// Linear stability: every eigenvalue has real part `≤ 1e-8` and exactly
/// one lies within `1e-8` of zero.
pub fn check_stability(state: &LockedState, f: &CouplingFunction) -> bool {
    let eig = eigenvalues(state, f);
    let zeros = eig.iter().filter(|z| z.norm() <= ZERO_EIGEN_TOL).count();
    eig.iter().all(|z| z.re <= ZERO_EIGEN_TOL) && zeros == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn state(phi: Vec<f64>, topology: Topology, scheme: Scheme) -> LockedState {
        LockedState {
            phi,
            gamma: 0.0,
            omega: 0.0,
            topology,
            scheme,
            stable: false,
        }
    }

    #[test]
    fn path_laplacian() {
        let f = CouplingFunction::sine();
        let jac = jacobian(
            &state(vec![0.0; 2], Topology::Chain, Scheme::Telescopic),
            &f,
        );
        let want = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -1.0]);
        assert_eq!(jac, want);
    }

    #[test]
    fn triangle_laplacian() {
        let f = CouplingFunction::sine();
        for scheme in [Scheme::Telescopic, Scheme::Standard] {
            let jac = jacobian(&state(vec![0.0; 2], Topology::Ring, scheme), &f);
            let want =
                DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, -2.0]);
            assert_eq!(jac, want);
        }
    }

    #[test]
    fn two_oscillator_ring_doubles_the_edge() {
        let f = CouplingFunction::sine();
        let jac = jacobian(&state(vec![0.3], Topology::Ring, Scheme::Telescopic), &f);
        let w = 2.0 * 0.3f64.cos();
        assert!((jac[(0, 1)] - w).abs() < 1e-15);
        assert!((jac[(1, 1)] + w).abs() < 1e-15);
    }

    #[test]
    fn standard_jacobian_is_asymmetric_for_non_odd_f() {
        let f = CouplingFunction::shifted_sine(0.6);
        let jac = jacobian(
            &state(vec![0.4, -0.2], Topology::Chain, Scheme::Standard),
            &f,
        );
        assert!((jac[(0, 1)] - f.derivative(-0.4)).abs() < 1e-15);
        assert!((jac[(1, 0)] - f.derivative(0.4)).abs() < 1e-15);
        for i in 0..3 {
            assert!(jac.row(i).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_is_stable() {
        let f = CouplingFunction::sine();
        for topology in [Topology::Chain, Topology::Ring] {
            for scheme in [Scheme::Telescopic, Scheme::Standard] {
                assert!(check_stability(&state(vec![0.0; 4], topology, scheme), &f));
            }
        }
    }

    #[test]
    fn decreasing_branch_is_unstable() {
        // eigenvalue oracle: with φ = (0.3, π - 0.3) the path Laplacian has a
        // negative weight on the second link, giving one positive eigenvalue.
        let f = CouplingFunction::sine();
        let s = state(
            vec![0.3, std::f64::consts::PI - 0.3],
            Topology::Chain,
            Scheme::Telescopic,
        );
        assert!(!check_stability(&s, &f));
        let eig = eigenvalues(&s, &f);
        assert!(eig.iter().any(|z| z.re > 0.1));

        let s = state(
            vec![FRAC_PI_2 - 0.2, 0.1],
            Topology::Chain,
            Scheme::Telescopic,
        );
        assert!(check_stability(&s, &f));
    }
}
