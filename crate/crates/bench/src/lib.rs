//! Fixtures shared by the benchmarks.

use daqc_core::hamiltonian::{
    homogeneous_cross_resonance, xy_chain, CouplingKey, PauliAxis, TwoBodyHamiltonian,
};
use daqc_core::optimizer::{CircuitProblem, Objective, TimeMode};
use daqc_core::simulator::SimulationMode;

/// Every coupling on `n` qubits, with deterministic strengths bounded away from zero.
pub fn dense(n: usize, phase: f64) -> TwoBodyHamiltonian {
    let mut terms = Vec::new();
    let mut k = 0.0;
    for i in 1..=n {
        for j in i + 1..=n {
            for mu in 0..3 {
                for nu in 0..3 {
                    k += 1.0;
                    let x: f64 = (0.7 * k + phase).sin();
                    let key = CouplingKey::new(
                        i,
                        j,
                        PauliAxis::from_rank(mu).unwrap(),
                        PauliAxis::from_rank(nu).unwrap(),
                    );
                    terms.push((key, x.signum() * (0.5 + x.abs())));
                }
            }
        }
    }
    TwoBodyHamiltonian::from_couplings(n, terms).unwrap()
}

/// The XY-chain circuit problem on a homogeneous cross-resonance source.
pub fn xy_problem(
    n: usize,
    blocks: usize,
    time_mode: TimeMode,
    cost_mode: SimulationMode,
) -> CircuitProblem {
    let source = homogeneous_cross_resonance(n, 1.0).unwrap();
    let target = xy_chain(n, 1.0).unwrap();
    CircuitProblem::new(&source, &target, 1.0, blocks, time_mode, cost_mode, false).unwrap()
}

/// A deterministic interior point of the problem's box.
pub fn interior_point(p: &CircuitProblem) -> Vec<f64> {
    p.bounds()
        .iter()
        .enumerate()
        .map(|(i, (lo, hi))| lo + (hi - lo) * (0.3 + 0.4 * ((i as f64) * 0.37).fract()))
        .collect()
}
