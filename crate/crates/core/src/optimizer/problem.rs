//! Flat parameterization of a layered circuit and its cost.
//!
//! Parameter layout: layer `m` occupies `[6m, 6m + 6)` as
//! `(θ, φ, λ)` for odd-position qubits followed by `(θ, φ, λ)` for
//! even-position qubits; in free-time mode the `K` block times follow.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::circuit::{
    apply_layer_left, canonical_angles, wrap_angle, Gate2, LayerAngles, LayeredCircuit,
    RotationAngles, TimeMode,
};
use crate::error::{DaqcError, Result};
use crate::hamiltonian::{TwoBodyHamiltonian, DEFAULT_DENSE_QUBIT_CAP};
use crate::linalg::{self, CMatrix};
use crate::simulator::{PairFactors, Propagator, SimulationMode, Unitary};

pub const ANGLES_PER_LAYER: usize = 6;

/// A box-bounded objective over a flat parameter vector.
pub trait Objective: Sync {
    fn dimension(&self) -> usize;
    /// Closed box `[lo, hi]` per coordinate.
    fn bounds(&self) -> Vec<(f64, f64)>;
    /// Coordinates that are angles (wrapped, never clamped).
    fn is_periodic(&self, index: usize) -> bool;
    /// Maps `x` to its canonical representative inside the box without
    /// changing the cost. The default wraps periodic coordinates mod `2π`
    /// and clamps the rest.
    fn canonicalize(&self, x: &mut [f64]) {
        let bounds = self.bounds();
        for (i, v) in x.iter_mut().enumerate() {
            *v = if self.is_periodic(i) {
                wrap_angle(*v)
            } else {
                v.clamp(bounds[i].0, bounds[i].1)
            };
        }
    }
    fn cost(&self, x: &[f64]) -> f64;
    /// Cost and central finite-difference gradient with step `h`.
    fn cost_and_gradient(&self, x: &[f64], h: f64) -> (f64, Vec<f64>) {
        central_difference(self, x, h)
    }
}

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate.
pub fn central_difference<O: Objective + ?Sized>(obj: &O, x: &[f64], h: f64) -> (f64, Vec<f64>) {
    let mut probe = x.to_vec();
    let grad = (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = obj.cost(&probe);
            probe[i] = x[i] - h;
            let down = obj.cost(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect();
    (obj.cost(x), grad)
}

#[derive(Debug, Clone)]
enum BlockEngine {
    Exact,
    Pairwise(PairFactors),
}

/// Everything needed to score a layered circuit against a target evolution.
#[derive(Debug, Clone)]
pub struct CircuitProblem {
    n: usize,
    blocks: usize,
    total_time: f64,
    time_mode: TimeMode,
    cost_mode: SimulationMode,
    t_max: f64,
    source_norm: f64,
    target_norm: f64,
    propagator: Propagator,
    engine: BlockEngine,
    target: Unitary,
    exact_target: Unitary,
    fixed_block: Option<Unitary>,
    fixed_block_exact: Unitary,
}

/// Upper bound on free block times: `max(T/K, T ‖H_T‖ / (K ‖H_S‖))`.
///
/// The first term keeps every fixed-time circuit feasible in free mode.
pub fn free_time_bound(total_time: f64, blocks: usize, target_norm: f64, source_norm: f64) -> f64 {
    let k = blocks as f64;
    let ratio = if source_norm > 0.0 {
        total_time * target_norm / (k * source_norm)
    } else {
        0.0
    };
    (total_time / k).max(ratio)
}

impl CircuitProblem {
    /// `cost_mode` selects how analog blocks are evaluated. In pairwise mode
    /// the target stays exact unless `approximate_target` is set, in which
    /// case it is also replaced by its pairwise product.
    pub fn new(
        source: &TwoBodyHamiltonian,
        target: &TwoBodyHamiltonian,
        total_time: f64,
        blocks: usize,
        time_mode: TimeMode,
        cost_mode: SimulationMode,
        approximate_target: bool,
    ) -> Result<Self> {
        let n = source.n();
        if target.n() != n {
            return Err(DaqcError::QubitCountMismatch {
                left: n,
                right: target.n(),
            });
        }
        if n > DEFAULT_DENSE_QUBIT_CAP {
            return Err(DaqcError::QubitCapExceeded {
                n,
                cap: DEFAULT_DENSE_QUBIT_CAP,
            });
        }
        if blocks == 0 {
            return Err(DaqcError::InvalidConfig(
                "block count must be at least 1".into(),
            ));
        }
        if !(total_time.is_finite() && total_time >= 0.0) {
            return Err(DaqcError::InvalidConfig(format!(
                "invalid total time {total_time}"
            )));
        }
        if time_mode == TimeMode::Explicit {
            return Err(DaqcError::InvalidConfig(
                "optimization needs fixed or free time mode".into(),
            ));
        }
        let propagator = Propagator::for_hamiltonian(source)?;
        let exact_target = Propagator::for_hamiltonian(target)?.evolve(total_time);
        let (engine, target_u) = match cost_mode {
            SimulationMode::Exact => (BlockEngine::Exact, exact_target.clone()),
            SimulationMode::PairwiseTrotter => {
                let t = if approximate_target {
                    PairFactors::new(target)?.unitary(total_time)
                } else {
                    exact_target.clone()
                };
                (BlockEngine::Pairwise(PairFactors::new(source)?), t)
            }
        };
        let (source_norm, target_norm) = (source.frobenius_norm(), target.frobenius_norm());
        let t_fixed = total_time / blocks as f64;
        let mut p = Self {
            n,
            blocks,
            total_time,
            time_mode,
            cost_mode,
            t_max: free_time_bound(total_time, blocks, target_norm, source_norm),
            source_norm,
            target_norm,
            fixed_block_exact: propagator.evolve(t_fixed),
            propagator,
            engine,
            target: target_u,
            exact_target,
            fixed_block: None,
        };
        if time_mode == TimeMode::Fixed {
            p.fixed_block = Some(p.block_unitary(t_fixed));
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn time_mode(&self) -> TimeMode {
        self.time_mode
    }

    pub fn cost_mode(&self) -> SimulationMode {
        self.cost_mode
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn norms(&self) -> (f64, f64) {
        (self.source_norm, self.target_norm)
    }

    pub fn target_unitary(&self) -> &Unitary {
        &self.target
    }

    pub fn exact_target_unitary(&self) -> &Unitary {
        &self.exact_target
    }

    fn angle_count(&self) -> usize {
        ANGLES_PER_LAYER * (self.blocks + 1)
    }

    fn block_unitary(&self, t: f64) -> Unitary {
        match &self.engine {
            BlockEngine::Exact => self.propagator.evolve(t),
            BlockEngine::Pairwise(f) => f.unitary(t),
        }
    }

    fn block_times(&self, x: &[f64]) -> Vec<f64> {
        match self.time_mode {
            TimeMode::Free => x[self.angle_count()..].to_vec(),
            _ => vec![self.total_time / self.blocks as f64; self.blocks],
        }
    }

    fn blocks_for(&self, x: &[f64]) -> Vec<Unitary> {
        match (&self.fixed_block, self.time_mode) {
            (Some(a), TimeMode::Fixed) => vec![a.clone(); self.blocks],
            _ => self
                .block_times(x)
                .iter()
                .map(|t| self.block_unitary(*t))
                .collect(),
        }
    }

    fn layer_gates(&self, x: &[f64], m: usize) -> Vec<Gate2> {
        layer_gates_raw(self.n, &x[ANGLES_PER_LAYER * m..ANGLES_PER_LAYER * (m + 1)])
    }

    /// Circuit unitary for a raw parameter vector.
    pub fn unitary(&self, x: &[f64]) -> Unitary {
        self.unitary_with(x, &self.blocks_for(x))
    }

    fn unitary_with(&self, x: &[f64], blocks: &[Unitary]) -> Unitary {
        let mut u = linalg::kron_layer(&self.layer_gates(x, 0));
        for (k, a) in blocks.iter().enumerate() {
            u = linalg::matmul(a, &u);
            apply_layer_left(&mut u, &self.layer_gates(x, k + 1));
        }
        u
    }

    /// Cost with exact blocks against the exact target, whatever the cost mode.
    pub fn exact_cost(&self, x: &[f64]) -> f64 {
        let blocks: Vec<Unitary> = match self.time_mode {
            TimeMode::Fixed => vec![self.fixed_block_exact.clone(); self.blocks],
            _ => self
                .block_times(x)
                .iter()
                .map(|t| self.propagator.evolve(*t))
                .collect(),
        };
        linalg::frobenius_distance_unchecked(&self.unitary_with(x, &blocks), &self.exact_target)
    }

    pub fn circuit_from_params(&self, x: &[f64]) -> LayeredCircuit {
        let layers = (0..=self.blocks)
            .map(|m| {
                let p = &x[ANGLES_PER_LAYER * m..];
                LayerAngles {
                    odd: RotationAngles::new(p[0], p[1], p[2]),
                    even: RotationAngles::new(p[3], p[4], p[5]),
                }
            })
            .collect();
        LayeredCircuit {
            n: self.n,
            rotation_layers: layers,
            block_times: self.block_times(x),
            time_mode: self.time_mode,
        }
    }

    /// Parameters reproducing `c`, or `None` when `c` lies outside this
    /// problem's feasible set (wrong shape or block times).
    pub fn params_from_circuit(&self, c: &LayeredCircuit) -> Option<Vec<f64>> {
        if c.n != self.n || c.blocks() != self.blocks || c.rotation_layers.len() != self.blocks + 1
        {
            return None;
        }
        let fixed = self.total_time / self.blocks as f64;
        let fits = match self.time_mode {
            TimeMode::Free => c.block_times.iter().all(|t| (0.0..=self.t_max).contains(t)),
            _ => c
                .block_times
                .iter()
                .all(|t| (t - fixed).abs() <= 1e-12 * fixed.max(1.0)),
        };
        if !fits {
            return None;
        }
        let mut x = Vec::with_capacity(self.dimension());
        for layer in &c.rotation_layers {
            x.extend(layer.odd.as_array());
            x.extend(layer.even.as_array());
        }
        if self.time_mode == TimeMode::Free {
            x.extend(&c.block_times);
        }
        Some(x)
    }

    /// Cost and central-difference gradient, with every perturbed cost
    /// evaluated as a trace against cached environment matrices.
    ///
    /// For a layer `L_m`, `‖U - V‖² = 2d - 2 Re tr(L_m W_m)` with
    /// `W_m = S_m V† P_m`, where `S_m` and `P_m` are the circuit parts
    /// before and after `L_m`.
    pub fn fast_cost_and_gradient(&self, x: &[f64], h: f64) -> (f64, Vec<f64>) {
        let k = self.blocks;
        let dim = 1usize << self.n;
        let blocks = self.blocks_for(x);
        let layers: Vec<Vec<Gate2>> = (0..=k).map(|m| self.layer_gates(x, m)).collect();
        let to_cost = |re_trace: f64| (2.0 * dim as f64 - 2.0 * re_trace).max(0.0).sqrt();

        // before[m] = A_m L_m ··· A_1 L_1 with the layer L_{m+1} still to come.
        let mut before = Vec::with_capacity(k + 1);
        let mut s = CMatrix::identity(dim, dim);
        for m in 0..=k {
            before.push(s.clone());
            if m < k {
                apply_layer_left(&mut s, &layers[m]);
                s = linalg::matmul(&blocks[m], &s);
            }
        }
        // after[m] = V† L_{K+1} A_K ··· A_{m+1}, the part following layer m.
        let mut after = vec![CMatrix::zeros(0, 0); k + 1];
        let mut r = self.target.adjoint();
        for m in (0..=k).rev() {
            after[m] = r.clone();
            if m > 0 {
                apply_layer_right(&mut r, &layers[m]);
                r = linalg::matmul(&r, &blocks[m - 1]);
            }
        }

        let mut grad = vec![0.0; self.dimension()];
        let mut cost = f64::NAN;
        for m in 0..=k {
            // tr(L_m S_m V† P_m) = tr(L_m W) with W = before[m] · after[m].
            let w = linalg::matmul(&before[m], &after[m]);
            if m == 0 {
                cost = to_cost(linalg::trace_of_product(&linalg::kron_layer(&layers[0]), &w).re);
            }
            let base = &x[ANGLES_PER_LAYER * m..ANGLES_PER_LAYER * (m + 1)];
            let mut probe = [0.0; ANGLES_PER_LAYER];
            probe.copy_from_slice(base);
            for i in 0..ANGLES_PER_LAYER {
                let mut eval = |v: f64| {
                    probe[i] = v;
                    let l = linalg::kron_layer(&layer_gates_raw(self.n, &probe));
                    to_cost(linalg::trace_of_product(&l, &w).re)
                };
                let up = eval(base[i] + h);
                let down = eval(base[i] - h);
                probe[i] = base[i];
                grad[ANGLES_PER_LAYER * m + i] = (up - down) / (2.0 * h);
            }
        }

        if self.time_mode == TimeMode::Free {
            let times = self.block_times(x);
            let offset = self.angle_count();
            for (j, t) in times.iter().enumerate() {
                // Block A_{j+1} sits between L_{j+1} (index j) and L_{j+2}.
                let mut pre = before[j].clone();
                apply_layer_left(&mut pre, &layers[j]);
                let mut post = after[j + 1].clone();
                apply_layer_right(&mut post, &layers[j + 1]);
                let w = linalg::matmul(&pre, &post);
                let (up, down) = match &self.engine {
                    BlockEngine::Exact => {
                        let d = self.propagator.diagonal_overlap(&w);
                        let trace_at = |tt: f64| -> f64 {
                            d.iter()
                                .zip(self.propagator.eigenvalues())
                                .map(|(di, l)| (Complex64::from_polar(1.0, -tt * l) * di).re)
                                .sum()
                        };
                        (to_cost(trace_at(t + h)), to_cost(trace_at(t - h)))
                    }
                    BlockEngine::Pairwise(f) => (
                        to_cost(linalg::trace_of_product(&f.unitary(t + h), &w).re),
                        to_cost(linalg::trace_of_product(&f.unitary(t - h), &w).re),
                    ),
                };
                grad[offset + j] = (up - down) / (2.0 * h);
            }
        }
        (cost, grad)
    }
}

fn apply_layer_right(m: &mut CMatrix, gates: &[Gate2]) {
    let n = gates.len();
    for (q, g) in gates.iter().enumerate() {
        linalg::apply_one_qubit_right(m, n - 1 - q, g);
    }
}

fn layer_gates_raw(n: usize, p: &[f64]) -> Vec<Gate2> {
    LayerAngles {
        odd: RotationAngles {
            theta: p[0],
            phi: p[1],
            lambda: p[2],
        },
        even: RotationAngles {
            theta: p[3],
            phi: p[4],
            lambda: p[5],
        },
    }
    .gates(n)
}

impl Objective for CircuitProblem {
    fn dimension(&self) -> usize {
        self.angle_count()
            + if self.time_mode == TimeMode::Free {
                self.blocks
            } else {
                0
            }
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dimension())
            .map(|i| {
                if i < self.angle_count() {
                    (0.0, TAU)
                } else {
                    (0.0, self.t_max)
                }
            })
            .collect()
    }

    fn is_periodic(&self, index: usize) -> bool {
        index < self.angle_count()
    }

    fn canonicalize(&self, x: &mut [f64]) {
        let angles = self.angle_count();
        for triple in x[..angles].chunks_exact_mut(3) {
            triple.copy_from_slice(&canonical_angles(triple[0], triple[1], triple[2]));
        }
        for t in &mut x[angles..] {
            *t = t.clamp(0.0, self.t_max);
        }
    }

    fn cost(&self, x: &[f64]) -> f64 {
        linalg::frobenius_distance_unchecked(&self.unitary(x), &self.target)
    }

    fn cost_and_gradient(&self, x: &[f64], h: f64) -> (f64, Vec<f64>) {
        self.fast_cost_and_gradient(x, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{cross_resonance_chain, xy_chain};
    use crate::optimizer::circuit::circuit_unitary;
    use rand::{Rng, SeedableRng};

    fn problem(mode: TimeMode, cost: SimulationMode) -> CircuitProblem {
        let src = cross_resonance_chain(3, &[[1.0, 0.8, 1.2], [0.9, 1.1, 1.0]]).unwrap();
        let tgt = xy_chain(3, 1.0).unwrap();
        CircuitProblem::new(&src, &tgt, 0.7, 2, mode, cost, false).unwrap()
    }

    fn random_point(p: &CircuitProblem, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        p.bounds()
            .iter()
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect()
    }

    #[test]
    fn unitary_matches_circuit_model() {
        for mode in [TimeMode::Fixed, TimeMode::Free] {
            for cost in [SimulationMode::Exact, SimulationMode::PairwiseTrotter] {
                let p = problem(mode, cost);
                let x = random_point(&p, 3);
                let c = p.circuit_from_params(&x);
                let src = cross_resonance_chain(3, &[[1.0, 0.8, 1.2], [0.9, 1.1, 1.0]]).unwrap();
                let u = circuit_unitary(&c, &src, cost).unwrap();
                assert!((u - p.unitary(&x)).norm() < 1e-10);
                assert_eq!(
                    p.params_from_circuit(&c).map(|y| p.cost(&y)).unwrap(),
                    p.cost(&p.params_from_circuit(&c).unwrap())
                );
            }
        }
    }

    #[test]
    fn fast_gradient_matches_plain_differences() {
        for mode in [TimeMode::Fixed, TimeMode::Free] {
            for cost in [SimulationMode::Exact, SimulationMode::PairwiseTrotter] {
                let p = problem(mode, cost);
                for seed in 0..3 {
                    let x = random_point(&p, seed);
                    let (f_fast, g_fast) = p.fast_cost_and_gradient(&x, 1e-5);
                    let (f_plain, g_plain) = central_difference(&p, &x, 1e-5);
                    assert!((f_fast - f_plain).abs() < 1e-10);
                    for (a, b) in g_fast.iter().zip(&g_plain) {
                        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn exact_cost_equals_cost_in_exact_mode() {
        let p = problem(TimeMode::Free, SimulationMode::Exact);
        let x = random_point(&p, 9);
        assert!((p.exact_cost(&x) - p.cost(&x)).abs() < 1e-12);
    }

    #[test]
    fn fixed_circuits_fit_the_free_box() {
        let fixed = problem(TimeMode::Fixed, SimulationMode::Exact);
        let free = problem(TimeMode::Free, SimulationMode::Exact);
        let x = random_point(&fixed, 1);
        let mut c = fixed.circuit_from_params(&x);
        c.time_mode = TimeMode::Free;
        let y = free.params_from_circuit(&c).unwrap();
        assert!((free.cost(&y) - fixed.cost(&x)).abs() < 1e-10);
    }
}
