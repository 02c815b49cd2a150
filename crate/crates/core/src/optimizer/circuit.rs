//! Layered rotation circuits and the two-stage Trotter baseline.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{
    homogeneous_cross_resonance, TwoBodyHamiltonian, DEFAULT_DENSE_QUBIT_CAP,
};
use crate::linalg::{self, CMatrix};
use crate::simulator::{self, PairFactors, Propagator, SimulationMode, Unitary};

pub type Gate2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Angles of `R(θ, φ, λ)`, canonicalized so that `φ, λ ∈ [0, 2π)` and
/// `θ ∈ [0, 2π]`.
///
/// `R` has period `4π` in `θ` (`R(θ + 2π) = -R(θ)`), so `θ` cannot simply be
/// reduced mod `2π` without changing the unitary. Canonicalization instead
/// uses `R(θ, φ, λ) = R(-θ, φ + π, λ + π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationAngles {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Canonical angles describing the same matrix as `R(θ, φ, λ)`.
pub fn canonical_angles(theta: f64, phi: f64, lambda: f64) -> [f64; 3] {
    let t = theta.rem_euclid(2.0 * TAU);
    if t > TAU {
        [2.0 * TAU - t, wrap_angle(phi + PI), wrap_angle(lambda + PI)]
    } else {
        [t, wrap_angle(phi), wrap_angle(lambda)]
    }
}

impl RotationAngles {
    pub fn new(theta: f64, phi: f64, lambda: f64) -> Self {
        let [theta, phi, lambda] = canonical_angles(theta, phi, lambda);
        Self { theta, phi, lambda }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta, self.phi, self.lambda]
    }
}

/// `[[cos θ/2, -e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(λ+φ)} cos θ/2]]`.
pub fn rotation_unitary(a: &RotationAngles) -> Gate2 {
    rotation_matrix(a.theta, a.phi, a.lambda)
}

fn rotation_matrix(theta: f64, phi: f64, lambda: f64) -> Gate2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), -Complex64::from_polar(s, lambda)],
        [
            Complex64::from_polar(s, phi),
            Complex64::from_polar(co, lambda + phi),
        ],
    ]
}

/// Writes `u = e^{iα} R(θ, φ, λ)` and returns the angles with `α`.
///
/// Every 2x2 unitary has such a form; `R` alone covers exactly the unitaries
/// whose top-left entry is real and non-negative.
pub fn decompose_u2(u: &Gate2) -> (RotationAngles, f64) {
    const EPS: f64 = 1e-12;
    let a00 = u[0][0].norm();
    let a10 = u[1][0].norm();
    let alpha = if a00 > EPS {
        u[0][0].arg()
    } else {
        u[1][0].arg()
    };
    let rot = Complex64::from_polar(1.0, -alpha);
    let v = [
        [u[0][0] * rot, u[0][1] * rot],
        [u[1][0] * rot, u[1][1] * rot],
    ];
    let theta = 2.0 * a10.atan2(v[0][0].re);
    let (phi, lambda) = if a10 > EPS {
        let phi = v[1][0].arg();
        let lambda = if a00 > EPS {
            (v[1][1].arg() - phi).rem_euclid(TAU)
        } else {
            (-v[0][1]).arg()
        };
        (phi, lambda)
    } else {
        (0.0, v[1][1].arg())
    };
    (RotationAngles::new(theta, phi, lambda), alpha)
}

/// One rotation for the odd-position qubits (1, 3, ...) and one for the
/// even-position qubits (2, 4, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerAngles {
    pub odd: RotationAngles,
    pub even: RotationAngles,
}

impl LayerAngles {
    pub fn uniform(a: RotationAngles) -> Self {
        Self { odd: a, even: a }
    }

    pub fn identity() -> Self {
        Self::uniform(RotationAngles::identity())
    }

    /// Per-qubit gates, qubit 1 first.
    pub fn gates(&self, n: usize) -> Vec<Gate2> {
        let (o, e) = (rotation_unitary(&self.odd), rotation_unitary(&self.even));
        (0..n).map(|q| if q % 2 == 0 { o } else { e }).collect()
    }
}

/// How block durations are parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// Every block lasts `T / K`.
    Fixed,
    /// Each block time is free in `[0, t_max]`.
    Free,
    /// Times set by an explicit construction (the Trotter baseline).
    Explicit,
}

impl TimeMode {
    pub fn name(self) -> &'static str {
        match self {
            TimeMode::Fixed => "fixed",
            TimeMode::Free => "free",
            TimeMode::Explicit => "explicit",
        }
    }
}

/// `L_{K+1} A_K L_K ··· A_1 L_1` with rotation layers `L` and analog blocks `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredCircuit {
    pub n: usize,
    pub rotation_layers: Vec<LayerAngles>,
    pub block_times: Vec<f64>,
    pub time_mode: TimeMode,
}

impl LayeredCircuit {
    pub fn blocks(&self) -> usize {
        self.block_times.len()
    }

    fn check(&self) -> Result<()> {
        if self.rotation_layers.len() != self.block_times.len() + 1 {
            return Err(DaqcError::DimensionMismatch {
                expected: self.block_times.len() + 1,
                actual: self.rotation_layers.len(),
            });
        }
        if let Some((index, &duration)) =
            self.block_times.iter().enumerate().find(|(_, t)| **t < 0.0)
        {
            return Err(DaqcError::NegativeDuration { index, duration });
        }
        Ok(())
    }
}

/// Left-multiplies `m` by the tensor product of per-qubit gates.
pub(crate) fn apply_layer_left(m: &mut CMatrix, gates: &[Gate2]) {
    let n = gates.len();
    for (q, g) in gates.iter().enumerate() {
        linalg::apply_one_qubit_left(m, n - 1 - q, g);
    }
}

/// Unitary of a layered circuit driven by `source`.
pub fn circuit_unitary(
    c: &LayeredCircuit,
    source: &TwoBodyHamiltonian,
    mode: SimulationMode,
) -> Result<Unitary> {
    c.check()?;
    if c.n != source.n() {
        return Err(DaqcError::QubitCountMismatch {
            left: c.n,
            right: source.n(),
        });
    }
    let mut u = linalg::kron_layer(&c.rotation_layers[0].gates(c.n));
    match mode {
        SimulationMode::Exact => {
            let prop = Propagator::for_hamiltonian(source)?;
            for (t, layer) in c.block_times.iter().zip(&c.rotation_layers[1..]) {
                u = linalg::matmul(&prop.evolve(*t), &u);
                apply_layer_left(&mut u, &layer.gates(c.n));
            }
        }
        SimulationMode::PairwiseTrotter => {
            if c.n > DEFAULT_DENSE_QUBIT_CAP {
                return Err(DaqcError::QubitCapExceeded {
                    n: c.n,
                    cap: DEFAULT_DENSE_QUBIT_CAP,
                });
            }
            let factors = PairFactors::new(source)?;
            for (t, layer) in c.block_times.iter().zip(&c.rotation_layers[1..]) {
                factors.apply_left(&mut u, *t);
                apply_layer_left(&mut u, &layer.gates(c.n));
            }
        }
    }
    Ok(u)
}

fn mul2(a: &Gate2, b: &Gate2) -> Gate2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            out[r][k] = a[r][0] * b[0][k] + a[r][1] * b[1][k];
        }
    }
    out
}

fn adjoint2(a: &Gate2) -> Gate2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

const PAULI_X: Gate2 = [
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
];

/// `exp(-iπ/4 X)`; conjugation maps `Z` to `Y`.
fn half_x() -> Gate2 {
    let s = FRAC_1_SQRT_2;
    [[c(s, 0.0), c(0.0, -s)], [c(0.0, -s), c(s, 0.0)]]
}

/// `exp(-iπ/4 Y)`; conjugation maps `Z` to `-X`.
fn half_y() -> Gate2 {
    let s = FRAC_1_SQRT_2;
    [[c(s, 0.0), c(-s, 0.0)], [c(s, 0.0), c(s, 0.0)]]
}

/// Per-step layer matrices of the baseline in time order. Each Trotter step
/// runs `[Rx] A [X] A [Ry Rx† X] A [X] A [Ry† X]`, where the X sandwich
/// turns the cross-resonance source into a ZZ evolution and the half-angle
/// rotations carry it onto YY and XX. Adjacent layers of consecutive steps
/// are merged.
fn baseline_layer_gates(n_t: usize) -> Vec<Gate2> {
    let rx = half_x();
    let ry = half_y();
    let x = PAULI_X;
    let mid = mul2(&ry, &mul2(&adjoint2(&rx), &x));
    let tail = mul2(&adjoint2(&ry), &x);
    let mut layers = Vec::with_capacity(4 * n_t + 1);
    for step in 0..n_t {
        layers.push(if step == 0 { rx } else { mul2(&rx, &tail) });
        layers.push(x);
        layers.push(mid);
        layers.push(x);
    }
    layers.push(tail);
    layers
}

/// The baseline as a layered circuit with `4 n_T` blocks of `T / (2 n_T)`.
pub fn trotter_baseline_circuit(n: usize, total_time: f64, n_t: usize) -> Result<LayeredCircuit> {
    if n_t == 0 {
        return Err(DaqcError::InvalidConfig(
            "trotter_steps must be at least 1".into(),
        ));
    }
    let gates = baseline_layer_gates(n_t);
    let mut layers = Vec::with_capacity(gates.len());
    let mut phase = 0.0;
    for g in &gates {
        let (a, alpha) = decompose_u2(g);
        phase += alpha;
        layers.push(LayerAngles::uniform(a));
    }
    // Layer 1 (the first X) has a zero top-left entry, so the accumulated
    // global phase can be folded into its φ and λ without leaving the family.
    let absorb = &mut layers[1];
    absorb.odd = RotationAngles::new(
        absorb.odd.theta,
        absorb.odd.phi + phase,
        absorb.odd.lambda + phase,
    );
    absorb.even = absorb.odd;
    let tau = total_time / (2.0 * n_t as f64);
    Ok(LayeredCircuit {
        n,
        rotation_layers: layers,
        block_times: vec![tau; 4 * n_t],
        time_mode: TimeMode::Explicit,
    })
}

/// Baseline unitary built from its defining product:
/// `[(Ry† Z Ry)(Rx† Z Rx)]^{n_T}` with `Z = X^{⊗n} A X^{⊗n} A`, `A = e^{-i H_S T/(2 n_T)}`.
pub fn trotter_baseline_unitary(
    source: &TwoBodyHamiltonian,
    total_time: f64,
    n_t: usize,
) -> Result<Unitary> {
    let n = source.n();
    let all = |g: Gate2| linalg::kron_layer(&vec![g; n]);
    let a = simulator::evolve(source, total_time / (2.0 * n_t as f64))?;
    let xs = all(PAULI_X);
    let zz = &xs * &a * &xs * &a;
    let rx = all(half_x());
    let ry = all(half_y());
    let step = ry.adjoint() * &zz * &ry * rx.adjoint() * &zz * &rx;
    let mut u = CMatrix::identity(1 << n, 1 << n);
    for _ in 0..n_t {
        u = &step * &u;
    }
    Ok(u)
}

/// Homogeneous-source baseline for the XY target with coupling `g`.
pub fn make_trotter_baseline(
    n: usize,
    g: f64,
    total_time: f64,
    n_t: usize,
) -> Result<(LayeredCircuit, Unitary)> {
    let source = homogeneous_cross_resonance(n, g)?;
    let circuit = trotter_baseline_circuit(n, total_time, n_t)?;
    let u = trotter_baseline_unitary(&source, total_time, n_t)?;
    Ok((circuit, u))
}

/// Angles for `R_x(π) = X`, exposed for tests and docs.
pub fn pauli_x_angles() -> RotationAngles {
    RotationAngles::new(PI, 0.0, PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::xy_chain;

    fn close(a: &Gate2, b: &Gate2, tol: f64) -> bool {
        (0..2).all(|r| (0..2).all(|k| (a[r][k] - b[r][k]).norm() < tol))
    }

    #[test]
    fn rotation_examples() {
        let id = rotation_unitary(&RotationAngles::identity());
        assert!(close(
            &id,
            &[[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
            1e-15
        ));
        assert!(close(&rotation_unitary(&pauli_x_angles()), &PAULI_X, 1e-15));
        let s = FRAC_1_SQRT_2;
        let h = rotation_unitary(&RotationAngles::new(PI / 2.0, 0.0, PI));
        assert!(close(
            &h,
            &[[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            1e-15
        ));
    }

    #[test]
    fn canonicalization_preserves_the_matrix() {
        for (t, p, l) in [
            (7.0, 1.0, -2.0),
            (-0.3, 0.2, 0.1),
            (13.0, 9.0, 4.0),
            (TAU + 0.5, 0.0, 0.0),
            (-TAU, 0.0, 0.0),
        ] {
            let a = RotationAngles::new(t, p, l);
            assert!((0.0..=TAU).contains(&a.theta));
            assert!((0.0..TAU).contains(&a.phi) && (0.0..TAU).contains(&a.lambda));
            assert!(close(
                &rotation_unitary(&a),
                &rotation_matrix(t, p, l),
                1e-13
            ));
        }
        // θ + 2π negates the gate.
        let a = rotation_matrix(0.7, 0.2, 0.3);
        let b = rotation_matrix(0.7 + TAU, 0.2, 0.3);
        assert!((0..2).all(|r| (0..2).all(|k| (a[r][k] + b[r][k]).norm() < 1e-15)));
    }

    #[test]
    fn decomposition_roundtrip() {
        let samples = [
            half_x(),
            half_y(),
            PAULI_X,
            mul2(&half_y(), &mul2(&adjoint2(&half_x()), &PAULI_X)),
            mul2(&adjoint2(&half_y()), &PAULI_X),
            [[c(0.0, 1.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]],
            rotation_matrix(1.1, 2.3, 4.0),
        ];
        for u in samples {
            let (a, alpha) = decompose_u2(&u);
            let r = rotation_unitary(&a);
            let p = Complex64::from_polar(1.0, alpha);
            let rebuilt = [[r[0][0] * p, r[0][1] * p], [r[1][0] * p, r[1][1] * p]];
            assert!(close(&rebuilt, &u, 1e-12), "{u:?}");
        }
    }

    #[test]
    fn half_rotations_map_z() {
        let z: Gate2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        let y: Gate2 = [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let rx = half_x();
        let ry = half_y();
        assert!(close(&mul2(&adjoint2(&rx), &mul2(&z, &rx)), &y, 1e-15));
        let minus_x = [[c(0.0, 0.0), c(-1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 0.0)]];
        assert!(close(
            &mul2(&adjoint2(&ry), &mul2(&z, &ry)),
            &minus_x,
            1e-15
        ));
    }

    #[test]
    fn baseline_circuit_matches_explicit_product() {
        for (n, n_t) in [(3, 1), (4, 2), (6, 1)] {
            let (circuit, u) = make_trotter_baseline(n, 1.0, 0.8, n_t).unwrap();
            assert_eq!(circuit.blocks(), 4 * n_t);
            let src = homogeneous_cross_resonance(n, 1.0).unwrap();
            let v = circuit_unitary(&circuit, &src, SimulationMode::Exact).unwrap();
            assert!((v - u).norm() < 1e-9);
        }
    }

    #[test]
    fn baseline_angles_are_eighth_turn_multiples() {
        // Quarter turns everywhere except the layer carrying the global phase.
        let c = trotter_baseline_circuit(4, 1.0, 3).unwrap();
        for (m, layer) in c.rotation_layers.iter().enumerate() {
            let unit = if m == 1 { PI / 4.0 } else { PI / 2.0 };
            for x in layer.odd.as_array() {
                let k = x / unit;
                assert!(
                    (k - k.round()).abs() < 1e-9 || (TAU - x).abs() < 1e-9,
                    "angle {x}"
                );
            }
        }
    }

    #[test]
    fn identity_circuit_is_plain_evolution() {
        let src = xy_chain(3, 0.6).unwrap();
        let c = LayeredCircuit {
            n: 3,
            rotation_layers: vec![LayerAngles::identity(); 2],
            block_times: vec![0.9],
            time_mode: TimeMode::Fixed,
        };
        let u = circuit_unitary(&c, &src, SimulationMode::Exact).unwrap();
        assert!((u - simulator::evolve(&src, 0.9).unwrap()).norm() < 1e-12);
    }
}
