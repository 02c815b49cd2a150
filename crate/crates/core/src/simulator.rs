//! Dense unitary evaluation of Hamiltonians and schedules.
//!
//! Operator order: a schedule's blocks are applied left to right in time, so
//! the unitary of blocks `1..K` is `U_K ··· U_2 U_1`.

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{TwoBodyHamiltonian, DEFAULT_DENSE_QUBIT_CAP};
use crate::linalg::{self, CMatrix};
use crate::scheduler::Schedule;
use crate::signmatrix::GateSelection;

pub type Unitary = CMatrix;

/// How analog evolutions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    /// Full matrix exponential.
    Exact,
    /// Product of pair-local exponentials in ascending pair order.
    PairwiseTrotter,
}

impl SimulationMode {
    pub fn name(self) -> &'static str {
        match self {
            SimulationMode::Exact => "exact",
            SimulationMode::PairwiseTrotter => "pairwise_trotter",
        }
    }
}

impl FromStr for SimulationMode {
    type Err = DaqcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SimulationMode::Exact),
            "pairwise_trotter" | "pairwise-trotter" => Ok(SimulationMode::PairwiseTrotter),
            other => Err(DaqcError::Parse(format!(
                "unknown simulation mode {other:?}"
            ))),
        }
    }
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix, reusable for
/// any evolution time.
#[derive(Debug, Clone)]
pub struct Propagator {
    vectors: CMatrix,
    values: Vec<f64>,
}

impl Propagator {
    pub fn new(h: &CMatrix) -> Result<Self> {
        let scale = 1.0 + h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dev = linalg::hermitian_deviation(h);
        if dev > 1e-10 * scale {
            return Err(DaqcError::NotHermitian(dev));
        }
        let eig = h.clone().symmetric_eigen();
        Ok(Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues.iter().copied().collect(),
        })
    }

    pub fn for_hamiltonian(h: &TwoBodyHamiltonian) -> Result<Self> {
        Self::new(&h.dense_matrix()?)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Diagonal of `V† W V` in the eigenbasis, so that
    /// `tr(exp(-i t H) W) = Σ_k exp(-i t λ_k) d_k`.
    pub fn diagonal_overlap(&self, w: &CMatrix) -> Vec<Complex64> {
        let wv = linalg::matmul(w, &self.vectors);
        (0..self.values.len())
            .map(|k| {
                self.vectors
                    .column(k)
                    .iter()
                    .zip(wv.column(k).iter())
                    .map(|(v, x)| v.conj() * x)
                    .sum()
            })
            .collect()
    }

    /// `exp(-i t H)`.
    pub fn evolve(&self, t: f64) -> Unitary {
        let mut scaled = self.vectors.clone();
        for (c, lambda) in self.values.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -t * lambda);
            for z in scaled.column_mut(c).iter_mut() {
                *z *= phase;
            }
        }
        linalg::matmul_adjoint_right(&scaled, &self.vectors)
    }
}

/// `exp(-i t H)` through a Hermitian eigendecomposition.
pub fn evolve(h: &TwoBodyHamiltonian, t: f64) -> Result<Unitary> {
    if t == 0.0 {
        return identity(h.n(), DEFAULT_DENSE_QUBIT_CAP);
    }
    Ok(Propagator::for_hamiltonian(h)?.evolve(t))
}

fn identity(n: usize, cap: usize) -> Result<Unitary> {
    if n > cap {
        return Err(DaqcError::QubitCapExceeded { n, cap });
    }
    Ok(CMatrix::identity(1 << n, 1 << n))
}

/// The 4x4 pair Hamiltonian `Σ h^{μν} σ^μ ⊗ σ^ν` on `(i, j)`.
fn pair_block(h: &TwoBodyHamiltonian, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (key, &s) in h.pair_terms(i, j) {
        let a = key.mu.matrix();
        let b = key.nu.matrix();
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] += a[r / 2][c / 2] * b[r % 2][c % 2] * s;
            }
        }
    }
    m
}

/// Pair-local exponentials `exp(-i t h_ij)` for every coupled pair, ascending.
#[derive(Debug, Clone)]
pub struct PairFactors {
    n: usize,
    factors: Vec<(usize, usize, Propagator)>,
}

impl PairFactors {
    pub fn new(h: &TwoBodyHamiltonian) -> Result<Self> {
        let factors = h
            .coupled_pairs()
            .into_iter()
            .map(|(i, j)| Ok((i, j, Propagator::new(&pair_block(h, i, j))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: h.n(), factors })
    }

    /// Left-multiplies `m` by `Π_b F_b(t)` (the product written with the
    /// lowest pair index leftmost).
    pub fn apply_left(&self, m: &mut CMatrix, t: f64) {
        for (i, j, p) in self.factors.iter().rev() {
            let g = p.evolve(t);
            linalg::apply_two_qubit_left(m, self.n - i, self.n - j, &g);
        }
    }

    pub fn unitary(&self, t: f64) -> Unitary {
        let mut u = CMatrix::identity(1 << self.n, 1 << self.n);
        self.apply_left(&mut u, t);
        u
    }
}

/// First-order pairwise approximation `Π_{b ascending} exp(-i t h_b) ⊗ 1`.
pub fn evolve_pairwise_trotter(h: &TwoBodyHamiltonian, t: f64) -> Result<Unitary> {
    identity(h.n(), DEFAULT_DENSE_QUBIT_CAP)?;
    Ok(PairFactors::new(h)?.unitary(t))
}

/// Source couplings with the sign flips induced by sandwiching with `sel`.
pub fn conjugate_by_gates(h: &TwoBodyHamiltonian, sel: &GateSelection) -> TwoBodyHamiltonian {
    h.map_strengths(|key, v| v * f64::from(sel.sign_for(key)))
}

/// Dense Pauli layer `⊗_q P_q` for a gate selection.
pub fn gate_layer_matrix(sel: &GateSelection) -> Unitary {
    let gates: Vec<[[Complex64; 2]; 2]> = sel
        .gates()
        .iter()
        .map(|g| match g.axis() {
            Some(a) => a.matrix(),
            None => [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
        })
        .collect();
    linalg::kron_layer(&gates)
}

/// Action of a Pauli layer on a basis index: `G|s> = phase(s) |s ^ flip>`.
struct PauliLayer {
    flip: usize,
    n: usize,
    sel: GateSelection,
}

impl PauliLayer {
    fn new(sel: &GateSelection) -> Self {
        let n = sel.n();
        let flip = sel
            .gates()
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g.axis(), Some(a) if a != crate::hamiltonian::PauliAxis::Z))
            .fold(0usize, |acc, (q, _)| acc | 1 << (n - 1 - q));
        Self {
            flip,
            n,
            sel: sel.clone(),
        }
    }

    fn phase(&self, s: usize) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (q, g) in self.sel.gates().iter().enumerate() {
            if let Some(a) = g.axis() {
                acc *= a.act_on_bit((s >> (self.n - 1 - q)) & 1 == 1).1;
            }
        }
        acc
    }

    /// `G M G` for a Pauli layer `G` (Hermitian and self-inverse).
    fn sandwich(&self, m: &CMatrix) -> CMatrix {
        if self.sel.is_identity() {
            return m.clone();
        }
        let dim = m.nrows();
        let phases: Vec<Complex64> = (0..dim).map(|s| self.phase(s)).collect();
        // (G M G)[r, c] = phase(r ^ f) phase(c) M[r ^ f, c ^ f]
        CMatrix::from_fn(dim, dim, |r, c| {
            let rs = r ^ self.flip;
            let cs = c ^ self.flip;
            phases[rs] * phases[c] * m[(rs, cs)]
        })
    }
}

/// Frobenius norm of `U - V`.
pub fn frobenius_distance(u: &Unitary, v: &Unitary) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(DaqcError::DimensionMismatch {
            expected: u.nrows(),
            actual: v.nrows(),
        });
    }
    Ok(linalg::frobenius_distance_unchecked(u, v))
}

/// `‖U U† - I‖_F`.
pub fn unitarity_error(u: &Unitary) -> f64 {
    linalg::unitarity_error(u)
}

/// Unitary of a schedule: `(U_K ··· U_1)^{n_T}` with block durations `t_k / n_T`.
pub fn run_schedule(s: &Schedule, mode: SimulationMode) -> Result<Unitary> {
    run_schedule_with_steps(s, s.trotter_steps, mode)
}

/// Like [`run_schedule`] with the Trotter step count overridden.
pub fn run_schedule_with_steps(
    s: &Schedule,
    trotter_steps: usize,
    mode: SimulationMode,
) -> Result<Unitary> {
    if trotter_steps == 0 {
        return Err(DaqcError::InvalidConfig(
            "trotter_steps must be at least 1".into(),
        ));
    }
    if let Some((index, b)) = s.blocks.iter().enumerate().find(|(_, b)| b.duration < 0.0) {
        return Err(DaqcError::NegativeDuration {
            index,
            duration: b.duration,
        });
    }
    let mut step = identity(s.n, DEFAULT_DENSE_QUBIT_CAP)?;
    if s.blocks.is_empty() {
        return Ok(step);
    }
    let nt = trotter_steps as f64;
    match mode {
        SimulationMode::Exact => {
            let prop = Propagator::for_hamiltonian(&s.source)?;
            for block in &s.blocks {
                let u =
                    PauliLayer::new(&block.sandwich).sandwich(&prop.evolve(block.duration / nt));
                step = linalg::matmul(&u, &step);
            }
        }
        SimulationMode::PairwiseTrotter => {
            for block in &s.blocks {
                let conj = conjugate_by_gates(&s.source, &block.sandwich);
                PairFactors::new(&conj)?.apply_left(&mut step, block.duration / nt);
            }
        }
    }
    let mut total = step.clone();
    for _ in 1..trotter_steps {
        total = linalg::matmul(&step, &total);
    }
    Ok(total)
}

/// Reference route for [`run_schedule`] in exact mode: diagonalizes every
/// conjugated source separately.
pub fn run_schedule_literal(s: &Schedule, trotter_steps: usize) -> Result<Unitary> {
    let mut step = identity(s.n, DEFAULT_DENSE_QUBIT_CAP)?;
    for block in &s.blocks {
        let h = conjugate_by_gates(&s.source, &block.sandwich);
        let u = evolve(&h, block.duration / trotter_steps as f64)?;
        step = &u * &step;
    }
    let mut total = CMatrix::identity(step.nrows(), step.ncols());
    for _ in 0..trotter_steps {
        total = &step * &total;
    }
    Ok(total)
}
