//! Block-time solvers, schedule assembly, Trotterization and error diagnostics.

mod io;
pub mod nnls;

use nalgebra::{DMatrix, DVector};

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{ratio_vector, CouplingVector, TwoBodyHamiltonian};
use crate::signmatrix::{
    self, conjugation_sign, coupling_for_global, is_nonsingular, min_singular_value,
    numerical_rank, Gate, GateSelection, Protocol, SignMatrix, DEFAULT_POOL_QUBIT_CAP,
};

pub use io::{parse_schedule, write_schedule};
use nnls::{nnls, ColumnOracle};

/// Blocks shorter than `ZERO_THRESHOLD × T` are dropped from emitted schedules.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Relative residual accepted from the exact solver.
pub const EXACT_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Relative residual accepted from the non-negative solver.
pub const POSITIVE_RESIDUAL_TOLERANCE: f64 = 1e-8;

/// One analog evolution, sandwiched by the same Pauli layer before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBlock {
    pub duration: f64,
    pub sandwich: GateSelection,
}

/// A compiled digital-analog schedule.
///
/// `blocks` holds one Trotter step's worth of blocks with their full
/// durations; execution repeats them `trotter_steps` times with durations
/// divided by `trotter_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub n: usize,
    pub source: TwoBodyHamiltonian,
    pub blocks: Vec<AnalogBlock>,
    pub trotter_steps: usize,
    /// Simulated evolution time `T` of the target.
    pub total_time: f64,
}

impl Schedule {
    pub fn empty(source: TwoBodyHamiltonian, total_time: f64) -> Self {
        Self {
            n: source.n(),
            source,
            blocks: Vec::new(),
            trotter_steps: 1,
            total_time,
        }
    }

    /// `t_A = Σ_k t_k`.
    pub fn total_analog_time(&self) -> f64 {
        self.blocks.iter().map(|b| b.duration).sum()
    }

    pub fn with_trotter_steps(mut self, trotter_steps: usize) -> Result<Self> {
        if trotter_steps == 0 {
            return Err(DaqcError::InvalidConfig(
                "trotter_steps must be at least 1".into(),
            ));
        }
        self.trotter_steps = trotter_steps;
        Ok(self)
    }
}

/// Quality figures for a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `‖Σ_k t_k M_k - T g/h‖` on the active rows.
    pub residual: f64,
    pub negative_time_count: usize,
    pub total_analog_time: f64,
    pub error_bound: f64,
    /// `T ‖H_T‖ / ‖H_S‖`.
    pub analog_time_lower_bound: f64,
    /// `max|g| / min|h|` over active rows.
    pub coupling_ratio: f64,
    pub min_duration: Option<f64>,
    /// `min(t_k) / t_SQG` when a gate time is supplied.
    pub bang_metric: Option<f64>,
    pub block_count: usize,
}

/// Solves `M t = b` on the active rows of `b`, without a sign constraint.
///
/// A square restriction is solved by LU; an underdetermined one (rows dropped
/// for couplings absent from the source) returns the minimum-norm solution.
pub fn solve_times(m: &SignMatrix, b: &CouplingVector) -> Result<Vec<f64>> {
    let a = m.restrict_rows(&b.active_rows)?;
    if b.entries.len() != a.nrows() {
        return Err(DaqcError::DimensionMismatch {
            expected: a.nrows(),
            actual: b.entries.len(),
        });
    }
    let rhs = DVector::from_column_slice(&b.entries);
    let t = if a.is_square() {
        if !is_nonsingular(&a) {
            return Err(DaqcError::SingularSystem {
                min_singular_value: min_singular_value(&a),
            });
        }
        a.clone()
            .lu()
            .solve(&rhs)
            .ok_or(DaqcError::SingularSystem {
                min_singular_value: 0.0,
            })?
    } else {
        if numerical_rank(&a) < a.nrows() {
            let s = a.clone().singular_values();
            return Err(DaqcError::SingularSystem {
                min_singular_value: s.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        let svd = a.clone().svd(true, true);
        svd.solve(&rhs, 1e-12)
            .map_err(|e| DaqcError::InvalidConfig(e.to_string()))?
    };
    let residual = (&a * &t - &rhs).norm();
    let tol = EXACT_RESIDUAL_TOLERANCE * rhs.norm();
    if residual > tol.max(1e-300) && residual > 1e-14 {
        return Err(DaqcError::ResidualTooLarge {
            residual,
            tolerance: tol,
        });
    }
    Ok(t.iter().copied().collect())
}

/// Schedule from the exact protocol solve; fails if any time is negative.
pub fn build_exact_schedule(
    source: &TwoBodyHamiltonian,
    target: &TwoBodyHamiltonian,
    total_time: f64,
    protocol: Protocol,
) -> Result<Schedule> {
    check_time(total_time)?;
    let b = ratio_vector(target, source, total_time)?;
    let m = protocol.matrix(source.n())?;
    let t = solve_times(&m, &b)?;
    let threshold = ZERO_THRESHOLD * total_time;
    let negatives: Vec<(usize, String, f64)> = t
        .iter()
        .enumerate()
        .filter(|(_, v)| **v < -threshold)
        .map(|(k, v)| (k + 1, m.column_gates[k].to_string(), *v))
        .collect();
    if !negatives.is_empty() {
        return Err(DaqcError::NegativeTimes { blocks: negatives });
    }
    let blocks = t
        .iter()
        .zip(&m.column_gates)
        .filter(|(v, _)| **v >= threshold && **v > 0.0)
        .map(|(v, g)| AnalogBlock {
            duration: *v,
            sandwich: g.clone(),
        })
        .collect();
    Ok(Schedule {
        n: source.n(),
        source: source.clone(),
        blocks,
        trotter_steps: 1,
        total_time,
    })
}

fn check_time(total_time: f64) -> Result<()> {
    if !(total_time.is_finite() && total_time >= 0.0) {
        return Err(DaqcError::InvalidConfig(format!(
            "total time must be finite and non-negative, got {total_time}"
        )));
    }
    Ok(())
}

/// The `4^n` selection pool restricted to a set of active rows.
///
/// Column `k` is the `k`-th selection of [`signmatrix::selection_pool`].
pub struct PoolColumns {
    n: usize,
    codes: Vec<u64>,
    /// Per active row: `(pair slot, i, j, μ rank, ν rank)`.
    rows: Vec<(usize, usize, usize, usize, usize)>,
    pairs: Vec<(usize, usize)>,
}

impl PoolColumns {
    pub fn new(n: usize, active_rows: &[usize]) -> Result<Self> {
        if n > DEFAULT_POOL_QUBIT_CAP {
            return Err(DaqcError::QubitCapExceeded {
                n,
                cap: DEFAULT_POOL_QUBIT_CAP,
            });
        }
        let codes = signmatrix::selection_pool(n).map(|s| s.code()).collect();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut rows = Vec::with_capacity(active_rows.len());
        for &g in active_rows {
            let key = coupling_for_global(g, n)?;
            let slot = match pairs.iter().position(|p| *p == (key.i, key.j)) {
                Some(s) => s,
                None => {
                    pairs.push((key.i, key.j));
                    pairs.len() - 1
                }
            };
            rows.push((slot, key.i, key.j, key.mu.rank(), key.nu.rank()));
        }
        Ok(Self {
            n,
            codes,
            rows,
            pairs,
        })
    }

    pub fn selection(&self, k: usize) -> GateSelection {
        GateSelection::from_code(self.codes[k], self.n)
    }

    fn gate_code(&self, code: u64, q: usize) -> usize {
        ((code >> (2 * (self.n - q))) & 3) as usize
    }
}

/// `SIGN[g][axis]` = conjugation sign of gate code `g` on axis rank `axis`.
fn sign_table() -> [[f64; 3]; 4] {
    let mut t = [[0.0; 3]; 4];
    for g in Gate::ALL {
        for a in crate::hamiltonian::PauliAxis::ALL {
            t[g.code()][a.rank()] = f64::from(conjugation_sign(g, a));
        }
    }
    t
}

impl ColumnOracle for PoolColumns {
    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn ncols(&self) -> usize {
        self.codes.len()
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        let s = sign_table();
        let code = self.codes[j];
        for (o, &(_, i, jq, mu, nu)) in out.iter_mut().zip(&self.rows) {
            *o = s[self.gate_code(code, i)][mu] * s[self.gate_code(code, jq)][nu];
        }
    }

    /// Folds the residual into one 4x4 table per qubit pair, so each column
    /// costs one lookup per pair.
    fn transpose_mul(&self, r: &[f64]) -> Vec<f64> {
        let s = sign_table();
        let mut tables = vec![[[0.0f64; 4]; 4]; self.pairs.len()];
        for (&(slot, _, _, mu, nu), &rv) in self.rows.iter().zip(r) {
            for (a, sa) in s.iter().enumerate() {
                for (b, sb) in s.iter().enumerate() {
                    tables[slot][a][b] += rv * sa[mu] * sb[nu];
                }
            }
        }
        self.codes
            .iter()
            .map(|&code| {
                self.pairs
                    .iter()
                    .zip(&tables)
                    .map(|(&(i, j), t)| t[self.gate_code(code, i)][self.gate_code(code, j)])
                    .sum()
            })
            .collect()
    }
}

/// Non-negative block times over the full selection pool.
pub fn solve_positive_times(
    source: &TwoBodyHamiltonian,
    target: &TwoBodyHamiltonian,
    total_time: f64,
) -> Result<(Schedule, SolveReport)> {
    check_time(total_time)?;
    let b = ratio_vector(target, source, total_time)?;
    let pool = PoolColumns::new(source.n(), &b.active_rows)?;
    let sol = nnls(&pool, &b.entries);
    let threshold = ZERO_THRESHOLD * total_time;
    let blocks: Vec<AnalogBlock> = sol
        .support
        .iter()
        .filter(|(_, v)| *v >= threshold)
        .map(|&(k, v)| AnalogBlock {
            duration: v,
            sandwich: pool.selection(k),
        })
        .collect();
    let schedule = Schedule {
        n: source.n(),
        source: source.clone(),
        blocks,
        trotter_steps: 1,
        total_time,
    };
    let residual = effective_residual(&schedule, target)?;
    let tolerance = POSITIVE_RESIDUAL_TOLERANCE * b.norm().max(1.0);
    if residual > tolerance {
        return Err(DaqcError::ResidualTooLarge {
            residual,
            tolerance,
        });
    }
    let report = analog_time_diagnostics(&schedule, target, None)?;
    Ok((schedule, report))
}

/// `‖Σ_k t_k M_k - T g/h‖₂` over the source's active rows.
pub fn effective_residual(s: &Schedule, target: &TwoBodyHamiltonian) -> Result<f64> {
    let b = ratio_vector(target, &s.source, s.total_time)?;
    let mut acc = 0.0;
    for (&g, &bg) in b.active_rows.iter().zip(&b.entries) {
        let key = coupling_for_global(g, s.n)?;
        let eff: f64 = s
            .blocks
            .iter()
            .map(|blk| blk.duration * f64::from(blk.sandwich.sign_for(&key)))
            .sum();
        acc += (eff - bg).powi(2);
    }
    Ok(acc.sqrt())
}

/// Expands a schedule into `n_T` explicit repetitions of its blocks, each
/// with duration `t_k / n_T`. The result has `trotter_steps = 1`.
pub fn trotterize(s: &Schedule, n_t: usize) -> Result<Schedule> {
    if n_t == 0 {
        return Err(DaqcError::InvalidConfig(
            "trotter_steps must be at least 1".into(),
        ));
    }
    let reps = s.trotter_steps * n_t;
    let scale = reps as f64;
    let mut blocks = Vec::with_capacity(s.blocks.len() * reps);
    for _ in 0..reps {
        blocks.extend(s.blocks.iter().map(|b| AnalogBlock {
            duration: b.duration / scale,
            sandwich: b.sandwich.clone(),
        }));
    }
    Ok(Schedule {
        n: s.n,
        source: s.source.clone(),
        blocks,
        trotter_steps: 1,
        total_time: s.total_time,
    })
}

/// `(2/n_T) t_A² ‖H_S‖² exp(((n_T + 2)/n_T) t_A ‖H_S‖)` with Frobenius norms.
pub fn error_bound(s: &Schedule) -> Result<f64> {
    if let Some((index, b)) = s.blocks.iter().enumerate().find(|(_, b)| b.duration < 0.0) {
        return Err(DaqcError::NegativeDuration {
            index,
            duration: b.duration,
        });
    }
    Ok(trotter_bound(
        s.total_analog_time(),
        s.source.frobenius_norm(),
        s.trotter_steps,
    ))
}

/// The product-formula bound for analog time `t_a`, source norm `norm` and
/// `n_t` Trotter steps.
pub fn trotter_bound(t_a: f64, norm: f64, n_t: usize) -> f64 {
    let nt = n_t as f64;
    let x = t_a * norm;
    2.0 / nt * x * x * ((nt + 2.0) / nt * x).exp()
}

/// Residual, analog time, bounds and gate-time metric of a schedule.
pub fn analog_time_diagnostics(
    s: &Schedule,
    target: &TwoBodyHamiltonian,
    t_sqg: Option<f64>,
) -> Result<SolveReport> {
    let residual = effective_residual(s, target)?;
    let t_a = s.total_analog_time();
    let hs = s.source.frobenius_norm();
    let ht = target.frobenius_norm();
    let lower = if hs > 0.0 {
        s.total_time * ht / hs
    } else {
        0.0
    };
    let max_g = target.couplings().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let min_h = s
        .source
        .couplings()
        .map(|(_, v)| v.abs())
        .fold(f64::INFINITY, f64::min);
    let coupling_ratio = if min_h.is_finite() && min_h > 0.0 {
        max_g / min_h
    } else {
        0.0
    };
    let min_duration = s
        .blocks
        .iter()
        .map(|b| b.duration)
        .filter(|d| *d > 0.0)
        .reduce(f64::min);
    let bang_metric = match (min_duration, t_sqg) {
        (Some(m), Some(t)) if t > 0.0 => Some(m / t),
        _ => None,
    };
    let negative_time_count = s.blocks.iter().filter(|b| b.duration < 0.0).count();
    let error_bound = if negative_time_count == 0 {
        error_bound(s)?
    } else {
        f64::NAN
    };
    Ok(SolveReport {
        residual,
        negative_time_count,
        total_analog_time: t_a,
        error_bound,
        analog_time_lower_bound: lower,
        coupling_ratio,
        min_duration,
        bang_metric,
        block_count: s.blocks.len(),
    })
}

/// Dense sign matrix of the pool (or any selection list) on the given rows.
pub fn selection_matrix(
    n: usize,
    rows: &[usize],
    selections: &[GateSelection],
) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows.len(), selections.len());
    for (r, &g) in rows.iter().enumerate() {
        let key = coupling_for_global(g, n)?;
        for (c, sel) in selections.iter().enumerate() {
            m[(r, c)] = f64::from(sel.sign_for(&key));
        }
    }
    Ok(m)
}
