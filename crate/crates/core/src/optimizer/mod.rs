//! Fixed-depth circuit optimization: `K` analog blocks interleaved with
//! `K + 1` layers of arbitrary single-qubit rotations (one rotation shared by
//! the odd-position qubits, one by the even-position qubits), tuned by a
//! Gaussian-process search followed by gradient descent.

pub mod bayes;
pub mod circuit;
pub mod descent;
pub mod problem;
pub mod rng;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use circuit::{
    canonical_angles, circuit_unitary, decompose_u2, make_trotter_baseline, rotation_unitary,
    trotter_baseline_circuit, trotter_baseline_unitary, wrap_angle, LayerAngles, LayeredCircuit,
    RotationAngles, TimeMode,
};
pub use descent::{DescentOutcome, DescentSettings, FD_STEP};
pub use problem::{central_difference, free_time_bound, CircuitProblem, Objective};

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{cross_resonance_chain, PauliAxis, TwoBodyHamiltonian};
use crate::simulator::{self, SimulationMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    /// Acquisitions per run after the initial design.
    pub bayes_steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub cost_mode: SimulationMode,
    pub time_mode: TimeMode,
    pub gd_max_iters: usize,
    pub gd_step: f64,
    pub gd_tolerance: f64,
    /// In pairwise mode, also replace the target by its pairwise product.
    pub approximate_target: bool,
    /// Put the Trotter baseline into every initial design when it fits the
    /// parameter box.
    pub seed_baseline: bool,
    /// Trotter steps of the reference baseline; `max(1, K / 4)` when unset.
    pub baseline_trotter_steps: Option<usize>,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            bayes_steps: 10,
            runs: 20,
            seed: 0,
            cost_mode: SimulationMode::Exact,
            time_mode: TimeMode::Fixed,
            gd_max_iters: 300,
            gd_step: 0.1,
            gd_tolerance: 1e-6,
            approximate_target: false,
            seed_baseline: true,
            baseline_trotter_steps: None,
        }
    }
}

impl OptimizationConfig {
    /// Parses a TOML configuration; absent fields take their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| DaqcError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DaqcError::InvalidConfig(msg.into()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if !(self.gd_step > 0.0 && self.gd_step.is_finite()) {
            return bad("gd_step must be positive");
        }
        if !(self.gd_tolerance > 0.0 && self.gd_tolerance.is_finite()) {
            return bad("gd_tolerance must be positive");
        }
        if self.time_mode == TimeMode::Explicit {
            return bad("time_mode must be fixed or free");
        }
        if self.baseline_trotter_steps == Some(0) {
            return bad("baseline_trotter_steps must be at least 1");
        }
        Ok(())
    }

    pub fn descent_settings(&self) -> DescentSettings {
        DescentSettings {
            max_iters: self.gd_max_iters,
            initial_step: self.gd_step,
            tolerance: self.gd_tolerance,
            fd_step: FD_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    /// Incumbent cost after the initial design and after each acquisition.
    pub bayes_incumbents: Vec<f64>,
    /// Cost along the descent, starting at the search incumbent.
    pub descent_trace: Vec<f64>,
    pub descent_iterations: usize,
    /// Final cost under the configured cost mode.
    pub cost: f64,
    /// Final circuit re-evaluated with exact blocks against the exact target.
    pub cost_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub trotter_steps: usize,
    pub blocks: usize,
    /// Exact cost of the Trotter baseline circuit on this source.
    pub cost: f64,
    /// `(baseline - best) / baseline`, using the exact cost of the best circuit.
    pub improvement: f64,
    /// Whether the baseline fitted the parameter box and seeded every run.
    pub seeded: bool,
}

/// Order statistics of the final run costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl CostSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub config: OptimizationConfig,
    pub n: usize,
    pub blocks: usize,
    pub total_time: f64,
    pub t_max: f64,
    pub source_hash: String,
    pub target_hash: String,
    pub best_run: usize,
    pub best_cost: f64,
    pub best_cost_exact: f64,
    pub summary: CostSummary,
    pub summary_exact: CostSummary,
    pub baseline: Option<BaselineComparison>,
    pub best_circuit: LayeredCircuit,
    pub runs: Vec<RunRecord>,
}

impl OptimizationResult {
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| DaqcError::Parse(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DaqcError::Parse(e.to_string()))
    }

    pub fn run_costs(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.cost).collect()
    }

    pub fn run_costs_exact(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.cost_exact).collect()
    }
}

/// Nearest-neighbour source with `h^{xz}, h^{zx}, h^{zz}` drawn from
/// `Normal(g, sigma)` (sigma is the standard deviation), pair by pair in
/// that order.
pub fn sample_inhomogeneous_source(
    g: f64,
    sigma: f64,
    n: usize,
    seed: u64,
) -> Result<TwoBodyHamiltonian> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(DaqcError::InvalidConfig(format!(
            "sigma must be a nonnegative real, got {sigma}"
        )));
    }
    let normal = Normal::new(g, sigma)
        .map_err(|e| DaqcError::InvalidConfig(format!("sigma {sigma}: {e}")))?;
    let mut rng = rng::substream(seed, "inhomogeneous-source");
    let links: Vec<[f64; 3]> = (1..n)
        .map(|_| std::array::from_fn(|_| normal.sample(&mut rng)))
        .collect();
    cross_resonance_chain(n, &links)
}

/// Uniform coupling `g` when `h` is exactly a nearest-neighbour XY chain.
pub fn xy_chain_coupling(h: &TwoBodyHamiltonian) -> Option<f64> {
    let n = h.n();
    if n < 2 || h.len() != 2 * (n - 1) {
        return None;
    }
    let g = h.couplings().next().map(|(_, v)| *v)?;
    h.couplings()
        .all(|(k, v)| k.j == k.i + 1 && k.mu == k.nu && k.mu != PauliAxis::Z && *v == g)
        .then_some(g)
}

fn is_cross_resonance_source(h: &TwoBodyHamiltonian) -> bool {
    h.couplings().all(|(k, _)| {
        k.j == k.i + 1
            && matches!(
                (k.mu, k.nu),
                (PauliAxis::X, PauliAxis::Z)
                    | (PauliAxis::Z, PauliAxis::X)
                    | (PauliAxis::Z, PauliAxis::Z)
            )
    })
}

/// The Trotter baseline circuit and its exact cost, when the problem is an
/// XY-chain target driven by a nearest-neighbour cross-resonance source.
pub fn baseline_reference(
    source: &TwoBodyHamiltonian,
    target: &TwoBodyHamiltonian,
    total_time: f64,
    trotter_steps: usize,
) -> Result<Option<(LayeredCircuit, f64)>> {
    if xy_chain_coupling(target).is_none() || !is_cross_resonance_source(source) {
        return Ok(None);
    }
    let circuit = trotter_baseline_circuit(source.n(), total_time, trotter_steps)?;
    let u = circuit_unitary(&circuit, source, SimulationMode::Exact)?;
    let v = simulator::evolve(target, total_time)?;
    let cost = simulator::frobenius_distance(&u, &v)?;
    Ok(Some((circuit, cost)))
}

/// One search-then-descend run.
fn run_once(
    problem: &CircuitProblem,
    cfg: &OptimizationConfig,
    run: usize,
    seeds: &[Vec<f64>],
) -> (RunRecord, Vec<f64>) {
    let mut rng = rng::substream(cfg.seed, &format!("run/{run}"));
    let search = bayes::bayesian_run(problem, cfg.bayes_steps, seeds, &mut rng);
    let (start, _) = search.best();
    let out = descent::descend(problem, start, &cfg.descent_settings());
    let record = RunRecord {
        run,
        bayes_incumbents: search.incumbents.clone(),
        descent_trace: out.trace,
        descent_iterations: out.iterations,
        cost: out.cost,
        cost_exact: problem.exact_cost(&out.x),
    };
    (record, out.x)
}

/// Runs `cfg.runs` independent optimizations and returns the best circuit.
pub fn optimize(
    source: &TwoBodyHamiltonian,
    target: &TwoBodyHamiltonian,
    total_time: f64,
    blocks: usize,
    cfg: &OptimizationConfig,
) -> Result<OptimizationResult> {
    optimize_seeded(source, target, total_time, blocks, cfg, &[])
}

/// Like [`optimize`], with extra circuits added to every initial design
/// (those outside the parameter box are skipped).
pub fn optimize_seeded(
    source: &TwoBodyHamiltonian,
    target: &TwoBodyHamiltonian,
    total_time: f64,
    blocks: usize,
    cfg: &OptimizationConfig,
    seeds: &[LayeredCircuit],
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let problem = CircuitProblem::new(
        source,
        target,
        total_time,
        blocks,
        cfg.time_mode,
        cfg.cost_mode,
        cfg.approximate_target,
    )?;
    let mut seed_params: Vec<Vec<f64>> = seeds
        .iter()
        .filter_map(|c| {
            let mut c = c.clone();
            c.time_mode = cfg.time_mode;
            problem.params_from_circuit(&c)
        })
        .collect();
    let trotter_steps = cfg.baseline_trotter_steps.unwrap_or((blocks / 4).max(1));
    let baseline = baseline_reference(source, target, total_time, trotter_steps)?;
    let mut baseline_seeded = false;
    if let (true, Some((circuit, _))) = (cfg.seed_baseline, &baseline) {
        let mut c = circuit.clone();
        c.time_mode = cfg.time_mode;
        if let Some(p) = problem.params_from_circuit(&c) {
            seed_params.push(p);
            baseline_seeded = true;
        }
    }

    let outcomes: Vec<(RunRecord, Vec<f64>)> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_once(&problem, cfg, r, &seed_params))
        .collect();
    let best_run = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.cost.total_cmp(&b.1 .0.cost))
        .map(|(i, _)| i)
        .expect("runs >= 1");
    let (best_record, best_x) = &outcomes[best_run];
    let runs: Vec<RunRecord> = outcomes.iter().map(|(r, _)| r.clone()).collect();
    let costs: Vec<f64> = runs.iter().map(|r| r.cost).collect();
    let costs_exact: Vec<f64> = runs.iter().map(|r| r.cost_exact).collect();
    let best_cost_exact = best_record.cost_exact;
    Ok(OptimizationResult {
        config: cfg.clone(),
        n: source.n(),
        blocks,
        total_time,
        t_max: problem.t_max(),
        source_hash: source.content_hash(),
        target_hash: target.content_hash(),
        best_run,
        best_cost: best_record.cost,
        best_cost_exact,
        summary: CostSummary::of(&costs).expect("runs >= 1"),
        summary_exact: CostSummary::of(&costs_exact).expect("runs >= 1"),
        baseline: baseline.map(|(_, cost)| BaselineComparison {
            trotter_steps,
            blocks: 4 * trotter_steps,
            cost,
            improvement: (cost - best_cost_exact) / cost,
            seeded: baseline_seeded,
        }),
        best_circuit: problem.circuit_from_params(best_x),
        runs,
    })
}
