use anyhow::{Context, Result};
use daqc_core::hamiltonian::{homogeneous_cross_resonance, xy_chain, TwoBodyHamiltonian};
use daqc_core::optimizer::{
    self, baseline_reference, sample_inhomogeneous_source, OptimizationConfig, OptimizationResult,
    TimeMode,
};

use super::positive_time;
use crate::output::{config_echo, float, read_hamiltonian, read_text, write_text, CsvSink, Report};
use crate::{BaselineArgs, Failure, OptimizeArgs, EXIT_TOLERANCE};

fn config_for(a: &OptimizeArgs) -> Result<OptimizationConfig> {
    let mut cfg = match &a.config {
        Some(path) => OptimizationConfig::from_toml_str(&read_text(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => OptimizationConfig::default(),
    };
    if a.free_time {
        cfg.time_mode = TimeMode::Free;
    }
    if a.fixed_time {
        cfg.time_mode = TimeMode::Fixed;
    }
    if let Some(m) = a.mode {
        cfg.cost_mode = m.into();
    }
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.runs = a.runs.unwrap_or(cfg.runs);
    cfg.bayes_steps = a.bayes_steps.unwrap_or(cfg.bayes_steps);
    cfg.gd_max_iters = a.gd_max_iters.unwrap_or(cfg.gd_max_iters);
    if a.baseline_trotter_steps.is_some() {
        cfg.baseline_trotter_steps = a.baseline_trotter_steps;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn print_summary(out: &Report, r: &OptimizationResult) {
    out.field("qubits", r.n);
    out.field("blocks", r.blocks);
    out.field("total time", r.total_time);
    out.field("time mode", r.config.time_mode.name());
    out.field("cost mode", r.config.cost_mode.name());
    out.field("runs", r.runs.len());
    out.field("seed", r.config.seed);
    out.field(
        &format!("best cost (run {})", r.best_run),
        format!("{:.6}", r.best_cost),
    );
    out.field("best cost, exact", format!("{:.6}", r.best_cost_exact));
    match &r.baseline {
        Some(b) => {
            out.field(
                &format!("baseline ({} blocks)", b.blocks),
                format!("{:.6}", b.cost),
            );
            out.field("improvement", format!("{:.1}%", 100.0 * b.improvement));
            out.field("baseline seeded", b.seeded);
        }
        None => out.field("baseline", "not applicable"),
    }
    let s = &r.summary_exact;
    out.field("median cost, exact", format!("{:.6}", s.median));
    out.field("interquartile range", format!("[{:.6}, {:.6}]", s.q1, s.q3));
    out.field("range", format!("[{:.6}, {:.6}]", s.min, s.max));
}

pub fn optimize(a: &OptimizeArgs) -> Result<()> {
    positive_time(a.time)?;
    let source = read_hamiltonian(&a.source)?;
    let target = read_hamiltonian(&a.target)?;
    let cfg = config_for(a)?;
    let result = optimizer::optimize(&source, &target, a.time, a.blocks, &cfg)?;
    write_text(&a.out, &result.to_toml_string()?)?;
    let out = Report::new(false);
    print_summary(&out, &result);
    out.field("result", a.out.display());
    if let Some(limit) = a.max_cost {
        if result.best_cost_exact > limit {
            return Err(Failure {
                code: EXIT_TOLERANCE,
                message: format!(
                    "best cost {:.6} exceeds --max-cost {limit}",
                    result.best_cost_exact
                ),
            }
            .into());
        }
    }
    Ok(())
}

/// Exact costs of the Trotter baseline for `1..=max_steps` steps.
pub(crate) fn baseline_costs(
    source: &TwoBodyHamiltonian,
    target: &TwoBodyHamiltonian,
    total_time: f64,
    max_steps: usize,
) -> Result<Vec<f64>> {
    (1..=max_steps)
        .map(|n_t| {
            let (_, cost) = baseline_reference(source, target, total_time, n_t)?
                .context("the baseline needs a cross-resonance source and an XY-chain target")?;
            Ok(cost)
        })
        .collect()
}

pub fn baseline(a: &BaselineArgs) -> Result<()> {
    positive_time(a.time)?;
    let source = match a.sigma {
        Some(sigma) => sample_inhomogeneous_source(a.coupling, sigma, a.qubits, a.seed)?,
        None => homogeneous_cross_resonance(a.qubits, a.coupling)?,
    };
    let target = xy_chain(a.qubits, a.coupling)?;
    let costs = baseline_costs(&source, &target, a.time, a.max_trotter_steps)?;
    let echo = config_echo(
        "baseline",
        &[
            ("qubits", a.qubits.to_string()),
            ("coupling", float(a.coupling)),
            ("time", float(a.time)),
            ("sigma", a.sigma.map_or("none".into(), float)),
            ("seed", a.seed.to_string()),
        ],
    );
    let mut csv = CsvSink::open(a.csv.as_ref(), &echo, &["trotter_steps", "blocks", "cost"])?;
    for (i, c) in costs.iter().enumerate() {
        csv.row([(i + 1).to_string(), (4 * (i + 1)).to_string(), float(*c)])?;
    }
    csv.finish()
}
