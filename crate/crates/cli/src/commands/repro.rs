use std::fs;

use anyhow::{Context, Result};
use daqc_core::hamiltonian::{homogeneous_cross_resonance, xy_chain, TwoBodyHamiltonian};
use daqc_core::optimizer::{
    optimize, optimize_seeded, sample_inhomogeneous_source, OptimizationConfig, OptimizationResult,
    TimeMode,
};
use daqc_core::simulator::SimulationMode;

use super::optimize::baseline_costs;
use super::positive_time;
use crate::output::{config_echo, float, CsvSink, Report};
use crate::{Figure, ReproArgs};

/// Baseline cost at `blocks`, linear in the block count between the
/// computed points `4, 8, ...` and constant outside them.
fn interpolate_baseline(costs: &[f64], blocks: usize) -> f64 {
    let x = blocks as f64 / 4.0;
    if x <= 1.0 {
        return costs[0];
    }
    let last = costs.len() as f64;
    if x >= last {
        return costs[costs.len() - 1];
    }
    let lo = x.floor();
    let w = x - lo;
    let i = lo as usize - 1;
    (1.0 - w) * costs[i] + w * costs[i + 1]
}

struct SeriesRow {
    series: &'static str,
    source: &'static str,
    result: OptimizationResult,
    baseline: f64,
}

pub fn repro(a: &ReproArgs) -> Result<()> {
    let Figure::Fig3 = a.figure;
    positive_time(a.time)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let homogeneous = homogeneous_cross_resonance(a.qubits, 1.0)?;
    let inhomogeneous = sample_inhomogeneous_source(1.0, a.sigma, a.qubits, a.seed)?;
    let target = xy_chain(a.qubits, 1.0)?;
    let echo_fields = [
        ("figure", "fig3".to_string()),
        ("qubits", a.qubits.to_string()),
        ("time", float(a.time)),
        ("runs", a.runs.to_string()),
        ("bayes_steps", a.bayes_steps.to_string()),
        ("gd_max_iters", a.gd_max_iters.to_string()),
        ("seed", a.seed.to_string()),
        ("sigma", float(a.sigma)),
    ];
    let echo = config_echo("repro", &echo_fields);
    let out = Report::new(false);

    let base_h = baseline_costs(&homogeneous, &target, a.time, a.max_trotter_steps)?;
    let base_i = baseline_costs(&inhomogeneous, &target, a.time, a.max_trotter_steps)?;
    let baseline_path = a.out_dir.join("fig3_baseline.csv");
    let mut csv = CsvSink::open(
        Some(&baseline_path),
        &echo,
        &[
            "trotter_steps",
            "blocks",
            "cost_homogeneous",
            "cost_inhomogeneous",
        ],
    )?;
    for (i, (h, inh)) in base_h.iter().zip(&base_i).enumerate() {
        csv.row([
            (i + 1).to_string(),
            (4 * (i + 1)).to_string(),
            float(*h),
            float(*inh),
        ])?;
    }
    csv.finish()?;
    out.field("baseline series", baseline_path.display());

    let cfg = OptimizationConfig {
        runs: a.runs,
        bayes_steps: a.bayes_steps,
        gd_max_iters: a.gd_max_iters,
        seed: a.seed,
        ..Default::default()
    };
    let fixed = OptimizationConfig {
        time_mode: TimeMode::Fixed,
        ..cfg.clone()
    };
    let free = OptimizationConfig {
        time_mode: TimeMode::Free,
        ..cfg.clone()
    };
    let pairwise = OptimizationConfig {
        cost_mode: SimulationMode::PairwiseTrotter,
        ..fixed.clone()
    };

    let mut rows = Vec::new();
    let sources: [(&'static str, &TwoBodyHamiltonian, &[f64]); 2] = [
        ("homogeneous", &homogeneous, &base_h),
        ("inhomogeneous", &inhomogeneous, &base_i),
    ];
    for (label, source, base) in sources {
        for k in 1..=a.max_blocks {
            let fixed_result = optimize(source, &target, a.time, k, &fixed)?;
            // The free-time search starts from the fixed-time optimum.
            let free_result = optimize_seeded(
                source,
                &target,
                a.time,
                k,
                &free,
                std::slice::from_ref(&fixed_result.best_circuit),
            )?;
            for (series, result) in [("fixed", fixed_result), ("free", free_result)] {
                out.line(format!(
                    "{label:<14}{series:<9}K={k:<3}best {:.6}  median {:.6}",
                    result.best_cost_exact, result.summary_exact.median
                ));
                rows.push(SeriesRow {
                    series,
                    source: label,
                    result,
                    baseline: interpolate_baseline(base, k),
                });
            }
        }
    }
    for k in 1..=a.max_blocks {
        let result = optimize(&homogeneous, &target, a.time, k, &pairwise)?;
        out.line(format!(
            "{:<14}{:<9}K={k:<3}best {:.6}  exact {:.6}",
            "homogeneous", "pairwise", result.best_cost, result.best_cost_exact
        ));
        rows.push(SeriesRow {
            series: "fixed-pairwise",
            source: "homogeneous",
            result,
            baseline: interpolate_baseline(&base_h, k),
        });
    }

    let series_path = a.out_dir.join("fig3_series.csv");
    let mut csv = CsvSink::open(
        Some(&series_path),
        &echo,
        &[
            "series",
            "source",
            "time_mode",
            "cost_mode",
            "blocks",
            "best_model_cost",
            "best",
            "min",
            "q1",
            "median",
            "q3",
            "max",
            "baseline_interpolated",
        ],
    )?;
    for row in &rows {
        let r = &row.result;
        let s = &r.summary_exact;
        csv.row([
            row.series.to_string(),
            row.source.to_string(),
            r.config.time_mode.name().to_string(),
            r.config.cost_mode.name().to_string(),
            r.blocks.to_string(),
            float(r.best_cost),
            float(r.best_cost_exact),
            float(s.min),
            float(s.q1),
            float(s.median),
            float(s.q3),
            float(s.max),
            float(row.baseline),
        ])?;
    }
    csv.finish()?;
    out.field("optimized series", series_path.display());
    let dominated = rows
        .iter()
        .filter(|r| r.series == "fixed" && r.source == "homogeneous")
        .all(|r| r.result.best_cost_exact <= r.baseline);
    out.field("fixed homogeneous <= baseline", dominated);
    Ok(())
}
