use anyhow::{Context, Result};
use daqc_core::scheduler::{
    analog_time_diagnostics, build_exact_schedule, error_bound, parse_schedule,
    solve_positive_times, write_schedule, SolveReport,
};
use daqc_core::signmatrix::Protocol;
use daqc_core::simulator::{
    self, frobenius_distance, run_schedule_with_steps, unitarity_error, SimulationMode,
};
use daqc_core::DaqcError;

use super::positive_time;
use crate::output::{config_echo, float, read_hamiltonian, read_text, write_text, CsvSink, Report};
use crate::{CompileArgs, Failure, VerifyArgs, EXIT_TOLERANCE};

fn print_report(out: &Report, r: &SolveReport) {
    out.field("blocks", r.block_count);
    out.field("total analog time", format!("{:.6e}", r.total_analog_time));
    out.field(
        "analog time lower bound",
        format!("{:.6e}", r.analog_time_lower_bound),
    );
    out.field("residual", format!("{:.3e}", r.residual));
    out.field("error bound", format!("{:.3e}", r.error_bound));
    out.field("coupling ratio", format!("{:.4}", r.coupling_ratio));
    if let Some(m) = r.min_duration {
        out.field("shortest block", format!("{m:.3e}"));
    }
    if let Some(b) = r.bang_metric {
        out.field("shortest block / gate time", format!("{b:.3}"));
    }
}

pub fn compile(a: &CompileArgs) -> Result<()> {
    positive_time(a.time)?;
    let source = read_hamiltonian(&a.source)?;
    let target = read_hamiltonian(&a.target)?;
    let (schedule, method) = if a.positive {
        (
            solve_positive_times(&source, &target, a.time)?.0,
            "non-negative least squares",
        )
    } else {
        let protocol: Protocol = a.protocol.into();
        (
            build_exact_schedule(&source, &target, a.time, protocol)?,
            protocol.name(),
        )
    };
    let schedule = schedule.with_trotter_steps(a.trotter_steps)?;
    let report = analog_time_diagnostics(&schedule, &target, a.gate_time)?;
    write_text(&a.out, &write_schedule(&schedule))?;
    let out = Report::new(false);
    out.field("method", method);
    out.field("qubits", schedule.n);
    out.field("total time", schedule.total_time);
    out.field("trotter steps", schedule.trotter_steps);
    print_report(&out, &report);
    out.field("schedule", a.out.display());
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<()> {
    let source = read_hamiltonian(&a.source)?;
    let target = read_hamiltonian(&a.target)?;
    let schedule = parse_schedule(&read_text(&a.schedule)?, &source)
        .with_context(|| format!("parsing {}", a.schedule.display()))?;
    if target.n() != schedule.n {
        return Err(DaqcError::QubitCountMismatch {
            left: schedule.n,
            right: target.n(),
        }
        .into());
    }
    let mode: SimulationMode = a.mode.into();
    let v = simulator::evolve(&target, schedule.total_time)?;
    let distance_at = |steps: usize| -> Result<(f64, f64)> {
        let u = run_schedule_with_steps(&schedule, steps, mode)?;
        Ok((frobenius_distance(&u, &v)?, unitarity_error(&u)))
    };
    let (distance, unitarity) = distance_at(schedule.trotter_steps)?;
    let diagnostics = analog_time_diagnostics(&schedule, &target, None)?;

    let sweeping = !a.sweep.is_empty();
    let out = Report::new(sweeping && a.csv.is_none());
    out.field("mode", mode.name());
    out.field("qubits", schedule.n);
    out.field("total time", schedule.total_time);
    out.field("trotter steps", schedule.trotter_steps);
    out.field("distance", format!("{distance:.6e}"));
    out.field("unitarity error", format!("{unitarity:.3e}"));
    print_report(&out, &diagnostics);

    if sweeping {
        let echo = config_echo(
            "verify",
            &[
                ("mode", mode.name().to_string()),
                ("total_time", float(schedule.total_time)),
                ("blocks", schedule.blocks.len().to_string()),
                ("source_hash", source.content_hash()),
                ("target_hash", target.content_hash()),
            ],
        );
        let mut csv = CsvSink::open(
            a.csv.as_ref(),
            &echo,
            &["trotter_steps", "distance", "bound"],
        )?;
        for &steps in &a.sweep {
            let (d, _) = distance_at(steps)?;
            let bound = error_bound(&schedule.clone().with_trotter_steps(steps)?)?;
            csv.row([steps.to_string(), float(d), float(bound)])?;
        }
        csv.finish()?;
    }
    if let Some(tol) = a.tolerance {
        if distance > tol {
            return Err(Failure {
                code: EXIT_TOLERANCE,
                message: format!("distance {distance:.6e} exceeds tolerance {tol:.3e}"),
            }
            .into());
        }
    }
    Ok(())
}
