use anyhow::Result;
use daqc_core::signmatrix::{
    build_protocol_matrix_recursive, coupling_for_global, min_singular_value, pool_column_sum,
    rank_mod_p, subblock_identities, Protocol,
};

use crate::output::{config_echo, CsvSink, Report};
use crate::{Failure, MatrixArgs, EXIT_SINGULAR, EXIT_TOLERANCE};

pub fn matrix(a: &MatrixArgs) -> Result<()> {
    let protocol: Protocol = a.protocol.into();
    let m = protocol.matrix(a.n)?;
    let mut header = vec!["row".to_string(), "coupling".to_string()];
    header.extend(m.column_gates.iter().map(|g| g.to_string()));
    let echo = config_echo(
        "matrix",
        &[
            ("n", a.n.to_string()),
            ("protocol", protocol.name().to_string()),
        ],
    );
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvSink::open(a.csv.as_ref(), &echo, &header_refs)?;
    for (r, &g) in m.row_globals.iter().enumerate() {
        let mut fields = vec![g.to_string(), coupling_for_global(g, a.n)?.to_string()];
        fields.extend((0..m.ncols()).map(|c| m.entries[(r, c)].to_string()));
        csv.row(fields)?;
    }
    csv.finish()?;
    if !a.check {
        return Ok(());
    }

    let out = Report::new(a.csv.is_none());
    let mut failed = Vec::new();
    out.field("dimension", format!("{} x {}", m.nrows(), m.ncols()));
    if protocol == Protocol::General {
        let same = build_protocol_matrix_recursive(a.n)? == m.entries;
        out.field(
            "recursive construction",
            if same { "matches" } else { "DIFFERS" },
        );
        if !same {
            failed.push("recursive construction");
        }
    }
    for (name, ok) in subblock_identities() {
        out.field(name, if ok { "holds" } else { "FAILS" });
        if !ok {
            failed.push(name);
        }
    }
    if a.n <= 3 {
        let zero = pool_column_sum(a.n).iter().all(|v| *v == 0);
        out.field("pool barycenter", if zero { "zero" } else { "NONZERO" });
        if !zero {
            failed.push("pool barycenter");
        }
    }
    let rank = rank_mod_p(&m.entries);
    let sigma = min_singular_value(&m.to_f64());
    let nonsingular = m.nrows() == m.ncols() && rank == m.nrows();
    out.field("rank", format!("{rank} (exact full-rank test mod 2^61-1)"));
    out.field("smallest singular value", format!("{sigma:.3e}"));
    out.field("singular", !nonsingular);
    if !failed.is_empty() {
        return Err(Failure {
            code: EXIT_TOLERANCE,
            message: format!("failed checks: {}", failed.join(", ")),
        }
        .into());
    }
    if !nonsingular {
        return Err(Failure {
            code: EXIT_SINGULAR,
            message: format!("{} matrix for n = {} is singular", protocol.name(), a.n),
        }
        .into());
    }
    Ok(())
}
