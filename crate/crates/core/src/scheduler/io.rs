//! Textual schedule files.
//!
//! ```toml
//! n = 3
//! trotter_steps = 1
//! total_time = 1.0000000000000000e0
//! source_hash = "3f1c0a9e5b7d2e41"
//!
//! [[block]]
//! duration = 2.5000000000000000e-1
//! gates = "XIZ"
//! ```
//!
//! Floats are written with 17 significant digits so that a write/parse
//! cycle reproduces every duration bit for bit.

use std::fmt::Write as _;

use serde::Deserialize;

use super::{AnalogBlock, Schedule};
use crate::error::{DaqcError, Result};
use crate::hamiltonian::TwoBodyHamiltonian;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    n: usize,
    trotter_steps: usize,
    total_time: f64,
    source_hash: String,
    #[serde(default)]
    block: Vec<BlockRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockRecord {
    duration: f64,
    gates: String,
}

pub fn write_schedule(s: &Schedule) -> String {
    let mut out = String::new();
    writeln!(out, "n = {}", s.n).unwrap();
    writeln!(out, "trotter_steps = {}", s.trotter_steps).unwrap();
    writeln!(out, "total_time = {:.16e}", s.total_time).unwrap();
    writeln!(out, "source_hash = \"{}\"", s.source.content_hash()).unwrap();
    for b in &s.blocks {
        writeln!(out).unwrap();
        writeln!(out, "[[block]]").unwrap();
        writeln!(out, "duration = {:.16e}", b.duration).unwrap();
        writeln!(out, "gates = \"{}\"", b.sandwich).unwrap();
    }
    out
}

/// Parses a schedule file and binds it to `source`, whose content hash must
/// match the one recorded in the file.
pub fn parse_schedule(text: &str, source: &TwoBodyHamiltonian) -> Result<Schedule> {
    let file: ScheduleFile = toml::from_str(text).map_err(|e| DaqcError::Parse(e.to_string()))?;
    if file.n != source.n() {
        return Err(DaqcError::QubitCountMismatch {
            left: file.n,
            right: source.n(),
        });
    }
    let expected = source.content_hash();
    if file.source_hash != expected {
        return Err(DaqcError::SourceHashMismatch {
            expected,
            found: file.source_hash,
        });
    }
    if file.trotter_steps == 0 {
        return Err(DaqcError::InvalidConfig(
            "trotter_steps must be at least 1".into(),
        ));
    }
    if !(file.total_time.is_finite() && file.total_time >= 0.0) {
        return Err(DaqcError::InvalidConfig(format!(
            "invalid total_time {}",
            file.total_time
        )));
    }
    let mut blocks = Vec::with_capacity(file.block.len());
    for (index, rec) in file.block.into_iter().enumerate() {
        if !rec.duration.is_finite() || rec.duration < 0.0 {
            return Err(DaqcError::NegativeDuration {
                index,
                duration: rec.duration,
            });
        }
        let sandwich = rec.gates.parse()?;
        if rec.gates.len() != file.n {
            return Err(DaqcError::DimensionMismatch {
                expected: file.n,
                actual: rec.gates.len(),
            });
        }
        blocks.push(AnalogBlock {
            duration: rec.duration,
            sandwich,
        });
    }
    Ok(Schedule {
        n: file.n,
        source: source.clone(),
        blocks,
        trotter_steps: file.trotter_steps,
        total_time: file.total_time,
    })
}
