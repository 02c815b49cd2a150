mod compile;
mod matrix;
mod optimize;
mod repro;

pub use compile::{compile, verify};
pub use matrix::matrix;
pub use optimize::{baseline, optimize};
pub use repro::repro;

use crate::{Failure, EXIT_USAGE};

pub(crate) fn positive_time(t: f64) -> anyhow::Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_USAGE,
            message: format!("--time must be positive and finite, got {t}"),
        }
        .into())
    }
}
