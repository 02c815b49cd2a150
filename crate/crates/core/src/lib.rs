pub mod error;
pub mod hamiltonian;
mod linalg;
pub mod optimizer;
pub mod scheduler;
pub mod signmatrix;
pub mod simulator;

pub use error::{DaqcError, Result};
