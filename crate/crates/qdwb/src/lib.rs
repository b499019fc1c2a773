//! Directional wavelet filter banks on the dyadic quincunx lattice.
//!
//! Symbols are sampled on a `2N x 2N` grid over `[-π, π)²`. The crate builds
//! Shannon-type bases, smoothed tight frames and biorthogonal pairs, checks
//! their reconstruction conditions pointwise, and runs multi-level image
//! transforms through frequency-domain aliasing sums.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod design;
pub mod fft;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod prcheck;
pub mod qp;
pub mod solver;
pub mod transform;

pub use num_complex::Complex64 as C64;

pub use lattice::{FreqGrid, Level, PartitionMask, ShiftVec};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid size N={0}: must be even and at least 2")]
    BadGrid(usize),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("no left null vector: rank {rank} for {rows} rows")]
    NullSpace { rank: usize, rows: usize },
    #[error("singular KKT system (condition estimate {0:.3e})")]
    SingularKkt(f64),
    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("algorithm step {step} failed: {msg}")]
    Step { step: u8, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
