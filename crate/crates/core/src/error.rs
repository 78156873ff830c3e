use std::path::PathBuf;

use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("eigensolver did not converge for a {dim}x{dim} matrix after {iterations} sweeps (residual {residual:.3e})")]
    NoConvergence { dim: usize, iterations: usize, residual: f64 },
    #[error("eigenpair residual {residual:.3e} exceeds the {bound:.3e} contract for a {dim}x{dim} matrix")]
    Residual { dim: usize, residual: f64, bound: f64 },
    #[error("degenerate polynomial: {0}")]
    DegeneratePolynomial(String),
    #[error("degenerate parameter line: {0}")]
    Degenerate(String),
    #[error("branch point at E = {0}: {1}")]
    BranchPoint(Complex64, String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("localization fit: {0}")]
    Fit(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, Error>;
