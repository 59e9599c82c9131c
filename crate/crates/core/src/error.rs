use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate support [{a}, {b}]: need a < b")]
    DegenerateSupport { a: f64, b: f64 },

    #[error("centered support [{lo}, {hi}] does not straddle 0")]
    SupportNotCentered { lo: f64, hi: f64 },

    #[error("invalid moments: {0}")]
    InvalidMoments(String),

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {allowed:e}")]
    NotSymmetric { asymmetry: f64, allowed: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("rank deficient: numerical rank {rank} < {expected} ({detail})")]
    RankDeficient {
        rank: usize,
        expected: usize,
        detail: String,
    },

    #[error("effective rank {rank} exceeds the EDM bound d + 2 = {bound}")]
    RankExceeded { rank: usize, bound: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("cubic has a complex root pair: discriminant {discriminant:e}")]
    ComplexRoots { discriminant: f64 },

    #[error("R_d numerically singular: eigenvalue candidate {value:e} <= 1e-14")]
    SingularMoments { value: f64 },

    #[error("unbounded: {0}")]
    Unbounded(&'static str),

    #[error("completion diverged after {iterations} iterations")]
    Divergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
