use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: left end must be below right end")]
    InvalidInterval { a: f64, b: f64 },
    #[error("a grid needs at least one panel")]
    NoPanels,
    #[error("unknown quadrature rule `{0}`")]
    UnknownRule(String),
    #[error("operands live on different quadrature grids")]
    GridMismatch,
    #[error("basis has {available} members, {needed} required")]
    InsufficientBasis { needed: usize, available: usize },
    #[error("basis is not orthonormal on this grid (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exponent p = {0} is outside (1, inf)")]
    InvalidExponent(f64),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("component {index} has a_ii = b_ii but nonzero forcing; no solution exists")]
    NoSolution { index: usize },
    #[error("hypotheses violated: {0}")]
    ConditionViolated(String),
    #[error("denominator {value:e} is numerically zero")]
    DenominatorSingular { value: f64 },
    #[error("operand representation does not match the kernel representation")]
    RepresentationMismatch,
    #[error("parameter {s} outside [{lo}, {hi}]")]
    ParameterOutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("alpha = {alpha} outside the admissible interval ({lo}, {hi})")]
    AlphaOutOfRange { alpha: f64, lo: f64, hi: f64 },
    #[error("resolution {0} below the minimum of 64 per axis")]
    InvalidResolution(usize),
    #[error("sampled image is degenerate: {0}")]
    DegenerateMap(&'static str),
}
