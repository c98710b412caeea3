use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
///
/// Each variant maps to a stable machine-readable code (see [`Error::code`])
/// that the command-line driver prints as `ERROR <CODE>: <detail>`.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("grid resolution {resolution} below floor {floor}")]
    GridTooCoarse { resolution: usize, floor: usize },
    #[error("no sign change of p - {lambda} along any seed ray")]
    NoSeed { lambda: f64 },
    #[error("gradient vanishes (|grad p| = {norm:e}) near ({x}, {xi})")]
    GradientVanishes { x: f64, xi: f64, norm: f64 },
    #[error("trajectory at energy {lambda} did not close within time {max_time}")]
    NoClosure { lambda: f64, max_time: f64 },
    #[error("tabulated action not strictly increasing at lambda = {lambda}")]
    NonMonotone { lambda: f64 },
    #[error("trace failed at lambda = {lambda}: {source}")]
    TraceAt { lambda: f64, source: Box<Error> },
    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("loop increment of {increment} rad at sample {index} is not below pi/2")]
    SamplingTooCoarse { index: usize, increment: f64 },
    #[error("loop modulus {modulus:e} at sample {index} below tolerance")]
    ZeroCrossing { index: usize, modulus: f64 },
    #[error("square-root continuation ambiguous at sample {index}")]
    AmbiguousContinuation { index: usize },
    #[error("arc {arc} turns by {variation} rad, not below pi/2")]
    CoverTooCoarse { arc: usize, variation: f64 },
    #[error("window ({e1}, {e2}) leaves the action profile")]
    ProfileRange { e1: f64, e2: f64 },
    #[error("reference value {reference} claimed by two predictions")]
    AmbiguousMatch { reference: f64 },
    #[error("degenerate convergence data: {0}")]
    Degenerate(String),
    #[error("symbol centers differ: {0} vs {1}")]
    CenterMismatch(String, String),
    #[error("series not invertible: zero linear coefficient")]
    NotInvertible,
    #[error("resummation needs {needed} orders but only {available} are stored")]
    TruncationExceeded { needed: usize, available: usize },
    #[error("function not decayed at the domain boundary (relative size {ratio:e})")]
    DomainTooSmall { ratio: f64 },
    #[error("lattice boundary carries relative mass {ratio:e}")]
    Truncation { ratio: f64 },
    #[error("Newton iteration diverged at z = {z}")]
    NewtonDiverged { z: String },
    #[error("Jacobian d_zeta p vanishes ({modulus:e}) at z = {z}")]
    JacobianSingular { z: String, modulus: f64 },
    #[error("branch left its validity tube at z = {z}")]
    BranchLeftTube { z: String },
    #[error("d_zeta p vanishes at z = {z}")]
    ZeroDerivative { z: String },
    #[error("contour quadrature unresolved: refinement changed result by {change:e}")]
    QuadratureUnresolved { change: f64 },
    #[error("symbol is not of split form g(xi) + V(x)")]
    NotSplit,
    #[error("kinetic part g(xi) must be even for a real symmetric discretization")]
    KineticNotEven,
    #[error("matrix symmetry defect {defect:e} exceeds tolerance")]
    QuadratureOrderTooLow { defect: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("eigenvalue {index} moved by {shift:e} under refinement")]
    WindowNotCertified { index: usize, shift: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSymbol(_) => "INVALID_SYMBOL",
            Error::GridTooCoarse { .. } => "GRID_TOO_COARSE",
            Error::NoSeed { .. } => "NO_SEED",
            Error::GradientVanishes { .. } => "GRADIENT_VANISHES",
            Error::NoClosure { .. } => "NO_CLOSURE",
            Error::NonMonotone { .. } => "NON_MONOTONE",
            Error::TraceAt { source, .. } => source.code(),
            Error::OutOfRange { .. } => "OUT_OF_RANGE",
            Error::SamplingTooCoarse { .. } => "SAMPLING_TOO_COARSE",
            Error::ZeroCrossing { .. } => "ZERO_CROSSING",
            Error::AmbiguousContinuation { .. } => "AMBIGUOUS_CONTINUATION",
            Error::CoverTooCoarse { .. } => "COVER_TOO_COARSE",
            Error::ProfileRange { .. } => "PROFILE_RANGE",
            Error::AmbiguousMatch { .. } => "AMBIGUOUS_MATCH",
            Error::Degenerate(_) => "DEGENERATE",
            Error::CenterMismatch(..) => "CENTER_MISMATCH",
            Error::NotInvertible => "NOT_INVERTIBLE",
            Error::TruncationExceeded { .. } => "TRUNCATION_EXCEEDED",
            Error::DomainTooSmall { .. } => "DOMAIN_TOO_SMALL",
            Error::Truncation { .. } => "TRUNCATION",
            Error::NewtonDiverged { .. } => "NEWTON_DIVERGED",
            Error::JacobianSingular { .. } => "JACOBIAN_SINGULAR",
            Error::BranchLeftTube { .. } => "BRANCH_LEFT_TUBE",
            Error::ZeroDerivative { .. } => "ZERO_DERIVATIVE",
            Error::QuadratureUnresolved { .. } => "QUADRATURE_UNRESOLVED",
            Error::NotSplit => "NOT_SPLIT",
            Error::KineticNotEven => "KINETIC_NOT_EVEN",
            Error::QuadratureOrderTooLow { .. } => "QUADRATURE_ORDER_TOO_LOW",
            Error::NoConvergence { .. } => "NO_CONVERGENCE",
            Error::NotSymmetric { .. } => "NOT_SYMMETRIC",
            Error::WindowNotCertified { .. } => "WINDOW_NOT_CERTIFIED",
            Error::InvalidInput(_) => "INVALID_INPUT",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
