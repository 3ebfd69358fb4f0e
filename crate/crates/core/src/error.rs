use thiserror::Error;

/// Everything that can go wrong while building or evaluating the construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sequences: degree and radius lists must be nonempty")]
    EmptySequence,
    #[error("sequences: {degrees} degrees but {radii} radii")]
    LengthMismatch { degrees: usize, radii: usize },
    #[error("sequences: degrees must be positive")]
    ZeroDegree,
    #[error("sequences: degrees not strictly increasing at index {index}")]
    NonIncreasingDegrees { index: usize },
    #[error("sequences: radius {index} is not a positive finite number")]
    NonPositiveRadius { index: usize },
    #[error("sequences: growth condition fails at j={index} (log r_{{j+1}} - log r_j - pi/M_j = {slack:e})")]
    GrowthViolation { index: usize, slack: f64 },
    #[error("sequences: base constant c must be nonzero")]
    ZeroBaseConstant,
    #[error("sequences: radius {index} is not below the accumulation radius")]
    DiskRadiusViolation { index: usize },
    #[error("sequences: magnitudes overflow at depth {depth}")]
    Overflow { depth: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("folding: cell parameter m={m} is degenerate (need m >= 2)")]
    DegenerateCell { m: u64 },
    #[error("folding: point ({re}, {im}) lies outside the strip 0 <= Re <= 1")]
    OutsideStrip { re: f64, im: f64 },
    #[error("folding: point lies on a slit and no side was given")]
    OnSlitWithoutSide,
    #[error("folding: log-modulus {log_mod} outside the annulus [{lo}, {hi}]")]
    OutsideAnnulus { log_mod: f64, lo: f64, hi: f64 },
    #[error("folding: sigma is only defined on |z| >= 1 (got |z| = {modulus})")]
    InsideDisk { modulus: f64 },
    #[error("folding: degrees n={n}, M={big_m} are degenerate (need M > n >= 1)")]
    DegenerateDegrees { n: u64, big_m: u64 },
    #[error("folding: slit sides disagree by {gap:e} at log-modulus {log_mod}, arg {arg}")]
    ContinuityFailure { log_mod: f64, arg: f64, gap: f64 },

    #[error("globalmap: point is outside the materialized domain ({tag})")]
    OutsideDomain { tag: String },
    #[error("globalmap: operation requires disk mode")]
    ModeMismatch,

    #[error("analysis: sample is within the finite-difference stencil of a non-smooth locus")]
    TooCloseToBoundary,
    #[error("analysis: |f_z| vanishes numerically")]
    DegenerateDerivative,
    #[error("analysis: map vanishes on the contour")]
    ZeroOnContour,
    #[error("analysis: winding sum is {turns} turns, not an integer")]
    NonIntegralWinding { turns: f64 },

    #[error("dynamics: A_{j}^{alpha} is empty")]
    EmptyAnnulus { j: usize, alpha: f64 },
    #[error("dynamics: radius rule r_(j+1) = c_j r_j^M_j fails at j={j} (residual {residual:e})")]
    HypothesisViolated { j: usize, residual: f64 },
    #[error("dynamics: image of sample (log-modulus {log_mod}, arg {arg}) of A_{j} is not in A_(j+1)")]
    InclusionFailure { j: usize, log_mod: f64, arg: f64 },
    #[error("dynamics: precondition failed: {0}")]
    Precondition(String),
    #[error("at orbit step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
