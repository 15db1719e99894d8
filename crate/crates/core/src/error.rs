use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FkError {
    #[error("domain {width}x{height} too small, both sides must be >= 2")]
    DomainTooSmall { width: usize, height: usize },
    #[error("vertex ({x},{y}) is outside the domain")]
    VertexOutOfRange { x: i64, y: i64 },
    #[error("invalid corner id {0}")]
    InvalidCorner(usize),
    #[error("invalid edge id {0}")]
    InvalidEdge(usize),
    #[error("malformed corner spec {0:?}, expected \"x,y,Q\" with Q in NE|NW|SW|SE")]
    BadCornerSpec(String),
    #[error("config mask {bits:#x} has bits beyond the {edges} domain edges")]
    ConfigOutOfRange { bits: u64, edges: usize },
    #[error("corners must be distinct")]
    IdenticalCorners,
    #[error("corners {0} and {1} do not lie on the same loop")]
    NotCoLooped(usize, usize),
    #[error("p must lie in [0,1), got {0}")]
    InvalidP(f64),
    #[error("beta must be non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("t must be positive, got {0}")]
    InvalidT(f64),
    #[error("insertion points must be pairwise distinct")]
    DuplicateInsertions,
    #[error("insertion points must not share primal or dual vertices")]
    InsertionsTooClose,
    #[error("{edges} edges exceed the enumeration cap of {cap} bits")]
    EnumerationCap { edges: usize, cap: usize },
    #[error("{vertices} vertices exceed the spin enumeration cap of {cap} bits")]
    SpinCap { vertices: usize, cap: usize },
    #[error("could not route pairwise disjoint defect lines")]
    RoutingFailed,
    #[error("defect lines must be pairwise disjoint")]
    OverlappingLines,
    #[error("expected one defect line per insertion pair, got {lines} lines for {pairs} pairs")]
    LineCountMismatch { lines: usize, pairs: usize },
    #[error("operation requires critical parameters (t = 1), got t = {0}")]
    NotCritical(f64),
    #[error("corner {0} is an insertion point or adjacent to one")]
    AdjacentToInsertion(usize),
    #[error("corner {0} lies on the boundary, its mid-edge field is undefined")]
    BoundaryCorner(usize),
    #[error("root corner {0} must lie on the boundary")]
    RootNotBoundary(usize),
    #[error("skew matrix must have even order, got {0}")]
    OddOrder(usize),
    #[error("matrix is not antisymmetric, max |A + A^T| entry = {0:e}")]
    NotAntisymmetric(f64),
    #[error("need n_sweeps > burn_in, got n_sweeps = {n_sweeps}, burn_in = {burn_in}")]
    BadSweepCount { n_sweeps: u64, burn_in: u64 },
    #[error("monte carlo run needs at least {min} sweeps after burn-in, got {got}")]
    TooFewSweeps { min: u64, got: u64 },
}

pub type Result<T> = std::result::Result<T, FkError>;
