use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants mirror the failure modes of the
/// individual pipeline stages so callers can map them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("integration diverged at step {step} (|u| exceeded {threshold:e})")]
    IntegrationDiverged { step: usize, threshold: f64 },

    #[error("state length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("requested rank {requested} exceeds available rank {available}")]
    RankDeficient { requested: usize, available: usize },

    #[error("box depth {depth} overflows the index representation")]
    DepthOverflow { depth: u32 },

    #[error("seed point lies outside the covering domain")]
    SeedOutsideDomain,

    #[error("requested {requested} boxes but the collection holds {available}")]
    CountExceedsBoxes { requested: usize, available: usize },

    #[error("need at least {needed} anchor points, got {got}")]
    TooFewAnchors { needed: usize, got: usize },

    #[error("anchor set is degenerate (all points coincide)")]
    DegenerateAnchors,

    #[error("Nystrom extension failed: no reachable anchors after {growth_steps} radius growths")]
    ExtensionFailed { growth_steps: usize },

    #[error("eigensolver did not converge: {0}")]
    EigensolverFailed(String),

    #[error("unknown analytic map `{0}`")]
    UnknownMap(String),

    #[error("malformed artifact file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
