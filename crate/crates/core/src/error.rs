use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state vector has zero norm")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("state needs at least 2 components, found {0}")]
    DimTooSmall(usize),
    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NonHermitian { deviation: f64 },
    #[error("post-selected state is orthogonal to the pre-selected state (|overlap| = {overlap:e})")]
    OrthogonalPostSelection { overlap: f64 },
    #[error("bad grid: {0}")]
    BadGridSpec(&'static str),
    #[error("pointer probability mass {mass:e} in the outer grid region exceeds the tail guard")]
    TailMass { mass: f64 },
    #[error("time step violates the stability guard (dt * max|V| = {value:e})")]
    StabilityGuard { value: f64 },
    #[error("complex translation amplifies the momentum tail (g |b| k_max = {value:e})")]
    AmplificationGuard { value: f64 },
    #[error("joint space too large for the tensor reference ({size} > 1e6 entries)")]
    SizeGuard { size: usize },
    #[error("post-selection success probability {prob:e} is below the error floor")]
    PostSelectionFailed { prob: f64 },
    #[error("pointer momentum variance {var_p:e} is too small to invert the momentum shift")]
    DegeneratePointer { var_p: f64 },
    #[error("pointer observable is not Hermitian (deviation {deviation:e})")]
    NonHermitianObservable { deviation: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("bad coupling ladder: {0}")]
    BadLadder(&'static str),
}
