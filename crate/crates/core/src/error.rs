use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate subspace: rank {rank} in ambient dimension {ambient}")]
    DegenerateSubspace { rank: usize, ambient: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no solver path for norm {0}")]
    UnsupportedNorm(String),

    #[error("induced norm requires a cone")]
    MissingCone,

    #[error("norm {0} is not polyhedral")]
    NonPolyhedralNorm(String),

    #[error("dimension {dim} exceeds the enumeration limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("direction v is not a nonzero element of the cone")]
    VNotInCone,

    #[error("point is not in the interior of the cone (lambda_e = {0:e})")]
    NotInterior(f64),

    #[error("cone {0} has no Euclidean Jordan algebra structure")]
    NotSymmetric(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("polytope is unbounded")]
    UnboundedPolytope,

    #[error("certificate is missing witness {0}")]
    MissingWitnesses(&'static str),

    #[error("v_bar vanishes; nu_bar equals min |||x||| over the unit sphere of L = {fallback}")]
    DegenerateVbar { fallback: f64 },

    #[error("linear map is not injective (smallest singular value {0:e})")]
    NotInjective(f64),

    #[error("instance is ill-posed: neither side is strictly feasible")]
    IllPosedInstance,

    #[error("instance is on the infeasible side")]
    InfeasibleSide,

    #[error("block {0} is rank deficient")]
    RankDeficientBlock(&'static str),

    #[error("sampling exhausted after {0} rejections")]
    SamplingExhausted(usize),

    #[error("only an approximate path exists for {0}")]
    ApproximateOnly(String),

    #[error("no computation path for {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
