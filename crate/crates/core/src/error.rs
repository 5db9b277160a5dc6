use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary (‖UU† − I‖ = {deviation:.3e})")]
    NonUnitaryInput { deviation: f64 },

    #[error("Hamiltonian is not Hermitian (‖H − H†‖ = {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },

    #[error("conversion and gain strengths are both zero")]
    BothZero,

    #[error("speed limit has no interior: {0}")]
    DegenerateBoundary(String),

    #[error("ray with drive ratio {ratio} never meets the speed-limit boundary")]
    NoIntersection { ratio: f64 },

    #[error("invalid speed limit: {0}")]
    InvalidSpeedLimit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("parameter vector has length {got}, template expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coverage for {basis} is incomplete after {k_max} applications ({detail})")]
    IncompleteCoverage {
        basis: String,
        k_max: usize,
        detail: String,
    },

    #[error("unknown basis `{0}`")]
    UnknownBasis(String),

    #[error("incompatible bases: {0}")]
    IncompatibleBases(String),

    #[error("circuit schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("could not synthesize block on qubits {qubits:?}: {reason}")]
    SynthesisFailure { qubits: [usize; 2], reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
