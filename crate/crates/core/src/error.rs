use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbfError {
    #[error("unknown hypersurface `{0}`")]
    UnknownHypersurface(String),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("unknown gluing `{0}`")]
    UnknownGluing(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("no space attached to component `{0}`")]
    MissingSpace(String),
    #[error("no amplitude declared for region `{0}`")]
    MissingAmplitude(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("decomposition of `{whole}` into {parts:?} is not registered")]
    UnregisteredDecomposition { whole: String, parts: Vec<String> },
    #[error("component mismatch: {0}")]
    ComponentMismatch(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("subspace containment violated (deviation {0:.3e})")]
    Containment(f64),
    #[error("superselection violated: {0}")]
    Superselection(String),
    #[error("weights invalid: {0}")]
    Weights(String),
    #[error("gluing anomaly must be nonzero")]
    ZeroAnomaly,
    #[error("observable `{0}` has mixed f-degree")]
    MixedDegree(String),
    #[error("spec error: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, GbfError>;
