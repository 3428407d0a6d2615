use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid penalty weight: {0}")]
    InvalidWeight(String),

    #[error("weight parse error: {0}")]
    WeightParse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("horizon {horizon} exceeds the cap of {cap}")]
    HorizonTooLarge { horizon: u32, cap: u32 },

    #[error("E[G_p] = 0: the penalised ratio is undefined")]
    DegenerateDenominator,

    #[error("last-zero statistic undefined: the path has not visited 0")]
    UndefinedLastZero,

    #[error("martingale value is {0}; the h-transform kernel is undefined here")]
    AbsorbedKernel(String),

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("unsupported stopping rule for this family: {0}")]
    UnsupportedStoppingRule(String),

    #[error("series has no finite closed form for this weight: {0}")]
    InfiniteSeries(String),

    #[error("singular linear system")]
    SingularSystem,

    #[error("event parse error: {0}")]
    EventParse(String),

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;
