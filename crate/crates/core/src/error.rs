use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cyclic factor order {0} is below 2")]
    OrderTooSmall(usize),

    #[error("group size {size} exceeds the configured limit {limit}")]
    SizeLimitExceeded { size: u128, limit: usize },

    #[error("operands live on different groups")]
    GroupMismatch,

    #[error("digit or exponent vector has length {got}, expected {expected}")]
    RankMismatch { expected: usize, got: usize },

    #[error("value {value} at coordinate {coordinate} is not below the order {order}")]
    DigitOutOfRange { coordinate: usize, value: usize, order: usize },

    #[error("density has {got} values, group has {expected} elements")]
    LengthMismatch { expected: usize, got: usize },

    #[error("enumeration needs {needed} tuples, budget is {budget}; try the meet-in-the-middle variant")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("character system contains the trivial character at position {0}")]
    TrivialCharacterPresent(usize),

    #[error("character system repeats a character at positions {0} and {1}")]
    DuplicateCharacter(usize, usize),

    #[error("degree d must be at least 1")]
    ZeroDegree,

    #[error("modulus {modulus} must exceed {required}")]
    ModulusTooSmall { modulus: usize, required: u128 },

    #[error("ratio must be at least 2, got {0}")]
    RatioTooSmall(usize),

    #[error("digit set {0} adds no position absent from all preceding sets")]
    StaircaseViolated(usize),

    #[error("digit position {position} is outside the rank {rank}")]
    PositionOutOfRange { position: usize, rank: usize },

    #[error("digit value {value} is outside 1..{max}")]
    DigitValueOutOfRange { value: usize, max: usize },

    #[error("degree {d} exceeds the system size {m}")]
    DegreeExceedsSystem { d: usize, m: usize },

    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),

    #[error("system is not {level}-dissociated (witness {witness:?})")]
    NotDissociated { level: usize, witness: Vec<i64> },

    #[error(
        "character {index} has order {order} <= 2d = {bound}; the closed-form coefficient law does not apply \
         (use the expectation mode to inspect the y-averaged identity)"
    )]
    DegenerateOrder { index: usize, order: usize, bound: usize },

    #[error("character {index} has order {order} <= d = {d}: a power up to d is trivial, so no Riesz factor is defined")]
    CollapsingPower { index: usize, order: usize, d: usize },

    #[error("s = {s} must lie in 1..={d}")]
    InvalidHomogeneity { s: usize, d: usize },

    #[error("invalid exponent q = {0}")]
    InvalidQ(f64),

    #[error("invalid exponent p = {0}")]
    InvalidP(f64),

    #[error("gradient is only provided for q in {{4, 6, 8}}, got {0}")]
    UnsupportedQ(f64),

    #[error("polynomial has no nonzero coefficient")]
    ZeroPolynomial,

    #[error("discretization scheme has no points")]
    EmptyScheme,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ConfigInvalid(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
