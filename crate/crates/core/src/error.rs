use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gcd(0, 0) is undefined")]
    GcdOfZeros,
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),
    #[error("{0} is prime; nothing to factor")]
    NothingToFactor(u64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("register size {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("register needs {required} qubits but the configured maximum is {max}")]
    WidthExceeded { required: u32, max: u32 },
    #[error("base {x} shares a factor with modulus {n}")]
    NotCoprime { x: u64, n: u64 },
    #[error("measurement {m} is outside the register range [0, {q})")]
    MeasurementOutOfRange { m: u64, q: u64 },
    #[error("expected a state of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid kernel plan: {0}")]
    InvalidPlan(String),
    #[error("qubit index {index} out of range for a {width}-qubit register")]
    QubitOutOfRange { index: u32, width: u32 },
    #[error("control and target qubit are both {0}")]
    SameQubit(u32),
    #[error("register is not normalized (norm^2 = {0})")]
    Unnormalized(f64),
    #[error("register has already been collapsed")]
    AlreadyCollapsed,
    #[error("{x}^{p} mod {n} != 1")]
    NotAPeriod { x: u64, p: u64, n: u64 },
    #[error("trace contains no timed phases")]
    EmptyTrace,
    #[error("no target integer is available in every compared row")]
    EmptyCommonSet,
    #[error("reference row `{0}` not present")]
    MissingReference(String),
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
