use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the simulator can report.
///
/// One flat enum keeps the C ABI mapping in the ffi crate a simple table
/// lookup (see [`Error::code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // configuration
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{what} {value} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    // array
    #[error("charge sharing needs k in 0..=3, got {0}")]
    InvalidK(u32),
    #[error("activation of {0} wordlines is not supported")]
    InvalidWordlineCount(usize),
    #[error("two-wordline activation from the precharged state with disagreeing cells")]
    EvenWordlineMajority,
    #[error("bank {bank} is not activated")]
    NotActivated { bank: u32 },
    #[error("column {column} out of range ({columns} columns per row)")]
    ColumnOutOfRange { column: u32, columns: u32 },
    #[error("subarray {requested} cannot be activated while subarray {open} is open")]
    CrossSubarrayConflict { open: u32, requested: u32 },

    // command engine
    #[error("back-to-back ACTIVATE to subarray {requested} of bank {bank} while subarray {open} is open")]
    IllegalBackToBack { bank: u32, open: u32, requested: u32 },
    #[error("bank {bank} must be precharged")]
    NotPrecharged { bank: u32 },
    #[error("{command} requested at {requested_ps} ps, earliest legal time is {earliest_ps} ps")]
    TimingViolation {
        command: &'static str,
        earliest_ps: u64,
        requested_ps: u64,
    },
    #[error("source and destination are both bank {0}")]
    SameBank(u32),
    #[error("overlapped AAP needs exactly one B-group row")]
    OverlapIneligible,
    #[error("command {index} failed: {source}")]
    AtCommand { index: usize, source: Box<Error> },

    // rowclone
    #[error("fast parallel mode needs source and destination in the same subarray")]
    CrossSubarray,
    #[error("source and destination are the same row")]
    SameRow,
    #[error("source and destination share a subarray; use fast parallel mode")]
    SameSubarray,
    #[error("source and destination ranges overlap")]
    OverlappingRanges,
    #[error("{what} must be aligned to {align} bytes")]
    Misaligned { what: &'static str, align: u64 },
    #[error("row {row} of bank {bank} subarray {subarray} is reserved")]
    ReservedRow { bank: u32, subarray: u32, row: u32 },

    // buddy
    #[error("row address is not in the B-group")]
    NotBGroup,
    #[error("row {0} is not a data row")]
    NotDGroup(u32),
    #[error("bitwise operands must share one bank and subarray")]
    CrossSubarrayOperands,
    #[error("operation needs a second operand")]
    MissingOperand,

    // gsdram
    #[error("expected {expected} words, got {got}")]
    WrongWidth { expected: usize, got: usize },
    #[error("invalid GS-DRAM configuration: {0}")]
    InvalidGsConfig(String),
    #[error("stride {0} is not a supported power of two")]
    UnsupportedStride(u64),

    // cache
    #[error("invalid cache configuration: {0}")]
    InvalidCacheConfig(String),
    #[error("region {region} already uses alternate pattern {existing}, not {requested}")]
    PatternConflict {
        region: u64,
        existing: u32,
        requested: u32,
    },
}

impl Error {
    /// Stable numeric code, used across the C ABI. Zero is reserved for success.
    pub fn code(&self) -> i32 {
        match self {
            Error::UnknownProfile(_) => 1,
            Error::UnknownKey(_) => 2,
            Error::InvalidValue { .. } => 3,
            Error::InvalidGeometry(_) => 4,
            Error::Parse { .. } => 5,
            Error::Io(_) => 6,
            Error::OutOfRange { .. } => 7,
            Error::InvalidK(_) => 10,
            Error::InvalidWordlineCount(_) => 11,
            Error::EvenWordlineMajority => 12,
            Error::NotActivated { .. } => 13,
            Error::ColumnOutOfRange { .. } => 14,
            Error::CrossSubarrayConflict { .. } => 15,
            Error::IllegalBackToBack { .. } => 20,
            Error::NotPrecharged { .. } => 21,
            Error::TimingViolation { .. } => 22,
            Error::SameBank(_) => 23,
            Error::OverlapIneligible => 24,
            Error::AtCommand { source, .. } => source.code(),
            Error::CrossSubarray => 30,
            Error::SameRow => 31,
            Error::SameSubarray => 32,
            Error::OverlappingRanges => 33,
            Error::Misaligned { .. } => 34,
            Error::ReservedRow { .. } => 35,
            Error::NotBGroup => 40,
            Error::NotDGroup(_) => 41,
            Error::CrossSubarrayOperands => 42,
            Error::MissingOperand => 43,
            Error::WrongWidth { .. } => 50,
            Error::InvalidGsConfig(_) => 51,
            Error::UnsupportedStride(_) => 52,
            Error::InvalidCacheConfig(_) => 60,
            Error::PatternConflict { .. } => 61,
        }
    }

    /// Strips [`Error::AtCommand`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtCommand { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
