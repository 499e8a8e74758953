use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbVec(String),

    #[error("invalid coarsening: {0}")]
    InvalidCoarsening(String),

    #[error("exact rational weights required")]
    NotExact,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("empty word")]
    EmptyWord,

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid point set: {0}")]
    InvalidSet(String),

    #[error("pseudo-map domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("insufficient room: |A| = {a} exceeds |B| = {b}")]
    InsufficientRoom { a: usize, b: usize },

    #[error("group enumeration exhausted before the matching completed")]
    EnumerationExhausted,

    #[error("divisibility failure: {0}")]
    Divisibility(String),

    #[error("point {0} lies on an aperiodic or partial orbit")]
    Aperiodic(usize),

    #[error("no admissible column height: {0}")]
    NoAdmissibleHeight(String),

    #[error("capacity failure: {0}")]
    Capacity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("atypical name at transversal point {point}: {detail}")]
    AtypicalName { point: usize, detail: String },

    #[error("decode failed at transversal point {point}: {matches} codewords within radius")]
    Decode { point: usize, matches: usize },

    #[error("invariant failure: {0}")]
    Invariant(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
