use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: malformed record: {msg}")]
    MalformedRecord { line: usize, msg: String },

    #[error("unknown input format: {0}")]
    UnknownFormat(String),

    #[error("empty record list")]
    EmptyRecords,

    #[error("empty series")]
    EmptySeries,

    #[error("series is not hourly (bucket width {0}s)")]
    NotHourly(i64),

    #[error("day index {0} out of range (series spans {1} days)")]
    DayOutOfRange(usize, usize),

    #[error("zero event activity in window")]
    ZeroEventActivity,

    #[error("insufficient decay data")]
    InsufficientDecayData,

    #[error("log fit requires at least 3 points with 2 distinct times, got {0}")]
    TooFewPoints(usize),

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("series '{0}' has zero variance")]
    ZeroVariance(String),

    #[error("unknown series name: {0}")]
    UnknownSeries(String),

    #[error("no geo-tagged records")]
    NoGeoRecords,

    #[error("unknown gazetteer region: {0}")]
    UnknownRegion(String),

    #[error("gazetteer entry '{name}': {msg}")]
    BadGazetteerEntry { name: String, msg: String },

    #[error("lexicon line {line}: {msg}")]
    BadLexiconLine { line: usize, msg: String },

    #[error("zero tokens in input texts")]
    ZeroTokens,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
