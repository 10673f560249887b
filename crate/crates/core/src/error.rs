use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("letter {letter} is not in an alphabet of size {size}")]
    InvalidLetter { letter: u32, size: usize },

    #[error("alphabet error: {0}")]
    Alphabet(String),

    #[error("{0} requires a non-empty word")]
    EmptyWord(&'static str),

    #[error("the pair is Euclidean (both words are powers of one word)")]
    EuclideanPair,

    #[error("window too narrow: need {needed} positions, have {available}")]
    WindowTooNarrow { needed: u64, available: u64 },

    #[error("level {requested} is beyond the available depth {available}")]
    DepthOutOfRange { requested: usize, available: usize },

    #[error("invalid cut list: {0}")]
    InvalidCuts(String),

    #[error("morphism error: {0}")]
    Morphism(String),

    #[error("structural requirement not met: {0}")]
    Flags(String),

    #[error("invalid anchor: {0}")]
    Anchor(String),

    #[error("word length {length} exceeds level words of length {available} at depth {depth}")]
    LanguageTooLong { length: usize, available: u64, depth: usize },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("level {level} has m = {m}, below the admissibility floor {floor}")]
    BelowFloor { level: usize, m: u64, floor: u64 },

    #[error("Bratteli diagram error: {0}")]
    Bratteli(String),

    #[error("tower error: {0}")]
    Tower(String),

    #[error("blocks coincide at level {0}; the tower is periodic there")]
    Periodic(usize),

    #[error("words have unequal lengths")]
    UnequalLengths,

    #[error("no part class has a hole at -1 and a letter at 0 (certificates too shallow)")]
    NoQualifyingClass,

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("claim check failed: {0}")]
    Claim(String),
}

pub type Result<T> = std::result::Result<T, Error>;
