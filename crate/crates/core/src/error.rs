use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown kind `{kind}`")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: duplicate name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: malformed adapter expression: {msg}")]
    MalformedAdapter { line: usize, msg: String },
    #[error("format/version mismatch: {0}")]
    Version(String),

    #[error("source `{0}` is a random name; use sample_name")]
    RandomNameMisuse(String),
    #[error("source `{0}` is deterministic; it has no dependency window")]
    NotRandomName(String),

    #[error("grid violation at k={k}: entry {value} times {k}! is not an integer")]
    GridViolation { k: usize, value: String },
    #[error("entries sum to {0}, expected 1")]
    SumNotOne(String),
    #[error("entry at k={k} is {value}, outside [0,1]")]
    EntryOutOfRange { k: usize, value: String },
    #[error("creature has empty support")]
    EmptySupport,
    #[error("key {k} outside domain [{mdn}, {mup})")]
    KeyOutsideDomain { k: usize, mdn: usize, mup: usize },
    #[error("invalid domain [{mdn}, {mup})")]
    BadDomain { mdn: usize, mup: usize },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(String),
    #[error("composition has no parts with positive weight")]
    EmptyComposition,
    #[error("invalid composition: {0}")]
    BadComposition(String),
    #[error("no admissible weight vector exists for these parts")]
    NoAdmissibleWeights,
    #[error("new mup {new_mup} is below current mup {mup}")]
    PadBelowMup { new_mup: usize, mup: usize },
    #[error("sequence prefix of length {have} does not cover index {need}")]
    EtaTooShort { have: usize, need: usize },

    #[error("invalid condition: {0}")]
    BadCondition(String),
    #[error("witness rejected: {0}")]
    Witness(String),

    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("dependency window of {bits} bits exceeds the enumeration bound {bound}")]
    WindowTooLarge { bits: usize, bound: usize },
    #[error("empty search space: {0}")]
    EmptySearch(String),
    #[error("search space exhausted: {0}")]
    Exhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
