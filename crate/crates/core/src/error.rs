use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // sequence input
    #[error("empty FASTA input")]
    EmptyInput,
    #[error("line {line}: sequence data before the first '>' header")]
    DataBeforeHeader { line: usize },
    #[error("record '{id}' has an empty sequence")]
    EmptyRecord { id: String },
    #[error("record '{id}': invalid symbol '{symbol}' at residue {position}")]
    InvalidSymbol { id: String, symbol: char, position: usize },
    #[error("sequence '{0}' contains no A/C/G/T residues")]
    NoInformativeResidues(String),

    // mutation scanning
    #[error("codon '{0}' cannot be translated")]
    Untranslatable(String),
    #[error("normal CDS length {0} is not a multiple of 3")]
    IncompleteCodons(usize),
    #[error("base index {0} outside 1..=3")]
    BaseIndex(usize),
    #[error("codon number must be at least 1")]
    CodonNumber,

    // dataset
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    InvalidRow { row: usize, message: String },
    #[error("no records")]
    NoRecords,
    #[error("value '{value}' not present in the {dictionary} dictionary")]
    UnseenCategory { dictionary: &'static str, value: String },
    #[error("mutation position {position} outside target range {min}..={max}")]
    TargetOutOfRange { position: i64, min: i64, max: i64 },
    #[error("normalized target {0} outside [0, 1]")]
    NormalizedOutOfRange(f64),
    #[error("invalid split fractions: {0}")]
    SplitFractions(String),
    #[error("split partition {0} is empty")]
    EmptySplit(&'static str),
    #[error("records mix tagged and untagged split assignments")]
    MixedSplitTags,
    #[error("invalid schema: {0}")]
    Schema(String),

    // network
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("gradient component {index} is not finite")]
    NonFiniteGradient { index: usize },
    #[error("training diverged at epoch {epoch}: {what} is not finite")]
    Divergence { epoch: usize, what: &'static str },
    #[error("checkpoint version '{found}' is not supported (expected '{expected}')")]
    CheckpointVersion { found: String, expected: String },
    #[error("checkpoint is truncated or malformed: {0}")]
    CheckpointFormat(String),
    #[error("checkpoint is inconsistent: {0}")]
    CheckpointInconsistent(String),

    // metrics
    #[error("{0} series is constant")]
    ConstantSeries(&'static str),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least {needed} values required, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("all actual values are zero")]
    AllZeroActual,

    // diagnosis
    #[error("invalid query: {0}")]
    Query(String),
    #[error("codon {0} has no exon mapping and no exon was supplied")]
    NoExon(i64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
