use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("document {doc_id} is empty")]
    EmptyDocument { doc_id: String },

    #[error("duplicate document id {doc_id} ({first} and {second})")]
    DuplicateDocument {
        doc_id: String,
        first: PathBuf,
        second: PathBuf,
    },

    #[error("document {doc_id} has {tokens} tokens, fewer than one passage of {passage_len}")]
    DocumentTooShort {
        doc_id: String,
        tokens: usize,
        passage_len: usize,
    },

    #[error("split plan needs {required} documents but only {available} are available")]
    InsufficientDocuments { required: usize, available: usize },

    #[error("prefix length {k} out of range [{min}, {max}] for sample {sample_id}")]
    PrefixOutOfRange {
        sample_id: String,
        k: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("token id {token} out of vocabulary (size {vocab_size}) in sample {sample_id}")]
    TokenOutOfVocabulary {
        sample_id: String,
        token: u32,
        vocab_size: usize,
    },

    #[error("sample {sample_id} is too short to yield a prediction ({tokens} tokens)")]
    SampleTooShort { sample_id: String, tokens: usize },

    #[error("splits overlap on documents: {}", doc_ids.join(", "))]
    OverlappingSplits { doc_ids: Vec<String> },

    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("line {line}: conflicting duplicate record for ({sample_id}, {model_id})")]
    ConflictingRecord {
        line: usize,
        sample_id: String,
        model_id: String,
    },

    #[error("no loss record for sample {sample_id} under model {model_id}")]
    MissingLoss { sample_id: String, model_id: String },

    #[error("model pair ({pre} -> {post}) is not a sanctioned gap pair")]
    UnsanctionedPair { pre: String, post: String },

    #[error("empty distribution: {0}")]
    EmptyDistribution(String),

    #[error("false-positive rate {0} outside (0, 1)")]
    InvalidRate(f64),

    #[error("policy was derived from run {policy} but confidences belong to run {scores}")]
    PolicyMismatch { policy: String, scores: String },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Name of the pipeline stage that failed, if the error was raised inside one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    /// Short snake_case name of the innermost error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::EmptyDocument { .. } => "empty_document",
            Error::DuplicateDocument { .. } => "duplicate_document",
            Error::DocumentTooShort { .. } => "document_too_short",
            Error::InsufficientDocuments { .. } => "insufficient_documents",
            Error::PrefixOutOfRange { .. } => "prefix_out_of_range",
            Error::Config(_) => "config",
            Error::Precondition(_) => "precondition",
            Error::TokenOutOfVocabulary { .. } => "token_out_of_vocabulary",
            Error::SampleTooShort { .. } => "sample_too_short",
            Error::OverlappingSplits { .. } => "overlapping_splits",
            Error::MalformedRecord { .. } => "malformed_record",
            Error::ConflictingRecord { .. } => "conflicting_record",
            Error::MissingLoss { .. } => "missing_loss",
            Error::UnsanctionedPair { .. } => "unsanctioned_pair",
            Error::EmptyDistribution(_) => "empty_distribution",
            Error::InvalidRate(_) => "invalid_rate",
            Error::PolicyMismatch { .. } => "policy_mismatch",
            Error::Snapshot(_) => "snapshot",
            Error::Stage { source, .. } => source.kind(),
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
