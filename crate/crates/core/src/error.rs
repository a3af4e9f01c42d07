use std::io;

use thiserror::Error;

use crate::corpus::DocId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("weight {weight} outside quantizer range [0, {max}]")]
    WeightOutOfRange { weight: f64, max: f64 },

    #[error("codec: {0}")]
    Codec(String),

    #[error("bad magic: expected IBX1")]
    BadMagic,

    #[error("truncated index file: {0}")]
    Truncated(&'static str),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("malformed index file: {0}")]
    Format(String),

    #[error("query {qid}: {source}")]
    Query { qid: String, source: Box<Error> },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("accumulator overflow on document {doc} at {width}-bit width")]
    AccumulatorOverflow { doc: DocId, width: u32 },
}
