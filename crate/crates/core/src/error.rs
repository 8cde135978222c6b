use std::io;

use crate::layout::StabType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported code distance {0} (expected 2..=8)")]
    InvalidDistance(usize),

    #[error("bit-vector does not fit {expected} bits (value {value:#x})")]
    LengthMismatch { expected: usize, value: u64 },

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(String),

    #[error("address {address:#x} out of range for {bits} address bits")]
    AddressOutOfRange { address: u64, bits: u32 },

    #[error("refusing to build a dense table with {bits} address bits (limit {limit}); pass the full-build override")]
    TableTooLarge { bits: u32, limit: u32 },

    #[error("{stab_type:?}-type table expected, got {got:?}")]
    WrongStabType { stab_type: StabType, got: StabType },

    #[error("compression scheme does not support this configuration: {0}")]
    UnsupportedScheme(String),

    #[error("decoder already finished")]
    AlreadyFinished,

    #[error("bad table file: {0}")]
    Format(String),

    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("bad trace: {0}")]
    Trace(String),

    #[error("need at least {needed} points with nonzero error rate, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
