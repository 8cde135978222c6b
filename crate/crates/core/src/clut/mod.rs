//! Compressed lookup tables.
//!
//! Both schemes keep only the low-weight addresses of a table, which are the
//! ones a decoder actually reaches at realistic error rates. Any other
//! address is a miss. [`FrameClut`] is the hand-laid data-frame layout for
//! `[d=3, m=2]`; [`RankClut`] handles any configuration by storing entries
//! at the combinatorial rank of their address.

mod frame;
mod rank;

use std::fmt;

pub use frame::{compress_frame, FrameClut, FRAME_CUTOFF, FRAME_ENTRIES};
pub use rank::{compress_rank, RankClut};

use crate::error::{Error, Result};
use crate::layout::StabType;
use crate::lut::{format_bytes, DecoderConfig, LutEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Frame,
    Rank,
}

impl Scheme {
    /// Scheme id used in table files.
    pub fn id(self) -> u8 {
        match self {
            Scheme::Frame => 0,
            Scheme::Rank => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Scheme::Frame),
            1 => Some(Scheme::Rank),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Frame => "frame",
            Scheme::Rank => "rank",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClutConfig {
    pub base: DecoderConfig,
    pub weight_cutoff: u32,
    pub scheme: Scheme,
}

/// A compressed table of either scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Clut {
    Frame(FrameClut),
    Rank(RankClut),
}

impl Clut {
    pub fn config(&self) -> ClutConfig {
        match self {
            Clut::Frame(c) => c.clut_config(),
            Clut::Rank(c) => c.clut_config(),
        }
    }

    pub fn base(&self) -> &DecoderConfig {
        match self {
            Clut::Frame(c) => c.config(),
            Clut::Rank(c) => c.config(),
        }
    }

    /// Entry for `address`, or `None` when it was not stored.
    pub fn lookup(&self, address: u64) -> Option<LutEntry> {
        match self {
            Clut::Frame(c) => c.lookup(address),
            Clut::Rank(c) => c.lookup(address),
        }
    }

    pub fn stored_entries(&self) -> usize {
        match self {
            Clut::Frame(c) => c.len(),
            Clut::Rank(c) => c.len(),
        }
    }

    /// Bytes of entry data (frame: packed words and state nibbles; rank:
    /// packed entries).
    pub fn payload_bytes(&self) -> u64 {
        match self {
            Clut::Frame(c) => c.payload_bytes(),
            Clut::Rank(c) => c.payload_bytes(),
        }
    }

    /// Bytes of side tables needed to decode (frame: encoding table; rank:
    /// binomial and offset tables).
    pub fn aux_bytes(&self) -> u64 {
        match self {
            Clut::Frame(c) => c.encoding_table_bytes(),
            Clut::Rank(c) => c.index_bytes(),
        }
    }
}

/// Picks the scheme used by default for a configuration: frames for
/// `[d=3, m=2]`, ranking otherwise.
pub fn default_scheme(cfg: &DecoderConfig) -> Scheme {
    if cfg.distance == 3 && cfg.rounds == 2 {
        Scheme::Frame
    } else {
        Scheme::Rank
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MemoryRow {
    pub stab_type: StabType,
    pub scheme: Scheme,
    pub stored_entries: usize,
    pub payload_bytes: u64,
    pub aux_bytes: u64,
    pub full_bytes: u64,
}

impl MemoryRow {
    /// Full-table size over compressed payload.
    pub fn reduction(&self) -> f64 {
        self.full_bytes as f64 / self.payload_bytes as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryReport {
    pub distance: usize,
    pub rounds: usize,
    pub rows: Vec<MemoryRow>,
}

impl MemoryReport {
    pub fn total_payload(&self) -> u64 {
        self.rows.iter().map(|r| r.payload_bytes).sum()
    }

    pub fn total_aux(&self) -> u64 {
        self.rows.iter().map(|r| r.aux_bytes).sum()
    }

    pub fn total_full(&self) -> u64 {
        self.rows.iter().map(|r| r.full_bytes).sum()
    }

    /// Combined footprint (payload plus side tables) of every table.
    pub fn total_bytes(&self) -> u64 {
        self.total_payload() + self.total_aux()
    }

    pub fn reduction(&self) -> f64 {
        self.total_full() as f64 / self.total_bytes() as f64
    }
}

/// Memory accounting for a set of compressed tables of one configuration.
pub fn memory_report(cluts: &[&Clut]) -> Result<MemoryReport> {
    let first = cluts
        .first()
        .ok_or_else(|| Error::InvalidConfig("memory report needs at least one table".into()))?
        .base();
    let mut rows = Vec::with_capacity(cluts.len());
    for c in cluts {
        let base = c.base();
        if base.distance != first.distance || base.rounds != first.rounds {
            return Err(Error::InvalidConfig(format!(
                "mixed configurations {first} and {base} in one report"
            )));
        }
        rows.push(MemoryRow {
            stab_type: base.stab_type,
            scheme: c.config().scheme,
            stored_entries: c.stored_entries(),
            payload_bytes: c.payload_bytes(),
            aux_bytes: c.aux_bytes(),
            full_bytes: base.table_bytes(),
        });
    }
    Ok(MemoryReport {
        distance: first.distance,
        rounds: first.rounds,
        rows,
    })
}

impl fmt::Display for MemoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(
                f,
                "[d={},m={}] {}\t{}\tentries {}\tpayload {}\taux {}\tfull {}\t{:.1}x",
                self.distance,
                self.rounds,
                r.stab_type,
                r.scheme,
                r.stored_entries,
                format_bytes(r.payload_bytes),
                format_bytes(r.aux_bytes),
                format_bytes(r.full_bytes),
                r.reduction()
            )?;
        }
        write!(
            f,
            "[d={},m={}] total {} vs {} ({:.1}x)",
            self.distance,
            self.rounds,
            format_bytes(self.total_bytes()),
            format_bytes(self.total_full()),
            self.reduction()
        )
    }
}
