//! Rank-indexed storage for weight-bounded tables.
//!
//! Addresses of weight at most `W` are ordered by weight, then
//! colexicographically within a weight class. The position of an address in
//! that order is computed from a small binomial table, so entries are stored
//! densely with no keys.

use crate::bits;
use crate::error::{Error, Result};
use crate::lut::{DecoderConfig, LutEntry, SparseLut};

use super::{ClutConfig, Scheme};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankClut {
    config: DecoderConfig,
    weight_cutoff: u32,
    /// `binom[n * (W + 1) + k] = C(n, k)` for `n <= address_bits`, `k <= W`.
    binom: Vec<u64>,
    /// First rank of each weight class; `offsets[W + 1]` is the entry count.
    offsets: Vec<u64>,
    entries: Vec<u8>,
}

fn binomials(n_max: u32, k_max: u32) -> Vec<u64> {
    let cols = k_max as usize + 1;
    let mut t = vec![0u64; (n_max as usize + 1) * cols];
    for n in 0..=n_max as usize {
        t[n * cols] = 1;
        for k in 1..cols.min(n + 1) {
            t[n * cols + k] = t[(n - 1) * cols + k - 1] + t[(n - 1) * cols + k];
        }
    }
    t
}

impl RankClut {
    fn empty(config: DecoderConfig, weight_cutoff: u32) -> Self {
        let n = config.address_bits();
        let w = weight_cutoff.min(n);
        let binom = binomials(n, w);
        let cols = w as usize + 1;
        let mut offsets = vec![0u64; cols + 1];
        for k in 0..cols {
            offsets[k + 1] = offsets[k] + binom[n as usize * cols + k];
        }
        Self {
            config,
            weight_cutoff: w,
            binom,
            offsets,
            entries: Vec::new(),
        }
    }

    /// Rebuilds a table from packed entries in rank order.
    pub fn from_packed(config: DecoderConfig, weight_cutoff: u32, entries: Vec<u8>) -> Result<Self> {
        let mut clut = Self::empty(config, weight_cutoff);
        let expected = (clut.len() * config.entry_bits() as usize).div_ceil(8);
        if entries.len() != expected {
            return Err(Error::Format(format!(
                "rank table needs {expected} payload bytes, got {}",
                entries.len()
            )));
        }
        clut.entries = entries;
        Ok(clut)
    }

    /// Position of `address` among stored addresses, if it is stored.
    pub fn rank(&self, address: u64) -> Option<u64> {
        let w = address.count_ones();
        if w > self.weight_cutoff || address >= self.config.num_addresses() {
            return None;
        }
        let cols = self.weight_cutoff as usize + 1;
        let within: u64 = bits::ones(address)
            .enumerate()
            .map(|(i, pos)| self.binom[pos * cols + i + 1])
            .sum();
        Some(self.offsets[w as usize] + within)
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn clut_config(&self) -> ClutConfig {
        ClutConfig {
            base: self.config,
            weight_cutoff: self.weight_cutoff,
            scheme: Scheme::Rank,
        }
    }

    pub fn weight_cutoff(&self) -> u32 {
        self.weight_cutoff
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn packed_entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn payload_bytes(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn index_bytes(&self) -> u64 {
        8 * (self.binom.len() + self.offsets.len()) as u64
    }

    pub fn lookup(&self, address: u64) -> Option<LutEntry> {
        let r = self.rank(address)? as usize;
        let width = self.config.entry_bits();
        let packed = bits::read_bits(&self.entries, r * width as usize, width);
        Some(LutEntry::unpack(&self.config, packed))
    }
}

/// Stores every address of `sparse` with weight at most `cutoff`.
/// `sparse` must contain all of them.
pub fn compress_rank(sparse: &SparseLut, cutoff: u32) -> Result<RankClut> {
    let mut clut = RankClut::empty(*sparse.config(), cutoff);
    let mut slots: Vec<Option<u64>> = vec![None; clut.len()];
    for &(a, packed) in sparse.records() {
        if let Some(r) = clut.rank(u64::from(a)) {
            slots[r as usize] = Some(packed);
        }
    }
    if let Some(missing) = slots.iter().position(Option::is_none) {
        return Err(Error::InvalidConfig(format!(
            "weight-bounded table lacks the address at rank {missing} (cutoff {cutoff})"
        )));
    }
    clut.entries = bits::pack_bits(slots.into_iter().flatten(), sparse.config().entry_bits());
    Ok(clut)
}
