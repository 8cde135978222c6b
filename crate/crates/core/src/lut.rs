//! Lookup-table programming and size accounting.
//!
//! A table for decoder configuration `[d, m]` and one stabilizer type is
//! indexed by an address of `S * m` bits (`S` stabilizers per layer). Layer
//! `k` of the window occupies bits `[k * S, (k + 1) * S)`, oldest layer in
//! the least-significant block. Each entry packs the oldest-layer
//! correction (`n_d` bits, bit 0 = data qubit 0) followed by the `S`-bit
//! toggle for the next layer's detection events.

use std::fmt;

use rayon::prelude::*;

use crate::bits;
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, StabType};
use crate::matching::{DecodingGraph, GraphOptions, MatchScratch};

/// Dense builds above this many address bits need an explicit override.
pub const DEFAULT_ADDRESS_LIMIT: u32 = 16;

/// Weight cutoff used for large configurations by default.
pub const DEFAULT_WEIGHT_CUTOFF: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DecoderConfig {
    pub distance: usize,
    pub rounds: usize,
    pub stab_type: StabType,
    pub syndrome_len: usize,
    pub num_data: usize,
}

impl DecoderConfig {
    pub fn new(layout: &CodeLayout, rounds: usize, stab_type: StabType) -> Result<Self> {
        let cfg = Self {
            distance: layout.distance(),
            rounds,
            stab_type,
            syndrome_len: layout.num_stabilizers(stab_type),
            num_data: layout.num_data(),
        };
        if rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if cfg.address_bits() > 32 {
            return Err(Error::InvalidConfig(format!(
                "{} address bits exceed the 32-bit address format",
                cfg.address_bits()
            )));
        }
        if cfg.entry_bits() > 64 {
            return Err(Error::InvalidConfig(format!(
                "{} entry bits exceed 64",
                cfg.entry_bits()
            )));
        }
        Ok(cfg)
    }

    pub fn for_distance(distance: usize, rounds: usize, stab_type: StabType) -> Result<Self> {
        Self::new(&CodeLayout::build(distance)?, rounds, stab_type)
    }

    pub fn address_bits(&self) -> u32 {
        (self.syndrome_len * self.rounds) as u32
    }

    pub fn entry_bits(&self) -> u32 {
        (self.num_data + self.syndrome_len) as u32
    }

    pub fn num_addresses(&self) -> u64 {
        1u64 << self.address_bits()
    }

    /// Size of the dense table in bytes.
    pub fn table_bytes(&self) -> u64 {
        self.num_addresses() * u64::from(self.entry_bits()) / 8
    }

    pub fn check_address(&self, address: u64) -> Result<()> {
        if address >= self.num_addresses() {
            Err(Error::AddressOutOfRange {
                address,
                bits: self.address_bits(),
            })
        } else {
            Ok(())
        }
    }

    /// Detection events of the oldest layer in an address.
    pub fn oldest_layer(&self, address: u64) -> u64 {
        address & bits::low_mask(self.syndrome_len)
    }
}

impl fmt::Display for DecoderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[d={},m={}] {}", self.distance, self.rounds, self.stab_type)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct LutEntry {
    pub correction: u64,
    pub state_delta: u64,
}

impl LutEntry {
    pub const ZERO: Self = Self {
        correction: 0,
        state_delta: 0,
    };

    pub fn pack(&self, cfg: &DecoderConfig) -> u64 {
        self.correction | self.state_delta << cfg.num_data
    }

    pub fn unpack(cfg: &DecoderConfig, packed: u64) -> Self {
        Self {
            correction: packed & bits::low_mask(cfg.num_data),
            state_delta: (packed >> cfg.num_data) & bits::low_mask(cfg.syndrome_len),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.correction == 0 && self.state_delta == 0
    }
}

/// Programs table entries by running the matcher on each address.
#[derive(Clone, Debug)]
pub struct LutBuilder {
    config: DecoderConfig,
    graph: DecodingGraph,
}

impl LutBuilder {
    pub fn new(layout: &CodeLayout, rounds: usize, stab_type: StabType) -> Result<Self> {
        Self::with_options(layout, rounds, stab_type, &GraphOptions::default())
    }

    pub fn with_options(
        layout: &CodeLayout,
        rounds: usize,
        stab_type: StabType,
        options: &GraphOptions,
    ) -> Result<Self> {
        let config = DecoderConfig::new(layout, rounds, stab_type)?;
        let graph = DecodingGraph::build(layout, stab_type, rounds, options)?;
        Ok(Self { config, graph })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn graph(&self) -> &DecodingGraph {
        &self.graph
    }

    pub fn entry_for_address(&self, address: u64) -> Result<LutEntry> {
        self.entry_with(address, &mut MatchScratch::default())
    }

    pub(crate) fn entry_with(&self, address: u64, scratch: &mut MatchScratch) -> Result<LutEntry> {
        self.config.check_address(address)?;
        let events = self.graph.events_from_address(address);
        let (correction, state_delta) = self.graph.commit_events(&events, scratch)?;
        Ok(LutEntry {
            correction,
            state_delta,
        })
    }

    /// Dense table over every address. Refuses more than
    /// [`DEFAULT_ADDRESS_LIMIT`] address bits unless `force_full` is set.
    pub fn build_full(&self, force_full: bool) -> Result<Lut> {
        let bits = self.config.address_bits();
        if bits > DEFAULT_ADDRESS_LIMIT && !force_full {
            return Err(Error::TableTooLarge {
                bits,
                limit: DEFAULT_ADDRESS_LIMIT,
            });
        }
        let n = self.config.num_addresses() as usize;
        let mut entries = vec![0u64; n];
        entries
            .par_chunks_mut(1 << 10.min(bits))
            .enumerate()
            .try_for_each_init(MatchScratch::default, |scratch, (chunk, out)| {
                let base = (chunk << 10.min(bits)) as u64;
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = self.entry_with(base + i as u64, scratch)?.pack(&self.config);
                }
                Ok::<_, Error>(())
            })?;
        Ok(Lut {
            config: self.config,
            entries,
        })
    }

    /// Entries for every address of Hamming weight at most `cutoff`.
    pub fn build_weight_bounded(&self, cutoff: u32) -> Result<SparseLut> {
        let addresses = addresses_up_to_weight(self.config.address_bits(), cutoff);
        let entries = addresses
            .par_iter()
            .map_init(MatchScratch::default, |scratch, &a| {
                Ok((a as u32, self.entry_with(a, scratch)?.pack(&self.config)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseLut {
            config: self.config,
            weight_cutoff: cutoff,
            entries,
        })
    }
}

/// All addresses with at most `cutoff` set bits, ascending.
pub fn addresses_up_to_weight(address_bits: u32, cutoff: u32) -> Vec<u64> {
    (0..1u64 << address_bits)
        .filter(|a| a.count_ones() <= cutoff)
        .collect()
}

/// Dense table: `entries[address]` is a packed [`LutEntry`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lut {
    pub(crate) config: DecoderConfig,
    pub(crate) entries: Vec<u64>,
}

impl Lut {
    pub fn from_packed(config: DecoderConfig, entries: Vec<u64>) -> Result<Self> {
        if entries.len() as u64 != config.num_addresses() {
            return Err(Error::Format(format!(
                "dense table needs {} entries, got {}",
                config.num_addresses(),
                entries.len()
            )));
        }
        Ok(Self { config, entries })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn packed(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, address: u64) -> LutEntry {
        LutEntry::unpack(&self.config, self.entries[address as usize])
    }
}

/// Weight-bounded table: sorted `(address, packed entry)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseLut {
    pub(crate) config: DecoderConfig,
    pub(crate) weight_cutoff: u32,
    pub(crate) entries: Vec<(u32, u64)>,
}

impl SparseLut {
    pub fn from_sorted(config: DecoderConfig, weight_cutoff: u32, entries: Vec<(u32, u64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Format("sparse records not strictly ascending".into()));
        }
        Ok(Self {
            config,
            weight_cutoff,
            entries,
        })
    }

    /// Keep only the addresses of a dense table up to `cutoff` set bits.
    pub fn from_dense(lut: &Lut, cutoff: u32) -> Self {
        let entries = lut
            .entries
            .iter()
            .enumerate()
            .filter(|(a, _)| a.count_ones() <= cutoff)
            .map(|(a, &e)| (a as u32, e))
            .collect();
        Self {
            config: lut.config,
            weight_cutoff: cutoff,
            entries,
        }
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn weight_cutoff(&self) -> u32 {
        self.weight_cutoff
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn records(&self) -> &[(u32, u64)] {
        &self.entries
    }

    pub fn get(&self, address: u64) -> Option<LutEntry> {
        let a = u32::try_from(address).ok()?;
        self.entries
            .binary_search_by_key(&a, |&(x, _)| x)
            .ok()
            .map(|i| LutEntry::unpack(&self.config, self.entries[i].1))
    }
}

/// One table's contribution to a size report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeRow {
    pub stab_type: StabType,
    pub address_bits: u32,
    pub entry_bits: u32,
    pub table_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeReport {
    pub distance: usize,
    pub rounds: usize,
    /// Z-type first, then X-type.
    pub rows: Vec<SizeRow>,
    pub total_bytes: u64,
}

pub fn size_report(distance: usize, rounds: usize) -> Result<SizeReport> {
    let layout = CodeLayout::build(distance)?;
    let rows = [StabType::Z, StabType::X]
        .into_iter()
        .map(|t| {
            let cfg = DecoderConfig::new(&layout, rounds, t)?;
            Ok(SizeRow {
                stab_type: t,
                address_bits: cfg.address_bits(),
                entry_bits: cfg.entry_bits(),
                table_bytes: cfg.table_bytes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_bytes = rows.iter().map(|r| r.table_bytes).sum();
    Ok(SizeReport {
        distance,
        rounds,
        rows,
        total_bytes,
    })
}

impl SizeReport {
    fn column<T: PartialEq + fmt::Display>(&self, f: impl Fn(&SizeRow) -> T) -> String {
        let values: Vec<T> = self.rows.iter().map(f).collect();
        if values.windows(2).all(|w| w[0] == w[1]) {
            values[0].to_string()
        } else {
            values.iter().map(ToString::to_string).collect::<Vec<_>>().join("/")
        }
    }

    pub fn address_column(&self) -> String {
        self.column(|r| r.address_bits)
    }

    pub fn entry_column(&self) -> String {
        self.column(|r| r.entry_bits)
    }

    pub fn table_column(&self) -> String {
        self.column(|r| format_bytes(r.table_bytes))
    }

    pub fn total_column(&self) -> String {
        format_bytes(self.total_bytes)
    }
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[d={},m={}]\taddress {}\tentry {}\ttable {}\ttotal {}",
            self.distance,
            self.rounds,
            self.address_column(),
            self.entry_column(),
            self.table_column(),
            self.total_column()
        )
    }
}

/// Binary-prefixed size, e.g. `416 B`, `6.5 KB`, `53.75 MB`.
pub fn format_bytes(bytes: u64) -> String {
    const UNITS: [&str; 4] = ["B", "KB", "MB", "GB"];
    let mut value = bytes as f64;
    let mut unit = 0;
    while value >= 1024.0 && unit + 1 < UNITS.len() {
        value /= 1024.0;
        unit += 1;
    }
    let mut s = format!("{value:.2}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    format!("{s} {}", UNITS[unit])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::commit_oldest_layer;

    fn builder(d: usize, m: usize, t: StabType) -> LutBuilder {
        LutBuilder::new(&CodeLayout::build(d).unwrap(), m, t).unwrap()
    }

    #[test]
    fn config_widths() {
        let c = DecoderConfig::for_distance(4, 2, StabType::X).unwrap();
        assert_eq!((c.address_bits(), c.entry_bits()), (16, 24));
        let c = DecoderConfig::for_distance(4, 2, StabType::Z).unwrap();
        assert_eq!((c.address_bits(), c.entry_bits()), (14, 23));
        let c = DecoderConfig::for_distance(5, 2, StabType::Z).unwrap();
        assert_eq!((c.address_bits(), c.entry_bits()), (24, 37));
        assert!(DecoderConfig::for_distance(3, 0, StabType::Z).is_err());
    }

    #[test]
    fn pack_round_trip() {
        let c = DecoderConfig::for_distance(3, 2, StabType::Z).unwrap();
        let e = LutEntry { correction: 0x1a5, state_delta: 0b1010 };
        assert_eq!(LutEntry::unpack(&c, e.pack(&c)), e);
        assert_eq!(e.pack(&c), 0x1a5 | 0b1010 << 9);
    }

    #[test]
    fn d3m2_examples() {
        let b = builder(3, 2, StabType::Z);
        assert_eq!(b.entry_for_address(0).unwrap(), LutEntry::ZERO);
        // Stabilizer 1 (support {2, 5}) alone in the oldest layer.
        let e = b.entry_for_address(1 << 1).unwrap();
        assert_eq!(e, LutEntry { correction: 1 << 2, state_delta: 0 });
        // Same stabilizer in layers 0 and 1: time edge.
        let e = b.entry_for_address((1 << 1) | (1 << 5)).unwrap();
        assert_eq!(e, LutEntry { correction: 0, state_delta: 1 << 1 });
        assert!(matches!(
            b.entry_for_address(256),
            Err(Error::AddressOutOfRange { address: 256, bits: 8 })
        ));
    }

    #[test]
    fn full_table_sizes() {
        assert_eq!(builder(3, 2, StabType::Z).build_full(false).unwrap().len(), 256);
        assert_eq!(builder(3, 3, StabType::X).build_full(false).unwrap().len(), 4096);
        assert!(matches!(
            builder(4, 3, StabType::Z).build_full(false),
            Err(Error::TableTooLarge { bits: 21, limit: 16 })
        ));
    }

    #[test]
    fn entries_equal_direct_matching() {
        for m in 1..=3 {
            for t in StabType::BOTH {
                let b = builder(3, m, t);
                let lut = b.build_full(false).unwrap();
                for a in 0..lut.len() as u64 {
                    let events = b.graph().events_from_address(a);
                    let r = b.graph().min_weight_match(&events).unwrap();
                    let c = commit_oldest_layer(b.graph(), &r);
                    let want = LutEntry { correction: c.correction, state_delta: c.state_delta };
                    assert_eq!(lut.get(a), want, "m={m} {t} address {a:#x}");
                }
            }
        }
    }

    #[test]
    fn m1_entries_have_no_state() {
        let lut = builder(3, 1, StabType::Z).build_full(false).unwrap();
        assert!((0..16).all(|a| lut.get(a).state_delta == 0));
        assert_eq!(lut.config().entry_bits(), 13);
    }

    #[test]
    fn zero_oldest_layer_gives_zero_correction() {
        for m in 1..=3 {
            let lut = builder(3, m, StabType::Z).build_full(false).unwrap();
            for a in (0..lut.len() as u64).filter(|&a| lut.config().oldest_layer(a) == 0) {
                assert_eq!(lut.get(a).correction, 0);
            }
        }
    }

    #[test]
    fn entries_are_not_linear() {
        let lut = builder(3, 2, StabType::Z).build_full(false).unwrap();
        let mut counterexample = false;
        'outer: for a in 0..256u64 {
            for b in 0..256u64 {
                let (ea, eb, eab) = (lut.get(a), lut.get(b), lut.get(a ^ b));
                if ea.correction ^ eb.correction != eab.correction {
                    counterexample = true;
                    break 'outer;
                }
            }
        }
        assert!(counterexample);
    }

    #[test]
    fn weight_bounded_counts() {
        let b = builder(3, 2, StabType::Z);
        let sparse = b.build_weight_bounded(3).unwrap();
        assert_eq!(sparse.len(), 93);
        let full = b.build_full(false).unwrap();
        for &(a, e) in sparse.records() {
            assert_eq!(full.packed()[a as usize], e);
        }
        assert_eq!(SparseLut::from_dense(&full, 3), sparse);
        assert_eq!(b.build_weight_bounded(0).unwrap().len(), 1);
        assert_eq!(addresses_up_to_weight(24, 5).len(), 55_455);
        assert!(sparse.get(0xff).is_none());
        assert_eq!(sparse.get(0), Some(LutEntry::ZERO));
    }

    #[test]
    fn byte_formatting() {
        assert_eq!(format_bytes(416), "416 B");
        assert_eq!(format_bytes(6656), "6.5 KB");
        assert_eq!(format_bytes(47_104), "46 KB");
        assert_eq!(format_bytes(6_029_312), "5.75 MB");
        assert_eq!(format_bytes(77_594_624), "74 MB");
    }

    #[test]
    fn size_report_rows() {
        let r = size_report(3, 2).unwrap();
        assert_eq!(r.to_string(), "[d=3,m=2]\taddress 8\tentry 13\ttable 416 B\ttotal 832 B");
        let r = size_report(4, 3).unwrap();
        assert_eq!(r.address_column(), "21/24");
        assert_eq!(r.entry_column(), "23/24");
        assert_eq!(r.table_column(), "5.75 MB/48 MB");
        assert_eq!(r.total_column(), "53.75 MB");
    }
}
