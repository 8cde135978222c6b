//! Data-frame layout for `[d=3, m=2]` tables.
//!
//! The address is two 4-bit layers: the low nibble is the oldest layer and
//! the high nibble the newest. Segment A holds one 16-entry frame per high
//! nibble of weight 0 or 1 (`0x0_, 0x1_, 0x2_, 0x4_, 0x8_`). Segment B holds
//! one 10-entry frame per high nibble of weight 2, covering low nibbles
//! `0..=9`. That is 140 entries, including every address of weight 3 or
//! less whose oldest layer has events.
//!
//! Corrections are replaced by codes from an encoding table. Each group of
//! four consecutive entries is stored as `code_bits` bit-planes of four bits
//! (plane `b` holds bit `b` of each of the four codes). With at most 16
//! distinct corrections this is one 16-bit word per group. State deltas are
//! stored raw, two per byte.

use crate::bits;
use crate::error::{Error, Result};
use crate::lut::{DecoderConfig, Lut, LutEntry};

use super::{ClutConfig, Scheme};

/// Weight cutoff the frame layout guarantees.
pub const FRAME_CUTOFF: u32 = 3;

pub const FRAME_ENTRIES: usize = 140;

const LAYER_BITS: u32 = 4;
const FRAME_A_LEN: usize = 16;
const FRAME_B_LEN: usize = 10;
const SEGMENT_A_LEN: usize = 5 * FRAME_A_LEN;
/// High nibbles of the segment B frames, in frame order.
const SEGMENT_B_NIBBLES: [u64; 6] = [0x3, 0x5, 0x6, 0x9, 0xa, 0xc];
const GROUP: usize = 4;
const NOMINAL_CODE_BITS: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameClut {
    config: DecoderConfig,
    code_bits: u32,
    encoding_table: Vec<u64>,
    /// Bit-plane stream, an even number of bytes (whole 16-bit words).
    packed: Vec<u8>,
    state: Vec<u8>,
}

/// Position of `address` in the frame layout, if stored.
fn slot(address: u64) -> Option<usize> {
    let low = (address & 0xf) as usize;
    let high = address >> LAYER_BITS;
    match high.count_ones() {
        0 => Some(low),
        1 => Some((high.trailing_zeros() as usize + 1) * FRAME_A_LEN + low),
        2 if low < FRAME_B_LEN => {
            let frame = SEGMENT_B_NIBBLES.iter().position(|&h| h == high)?;
            Some(SEGMENT_A_LEN + frame * FRAME_B_LEN + low)
        }
        _ => None,
    }
}

/// Stored addresses in slot order.
pub(crate) fn stored_addresses() -> Vec<u64> {
    let mut out = Vec::with_capacity(FRAME_ENTRIES);
    for high in [0u64, 1, 2, 4, 8] {
        out.extend((0..FRAME_A_LEN as u64).map(|low| high << LAYER_BITS | low));
    }
    for high in SEGMENT_B_NIBBLES {
        out.extend((0..FRAME_B_LEN as u64).map(|low| high << LAYER_BITS | low));
    }
    out
}

fn check_shape(cfg: &DecoderConfig) -> Result<()> {
    if cfg.distance != 3 || cfg.rounds != 2 || cfg.syndrome_len != LAYER_BITS as usize {
        return Err(Error::UnsupportedScheme(format!(
            "frame layout needs [d=3,m=2], got {cfg}"
        )));
    }
    Ok(())
}

fn code_width(distinct: usize) -> u32 {
    (usize::BITS - distinct.saturating_sub(1).leading_zeros()).max(1)
}

pub fn compress_frame(lut: &Lut) -> Result<FrameClut> {
    let cfg = *lut.config();
    check_shape(&cfg)?;

    // Lookups with an empty oldest layer are served as zero without being
    // stored; make sure that is what the table holds.
    for high in 0..1u64 << LAYER_BITS {
        let a = high << LAYER_BITS;
        if !lut.get(a).is_zero() {
            return Err(Error::UnsupportedScheme(format!(
                "entry {a:#04x} has an empty oldest layer but a nonzero entry"
            )));
        }
    }

    let slots = stored_addresses();
    let mut ascending = slots.clone();
    ascending.sort_unstable();
    let mut encoding_table: Vec<u64> = Vec::new();
    for &a in &ascending {
        let c = lut.get(a).correction;
        if !encoding_table.contains(&c) {
            encoding_table.push(c);
        }
    }
    let code_bits = code_width(encoding_table.len());
    if code_bits > NOMINAL_CODE_BITS {
        log::warn!(
            "{} distinct corrections need {code_bits}-bit codes (nominal {NOMINAL_CODE_BITS})",
            encoding_table.len()
        );
    }

    let codes: Vec<u64> = slots
        .iter()
        .map(|&a| {
            let c = lut.get(a).correction;
            encoding_table.iter().position(|&x| x == c).unwrap() as u64
        })
        .collect();
    let planes = codes.chunks(GROUP).flat_map(|group| {
        (0..code_bits).map(move |b| {
            group
                .iter()
                .enumerate()
                .fold(0u64, |acc, (j, &code)| acc | (code >> b & 1) << j)
        })
    });
    let mut packed = bits::pack_bits(planes, GROUP as u32);
    if packed.len() % 2 == 1 {
        packed.push(0);
    }
    let state = bits::pack_bits(
        slots.iter().map(|&a| lut.get(a).state_delta),
        cfg.syndrome_len as u32,
    );

    Ok(FrameClut {
        config: cfg,
        code_bits,
        encoding_table,
        packed,
        state,
    })
}

impl FrameClut {
    /// Rebuilds a table from its stored parts, as read from a file.
    pub fn from_parts(
        config: DecoderConfig,
        code_bits: u32,
        encoding_table: Vec<u64>,
        packed_words: &[u16],
        state: Vec<u8>,
    ) -> Result<Self> {
        check_shape(&config)?;
        let plane_bytes = (FRAME_ENTRIES * code_bits as usize).div_ceil(8);
        let state_bytes = (FRAME_ENTRIES * config.syndrome_len).div_ceil(8);
        if code_bits == 0
            || code_bits > 16
            || encoding_table.is_empty()
            || encoding_table.len() > 1 << code_bits
            || packed_words.len() != plane_bytes.div_ceil(2)
            || state.len() != state_bytes
        {
            return Err(Error::Format("inconsistent frame table sizes".into()));
        }
        if encoding_table.iter().any(|&c| !bits::fits(c, config.num_data)) {
            return Err(Error::Format("encoding table pattern wider than the code".into()));
        }
        let packed: Vec<u8> = packed_words.iter().flat_map(|w| w.to_le_bytes()).collect();
        let clut = Self {
            config,
            code_bits,
            encoding_table,
            packed,
            state,
        };
        if (0..FRAME_ENTRIES).any(|s| clut.code_at(s) as usize >= clut.encoding_table.len()) {
            return Err(Error::Format("code outside the encoding table".into()));
        }
        Ok(clut)
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn clut_config(&self) -> ClutConfig {
        ClutConfig {
            base: self.config,
            weight_cutoff: FRAME_CUTOFF,
            scheme: Scheme::Frame,
        }
    }

    pub fn len(&self) -> usize {
        FRAME_ENTRIES
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn code_bits(&self) -> u32 {
        self.code_bits
    }

    /// Correction pattern for each code.
    pub fn encoding_table(&self) -> &[u64] {
        &self.encoding_table
    }

    pub fn packed_words(&self) -> Vec<u16> {
        self.packed
            .chunks_exact(2)
            .map(|w| u16::from_le_bytes([w[0], w[1]]))
            .collect()
    }

    pub fn state_bytes(&self) -> &[u8] {
        &self.state
    }

    pub fn payload_bytes(&self) -> u64 {
        (self.packed.len() + self.state.len()) as u64
    }

    /// Encoding table size with each pattern rounded up to whole bytes.
    pub fn encoding_table_bytes(&self) -> u64 {
        (self.encoding_table.len() * self.config.num_data.div_ceil(8)) as u64
    }

    fn code_at(&self, slot: usize) -> u64 {
        let k = self.code_bits as usize;
        let base = (slot / GROUP) * GROUP * k;
        let lane = slot % GROUP;
        (0..k).fold(0u64, |acc, b| {
            acc | bits::read_bits(&self.packed, base + b * GROUP + lane, 1) << b
        })
    }

    pub fn lookup(&self, address: u64) -> Option<LutEntry> {
        if address >= self.config.num_addresses() {
            return None;
        }
        if self.config.oldest_layer(address) == 0 {
            return Some(LutEntry::ZERO);
        }
        let s = slot(address)?;
        let width = self.config.syndrome_len;
        Some(LutEntry {
            correction: self.encoding_table[self.code_at(s) as usize],
            state_delta: bits::read_bits(&self.state, s * width, width as u32),
        })
    }
}
