//! Binary table files.
//!
//! All integers are little-endian. A 24-byte header
//!
//! ```text
//! magic "LQEC" | version u16 | flags u16 | d u8 | m u8 | stab_type u8 |
//! weight_cutoff u8 | address_bits u8 | entry_bits u8 | reserved [u8; 2] |
//! entry_count u64
//! ```
//!
//! is followed by the payload and a CRC32 of the payload. Flag bit 0 marks a
//! sparse table, bit 1 a compressed one.
//!
//! * dense: entries packed back to back at `entry_bits` each
//! * sparse: `(address u32, entry)` records sorted by address, each entry in
//!   `ceil(entry_bits / 8)` bytes
//! * compressed: scheme id u8, cutoff u8, then for frames `code_bits u8`,
//!   `code count u16`, the encoding table (one `ceil(n_d / 8)`-byte pattern
//!   per code), `word count u16`, the packed 16-bit words and the state
//!   nibbles; for ranks the entries packed in rank order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::bits;
use crate::clut::{Clut, FrameClut, RankClut, Scheme};
use crate::error::{Error, Result};
use crate::layout::StabType;
use crate::lut::{DecoderConfig, Lut, SparseLut};

pub const MAGIC: [u8; 4] = *b"LQEC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

const FLAG_SPARSE: u16 = 1;
const FLAG_CLUT: u16 = 1 << 1;
const FULL_CUTOFF: u8 = 255;

/// Any table the crate can store on disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Table {
    Dense(Lut),
    Sparse(SparseLut),
    Compressed(Clut),
}

impl Table {
    pub fn config(&self) -> &DecoderConfig {
        match self {
            Table::Dense(t) => t.config(),
            Table::Sparse(t) => t.config(),
            Table::Compressed(t) => t.base(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Table::Dense(_) => "dense",
            Table::Sparse(_) => "sparse",
            Table::Compressed(_) => "compressed",
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format("truncated payload".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn uint(&mut self, n: usize) -> Result<u64> {
        let mut b = [0u8; 8];
        b[..n].copy_from_slice(self.take(n)?);
        Ok(u64::from_le_bytes(b))
    }
}

fn header(cfg: &DecoderConfig, flags: u16, cutoff: u8, count: u64) -> Vec<u8> {
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(&MAGIC);
    h.extend_from_slice(&VERSION.to_le_bytes());
    h.extend_from_slice(&flags.to_le_bytes());
    h.extend_from_slice(&[
        cfg.distance as u8,
        cfg.rounds as u8,
        cfg.stab_type.code(),
        cutoff,
        cfg.address_bits() as u8,
        cfg.entry_bits() as u8,
        0,
        0,
    ]);
    h.extend_from_slice(&count.to_le_bytes());
    h
}

fn entry_bytes(cfg: &DecoderConfig) -> usize {
    (cfg.entry_bits() as usize).div_ceil(8)
}

pub fn to_bytes(table: &Table) -> Vec<u8> {
    let cfg = table.config();
    let (mut out, payload) = match table {
        Table::Dense(t) => (
            header(cfg, 0, FULL_CUTOFF, t.len() as u64),
            bits::pack_bits(t.packed().iter().copied(), cfg.entry_bits()),
        ),
        Table::Sparse(t) => {
            let eb = entry_bytes(cfg);
            let mut p = Vec::with_capacity(t.len() * (4 + eb));
            for &(a, e) in t.records() {
                p.extend_from_slice(&a.to_le_bytes());
                p.extend_from_slice(&e.to_le_bytes()[..eb]);
            }
            (header(cfg, FLAG_SPARSE, t.weight_cutoff() as u8, t.len() as u64), p)
        }
        Table::Compressed(c) => {
            let cc = c.config();
            let mut p = vec![cc.scheme.id(), cc.weight_cutoff as u8];
            match c {
                Clut::Frame(f) => {
                    let pb = cfg.num_data.div_ceil(8);
                    p.push(f.code_bits() as u8);
                    p.extend_from_slice(&(f.encoding_table().len() as u16).to_le_bytes());
                    for &pat in f.encoding_table() {
                        p.extend_from_slice(&pat.to_le_bytes()[..pb]);
                    }
                    let words = f.packed_words();
                    p.extend_from_slice(&(words.len() as u16).to_le_bytes());
                    for w in words {
                        p.extend_from_slice(&w.to_le_bytes());
                    }
                    p.extend_from_slice(f.state_bytes());
                }
                Clut::Rank(r) => p.extend_from_slice(r.packed_entries()),
            }
            (header(cfg, FLAG_CLUT, cc.weight_cutoff as u8, c.stored_entries() as u64), p)
        }
    };
    let crc = crc32fast::hash(&payload);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn from_bytes(buf: &[u8]) -> Result<Table> {
    if buf.len() < HEADER_LEN + 4 {
        return Err(Error::Format("file shorter than header".into()));
    }
    if buf[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut h = Cursor { buf: &buf[..HEADER_LEN], pos: 4 };
    let version = h.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let flags = h.u16()?;
    let (d, m, t, cutoff, abits, ebits) = (h.u8()?, h.u8()?, h.u8()?, h.u8()?, h.u8()?, h.u8()?);
    h.take(2)?;
    let count = h.uint(8)?;

    let stab_type = StabType::from_code(t).ok_or_else(|| Error::Format(format!("bad stabilizer type {t}")))?;
    let cfg = DecoderConfig::for_distance(usize::from(d), usize::from(m), stab_type)?;
    if cfg.address_bits() != u32::from(abits) || cfg.entry_bits() != u32::from(ebits) {
        return Err(Error::Format(format!(
            "header widths {abits}/{ebits} do not match {cfg}"
        )));
    }

    let payload = &buf[HEADER_LEN..buf.len() - 4];
    let stored = u32::from_le_bytes(buf[buf.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let mut p = Cursor { buf: payload, pos: 0 };

    let table = if flags & FLAG_CLUT != 0 {
        let scheme_id = p.u8()?;
        let w = u32::from(p.u8()?);
        let scheme = Scheme::from_id(scheme_id)
            .ok_or_else(|| Error::Format(format!("unknown scheme {scheme_id}")))?;
        let clut = match scheme {
            Scheme::Frame => {
                let code_bits = u32::from(p.u8()?);
                let n = usize::from(p.u16()?);
                let pb = cfg.num_data.div_ceil(8);
                let table = (0..n).map(|_| p.uint(pb)).collect::<Result<Vec<_>>>()?;
                let nw = usize::from(p.u16()?);
                let words = (0..nw).map(|_| p.u16()).collect::<Result<Vec<_>>>()?;
                let rest = p.take(payload.len() - p.pos)?.to_vec();
                Clut::Frame(FrameClut::from_parts(cfg, code_bits, table, &words, rest)?)
            }
            Scheme::Rank => {
                let rest = p.take(payload.len() - p.pos)?.to_vec();
                Clut::Rank(RankClut::from_packed(cfg, w, rest)?)
            }
        };
        if clut.stored_entries() as u64 != count {
            return Err(Error::Format("entry count does not match header".into()));
        }
        Table::Compressed(clut)
    } else if flags & FLAG_SPARSE != 0 {
        let eb = entry_bytes(&cfg);
        let expected = count
            .checked_mul((4 + eb) as u64)
            .ok_or_else(|| Error::Format("entry count overflows".into()))?;
        if payload.len() as u64 != expected {
            return Err(Error::Format("payload length does not match entry count".into()));
        }
        let mut records = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let a = p.uint(4)? as u32;
            if u64::from(a) >= cfg.num_addresses() {
                return Err(Error::Format(format!("address {a:#x} out of range")));
            }
            records.push((a, p.uint(eb)? & bits::low_mask(cfg.entry_bits() as usize)));
        }
        Table::Sparse(SparseLut::from_sorted(cfg, u32::from(cutoff), records)?)
    } else {
        if count != cfg.num_addresses() {
            return Err(Error::Format("dense entry count does not match address width".into()));
        }
        let width = cfg.entry_bits();
        if payload.len() as u64 != (count * u64::from(width)).div_ceil(8) {
            return Err(Error::Format("payload length does not match entry count".into()));
        }
        let packed = p.take(payload.len())?;
        let entries = (0..count as usize)
            .map(|i| bits::read_bits(packed, i * width as usize, width))
            .collect();
        Table::Dense(Lut::from_packed(cfg, entries)?)
    };
    if p.pos != payload.len() {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(table)
}

pub fn write_table<W: Write>(mut w: W, table: &Table) -> Result<()> {
    w.write_all(&to_bytes(table))?;
    Ok(())
}

pub fn read_table<R: Read>(mut r: R) -> Result<Table> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    from_bytes(&buf)
}

pub fn save(path: &Path, table: &Table) -> Result<()> {
    fs::write(path, to_bytes(table))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Table> {
    from_bytes(&fs::read(path)?)
}
