//! Small helpers for bit-vectors stored in machine words.
//!
//! Every bit-vector in the crate is a `u64` (or `u128` for space-time
//! signatures) where bit `i` is element `i`.

#[inline]
pub fn parity(x: u64) -> bool {
    x.count_ones() & 1 == 1
}

/// Mask with the low `n` bits set.
#[inline]
pub fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
pub fn fits(value: u64, n: usize) -> bool {
    value & !low_mask(n) == 0
}

/// Iterate set bit positions, lowest first.
pub fn ones(mut x: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if x == 0 {
            None
        } else {
            let i = x.trailing_zeros() as usize;
            x &= x - 1;
            Some(i)
        }
    })
}

pub fn to_hex(x: u64) -> String {
    format!("{x:x}")
}

pub fn from_hex(s: &str) -> Option<u64> {
    u64::from_str_radix(s, 16).ok()
}

/// Packs `width`-bit values back to back, least-significant bit first.
/// The last byte is zero-padded.
pub fn pack_bits<I: IntoIterator<Item = u64>>(values: I, width: u32) -> Vec<u8> {
    let mut out = Vec::new();
    let mut acc: u128 = 0;
    let mut filled = 0u32;
    for v in values {
        acc |= u128::from(v & low_mask(width as usize)) << filled;
        filled += width;
        while filled >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out.push(acc as u8);
    }
    out
}

/// Reads `width` bits (at most 64) starting at bit `offset`. Bits past the
/// end of `bytes` read as zero.
pub fn read_bits(bytes: &[u8], offset: usize, width: u32) -> u64 {
    let first = offset / 8;
    let shift = offset % 8;
    let needed = (shift + width as usize).div_ceil(8);
    let mut acc: u128 = 0;
    for (i, &b) in bytes.iter().skip(first).take(needed).enumerate() {
        acc |= u128::from(b) << (8 * i);
    }
    (acc >> shift) as u64 & low_mask(width as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ones_lists_positions() {
        assert_eq!(ones(0b1010_0001).collect::<Vec<_>>(), vec![0, 5, 7]);
        assert_eq!(ones(0).count(), 0);
    }

    #[test]
    fn masks() {
        assert_eq!(low_mask(0), 0);
        assert_eq!(low_mask(9), 0x1ff);
        assert_eq!(low_mask(64), u64::MAX);
        assert!(fits(0x1ff, 9));
        assert!(!fits(0x200, 9));
    }

    #[test]
    fn hex_round_trip() {
        assert_eq!(from_hex(&to_hex(0xdead_beef)), Some(0xdead_beef));
        assert_eq!(from_hex("zz"), None);
    }

    #[test]
    fn packing_known_layout() {
        // 13-bit values: 0x1abc then 0x0001.
        let bytes = pack_bits([0x1abc, 0x1], 13);
        assert_eq!(bytes, vec![0xbc, 0x3a, 0x00, 0x00]);
        assert_eq!(read_bits(&bytes, 0, 13), 0x1abc);
        assert_eq!(read_bits(&bytes, 13, 13), 1);
        assert_eq!(pack_bits(std::iter::empty(), 7), Vec::<u8>::new());
    }

    proptest! {
        #[test]
        fn pack_read_round_trip(width in 1u32..=64, values in proptest::collection::vec(any::<u64>(), 0..40)) {
            let bytes = pack_bits(values.iter().copied(), width);
            prop_assert_eq!(bytes.len(), (values.len() * width as usize).div_ceil(8));
            for (i, v) in values.iter().enumerate() {
                prop_assert_eq!(read_bits(&bytes, i * width as usize, width), v & low_mask(width as usize));
            }
        }
    }
}
