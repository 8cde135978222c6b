//! Rotated surface code layouts.
//!
//! Data qubits sit on a `d x d` grid and are numbered row-major:
//! qubit `(r, c)` has index `r * d + c`. Stabilizers live on the plaquettes
//! of a `(d + 1) x (d + 1)` grid; plaquette `(i, j)` touches data qubits
//! `(i - 1 .. i, j - 1 .. j)` that exist on the lattice.
//!
//! Checkerboard coloring: a plaquette with `i + j` odd is an X stabilizer,
//! `i + j` even is a Z stabilizer. Weight-2 X stabilizers sit on the top and
//! bottom edges, weight-2 Z stabilizers on the left and right edges. For
//! even `d` this gives one more X than Z stabilizer (8 X / 7 Z at `d = 4`).
//!
//! With this orientation X errors (detected by Z stabilizers) terminate on
//! the top and bottom rows, so logical X runs down the left column. Z
//! errors terminate on the left and right columns and logical Z runs along
//! the top row.

use std::fmt;

use crate::bits;
use crate::error::{Error, Result};

/// Largest distance whose data qubits fit in one `u64` bit-vector.
pub const MAX_DISTANCE: usize = 8;

/// Stabilizer type. Z stabilizers detect X errors and vice versa.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabType {
    X,
    Z,
}

impl StabType {
    pub const BOTH: [StabType; 2] = [StabType::X, StabType::Z];

    /// Wire code used in table files (0 = X, 1 = Z).
    pub fn code(self) -> u8 {
        match self {
            StabType::X => 0,
            StabType::Z => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(StabType::X),
            1 => Some(StabType::Z),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StabType::X => "x",
            StabType::Z => "z",
        }
    }
}

impl fmt::Display for StabType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabType::X => "X",
            StabType::Z => "Z",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stabilizer {
    /// Plaquette coordinates on the `(d + 1) x (d + 1)` grid.
    pub row: usize,
    pub col: usize,
    /// Data qubit indices, ascending.
    pub support: Vec<usize>,
    pub mask: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeLayout {
    distance: usize,
    x_stabilizers: Vec<Stabilizer>,
    z_stabilizers: Vec<Stabilizer>,
    logical_z: u64,
    logical_x: u64,
}

impl CodeLayout {
    pub fn build(distance: usize) -> Result<Self> {
        let d = distance;
        if !(2..=MAX_DISTANCE).contains(&d) {
            return Err(Error::InvalidDistance(d));
        }

        let mut x_stabilizers = Vec::new();
        let mut z_stabilizers = Vec::new();
        for i in 0..=d {
            for j in 0..=d {
                let on_row_edge = i == 0 || i == d;
                let on_col_edge = j == 0 || j == d;
                if on_row_edge && on_col_edge {
                    continue;
                }
                let is_x = (i + j) % 2 == 1;
                // Boundary plaquettes only exist for the type owning that edge.
                if on_row_edge && !is_x || on_col_edge && is_x {
                    continue;
                }
                let mut support = Vec::with_capacity(4);
                for r in i.saturating_sub(1)..=i.min(d - 1) {
                    for c in j.saturating_sub(1)..=j.min(d - 1) {
                        support.push(r * d + c);
                    }
                }
                let mask = support.iter().fold(0u64, |m, &q| m | 1 << q);
                let stab = Stabilizer { row: i, col: j, support, mask };
                if is_x {
                    x_stabilizers.push(stab);
                } else {
                    z_stabilizers.push(stab);
                }
            }
        }

        let logical_z = bits::low_mask(d);
        let logical_x = (0..d).fold(0u64, |m, r| m | 1 << (r * d));

        Ok(Self {
            distance: d,
            x_stabilizers,
            z_stabilizers,
            logical_z,
            logical_x,
        })
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn num_data(&self) -> usize {
        self.distance * self.distance
    }

    pub fn stabilizers(&self, t: StabType) -> &[Stabilizer] {
        match t {
            StabType::X => &self.x_stabilizers,
            StabType::Z => &self.z_stabilizers,
        }
    }

    pub fn num_stabilizers(&self, t: StabType) -> usize {
        self.stabilizers(t).len()
    }

    pub fn total_qubits(&self) -> usize {
        self.num_data() + self.x_stabilizers.len() + self.z_stabilizers.len()
    }

    /// Data qubits of the logical Z operator (top row).
    pub fn logical_z_support(&self) -> u64 {
        self.logical_z
    }

    /// Data qubits of the logical X operator (left column).
    pub fn logical_x_support(&self) -> u64 {
        self.logical_x
    }

    /// Indices of stabilizers of type `t` that contain data qubit `q`.
    pub fn stabilizers_of_qubit(&self, t: StabType, q: usize) -> Vec<usize> {
        self.stabilizers(t)
            .iter()
            .enumerate()
            .filter(|(_, s)| s.mask >> q & 1 == 1)
            .map(|(i, _)| i)
            .collect()
    }

    /// Data qubits touched by exactly one stabilizer of type `t`, i.e. the
    /// qubits whose error chains can end on the open boundary.
    pub fn boundary_qubits(&self, t: StabType) -> u64 {
        (0..self.num_data())
            .filter(|&q| self.stabilizers_of_qubit(t, q).len() == 1)
            .fold(0u64, |m, q| m | 1 << q)
    }

    /// Syndrome of `errors` measured by stabilizers of type `t`, with no
    /// range check. Bit `i` is the parity of `errors` on stabilizer `i`.
    #[inline]
    pub fn syndrome(&self, t: StabType, errors: u64) -> u64 {
        self.stabilizers(t)
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, s)| {
                acc | (u64::from(bits::parity(errors & s.mask)) << i)
            })
    }

    /// Checked form of [`CodeLayout::syndrome`].
    pub fn syndrome_of(&self, t: StabType, errors: u64) -> Result<u64> {
        check_len(errors, self.num_data())?;
        Ok(self.syndrome(t, errors))
    }
}

pub fn build_layout(distance: usize) -> Result<CodeLayout> {
    CodeLayout::build(distance)
}

pub(crate) fn check_len(value: u64, len: usize) -> Result<()> {
    if bits::fits(value, len) {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: len,
            value,
        })
    }
}
