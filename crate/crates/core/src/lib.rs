pub mod bits;
pub mod clut;
pub mod decoder;
pub mod error;
pub mod format;
pub mod harness;
pub mod layout;
pub mod lut;
pub mod matching;
pub mod noise;
