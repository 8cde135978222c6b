//! C interface to `lutqec`.
//!
//! All objects are opaque handles created by a `*_new`, `*_build` or
//! `*_load` function and released with the matching `*_free`. Functions
//! return an [`LqStatus`]; on failure a message is available from
//! [`lq_last_error`] on the same thread.
//!
//! Bit-vectors cross the boundary as `uint64_t` with bit `i` for data qubit
//! or stabilizer `i`. Stabilizer types are `0` for X and `1` for Z.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use lutqec::clut::{compress_frame, compress_rank, Clut, Scheme};
use lutqec::decoder::{logical_outcome, Backend, DecoderState};
use lutqec::error::Error;
use lutqec::format::{self, Table};
use lutqec::layout::{CodeLayout, StabType};
use lutqec::lut::LutBuilder;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    TableTooLarge = 3,
    Unsupported = 4,
    Format = 5,
    Io = 6,
    AlreadyFinished = 7,
    Panic = 8,
}

/// Table representation requested from [`lq_table_build`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LqTableKind {
    Dense = 0,
    Sparse = 1,
    Compressed = 2,
}

pub struct LqLayout {
    inner: CodeLayout,
}

pub struct LqTable {
    inner: Arc<Table>,
}

pub struct LqDecoder {
    // Declared before `_table` so it is dropped first.
    state: DecoderState<'static>,
    _table: Arc<Table>,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend_from_slice(msg.as_bytes());
    });
}

fn status_of(err: &Error) -> LqStatus {
    match err {
        Error::TableTooLarge { .. } => LqStatus::TableTooLarge,
        Error::UnsupportedScheme(_) => LqStatus::Unsupported,
        Error::Format(_) | Error::Checksum { .. } => LqStatus::Format,
        Error::Io(_) => LqStatus::Io,
        Error::AlreadyFinished => LqStatus::AlreadyFinished,
        _ => LqStatus::InvalidArgument,
    }
}

fn fail(status: LqStatus, msg: impl Into<String>) -> LqStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), LqStatus>) -> LqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LqStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LqStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, LqStatus>;
}

impl<T> OrStatus<T> for lutqec::error::Result<T> {
    fn or_status(self) -> Result<T, LqStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, LqStatus> {
    p.as_ref().ok_or_else(|| fail(LqStatus::NullPointer, "null handle"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, LqStatus> {
    p.as_mut().ok_or_else(|| fail(LqStatus::NullPointer, "null output pointer"))
}

fn stab_type(code: u8) -> Result<StabType, LqStatus> {
    StabType::from_code(code).ok_or_else(|| fail(LqStatus::InvalidArgument, format!("bad stabilizer type {code}")))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, LqStatus> {
    if p.is_null() {
        return Err(fail(LqStatus::NullPointer, "null path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(LqStatus::InvalidArgument, "path is not UTF-8"))
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length without the terminator. `buf` may be null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn lq_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

#[no_mangle]
pub unsafe extern "C" fn lq_layout_new(distance: u32, out_layout: *mut *mut LqLayout) -> LqStatus {
    guard(|| {
        let slot = out(out_layout)?;
        let inner = CodeLayout::build(distance as usize).or_status()?;
        *slot = Box::into_raw(Box::new(LqLayout { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lq_layout_free(layout: *mut LqLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

#[no_mangle]
pub unsafe extern "C" fn lq_layout_num_data(layout: *const LqLayout) -> u32 {
    layout.as_ref().map_or(0, |l| l.inner.num_data() as u32)
}

/// Number of stabilizers of `stab_type`, or 0 for a null handle or bad type.
#[no_mangle]
pub unsafe extern "C" fn lq_layout_num_stabilizers(layout: *const LqLayout, stab_type: u8) -> u32 {
    match (layout.as_ref(), StabType::from_code(stab_type)) {
        (Some(l), Some(t)) => l.inner.num_stabilizers(t) as u32,
        _ => 0,
    }
}

#[no_mangle]
pub unsafe extern "C" fn lq_layout_syndrome(
    layout: *const LqLayout,
    stab_type: u8,
    errors: u64,
    out_syndrome: *mut u64,
) -> LqStatus {
    guard(|| {
        let l = deref(layout)?;
        let t = self::stab_type(stab_type)?;
        let slot = out(out_syndrome)?;
        *slot = l.inner.syndrome_of(t, errors).or_status()?;
        Ok(())
    })
}

/// Logical outcome of a final data measurement after applying the X-error
/// log. Writes 1 for a logical error.
#[no_mangle]
pub unsafe extern "C" fn lq_layout_logical_outcome(
    layout: *const LqLayout,
    data_measurement: u64,
    x_error_log: u64,
    out_error: *mut u8,
) -> LqStatus {
    guard(|| {
        let l = deref(layout)?;
        let slot = out(out_error)?;
        *slot = u8::from(logical_outcome(&l.inner, data_measurement, x_error_log));
        Ok(())
    })
}

/// Builds a table for `rounds` layers of `stab_type` syndromes.
///
/// `weight_cutoff` bounds the address weight for sparse and compressed
/// tables; 0 picks the default (full table for the frame scheme, 5
/// otherwise). Dense tables above 16 address bits need `force_full != 0`.
#[no_mangle]
pub unsafe extern "C" fn lq_table_build(
    layout: *const LqLayout,
    rounds: u32,
    stab_type: u8,
    kind: LqTableKind,
    weight_cutoff: u32,
    force_full: u8,
    out_table: *mut *mut LqTable,
) -> LqStatus {
    guard(|| {
        let l = deref(layout)?;
        let t = self::stab_type(stab_type)?;
        let slot = out(out_table)?;
        let builder = LutBuilder::new(&l.inner, rounds as usize, t).or_status()?;
        let cutoff = (weight_cutoff > 0).then_some(weight_cutoff);
        let table = match kind {
            LqTableKind::Dense => Table::Dense(builder.build_full(force_full != 0).or_status()?),
            LqTableKind::Sparse => Table::Sparse(builder.build_weight_bounded(cutoff.unwrap_or(5)).or_status()?),
            LqTableKind::Compressed => {
                Table::Compressed(lutqec::harness::build_clut(&builder, cutoff, force_full != 0).or_status()?)
            }
        };
        *slot = Box::into_raw(Box::new(LqTable { inner: Arc::new(table) }));
        Ok(())
    })
}

/// Compresses a dense or sparse table. `scheme` is 0 for the frame scheme
/// (dense d=3, m=2 only) and 1 for the rank scheme.
#[no_mangle]
pub unsafe extern "C" fn lq_table_compress(
    table: *const LqTable,
    scheme: u8,
    weight_cutoff: u32,
    out_table: *mut *mut LqTable,
) -> LqStatus {
    guard(|| {
        let src = deref(table)?;
        let slot = out(out_table)?;
        let scheme =
            Scheme::from_id(scheme).ok_or_else(|| fail(LqStatus::InvalidArgument, format!("bad scheme {scheme}")))?;
        let clut = match (scheme, &*src.inner) {
            (Scheme::Frame, Table::Dense(lut)) => Clut::Frame(compress_frame(lut).or_status()?),
            (Scheme::Rank, Table::Dense(lut)) => {
                let w = if weight_cutoff > 0 { weight_cutoff } else { lut.config().address_bits() };
                Clut::Rank(compress_rank(&lutqec::lut::SparseLut::from_dense(lut, w), w).or_status()?)
            }
            (Scheme::Rank, Table::Sparse(sp)) => {
                let w = if weight_cutoff > 0 { weight_cutoff } else { sp.weight_cutoff() };
                Clut::Rank(compress_rank(sp, w).or_status()?)
            }
            (_, Table::Compressed(_)) => return Err(fail(LqStatus::InvalidArgument, "table is already compressed")),
            (Scheme::Frame, Table::Sparse(_)) => {
                return Err(fail(LqStatus::Unsupported, "frame scheme needs a dense table"))
            }
        };
        *slot = Box::into_raw(Box::new(LqTable { inner: Arc::new(Table::Compressed(clut)) }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lq_table_load(path: *const c_char, out_table: *mut *mut LqTable) -> LqStatus {
    guard(|| {
        let path = path_arg(path)?;
        let slot = out(out_table)?;
        let table = format::load(path).or_status()?;
        *slot = Box::into_raw(Box::new(LqTable { inner: Arc::new(table) }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lq_table_save(table: *const LqTable, path: *const c_char) -> LqStatus {
    guard(|| {
        let t = deref(table)?;
        let path = path_arg(path)?;
        format::save(path, &t.inner).or_status()
    })
}

/// Releases a table. Decoders created from it keep their own reference.
#[no_mangle]
pub unsafe extern "C" fn lq_table_free(table: *mut LqTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

#[no_mangle]
pub unsafe extern "C" fn lq_table_address_bits(table: *const LqTable) -> u32 {
    table.as_ref().map_or(0, |t| t.inner.config().address_bits())
}

/// Stored payload size in bytes: packed entries for dense and sparse
/// tables, the compressed payload otherwise.
#[no_mangle]
pub unsafe extern "C" fn lq_table_payload_bytes(table: *const LqTable) -> u64 {
    match table.as_ref().map(|t| &*t.inner) {
        Some(Table::Dense(l)) => l.config().table_bytes(),
        Some(Table::Sparse(s)) => s.len() as u64 * u64::from(s.config().entry_bits()).div_ceil(8),
        Some(Table::Compressed(c)) => c.payload_bytes(),
        None => 0,
    }
}

/// Looks up `address`. `out_found` is set to 0 when the table does not
/// store the address, in which case both outputs are zeroed.
#[no_mangle]
pub unsafe extern "C" fn lq_table_lookup(
    table: *const LqTable,
    address: u64,
    out_correction: *mut u64,
    out_state_delta: *mut u64,
    out_found: *mut u8,
) -> LqStatus {
    guard(|| {
        let t = deref(table)?;
        let (c, s, f) = (out(out_correction)?, out(out_state_delta)?, out(out_found)?);
        t.inner.config().check_address(address).or_status()?;
        let entry = Backend::lookup(&*t.inner, address);
        let e = entry.unwrap_or_default();
        *c = e.correction;
        *s = e.state_delta;
        *f = u8::from(entry.is_some());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lq_decoder_new(table: *const LqTable, out_decoder: *mut *mut LqDecoder) -> LqStatus {
    guard(|| {
        let t = deref(table)?;
        let slot = out(out_decoder)?;
        let owned = Arc::clone(&t.inner);
        // SAFETY: the Arc is stored next to the state and outlives it; the
        // heap allocation behind it does not move.
        let backend: &'static Table = &*Arc::as_ptr(&owned);
        let state = DecoderState::new(backend);
        *slot = Box::into_raw(Box::new(LqDecoder { state, _table: owned }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lq_decoder_free(decoder: *mut LqDecoder) {
    if !decoder.is_null() {
        drop(Box::from_raw(decoder));
    }
}

/// Feeds one cycle's syndrome. `out_correction` (may be null) receives the
/// correction committed this cycle, 0 while the window is filling.
#[no_mangle]
pub unsafe extern "C" fn lq_decoder_step(decoder: *mut LqDecoder, syndrome: u64, out_correction: *mut u64) -> LqStatus {
    guard(|| {
        let d = out(decoder)?;
        let c = d.state.step(syndrome).or_status()?;
        if let Some(slot) = out_correction.as_mut() {
            *slot = c.unwrap_or(0);
        }
        Ok(())
    })
}

/// Flushes the window. Pass `has_final != 0` with the syndrome computed
/// from the final data measurement for the Z-type decoder. Writes the
/// accumulated error log.
#[no_mangle]
pub unsafe extern "C" fn lq_decoder_finish(
    decoder: *mut LqDecoder,
    has_final: u8,
    final_syndrome: u64,
    out_error_log: *mut u64,
) -> LqStatus {
    guard(|| {
        let d = out(decoder)?;
        let slot = out(out_error_log)?;
        *slot = d.state.finish((has_final != 0).then_some(final_syndrome)).or_status()?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lq_decoder_error_log(decoder: *const LqDecoder) -> u64 {
    decoder.as_ref().map_or(0, |d| d.state.error_log())
}

/// Number of lookups that missed the table so far.
#[no_mangle]
pub unsafe extern "C" fn lq_decoder_failures(decoder: *const LqDecoder) -> u64 {
    decoder.as_ref().map_or(0, |d| d.state.failures() as u64)
}
