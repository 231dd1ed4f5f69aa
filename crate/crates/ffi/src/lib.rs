//! C ABI over the simulator.
//!
//! Every function returns a status: `PIM_OK`, a positive simulator error
//! code, or a negative code for failures at the boundary itself. The
//! message of the last failure on the calling thread is available from
//! `pim_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pimdram::bits::BitRow;
use pimdram::buddy::{self, BitwiseOp, Operand};
use pimdram::command::{parse_trace, run_sequence, run_timed, CostLedger, DramCommand, RowAddr};
use pimdram::config::{config_from_text, load_config, parse_kv, SimConfig};
use pimdram::gsdram::{self, GsConfig};
use pimdram::rank::RankState;
use pimdram::rowclone::{self, RowRef};
use pimdram::Error;

pub const PIM_OK: i32 = 0;
pub const PIM_NULL_POINTER: i32 = -1;
pub const PIM_INVALID_UTF8: i32 = -2;
pub const PIM_BUFFER_TOO_SMALL: i32 = -3;
pub const PIM_PANIC: i32 = -4;
pub const PIM_BAD_OP: i32 = -5;

/// Opaque simulator: one rank with its timing and energy model.
pub struct PimSim {
    config: SimConfig,
    rank: RankState,
}

/// Cost of one call.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PimCost {
    pub elapsed_ns: f64,
    pub energy_nj: f64,
    pub bus_bytes: u64,
    pub commands: u64,
}

impl From<CostLedger> for PimCost {
    fn from(l: CostLedger) -> Self {
        PimCost {
            elapsed_ns: l.elapsed_ns(),
            energy_nj: l.energy,
            bus_bytes: l.bus_bytes,
            commands: l.counts.total(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PimGeometry {
    pub chips: u32,
    pub banks: u32,
    pub subarrays: u32,
    pub rows_per_subarray: u32,
    /// Rows per subarray open to data; the rest are reserved.
    pub data_rows: u32,
    pub row_bytes: u64,
    pub cacheline_bytes: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PimOp {
    Not = 0,
    And = 1,
    Or = 2,
    Nand = 3,
    Nor = 4,
    Xor = 5,
    Xnor = 6,
}

/// Decodes a `PimOp` value received as a plain integer.
fn bitwise_op(op: u32) -> Result<BitwiseOp, Failure> {
    Ok(match op {
        0 => BitwiseOp::Not,
        1 => BitwiseOp::And,
        2 => BitwiseOp::Or,
        3 => BitwiseOp::Nand,
        4 => BitwiseOp::Nor,
        5 => BitwiseOp::Xor,
        6 => BitwiseOp::Xnor,
        _ => return Err(Failure(PIM_BAD_OP, format!("unknown op {op}"))),
    })
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.code(), e.to_string())
    }
}

fn fail(code: i32, msg: &str) -> Failure {
    Failure(code, msg.to_string())
}

/// Runs `f`, recording any failure for `pim_last_error`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    let (code, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return PIM_OK,
        Ok(Err(Failure(code, msg))) => (code, msg),
        Err(_) => (PIM_PANIC, "panic inside the simulator".to_string()),
    };
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    code
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(PIM_NULL_POINTER, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PIM_INVALID_UTF8, "string is not UTF-8"))
}

unsafe fn sim_ref<'a>(p: *const PimSim) -> Result<&'a PimSim, Failure> {
    p.as_ref().ok_or_else(|| fail(PIM_NULL_POINTER, "null simulator"))
}

unsafe fn sim_mut<'a>(p: *mut PimSim) -> Result<&'a mut PimSim, Failure> {
    p.as_mut().ok_or_else(|| fail(PIM_NULL_POINTER, "null simulator"))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(PIM_NULL_POINTER, "null output"));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a simulator from a built-in profile name or config file path.
/// `overrides` may be null or hold `key = value` lines.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_new(profile: *const c_char, overrides: *const c_char, out: *mut *mut PimSim) -> i32 {
    guard(|| {
        let name = text(profile)?;
        let kv = if overrides.is_null() {
            Vec::new()
        } else {
            parse_kv(text(overrides)?)?
        };
        let config = load_config(name, &kv)?;
        let rank = RankState::new(config.geometry.clone())?;
        put(out, Box::into_raw(Box::new(PimSim { config, rank })))
    })
}

/// Creates a simulator from full `key = value` config text.
///
/// # Safety
/// `config` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_from_text(config: *const c_char, out: *mut *mut PimSim) -> i32 {
    guard(|| {
        let config = config_from_text(text(config)?, &[])?;
        let rank = RankState::new(config.geometry.clone())?;
        put(out, Box::into_raw(Box::new(PimSim { config, rank })))
    })
}

/// # Safety
/// `sim` must come from `pim_sim_new` and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_free(sim: *mut PimSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// # Safety
/// `sim` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_geometry(sim: *const PimSim, out: *mut PimGeometry) -> i32 {
    guard(|| {
        let g = &sim_ref(sim)?.config.geometry;
        put(
            out,
            PimGeometry {
                chips: g.chips_per_rank,
                banks: g.banks_per_chip,
                subarrays: g.subarrays_per_bank,
                rows_per_subarray: g.rows_per_subarray,
                data_rows: g.layout().data_rows,
                row_bytes: g.row_bytes(),
                cacheline_bytes: g.cacheline_size,
            },
        )
    })
}

/// Overwrites a row without cost. `words` holds `row_bytes / 8` words.
///
/// # Safety
/// `sim` must be valid; `words` must point to `len` readable words.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_set_row(
    sim: *mut PimSim,
    bank: u32,
    subarray: u32,
    row: u32,
    words: *const u64,
    len: usize,
) -> i32 {
    guard(|| {
        let s = sim_mut(sim)?;
        if words.is_null() {
            return Err(fail(PIM_NULL_POINTER, "null words"));
        }
        let bits = s.config.geometry.row_bits();
        if len != bits / 64 {
            return Err(Error::WrongWidth { expected: bits / 64, got: len }.into());
        }
        let data = std::slice::from_raw_parts(words, len).to_vec();
        s.rank.set_row(bank, subarray, row, BitRow::from_words(bits, data))?;
        Ok(())
    })
}

/// Reads a row without cost into `out`, which holds `len` words.
///
/// # Safety
/// `sim` must be valid; `out` must point to `len` writable words.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_get_row(
    sim: *const PimSim,
    bank: u32,
    subarray: u32,
    row: u32,
    out: *mut u64,
    len: usize,
) -> i32 {
    guard(|| {
        let s = sim_ref(sim)?;
        if out.is_null() {
            return Err(fail(PIM_NULL_POINTER, "null output"));
        }
        let r = s.rank.row(bank, subarray, row)?;
        if len < r.words().len() {
            return Err(fail(PIM_BUFFER_TOO_SMALL, "row buffer too small"));
        }
        ptr::copy_nonoverlapping(r.words().as_ptr(), out, r.words().len());
        Ok(())
    })
}

/// Runs a DRAM command trace. `cost` may be null.
///
/// # Safety
/// `sim` must be valid; `trace` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_run_trace(sim: *mut PimSim, trace: *const c_char, cost: *mut PimCost) -> i32 {
    guard(|| {
        let s = sim_mut(sim)?;
        let cmds = parse_trace(text(trace)?, &s.config.geometry)?;
        let r = run_timed(&mut s.rank, cmds, &s.config.timing)?;
        if !cost.is_null() {
            cost.write(r.ledger.into());
        }
        Ok(())
    })
}

/// Copies `src_row` to `dst_row` of one subarray with two back-to-back
/// activations. `cost` may be null.
///
/// # Safety
/// `sim` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pim_rowclone_fpm(
    sim: *mut PimSim,
    bank: u32,
    subarray: u32,
    src_row: u32,
    dst_row: u32,
    cost: *mut PimCost,
) -> i32 {
    guard(|| {
        let s = sim_mut(sim)?;
        let l = rowclone::copy_fpm(
            &mut s.rank,
            RowRef::new(bank, subarray, src_row),
            RowRef::new(bank, subarray, dst_row),
            &s.config.timing,
        )?;
        if !cost.is_null() {
            cost.write(l.into());
        }
        Ok(())
    })
}

/// `dk = op(di, dj)` in one subarray, `op` being a `PimOp` value; `dj`
/// is ignored for `Not`. `cost` may be null.
///
/// # Safety
/// `sim` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pim_buddy_execute(
    sim: *mut PimSim,
    op: u32,
    bank: u32,
    subarray: u32,
    di: u32,
    dj: u32,
    dk: u32,
    cost: *mut PimCost,
) -> i32 {
    guard(|| {
        let s = sim_mut(sim)?;
        let at = |row| Operand { bank, subarray, row };
        let p = buddy::synthesize(bitwise_op(op)?, at(di), Some(at(dj)), at(dk), &s.config.geometry)?;
        let (l, _) = buddy::execute(&mut s.rank, &p, &s.config.timing)?;
        if !cost.is_null() {
            cost.write(l.into());
        }
        Ok(())
    })
}

/// Result throughput in GiB/s of `banks` banks running `op` back to back.
///
/// # Safety
/// `sim` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pim_buddy_throughput(sim: *const PimSim, op: u32, banks: u32, out: *mut f64) -> i32 {
    guard(|| {
        let s = sim_ref(sim)?;
        put(out, buddy::throughput(bitwise_op(op)?, banks, &s.config.timing, &s.config.geometry))
    })
}

/// Opens a row, gathers `(pattern, column)` into `out` (one word per chip,
/// ascending value order) and closes the row. `cost` may be null.
///
/// # Safety
/// `sim` must be valid; `out` must point to `len` writable words.
#[no_mangle]
pub unsafe extern "C" fn pim_gsdram_gather(
    sim: *mut PimSim,
    bank: u32,
    subarray: u32,
    row: u32,
    pattern: u32,
    column: u32,
    out: *mut u64,
    len: usize,
    cost: *mut PimCost,
) -> i32 {
    guard(|| {
        let s = sim_mut(sim)?;
        if out.is_null() {
            return Err(fail(PIM_NULL_POINTER, "null output"));
        }
        let chips = s.config.geometry.chips_per_rank;
        if len < chips as usize {
            return Err(fail(PIM_BUFFER_TOO_SMALL, "gather buffer too small"));
        }
        let bits = chips.trailing_zeros();
        let cfg = GsConfig::new(chips, bits, bits)?;
        let m = &s.config.timing;
        let open = DramCommand::Activate {
            bank,
            subarray,
            row: RowAddr::Row(row),
        };
        let mut l = run_sequence(&mut s.rank, &[open], m)?.ledger;
        let gathered = gsdram::gather(&mut s.rank, bank, pattern, column, &cfg, m);
        // close the row even when the gather failed
        l += run_sequence(&mut s.rank, &[DramCommand::Precharge { bank }], m)?.ledger;
        let (words, g) = gathered?;
        l += g;
        ptr::copy_nonoverlapping(words.as_ptr(), out, words.len());
        if !cost.is_null() {
            cost.write(l.into());
        }
        Ok(())
    })
}

/// 1 when every zero and constant row still holds its value, else 0.
///
/// # Safety
/// `sim` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pim_sim_reserved_rows_intact(sim: *const PimSim, out: *mut u8) -> i32 {
    guard(|| {
        let s = sim_ref(sim)?;
        put(out, s.rank.reserved_rows_intact() as u8)
    })
}
