//! Bulk copy and initialization inside DRAM.
//!
//! Fast parallel mode (FPM) copies a full row inside one subarray with two
//! back-to-back ACTIVATEs. Pipelined serial mode (PSM) copies cache lines
//! between banks with TRANSFER. Copies between subarrays of one bank go
//! through a temporary row in another bank. Zeroing is an FPM copy from the
//! subarray's reserved zero row.

use std::ops::Range;

use crate::command::{self, run_sequence, CostLedger, DramCommand, RowAddr};
use crate::config::{Geometry, Location, TimingEnergyModel};
use crate::error::{Error, Result};
use crate::rank::RankState;

/// A physical row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowRef {
    pub bank: u32,
    pub subarray: u32,
    pub row: u32,
}

impl RowRef {
    pub fn new(bank: u32, subarray: u32, row: u32) -> Self {
        RowRef {
            bank,
            subarray,
            row,
        }
    }

    pub fn of(loc: &Location) -> Self {
        RowRef::new(loc.bank, loc.subarray, loc.row)
    }
}

/// Rows the copy engine keeps for itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReservedRows {
    geometry_banks: u32,
    zero: u32,
    temp: u32,
}

impl ReservedRows {
    pub fn new(geometry: &Geometry) -> Self {
        let l = geometry.layout();
        ReservedRows {
            geometry_banks: geometry.banks_per_chip,
            zero: l.zero(),
            temp: l.staging(),
        }
    }

    pub fn zero_row(&self, bank: u32, subarray: u32) -> RowRef {
        RowRef::new(bank, subarray, self.zero)
    }

    pub fn temp_row(&self, bank: u32, subarray: u32) -> RowRef {
        RowRef::new(bank, subarray, self.temp)
    }

    /// Staging row for copies between subarrays of `bank`: subarray 0 of
    /// the lowest-numbered other bank.
    pub fn psm_temp(&self, bank: u32) -> Result<RowRef> {
        let other = (0..self.geometry_banks)
            .find(|&b| b != bank)
            .ok_or_else(|| Error::InvalidGeometry("intra-bank copy needs two banks".into()))?;
        Ok(self.temp_row(other, 0))
    }
}

fn check_writable(state: &RankState, dst: RowRef) -> Result<()> {
    state.subarray(dst.bank, dst.subarray)?;
    if !state.layout().is_data(dst.row) {
        return Err(Error::ReservedRow {
            bank: dst.bank,
            subarray: dst.subarray,
            row: dst.row,
        });
    }
    Ok(())
}

fn check_readable(state: &RankState, src: RowRef) -> Result<()> {
    state.subarray(src.bank, src.subarray)?;
    let rows = state.geometry().rows_per_subarray;
    if src.row >= rows {
        return Err(Error::OutOfRange {
            what: "row",
            value: src.row as u64,
            limit: rows as u64,
        });
    }
    Ok(())
}

fn act(r: RowRef) -> DramCommand {
    DramCommand::Activate {
        bank: r.bank,
        subarray: r.subarray,
        row: RowAddr::Row(r.row),
    }
}

fn pre(bank: u32) -> DramCommand {
    DramCommand::Precharge { bank }
}

fn require_precharged(state: &RankState, bank: u32) -> Result<()> {
    if !state.is_precharged(bank)? {
        return Err(Error::NotPrecharged { bank });
    }
    Ok(())
}

/// Copies a full row within one subarray: `ACT src; ACT dst; PRE`.
pub fn copy_fpm(
    state: &mut RankState,
    src: RowRef,
    dst: RowRef,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    if (src.bank, src.subarray) != (dst.bank, dst.subarray) {
        return Err(Error::CrossSubarray);
    }
    if src.row == dst.row {
        return Err(Error::SameRow);
    }
    check_readable(state, src)?;
    check_writable(state, dst)?;
    fpm_unchecked(state, src, dst, model)
}

fn fpm_unchecked(
    state: &mut RankState,
    src: RowRef,
    dst: RowRef,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    require_precharged(state, src.bank)?;
    Ok(run_sequence(state, &[act(src), act(dst), pre(src.bank)], model)?.ledger)
}

/// Copies a full row between two banks, one line per TRANSFER.
pub fn copy_psm_interbank(
    state: &mut RankState,
    src: RowRef,
    dst: RowRef,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    if src.bank == dst.bank {
        return Err(Error::SameBank(src.bank));
    }
    check_readable(state, src)?;
    check_writable(state, dst)?;
    let columns = state.geometry().columns_per_row();
    psm_unchecked(state, src, 0, dst, 0, columns, model)
}

/// `ACT src; ACT dst; TRANSFER x count; PRE src; PRE dst`.
fn psm_unchecked(
    state: &mut RankState,
    src: RowRef,
    src_col: u32,
    dst: RowRef,
    dst_col: u32,
    count: u32,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    require_precharged(state, src.bank)?;
    require_precharged(state, dst.bank)?;
    let mut cmds = vec![act(src), act(dst)];
    cmds.extend((0..count).map(|i| DramCommand::Transfer {
        src_bank: src.bank,
        src_column: src_col + i,
        dst_bank: dst.bank,
        dst_column: dst_col + i,
    }));
    cmds.push(pre(src.bank));
    cmds.push(pre(dst.bank));
    Ok(run_sequence(state, &cmds, model)?.ledger)
}

/// Copies a row to another subarray of the same bank in two PSM legs
/// through a temporary row in another bank.
pub fn copy_intrabank(
    state: &mut RankState,
    src: RowRef,
    dst: RowRef,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    if src.bank != dst.bank {
        return Err(Error::OutOfRange {
            what: "destination bank",
            value: dst.bank as u64,
            limit: src.bank as u64 + 1,
        });
    }
    if src.subarray == dst.subarray {
        return Err(Error::SameSubarray);
    }
    check_readable(state, src)?;
    check_writable(state, dst)?;
    let columns = state.geometry().columns_per_row();
    lines_via_temp(state, src, 0, dst, 0, columns, model)
}

fn lines_via_temp(
    state: &mut RankState,
    src: RowRef,
    src_col: u32,
    dst: RowRef,
    dst_col: u32,
    count: u32,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let tmp = ReservedRows::new(state.geometry()).psm_temp(src.bank)?;
    let a = psm_unchecked(state, src, src_col, tmp, src_col, count, model)?;
    let b = psm_unchecked(state, tmp, src_col, dst, dst_col, count, model)?;
    Ok(a + b)
}

/// Conventional copy over the channel: `ACT src; READ x n; PRE; ACT dst;
/// WRITE x n; PRE`.
pub fn copy_baseline(
    state: &mut RankState,
    src: RowRef,
    dst: RowRef,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    if src == dst {
        return Err(Error::SameRow);
    }
    check_readable(state, src)?;
    check_writable(state, dst)?;
    require_precharged(state, src.bank)?;
    require_precharged(state, dst.bank)?;
    let columns = state.geometry().columns_per_row();
    let mut cmds = vec![act(src)];
    cmds.extend((0..columns).map(|column| DramCommand::Read {
        bank: src.bank,
        column,
    }));
    cmds.push(pre(src.bank));
    let r = run_sequence(state, &cmds, model)?;
    let mut cmds = vec![act(dst)];
    cmds.extend(r.reads.into_iter().zip(0..).map(|(data, column)| DramCommand::Write {
        bank: dst.bank,
        column,
        data,
    }));
    cmds.push(pre(dst.bank));
    Ok(r.ledger + run_sequence(state, &cmds, model)?.ledger)
}

/// Conventional zeroing: `ACT dst; WRITE 0 x n; PRE`.
pub fn zero_baseline(
    state: &mut RankState,
    dst: RowRef,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    check_writable(state, dst)?;
    require_precharged(state, dst.bank)?;
    let g = state.geometry();
    let (columns, chips) = (g.columns_per_row(), g.chips_per_rank as usize);
    let mut cmds = vec![act(dst)];
    cmds.extend((0..columns).map(|column| DramCommand::Write {
        bank: dst.bank,
        column,
        data: vec![0; chips],
    }));
    cmds.push(pre(dst.bank));
    Ok(run_sequence(state, &cmds, model)?.ledger)
}

/// Zeroes one data row by FPM copy from its subarray's zero row.
pub fn zero_row(state: &mut RankState, dst: RowRef, model: &TimingEnergyModel) -> Result<CostLedger> {
    check_writable(state, dst)?;
    let zero = ReservedRows::new(state.geometry()).zero_row(dst.bank, dst.subarray);
    fpm_unchecked(state, zero, dst, model)
}

/// Zeroes `size` bytes at `dst`, one FPM per row. Rows are zeroed one
/// after another, so the cost is additive in the row count.
pub fn bulk_zero(
    state: &mut RankState,
    dst: u64,
    size: u64,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let g = state.geometry().clone();
    let row = g.row_bytes();
    if !dst.is_multiple_of(row) {
        return Err(Error::Misaligned {
            what: "zero destination",
            align: row,
        });
    }
    if !size.is_multiple_of(row) {
        return Err(Error::Misaligned {
            what: "zero size",
            align: row,
        });
    }
    if size > 0 {
        g.decode_address(dst + size - 1)?;
    }
    let mut total = CostLedger::default();
    for a in (dst..dst + size).step_by(row as usize) {
        state.fence();
        total += zero_row(state, RowRef::of(&g.decode_address(a)?), model)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpmPair {
    pub src_addr: u64,
    pub dst_addr: u64,
    pub src: RowRef,
    pub dst: RowRef,
}

/// A run of consecutive cache lines copied by TRANSFER.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsmLeg {
    pub src_addr: u64,
    pub dst_addr: u64,
    pub src: RowRef,
    pub src_column: u32,
    pub dst: RowRef,
    pub dst_column: u32,
    pub lines: u32,
}

/// A byte range left to the processor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpuRange {
    pub src_addr: u64,
    pub dst_addr: u64,
    pub len: u64,
}

/// Cache work that must precede the in-DRAM parts of a copy.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoherencePreamble {
    /// Source ranges whose dirty lines must be written back.
    pub flush: Vec<Range<u64>>,
    /// Destination ranges whose cached lines must be dropped.
    pub invalidate: Vec<Range<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CopyPlan {
    pub fpm_pairs: Vec<FpmPair>,
    pub psm_legs: Vec<PsmLeg>,
    pub cpu_words: Vec<CpuRange>,
    pub coherence_preamble: CoherencePreamble,
}

impl CopyPlan {
    /// Bytes covered by the in-DRAM parts.
    pub fn in_dram_bytes(&self, geometry: &Geometry) -> u64 {
        self.fpm_pairs.len() as u64 * geometry.row_bytes()
            + self.psm_legs.iter().map(|l| l.lines as u64).sum::<u64>() * geometry.cacheline_size as u64
    }
}

fn push_range(v: &mut Vec<Range<u64>>, r: Range<u64>) {
    match v.last_mut() {
        Some(last) if last.end == r.start => last.end = r.end,
        _ => v.push(r),
    }
}

/// Splits a copy into FPM rows, PSM line runs and processor byte ranges.
///
/// FPM is used for row-aligned rows whose source and destination share a
/// subarray, provided the whole request is at least `mcgr` bytes. Other
/// cache-line-aligned lines go to PSM; the rest is left to the processor.
pub fn plan_memcopy(src: u64, dst: u64, size: u64, geometry: &Geometry, mcgr: u64) -> Result<CopyPlan> {
    if src < dst + size && dst < src + size && size > 0 {
        return Err(Error::OverlappingRanges);
    }
    if size > 0 {
        geometry.decode_address(src + size - 1)?;
        geometry.decode_address(dst + size - 1)?;
    }
    let row = geometry.row_bytes();
    let line = geometry.cacheline_size as u64;
    let mut plan = CopyPlan::default();
    let mut o = 0;
    while o < size {
        let (s, d, left) = (src + o, dst + o, size - o);
        let sl = geometry.decode_address(s)?;
        let dl = geometry.decode_address(d)?;
        let step;
        if s % row == 0
            && d % row == 0
            && left >= row
            && size >= mcgr
            && (sl.bank, sl.subarray) == (dl.bank, dl.subarray)
        {
            plan.fpm_pairs.push(FpmPair {
                src_addr: s,
                dst_addr: d,
                src: RowRef::of(&sl),
                dst: RowRef::of(&dl),
            });
            step = row;
        } else if s % line == 0 && d % line == 0 && left >= line {
            let (sr, dr) = (RowRef::of(&sl), RowRef::of(&dl));
            match plan.psm_legs.last_mut() {
                Some(leg)
                    if leg.src == sr
                        && leg.dst == dr
                        && leg.src_column + leg.lines == sl.column
                        && leg.dst_column + leg.lines == dl.column
                        && leg.src_addr + leg.lines as u64 * line == s =>
                {
                    leg.lines += 1
                }
                _ => plan.psm_legs.push(PsmLeg {
                    src_addr: s,
                    dst_addr: d,
                    src: sr,
                    src_column: sl.column,
                    dst: dr,
                    dst_column: dl.column,
                    lines: 1,
                }),
            }
            step = line;
        } else {
            step = if s % line == d % line {
                (line - s % line).min(left)
            } else {
                left
            };
            match plan.cpu_words.last_mut() {
                Some(c) if c.src_addr + c.len == s => c.len += step,
                _ => plan.cpu_words.push(CpuRange {
                    src_addr: s,
                    dst_addr: d,
                    len: step,
                }),
            }
        }
        if step >= line && s % line == 0 {
            push_range(&mut plan.coherence_preamble.flush, s..s + step);
            push_range(&mut plan.coherence_preamble.invalidate, d..d + step);
        }
        o += step;
    }
    Ok(plan)
}

/// Reads one cache line over the channel.
pub fn read_line(state: &mut RankState, addr: u64, model: &TimingEnergyModel) -> Result<(Vec<u8>, CostLedger)> {
    let g = state.geometry().clone();
    let loc = g.decode_address(addr)?;
    require_precharged(state, loc.bank)?;
    let r = run_sequence(
        state,
        &[
            act(RowRef::of(&loc)),
            DramCommand::Read {
                bank: loc.bank,
                column: loc.column,
            },
            pre(loc.bank),
        ],
        model,
    )?;
    Ok((command::line_to_bytes(&r.reads[0], &g), r.ledger))
}

/// Writes one cache line over the channel.
pub fn write_line(
    state: &mut RankState,
    addr: u64,
    bytes: &[u8],
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let g = state.geometry().clone();
    let loc = g.decode_address(addr)?;
    let data = command::line_from_bytes(bytes, &g)?;
    require_precharged(state, loc.bank)?;
    let r = run_sequence(
        state,
        &[
            act(RowRef::of(&loc)),
            DramCommand::Write {
                bank: loc.bank,
                column: loc.column,
                data,
            },
            pre(loc.bank),
        ],
        model,
    )?;
    Ok(r.ledger)
}

/// Copies a byte range line by line through the processor.
pub fn copy_bytes_cpu(
    state: &mut RankState,
    r: CpuRange,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let line = state.geometry().cacheline_size as u64;
    let mut total = CostLedger::default();
    let mut o = 0;
    while o < r.len {
        let (s, d) = (r.src_addr + o, r.dst_addr + o);
        let n = (line - s % line).min(line - d % line).min(r.len - o);
        let (src_line, l1) = read_line(state, s - s % line, model)?;
        let (mut dst_line, l2) = read_line(state, d - d % line, model)?;
        let (so, dof) = ((s % line) as usize, (d % line) as usize);
        dst_line[dof..dof + n as usize].copy_from_slice(&src_line[so..so + n as usize]);
        total += l1 + l2 + write_line(state, d - d % line, &dst_line, model)?;
        o += n;
    }
    Ok(total)
}

/// Cost of each part of an executed plan.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlanCost {
    pub fpm: CostLedger,
    pub psm: CostLedger,
    pub cpu: CostLedger,
}

impl PlanCost {
    pub fn total(&self) -> CostLedger {
        self.fpm + self.psm + self.cpu
    }
}

/// Runs the DRAM side of a plan. The coherence preamble is the caller's
/// responsibility.
pub fn execute_plan(
    state: &mut RankState,
    plan: &CopyPlan,
    model: &TimingEnergyModel,
) -> Result<PlanCost> {
    let mut cost = PlanCost::default();
    for p in &plan.fpm_pairs {
        cost.fpm += fpm_unchecked(state, p.src, p.dst, model)?;
    }
    for leg in &plan.psm_legs {
        cost.psm += if leg.src.bank == leg.dst.bank {
            lines_via_temp(
                state,
                leg.src,
                leg.src_column,
                leg.dst,
                leg.dst_column,
                leg.lines,
                model,
            )?
        } else {
            psm_unchecked(
                state,
                leg.src,
                leg.src_column,
                leg.dst,
                leg.dst_column,
                leg.lines,
                model,
            )?
        };
    }
    for &r in &plan.cpu_words {
        cost.cpu += copy_bytes_cpu(state, r, model)?;
    }
    Ok(cost)
}
