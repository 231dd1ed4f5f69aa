//! DRAM command execution with legality checks and cost accounting.
//!
//! Each command is issued no earlier than the previous one and no earlier
//! than its bank's timing constraints allow. The cost of a command is how
//! far it pushes the completion horizon, so ledgers of consecutive
//! sequences add up exactly.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use crate::array::Wordline;
use crate::buddy;
use crate::config::{Geometry, Time, TimingEnergyModel};
use crate::error::{Error, Result};
use crate::rank::RankState;

/// A row operand: a physical row index, or a B-group bitwise address that
/// the split row decoder expands to one to three wordlines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowAddr {
    Row(u32),
    B(u8),
}

impl RowAddr {
    pub fn is_b_group(&self) -> bool {
        matches!(self, RowAddr::B(_))
    }

    /// Wordlines raised by an ACTIVATE to this address.
    pub fn wordlines(&self, geometry: &Geometry) -> Result<Vec<Wordline>> {
        match *self {
            RowAddr::Row(r) => {
                if r >= geometry.rows_per_subarray {
                    return Err(Error::OutOfRange {
                        what: "row",
                        value: r as u64,
                        limit: geometry.rows_per_subarray as u64,
                    });
                }
                Ok(vec![Wordline::Row(r)])
            }
            RowAddr::B(n) => buddy::resolve_b_address(n, &geometry.layout()),
        }
    }

    fn parse(tok: &str, geometry: &Geometry) -> std::result::Result<RowAddr, String> {
        let l = geometry.layout();
        match tok {
            "C0" => Ok(RowAddr::Row(l.c0())),
            "C1" => Ok(RowAddr::Row(l.c1())),
            _ => {
                if let Some(n) = tok.strip_prefix('B') {
                    let n: u8 = n.parse().map_err(|_| format!("bad B-group address `{tok}`"))?;
                    if n > 15 {
                        return Err(format!("B-group address `{tok}` out of range"));
                    }
                    Ok(RowAddr::B(n))
                } else {
                    tok.parse()
                        .map(RowAddr::Row)
                        .map_err(|_| format!("bad row `{tok}`"))
                }
            }
        }
    }
}

impl fmt::Display for RowAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowAddr::Row(r) => write!(f, "{r}"),
            RowAddr::B(n) => write!(f, "B{n}"),
        }
    }
}

/// Latency variant of the ACTIVATE-ACTIVATE-PRECHARGE primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AapMode {
    /// `2 tRAS + tRP`
    Naive,
    /// `tRAS + tWL + tRP`
    Shortened,
    /// `tRAS + overlap + tRP`; needs exactly one B-group row.
    Overlapped,
}

impl FromStr for AapMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "naive" => Ok(AapMode::Naive),
            "shortened" => Ok(AapMode::Shortened),
            "overlapped" => Ok(AapMode::Overlapped),
            _ => Err(format!("unknown AAP mode `{s}`")),
        }
    }
}

impl fmt::Display for AapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AapMode::Naive => "naive",
            AapMode::Shortened => "shortened",
            AapMode::Overlapped => "overlapped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DramCommand {
    Activate {
        bank: u32,
        subarray: u32,
        row: RowAddr,
    },
    Precharge {
        bank: u32,
    },
    Read {
        bank: u32,
        column: u32,
    },
    /// `data` holds one word per chip.
    Write {
        bank: u32,
        column: u32,
        data: Vec<u64>,
    },
    /// Copies one cache line between the open rows of two banks without
    /// using the channel.
    Transfer {
        src_bank: u32,
        src_column: u32,
        dst_bank: u32,
        dst_column: u32,
    },
    Aap {
        bank: u32,
        subarray: u32,
        row1: RowAddr,
        row2: RowAddr,
        mode: AapMode,
    },
    Ap {
        bank: u32,
        subarray: u32,
        row: RowAddr,
    },
}

impl DramCommand {
    pub fn kind(&self) -> CommandKind {
        match self {
            DramCommand::Activate { .. } => CommandKind::Activate,
            DramCommand::Precharge { .. } => CommandKind::Precharge,
            DramCommand::Read { .. } => CommandKind::Read,
            DramCommand::Write { .. } => CommandKind::Write,
            DramCommand::Transfer { .. } => CommandKind::Transfer,
            DramCommand::Aap { .. } => CommandKind::Aap,
            DramCommand::Ap { .. } => CommandKind::Ap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommandKind {
    Activate,
    Precharge,
    Read,
    Write,
    Transfer,
    Aap,
    Ap,
}

impl CommandKind {
    fn mnemonic(self) -> &'static str {
        match self {
            CommandKind::Activate => "ACT",
            CommandKind::Precharge => "PRE",
            CommandKind::Read => "RD",
            CommandKind::Write => "WR",
            CommandKind::Transfer => "TRF",
            CommandKind::Aap => "AAP",
            CommandKind::Ap => "AP",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommandCounts {
    pub activate: u64,
    pub precharge: u64,
    pub read: u64,
    pub write: u64,
    pub transfer: u64,
    pub aap: u64,
    pub ap: u64,
}

impl CommandCounts {
    pub fn get(&self, kind: CommandKind) -> u64 {
        match kind {
            CommandKind::Activate => self.activate,
            CommandKind::Precharge => self.precharge,
            CommandKind::Read => self.read,
            CommandKind::Write => self.write,
            CommandKind::Transfer => self.transfer,
            CommandKind::Aap => self.aap,
            CommandKind::Ap => self.ap,
        }
    }

    fn bump(&mut self, kind: CommandKind) {
        let slot = match kind {
            CommandKind::Activate => &mut self.activate,
            CommandKind::Precharge => &mut self.precharge,
            CommandKind::Read => &mut self.read,
            CommandKind::Write => &mut self.write,
            CommandKind::Transfer => &mut self.transfer,
            CommandKind::Aap => &mut self.aap,
            CommandKind::Ap => &mut self.ap,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        self.activate + self.precharge + self.read + self.write + self.transfer + self.aap + self.ap
    }
}

impl Add for CommandCounts {
    type Output = CommandCounts;
    fn add(self, o: CommandCounts) -> CommandCounts {
        CommandCounts {
            activate: self.activate + o.activate,
            precharge: self.precharge + o.precharge,
            read: self.read + o.read,
            write: self.write + o.write,
            transfer: self.transfer + o.transfer,
            aap: self.aap + o.aap,
            ap: self.ap + o.ap,
        }
    }
}

/// Accumulated cost of a command stream.
///
/// `bus_bytes` counts only data that crossed the external channel.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostLedger {
    pub elapsed: Time,
    pub energy: f64,
    pub bus_bytes: u64,
    pub counts: CommandCounts,
}

impl CostLedger {
    pub fn elapsed_ns(&self) -> f64 {
        self.elapsed.as_ns()
    }
}

impl Add for CostLedger {
    type Output = CostLedger;
    fn add(self, o: CostLedger) -> CostLedger {
        CostLedger {
            elapsed: self.elapsed + o.elapsed,
            energy: self.energy + o.energy,
            bus_bytes: self.bus_bytes + o.bus_bytes,
            counts: self.counts + o.counts,
        }
    }
}

impl AddAssign for CostLedger {
    fn add_assign(&mut self, o: CostLedger) {
        *self = *self + o;
    }
}

impl std::iter::Sum for CostLedger {
    fn sum<I: Iterator<Item = CostLedger>>(iter: I) -> CostLedger {
        iter.fold(CostLedger::default(), |a, b| a + b)
    }
}

/// Result of issuing one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Issued {
    pub ledger: CostLedger,
    /// Cache line returned by a READ.
    pub data: Option<Vec<u64>>,
}

/// A command with an optional explicit issue time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedCommand {
    pub command: DramCommand,
    pub at: Option<Time>,
}

impl From<DramCommand> for TimedCommand {
    fn from(command: DramCommand) -> Self {
        TimedCommand { command, at: None }
    }
}

fn begin(state: &RankState, earliest: Time, at: Option<Time>, kind: CommandKind) -> Result<Time> {
    let floor = earliest.max(state.clock.now);
    match at {
        Some(a) if a < floor => Err(Error::TimingViolation {
            command: kind.mnemonic(),
            earliest_ps: floor.0,
            requested_ps: a.0,
        }),
        Some(a) => Ok(a),
        None => Ok(floor),
    }
}

/// Advances the clocks and returns how far the horizon moved.
fn finish(state: &mut RankState, issued_at: Time, done: Time) -> Time {
    let c = &mut state.clock;
    c.now = issued_at;
    let old = c.horizon;
    c.horizon = old.max(done);
    c.horizon - old
}

fn ledger(elapsed: Time, energy: f64, bus_bytes: u64, kind: CommandKind) -> CostLedger {
    let mut counts = CommandCounts::default();
    counts.bump(kind);
    CostLedger {
        elapsed,
        energy,
        bus_bytes,
        counts,
    }
}

fn check_subarray(state: &RankState, bank: u32, subarray: u32) -> Result<()> {
    state.subarray(bank, subarray).map(|_| ())
}

fn check_column(state: &RankState, column: u32) -> Result<()> {
    let columns = state.geometry().columns_per_row();
    if column >= columns {
        return Err(Error::ColumnOutOfRange { column, columns });
    }
    Ok(())
}

fn open_subarray(state: &RankState, bank: u32) -> Result<u32> {
    state.bank(bank)?.open.ok_or(Error::NotActivated { bank })
}

/// Issues one command as early as the timing rules allow.
pub fn issue(state: &mut RankState, cmd: &DramCommand, model: &TimingEnergyModel) -> Result<Issued> {
    issue_at(state, cmd, None, model)
}

/// Issues one command, at time `at` if given. An explicit time earlier than
/// the timing rules permit is a [`Error::TimingViolation`].
pub fn issue_at(
    state: &mut RankState,
    cmd: &DramCommand,
    at: Option<Time>,
    model: &TimingEnergyModel,
) -> Result<Issued> {
    let kind = cmd.kind();
    let mut data = None;
    let ledger = match *cmd {
        DramCommand::Activate {
            bank,
            subarray,
            row,
        } => activate(state, bank, subarray, row, at, model)?,
        DramCommand::Precharge { bank } => {
            let b = state.bank(bank)?;
            match b.open {
                // precharging an idle bank is a no-op
                None => {
                    let t = begin(state, Time::ZERO, at, kind)?;
                    let dt = finish(state, t, t);
                    ledger(dt, 0.0, 0, kind)
                }
                Some(s) => {
                    let bt = b.timing;
                    let earliest = bt.restore_done.max(bt.col_done).max(bt.write_recovery);
                    let t = begin(state, earliest, at, kind)?;
                    let done = t + model.t_rp;
                    let b = state.bank_mut(bank)?;
                    b.subarrays[s as usize].precharge();
                    b.open = None;
                    b.timing.act_ready = done;
                    ledger(finish(state, t, done), 0.0, 0, kind)
                }
            }
        }
        DramCommand::Read { bank, column } => {
            let s = open_subarray(state, bank)?;
            check_column(state, column)?;
            let l = column_access(state, bank, false, Time::ZERO, at, model)?;
            let layout = state.column_layout();
            data = Some(state.bank(bank)?.subarrays[s as usize].read_column(&layout, column)?);
            l
        }
        DramCommand::Write {
            bank,
            column,
            ref data,
        } => {
            let s = open_subarray(state, bank)?;
            check_column(state, column)?;
            let chips = state.geometry().chips_per_rank as usize;
            if data.len() != chips {
                return Err(Error::WrongWidth {
                    expected: chips,
                    got: data.len(),
                });
            }
            let l = column_access(state, bank, true, Time::ZERO, at, model)?;
            let layout = state.column_layout();
            state.bank_mut(bank)?.subarrays[s as usize].write_column(&layout, column, data)?;
            l
        }
        DramCommand::Transfer {
            src_bank,
            src_column,
            dst_bank,
            dst_column,
        } => transfer_at(state, src_bank, src_column, dst_bank, dst_column, at, model)?,
        DramCommand::Aap {
            bank,
            subarray,
            row1,
            row2,
            mode,
        } => aap_at(state, bank, subarray, row1, row2, mode, at, model)?,
        DramCommand::Ap {
            bank,
            subarray,
            row,
        } => {
            check_subarray(state, bank, subarray)?;
            let b = state.bank(bank)?;
            if b.open.is_some() {
                return Err(Error::NotPrecharged { bank });
            }
            let wls = row.wordlines(state.geometry())?;
            let t = begin(state, b.timing.act_ready, at, kind)?;
            let sub = state.subarray_mut(bank, subarray)?;
            sub.activate(&wls)?;
            sub.precharge();
            let pre_at = t + model.t_ras;
            let done = pre_at + model.t_rp;
            let bt = &mut state.bank_mut(bank)?.timing;
            bt.restore_done = pre_at;
            bt.act_ready = done;
            ledger(finish(state, t, done), model.activate_energy(wls.len()), 0, kind)
        }
    };
    Ok(Issued { ledger, data })
}

fn activate(
    state: &mut RankState,
    bank: u32,
    subarray: u32,
    row: RowAddr,
    at: Option<Time>,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let kind = CommandKind::Activate;
    check_subarray(state, bank, subarray)?;
    let wls = row.wordlines(state.geometry())?;
    let b = state.bank(bank)?;
    let earliest = match b.open {
        None => b.timing.act_ready,
        // back-to-back ACTIVATE waits for the first one to finish restoring
        Some(open) if open == subarray => b.timing.restore_done,
        Some(open) => {
            return Err(Error::IllegalBackToBack {
                bank,
                open,
                requested: subarray,
            })
        }
    };
    let fresh = b.open.is_none();
    let t = begin(state, earliest, at, kind)?;
    state.subarray_mut(bank, subarray)?.activate(&wls)?;
    let b = state.bank_mut(bank)?;
    b.open = Some(subarray);
    b.timing.restore_done = t + model.t_ras;
    if fresh {
        b.timing.col_ready = t + model.t_rcd;
    }
    let done = t + model.t_ras;
    Ok(ledger(
        finish(state, t, done),
        model.activate_energy(wls.len()),
        0,
        kind,
    ))
}

/// Charges one column command (READ or WRITE) to `bank` without moving
/// data. `extra` is added after the burst, e.g. for shuffle stages.
pub fn column_access(
    state: &mut RankState,
    bank: u32,
    write: bool,
    extra: Time,
    at: Option<Time>,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let kind = if write {
        CommandKind::Write
    } else {
        CommandKind::Read
    };
    open_subarray(state, bank)?;
    let line = state.geometry().cacheline_size;
    let t = begin(state, state.bank(bank)?.timing.col_ready, at, kind)?;
    let start = t.max(state.clock.bus_free);
    let end = start + model.burst_time(line) + extra;
    state.clock.bus_free = end;
    let bt = &mut state.bank_mut(bank)?.timing;
    bt.col_done = end;
    if write {
        bt.write_recovery = end + model.t_wr;
    }
    let e_col = if write { model.e_wr } else { model.e_rd };
    let energy = e_col + model.e_bus_per_byte * line as f64;
    Ok(ledger(finish(state, t, end), energy, line as u64, kind))
}

/// Copies one cache line between the activated rows of two banks.
pub fn transfer(
    state: &mut RankState,
    src_bank: u32,
    src_column: u32,
    dst_bank: u32,
    dst_column: u32,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    transfer_at(state, src_bank, src_column, dst_bank, dst_column, None, model)
}

fn transfer_at(
    state: &mut RankState,
    src_bank: u32,
    src_column: u32,
    dst_bank: u32,
    dst_column: u32,
    at: Option<Time>,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let kind = CommandKind::Transfer;
    if src_bank == dst_bank {
        return Err(Error::SameBank(src_bank));
    }
    let src_sub = open_subarray(state, src_bank)?;
    let dst_sub = open_subarray(state, dst_bank)?;
    check_column(state, src_column)?;
    check_column(state, dst_column)?;
    let earliest = state
        .bank(src_bank)?
        .timing
        .col_ready
        .max(state.bank(dst_bank)?.timing.col_ready);
    let t = begin(state, earliest, at, kind)?;
    let start = t.max(state.clock.bus_free);
    let end = start + model.burst_time(state.geometry().cacheline_size);
    let layout = state.column_layout();
    let line = state.bank(src_bank)?.subarrays[src_sub as usize].read_column(&layout, src_column)?;
    state.bank_mut(dst_bank)?.subarrays[dst_sub as usize].write_column(&layout, dst_column, &line)?;
    state.clock.bus_free = end;
    state.bank_mut(src_bank)?.timing.col_done = end;
    let dt = &mut state.bank_mut(dst_bank)?.timing;
    dt.col_done = end;
    dt.write_recovery = end + model.t_wr;
    Ok(ledger(
        finish(state, t, end),
        model.e_rd + model.e_wr,
        0,
        kind,
    ))
}

/// `ACTIVATE row1; ACTIVATE row2; PRECHARGE` on a precharged bank.
pub fn aap(
    state: &mut RankState,
    bank: u32,
    subarray: u32,
    row1: RowAddr,
    row2: RowAddr,
    mode: AapMode,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    aap_at(state, bank, subarray, row1, row2, mode, None, model)
}

#[allow(clippy::too_many_arguments)]
fn aap_at(
    state: &mut RankState,
    bank: u32,
    subarray: u32,
    row1: RowAddr,
    row2: RowAddr,
    mode: AapMode,
    at: Option<Time>,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    let kind = CommandKind::Aap;
    check_subarray(state, bank, subarray)?;
    let b = state.bank(bank)?;
    if b.open.is_some() {
        return Err(Error::NotPrecharged { bank });
    }
    if mode == AapMode::Overlapped && row1.is_b_group() == row2.is_b_group() {
        return Err(Error::OverlapIneligible);
    }
    let w1 = row1.wordlines(state.geometry())?;
    let w2 = row2.wordlines(state.geometry())?;
    let t = begin(state, b.timing.act_ready, at, kind)?;
    let sub = state.subarray_mut(bank, subarray)?;
    sub.activate(&w1)?;
    sub.activate(&w2)?;
    sub.precharge();
    let second = match mode {
        AapMode::Naive => model.t_ras,
        AapMode::Shortened => model.t_wl,
        AapMode::Overlapped => model.t_aap_overlap_extra,
    };
    let pre_at = t + model.t_ras + second;
    let done = pre_at + model.t_rp;
    let bt = &mut state.bank_mut(bank)?.timing;
    bt.restore_done = pre_at;
    bt.act_ready = done;
    let energy = model.activate_energy(w1.len()) + model.activate_energy(w2.len());
    Ok(ledger(finish(state, t, done), energy, 0, kind))
}

/// Everything a command sequence produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceResult {
    pub ledger: CostLedger,
    /// Lines returned by READs, in order.
    pub reads: Vec<Vec<u64>>,
}

/// Runs commands in order, stopping at the first failure.
pub fn run_sequence(
    state: &mut RankState,
    cmds: &[DramCommand],
    model: &TimingEnergyModel,
) -> Result<SequenceResult> {
    run_timed(state, cmds.iter().cloned().map(TimedCommand::from), model)
}

pub fn run_timed<I>(state: &mut RankState, cmds: I, model: &TimingEnergyModel) -> Result<SequenceResult>
where
    I: IntoIterator<Item = TimedCommand>,
{
    let mut out = SequenceResult::default();
    for (index, tc) in cmds.into_iter().enumerate() {
        let issued = issue_at(state, &tc.command, tc.at, model).map_err(|e| Error::AtCommand {
            index,
            source: Box::new(e),
        })?;
        out.ledger += issued.ledger;
        out.reads.extend(issued.data);
    }
    Ok(out)
}

/// Packs little-endian line bytes into per-chip words.
pub fn line_from_bytes(bytes: &[u8], geometry: &Geometry) -> Result<Vec<u64>> {
    if bytes.len() != geometry.cacheline_size as usize {
        return Err(Error::WrongWidth {
            expected: geometry.cacheline_size as usize,
            got: bytes.len(),
        });
    }
    let per = geometry.column_width as usize / 8;
    Ok(bytes
        .chunks(per)
        .map(|c| c.iter().rev().fold(0u64, |acc, &b| acc << 8 | b as u64))
        .collect())
}

pub fn line_to_bytes(words: &[u64], geometry: &Geometry) -> Vec<u8> {
    let per = geometry.column_width as usize / 8;
    words
        .iter()
        .flat_map(|w| w.to_le_bytes().into_iter().take(per))
        .collect()
}

fn hex_decode(s: &str) -> std::result::Result<Vec<u8>, String> {
    if !s.len().is_multiple_of(2) {
        return Err("hex data must have an even number of digits".into());
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|_| format!("bad hex `{s}`")))
        .collect()
}

/// Renders a command in the line-oriented trace format.
pub fn format_command(tc: &TimedCommand, geometry: &Geometry) -> String {
    let body = match &tc.command {
        DramCommand::Activate {
            bank,
            subarray,
            row,
        } => format!("ACT {bank} {subarray} {row}"),
        DramCommand::Precharge { bank } => format!("PRE {bank}"),
        DramCommand::Read { bank, column } => format!("RD {bank} {column}"),
        DramCommand::Write { bank, column, data } => {
            let hex: String = line_to_bytes(data, geometry)
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect();
            format!("WR {bank} {column} {hex}")
        }
        DramCommand::Transfer {
            src_bank,
            src_column,
            dst_bank,
            dst_column,
        } => format!("TRF {src_bank} {src_column} {dst_bank} {dst_column}"),
        DramCommand::Aap {
            bank,
            subarray,
            row1,
            row2,
            mode,
        } => format!("AAP {bank} {subarray} {row1} {row2} {mode}"),
        DramCommand::Ap {
            bank,
            subarray,
            row,
        } => format!("AP {bank} {subarray} {row}"),
    };
    match tc.at {
        Some(t) => format!("{body} @{}", t.as_ns()),
        None => body,
    }
}

/// Parses a command trace.
///
/// One command per line; `#` starts a comment; a trailing `@<ns>` pins the
/// issue time.
pub fn parse_trace(text: &str, geometry: &Geometry) -> Result<Vec<TimedCommand>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_line(line, geometry).map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?);
    }
    Ok(out)
}

fn parse_line(line: &str, geometry: &Geometry) -> std::result::Result<TimedCommand, String> {
    let mut toks: Vec<&str> = line.split_whitespace().collect();
    let at = match toks.last() {
        Some(t) if t.starts_with('@') => {
            let ns: f64 = t[1..].parse().map_err(|_| format!("bad time `{t}`"))?;
            toks.pop();
            Some(Time::from_ns(ns))
        }
        _ => None,
    };
    let num = |i: usize| -> std::result::Result<u32, String> {
        toks.get(i)
            .ok_or_else(|| format!("`{line}`: missing operand {i}"))?
            .parse()
            .map_err(|_| format!("`{line}`: operand {i} is not a number"))
    };
    let row = |i: usize| -> std::result::Result<RowAddr, String> {
        RowAddr::parse(
            toks.get(i).ok_or_else(|| format!("`{line}`: missing row"))?,
            geometry,
        )
    };
    let arity = |n: usize| -> std::result::Result<(), String> {
        if toks.len() != n + 1 {
            Err(format!("`{line}`: expected {n} operands"))
        } else {
            Ok(())
        }
    };
    let command = match toks.first().copied() {
        Some("ACT") => {
            arity(3)?;
            DramCommand::Activate {
                bank: num(1)?,
                subarray: num(2)?,
                row: row(3)?,
            }
        }
        Some("PRE") => {
            arity(1)?;
            DramCommand::Precharge { bank: num(1)? }
        }
        Some("RD") => {
            arity(2)?;
            DramCommand::Read {
                bank: num(1)?,
                column: num(2)?,
            }
        }
        Some("WR") => {
            arity(3)?;
            let bytes = hex_decode(toks[3])?;
            DramCommand::Write {
                bank: num(1)?,
                column: num(2)?,
                data: line_from_bytes(&bytes, geometry).map_err(|e| e.to_string())?,
            }
        }
        Some("TRF") => {
            arity(4)?;
            DramCommand::Transfer {
                src_bank: num(1)?,
                src_column: num(2)?,
                dst_bank: num(3)?,
                dst_column: num(4)?,
            }
        }
        Some("AAP") => {
            arity(5)?;
            DramCommand::Aap {
                bank: num(1)?,
                subarray: num(2)?,
                row1: row(3)?,
                row2: row(4)?,
                mode: toks[5].parse()?,
            }
        }
        Some("AP") => {
            arity(3)?;
            DramCommand::Ap {
                bank: num(1)?,
                subarray: num(2)?,
                row: row(3)?,
            }
        }
        Some(other) => return Err(format!("unknown command `{other}`")),
        None => unreachable!("blank lines are skipped"),
    };
    Ok(TimedCommand { command, at })
}
