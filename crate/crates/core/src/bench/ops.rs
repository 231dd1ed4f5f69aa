//! Single-operation runs behind the `buddy`, `gsdram` and `cache` CLI verbs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bitmap::Arena;
use crate::bits::BitRow;
use crate::buddy::{self, BitwiseOp};
use crate::cache::trace::{replay, TraceOp};
use crate::cache::{Cache, CacheConfig, FlatMemory, PatternMap};
use crate::command::{run_sequence, CostLedger, DramCommand, RowAddr};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::gsdram::{self, GsConfig};
use crate::rank::RankState;

/// Software reference for one bitwise operation on words.
pub fn bitwise_oracle(op: BitwiseOp, a: u64, b: u64) -> u64 {
    match op {
        BitwiseOp::Not => !a,
        BitwiseOp::And => a & b,
        BitwiseOp::Or => a | b,
        BitwiseOp::Nand => !(a & b),
        BitwiseOp::Nor => !(a | b),
        BitwiseOp::Xor => a ^ b,
        BitwiseOp::Xnor => !(a ^ b),
    }
}

/// The `buddy` CLI's CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuddyRun {
    pub op: BitwiseOp,
    pub banks: u32,
    pub gbps: f64,
    pub nj_per_row: f64,
    /// Result equals the software oracle and reserved rows are intact.
    pub verified: bool,
}

impl BuddyRun {
    pub const CSV_HEADER: [&'static str; 4] = ["op", "banks", "GiB/s", "nJ-per-row"];

    pub fn csv_record(&self) -> [String; 4] {
        [
            self.op.to_string(),
            self.banks.to_string(),
            self.gbps.to_string(),
            self.nj_per_row.to_string(),
        ]
    }
}

/// Runs `op` over `rows` rows of random data spread across banks and
/// checks the result word by word.
pub fn run_buddy_op(sim: &SimConfig, op: BitwiseOp, rows: u32, seed: u64) -> Result<BuddyRun> {
    if rows == 0 {
        return Err(Error::OutOfRange {
            what: "rows",
            value: 0,
            limit: 0,
        });
    }
    let len = rows as usize * sim.geometry.row_bits();
    let mut a = Arena::new(sim, len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y, z) = (a.alloc()?, a.alloc()?, a.alloc()?);
    let (bx, by) = (BitRow::random(len, &mut rng), BitRow::random(len, &mut rng));
    a.store(x, &bx)?;
    a.store(y, &by)?;
    a.op(op, x, Some(y), z)?;
    let want: Vec<u64> = bx
        .words()
        .iter()
        .zip(by.words())
        .map(|(&p, &q)| bitwise_oracle(op, p, q))
        .collect();
    let verified = a.load(z)? == BitRow::from_words(len, want) && a.rank().reserved_rows_intact();
    let ns = a.ledger.elapsed_ns();
    Ok(BuddyRun {
        op,
        banks: sim.geometry.banks_per_chip.min(rows),
        gbps: len as f64 / 8.0 / ns / (1u64 << 30) as f64 * 1e9,
        nj_per_row: a.ledger.energy / rows as f64,
        verified,
    })
}

/// Analytic throughput of `banks` banks, with the energy of one executed
/// program.
pub fn buddy_throughput(sim: &SimConfig, op: BitwiseOp, banks: u32) -> Result<BuddyRun> {
    let mut r = run_buddy_op(sim, op, 1, 0)?;
    r.banks = banks;
    r.gbps = buddy::throughput(op, banks, &sim.timing, &sim.geometry);
    Ok(r)
}

/// The `gsdram` CLI's CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct GatherRun {
    pub pattern: u32,
    pub lines_fetched: u64,
    pub ledger: CostLedger,
    /// Logical value indices the access returned.
    pub values: Vec<u64>,
}

impl GatherRun {
    pub const CSV_HEADER: [&'static str; 4] = ["pattern", "lines_fetched", "ns", "bus_bytes"];

    pub fn csv_record(&self) -> [String; 4] {
        [
            self.pattern.to_string(),
            self.lines_fetched.to_string(),
            self.ledger.elapsed_ns().to_string(),
            self.ledger.bus_bytes.to_string(),
        ]
    }
}

/// Shuffle configuration matching a rank: one stage per chip-ID bit.
pub fn gs_for(sim: &SimConfig) -> Result<GsConfig> {
    let bits = sim.geometry.chips_per_rank.trailing_zeros();
    GsConfig::new(sim.geometry.chips_per_rank, bits, bits)
}

/// Fills a row with its own value indices, then gathers `(pattern, column)`.
pub fn run_gather(sim: &SimConfig, pattern: u32, column: u32) -> Result<GatherRun> {
    let cfg = gs_for(sim)?;
    let mut rank = RankState::new(sim.geometry.clone())?;
    let layout = rank.column_layout();
    let mut row = BitRow::zeros(sim.geometry.row_bits());
    for chip in 0..cfg.chips {
        for col in 0..layout.columns {
            row.set_field(
                layout.bit_offset(chip, col),
                sim.geometry.column_width,
                gsdram::value_at(chip, col, &cfg),
            );
        }
    }
    rank.set_row(0, 0, 0, row)?;
    let open = DramCommand::Activate {
        bank: 0,
        subarray: 0,
        row: RowAddr::Row(0),
    };
    let mut ledger = run_sequence(&mut rank, &[open], &sim.timing)?.ledger;
    let (values, g) = gsdram::gather(&mut rank, 0, pattern, column, &cfg, &sim.timing)?;
    ledger += g;
    ledger += run_sequence(&mut rank, &[DramCommand::Precharge { bank: 0 }], &sim.timing)?.ledger;
    Ok(GatherRun {
        pattern,
        lines_fetched: 1,
        ledger,
        values,
    })
}

/// Cache statistics after replaying a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheTraceStats {
    pub reads: u64,
    pub hits: u64,
    pub writebacks: u64,
    pub row_hits: u64,
    pub dbi_lookups: u64,
    pub tag_lookups: u64,
    pub checksum: u64,
}

impl CacheTraceStats {
    pub const CSV_HEADER: [&'static str; 6] = ["reads", "hits", "writebacks", "row_hits", "dbi_lookups", "tag_lookups"];

    pub fn csv_record(&self) -> [String; 6] {
        [
            self.reads,
            self.hits,
            self.writebacks,
            self.row_hits,
            self.dbi_lookups,
            self.tag_lookups,
        ]
        .map(|v| v.to_string())
    }
}

/// Replays a cache trace over flat memory with per-operation invariant
/// checks.
pub fn run_cache_trace(cfg: &CacheConfig, ops: &[TraceOp]) -> Result<CacheTraceStats> {
    let mut c = Cache::new(*cfg, FlatMemory::new(PatternMap::new(cfg.row_bytes, cfg.gs)))?;
    let checksum = replay(&mut c, ops, true)?;
    let s = c.stats();
    Ok(CacheTraceStats {
        reads: s.reads,
        hits: s.hits,
        writebacks: s.writebacks,
        row_hits: c.write_buffer().row_hits(),
        dbi_lookups: c.dbi_lookups(),
        tag_lookups: s.tag_lookups,
        checksum,
    })
}
