//! The cache on top of a simulated rank, with coherent in-DRAM copy and
//! zeroing.

use crate::cache::{Cache, CacheConfig, LineAddr, LineData, LineStore, LINE_BYTES};
use crate::command::{issue, CostLedger, DramCommand, RowAddr};
use crate::config::{Geometry, SimConfig, TimingEnergyModel};
use crate::error::{Error, Result};
use crate::gsdram::{self, GsConfig};
use crate::rank::RankState;
use crate::rowclone::{self, CopyPlan, PlanCost, PsmLeg, RowRef};

/// Rank memory seen line by line. Every line is shuffled across chips on
/// write, so pattern accesses work on any row. Each access opens and closes
/// its row.
#[derive(Debug, Clone)]
pub struct DramStore {
    rank: RankState,
    model: TimingEnergyModel,
    gs: GsConfig,
    ledger: CostLedger,
    line_reads: u64,
    line_writes: u64,
}

impl DramStore {
    pub fn new(rank: RankState, model: TimingEnergyModel, gs: GsConfig) -> Result<Self> {
        let g = rank.geometry();
        if g.chips_per_rank != gs.chips || g.cacheline_size as u64 != LINE_BYTES || g.column_width != 64 {
            return Err(Error::InvalidGsConfig(format!(
                "line store needs {} chips with 64-bit columns and 64-byte lines",
                gs.chips
            )));
        }
        Ok(DramStore {
            rank,
            model,
            gs,
            ledger: CostLedger::default(),
            line_reads: 0,
            line_writes: 0,
        })
    }

    pub fn rank(&self) -> &RankState {
        &self.rank
    }

    pub fn model(&self) -> &TimingEnergyModel {
        &self.model
    }

    /// Cost of every line access so far.
    pub fn ledger(&self) -> CostLedger {
        self.ledger
    }

    /// Lines fetched from DRAM.
    pub fn line_reads(&self) -> u64 {
        self.line_reads
    }

    pub fn line_writes(&self) -> u64 {
        self.line_writes
    }

    fn access(&mut self, l: LineAddr, write: Option<&LineData>) -> Result<LineData> {
        let loc = self.rank.geometry().decode_address(l.addr)?;
        let m = &self.model;
        let act = DramCommand::Activate {
            bank: loc.bank,
            subarray: loc.subarray,
            row: RowAddr::Row(loc.row),
        };
        let mut ledger = issue(&mut self.rank, &act, m)?.ledger;
        let data = match write {
            Some(d) => {
                ledger += gsdram::scatter(&mut self.rank, loc.bank, l.pattern, loc.column, d, &self.gs, m)?;
                *d
            }
            None => {
                let (v, c) = gsdram::gather(&mut self.rank, loc.bank, l.pattern, loc.column, &self.gs, m)?;
                ledger += c;
                v.try_into().expect("eight chips")
            }
        };
        ledger += issue(&mut self.rank, &DramCommand::Precharge { bank: loc.bank }, m)?.ledger;
        self.ledger += ledger;
        Ok(data)
    }
}

impl LineStore for DramStore {
    fn read_line(&mut self, l: LineAddr) -> LineData {
        self.line_reads += 1;
        self.access(l, None)
            .unwrap_or_else(|e| panic!("line read at {:#x}: {e}", l.addr))
    }

    fn write_line(&mut self, l: LineAddr, data: &LineData) {
        self.line_writes += 1;
        self.access(l, Some(data))
            .unwrap_or_else(|e| panic!("line write at {:#x}: {e}", l.addr));
    }
}

/// Cache settings matched to a geometry: one DBI entry per DRAM row.
pub fn cache_config_for(g: &Geometry) -> CacheConfig {
    let row_bytes = g.row_bytes();
    CacheConfig {
        row_bytes,
        dbi_granularity: (row_bytes / LINE_BYTES) as u32,
        ..CacheConfig::default()
    }
}

/// Cache plus rank, keeping in-DRAM operations coherent with cached data.
#[derive(Debug, Clone)]
pub struct System {
    cache: Cache<DramStore>,
    /// After an in-DRAM copy, install clean copies of cached source lines
    /// at the destination.
    pub in_cache_copy: bool,
}

impl System {
    pub fn new(sim: &SimConfig, cache: CacheConfig) -> Result<Self> {
        let rank = RankState::new(sim.geometry.clone())?;
        if cache.row_bytes != sim.geometry.row_bytes() {
            return Err(Error::InvalidCacheConfig(format!(
                "cache row of {} bytes, DRAM row of {}",
                cache.row_bytes,
                sim.geometry.row_bytes()
            )));
        }
        let store = DramStore::new(rank, sim.timing.clone(), cache.gs)?;
        Ok(System {
            cache: Cache::new(cache, store)?,
            in_cache_copy: false,
        })
    }

    pub fn cache(&self) -> &Cache<DramStore> {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut Cache<DramStore> {
        &mut self.cache
    }

    pub fn rank(&self) -> &RankState {
        self.cache.memory().rank()
    }

    fn check(&self, addr: u64, len: u64) -> Result<()> {
        let g = self.rank().geometry();
        g.decode_address(addr)?;
        if len > 0 {
            g.decode_address(addr + len - 1)?;
        }
        Ok(())
    }

    pub fn read(&mut self, addr: u64, pattern: u32) -> Result<LineData> {
        self.check(addr, LINE_BYTES)?;
        self.cache.read(addr, pattern)
    }

    pub fn write(&mut self, addr: u64, pattern: u32, data: LineData) -> Result<()> {
        self.check(addr, LINE_BYTES)?;
        self.cache.writeback_request(addr, pattern, data)
    }

    /// Line as stored in DRAM, bypassing the cache and the cost model.
    pub fn dram_line(&self, addr: u64) -> Result<LineData> {
        let g = self.rank().geometry();
        let loc = g.decode_address(addr)?;
        let row = self.rank().row(loc.bank, loc.subarray, loc.row)?;
        let layout = g.column_layout();
        let gs = &self.cache.config().gs;
        let mut out = [0; 8];
        for (i, w) in out.iter_mut().enumerate() {
            let (chip, col) = gsdram::locate(loc.column as u64 * 8 + i as u64, gs);
            *w = row.field(layout.bit_offset(chip, col), 64);
        }
        Ok(out)
    }

    pub fn flush_all(&mut self) {
        self.cache.flush_all();
    }

    /// Copies `size` bytes with RowClone where possible. Source lines are
    /// flushed and destination lines invalidated first.
    pub fn memcopy(&mut self, src: u64, dst: u64, size: u64) -> Result<PlanCost> {
        let g = self.rank().geometry().clone();
        let mut plan = rowclone::plan_memcopy(src, dst, size, &g, g.mcgr())?;
        let gs = self.cache.config().gs;
        // shuffled data only survives TRANSFER when both columns shuffle alike
        let (keep, moved): (Vec<PsmLeg>, Vec<PsmLeg>) = plan.psm_legs.iter().partition(|l| {
            (0..l.lines).all(|i| gs.control(l.src_column + i) == gs.control(l.dst_column + i))
        });
        plan.psm_legs = keep;
        let in_dram = self.in_dram_lines(&plan);
        let copies: Vec<(u64, LineData)> = if self.in_cache_copy {
            in_dram
                .iter()
                .filter_map(|&(s, d)| self.cache.peek(s).map(|v| (d, v)))
                .collect()
        } else {
            Vec::new()
        };

        for r in &plan.coherence_preamble.flush {
            self.cache.flush_range(r.clone());
        }
        for r in &plan.coherence_preamble.invalidate {
            self.cache.invalidate_range(r.clone());
        }
        for l in &moved {
            let len = l.lines as u64 * LINE_BYTES;
            self.cache.flush_range(l.src_addr..l.src_addr + len);
            self.cache.invalidate_range(l.dst_addr..l.dst_addr + len);
        }
        for r in &plan.cpu_words {
            self.cache.flush_range(r.src_addr..r.src_addr + r.len);
            self.cache.flush_range(r.dst_addr..r.dst_addr + r.len);
            self.cache.invalidate_range(r.dst_addr..r.dst_addr + r.len);
        }

        let cpu_plan = std::mem::take(&mut plan.cpu_words);
        let store = self.cache.memory_mut();
        let model = store.model.clone();
        let mut cost = rowclone::execute_plan(&mut store.rank, &plan, &model)?;
        let saved = std::mem::take(&mut store.ledger);
        for l in &moved {
            for i in 0..l.lines as u64 {
                let s = LineAddr::new(l.src_addr + i * LINE_BYTES, 0);
                let v = store.access(s, None)?;
                store.access(LineAddr::new(l.dst_addr + i * LINE_BYTES, 0), Some(&v))?;
            }
        }
        for r in &cpu_plan {
            copy_bytes(store, r.src_addr, r.dst_addr, r.len)?;
        }
        cost.cpu = store.ledger;
        store.ledger += saved;
        for (d, v) in copies {
            self.cache.insert_clean(d, v);
        }
        Ok(cost)
    }

    fn in_dram_lines(&self, plan: &CopyPlan) -> Vec<(u64, u64)> {
        let row = self.rank().geometry().row_bytes();
        let mut v: Vec<(u64, u64)> = Vec::new();
        for p in &plan.fpm_pairs {
            v.extend((0..row).step_by(LINE_BYTES as usize).map(|o| (p.src_addr + o, p.dst_addr + o)));
        }
        for l in &plan.psm_legs {
            v.extend((0..l.lines as u64).map(|i| (l.src_addr + i * LINE_BYTES, l.dst_addr + i * LINE_BYTES)));
        }
        v
    }

    /// Zeroes whole rows in DRAM after dropping their cached lines. With
    /// `zi_insert` the zeroed lines are then cached clean.
    pub fn bulk_zero(&mut self, dst: u64, size: u64) -> Result<CostLedger> {
        self.check(dst, size)?;
        let row = self.rank().geometry().row_bytes();
        if !dst.is_multiple_of(row) || !size.is_multiple_of(row) {
            return Err(Error::Misaligned { what: "zero range", align: row });
        }
        self.cache.invalidate_range(dst..dst + size);
        let store = self.cache.memory_mut();
        let model = store.model.clone();
        let ledger = rowclone::bulk_zero(&mut store.rank, dst, size, &model)?;
        if self.cache.config().zi_insert {
            for a in (dst..dst + size).step_by(LINE_BYTES as usize) {
                self.cache.insert_clean(a, [0; 8]);
            }
        }
        Ok(ledger)
    }

    /// Every reserved row still holds its constant.
    pub fn reserved_rows_intact(&self) -> bool {
        self.rank().reserved_rows_intact()
    }

    /// First row of bank/subarray `(bank, subarray)`, as an address.
    pub fn row_address(&self, r: RowRef) -> Result<u64> {
        self.rank().geometry().row_address(r.bank, r.subarray, r.row)
    }
}

/// Byte copy through logical lines, used for the unaligned remainder.
fn copy_bytes(store: &mut DramStore, src: u64, dst: u64, len: u64) -> Result<()> {
    let mut o = 0;
    while o < len {
        let (s, d) = (src + o, dst + o);
        let n = (LINE_BYTES - s % LINE_BYTES).min(LINE_BYTES - d % LINE_BYTES).min(len - o);
        let sv = store.access(LineAddr::new(s, 0), None)?;
        let mut dv = store.access(LineAddr::new(d, 0), None)?;
        let sb: Vec<u8> = sv.iter().flat_map(|w| w.to_le_bytes()).collect();
        let mut db: Vec<u8> = dv.iter().flat_map(|w| w.to_le_bytes()).collect();
        let (so, dof) = ((s % LINE_BYTES) as usize, (d % LINE_BYTES) as usize);
        db[dof..dof + n as usize].copy_from_slice(&sb[so..so + n as usize]);
        for (w, c) in dv.iter_mut().zip(db.chunks_exact(8)) {
            *w = u64::from_le_bytes(c.try_into().expect("8 bytes"));
        }
        store.access(LineAddr::new(d, 0), Some(&dv))?;
        o += n;
    }
    Ok(())
}
