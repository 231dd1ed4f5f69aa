//! Last-level cache whose dirty state lives in a Dirty-Block Index.
//!
//! The tag store keeps no dirty bits. A cached block is dirty exactly when
//! the DBI holds a valid entry for its region with the block's bit set.
//! Writebacks leave through a drain-when-full write buffer; DRAM-aware
//! writeback (DAWB) cleans the other dirty blocks of a victim's DRAM row
//! along with it.

pub mod dbi;
pub mod memory;
pub mod moesi;
pub mod reference;
pub mod trace;
pub mod write_buffer;

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::gsdram::GsConfig;

pub use dbi::{Dbi, DbiEntry, DbiKey, DbiPolicy};
pub use memory::{FlatMemory, LineAddr, LineData, LineStore, PatternMap, LINE_BYTES};
pub use write_buffer::WriteBuffer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheConfig {
    pub capacity: u64,
    pub associativity: u32,
    /// Fraction of cache blocks the DBI can track as dirty.
    pub dbi_alpha: f64,
    /// Blocks per DBI entry.
    pub dbi_granularity: u32,
    pub dbi_associativity: u32,
    pub dbi_policy: DbiPolicy,
    pub write_buffer_entries: u32,
    pub dawb: bool,
    /// Insert clean zero lines after a bulk zero.
    pub zi_insert: bool,
    pub row_bytes: u64,
    pub gs: GsConfig,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            capacity: 256 * 1024,
            associativity: 8,
            dbi_alpha: 0.5,
            dbi_granularity: 128,
            dbi_associativity: 4,
            dbi_policy: DbiPolicy::Lrw,
            write_buffer_entries: 32,
            dawb: false,
            zi_insert: false,
            row_bytes: 8192,
            gs: GsConfig::new(8, 3, 3).expect("valid default"),
        }
    }
}

impl CacheConfig {
    pub fn blocks(&self) -> u64 {
        self.capacity / LINE_BYTES
    }

    pub fn row_blocks(&self) -> u64 {
        self.row_bytes / LINE_BYTES
    }

    pub fn dbi_entries(&self) -> u64 {
        (self.dbi_alpha * self.blocks() as f64 / self.dbi_granularity as f64).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCacheConfig(m));
        let blocks = self.blocks();
        if !self.capacity.is_multiple_of(LINE_BYTES) || blocks == 0 {
            return bad(format!("capacity {} is not a whole number of lines", self.capacity));
        }
        if self.associativity == 0 || !blocks.is_multiple_of(self.associativity as u64) {
            return bad(format!("{blocks} blocks cannot form {}-way sets", self.associativity));
        }
        if !self.row_bytes.is_multiple_of(LINE_BYTES) || !(1..=128).contains(&self.row_blocks()) {
            return bad(format!("row of {} bytes must hold 1 to 128 lines", self.row_bytes));
        }
        if self.dbi_granularity == 0 || !self.row_blocks().is_multiple_of(self.dbi_granularity as u64) {
            return bad(format!(
                "DBI granularity {} does not divide the {} blocks of a row",
                self.dbi_granularity,
                self.row_blocks()
            ));
        }
        if !(self.dbi_alpha > 0.0 && self.dbi_alpha <= 1.0) {
            return bad(format!("DBI alpha {} outside (0, 1]", self.dbi_alpha));
        }
        let entries = self.dbi_entries();
        let tracked = entries as f64 * self.dbi_granularity as f64;
        if entries == 0 || (tracked - self.dbi_alpha * blocks as f64).abs() > 0.5 {
            return bad("alpha x blocks is not a whole number of DBI entries".into());
        }
        if self.dbi_associativity == 0 || !entries.is_multiple_of(self.dbi_associativity as u64) {
            return bad(format!(
                "{entries} DBI entries cannot form {}-way sets",
                self.dbi_associativity
            ));
        }
        if self.write_buffer_entries < 4 {
            return bad("write buffer needs at least 4 entries".into());
        }
        if self.gs.chips != 8 {
            return bad("pattern lines need 8 values per line".into());
        }
        self.gs.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub reads: u64,
    pub hits: u64,
    pub writeback_requests: u64,
    /// Lines handed to the write buffer.
    pub writebacks: u64,
    pub dbi_evictions: u64,
    pub tag_lookups: u64,
    pub overlap_invalidations: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct TagEntry {
    valid: bool,
    line: LineAddr,
    lru: u64,
    data: LineData,
}

/// Writeback cache with a Dirty-Block Index, over a backing store `M`.
#[derive(Debug, Clone)]
pub struct Cache<M: LineStore> {
    cfg: CacheConfig,
    map: PatternMap,
    sets: usize,
    ways: usize,
    tags: Vec<TagEntry>,
    dbi: Dbi,
    wb: WriteBuffer,
    mem: M,
    alt_pattern: HashMap<u64, u32>,
    clock: u64,
    stats: CacheStats,
}

impl<M: LineStore> Cache<M> {
    pub fn new(cfg: CacheConfig, mem: M) -> Result<Self> {
        cfg.validate()?;
        let ways = cfg.associativity as usize;
        let sets = cfg.blocks() as usize / ways;
        Ok(Cache {
            map: PatternMap::new(cfg.row_bytes, cfg.gs),
            sets,
            ways,
            tags: vec![TagEntry::default(); sets * ways],
            dbi: Dbi::new(
                cfg.dbi_entries() as usize,
                cfg.dbi_associativity as usize,
                cfg.dbi_granularity,
                cfg.dbi_policy,
            )?,
            wb: WriteBuffer::new(cfg.write_buffer_entries as usize),
            mem,
            alt_pattern: HashMap::new(),
            clock: 0,
            stats: CacheStats::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    pub fn dbi_lookups(&self) -> u64 {
        self.dbi.lookups()
    }

    pub fn write_buffer(&self) -> &WriteBuffer {
        &self.wb
    }

    pub fn memory(&self) -> &M {
        &self.mem
    }

    pub fn memory_mut(&mut self) -> &mut M {
        &mut self.mem
    }

    pub fn into_memory(self) -> M {
        self.mem
    }

    /// Write-row hit rate over everything drained so far.
    pub fn row_hit_rate(&self) -> f64 {
        match self.wb.written() {
            0 => 0.0,
            n => self.wb.row_hits() as f64 / n as f64,
        }
    }

    fn dbi_key(&self, l: LineAddr) -> (DbiKey, u32) {
        let g = self.cfg.dbi_granularity as u64;
        let line = l.line();
        (
            DbiKey {
                region: line / g,
                pattern: l.pattern,
            },
            (line % g) as u32,
        )
    }

    fn line_of(&self, key: DbiKey, block: u32) -> LineAddr {
        let line = key.region * self.cfg.dbi_granularity as u64 + block as u64;
        LineAddr::new(line * LINE_BYTES, key.pattern)
    }

    /// DBI keys covering a DRAM row for one pattern.
    fn row_keys(&self, row: u64, pattern: u32) -> impl Iterator<Item = DbiKey> {
        let per_row = self.cfg.row_blocks() / self.cfg.dbi_granularity as u64;
        (row * per_row..(row + 1) * per_row).map(move |region| DbiKey { region, pattern })
    }

    fn set_of(&self, l: LineAddr) -> Range<usize> {
        let s = (l.line() % self.sets as u64) as usize;
        s * self.ways..(s + 1) * self.ways
    }

    fn probe(&mut self, l: LineAddr) -> Option<usize> {
        self.stats.tag_lookups += 1;
        self.set_of(l)
            .find(|&i| self.tags[i].valid && self.tags[i].line == l)
    }

    fn touch(&mut self, i: usize) {
        self.clock += 1;
        self.tags[i].lru = self.clock;
    }

    fn check_pattern(&mut self, l: LineAddr) -> Result<()> {
        if l.pattern == 0 {
            return Ok(());
        }
        let p = self.cfg.gs.pattern_bits;
        if l.pattern >> p != 0 {
            return Err(Error::OutOfRange {
                what: "pattern",
                value: l.pattern as u64,
                limit: 1 << p,
            });
        }
        let row = self.map.row_of(l.addr);
        match self.alt_pattern.get(&row) {
            Some(&existing) if existing != l.pattern => Err(Error::PatternConflict {
                region: row,
                existing,
                requested: l.pattern,
            }),
            Some(_) => Ok(()),
            None => {
                self.alt_pattern.insert(row, l.pattern);
                Ok(())
            }
        }
    }

    /// Alternate pattern registered for the row of `addr`.
    pub fn region_pattern(&self, row: u64) -> Option<u32> {
        self.alt_pattern.get(&row).copied()
    }

    fn other_pattern(&self, l: LineAddr) -> Option<u32> {
        if l.pattern != 0 {
            Some(0)
        } else {
            self.region_pattern(self.map.row_of(l.addr))
        }
    }

    fn enqueue(&mut self, l: LineAddr, data: LineData) {
        self.stats.writebacks += 1;
        self.wb.push(l, data);
        if self.wb.needs_drain() {
            self.wb.drain_to_low(&mut self.mem, self.cfg.row_bytes);
        }
    }

    /// Writes back every dirty block `bits` marks in `key` and cleans them
    /// in place. The DBI entry must already be gone.
    fn write_back_bits(&mut self, key: DbiKey, bits: u128) {
        let mut b = bits;
        while b != 0 {
            let block = b.trailing_zeros();
            b &= b - 1;
            let l = self.line_of(key, block);
            let i = self
                .probe(l)
                .expect("DBI marks a block dirty that is not cached");
            self.enqueue(l, self.tags[i].data);
        }
    }

    /// Reads a line, filling it from memory on a miss.
    pub fn read(&mut self, addr: u64, pattern: u32) -> Result<LineData> {
        let l = LineAddr::new(addr, pattern);
        self.check_pattern(l)?;
        self.stats.reads += 1;
        if let Some(i) = self.probe(l) {
            self.stats.hits += 1;
            self.touch(i);
            return Ok(self.tags[i].data);
        }
        let data = self.fetch(l);
        let i = self.allocate(l);
        self.tags[i].data = data;
        Ok(data)
    }

    /// Current memory contents of `l`, accounting for dirty overlapping
    /// lines of the other pattern and queued writebacks.
    fn fetch(&mut self, l: LineAddr) -> LineData {
        if let Some(other) = self.other_pattern(l) {
            let overlap = self.map.overlapping(l, other);
            for o in &overlap {
                let (key, block) = self.dbi_key(*o);
                if self.dbi.clear(key, block) {
                    let i = self.probe(*o).expect("dirty line is cached");
                    self.enqueue(*o, self.tags[i].data);
                }
            }
            if self.wb.contains_any(&overlap) {
                self.wb.drain(&mut self.mem, self.cfg.row_bytes, 0);
            }
        }
        match self.wb.get(l) {
            Some(d) => *d,
            None => self.mem.read_line(l),
        }
    }

    /// Finds a way for `l`, evicting if needed; the entry is valid and
    /// most recently used but its data is stale.
    fn allocate(&mut self, l: LineAddr) -> usize {
        let set = self.set_of(l);
        let i = match set.clone().find(|&i| !self.tags[i].valid) {
            Some(i) => i,
            None => {
                let v = set
                    .min_by_key(|&i| (self.tags[i].lru, i))
                    .expect("non-empty set");
                self.evict_block(v);
                v
            }
        };
        self.tags[i] = TagEntry {
            valid: true,
            line: l,
            lru: 0,
            data: [0; 8],
        };
        self.touch(i);
        i
    }

    fn evict_block(&mut self, i: usize) {
        let l = self.tags[i].line;
        let (key, block) = self.dbi_key(l);
        if self.dbi.clear(key, block) {
            self.enqueue(l, self.tags[i].data);
            if self.cfg.dawb {
                let row = self.map.row_of(l.addr);
                let keys: Vec<_> = self.row_keys(row, l.pattern).collect();
                for k in keys {
                    let bits = self.dbi.take(k);
                    self.write_back_bits(k, bits);
                }
            }
        }
        self.tags[i].valid = false;
    }

    /// A dirty line arriving from the level above.
    pub fn writeback_request(&mut self, addr: u64, pattern: u32, data: LineData) -> Result<()> {
        let l = LineAddr::new(addr, pattern);
        self.check_pattern(l)?;
        self.stats.writeback_requests += 1;
        self.overlap_invalidate(l);
        let i = match self.probe(l) {
            Some(i) => {
                self.touch(i);
                i
            }
            None => self.allocate(l),
        };
        self.tags[i].data = data;
        let (key, block) = self.dbi_key(l);
        if let Some(victim) = self.dbi.set_dirty(key, block) {
            self.stats.dbi_evictions += 1;
            self.write_back_bits(victim.key, victim.bits);
        }
        Ok(())
    }

    /// Drops cached lines of the other pattern that share a word with `l`,
    /// writing dirty ones back first.
    fn overlap_invalidate(&mut self, l: LineAddr) {
        let Some(other) = self.other_pattern(l) else {
            return;
        };
        for o in self.map.overlapping(l, other) {
            if let Some(i) = self.probe(o) {
                let (key, block) = self.dbi_key(o);
                if self.dbi.clear(key, block) {
                    self.enqueue(o, self.tags[i].data);
                }
                self.tags[i].valid = false;
                self.stats.overlap_invalidations += 1;
            }
        }
    }

    /// Dirty blocks of a DRAM row for one pattern, one bit per block.
    pub fn list_dirty_in_region(&mut self, row: u64, pattern: u32) -> u128 {
        let g = self.cfg.dbi_granularity;
        let keys: Vec<_> = self.row_keys(row, pattern).collect();
        keys.into_iter()
            .enumerate()
            .fold(0, |acc, (n, k)| acc | self.dbi.dirty_bits(k) << (n as u32 * g))
    }

    /// Writes back the dirty lines of a DRAM row (both patterns) and drains
    /// the write buffer. Returns the number of lines written back.
    pub fn flush_region(&mut self, row: u64) -> u64 {
        let before = self.stats.writebacks;
        let mut patterns = vec![0];
        patterns.extend(self.region_pattern(row));
        for p in patterns {
            let keys: Vec<_> = self.row_keys(row, p).collect();
            for k in keys {
                let bits = self.dbi.take(k);
                self.write_back_bits(k, bits);
            }
        }
        self.drain_all();
        self.stats.writebacks - before
    }

    /// Writes back dirty pattern-0 lines in `range`, plus every dirty
    /// alternate-pattern line of the rows it touches, then drains.
    pub fn flush_range(&mut self, range: Range<u64>) -> u64 {
        let before = self.stats.writebacks;
        for row in self.rows_of(&range) {
            let alt = self.region_pattern(row);
            for l in self.lines_of_row(row, &range) {
                let (key, block) = self.dbi_key(l);
                if self.dbi.is_dirty(key, block) {
                    self.dbi.clear(key, block);
                    let i = self.probe(l).expect("dirty line is cached");
                    self.enqueue(l, self.tags[i].data);
                }
            }
            if let Some(p) = alt {
                let keys: Vec<_> = self.row_keys(row, p).collect();
                for k in keys {
                    let bits = self.dbi.take(k);
                    self.write_back_bits(k, bits);
                }
            }
        }
        self.drain_all();
        self.stats.writebacks - before
    }

    /// Writes back, then drops, every cached line of a DRAM row.
    pub fn flush_invalidate_region(&mut self, row: u64) {
        self.flush_region(row);
        self.invalidate_region(row);
    }

    /// Drops every cached line of a DRAM row without writing it back.
    pub fn invalidate_region(&mut self, row: u64) {
        let r = row * self.cfg.row_bytes..(row + 1) * self.cfg.row_bytes;
        self.invalidate_range(r);
    }

    /// Drops cached pattern-0 lines in `range`. Alternate-pattern lines of
    /// the touched rows may hold words outside the range, so those are
    /// written back before being dropped. The write buffer is drained so
    /// nothing queued can land after a subsequent in-DRAM write.
    pub fn invalidate_range(&mut self, range: Range<u64>) {
        for row in self.rows_of(&range) {
            for l in self.lines_of_row(row, &range) {
                if let Some(i) = self.probe(l) {
                    let (key, block) = self.dbi_key(l);
                    self.dbi.clear(key, block);
                    self.tags[i].valid = false;
                }
            }
            if let Some(p) = self.region_pattern(row) {
                let keys: Vec<_> = self.row_keys(row, p).collect();
                for k in keys {
                    let bits = self.dbi.take(k);
                    self.write_back_bits(k, bits);
                }
                let base = row * self.cfg.row_bytes;
                for col in 0..self.cfg.row_blocks() {
                    let l = LineAddr::new(base + col * LINE_BYTES, p);
                    if let Some(i) = self.probe(l) {
                        self.tags[i].valid = false;
                    }
                }
            }
        }
        self.drain_all();
    }

    fn rows_of(&self, range: &Range<u64>) -> Range<u64> {
        if range.is_empty() {
            return 0..0;
        }
        self.map.row_of(range.start)..self.map.row_of(range.end - 1) + 1
    }

    fn lines_of_row(&self, row: u64, range: &Range<u64>) -> Vec<LineAddr> {
        let base = row * self.cfg.row_bytes;
        let lo = range.start.max(base);
        let hi = range.end.min(base + self.cfg.row_bytes);
        let first = lo - lo % LINE_BYTES;
        (first..hi)
            .step_by(LINE_BYTES as usize)
            .map(|a| LineAddr::new(a, 0))
            .collect()
    }

    /// Writes back every dirty line and empties the write buffer.
    pub fn flush_all(&mut self) {
        let entries: Vec<_> = self.dbi.entries().map(|e| e.key).collect();
        for k in entries {
            let bits = self.dbi.take(k);
            self.write_back_bits(k, bits);
        }
        self.drain_all();
    }

    pub fn drain_all(&mut self) {
        self.wb.drain(&mut self.mem, self.cfg.row_bytes, 0);
    }

    /// Installs a clean copy of a line, replacing any cached version.
    pub fn insert_clean(&mut self, addr: u64, data: LineData) {
        let l = LineAddr::new(addr, 0);
        let i = match self.probe(l) {
            Some(i) => {
                let (key, block) = self.dbi_key(l);
                self.dbi.clear(key, block);
                self.touch(i);
                i
            }
            None => self.allocate(l),
        };
        self.tags[i].data = data;
    }

    /// Cached data of a pattern-0 line, without touching replacement state.
    pub fn peek(&self, addr: u64) -> Option<LineData> {
        let l = LineAddr::new(addr, 0);
        self.set_of(l)
            .find(|&i| self.tags[i].valid && self.tags[i].line == l)
            .map(|i| self.tags[i].data)
    }

    pub fn is_dirty(&mut self, addr: u64, pattern: u32) -> bool {
        let (key, block) = self.dbi_key(LineAddr::new(addr, pattern));
        self.dbi.is_dirty(key, block)
    }

    pub fn cached_lines(&self) -> usize {
        self.tags.iter().filter(|t| t.valid).count()
    }

    /// Checks that every DBI bit names a cached line and that no valid
    /// entry is empty.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let cached: HashSet<LineAddr> = self.tags.iter().filter(|t| t.valid).map(|t| t.line).collect();
        if cached.len() != self.cached_lines() {
            return Err("a line is cached twice".into());
        }
        for e in self.dbi.entries() {
            if e.bits == 0 {
                return Err(format!("empty valid DBI entry {:?}", e.key));
            }
            let mut b = e.bits;
            while b != 0 {
                let block = b.trailing_zeros();
                b &= b - 1;
                let l = self.line_of(e.key, block);
                if !cached.contains(&l) {
                    return Err(format!("dirty bit set for uncached line {l:?}"));
                }
            }
        }
        Ok(())
    }
}
