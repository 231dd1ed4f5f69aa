//! Conventional writeback cache with a dirty bit in every tag entry. Used
//! as the differential oracle for the DBI cache.

use std::collections::HashMap;

use super::memory::{LineAddr, LineData, LineStore, PatternMap, LINE_BYTES};

#[derive(Debug, Clone, Copy, Default)]
struct Way {
    valid: bool,
    dirty: bool,
    line: LineAddr,
    lru: u64,
    data: LineData,
}

#[derive(Debug, Clone)]
pub struct ReferenceCache<M: LineStore> {
    map: PatternMap,
    sets: usize,
    ways: usize,
    tags: Vec<Way>,
    mem: M,
    alt: HashMap<u64, u32>,
    clock: u64,
    /// Tag lookups a row-scan flush performs.
    pub tag_lookups: u64,
}

impl<M: LineStore> ReferenceCache<M> {
    pub fn new(capacity: u64, associativity: u32, map: PatternMap, mem: M) -> Self {
        let ways = associativity as usize;
        let sets = (capacity / LINE_BYTES) as usize / ways;
        ReferenceCache {
            map,
            sets,
            ways,
            tags: vec![Way::default(); sets * ways],
            mem,
            alt: HashMap::new(),
            clock: 0,
            tag_lookups: 0,
        }
    }

    pub fn memory(&self) -> &M {
        &self.mem
    }

    fn slot(&mut self, l: LineAddr) -> Option<usize> {
        self.tag_lookups += 1;
        let s = (l.line() % self.sets as u64) as usize;
        (s * self.ways..(s + 1) * self.ways).find(|&i| self.tags[i].valid && self.tags[i].line == l)
    }

    fn other(&mut self, l: LineAddr) -> Option<u32> {
        let row = self.map.row_of(l.addr);
        if l.pattern != 0 {
            self.alt.entry(row).or_insert(l.pattern);
            Some(0)
        } else {
            self.alt.get(&row).copied()
        }
    }

    fn clean(&mut self, i: usize) {
        if self.tags[i].valid && self.tags[i].dirty {
            let w = self.tags[i];
            self.mem.write_line(w.line, &w.data);
            self.tags[i].dirty = false;
        }
    }

    fn install(&mut self, l: LineAddr, data: LineData, dirty: bool) {
        self.clock += 1;
        let s = (l.line() % self.sets as u64) as usize;
        let set = s * self.ways..(s + 1) * self.ways;
        let i = set
            .clone()
            .find(|&i| !self.tags[i].valid)
            .unwrap_or_else(|| set.min_by_key(|&i| (self.tags[i].lru, i)).unwrap());
        self.clean(i);
        self.tags[i] = Way {
            valid: true,
            dirty,
            line: l,
            lru: self.clock,
            data,
        };
    }

    pub fn read(&mut self, addr: u64, pattern: u32) -> LineData {
        let l = LineAddr::new(addr, pattern);
        let other = self.other(l);
        if let Some(i) = self.slot(l) {
            self.clock += 1;
            self.tags[i].lru = self.clock;
            return self.tags[i].data;
        }
        if let Some(p) = other {
            for o in self.map.overlapping(l, p) {
                if let Some(i) = self.slot(o) {
                    self.clean(i);
                }
            }
        }
        let data = self.mem.read_line(l);
        self.install(l, data, false);
        data
    }

    pub fn write(&mut self, addr: u64, pattern: u32, data: LineData) {
        let l = LineAddr::new(addr, pattern);
        if let Some(p) = self.other(l) {
            for o in self.map.overlapping(l, p) {
                if let Some(i) = self.slot(o) {
                    self.clean(i);
                    self.tags[i].valid = false;
                }
            }
        }
        if let Some(i) = self.slot(l) {
            self.clock += 1;
            self.tags[i].lru = self.clock;
            self.tags[i].data = data;
            self.tags[i].dirty = true;
        } else {
            self.install(l, data, true);
        }
    }

    fn row_slots(&mut self, row: u64) -> Vec<usize> {
        let base = row * self.map.row_bytes;
        let mut patterns = vec![0];
        patterns.extend(self.alt.get(&row).copied());
        let mut out = Vec::new();
        for p in patterns {
            for a in (base..base + self.map.row_bytes).step_by(LINE_BYTES as usize) {
                out.extend(self.slot(LineAddr::new(a, p)));
            }
        }
        out
    }

    /// Scans every line of a row and writes back the dirty ones.
    pub fn flush_region(&mut self, row: u64) {
        for i in self.row_slots(row) {
            self.clean(i);
        }
    }

    /// Writes back and drops every line of a row.
    pub fn flush_invalidate_region(&mut self, row: u64) {
        for i in self.row_slots(row) {
            self.clean(i);
            self.tags[i].valid = false;
        }
    }

    pub fn flush_all(&mut self) {
        for i in 0..self.tags.len() {
            self.clean(i);
        }
    }

    /// Dirty blocks of a row for one pattern, one bit per block.
    pub fn list_dirty_in_region(&mut self, row: u64, pattern: u32) -> u128 {
        let base = row * self.map.row_bytes;
        let mut v = 0;
        for (n, a) in (base..base + self.map.row_bytes).step_by(LINE_BYTES as usize).enumerate() {
            if let Some(i) = self.slot(LineAddr::new(a, pattern)) {
                if self.tags[i].dirty {
                    v |= 1 << n;
                }
            }
        }
        v
    }
}
