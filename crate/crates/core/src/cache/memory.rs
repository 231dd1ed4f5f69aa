use std::collections::HashMap;

use crate::gsdram::{self, GsConfig};

/// One 64-byte cache line as eight 8-byte values.
pub type LineData = [u64; 8];

pub const LINE_BYTES: u64 = 64;

/// A cache line request: line-aligned address plus GS-DRAM pattern ID.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LineAddr {
    pub addr: u64,
    pub pattern: u32,
}

impl LineAddr {
    pub fn new(addr: u64, pattern: u32) -> Self {
        LineAddr {
            addr: addr - addr % LINE_BYTES,
            pattern,
        }
    }

    pub fn line(&self) -> u64 {
        self.addr / LINE_BYTES
    }
}

/// Maps pattern lines to the flat 8-byte words they cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternMap {
    pub row_bytes: u64,
    pub gs: GsConfig,
}

impl PatternMap {
    pub fn new(row_bytes: u64, gs: GsConfig) -> Self {
        PatternMap { row_bytes, gs }
    }

    pub fn row_of(&self, addr: u64) -> u64 {
        addr / self.row_bytes
    }

    fn column(&self, addr: u64) -> u32 {
        ((addr % self.row_bytes) / LINE_BYTES) as u32
    }

    /// Global word indices (address / 8) covered by `l`, in line order.
    pub fn words(&self, l: LineAddr) -> [u64; 8] {
        let base = self.row_of(l.addr) * (self.row_bytes / 8);
        let mut out = [0; 8];
        if l.pattern == 0 {
            for (i, w) in out.iter_mut().enumerate() {
                *w = l.addr / 8 + i as u64;
            }
            return out;
        }
        let idx = gsdram::gathered_indices(l.pattern, self.column(l.addr), &self.gs)
            .expect("pattern validated by the cache");
        for (w, v) in out.iter_mut().zip(idx) {
            *w = base + v;
        }
        out
    }

    /// Lines of pattern `other` sharing at least one word with `l`.
    pub fn overlapping(&self, l: LineAddr, other: u32) -> Vec<LineAddr> {
        let row_base = self.row_of(l.addr) * self.row_bytes;
        let words_per_row = self.row_bytes / 8;
        let mut out: Vec<LineAddr> = self
            .words(l)
            .iter()
            .map(|w| {
                let v = w % words_per_row;
                let col = if other == 0 {
                    (v / 8) as u32
                } else {
                    gsdram::column_containing(v, other, &self.gs)
                };
                LineAddr::new(row_base + col as u64 * LINE_BYTES, other)
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Main memory as seen by the cache.
pub trait LineStore {
    fn read_line(&mut self, l: LineAddr) -> LineData;
    fn write_line(&mut self, l: LineAddr, data: &LineData);
}

/// Sparse word-addressed memory; untouched words read as zero.
#[derive(Debug, Clone)]
pub struct FlatMemory {
    map: PatternMap,
    lines: HashMap<u64, LineData>,
}

impl FlatMemory {
    pub fn new(map: PatternMap) -> Self {
        FlatMemory {
            map,
            lines: HashMap::new(),
        }
    }

    pub fn word(&self, index: u64) -> u64 {
        self.lines.get(&(index / 8)).map_or(0, |l| l[(index % 8) as usize])
    }

    pub fn set_word(&mut self, index: u64, value: u64) {
        self.lines.entry(index / 8).or_insert([0; 8])[(index % 8) as usize] = value;
    }

    /// Non-zero lines, sorted, for image comparison.
    pub fn image(&self) -> Vec<(u64, LineData)> {
        let mut v: Vec<_> = self
            .lines
            .iter()
            .filter(|(_, d)| d.iter().any(|&w| w != 0))
            .map(|(&k, &d)| (k, d))
            .collect();
        v.sort_unstable();
        v
    }
}

impl LineStore for FlatMemory {
    fn read_line(&mut self, l: LineAddr) -> LineData {
        if l.pattern == 0 {
            return self.lines.get(&l.line()).copied().unwrap_or([0; 8]);
        }
        self.map.words(l).map(|w| self.word(w))
    }

    fn write_line(&mut self, l: LineAddr, data: &LineData) {
        if l.pattern == 0 {
            self.lines.insert(l.line(), *data);
            return;
        }
        for (w, &v) in self.map.words(l).iter().zip(data) {
            self.set_word(*w, v);
        }
    }
}
