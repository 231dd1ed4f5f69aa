use super::memory::{LineAddr, LineData, LineStore};

/// Writeback queue drained in batches grouped by DRAM row.
///
/// A newer write to a queued line replaces the old entry and moves to the
/// back, so the queue order always matches write order.
#[derive(Debug, Clone)]
pub struct WriteBuffer {
    capacity: usize,
    entries: Vec<(LineAddr, LineData)>,
    open_row: Option<u64>,
    row_hits: u64,
    written: u64,
    drains: u64,
}

impl WriteBuffer {
    pub fn new(capacity: usize) -> Self {
        WriteBuffer {
            capacity,
            entries: Vec::with_capacity(capacity),
            open_row: None,
            row_hits: 0,
            written: 0,
            drains: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Consecutive same-row writes seen by memory, after the first.
    pub fn row_hits(&self) -> u64 {
        self.row_hits
    }

    /// Lines written to memory.
    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn drains(&self) -> u64 {
        self.drains
    }

    pub fn get(&self, l: LineAddr) -> Option<&LineData> {
        self.entries.iter().rev().find(|(a, _)| *a == l).map(|(_, d)| d)
    }

    pub fn contains_any(&self, lines: &[LineAddr]) -> bool {
        self.entries.iter().any(|(a, _)| lines.contains(a))
    }

    pub fn push(&mut self, l: LineAddr, data: LineData) {
        self.entries.retain(|(a, _)| *a != l);
        self.entries.push((l, data));
    }

    /// Drain-when-full: true once the buffer reaches its high watermark.
    pub fn needs_drain(&self) -> bool {
        self.entries.len() + 2 >= self.capacity
    }

    /// Drains down to the low watermark.
    pub fn drain_to_low<M: LineStore>(&mut self, mem: &mut M, row_bytes: u64) {
        self.drain(mem, row_bytes, 2);
    }

    /// Writes queued lines to `mem` until `keep` remain. Lines of the
    /// currently open row go first, then the other rows in order of their
    /// oldest entry; within a row, queue order is kept.
    pub fn drain<M: LineStore>(&mut self, mem: &mut M, row_bytes: u64, keep: usize) {
        if self.entries.len() <= keep {
            return;
        }
        self.drains += 1;
        let mut rows: Vec<u64> = Vec::new();
        if let Some(r) = self.open_row {
            if self.entries.iter().any(|(a, _)| a.addr / row_bytes == r) {
                rows.push(r);
            }
        }
        for (a, _) in &self.entries {
            let r = a.addr / row_bytes;
            if !rows.contains(&r) {
                rows.push(r);
            }
        }
        let mut order: Vec<usize> = Vec::with_capacity(self.entries.len());
        for r in rows {
            order.extend((0..self.entries.len()).filter(|&i| self.entries[i].0.addr / row_bytes == r));
        }
        let n = self.entries.len() - keep;
        let mut done = vec![false; self.entries.len()];
        for &i in &order[..n] {
            let (a, d) = self.entries[i];
            let r = a.addr / row_bytes;
            if self.open_row == Some(r) {
                self.row_hits += 1;
            }
            self.open_row = Some(r);
            mem.write_line(a, &d);
            self.written += 1;
            done[i] = true;
        }
        let mut i = 0;
        self.entries.retain(|_| {
            let keep = !done[i];
            i += 1;
            keep
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::memory::{FlatMemory, PatternMap};
    use crate::gsdram::GsConfig;

    fn mem() -> FlatMemory {
        FlatMemory::new(PatternMap::new(8192, GsConfig::new(8, 3, 3).unwrap()))
    }

    #[test]
    fn same_row_writes_hit() {
        let mut wb = WriteBuffer::new(32);
        let mut m = mem();
        for i in 0..16 {
            wb.push(LineAddr::new(i * 64, 0), [i; 8]);
        }
        wb.drain(&mut m, 8192, 0);
        assert_eq!(wb.row_hits(), 15);
        assert!(wb.is_empty());
        assert_eq!(m.read_line(LineAddr::new(5 * 64, 0)), [5; 8]);
    }

    #[test]
    fn grouping_by_row() {
        let mut wb = WriteBuffer::new(32);
        let mut m = mem();
        for i in 0..8u64 {
            wb.push(LineAddr::new((i % 2) * 8192 + i * 64, 0), [i; 8]);
        }
        wb.drain(&mut m, 8192, 0);
        assert_eq!(wb.row_hits(), 6);
    }

    #[test]
    fn rewrite_moves_to_back_and_coalesces() {
        let mut wb = WriteBuffer::new(8);
        let l = LineAddr::new(0, 0);
        wb.push(l, [1; 8]);
        wb.push(LineAddr::new(64, 0), [2; 8]);
        wb.push(l, [3; 8]);
        assert_eq!(wb.len(), 2);
        assert_eq!(wb.get(l), Some(&[3; 8]));
        let mut m = mem();
        wb.drain(&mut m, 8192, 0);
        assert_eq!(m.read_line(l), [3; 8]);
    }

    #[test]
    fn empty_drain_is_noop() {
        let mut wb = WriteBuffer::new(8);
        wb.drain(&mut mem(), 8192, 0);
        assert_eq!((wb.written(), wb.drains()), (0, 0));
    }
}
