//! Row-store table served to transactions by tuple and to analytics by
//! strided field gathers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BenchReport, Target};
use crate::cache::{LineAddr, LineData, LineStore, PatternMap, LINE_BYTES};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::gsdram;
use crate::system::{cache_config_for, System};

/// Fields per tuple; one tuple fills one cache line.
pub const FIELDS: usize = 8;
/// Pattern that gathers one field of eight consecutive tuples.
pub const FIELD_PATTERN: u32 = 7;

/// Table of `tuples` 8-field tuples starting at address 0.
pub struct Table {
    pub sys: System,
    pub tuples: u64,
    tuples_per_row: u64,
    row_bytes: u64,
}

impl Table {
    pub fn new(sim: &SimConfig, data: &[LineData]) -> Result<Self> {
        let cfg = cache_config_for(&sim.geometry);
        let mut sys = System::new(sim, cfg)?;
        let row_bytes = sim.geometry.row_bytes();
        let tuples = data.len() as u64;
        if !tuples.is_multiple_of(FIELDS as u64) {
            return Err(Error::InvalidValue {
                key: "tuples".into(),
                value: tuples.to_string(),
                reason: "must be a multiple of 8".into(),
            });
        }
        if tuples * LINE_BYTES > sim.geometry.capacity() {
            return Err(Error::OutOfRange {
                what: "table bytes",
                value: tuples * LINE_BYTES,
                limit: sim.geometry.capacity(),
            });
        }
        for (k, t) in data.iter().enumerate() {
            sys.cache_mut().memory_mut().write_line(LineAddr::new(k as u64 * LINE_BYTES, 0), t);
        }
        Ok(Table {
            sys,
            tuples,
            tuples_per_row: row_bytes / LINE_BYTES,
            row_bytes,
        })
    }

    pub fn dram_reads(&self) -> u64 {
        self.sys.cache().memory().line_reads()
    }

    /// Sum of `field` over all tuples, one tuple line per request.
    pub fn scan_rows(&mut self, field: usize) -> Result<(u64, u64)> {
        let before = self.sys.cache().stats().reads;
        let mut sum = 0u64;
        for k in 0..self.tuples {
            sum = sum.wrapping_add(self.sys.read(k * LINE_BYTES, 0)?[field]);
        }
        Ok((sum, self.sys.cache().stats().reads - before))
    }

    /// Sum of `field` over all tuples, one gathered line per eight tuples.
    pub fn scan_gathered(&mut self, field: usize) -> Result<(u64, u64)> {
        let gs = self.sys.cache().config().gs;
        let map = PatternMap::new(self.row_bytes, gs);
        let before = self.sys.cache().stats().reads;
        let mut sum = 0u64;
        for first in (0..self.tuples).step_by(FIELDS) {
            let row = first / self.tuples_per_row;
            let v = (first % self.tuples_per_row) * FIELDS as u64 + field as u64;
            let col = gsdram::column_containing(v, FIELD_PATTERN, &gs) as u64;
            let addr = row * self.row_bytes + col * LINE_BYTES;
            let line = self.sys.read(addr, FIELD_PATTERN)?;
            for (w, x) in map.words(LineAddr::new(addr, FIELD_PATTERN)).iter().zip(line) {
                let (k, f) = (w / FIELDS as u64, (w % FIELDS as u64) as usize);
                if f != field || !(first..first + FIELDS as u64).contains(&k) {
                    return Err(Error::InvalidValue {
                        key: "gather".into(),
                        value: format!("word {w}"),
                        reason: format!("expected field {field} of tuples {first}..{}", first + 8),
                    });
                }
                sum = sum.wrapping_add(x);
            }
        }
        Ok((sum, self.sys.cache().stats().reads - before))
    }

    /// Reads tuple `k` and bumps one of its fields. Returns the number of
    /// lines requested from the cache.
    pub fn transaction(&mut self, k: u64, field: usize) -> Result<u64> {
        let before = self.sys.cache().stats().reads;
        let mut t = self.sys.read(k * LINE_BYTES, 0)?;
        t[field] = t[field].wrapping_add(1);
        self.sys.write(k * LINE_BYTES, 0, t)?;
        Ok(self.sys.cache().stats().reads - before)
    }
}

pub fn bench_htap(sim: &SimConfig, tuples: u64, txns: u64, analytics_fields: usize, seed: u64) -> Result<BenchReport> {
    let mut r = BenchReport::new(
        "htap",
        &sim.source,
        &format!("tuples={tuples} txns={txns} fields={analytics_fields} seed={seed}"),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle: Vec<LineData> = (0..tuples)
        .map(|_| std::array::from_fn(|_| rng.random::<u32>() as u64))
        .collect();
    let mut gs = Table::new(sim, &oracle)?;
    let mut rows = Table::new(sim, &oracle)?;
    let sum = |o: &[LineData], f: usize| o.iter().fold(0u64, |a, t| a.wrapping_add(t[f]));
    let n = tuples as f64;

    // cold single-field scan
    let before = (gs.dram_reads(), rows.dram_reads());
    let (gsum, glines) = gs.scan_gathered(0)?;
    let (rsum, rlines) = rows.scan_rows(0)?;
    r.metric("tuples", n, "");
    r.check("gsdram_scan_lines", glines as f64, "lines", Target::Exact(n / 8.0), "C9");
    r.check("rowstore_scan_lines", rlines as f64, "lines", Target::Exact(n), "C9");
    r.check("scan_fetch_reduction", rlines as f64 / glines.max(1) as f64, "x", Target::Exact(8.0), "C9");
    r.metric("gsdram_scan_dram_reads", (gs.dram_reads() - before.0) as f64, "lines");
    r.metric("rowstore_scan_dram_reads", (rows.dram_reads() - before.1) as f64, "lines");
    r.metric("columnstore_scan_lines", n / 8.0, "lines");
    r.holds("scan_sums_match_oracle", gsum == sum(&oracle, 0) && rsum == sum(&oracle, 0), "C9");

    // transactions
    let mut g_lines = 0;
    let mut r_lines = 0;
    let mut one_each = true;
    for _ in 0..txns {
        let k = rng.random_range(0..tuples);
        let f = rng.random_range(0..FIELDS);
        let a = gs.transaction(k, f)?;
        let b = rows.transaction(k, f)?;
        one_each &= a == 1 && b == 1;
        g_lines += a;
        r_lines += b;
        oracle[k as usize][f] = oracle[k as usize][f].wrapping_add(1);
    }
    r.metric("transactions", txns as f64, "");
    r.holds("transaction_fetches_one_line", one_each, "C9");
    r.metric("gsdram_txn_lines", g_lines as f64, "lines");
    r.metric("rowstore_txn_lines", r_lines as f64, "lines");
    r.metric("columnstore_txn_lines", (txns * FIELDS as u64) as f64, "lines");

    // analytics after updates see every transaction
    let mut ok = true;
    let mut analytic_lines = 0;
    for i in 0..analytics_fields {
        let f = i % FIELDS;
        let (s, l) = gs.scan_gathered(f)?;
        ok &= s == sum(&oracle, f);
        analytic_lines += l;
    }
    r.holds("analytics_after_updates_match_oracle", ok, "htap-coherence");
    r.metric("gsdram_analytics_lines", analytic_lines as f64, "lines");
    r.metric("overlap_invalidations", gs.sys.cache().stats().overlap_invalidations as f64, "");
    gs.sys.flush_all();
    rows.sys.flush_all();
    r.holds(
        "reserved_rows_intact",
        gs.sys.reserved_rows_intact() && rows.sys.reserved_rows_intact(),
        "C12",
    );
    Ok(r)
}
