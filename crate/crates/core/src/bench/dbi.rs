//! Differential replay of cache traces through the DBI cache and the
//! reference cache, plus lookup and writeback-locality measurements.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BenchReport, Target};
use crate::cache::reference::ReferenceCache;
use crate::cache::trace::{clustered_trace, random_trace, replay, replay_reference, TraceOp, TraceParams};
use crate::cache::{Cache, CacheConfig, DbiPolicy, FlatMemory, PatternMap, LINE_BYTES};
use crate::error::Result;

/// Every DBI policy with DAWB off and on.
pub fn all_variants(base: &CacheConfig) -> Vec<CacheConfig> {
    DbiPolicy::ALL
        .into_iter()
        .flat_map(|p| {
            [false, true].map(|dawb| CacheConfig {
                dbi_policy: p,
                dawb,
                ..*base
            })
        })
        .collect()
}

fn memory(cfg: &CacheConfig) -> FlatMemory {
    FlatMemory::new(PatternMap::new(cfg.row_bytes, cfg.gs))
}

/// Outcome of one trace under one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replay {
    pub policy: DbiPolicy,
    pub dawb: bool,
    /// Final memory image and every read value match the reference.
    pub equivalent: bool,
    pub row_hit_rate: f64,
    pub writebacks: u64,
    pub dbi_lookups: u64,
}

/// Replays `ops` through the reference and every variant of `base`.
pub fn differential(base: &CacheConfig, ops: &[TraceOp]) -> Result<Vec<Replay>> {
    let mut reference = ReferenceCache::new(base.capacity, base.associativity, PatternMap::new(base.row_bytes, base.gs), memory(base));
    let want_sum = replay_reference(&mut reference, ops);
    let want = reference.memory().image();
    all_variants(base)
        .into_iter()
        .map(|cfg| {
            let mut c = Cache::new(cfg, memory(&cfg))?;
            let sum = replay(&mut c, ops, false)?;
            Ok(Replay {
                policy: cfg.dbi_policy,
                dawb: cfg.dawb,
                equivalent: sum == want_sum && c.memory().image() == want,
                row_hit_rate: c.row_hit_rate(),
                writebacks: c.stats().writebacks,
                dbi_lookups: c.dbi_lookups(),
            })
        })
        .collect()
}

/// Row-hit rates with DAWB off and on over a row-clustered trace.
pub fn dawb_row_hits(base: &CacheConfig, ops: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = clustered_trace(&mut rng, ops, base.row_bytes);
    let rate = |dawb| -> Result<f64> {
        let cfg = CacheConfig { dawb, ..*base };
        let mut c = Cache::new(cfg, memory(&cfg))?;
        replay(&mut c, &trace, false)?;
        Ok(c.row_hit_rate())
    };
    Ok((rate(false)?, rate(true)?))
}

/// Tag lookups for flushing a row with `dirty` dirty blocks: DBI-driven
/// and by full row scan.
pub fn flush_lookups(base: &CacheConfig, dirty: &[u64]) -> Result<(u64, u64, u32)> {
    let mut c = Cache::new(*base, memory(base))?;
    let mut r = ReferenceCache::new(base.capacity, base.associativity, PatternMap::new(base.row_bytes, base.gs), memory(base));
    for &b in dirty {
        c.writeback_request(b * LINE_BYTES, 0, [b; 8])?;
        r.write(b * LINE_BYTES, 0, [b; 8]);
    }
    let popcount = c.list_dirty_in_region(0, 0).count_ones();
    let before = c.stats().tag_lookups;
    c.flush_region(0);
    let dbi = c.stats().tag_lookups - before;
    let before = r.tag_lookups;
    r.flush_region(0);
    Ok((dbi, r.tag_lookups - before, popcount))
}

pub fn bench_dbi(base: &CacheConfig, traces: &[Vec<TraceOp>], seed: u64) -> Result<BenchReport> {
    let total_ops: usize = traces.iter().map(Vec::len).sum();
    let mut r = BenchReport::new(
        "dbi",
        &format!("{base:?}"),
        &format!("traces={} ops={total_ops} seed={seed}", traces.len()),
    );
    let mut equivalent = 0;
    let mut runs = 0;
    let mut by_variant: Vec<(String, f64, u64)> = Vec::new();
    for ops in traces {
        for (i, rep) in differential(base, ops)?.into_iter().enumerate() {
            runs += 1;
            equivalent += rep.equivalent as u64;
            let name = format!("{}{}", rep.policy, if rep.dawb { "+dawb" } else { "" });
            match by_variant.get_mut(i) {
                Some(v) => {
                    v.1 += rep.row_hit_rate;
                    v.2 += rep.writebacks;
                }
                None => by_variant.push((name, rep.row_hit_rate, rep.writebacks)),
            }
        }
    }
    r.metric("traces", traces.len() as f64, "");
    r.metric("ops", total_ops as f64, "");
    r.check("equivalent_runs", equivalent as f64, "runs", Target::Exact(runs as f64), "C10");
    for (name, rate, wb) in &by_variant {
        r.metric(format!("{name}_row_hit_rate"), rate / traces.len().max(1) as f64, "");
        r.metric(format!("{name}_writebacks"), *wb as f64, "lines");
    }

    let blocks = base.row_blocks();
    let dirty: Vec<u64> = (0..blocks).filter(|b| b % 3 == 0 || b % 7 == 0).collect();
    let (dbi, scan, popcount) = flush_lookups(base, &dirty)?;
    r.check("flush_region_tag_lookups", dbi as f64, "lookups", Target::Exact(popcount as f64), "C11");
    r.metric("row_scan_tag_lookups", scan as f64, "lookups");

    let (off, on) = dawb_row_hits(base, 200_000, seed)?;
    r.metric("clustered_row_hit_rate_dawb_off", off, "");
    r.metric("clustered_row_hit_rate_dawb_on", on, "");
    r.holds("dawb_raises_row_hit_rate", on > off, "C11");
    Ok(r)
}

/// `count` random traces of `ops` operations each.
pub fn random_traces(base: &CacheConfig, count: usize, ops: usize, seed: u64) -> Vec<Vec<TraceOp>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = TraceParams {
        ops,
        row_bytes: base.row_bytes,
        ..TraceParams::default()
    };
    (0..count).map(|_| random_trace(&mut rng, &p)).collect()
}
