//! Cache trace format, generators and replay.
//!
//! One operation per line: `R <addr> [patt]`, `WB <addr> [patt]`,
//! `FLUSH <row>`, `INV <row>`. Addresses are decimal or `0x` hex; `#`
//! starts a comment. A writeback carries a data token derived from its
//! position in the trace, so replays are reproducible without storing data.

use std::fmt;

use rand::Rng;

use super::memory::{LineData, LineStore, LINE_BYTES};
use super::reference::ReferenceCache;
use super::Cache;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOp {
    Read { addr: u64, pattern: u32 },
    Writeback { addr: u64, pattern: u32 },
    Flush { row: u64 },
    /// Write back and drop every line of a row.
    Invalidate { row: u64 },
}

impl fmt::Display for TraceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with_pattern = |f: &mut fmt::Formatter<'_>, op, addr, pattern| {
            if pattern == 0 {
                write!(f, "{op} {addr:#x}")
            } else {
                write!(f, "{op} {addr:#x} {pattern}")
            }
        };
        match *self {
            TraceOp::Read { addr, pattern } => with_pattern(f, "R", addr, pattern),
            TraceOp::Writeback { addr, pattern } => with_pattern(f, "WB", addr, pattern),
            TraceOp::Flush { row } => write!(f, "FLUSH {row}"),
            TraceOp::Invalidate { row } => write!(f, "INV {row}"),
        }
    }
}

fn number(tok: &str, line: usize) -> Result<u64> {
    let r = match tok.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => tok.parse(),
    };
    r.map_err(|_| Error::Parse {
        line,
        message: format!("bad number `{tok}`"),
    })
}

pub fn parse_cache_trace(text: &str) -> Result<Vec<TraceOp>> {
    let mut ops = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        let Some(&head) = toks.first() else { continue };
        let arity = |lo: usize, hi: usize| {
            if (lo..=hi).contains(&(toks.len() - 1)) {
                Ok(())
            } else {
                Err(Error::Parse {
                    line,
                    message: format!("`{head}` takes {lo} to {hi} operands"),
                })
            }
        };
        let pattern = || -> Result<u32> {
            toks.get(2).map_or(Ok(0), |t| {
                number(t, line)?.try_into().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad pattern `{t}`"),
                })
            })
        };
        let op = match head.to_ascii_uppercase().as_str() {
            "R" => {
                arity(1, 2)?;
                TraceOp::Read { addr: number(toks[1], line)?, pattern: pattern()? }
            }
            "WB" => {
                arity(1, 2)?;
                TraceOp::Writeback { addr: number(toks[1], line)?, pattern: pattern()? }
            }
            "FLUSH" => {
                arity(1, 1)?;
                TraceOp::Flush { row: number(toks[1], line)? }
            }
            "INV" => {
                arity(1, 1)?;
                TraceOp::Invalidate { row: number(toks[1], line)? }
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown operation `{other}`"),
                })
            }
        };
        ops.push(op);
    }
    Ok(ops)
}

pub fn format_cache_trace(ops: &[TraceOp]) -> String {
    ops.iter().map(|op| format!("{op}\n")).collect()
}

/// Data carried by the writeback at trace position `index`.
pub fn data_token(index: usize) -> LineData {
    std::array::from_fn(|w| (index as u64 + 1) << 8 | w as u64)
}

/// Shape of a random trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceParams {
    pub ops: usize,
    pub rows: u64,
    pub row_bytes: u64,
    /// Rows below this index use the alternate pattern.
    pub pattern_rows: u64,
    pub pattern: u32,
    pub write_fraction: f64,
    pub flush_fraction: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            ops: 100_000,
            rows: 96,
            row_bytes: 8192,
            pattern_rows: 8,
            pattern: 7,
            write_fraction: 0.4,
            flush_fraction: 0.002,
        }
    }
}

/// Uniform random trace over `rows` DRAM rows.
pub fn random_trace<R: Rng>(rng: &mut R, p: &TraceParams) -> Vec<TraceOp> {
    let lines = p.row_bytes / LINE_BYTES;
    (0..p.ops)
        .map(|_| {
            let row = rng.random_range(0..p.rows);
            let x: f64 = rng.random();
            if x < p.flush_fraction {
                return TraceOp::Flush { row };
            }
            if x < 2.0 * p.flush_fraction {
                return TraceOp::Invalidate { row };
            }
            let addr = row * p.row_bytes + rng.random_range(0..lines) * LINE_BYTES;
            let pattern = if row < p.pattern_rows && rng.random_bool(0.3) {
                p.pattern
            } else {
                0
            };
            if rng.random_bool(p.write_fraction) {
                TraceOp::Writeback { addr, pattern }
            } else {
                TraceOp::Read { addr, pattern }
            }
        })
        .collect()
}

/// Writes that dirty many lines of a few rows at a time, interleaved with
/// streaming reads that force evictions.
pub fn clustered_trace<R: Rng>(rng: &mut R, ops: usize, row_bytes: u64) -> Vec<TraceOp> {
    let lines = row_bytes / LINE_BYTES;
    let mut out = Vec::with_capacity(ops);
    let mut stream = 1u64 << 20;
    while out.len() < ops {
        let row = rng.random_range(0..64u64);
        for _ in 0..lines / 2 {
            let addr = row * row_bytes + rng.random_range(0..lines) * LINE_BYTES;
            out.push(TraceOp::Writeback { addr, pattern: 0 });
        }
        for _ in 0..lines {
            out.push(TraceOp::Read { addr: stream * LINE_BYTES, pattern: 0 });
            stream += 1;
        }
    }
    out.truncate(ops);
    out
}

/// Replays a trace through the DBI cache, flushes everything and returns
/// a checksum of all data returned by reads.
pub fn replay<M: LineStore>(cache: &mut Cache<M>, ops: &[TraceOp], check_each: bool) -> Result<u64> {
    let mut sum = 0u64;
    for (i, op) in ops.iter().enumerate() {
        match *op {
            TraceOp::Read { addr, pattern } => sum = fold(sum, &cache.read(addr, pattern)?),
            TraceOp::Writeback { addr, pattern } => cache.writeback_request(addr, pattern, data_token(i))?,
            TraceOp::Flush { row } => {
                cache.flush_region(row);
            }
            TraceOp::Invalidate { row } => cache.flush_invalidate_region(row),
        }
        if check_each {
            cache
                .check_invariants()
                .map_err(|m| Error::InvalidCacheConfig(format!("after op {i}: {m}")))?;
        }
    }
    cache.flush_all();
    Ok(sum)
}

/// Same as [`replay`] for the reference cache.
pub fn replay_reference<M: LineStore>(cache: &mut ReferenceCache<M>, ops: &[TraceOp]) -> u64 {
    let mut sum = 0u64;
    for (i, op) in ops.iter().enumerate() {
        match *op {
            TraceOp::Read { addr, pattern } => sum = fold(sum, &cache.read(addr, pattern)),
            TraceOp::Writeback { addr, pattern } => cache.write(addr, pattern, data_token(i)),
            TraceOp::Flush { row } => cache.flush_region(row),
            TraceOp::Invalidate { row } => cache.flush_invalidate_region(row),
        }
    }
    cache.flush_all();
    sum
}

fn fold(acc: u64, d: &LineData) -> u64 {
    d.iter()
        .fold(acc, |a, &w| (a ^ w).wrapping_mul(0x100_0000_01b3).rotate_left(5))
}
