//! Bulk copy and zeroing latency, energy and bus traffic.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BenchReport, Target};
use crate::bits::BitRow;
use crate::command::CostLedger;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rank::RankState;
use crate::rowclone::{self, RowRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyMode {
    Fpm,
    Psm,
    Intra,
    Baseline,
    /// Plan the copy and use whatever each part allows.
    Auto,
}

impl CopyMode {
    pub const ALL: [CopyMode; 5] = [
        CopyMode::Fpm,
        CopyMode::Psm,
        CopyMode::Intra,
        CopyMode::Baseline,
        CopyMode::Auto,
    ];
}

impl fmt::Display for CopyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CopyMode::Fpm => "fpm",
            CopyMode::Psm => "psm",
            CopyMode::Intra => "intra",
            CopyMode::Baseline => "baseline",
            CopyMode::Auto => "auto",
        })
    }
}

impl FromStr for CopyMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CopyMode::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| format!("unknown copy mode `{s}`"))
    }
}

/// One measured copy or zeroing: the `rowclone` CLI's CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopyRun {
    pub mode: CopyMode,
    pub bytes: u64,
    pub ledger: CostLedger,
    /// Zero and control rows still hold their constants afterwards.
    pub reserved_intact: bool,
}

impl CopyRun {
    pub const CSV_HEADER: [&'static str; 5] = ["mode", "bytes", "ns", "energy", "bus_bytes"];

    pub fn csv_record(&self) -> [String; 5] {
        [
            self.mode.to_string(),
            self.bytes.to_string(),
            self.ledger.elapsed_ns().to_string(),
            self.ledger.energy.to_string(),
            self.ledger.bus_bytes.to_string(),
        ]
    }
}

fn row_count(sim: &SimConfig, size: u64) -> Result<u32> {
    let row = sim.geometry.row_bytes();
    if size == 0 || !size.is_multiple_of(row) {
        return Err(Error::Misaligned {
            what: "copy size",
            align: row,
        });
    }
    let n = size / row;
    let limit = sim.geometry.layout().data_rows as u64 / 2;
    if n > limit {
        return Err(Error::OutOfRange {
            what: "rows to copy",
            value: n,
            limit,
        });
    }
    Ok(n as u32)
}

/// Source and destination of row `i` for a row-granular mode.
fn rows_for(mode: CopyMode, i: u32, half: u32) -> (RowRef, RowRef) {
    match mode {
        // baseline shares the bank so its two row cycles run back to back
        CopyMode::Fpm | CopyMode::Baseline => (RowRef::new(0, 0, i), RowRef::new(0, 0, half + i)),
        CopyMode::Intra => (RowRef::new(0, 0, i), RowRef::new(0, 1, i)),
        _ => (RowRef::new(0, 0, i), RowRef::new(1, 0, i)),
    }
}

/// Copies `size` bytes of random data with `mode` on a fresh rank and
/// checks the destination.
pub fn run_copy(sim: &SimConfig, mode: CopyMode, size: u64, seed: u64) -> Result<CopyRun> {
    if mode == CopyMode::Auto {
        return run_auto(sim, size, Placement::SameSubarray, seed);
    }
    let mut rank = RankState::new(sim.geometry.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = sim.geometry.row_bits();
    let m = &sim.timing;
    let mut ledger = CostLedger::default();
    let n = row_count(sim, size)?;
    let half = sim.geometry.layout().data_rows / 2;
    for i in 0..n {
        let (s, d) = rows_for(mode, i, half);
        let data = BitRow::random(bits, &mut rng);
        rank.set_row(s.bank, s.subarray, s.row, data.clone())?;
        rank.fence();
        ledger += match mode {
            CopyMode::Fpm => rowclone::copy_fpm(&mut rank, s, d, m)?,
            CopyMode::Psm => rowclone::copy_psm_interbank(&mut rank, s, d, m)?,
            CopyMode::Intra => rowclone::copy_intrabank(&mut rank, s, d, m)?,
            CopyMode::Baseline => rowclone::copy_baseline(&mut rank, s, d, m)?,
            CopyMode::Auto => unreachable!(),
        };
        if rank.row(d.bank, d.subarray, d.row)? != data {
            return Err(Error::InvalidValue {
                key: "copy".into(),
                value: format!("{d:?}"),
                reason: "destination differs from source".into(),
            });
        }
    }
    let reserved_intact = rank.reserved_rows_intact();
    Ok(CopyRun { mode, bytes: size, ledger, reserved_intact })
}

/// Where a planned copy puts its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Destination rows share bank and subarray with the source rows.
    SameSubarray,
    /// Row-aligned destination at a seeded random address.
    Random,
}

impl FromStr for Placement {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "same-subarray" => Ok(Placement::SameSubarray),
            "random" => Ok(Placement::Random),
            _ => Err(format!("unknown placement `{s}`")),
        }
    }
}

/// Plans and executes a copy of `size` bytes from address 0, then checks
/// every destination byte.
pub fn run_auto(sim: &SimConfig, size: u64, placement: Placement, seed: u64) -> Result<CopyRun> {
    let g = &sim.geometry;
    let m = &sim.timing;
    let mut rank = RankState::new(g.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = size.div_ceil(g.row_bytes());
    let data_rows = g.capacity() / g.row_bytes();
    if size == 0 || 2 * rows > data_rows {
        return Err(Error::OutOfRange {
            what: "copy size",
            value: size,
            limit: g.capacity() / 2,
        });
    }
    let src = 0;
    let dst = match placement {
        Placement::SameSubarray => g.row_address(0, 0, g.layout().data_rows / 2)?,
        Placement::Random => rng.random_range(rows..=data_rows - rows) * g.row_bytes(),
    };
    for a in (src..rows * g.row_bytes()).step_by(g.row_bytes() as usize) {
        let l = g.decode_address(a)?;
        rank.set_row(l.bank, l.subarray, l.row, BitRow::random(g.row_bits(), &mut rng))?;
    }
    let plan = rowclone::plan_memcopy(src, dst, size, g, g.mcgr())?;
    let ledger = rowclone::execute_plan(&mut rank, &plan, m)?.total();
    for o in (0..size).step_by(g.cacheline_size as usize) {
        let (a, _) = rowclone::read_line(&mut rank, src + o, m)?;
        let (b, _) = rowclone::read_line(&mut rank, dst + o, m)?;
        let n = (size - o).min(g.cacheline_size as u64) as usize;
        if a[..n] != b[..n] {
            return Err(Error::InvalidValue {
                key: "copy".into(),
                value: format!("{:#x}", dst + o),
                reason: "destination differs from source".into(),
            });
        }
    }
    Ok(CopyRun {
        mode: CopyMode::Auto,
        bytes: size,
        ledger,
        reserved_intact: rank.reserved_rows_intact(),
    })
}

/// Zeroes `size` bytes with FPM from the zero row, or over the channel.
pub fn run_zero(sim: &SimConfig, in_dram: bool, size: u64, seed: u64) -> Result<CopyRun> {
    let n = row_count(sim, size)?;
    let mut rank = RankState::new(sim.geometry.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = sim.geometry.row_bits();
    let mut ledger = CostLedger::default();
    let rows = (0..n)
        .map(|i| sim.geometry.decode_address(i as u64 * sim.geometry.row_bytes()).map(|l| RowRef::of(&l)))
        .collect::<Result<Vec<_>>>()?;
    for d in &rows {
        rank.set_row(d.bank, d.subarray, d.row, BitRow::random(bits, &mut rng))?;
    }
    if in_dram {
        ledger = rowclone::bulk_zero(&mut rank, 0, size, &sim.timing)?;
    } else {
        for &d in &rows {
            rank.fence();
            ledger += rowclone::zero_baseline(&mut rank, d, &sim.timing)?;
        }
    }
    for (i, d) in rows.iter().enumerate() {
        if !rank.row(d.bank, d.subarray, d.row)?.is_all_zeros() {
            return Err(Error::InvalidValue {
                key: "zero".into(),
                value: i.to_string(),
                reason: "row not zeroed".into(),
            });
        }
    }
    let mode = if in_dram { CopyMode::Fpm } else { CopyMode::Baseline };
    let reserved_intact = rank.reserved_rows_intact();
    Ok(CopyRun { mode, bytes: size, ledger, reserved_intact })
}

/// One-row copy and zeroing in every mode, with the latency and traffic
/// checks.
pub fn bench_copy(sim: &SimConfig, seed: u64) -> Result<BenchReport> {
    let row = sim.geometry.row_bytes();
    let mut r = BenchReport::new("copy", &sim.source, &format!("seed={seed}"));
    let run = |m| run_copy(sim, m, row, seed);
    let (fpm, psm, intra, base) = (
        run(CopyMode::Fpm)?,
        run(CopyMode::Psm)?,
        run(CopyMode::Intra)?,
        run(CopyMode::Baseline)?,
    );
    let (zf, zb) = (run_zero(sim, true, row, seed)?, run_zero(sim, false, row, seed)?);
    let ns = |c: &CopyRun| c.ledger.elapsed_ns();
    r.metric("row_bytes", row as f64, "B");
    r.check("fpm_copy_ns", ns(&fpm), "ns", Target::Exact(90.0), "C6");
    r.check("baseline_copy_ns", ns(&base), "ns", Target::Within { value: 1046.0, rel: 0.1 }, "C6");
    r.check("psm_interbank_ns", ns(&psm), "ns", Target::Within { value: 540.0, rel: 0.1 }, "C6");
    r.check("intrabank_ns", ns(&intra), "ns", Target::Within { value: 1050.0, rel: 0.1 }, "C6");
    r.check("fpm_zero_ns", ns(&zf), "ns", Target::Exact(90.0), "C6");
    r.metric("baseline_zero_ns", ns(&zb), "ns");
    r.check("copy_speedup", ns(&base) / ns(&fpm), "x", Target::Range { lo: 10.5, hi: 12.8 }, "C6");
    r.check("zero_speedup", ns(&zb) / ns(&zf), "x", Target::Range { lo: 5.4, hi: 6.7 }, "C6");
    r.check("fpm_bus_bytes", fpm.ledger.bus_bytes as f64, "B", Target::Exact(0.0), "C7");
    r.check("psm_bus_bytes", psm.ledger.bus_bytes as f64, "B", Target::Exact(0.0), "C7");
    r.check(
        "baseline_bus_bytes",
        base.ledger.bus_bytes as f64,
        "B",
        Target::Exact(2.0 * row as f64),
        "C7",
    );
    r.metric("fpm_energy", fpm.ledger.energy, "nJ");
    r.metric("baseline_energy", base.ledger.energy, "nJ");
    r.check(
        "copy_energy_reduction",
        base.ledger.energy / fpm.ledger.energy,
        "x",
        Target::AtLeast(25.0),
        "C7",
    );
    r.metric("zero_energy_reduction", zb.ledger.energy / zf.ledger.energy, "x");
    let intact = [fpm, psm, intra, base, zf, zb].iter().all(|c| c.reserved_intact);
    r.holds("reserved_rows_intact", intact, "C12");
    Ok(r)
}
