//! One pass/fail line per acceptance criterion. Every check compares the
//! simulator against an oracle written here, not against library helpers.

use std::io::Write;
use std::time::{Duration, Instant};

use pimdram::array::{SubarrayState, Wordline};
use pimdram::bench::copy::{bench_copy, run_copy, CopyMode};
use pimdram::bench::dbi::{dawb_row_hits, differential, flush_lookups};
use pimdram::bench::htap::{bench_htap, Table};
use pimdram::bench::{bitmap, sets, BenchReport};
use pimdram::bits::BitRow;
use pimdram::buddy::{self, BitwiseOp, Operand};
use pimdram::cache::trace::{data_token, random_trace, replay, TraceOp, TraceParams};
use pimdram::cache::{CacheConfig, FlatMemory, LineAddr, LineStore, PatternMap};
use pimdram::command::{aap, issue, run_sequence, AapMode, DramCommand, RowAddr};
use pimdram::config::{load_config, Geometry, SimConfig, TimingEnergyModel};
use pimdram::gsdram::{self, GsConfig};
use pimdram::rank::RankState;
use pimdram::system::{cache_config_for, System};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

fn sim(name: &str) -> SimConfig {
    load_config(name, &[]).unwrap()
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

/// Rows of a report tagged with `criterion` must all pass.
fn report_rows(r: &BenchReport, criterion: &str) -> Result<usize, String> {
    let rows: Vec<_> = r.rows.iter().filter(|x| x.criterion == Some(criterion)).collect();
    ensure(!rows.is_empty(), format!("{} has no {criterion} rows", r.name))?;
    for x in &rows {
        ensure(x.passed() == Some(true), format!("{}.{} = {}", r.name, x.metric, x.value))?;
    }
    Ok(rows.len())
}

fn maj(a: bool, b: bool, c: bool) -> bool {
    (a && b) || (b && c) || (c && a)
}

fn c1() -> Verdict {
    let start = Instant::now();
    let bits = 8;
    let row = |f: &dyn Fn(usize) -> bool| {
        let mut r = BitRow::zeros(bits);
        (0..bits).for_each(|i| r.set(i, f(i)));
        r
    };
    // bit i of A, B, C holds bits 0, 1, 2 of i: all eight combinations
    let mut s = SubarrayState::new(4, bits);
    s.set_row(0, row(&|i| i & 1 != 0)).map_err(e)?;
    s.set_row(1, row(&|i| i & 2 != 0)).map_err(e)?;
    s.set_row(2, row(&|i| i & 4 != 0)).map_err(e)?;
    s.activate(&[Wordline::Row(0), Wordline::Row(1), Wordline::Row(2)]).map_err(e)?;
    let got = s.rowbuffer().cloned().ok_or("no row buffer")?;
    for i in 0..bits {
        let want = maj(i & 1 != 0, i & 2 != 0, i & 4 != 0);
        ensure(got.get(i) == want, format!("majority wrong for combination {i}"))?;
        for r in 0..3 {
            ensure(s.row(r).map_err(e)?.get(i) == want, "cells not overwritten with result")?;
        }
    }
    s.precharge();
    for (ctl, name) in [(false, "AND"), (true, "OR")] {
        let mut s = SubarrayState::new(4, bits);
        s.set_row(0, row(&|i| i & 1 != 0)).map_err(e)?;
        s.set_row(1, row(&|i| i & 2 != 0)).map_err(e)?;
        s.set_row(2, row(&|_| ctl)).map_err(e)?;
        s.activate(&[Wordline::Row(0), Wordline::Row(1), Wordline::Row(2)]).map_err(e)?;
        let got = s.rowbuffer().cloned().ok_or("no row buffer")?;
        for i in 0..4 {
            let (a, b) = (i & 1 != 0, i & 2 != 0);
            let want = if ctl { a || b } else { a && b };
            ensure(got.get(i) == want, format!("{name} wrong for a={a} b={b}"))?;
        }
    }
    let t = within_time(start, Duration::from_secs(1))?;
    Ok(format!("8 majority combinations and AND/OR control rows exact in {t:?}"))
}

fn oracle(op: BitwiseOp, a: u64, b: u64) -> u64 {
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

fn run_op(rank: &mut RankState, m: &TimingEnergyModel, op: BitwiseOp, a: &BitRow, b: &BitRow) -> Result<BitRow, String> {
    let g = rank.geometry().clone();
    let at = |row| Operand { bank: 0, subarray: 0, row };
    rank.set_row(0, 0, 0, a.clone()).map_err(e)?;
    rank.set_row(0, 0, 1, b.clone()).map_err(e)?;
    let p = buddy::synthesize(op, at(0), Some(at(1)), at(2), &g).map_err(e)?;
    let (_, out) = buddy::execute(rank, &p, m).map_err(e)?;
    ensure(rank.row(0, 0, 0).map_err(e)? == *a, format!("{op} clobbered an operand"))?;
    Ok(out)
}

fn c2() -> Verdict {
    let start = Instant::now();
    let s = sim("ddr3-1600-buddy");
    let mut rank = RankState::new(Geometry::desk()).map_err(e)?;
    let bits = rank.geometry().row_bits();
    ensure(bits == 65536, "desk rows are not 8 KB")?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let (a, b) = (BitRow::random(bits, &mut rng), BitRow::random(bits, &mut rng));
        for op in BitwiseOp::ALL {
            let got = run_op(&mut rank, &s.timing, op, &a, &b)?;
            let want: Vec<u64> = a.words().iter().zip(b.words()).map(|(&x, &y)| oracle(op, x, y)).collect();
            ensure(got == BitRow::from_words(bits, want), format!("{op} differs on a random 8 KB row"))?;
        }
    }
    let mut tiny = RankState::new(Geometry::byte_rows()).map_err(e)?;
    for a in 0..=255u64 {
        for b in 0..=255u64 {
            let (ra, rb) = (BitRow::from_words(8, vec![a]), BitRow::from_words(8, vec![b]));
            for op in BitwiseOp::ALL {
                let got = run_op(&mut tiny, &s.timing, op, &ra, &rb)?;
                ensure(got.words()[0] == oracle(op, a, b) & 0xff, format!("{op}({a:#04x}, {b:#04x})"))?;
            }
        }
    }
    ensure(rank.reserved_rows_intact() && tiny.reserved_rows_intact(), "reserved rows changed")?;
    let t = within_time(start, Duration::from_secs(30))?;
    Ok(format!("7 ops x 1000 random 8 KB rows and 65536 byte pairs exact in {t:?}"))
}

fn c3() -> Verdict {
    let s = sim("ddr3-1600-buddy");
    let m = &s.timing;
    let mut out = Vec::new();
    for (mode, want) in [(AapMode::Naive, 80.0), (AapMode::Overlapped, 49.0)] {
        let mut rank = RankState::new(Geometry::desk()).map_err(e)?;
        let l = aap(&mut rank, 0, 0, RowAddr::Row(0), RowAddr::B(0), mode, m).map_err(e)?;
        ensure(l.elapsed_ns() == want, format!("{mode} AAP took {} ns", l.elapsed_ns()))?;
        out.push(format!("{mode} {} ns", l.elapsed_ns()));
    }
    let naive = 2.0 * m.t_ras.as_ns() + m.t_rp.as_ns();
    let overlapped = m.t_ras.as_ns() + m.t_aap_overlap_extra.as_ns() + m.t_rp.as_ns();
    ensure(naive == 80.0 && overlapped == 49.0, "profile constants disagree with the arithmetic")?;
    Ok(out.join(", "))
}

fn c4() -> Verdict {
    let s = sim("ddr3-1600-buddy");
    let table = [
        (BitwiseOp::Not, 77.8),
        (BitwiseOp::And, 38.9),
        (BitwiseOp::Or, 38.9),
        (BitwiseOp::Nand, 31.1),
        (BitwiseOp::Nor, 31.1),
        (BitwiseOp::Xor, 22.2),
        (BitwiseOp::Xnor, 22.2),
    ];
    ensure(s.geometry.row_bytes() == 8192, "rank row is not 8 KB")?;
    let mut out = Vec::new();
    for (op, listed) in table {
        let one = buddy::throughput(op, 1, &s.timing, &s.geometry);
        // independent: one result row per (steps x 49 ns) in GiB/s
        let mine = 8192.0 / (op.steps() as f64 * 49e-9) / (1u64 << 30) as f64;
        ensure((one - mine).abs() <= 1e-9 * mine, format!("{op}: {one} vs {mine}"))?;
        ensure((one - listed).abs() <= 0.1 * listed, format!("{op}: {one:.2} vs table {listed}"))?;
        for k in 2..=8 {
            let tk = buddy::throughput(op, k, &s.timing, &s.geometry);
            ensure((tk - k as f64 * one).abs() <= 1e-12 * tk, format!("{op} not linear at {k} banks"))?;
        }
        out.push(format!("{op} {one:.2}"));
    }
    Ok(format!("GiB/s per bank: {}; linear to 8 banks", out.join(", ")))
}

fn c5() -> Verdict {
    let s = sim("ddr3-1600-buddy");
    let m = &s.timing;
    let mut rank = RankState::new(Geometry::desk()).map_err(e)?;
    let act = |row| DramCommand::Activate { bank: 0, subarray: 0, row };
    let single = issue(&mut rank, &act(RowAddr::Row(0)), m).map_err(e)?.ledger.energy;
    issue(&mut rank, &DramCommand::Precharge { bank: 0 }, m).map_err(e)?;
    // B12 raises T0, T1 and T2
    let triple = issue(&mut rank, &act(RowAddr::B(12)), m).map_err(e)?.ledger.energy;
    ensure(single == m.e_act, format!("single activate costs {single}, e_act {}", m.e_act))?;
    ensure(triple == 1.44 * single, format!("triple activate costs {triple}, single {single}"))?;
    Ok(format!("triple activate {triple} nJ = 1.44 x {single} nJ"))
}

fn c6() -> Verdict {
    let s = sim("ddr3-1066-rowclone");
    let r = bench_copy(&s, 0).map_err(e)?;
    let n = report_rows(&r, "C6")?;
    let ns = |m| r.get(m).unwrap_or(f64::NAN);
    ensure(ns("fpm_copy_ns") == 90.0, "FPM copy not 90 ns")?;
    Ok(format!(
        "{n} rows: fpm {} ns, baseline {} ns, psm {} ns, intra {} ns, ratios {:.2}x / {:.2}x",
        ns("fpm_copy_ns"),
        ns("baseline_copy_ns"),
        ns("psm_interbank_ns"),
        ns("intrabank_ns"),
        ns("copy_speedup"),
        ns("zero_speedup")
    ))
}

fn c7() -> Verdict {
    let base = sim("ddr3-1066-rowclone");
    let row = base.geometry.row_bytes();
    let line = base.geometry.cacheline_size as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for trial in 0..100 {
        let mut s = base.clone();
        let m = &mut s.timing;
        m.e_act = rng.random_range(0.1..50.0);
        m.e_rd = rng.random_range(0.0..10.0);
        m.e_wr = rng.random_range(0.0..10.0);
        // bus energy of one line transfer at least one row activation
        m.e_bus_per_byte = m.e_act / line * rng.random_range(1.0..20.0);
        let fpm = run_copy(&s, CopyMode::Fpm, row, trial).map_err(e)?.ledger;
        let basel = run_copy(&s, CopyMode::Baseline, row, trial).map_err(e)?.ledger;
        ensure(fpm.bus_bytes == 0, "FPM used the channel")?;
        ensure(basel.bus_bytes == 2 * row, format!("baseline moved {} bytes", basel.bus_bytes))?;
        ensure(fpm.energy * 25.0 < basel.energy, format!("trial {trial}: {} vs {}", fpm.energy, basel.energy))?;
        worst = worst.min(basel.energy / fpm.energy);
    }
    Ok(format!("bus bytes 0 vs {}; 100 constant sets, smallest reduction {worst:.1}x", 2 * row))
}

/// Butterfly shuffle written from its definition: stage k swaps adjacent
/// blocks of 2^k values when bit k of the column is set.
fn butterfly(line: &mut [u64], column: u32, stages: u32) {
    for k in 0..stages {
        if column >> k & 1 == 1 {
            let half = 1 << k;
            for group in line.chunks_mut(2 * half) {
                let (a, b) = group.split_at_mut(half);
                a.swap_with_slice(b);
            }
        }
    }
}

fn c8_config(chips: u32, stages: u32, pbits: u32, model: &TimingEnergyModel) -> Result<usize, String> {
    let cfg = GsConfig::new(chips, stages, pbits).map_err(e)?;
    let geo = Geometry {
        chips_per_rank: chips,
        cacheline_size: chips * 8,
        ..Geometry::desk()
    };
    let mut rank = RankState::new(geo.clone()).map_err(e)?;
    let cols = geo.columns_per_row();
    // physical[col][chip]: row filled with its own value indices
    let physical: Vec<Vec<u64>> = (0..cols)
        .map(|c| {
            let mut l: Vec<u64> = (0..chips as u64).map(|j| c as u64 * chips as u64 + j).collect();
            butterfly(&mut l, c, stages);
            l
        })
        .collect();
    for (c, words) in physical.iter().enumerate() {
        let layout = rank.column_layout();
        let mut r = rank.row(0, 0, 0).map_err(e)?;
        for (chip, &w) in words.iter().enumerate() {
            r.set_field(layout.bit_offset(chip as u32, c as u32), 64, w);
        }
        rank.set_row(0, 0, 0, r).map_err(e)?;
    }
    let open = DramCommand::Activate { bank: 0, subarray: 0, row: RowAddr::Row(0) };
    run_sequence(&mut rank, &[open], model).map_err(e)?;
    let mut checked = 0;
    for p in 0..1u32 << pbits {
        let mut seen = vec![false; (cols * chips) as usize];
        for c in 0..cols {
            let mut want: Vec<u64> = (0..chips).map(|i| physical[((i & p) ^ c) as usize][i as usize]).collect();
            want.sort_unstable();
            let (got, _) = gsdram::gather(&mut rank, 0, p, c, &cfg, model).map_err(e)?;
            ensure(got == want, format!("({chips},{stages},{pbits}) pattern {p} column {c}: {got:?} vs {want:?}"))?;
            want.iter().for_each(|&v| seen[v as usize] = true);
            // scatter then gather is the identity
            let line: Vec<u64> = (0..chips as u64).map(|i| 0xabc0_0000 + i).collect();
            gsdram::scatter(&mut rank, 0, p, c, &line, &cfg, model).map_err(e)?;
            ensure(gsdram::gather(&mut rank, 0, p, c, &cfg, model).map_err(e)?.0 == line, "scatter/gather")?;
            gsdram::scatter(&mut rank, 0, p, c, &got, &cfg, model).map_err(e)?;
            checked += 1;
        }
        ensure(seen.iter().all(|&x| x), format!("pattern {p} does not cover the row"))?;
    }
    // power-of-two strides up to 2^stages: one access, no chip conflicts
    for k in 0..=stages {
        let stride = 1u64 << k;
        let p = gsdram::pattern_for_stride(stride, &cfg).map_err(e)?;
        for c in 0..cols {
            let (got, _) = gsdram::gather(&mut rank, 0, p, c, &cfg, model).map_err(e)?;
            let chips_used: std::collections::BTreeSet<u32> =
                gsdram::access_map(p, c, &cfg).map_err(e)?.iter().map(|x| x.0).collect();
            ensure(chips_used.len() == chips as usize, "chip conflict")?;
            ensure(got.windows(2).all(|w| w[1] - w[0] == stride), format!("stride {stride} column {c}: {got:?}"))?;
        }
    }
    Ok(checked)
}

fn c8_transparency(model: &TimingEnergyModel) -> Result<(), String> {
    let cfg = GsConfig::new(8, 3, 3).map_err(e)?;
    let geo = Geometry::desk();
    let open = DramCommand::Activate { bank: 0, subarray: 0, row: RowAddr::Row(3) };
    let mut gs = RankState::new(geo.clone()).map_err(e)?;
    let mut plain = RankState::new(geo.clone()).map_err(e)?;
    run_sequence(&mut gs, std::slice::from_ref(&open), model).map_err(e)?;
    run_sequence(&mut plain, &[open], model).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2000 {
        let column = rng.random_range(0..geo.columns_per_row());
        if rng.random_bool(0.5) {
            let data: Vec<u64> = (0..8).map(|_| rng.random()).collect();
            gsdram::scatter(&mut gs, 0, 0, column, &data, &cfg, model).map_err(e)?;
            run_sequence(&mut plain, &[DramCommand::Write { bank: 0, column, data }], model).map_err(e)?;
        } else {
            let (a, _) = gsdram::gather(&mut gs, 0, 0, column, &cfg, model).map_err(e)?;
            let b = run_sequence(&mut plain, &[DramCommand::Read { bank: 0, column }], model).map_err(e)?;
            ensure(b.reads.first() == Some(&a), format!("pattern 0 read of column {column} differs"))?;
        }
    }
    Ok(())
}

fn c8() -> Verdict {
    let start = Instant::now();
    let m = sim("ddr3-1600-buddy").timing;
    let a = c8_config(4, 2, 2, &m)?;
    let b = c8_config(8, 3, 3, &m)?;
    c8_transparency(&m)?;
    let t = within_time(start, Duration::from_secs(10))?;
    Ok(format!("{a} + {b} (pattern, column) pairs, strides, pattern-0 transparency in {t:?}"))
}

fn c9() -> Verdict {
    let s = sim("ddr3-1600-buddy");
    let mut out = Vec::new();
    for n in [1024u64, 4096] {
        let mut rng = ChaCha8Rng::seed_from_u64(n);
        let data: Vec<[u64; 8]> = (0..n).map(|_| std::array::from_fn(|_| rng.random::<u16>() as u64)).collect();
        for field in [0, 5] {
            let want: u64 = data.iter().map(|t| t[field]).sum();
            let (gsum, glines) = Table::new(&s, &data).map_err(e)?.scan_gathered(field).map_err(e)?;
            let (rsum, rlines) = Table::new(&s, &data).map_err(e)?.scan_rows(field).map_err(e)?;
            ensure(gsum == want && rsum == want, format!("field {field} sums differ"))?;
            ensure(glines == n / 8 && rlines == n, format!("n={n}: {glines} vs {rlines} lines"))?;
        }
        let mut t = Table::new(&s, &data).map_err(e)?;
        for k in [0, n / 2, n - 1] {
            ensure(t.transaction(k, 3).map_err(e)? == 1, "transaction fetched more than one line")?;
        }
        out.push(format!("n={n}: {} vs {}", n / 8, n));
    }
    report_rows(&bench_htap(&s, 4096, 100, 2, 9).map_err(e)?, "C9")?;
    Ok(format!("scan lines gathered vs row store {}; transactions 1 line", out.join(", ")))
}

fn flat(cfg: &CacheConfig) -> FlatMemory {
    FlatMemory::new(PatternMap::new(cfg.row_bytes, cfg.gs))
}

/// Final image of applying every write in trace order.
fn write_order_image(cfg: &CacheConfig, ops: &[TraceOp]) -> FlatMemory {
    let mut m = flat(cfg);
    for (i, op) in ops.iter().enumerate() {
        if let TraceOp::Writeback { addr, pattern } = *op {
            m.write_line(LineAddr::new(addr, pattern), &data_token(i));
        }
    }
    m
}

fn c10() -> Verdict {
    let start = Instant::now();
    let base = CacheConfig::default();
    let p = TraceParams {
        ops: 100_000,
        ..TraceParams::default()
    };
    let traces = 100;
    let failures = std::sync::Mutex::new(Vec::new());
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    std::thread::scope(|sc| {
        for w in 0..workers {
            let failures = &failures;
            sc.spawn(move || {
                for t in (w..traces).step_by(workers) {
                    let mut rng = ChaCha8Rng::seed_from_u64(1000 + t as u64);
                    let ops = random_trace(&mut rng, &p);
                    let want = write_order_image(&base, &ops).image();
                    match differential(&base, &ops) {
                        Ok(reps) => {
                            for r in reps.iter().filter(|r| !r.equivalent) {
                                failures.lock().unwrap().push(format!("trace {t} {} dawb={}", r.policy, r.dawb));
                            }
                            // the reference cache itself against write order
                            let mut c = pimdram::cache::Cache::new(base, flat(&base)).unwrap();
                            replay(&mut c, &ops, false).unwrap();
                            if c.memory().image() != want {
                                failures.lock().unwrap().push(format!("trace {t}: image differs from write order"));
                            }
                        }
                        Err(err) => failures.lock().unwrap().push(format!("trace {t}: {err}")),
                    }
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    ensure(failures.is_empty(), failures.join("; "))?;
    let t = within_time(start, Duration::from_secs(120))?;
    Ok(format!("{traces} traces x 10^5 ops x 5 policies x DAWB on/off identical in {t:?}"))
}

fn c11() -> Verdict {
    let base = CacheConfig::default();
    let blocks = base.row_blocks();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let density: f64 = rng.random();
        let dirty: Vec<u64> = (0..blocks).filter(|_| rng.random_bool(density)).collect();
        let (dbi, scan, pop) = flush_lookups(&base, &dirty).map_err(e)?;
        ensure(pop as usize == dirty.len(), "dirty vector wrong")?;
        ensure(dbi == dirty.len() as u64, format!("{dbi} lookups for {} dirty blocks", dirty.len()))?;
        ensure(scan == 128, format!("row scan used {scan} lookups"))?;
    }
    let (off, on) = dawb_row_hits(&base, 200_000, 11).map_err(e)?;
    ensure(on > off, format!("DAWB {on} vs {off}"))?;
    Ok(format!("flush lookups = popcount on 200 vectors (scan 128); row-hit rate {off:.4} -> {on:.4} with DAWB"))
}

fn c12() -> Verdict {
    let buddy = sim("ddr3-1600-buddy");
    let reports = [
        bench_copy(&sim("ddr3-1066-rowclone"), 0).map_err(e)?,
        bitmap::bench_bitmap(&buddy, 100_000, 3, 0).map_err(e)?,
        sets::bench_set_ops(&buddy, 200_000, 20_000, 0).map_err(e)?,
        bench_htap(&buddy, 4096, 100, 2, 0).map_err(e)?,
    ];
    for r in &reports {
        ensure(r.get("reserved_rows_intact") == Some(1.0), format!("{} disturbed reserved rows", r.name))?;
    }
    // a cache trace driven into DRAM through the coherent system
    let mut sys = System::new(&buddy, cache_config_for(&buddy.geometry)).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ops = random_trace(&mut rng, &TraceParams { ops: 20_000, ..TraceParams::default() });
    replay(sys.cache_mut(), &ops, false).map_err(e)?;
    sys.bulk_zero(buddy.geometry.row_bytes() * 200, 4 * buddy.geometry.row_bytes()).map_err(e)?;
    sys.memcopy(0, buddy.geometry.row_bytes() * 300, 3 * buddy.geometry.row_bytes()).map_err(e)?;
    let rank = sys.rank();
    let layout = rank.layout();
    let g = rank.geometry();
    for b in 0..g.banks_per_chip {
        for s in 0..g.subarrays_per_bank {
            ensure(rank.row(b, s, layout.zero()).map_err(e)?.is_all_zeros(), format!("zero row {b}/{s}"))?;
            ensure(rank.row(b, s, layout.c0()).map_err(e)?.is_all_zeros(), format!("C0 {b}/{s}"))?;
            ensure(rank.row(b, s, layout.c1()).map_err(e)?.is_all_ones(), format!("C1 {b}/{s}"))?;
        }
    }
    Ok(format!("{} benchmarks and a DRAM-backed cache trace leave zero, C0 and C1 rows intact", reports.len()))
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Verdict); 12] = [
        (1, c1),
        (2, c2),
        (3, c3),
        (4, c4),
        (5, c5),
        (6, c6),
        (7, c7),
        (8, c8),
        (9, c9),
        (10, c10),
        (11, c11),
        (12, c12),
    ];
    let mut failed = Vec::new();
    // the stdout handle bypasses test capture, so the lines always show
    let mut out = std::io::stdout();
    for (n, f) in criteria {
        let line = match f() {
            Ok(detail) => format!("criterion {n:2}: PASS  {detail}"),
            Err(why) => {
                failed.push(n);
                format!("criterion {n:2}: FAIL  {why}")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
