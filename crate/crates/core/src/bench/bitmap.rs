//! Bitmap-index query run with in-DRAM bitwise operations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{host_row_ns, BenchReport, Target};
use crate::bits::BitRow;
use crate::buddy::{self, BitwiseOp, Operand};
use crate::command::CostLedger;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rank::RankState;

/// Handle to a bit vector stored in an [`Arena`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot(u32);

/// Bit vectors longer than a row, split into row-sized chunks. Chunk `j`
/// of every vector lives in the same bank and subarray, so bitwise
/// programs run chunk by chunk.
#[derive(Debug, Clone)]
pub struct Arena {
    rank: RankState,
    sim: SimConfig,
    len: usize,
    chunks: u32,
    next: u32,
    /// Serial cost of every bitwise program run.
    pub ledger: CostLedger,
    pub ops: [u64; 7],
    pub bitcounts: u64,
    /// Modeled host time for the same work over the channel.
    pub host_ns: f64,
}

impl Arena {
    pub fn new(sim: &SimConfig, len: usize) -> Result<Self> {
        let g = &sim.geometry;
        let chunks = len.max(1).div_ceil(g.row_bits()) as u32;
        let places = g.banks_per_chip * g.subarrays_per_bank;
        if chunks > places {
            return Err(Error::OutOfRange {
                what: "bit vector rows",
                value: chunks as u64,
                limit: places as u64,
            });
        }
        Ok(Arena {
            rank: RankState::new(g.clone())?,
            sim: sim.clone(),
            len,
            chunks,
            next: 0,
            ledger: CostLedger::default(),
            ops: [0; 7],
            bitcounts: 0,
            host_ns: 0.0,
        })
    }

    pub fn rank(&self) -> &RankState {
        &self.rank
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self, op: BitwiseOp) -> u64 {
        self.ops[BitwiseOp::ALL.iter().position(|&o| o == op).expect("listed")]
    }

    fn place(&self, chunk: u32, slot: Slot) -> Operand {
        let banks = self.sim.geometry.banks_per_chip;
        Operand {
            bank: chunk % banks,
            subarray: chunk / banks,
            row: slot.0,
        }
    }

    pub fn alloc(&mut self) -> Result<Slot> {
        let rows = self.sim.geometry.layout().data_rows;
        if self.next >= rows {
            return Err(Error::OutOfRange {
                what: "bit vectors",
                value: self.next as u64 + 1,
                limit: rows as u64,
            });
        }
        self.next += 1;
        Ok(Slot(self.next - 1))
    }

    /// Writes a vector without cost, as initial data.
    pub fn store(&mut self, slot: Slot, v: &BitRow) -> Result<()> {
        let rb = self.sim.geometry.row_bits();
        let wpr = rb / 64;
        for c in 0..self.chunks {
            let lo = c as usize * wpr;
            let mut words = vec![0; wpr];
            for (i, w) in words.iter_mut().enumerate() {
                *w = v.words().get(lo + i).copied().unwrap_or(0);
            }
            let o = self.place(c, slot);
            self.rank.set_row(o.bank, o.subarray, o.row, BitRow::from_words(rb, words))?;
        }
        Ok(())
    }

    /// Reads a vector without cost.
    pub fn load(&self, slot: Slot) -> Result<BitRow> {
        let mut words = Vec::new();
        for c in 0..self.chunks {
            let o = self.place(c, slot);
            words.extend_from_slice(self.rank.row(o.bank, o.subarray, o.row)?.words());
        }
        words.truncate(self.len.div_ceil(64));
        if !self.len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
        Ok(BitRow::from_words(self.len, words))
    }

    /// `dst = op(a, b)` on every chunk.
    pub fn op(&mut self, op: BitwiseOp, a: Slot, b: Option<Slot>, dst: Slot) -> Result<()> {
        let g = self.sim.geometry.clone();
        for c in 0..self.chunks {
            let p = buddy::synthesize(
                op,
                self.place(c, a),
                b.map(|b| self.place(c, b)),
                self.place(c, dst),
                &g,
            )?;
            self.ledger += buddy::execute(&mut self.rank, &p, &self.sim.timing)?.0;
        }
        self.ops[BitwiseOp::ALL.iter().position(|&o| o == op).expect("listed")] += 1;
        let transfers = if op.is_unary() { 2.0 } else { 3.0 };
        self.host_ns += transfers * self.chunks as f64 * host_row_ns(&self.sim.timing, &g);
        Ok(())
    }

    /// Population count on the host; both the in-DRAM and host flows pay
    /// the row reads.
    pub fn bitcount(&mut self, slot: Slot) -> Result<u64> {
        self.bitcounts += 1;
        let read = self.chunks as f64 * host_row_ns(&self.sim.timing, &self.sim.geometry);
        self.host_ns += read;
        self.ledger.elapsed += crate::config::Time::from_ns(read);
        Ok(self.load(slot)?.count_ones())
    }
}

/// Query answers: users active in every one of the weeks, then male users
/// active in each week.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitmapAnswer {
    pub every_week: u64,
    pub male_per_week: Vec<u64>,
}

/// Flat software evaluation.
pub fn bitmap_oracle(days: &[BitRow], male: &BitRow, weeks: usize) -> BitmapAnswer {
    let m = male.len();
    let weekly: Vec<Vec<u64>> = (0..weeks)
        .map(|w| {
            (0..m.div_ceil(64))
                .map(|i| (0..7).fold(0, |acc, d| acc | days[w * 7 + d].words()[i]))
                .collect()
        })
        .collect();
    let every = (0..m.div_ceil(64))
        .map(|i| weekly.iter().fold(!0u64, |acc, wk| acc & wk[i]))
        .map(|w| w.count_ones() as u64)
        .sum();
    BitmapAnswer {
        every_week: if weeks == 0 { 0 } else { every },
        male_per_week: weekly
            .iter()
            .map(|wk| wk.iter().zip(male.words()).map(|(a, b)| (a & b).count_ones() as u64).sum())
            .collect(),
    }
}

/// Runs the query for `users` users over `weeks` weeks of daily activity.
pub fn bench_bitmap(sim: &SimConfig, users: usize, weeks: usize, seed: u64) -> Result<BenchReport> {
    let mut report = BenchReport::new("bitmap", &sim.source, &format!("users={users} weeks={weeks} seed={seed}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = |rng: &mut ChaCha8Rng, p: f64| {
        let mut b = BitRow::zeros(users);
        for i in 0..users {
            if rng.random_bool(p) {
                b.set(i, true);
            }
        }
        b
    };
    let days: Vec<BitRow> = (0..7 * weeks).map(|_| random(&mut rng, 0.3)).collect();
    let male = random(&mut rng, 0.5);

    let mut a = Arena::new(sim, users)?;
    let day_slots = (0..7 * weeks).map(|_| a.alloc()).collect::<Result<Vec<_>>>()?;
    for (s, d) in day_slots.iter().zip(&days) {
        a.store(*s, d)?;
    }
    let male_slot = a.alloc()?;
    a.store(male_slot, &male)?;

    let mut weekly = Vec::with_capacity(weeks);
    for w in 0..weeks {
        let dst = a.alloc()?;
        a.op(BitwiseOp::Or, day_slots[w * 7], Some(day_slots[w * 7 + 1]), dst)?;
        for d in 2..7 {
            a.op(BitwiseOp::Or, dst, Some(day_slots[w * 7 + d]), dst)?;
        }
        weekly.push(dst);
    }
    let mut answer = BitmapAnswer {
        every_week: 0,
        male_per_week: Vec::new(),
    };
    if let Some((&first, rest)) = weekly.split_first() {
        let every = if rest.is_empty() {
            first
        } else {
            let acc = a.alloc()?;
            a.op(BitwiseOp::And, first, Some(rest[0]), acc)?;
            for &wk in &rest[1..] {
                a.op(BitwiseOp::And, acc, Some(wk), acc)?;
            }
            acc
        };
        answer.every_week = a.bitcount(every)?;
        let tmp = a.alloc()?;
        for &wk in &weekly {
            a.op(BitwiseOp::And, wk, Some(male_slot), tmp)?;
            answer.male_per_week.push(a.bitcount(tmp)?);
        }
    }

    let n = weeks as f64;
    let (ors, ands) = (a.count(BitwiseOp::Or), a.count(BitwiseOp::And));
    report.metric("users", users as f64, "");
    report.metric("weeks", n, "");
    report.check("or_ops", ors as f64, "ops", Target::Exact(6.0 * n), "bitmap-ops");
    report.check("and_ops", ands as f64, "ops", Target::Exact((2.0 * n - 1.0).max(0.0)), "bitmap-ops");
    report.check(
        "bitcounts",
        a.bitcounts as f64,
        "ops",
        Target::Exact(if weeks == 0 { 0.0 } else { n + 1.0 }),
        "bitmap-ops",
    );
    report.holds("answer_matches_oracle", answer == bitmap_oracle(&days, &male, weeks), "C2");
    report.metric("every_week_users", answer.every_week as f64, "");
    report.metric("in_dram_ns", a.ledger.elapsed_ns(), "ns");
    report.metric("host_ns", a.host_ns, "ns");
    if a.ledger.elapsed_ns() > 0.0 {
        report.metric("speedup", a.host_ns / a.ledger.elapsed_ns(), "x");
    }
    report.holds("reserved_rows_intact", a.rank().reserved_rows_intact(), "C12");
    Ok(report)
}
