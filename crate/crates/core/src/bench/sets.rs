//! Set union, intersection and difference over bit-vector sets.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bitmap::{Arena, Slot};
use super::{BenchReport, Target};
use crate::bits::BitRow;
use crate::buddy::BitwiseOp;
use crate::config::SimConfig;
use crate::error::Result;

pub const SETS: usize = 15;

fn to_bits(universe: usize, s: &BTreeSet<usize>) -> BitRow {
    let mut b = BitRow::zeros(universe);
    for &e in s {
        b.set(e, true);
    }
    b
}

fn members(b: &BitRow) -> BTreeSet<usize> {
    (0..b.len()).filter(|&i| b.get(i)).collect()
}

/// Set results computed in DRAM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetResults {
    pub union: BTreeSet<usize>,
    pub intersection: BTreeSet<usize>,
    /// First set minus all the others.
    pub difference: BTreeSet<usize>,
}

/// Sorted-set evaluation of the same three queries.
pub fn set_oracle(sets: &[BTreeSet<usize>]) -> SetResults {
    let union = sets.iter().flatten().copied().collect();
    let intersection = sets[0]
        .iter()
        .copied()
        .filter(|e| sets[1..].iter().all(|s| s.contains(e)))
        .collect();
    let difference = sets[0]
        .iter()
        .copied()
        .filter(|e| sets[1..].iter().all(|s| !s.contains(e)))
        .collect();
    SetResults {
        union,
        intersection,
        difference,
    }
}

/// Runs the three queries over `sets` with in-DRAM bitwise operations.
pub fn run_sets(sim: &SimConfig, universe: usize, sets: &[BTreeSet<usize>]) -> Result<(SetResults, Arena)> {
    let mut a = Arena::new(sim, universe)?;
    let slots = sets
        .iter()
        .map(|s| {
            let slot = a.alloc()?;
            a.store(slot, &to_bits(universe, s))?;
            Ok(slot)
        })
        .collect::<Result<Vec<Slot>>>()?;
    let fold = |a: &mut Arena, op: BitwiseOp| -> Result<BitRow> {
        let acc = a.alloc()?;
        a.op(op, slots[0], slots.get(1).copied().or(Some(slots[0])), acc)?;
        for &s in slots.iter().skip(2) {
            a.op(op, acc, Some(s), acc)?;
        }
        a.load(acc)
    };
    let union = members(&fold(&mut a, BitwiseOp::Or)?);
    let intersection = members(&fold(&mut a, BitwiseOp::And)?);
    // a \ b = a AND NOT b, one NOT and one AND per subtrahend
    let acc = a.alloc()?;
    let not = a.alloc()?;
    a.op(BitwiseOp::Or, slots[0], Some(slots[0]), acc)?;
    for &s in &slots[1..] {
        a.op(BitwiseOp::Not, s, None, not)?;
        a.op(BitwiseOp::And, acc, Some(not), acc)?;
    }
    let difference = members(&a.load(acc)?);
    Ok((
        SetResults {
            union,
            intersection,
            difference,
        },
        a,
    ))
}

pub fn random_sets<R: Rng>(rng: &mut R, universe: usize, elems: usize, n: usize) -> Vec<BTreeSet<usize>> {
    (0..n)
        .map(|_| (0..elems).map(|_| rng.random_range(0..universe)).collect())
        .collect()
}

pub fn bench_set_ops(sim: &SimConfig, universe: usize, elems: usize, seed: u64) -> Result<BenchReport> {
    let mut r = BenchReport::new("sets", &sim.source, &format!("universe={universe} elems={elems} seed={seed}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = random_sets(&mut rng, universe, elems, SETS);
    let (got, arena) = run_sets(sim, universe, &sets)?;
    r.metric("universe", universe as f64, "");
    r.metric("sets", SETS as f64, "");
    r.holds("union_matches_oracle", got.union == set_oracle(&sets).union, "C2");
    r.holds("intersection_matches_oracle", got.intersection == set_oracle(&sets).intersection, "C2");
    r.holds("difference_matches_oracle", got.difference == set_oracle(&sets).difference, "C2");
    r.metric("union_size", got.union.len() as f64, "");
    r.metric("in_dram_ns", arena.ledger.elapsed_ns(), "ns");
    r.metric("host_ns", arena.host_ns, "ns");
    r.metric("speedup", arena.host_ns / arena.ledger.elapsed_ns(), "x");
    let mut intact = arena.rank().reserved_rows_intact();

    // degenerate cases
    let half: BTreeSet<usize> = (0..universe / 2).collect();
    let other: BTreeSet<usize> = (universe / 2..universe).collect();
    let (d, a2) = run_sets(sim, universe, &[half.clone(), other])?;
    r.check("disjoint_intersection_size", d.intersection.len() as f64, "", Target::Exact(0.0), "sets-disjoint");
    intact &= a2.rank().reserved_rows_intact();
    let (d, a3) = run_sets(sim, universe, &[half.clone(), half])?;
    r.check("self_difference_size", d.difference.len() as f64, "", Target::Exact(0.0), "sets-self");
    intact &= a3.rank().reserved_rows_intact();
    r.holds("reserved_rows_intact", intact, "C12");
    Ok(r)
}
