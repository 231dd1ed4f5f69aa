use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Replacement policy for DBI entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DbiPolicy {
    /// Least recently written.
    Lrw,
    /// LRW with bimodal insertion: most inserts land at the LRW position,
    /// every 32nd at the MRW position.
    LrwBip,
    /// 2-bit re-reference (rewrite) interval prediction.
    RewriteInterval,
    /// Evict the entry with the most dirty blocks.
    MaxDirty,
    /// Evict the entry with the fewest dirty blocks.
    MinDirty,
}

impl DbiPolicy {
    pub const ALL: [DbiPolicy; 5] = [
        DbiPolicy::Lrw,
        DbiPolicy::LrwBip,
        DbiPolicy::RewriteInterval,
        DbiPolicy::MaxDirty,
        DbiPolicy::MinDirty,
    ];
}

impl fmt::Display for DbiPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DbiPolicy::Lrw => "lrw",
            DbiPolicy::LrwBip => "lrw-bip",
            DbiPolicy::RewriteInterval => "rewrite-interval",
            DbiPolicy::MaxDirty => "max-dirty",
            DbiPolicy::MinDirty => "min-dirty",
        })
    }
}

impl FromStr for DbiPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        DbiPolicy::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| format!("unknown DBI policy `{s}`"))
    }
}

const BIP_PERIOD: u64 = 32;
const RRPV_MAX: u8 = 3;
const RRPV_INSERT: u8 = 2;

/// Identifies the region an entry tracks. Pattern lines of a region get
/// their own entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DbiKey {
    pub region: u64,
    pub pattern: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DbiEntry {
    pub valid: bool,
    pub key: DbiKey,
    /// Bit `i` marks block `i` of the region dirty.
    pub bits: u128,
    last_write: u64,
    rrpv: u8,
}

/// Set-associative table of per-region dirty bit vectors.
#[derive(Debug, Clone)]
pub struct Dbi {
    sets: usize,
    ways: usize,
    granularity: u32,
    policy: DbiPolicy,
    entries: Vec<DbiEntry>,
    clock: u64,
    inserts: u64,
    lookups: u64,
}

impl Dbi {
    pub fn new(num_entries: usize, ways: usize, granularity: u32, policy: DbiPolicy) -> Result<Self> {
        if ways == 0 || num_entries == 0 || !num_entries.is_multiple_of(ways) {
            return Err(Error::InvalidCacheConfig(format!(
                "{num_entries} DBI entries cannot be split into {ways}-way sets"
            )));
        }
        if granularity == 0 || granularity > 128 {
            return Err(Error::InvalidCacheConfig(format!(
                "DBI granularity {granularity} outside 1..=128 blocks"
            )));
        }
        Ok(Dbi {
            sets: num_entries / ways,
            ways,
            granularity,
            policy,
            entries: vec![DbiEntry::default(); num_entries],
            clock: 0,
            inserts: 0,
            lookups: 0,
        })
    }

    pub fn granularity(&self) -> u32 {
        self.granularity
    }

    pub fn policy(&self) -> DbiPolicy {
        self.policy
    }

    /// Number of DBI queries so far.
    pub fn lookups(&self) -> u64 {
        self.lookups
    }

    fn set_range(&self, key: DbiKey) -> std::ops::Range<usize> {
        let h = key.region.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ key.pattern as u64;
        let set = (h >> 17) as usize % self.sets;
        set * self.ways..(set + 1) * self.ways
    }

    fn find(&self, key: DbiKey) -> Option<usize> {
        self.set_range(key)
            .find(|&i| self.entries[i].valid && self.entries[i].key == key)
    }

    /// Dirty bit vector of a region, zero when untracked.
    pub fn dirty_bits(&mut self, key: DbiKey) -> u128 {
        self.lookups += 1;
        self.find(key).map_or(0, |i| self.entries[i].bits)
    }

    pub fn is_dirty(&mut self, key: DbiKey, block: u32) -> bool {
        self.dirty_bits(key) >> block & 1 == 1
    }

    /// Marks a block dirty. When the region needs a new entry and its set
    /// is full, the evicted entry is returned; its blocks must be written
    /// back by the caller.
    pub fn set_dirty(&mut self, key: DbiKey, block: u32) -> Option<DbiEntry> {
        debug_assert!(block < self.granularity);
        self.lookups += 1;
        self.clock += 1;
        if let Some(i) = self.find(key) {
            let e = &mut self.entries[i];
            e.bits |= 1 << block;
            e.last_write = self.clock;
            e.rrpv = 0;
            return None;
        }
        let range = self.set_range(key);
        let (slot, evicted) = match range.clone().find(|&i| !self.entries[i].valid) {
            Some(i) => (i, None),
            None => {
                let v = self.victim(range);
                (v, Some(self.entries[v]))
            }
        };
        self.inserts += 1;
        let last_write = match self.policy {
            DbiPolicy::LrwBip if !self.inserts.is_multiple_of(BIP_PERIOD) => 0,
            _ => self.clock,
        };
        self.entries[slot] = DbiEntry {
            valid: true,
            key,
            bits: 1 << block,
            last_write,
            rrpv: RRPV_INSERT,
        };
        evicted
    }

    fn victim(&mut self, range: std::ops::Range<usize>) -> usize {
        let es = &self.entries;
        match self.policy {
            DbiPolicy::Lrw | DbiPolicy::LrwBip => range
                .min_by_key(|&i| (es[i].last_write, i))
                .expect("non-empty set"),
            DbiPolicy::MaxDirty => range
                .min_by_key(|&i| (std::cmp::Reverse(es[i].bits.count_ones()), es[i].key))
                .expect("non-empty set"),
            DbiPolicy::MinDirty => range
                .min_by_key(|&i| (es[i].bits.count_ones(), es[i].key))
                .expect("non-empty set"),
            DbiPolicy::RewriteInterval => loop {
                if let Some(i) = range.clone().find(|&i| self.entries[i].rrpv >= RRPV_MAX) {
                    break i;
                }
                for i in range.clone() {
                    self.entries[i].rrpv += 1;
                }
            },
        }
    }

    /// Clears one block's bit; the entry is invalidated once empty.
    /// Returns whether the block was dirty.
    pub fn clear(&mut self, key: DbiKey, block: u32) -> bool {
        self.lookups += 1;
        let Some(i) = self.find(key) else {
            return false;
        };
        let e = &mut self.entries[i];
        let was = e.bits >> block & 1 == 1;
        e.bits &= !(1 << block);
        if e.bits == 0 {
            e.valid = false;
        }
        was
    }

    /// Removes a region's entry and returns its bits.
    pub fn take(&mut self, key: DbiKey) -> u128 {
        self.lookups += 1;
        match self.find(key) {
            Some(i) => {
                self.entries[i].valid = false;
                self.entries[i].bits
            }
            None => 0,
        }
    }

    /// Valid entries in set order.
    pub fn entries(&self) -> impl Iterator<Item = &DbiEntry> {
        self.entries.iter().filter(|e| e.valid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(region: u64) -> DbiKey {
        DbiKey { region, pattern: 0 }
    }

    /// Regions that all land in the same set as region 0.
    fn same_set(d: &Dbi, n: usize) -> Vec<u64> {
        let target = d.set_range(key(0));
        (0..).filter(|&r| d.set_range(key(r)) == target).take(n).collect()
    }

    #[test]
    fn bits_accumulate_in_one_entry() {
        let mut d = Dbi::new(8, 4, 128, DbiPolicy::Lrw).unwrap();
        assert!(d.set_dirty(key(5), 3).is_none());
        assert!(d.set_dirty(key(5), 7).is_none());
        assert_eq!(d.dirty_bits(key(5)), 1 << 3 | 1 << 7);
        assert_eq!(d.entries().count(), 1);
        assert!(d.clear(key(5), 3));
        assert!(d.clear(key(5), 7));
        assert_eq!(d.entries().count(), 0);
    }

    #[test]
    fn lrw_evicts_least_recently_written() {
        let mut d = Dbi::new(4, 4, 128, DbiPolicy::Lrw).unwrap();
        let rs = same_set(&d, 5);
        for &r in &rs[..4] {
            d.set_dirty(key(r), 0);
        }
        d.set_dirty(key(rs[0]), 1);
        let v = d.set_dirty(key(rs[4]), 0).unwrap();
        assert_eq!(v.key, key(rs[1]));
    }

    #[test]
    fn min_and_max_dirty() {
        for (policy, expect) in [(DbiPolicy::MinDirty, 1), (DbiPolicy::MaxDirty, 2)] {
            let mut d = Dbi::new(4, 4, 128, policy).unwrap();
            let rs = same_set(&d, 5);
            for (n, &r) in rs[..4].iter().enumerate() {
                for b in 0..[3, 1, 5, 3][n] {
                    d.set_dirty(key(r), b);
                }
            }
            let v = d.set_dirty(key(rs[4]), 0).unwrap();
            assert_eq!(v.key, key(rs[expect]), "{policy}");
        }
    }

    #[test]
    fn min_dirty_ties_go_to_lower_tag() {
        let mut d = Dbi::new(4, 4, 128, DbiPolicy::MinDirty).unwrap();
        let rs = same_set(&d, 5);
        for &r in rs[..4].iter().rev() {
            d.set_dirty(key(r), 0);
        }
        assert_eq!(d.set_dirty(key(rs[4]), 0).unwrap().key, key(rs[0]));
    }

    #[test]
    fn rewrite_interval_prefers_unrewritten() {
        let mut d = Dbi::new(4, 4, 128, DbiPolicy::RewriteInterval).unwrap();
        let rs = same_set(&d, 5);
        for &r in &rs[..4] {
            d.set_dirty(key(r), 0);
        }
        for &r in &[rs[0], rs[1], rs[3]] {
            d.set_dirty(key(r), 1);
        }
        assert_eq!(d.set_dirty(key(rs[4]), 0).unwrap().key, key(rs[2]));
    }

    #[test]
    fn bip_mostly_inserts_at_lrw() {
        let mut d = Dbi::new(4, 4, 128, DbiPolicy::LrwBip).unwrap();
        let rs = same_set(&d, 6);
        for &r in &rs[..4] {
            d.set_dirty(key(r), 0);
        }
        // the newest insert sits at the LRW position and goes first
        d.set_dirty(key(rs[4]), 0);
        assert_eq!(d.set_dirty(key(rs[5]), 0).unwrap().key, key(rs[4]));
    }

    #[test]
    fn policy_names() {
        for p in DbiPolicy::ALL {
            assert_eq!(p.to_string().parse::<DbiPolicy>().unwrap(), p);
        }
    }
}
