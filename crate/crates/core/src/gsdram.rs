//! Gather/scatter DRAM: per-column data shuffling across chips plus
//! per-chip column translation, so that power-of-two strided values can be
//! fetched with one column command.
//!
//! Values are 8-byte words. The logical row buffer holds `columns * c`
//! values; value `v` belongs to cache line `v / c`. When line `C` is
//! written, its values are permuted across chips by the shuffle network
//! under control `ctrl(C)`, so chip `i` stores value `C * c + (i ^ ctrl(C))`.

use crate::command::{column_access, CostLedger};
use crate::config::{Time, TimingEnergyModel};
use crate::error::{Error, Result};
use crate::rank::RankState;

/// Maps a column ID to shuffle-stage control bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShuffleFn {
    /// The low bits of the column ID.
    #[default]
    LowBits,
    /// `column ^ (column >> shift)`.
    XorFold(u32),
}

impl ShuffleFn {
    fn apply(self, column: u32) -> u32 {
        match self {
            ShuffleFn::LowBits => column,
            ShuffleFn::XorFold(shift) => column ^ column.checked_shr(shift).unwrap_or(0),
        }
    }
}

/// GS-DRAM(c, s, p) parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GsConfig {
    pub chips: u32,
    pub shuffle_stages: u32,
    pub pattern_bits: u32,
    pub shuffle_fn: ShuffleFn,
    /// Bit `k` set disables stage `k + 1`.
    pub shuffle_mask: u32,
}

impl GsConfig {
    pub fn new(chips: u32, shuffle_stages: u32, pattern_bits: u32) -> Result<Self> {
        let cfg = GsConfig {
            chips,
            shuffle_stages,
            pattern_bits,
            shuffle_fn: ShuffleFn::LowBits,
            shuffle_mask: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.chips.is_power_of_two() {
            return Err(Error::InvalidGsConfig(format!(
                "chip count {} is not a power of two",
                self.chips
            )));
        }
        if self.shuffle_stages > self.chip_bits() {
            return Err(Error::InvalidGsConfig(format!(
                "{} shuffle stages exceed log2 of {} chips",
                self.shuffle_stages, self.chips
            )));
        }
        if self.pattern_bits > 16 {
            return Err(Error::InvalidGsConfig("pattern IDs wider than 16 bits".into()));
        }
        Ok(())
    }

    fn chip_bits(&self) -> u32 {
        self.chips.trailing_zeros()
    }

    /// Effective stage controls for column `column`, as an XOR mask over
    /// chip positions.
    pub fn control(&self, column: u32) -> u32 {
        let stages = (1u32 << self.shuffle_stages) - 1;
        self.shuffle_fn.apply(column) & !self.shuffle_mask & stages
    }

    fn check_pattern(&self, pattern: u32) -> Result<()> {
        if self.pattern_bits < 32 && pattern >> self.pattern_bits != 0 {
            return Err(Error::OutOfRange {
                what: "pattern",
                value: pattern as u64,
                limit: 1u64 << self.pattern_bits,
            });
        }
        Ok(())
    }

    /// Chip ID repeated to fill `pattern_bits`.
    fn wide_chip_id(&self, chip: u32) -> u32 {
        let w = self.chip_bits();
        if w == 0 {
            return 0;
        }
        let mut id = 0;
        let mut shift = 0;
        while shift < self.pattern_bits {
            id |= chip << shift;
            shift += w;
        }
        id
    }
}

fn check_width<T>(words: &[T], cfg: &GsConfig) -> Result<()> {
    if words.len() != cfg.chips as usize {
        return Err(Error::WrongWidth {
            expected: cfg.chips as usize,
            got: words.len(),
        });
    }
    Ok(())
}

/// Permutes a cache line's values across chips for column `column`.
///
/// Stage `k` swaps adjacent blocks of `2^(k-1)` values inside groups of
/// `2^k` when its control bit is set.
pub fn shuffle<T: Copy>(line: &[T], column: u32, cfg: &GsConfig) -> Result<Vec<T>> {
    check_width(line, cfg)?;
    let ctrl = cfg.control(column);
    let mut out = line.to_vec();
    for k in 0..cfg.shuffle_stages {
        if ctrl >> k & 1 == 0 {
            continue;
        }
        let half = 1usize << k;
        for group in out.chunks_mut(half * 2) {
            let (a, b) = group.split_at_mut(half);
            a.swap_with_slice(b);
        }
    }
    Ok(out)
}

/// Inverse of [`shuffle`]; the stages commute and are involutions.
pub fn unshuffle<T: Copy>(chip_words: &[T], column: u32, cfg: &GsConfig) -> Result<Vec<T>> {
    shuffle(chip_words, column, cfg)
}

/// Column that chip `chip` accesses for `(pattern, column)`.
pub fn translate_column(chip: u32, pattern: u32, column: u32, cfg: &GsConfig) -> u32 {
    (cfg.wide_chip_id(chip) & pattern) ^ column
}

/// Logical value index held by chip `chip` at physical column `column`.
pub fn value_at(chip: u32, column: u32, cfg: &GsConfig) -> u64 {
    column as u64 * cfg.chips as u64 + (chip ^ cfg.control(column)) as u64
}

/// Where logical value `v` is stored: `(chip, physical column)`.
pub fn locate(v: u64, cfg: &GsConfig) -> (u32, u32) {
    let column = (v / cfg.chips as u64) as u32;
    let pos = (v % cfg.chips as u64) as u32;
    (pos ^ cfg.control(column), column)
}

/// Per-chip `(chip, physical column, value index)` of one access, in
/// ascending value order. This is the order of the assembled line.
pub fn access_map(pattern: u32, column: u32, cfg: &GsConfig) -> Result<Vec<(u32, u32, u64)>> {
    cfg.check_pattern(pattern)?;
    let mut m: Vec<_> = (0..cfg.chips)
        .map(|chip| {
            let pc = translate_column(chip, pattern, column, cfg);
            (chip, pc, value_at(chip, pc, cfg))
        })
        .collect();
    m.sort_by_key(|&(_, _, v)| v);
    Ok(m)
}

/// Logical value indices returned by `(pattern, column)`, ascending.
pub fn gathered_indices(pattern: u32, column: u32, cfg: &GsConfig) -> Result<Vec<u64>> {
    Ok(access_map(pattern, column, cfg)?
        .into_iter()
        .map(|(_, _, v)| v)
        .collect())
}

/// Column whose `pattern` access includes value `v`.
pub fn column_containing(v: u64, pattern: u32, cfg: &GsConfig) -> u32 {
    let (chip, pc) = locate(v, cfg);
    pc ^ (cfg.wide_chip_id(chip) & pattern)
}

/// Pattern ID that gathers with stride `stride`.
pub fn pattern_for_stride(stride: u64, cfg: &GsConfig) -> Result<u32> {
    if !stride.is_power_of_two() {
        return Err(Error::UnsupportedStride(stride));
    }
    let k = stride.trailing_zeros();
    if k > cfg.shuffle_stages || k > cfg.pattern_bits {
        return Err(Error::UnsupportedStride(stride));
    }
    Ok((1u32 << k) - 1)
}

fn check_rank(state: &RankState, cfg: &GsConfig) -> Result<()> {
    cfg.validate()?;
    let g = state.geometry();
    if g.chips_per_rank != cfg.chips {
        return Err(Error::InvalidGsConfig(format!(
            "rank has {} chips, configuration expects {}",
            g.chips_per_rank, cfg.chips
        )));
    }
    Ok(())
}

fn shuffle_latency(cfg: &GsConfig, model: &TimingEnergyModel) -> Time {
    model.t_shuffle_stage.scale(cfg.shuffle_stages as u64)
}

/// Reads the values of `(pattern, column)` from the open row of `bank`.
pub fn gather(
    state: &mut RankState,
    bank: u32,
    pattern: u32,
    column: u32,
    cfg: &GsConfig,
    model: &TimingEnergyModel,
) -> Result<(Vec<u64>, CostLedger)> {
    check_rank(state, cfg)?;
    let map = access_map(pattern, column, cfg)?;
    let sub = state
        .bank(bank)?
        .open_subarray()
        .ok_or(Error::NotActivated { bank })?;
    let layout = state.column_layout();
    let s = state.subarray(bank, sub)?;
    let line = map
        .iter()
        .map(|&(chip, pc, _)| s.read_chip_word(&layout, chip, pc))
        .collect::<Result<Vec<_>>>()?;
    let ledger = column_access(state, bank, false, shuffle_latency(cfg, model), None, model)?;
    Ok((line, ledger))
}

/// Writes `line` to the values of `(pattern, column)` in the open row of
/// `bank`. `gather` with the same arguments returns `line`.
pub fn scatter(
    state: &mut RankState,
    bank: u32,
    pattern: u32,
    column: u32,
    line: &[u64],
    cfg: &GsConfig,
    model: &TimingEnergyModel,
) -> Result<CostLedger> {
    check_rank(state, cfg)?;
    check_width(line, cfg)?;
    let map = access_map(pattern, column, cfg)?;
    let sub = state
        .bank(bank)?
        .open_subarray()
        .ok_or(Error::NotActivated { bank })?;
    let layout = state.column_layout();
    let columns = layout.columns;
    if let Some(&(_, pc, _)) = map.iter().find(|&&(_, pc, _)| pc >= columns) {
        return Err(Error::ColumnOutOfRange { column: pc, columns });
    }
    let ledger = column_access(state, bank, true, shuffle_latency(cfg, model), None, model)?;
    let s = state.subarray_mut(bank, sub)?;
    for (&(chip, pc, _), &w) in map.iter().zip(line) {
        s.write_chip_word(&layout, chip, pc, w)?;
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(c: u32, s: u32, p: u32) -> GsConfig {
        GsConfig::new(c, s, p).unwrap()
    }

    #[test]
    fn shuffle_examples() {
        let g = cfg(4, 2, 2);
        let line = ['a', 'b', 'c', 'd'];
        assert_eq!(shuffle(&line, 0, &g).unwrap(), line);
        assert_eq!(shuffle(&line, 1, &g).unwrap(), ['b', 'a', 'd', 'c']);
        assert_eq!(shuffle(&line, 2, &g).unwrap(), ['c', 'd', 'a', 'b']);
        assert_eq!(shuffle(&line, 3, &g).unwrap(), ['d', 'c', 'b', 'a']);
        assert!(matches!(
            shuffle(&line[..3], 1, &g),
            Err(Error::WrongWidth { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn mask_disables_stages() {
        let g = GsConfig {
            shuffle_mask: 0b11,
            ..cfg(4, 2, 2)
        };
        for col in 0..8 {
            assert_eq!(shuffle(&[1, 2, 3, 4], col, &g).unwrap(), [1, 2, 3, 4]);
        }
        let g = GsConfig {
            shuffle_mask: 0b01,
            ..cfg(4, 2, 2)
        };
        assert_eq!(shuffle(&[1, 2, 3, 4], 3, &g).unwrap(), [3, 4, 1, 2]);
    }

    #[test]
    fn translation_examples() {
        let g = cfg(4, 2, 2);
        let cols = |p, c| (0..4).map(|i| translate_column(i, p, c, &g)).collect::<Vec<_>>();
        assert_eq!(cols(0, 2), [2, 2, 2, 2]);
        assert_eq!(cols(3, 0), [0, 1, 2, 3]);
        assert_eq!(cols(3, 1), [1, 0, 3, 2]);
    }

    #[test]
    fn wide_pattern_repeats_chip_id() {
        let g = cfg(8, 3, 6);
        assert_eq!(g.wide_chip_id(3), 0b011_011);
        assert_eq!(translate_column(3, 0b111_000, 0, &g), 0b011_000);
    }

    #[test]
    fn named_patterns_on_4_2_2() {
        let g = cfg(4, 2, 2);
        assert_eq!(gathered_indices(0, 2, &g).unwrap(), [8, 9, 10, 11]);
        assert_eq!(gathered_indices(1, 0, &g).unwrap(), [0, 2, 4, 6]);
        assert_eq!(gathered_indices(2, 0, &g).unwrap(), [0, 1, 8, 9]);
        assert_eq!(gathered_indices(3, 0, &g).unwrap(), [0, 4, 8, 12]);
        assert_eq!(gathered_indices(3, 1, &g).unwrap(), [1, 5, 9, 13]);
    }

    #[test]
    fn strides() {
        let g = cfg(8, 3, 3);
        assert_eq!(pattern_for_stride(8, &g), Ok(7));
        assert_eq!(pattern_for_stride(1, &g), Ok(0));
        assert_eq!(pattern_for_stride(3, &g), Err(Error::UnsupportedStride(3)));
        assert_eq!(pattern_for_stride(16, &g), Err(Error::UnsupportedStride(16)));
    }

    #[test]
    fn locate_inverts_value_at() {
        let g = cfg(8, 3, 3);
        for v in 0..1024 {
            let (chip, col) = locate(v, &g);
            assert_eq!(value_at(chip, col, &g), v);
            for p in 0..8 {
                let c = column_containing(v, p, &g);
                assert!(gathered_indices(p, c, &g).unwrap().contains(&v));
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(GsConfig::new(6, 1, 1).is_err());
        assert!(GsConfig::new(4, 3, 2).is_err());
    }
}
