//! Bit-exact model of one subarray: cells, wordlines, the sense-amplifier
//! row buffer, triple-row majority and dual-contact cells.

use std::collections::BTreeSet;

use crate::bits::BitRow;
use crate::config::ColumnLayout;
use crate::error::{Error, Result};

/// A wordline inside one subarray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wordline {
    /// Regular row, by physical index.
    Row(u32),
    /// Dual-contact cell row. `negated` selects the n-wordline, which
    /// connects the cell to bitline-bar.
    Dcc { index: u8, negated: bool },
}

impl Wordline {
    pub const DCC0: Wordline = Wordline::Dcc {
        index: 0,
        negated: false,
    };
    pub const NDCC0: Wordline = Wordline::Dcc {
        index: 0,
        negated: true,
    };
    pub const DCC1: Wordline = Wordline::Dcc {
        index: 1,
        negated: false,
    };
    pub const NDCC1: Wordline = Wordline::Dcc {
        index: 1,
        negated: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenseState {
    Precharged,
    Activated,
}

/// Cell and bitline capacitance, in any common unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeParams {
    pub c_cell: f64,
    pub c_bitline: f64,
}

/// Bitline deviation from VDD/2 (as a fraction of VDD) after three cells,
/// `k` of them charged, share charge with a precharged bitline:
/// `(2k - 3) Cc / (6 Cc + 2 Cb)`.
pub fn charge_share_delta(k: u32, p: &ChargeParams) -> Result<f64> {
    if k > 3 {
        return Err(Error::InvalidK(k));
    }
    if !(p.c_cell > 0.0 && p.c_bitline > 0.0) {
        return Err(Error::InvalidValue {
            key: "capacitance".into(),
            value: format!("{p:?}"),
            reason: "must be strictly positive".into(),
        });
    }
    Ok((2.0 * k as f64 - 3.0) * p.c_cell / (6.0 * p.c_cell + 2.0 * p.c_bitline))
}

/// Contents and sense state of one subarray.
///
/// Rows are stored lazily; a row that was never written reads as zeros.
#[derive(Debug, Clone)]
pub struct SubarrayState {
    row_bits: usize,
    rows: Vec<Option<BitRow>>,
    dcc: [Option<BitRow>; 2],
    rowbuffer: Option<BitRow>,
    raised: BTreeSet<Wordline>,
}

impl SubarrayState {
    pub fn new(rows: u32, row_bits: usize) -> Self {
        SubarrayState {
            row_bits,
            rows: vec![None; rows as usize],
            dcc: [None, None],
            rowbuffer: None,
            raised: BTreeSet::new(),
        }
    }

    pub fn row_bits(&self) -> usize {
        self.row_bits
    }

    pub fn num_rows(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn status(&self) -> SenseState {
        if self.rowbuffer.is_some() {
            SenseState::Activated
        } else {
            SenseState::Precharged
        }
    }

    pub fn rowbuffer(&self) -> Option<&BitRow> {
        self.rowbuffer.as_ref()
    }

    pub fn raised_wordlines(&self) -> impl Iterator<Item = Wordline> + '_ {
        self.raised.iter().copied()
    }

    fn check_row(&self, row: u32) -> Result<()> {
        if row >= self.num_rows() {
            return Err(Error::OutOfRange {
                what: "row",
                value: row as u64,
                limit: self.num_rows() as u64,
            });
        }
        Ok(())
    }

    /// Cell contents of a regular row.
    pub fn row(&self, row: u32) -> Result<BitRow> {
        self.check_row(row)?;
        Ok(self.rows[row as usize]
            .clone()
            .unwrap_or_else(|| BitRow::zeros(self.row_bits)))
    }

    /// Direct cell write, bypassing the sense amplifiers. Used to seed state.
    pub fn set_row(&mut self, row: u32, data: BitRow) -> Result<()> {
        self.check_row(row)?;
        assert_eq!(data.len(), self.row_bits);
        self.rows[row as usize] = Some(data);
        Ok(())
    }

    pub fn dcc(&self, index: u8) -> BitRow {
        self.dcc[index as usize]
            .clone()
            .unwrap_or_else(|| BitRow::zeros(self.row_bits))
    }

    pub fn set_dcc(&mut self, index: u8, data: BitRow) {
        assert_eq!(data.len(), self.row_bits);
        self.dcc[index as usize] = Some(data);
    }

    /// What a raised wordline drives onto the bitlines.
    fn sensed(&self, wl: Wordline) -> Result<BitRow> {
        match wl {
            Wordline::Row(r) => self.row(r),
            Wordline::Dcc { index, negated } => {
                let v = self.dcc(index);
                Ok(if negated { v.not() } else { v })
            }
        }
    }

    /// Overwrites the cells on `wl` with the bitline values `value`.
    fn restore(&mut self, wl: Wordline, value: &BitRow) {
        match wl {
            Wordline::Row(r) => self.rows[r as usize] = Some(value.clone()),
            Wordline::Dcc { index, negated } => {
                self.dcc[index as usize] = Some(if negated { value.not() } else { value.clone() })
            }
        }
    }

    fn restore_field(&mut self, wl: Wordline, value: &BitRow, offset: usize, width: u32) {
        let fill = |slot: &mut Option<BitRow>, v: u64, bits: usize| {
            slot.get_or_insert_with(|| BitRow::zeros(bits))
                .set_field(offset, width, v);
        };
        let v = value.field(offset, width);
        let bits = self.row_bits;
        match wl {
            Wordline::Row(r) => fill(&mut self.rows[r as usize], v, bits),
            Wordline::Dcc { index, negated } => {
                let v = if negated { !v } else { v };
                fill(&mut self.dcc[index as usize], v, bits)
            }
        }
    }

    /// Raises `wordlines` together.
    ///
    /// From the precharged state the row buffer resolves to the single cell
    /// value, or to the bitwise majority of three. Two wordlines are only
    /// defined when their cells agree. Every connected cell is then
    /// restored from the row buffer; n-wordline cells store the complement.
    /// If the subarray is already activated the row buffer wins and simply
    /// overwrites the newly connected cells.
    pub fn activate(&mut self, wordlines: &[Wordline]) -> Result<()> {
        let set: BTreeSet<Wordline> = wordlines.iter().copied().collect();
        if set.is_empty() || set.len() > 3 || set.len() != wordlines.len() {
            return Err(Error::InvalidWordlineCount(wordlines.len()));
        }
        for wl in &set {
            if let Wordline::Row(r) = wl {
                self.check_row(*r)?;
            }
        }
        let value = match &self.rowbuffer {
            Some(rb) => rb.clone(),
            None => {
                let sensed = set
                    .iter()
                    .map(|&wl| self.sensed(wl))
                    .collect::<Result<Vec<_>>>()?;
                match sensed.as_slice() {
                    [a] => a.clone(),
                    [a, b] if a == b => a.clone(),
                    [_, _] => return Err(Error::EvenWordlineMajority),
                    [a, b, c] => BitRow::majority(a, b, c),
                    _ => unreachable!(),
                }
            }
        };
        for &wl in &set {
            self.restore(wl, &value);
        }
        self.raised.extend(set);
        self.rowbuffer = Some(value);
        Ok(())
    }

    /// Raises the n-wordline of DCC row `dcc`, storing the complement of
    /// the row buffer into it.
    pub fn activate_n_wordline(&mut self, dcc: u8) -> Result<()> {
        if self.rowbuffer.is_none() {
            return Err(Error::NotActivated { bank: u32::MAX });
        }
        self.activate(&[Wordline::Dcc {
            index: dcc,
            negated: true,
        }])
    }

    pub fn precharge(&mut self) {
        self.rowbuffer = None;
        self.raised.clear();
    }

    fn check_column(&self, layout: &ColumnLayout, column: u32) -> Result<()> {
        if column >= layout.columns {
            return Err(Error::ColumnOutOfRange {
                column,
                columns: layout.columns,
            });
        }
        Ok(())
    }

    fn open_buffer(&self) -> Result<&BitRow> {
        self.rowbuffer
            .as_ref()
            .ok_or(Error::NotActivated { bank: u32::MAX })
    }

    /// One chip's word of one column.
    pub fn read_chip_word(&self, layout: &ColumnLayout, chip: u32, column: u32) -> Result<u64> {
        self.check_column(layout, column)?;
        let rb = self.open_buffer()?;
        Ok(rb.field(layout.bit_offset(chip, column), layout.column_width))
    }

    /// Writes one chip's word through to every connected cell.
    pub fn write_chip_word(
        &mut self,
        layout: &ColumnLayout,
        chip: u32,
        column: u32,
        word: u64,
    ) -> Result<()> {
        self.check_column(layout, column)?;
        let offset = layout.bit_offset(chip, column);
        let rb = self
            .rowbuffer
            .as_mut()
            .ok_or(Error::NotActivated { bank: u32::MAX })?;
        rb.set_field(offset, layout.column_width, word);
        let rb = rb.clone();
        let raised: Vec<_> = self.raised.iter().copied().collect();
        for wl in raised {
            self.restore_field(wl, &rb, offset, layout.column_width);
        }
        Ok(())
    }

    /// One cache line: a word per chip, in chip order.
    pub fn read_column(&self, layout: &ColumnLayout, column: u32) -> Result<Vec<u64>> {
        (0..layout.chips)
            .map(|chip| self.read_chip_word(layout, chip, column))
            .collect()
    }

    pub fn write_column(&mut self, layout: &ColumnLayout, column: u32, data: &[u64]) -> Result<()> {
        if data.len() != layout.chips as usize {
            return Err(Error::WrongWidth {
                expected: layout.chips as usize,
                got: data.len(),
            });
        }
        self.check_column(layout, column)?;
        for (chip, &w) in data.iter().enumerate() {
            self.write_chip_word(layout, chip as u32, column, w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BITS: usize = 512;

    fn layout() -> ColumnLayout {
        ColumnLayout {
            chips: 8,
            column_width: 64,
            columns: 1,
        }
    }

    fn pattern(byte: u8) -> BitRow {
        let w = u64::from_ne_bytes([byte; 8]);
        BitRow::from_words(BITS, vec![w; BITS / 64])
    }

    #[test]
    fn delta_sign_and_value() {
        let p = ChargeParams {
            c_cell: 1.0,
            c_bitline: 10.0,
        };
        assert!(charge_share_delta(2, &p).unwrap() > 0.0);
        assert!(charge_share_delta(1, &p).unwrap() < 0.0);
        // -3 * 1 / (6 + 20)
        assert_eq!(charge_share_delta(0, &p).unwrap(), -3.0 / 26.0);
        assert_eq!(charge_share_delta(4, &p), Err(Error::InvalidK(4)));
    }

    #[test]
    fn single_activate_copies_row() {
        let mut s = SubarrayState::new(8, BITS);
        s.set_row(2, pattern(0xa5)).unwrap();
        s.activate(&[Wordline::Row(2)]).unwrap();
        assert_eq!(s.rowbuffer(), Some(&pattern(0xa5)));
        assert_eq!(s.row(2).unwrap(), pattern(0xa5));
        assert_eq!(s.status(), SenseState::Activated);
    }

    #[test]
    fn triple_activate_takes_majority_and_overwrites() {
        let mut s = SubarrayState::new(8, BITS);
        s.set_row(0, BitRow::ones(BITS)).unwrap();
        s.set_row(1, BitRow::ones(BITS)).unwrap();
        s.set_row(2, BitRow::zeros(BITS)).unwrap();
        s.activate(&[Wordline::Row(0), Wordline::Row(1), Wordline::Row(2)])
            .unwrap();
        for r in 0..3 {
            assert!(s.row(r).unwrap().is_all_ones());
        }
    }

    #[test]
    fn back_to_back_activate_copies_rowbuffer() {
        let mut s = SubarrayState::new(8, BITS);
        s.set_row(0, pattern(0x3c)).unwrap();
        s.set_row(5, pattern(0xff)).unwrap();
        s.activate(&[Wordline::Row(0)]).unwrap();
        s.activate(&[Wordline::Row(5)]).unwrap();
        assert_eq!(s.row(5).unwrap(), pattern(0x3c));
        assert_eq!(s.rowbuffer(), Some(&pattern(0x3c)));
    }

    #[test]
    fn disagreeing_pair_is_undefined() {
        let mut s = SubarrayState::new(8, BITS);
        s.set_row(1, BitRow::ones(BITS)).unwrap();
        assert_eq!(
            s.activate(&[Wordline::Row(0), Wordline::Row(1)]),
            Err(Error::EvenWordlineMajority)
        );
        // agreeing pair is fine
        s.activate(&[Wordline::Row(2), Wordline::Row(3)]).unwrap();
    }

    #[test]
    fn n_wordline_stores_complement() {
        let mut s = SubarrayState::new(8, BITS);
        assert!(matches!(
            s.activate_n_wordline(0),
            Err(Error::NotActivated { .. })
        ));
        s.set_row(0, BitRow::ones(BITS)).unwrap();
        s.activate(&[Wordline::Row(0)]).unwrap();
        s.activate_n_wordline(0).unwrap();
        assert!(s.dcc(0).is_all_zeros());
        assert!(s.rowbuffer().unwrap().is_all_ones());

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = BitRow::random(BITS, &mut rng);
        s.precharge();
        s.set_row(1, r.clone()).unwrap();
        s.activate(&[Wordline::Row(1)]).unwrap();
        s.activate_n_wordline(0).unwrap();
        let expect: Vec<u64> = r.words().iter().map(|w| !w).collect();
        assert_eq!(s.dcc(0).words(), expect.as_slice());
    }

    #[test]
    fn precharge_is_idempotent() {
        let mut s = SubarrayState::new(4, BITS);
        s.activate(&[Wordline::Row(0)]).unwrap();
        s.precharge();
        assert_eq!(s.status(), SenseState::Precharged);
        assert_eq!(s.raised_wordlines().count(), 0);
        s.precharge();
        assert_eq!(s.status(), SenseState::Precharged);
        assert!(s.read_column(&layout(), 0).is_err());
    }

    #[test]
    fn columns_read_back_row_and_writes_persist() {
        let l = ColumnLayout {
            chips: 8,
            column_width: 64,
            columns: 8,
        };
        let bits = 8 * 64 * 8;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let row = BitRow::random(bits, &mut rng);
        let mut s = SubarrayState::new(4, bits);
        s.set_row(1, row.clone()).unwrap();
        s.activate(&[Wordline::Row(1)]).unwrap();
        let all: Vec<u64> = (0..8).flat_map(|c| s.read_column(&l, c).unwrap()).collect();
        assert_eq!(all.as_slice(), row.words());

        let w: Vec<u64> = (0..8).map(|i| 0x1111 * i).collect();
        s.write_column(&l, 3, &w).unwrap();
        assert_eq!(s.read_column(&l, 3).unwrap(), w);
        s.precharge();
        // persistence checked by looking at the cells directly
        let cells = s.row(1).unwrap();
        assert_eq!(&cells.words()[24..32], w.as_slice());
        assert!(matches!(
            s.write_column(&l, 8, &w),
            Err(Error::ColumnOutOfRange { .. })
        ));
    }

    #[test]
    fn dcc_negation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let mut s = SubarrayState::new(4, 128);
            let r = BitRow::random(128, &mut rng);
            s.set_row(0, r.clone()).unwrap();
            s.activate(&[Wordline::Row(0)]).unwrap();
            s.activate_n_wordline(1).unwrap();
            s.precharge();
            s.activate(&[Wordline::DCC1]).unwrap();
            s.activate(&[Wordline::Row(2)]).unwrap();
            s.precharge();
            assert_eq!(s.row(2).unwrap(), r.not());
            assert_eq!(s.row(0).unwrap(), r);
        }
    }
}
