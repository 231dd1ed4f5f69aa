use crate::array::{SenseState, SubarrayState};
use crate::bits::BitRow;
use crate::config::{ColumnLayout, Geometry, RowLayout, Time};
use crate::error::{Error, Result};

/// Per-bank timing bookkeeping, all absolute times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BankTiming {
    /// Earliest ACTIVATE after the last PRECHARGE completed.
    pub act_ready: Time,
    /// When the most recent activation finished restoring its cells.
    pub restore_done: Time,
    /// Earliest column command after the current activation.
    pub col_ready: Time,
    /// End of the last column data burst.
    pub col_done: Time,
    /// End of write recovery after the last WRITE or TRANSFER into this bank.
    pub write_recovery: Time,
}

#[derive(Debug, Clone)]
pub struct BankState {
    pub(crate) subarrays: Vec<SubarrayState>,
    pub(crate) open: Option<u32>,
    pub(crate) timing: BankTiming,
}

impl BankState {
    /// Subarray whose sense amplifiers currently hold a row.
    pub fn open_subarray(&self) -> Option<u32> {
        self.open
    }

    pub fn timing(&self) -> &BankTiming {
        &self.timing
    }

    pub fn subarray(&self, s: u32) -> &SubarrayState {
        &self.subarrays[s as usize]
    }
}

/// Command-bus and data-bus clocks shared by all banks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Clock {
    /// Issue time of the most recent command.
    pub now: Time,
    /// Latest completion time seen so far.
    pub horizon: Time,
    /// When the data bus frees up.
    pub bus_free: Time,
}

/// Bit-exact contents of a rank plus its timing state.
#[derive(Debug, Clone)]
pub struct RankState {
    geometry: Geometry,
    pub(crate) banks: Vec<BankState>,
    pub(crate) clock: Clock,
}

impl RankState {
    /// Fresh rank: every row zero except the all-ones control rows.
    pub fn new(geometry: Geometry) -> Result<Self> {
        geometry.validate()?;
        let row_bits = geometry.row_bits();
        let c1 = geometry.layout().c1();
        let banks = (0..geometry.banks_per_chip)
            .map(|_| BankState {
                subarrays: (0..geometry.subarrays_per_bank)
                    .map(|_| {
                        let mut s = SubarrayState::new(geometry.rows_per_subarray, row_bits);
                        s.set_row(c1, BitRow::ones(row_bits))
                            .expect("control row is in range");
                        s
                    })
                    .collect(),
                open: None,
                timing: BankTiming::default(),
            })
            .collect();
        Ok(RankState {
            geometry,
            banks,
            clock: Clock::default(),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn layout(&self) -> RowLayout {
        self.geometry.layout()
    }

    pub fn column_layout(&self) -> ColumnLayout {
        self.geometry.column_layout()
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn bank(&self, bank: u32) -> Result<&BankState> {
        self.banks.get(bank as usize).ok_or(Error::OutOfRange {
            what: "bank",
            value: bank as u64,
            limit: self.geometry.banks_per_chip as u64,
        })
    }

    pub(crate) fn bank_mut(&mut self, bank: u32) -> Result<&mut BankState> {
        let limit = self.geometry.banks_per_chip as u64;
        self.banks.get_mut(bank as usize).ok_or(Error::OutOfRange {
            what: "bank",
            value: bank as u64,
            limit,
        })
    }

    pub fn subarray(&self, bank: u32, subarray: u32) -> Result<&SubarrayState> {
        let limit = self.geometry.subarrays_per_bank as u64;
        self.bank(bank)?
            .subarrays
            .get(subarray as usize)
            .ok_or(Error::OutOfRange {
                what: "subarray",
                value: subarray as u64,
                limit,
            })
    }

    pub(crate) fn subarray_mut(&mut self, bank: u32, subarray: u32) -> Result<&mut SubarrayState> {
        let limit = self.geometry.subarrays_per_bank as u64;
        self.bank_mut(bank)?
            .subarrays
            .get_mut(subarray as usize)
            .ok_or(Error::OutOfRange {
                what: "subarray",
                value: subarray as u64,
                limit,
            })
    }

    /// Cell contents of a physical row.
    pub fn row(&self, bank: u32, subarray: u32, row: u32) -> Result<BitRow> {
        self.subarray(bank, subarray)?.row(row)
    }

    /// Seeds a row's cells directly, outside the command model.
    pub fn set_row(&mut self, bank: u32, subarray: u32, row: u32, data: BitRow) -> Result<()> {
        if data.len() != self.geometry.row_bits() {
            return Err(Error::WrongWidth {
                expected: self.geometry.row_bits(),
                got: data.len(),
            });
        }
        self.subarray_mut(bank, subarray)?.set_row(row, data)
    }

    /// Holds further commands until everything issued so far has completed.
    pub fn fence(&mut self) {
        self.clock.now = self.clock.horizon;
    }

    pub fn is_precharged(&self, bank: u32) -> Result<bool> {
        Ok(self.bank(bank)?.open.is_none())
    }

    /// Zero rows and C0 read all-zeros, C1 reads all-ones, in every subarray.
    pub fn reserved_rows_intact(&self) -> bool {
        let l = self.layout();
        let holds = |s: &SubarrayState, row: u32, ones: bool| {
            s.row(row)
                .map(|r| if ones { r.is_all_ones() } else { r.is_all_zeros() })
                .unwrap_or(false)
        };
        self.banks.iter().flat_map(|b| &b.subarrays).all(|s| {
            holds(s, l.zero(), false) && holds(s, l.c0(), false) && holds(s, l.c1(), true)
        })
    }

    /// True when no bank holds an open row.
    pub fn all_precharged(&self) -> bool {
        self.banks.iter().all(|b| {
            b.open.is_none()
                && b.subarrays
                    .iter()
                    .all(|s| s.status() == SenseState::Precharged)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_rank_has_constant_rows() {
        let r = RankState::new(Geometry::desk()).unwrap();
        assert!(r.reserved_rows_intact());
        let l = r.layout();
        assert!(r.row(1, 3, l.c1()).unwrap().is_all_ones());
        assert!(r.row(1, 3, 0).unwrap().is_all_zeros());
    }

    #[test]
    fn full_geometry_allocates_lazily() {
        let r = RankState::new(Geometry::default()).unwrap();
        assert_eq!(r.banks.len(), 8);
        assert!(r.row(7, 63, 0).unwrap().is_all_zeros());
    }

    #[test]
    fn reserved_row_damage_is_detected() {
        let mut r = RankState::new(Geometry::desk()).unwrap();
        let l = r.layout();
        let bits = r.geometry().row_bits();
        r.set_row(0, 1, l.zero(), BitRow::ones(bits)).unwrap();
        assert!(!r.reserved_rows_intact());
    }
}
