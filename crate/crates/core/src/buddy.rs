//! Bulk bitwise operations built from AAP/AP primitives.
//!
//! Rows of a subarray fall into three groups: the B-group (sixteen
//! addresses that raise one to three of the temporaries T0-T3 and the two
//! dual-contact rows), the C-group (the constant rows C0 and C1) and the
//! D-group (ordinary data rows).

use std::fmt;
use std::str::FromStr;

use crate::array::Wordline;
use crate::bits::BitRow;
use crate::command::{run_sequence, AapMode, CostLedger, DramCommand, RowAddr};
use crate::config::{Geometry, RowLayout, TimingEnergyModel};
use crate::error::{Error, Result};
use crate::rank::RankState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowAddressGroup {
    B(u8),
    /// `false` for C0 (all zeros), `true` for C1 (all ones).
    C(bool),
    D(u32),
    /// Temporaries, the zero row and the staging row: only reachable
    /// through B-group addresses or the copy engine.
    Reserved(u32),
}

/// Classifies a row operand of a subarray.
pub fn classify(addr: RowAddr, layout: &RowLayout) -> RowAddressGroup {
    match addr {
        RowAddr::B(n) => RowAddressGroup::B(n),
        RowAddr::Row(r) if layout.is_data(r) => RowAddressGroup::D(r),
        RowAddr::Row(r) if r == layout.c0() => RowAddressGroup::C(false),
        RowAddr::Row(r) if r == layout.c1() => RowAddressGroup::C(true),
        RowAddr::Row(r) => RowAddressGroup::Reserved(r),
    }
}

/// Wordlines raised by B-group address `n`.
pub fn resolve_b_address(n: u8, layout: &RowLayout) -> Result<Vec<Wordline>> {
    let t = |i| Wordline::Row(layout.temp(i));
    let wls = match n {
        0..=3 => vec![t(n as u32)],
        4 => vec![Wordline::DCC0],
        5 => vec![Wordline::NDCC0],
        6 => vec![Wordline::DCC1],
        7 => vec![Wordline::NDCC1],
        8 => vec![Wordline::NDCC0, t(0)],
        9 => vec![Wordline::NDCC1, t(1)],
        10 => vec![t(2), t(3)],
        11 => vec![t(0), t(3)],
        12 => vec![t(0), t(1), t(2)],
        13 => vec![t(1), t(2), t(3)],
        14 => vec![Wordline::DCC0, t(1), t(2)],
        15 => vec![Wordline::DCC1, t(0), t(3)],
        _ => return Err(Error::NotBGroup),
    };
    Ok(wls)
}

/// Same as [`resolve_b_address`] for an arbitrary operand; data rows are
/// rejected.
pub fn resolve_row_addr(addr: RowAddr, layout: &RowLayout) -> Result<Vec<Wordline>> {
    match addr {
        RowAddr::B(n) => resolve_b_address(n, layout),
        RowAddr::Row(_) => Err(Error::NotBGroup),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitwiseOp {
    Not,
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
}

impl BitwiseOp {
    pub const ALL: [BitwiseOp; 7] = [
        BitwiseOp::Not,
        BitwiseOp::And,
        BitwiseOp::Or,
        BitwiseOp::Nand,
        BitwiseOp::Nor,
        BitwiseOp::Xor,
        BitwiseOp::Xnor,
    ];

    pub fn is_unary(self) -> bool {
        self == BitwiseOp::Not
    }

    /// Number of AAP/AP steps in the program.
    pub fn steps(self) -> u32 {
        match self {
            BitwiseOp::Not => 2,
            BitwiseOp::And | BitwiseOp::Or => 4,
            BitwiseOp::Nand | BitwiseOp::Nor => 5,
            BitwiseOp::Xor | BitwiseOp::Xnor => 7,
        }
    }
}

impl fmt::Display for BitwiseOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitwiseOp::Not => "not",
            BitwiseOp::And => "and",
            BitwiseOp::Or => "or",
            BitwiseOp::Nand => "nand",
            BitwiseOp::Nor => "nor",
            BitwiseOp::Xor => "xor",
            BitwiseOp::Xnor => "xnor",
        })
    }
}

impl FromStr for BitwiseOp {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        BitwiseOp::ALL
            .into_iter()
            .find(|op| op.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown bitwise operation `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Aap(RowAddr, RowAddr),
    Ap(RowAddr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    pub note: &'static str,
}

impl Step {
    /// Whether this step may run as an overlapped AAP.
    pub fn overlap_eligible(&self) -> bool {
        match self.kind {
            StepKind::Aap(a, b) => a.is_b_group() != b.is_b_group(),
            StepKind::Ap(_) => false,
        }
    }
}

/// A synthesized bitwise program over rows of one subarray.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitwiseProgram {
    pub op: BitwiseOp,
    pub bank: u32,
    pub subarray: u32,
    pub dst: u32,
    pub steps: Vec<Step>,
}

impl BitwiseProgram {
    /// Commands for this program. AAPs run overlapped where eligible and
    /// shortened otherwise; `naive` forces the unoptimized latency.
    pub fn commands(&self, naive: bool) -> Vec<DramCommand> {
        let (bank, subarray) = (self.bank, self.subarray);
        self.steps
            .iter()
            .map(|s| match s.kind {
                StepKind::Aap(row1, row2) => DramCommand::Aap {
                    bank,
                    subarray,
                    row1,
                    row2,
                    mode: if naive {
                        AapMode::Naive
                    } else if s.overlap_eligible() {
                        AapMode::Overlapped
                    } else {
                        AapMode::Shortened
                    },
                },
                StepKind::Ap(row) => DramCommand::Ap {
                    bank,
                    subarray,
                    row,
                },
            })
            .collect()
    }
}

/// One operand row of a bitwise program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Operand {
    pub bank: u32,
    pub subarray: u32,
    pub row: u32,
}

/// Builds the program computing `dk = op(di, dj)`.
///
/// `dk` may alias an operand: every program copies its inputs into the
/// temporaries before writing `dk`.
pub fn synthesize(
    op: BitwiseOp,
    di: Operand,
    dj: Option<Operand>,
    dk: Operand,
    geometry: &Geometry,
) -> Result<BitwiseProgram> {
    let layout = geometry.layout();
    let dj = match (op.is_unary(), dj) {
        (true, _) => None,
        (false, Some(d)) => Some(d),
        (false, None) => return Err(Error::MissingOperand),
    };
    for o in [Some(di), dj, Some(dk)].into_iter().flatten() {
        if (o.bank, o.subarray) != (di.bank, di.subarray) {
            return Err(Error::CrossSubarrayOperands);
        }
        if !layout.is_data(o.row) {
            return Err(Error::NotDGroup(o.row));
        }
    }
    if di.bank >= geometry.banks_per_chip || di.subarray >= geometry.subarrays_per_bank {
        return Err(Error::OutOfRange {
            what: "bank or subarray",
            value: di.bank.max(di.subarray) as u64,
            limit: geometry.banks_per_chip.min(geometry.subarrays_per_bank) as u64,
        });
    }

    let r = RowAddr::Row;
    let b = RowAddr::B;
    let (i, k) = (r(di.row), r(dk.row));
    let j = r(dj.map_or(0, |d| d.row));
    let (c0, c1) = (r(layout.c0()), r(layout.c1()));
    let aap = |x, y, note| Step {
        kind: StepKind::Aap(x, y),
        note,
    };
    let ap = |x, note| Step {
        kind: StepKind::Ap(x),
        note,
    };

    let steps = match op {
        BitwiseOp::Not => vec![
            aap(i, b(5), "DCC0 = !Di"),
            aap(b(4), k, "Dk = DCC0"),
        ],
        BitwiseOp::And | BitwiseOp::Or => {
            let ctl = if op == BitwiseOp::And { c0 } else { c1 };
            vec![
                aap(i, b(0), "T0 = Di"),
                aap(j, b(1), "T1 = Dj"),
                aap(ctl, b(2), "T2 = control"),
                aap(b(12), k, "Dk = MAJ(T0, T1, T2)"),
            ]
        }
        BitwiseOp::Nand | BitwiseOp::Nor => {
            let ctl = if op == BitwiseOp::Nand { c0 } else { c1 };
            vec![
                aap(i, b(0), "T0 = Di"),
                aap(j, b(1), "T1 = Dj"),
                aap(ctl, b(2), "T2 = control"),
                aap(b(12), b(5), "DCC0 = !MAJ(T0, T1, T2)"),
                aap(b(4), k, "Dk = DCC0"),
            ]
        }
        BitwiseOp::Xor | BitwiseOp::Xnor => {
            let (first, second) = if op == BitwiseOp::Xor {
                (c0, c1)
            } else {
                (c1, c0)
            };
            vec![
                aap(i, b(8), "DCC0 = !Di, T0 = Di"),
                aap(j, b(9), "DCC1 = !Dj, T1 = Dj"),
                aap(first, b(10), "T2 = T3 = control"),
                ap(b(14), "T1 = MAJ(DCC0, T1, T2)"),
                ap(b(15), "T0 = MAJ(DCC1, T0, T3)"),
                aap(second, b(2), "T2 = !control"),
                aap(b(12), k, "Dk = MAJ(T0, T1, T2)"),
            ]
        }
    };
    debug_assert_eq!(steps.len() as u32, op.steps());
    Ok(BitwiseProgram {
        op,
        bank: di.bank,
        subarray: di.subarray,
        dst: dk.row,
        steps,
    })
}

/// Runs a program and returns its cost together with the destination row.
pub fn execute(
    state: &mut RankState,
    program: &BitwiseProgram,
    model: &TimingEnergyModel,
) -> Result<(CostLedger, BitRow)> {
    if !state.is_precharged(program.bank)? {
        return Err(Error::NotPrecharged { bank: program.bank });
    }
    let r = run_sequence(state, &program.commands(false), model)?;
    let row = state.row(program.bank, program.subarray, program.dst)?;
    Ok((r.ledger, row))
}

/// Result throughput in GiB/s of `banks` banks each running `op`
/// back to back, with every step costing one overlapped AAP.
pub fn throughput(op: BitwiseOp, banks: u32, model: &TimingEnergyModel, geometry: &Geometry) -> f64 {
    let aap = model.t_ras + model.t_aap_overlap_extra + model.t_rp;
    let program_s = aap.as_ns() * op.steps() as f64 * 1e-9;
    geometry.row_bytes() as f64 / program_s * banks as f64 / (1u64 << 30) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_group_table() {
        let l = Geometry::desk().layout();
        let t = |i| Wordline::Row(l.temp(i));
        assert_eq!(resolve_b_address(12, &l).unwrap(), vec![t(0), t(1), t(2)]);
        assert_eq!(resolve_b_address(5, &l).unwrap(), vec![Wordline::NDCC0]);
        assert_eq!(
            resolve_b_address(15, &l).unwrap(),
            vec![Wordline::DCC1, t(0), t(3)]
        );
        assert_eq!(resolve_b_address(16, &l), Err(Error::NotBGroup));
        assert_eq!(resolve_row_addr(RowAddr::Row(3), &l), Err(Error::NotBGroup));
        for n in 0..16 {
            let k = resolve_b_address(n, &l).unwrap().len();
            assert!((1..=3).contains(&k));
        }
    }

    #[test]
    fn classification() {
        let l = Geometry::desk().layout();
        assert_eq!(classify(RowAddr::Row(0), &l), RowAddressGroup::D(0));
        assert_eq!(classify(RowAddr::Row(l.c1()), &l), RowAddressGroup::C(true));
        assert_eq!(classify(RowAddr::Row(l.zero()), &l), RowAddressGroup::Reserved(l.zero()));
        assert_eq!(classify(RowAddr::B(3), &l), RowAddressGroup::B(3));
    }

    fn d(row: u32) -> Operand {
        Operand {
            bank: 0,
            subarray: 1,
            row,
        }
    }

    #[test]
    fn and_program_matches_walkthrough() {
        let g = Geometry::desk();
        let l = g.layout();
        let p = synthesize(BitwiseOp::And, d(1), Some(d(2)), d(3), &g).unwrap();
        let kinds: Vec<_> = p.steps.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![
                StepKind::Aap(RowAddr::Row(1), RowAddr::B(0)),
                StepKind::Aap(RowAddr::Row(2), RowAddr::B(1)),
                StepKind::Aap(RowAddr::Row(l.c0()), RowAddr::B(2)),
                StepKind::Aap(RowAddr::B(12), RowAddr::Row(3)),
            ]
        );
        assert!(p.steps.iter().all(Step::overlap_eligible));
    }

    #[test]
    fn not_program() {
        let g = Geometry::desk();
        let p = synthesize(BitwiseOp::Not, d(4), None, d(5), &g).unwrap();
        let kinds: Vec<_> = p.steps.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![
                StepKind::Aap(RowAddr::Row(4), RowAddr::B(5)),
                StepKind::Aap(RowAddr::B(4), RowAddr::Row(5)),
            ]
        );
    }

    #[test]
    fn operand_checks() {
        let g = Geometry::desk();
        let other = Operand {
            bank: 1,
            subarray: 1,
            row: 2,
        };
        assert_eq!(
            synthesize(BitwiseOp::And, d(1), Some(other), d(3), &g),
            Err(Error::CrossSubarrayOperands)
        );
        assert_eq!(
            synthesize(BitwiseOp::Or, d(1), None, d(3), &g),
            Err(Error::MissingOperand)
        );
        let c0 = g.layout().c0();
        assert_eq!(
            synthesize(BitwiseOp::Xor, d(1), Some(d(2)), d(c0), &g),
            Err(Error::NotDGroup(c0))
        );
    }

    #[test]
    fn op_names_round_trip() {
        for op in BitwiseOp::ALL {
            assert_eq!(op.to_string().parse::<BitwiseOp>().unwrap(), op);
        }
        assert!("nope".parse::<BitwiseOp>().is_err());
    }
}
