//! Bank-conflict-free storage for butterfly stages.
//!
//! Element `i` of an `N`-vector sits in row `r = i mod R`, column
//! `c = i / R` of an `R x (N/R)` grid with one bank per row. The S2P layout
//! rotates column `c` down by `-P_c = popcount(c)` banks, so `i` lives in bank
//! `(r + popcount(c)) mod R` at offset `c`.
//!
//! Each cycle a butterfly engine reads `R` words, one pair per unit, with
//! `R = 2 * P_bu`. For a stage of stride `t`:
//! * `t >= R`: partners share a row in columns `c` and `c + t/R`; each column
//!   pair takes two cycles, even rows then odd rows.
//! * `t < R`: partners share a column; one column per cycle.

use serde::Serialize;

use crate::butterfly::{
    bu_step, stage_stride, BuMode, BuOperands, BuOutputs, ButterflyMatrix, Precision,
};
use crate::error::{is_pow2, log2_exact, Error, Result};

/// Per-column signed shifts from the doubling recursion:
/// `P_0 = 0`, `P[2^k .. 2^(k+1)] = P[0 .. 2^k] - 1`.
pub fn start_positions(n_cols: usize) -> Result<Vec<i64>> {
    log2_exact(n_cols)?;
    let mut p = vec![0i64];
    while p.len() < n_cols {
        let next: Vec<i64> = p.iter().map(|v| v - 1).collect();
        p.extend(next);
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    /// Starting-position rotated layout.
    S2p,
    ColumnMajor,
    RowMajor,
}

impl LayoutKind {
    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::S2p => "s2p",
            LayoutKind::ColumnMajor => "column_major",
            LayoutKind::RowMajor => "row_major",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub bank: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankLayout {
    pub kind: LayoutKind,
    pub n_rows: usize,
    pub n_cols: usize,
    placement: Vec<Slot>,
}

fn s2p_bank(index: usize, n_rows: usize) -> usize {
    let (r, c) = (index % n_rows, index / n_rows);
    (r + c.count_ones() as usize) % n_rows
}

impl BankLayout {
    pub fn new(kind: LayoutKind, n: usize, n_banks: usize) -> Result<Self> {
        log2_exact(n)?;
        log2_exact(n_banks)?;
        if n_banks > n {
            return Err(Error::Config(format!("{n_banks} banks for {n} elements")));
        }
        let n_cols = n / n_banks;
        let placement: Vec<Slot> = (0..n)
            .map(|i| match kind {
                LayoutKind::S2p => Slot {
                    bank: s2p_bank(i, n_banks),
                    offset: i / n_banks,
                },
                LayoutKind::ColumnMajor => Slot {
                    bank: i % n_banks,
                    offset: i / n_banks,
                },
                LayoutKind::RowMajor => Slot {
                    bank: i / n_cols,
                    offset: i % n_cols,
                },
            })
            .collect();
        let layout = BankLayout {
            kind,
            n_rows: n_banks,
            n_cols,
            placement,
        };
        layout.check_bijection()?;
        Ok(layout)
    }

    pub fn len(&self) -> usize {
        self.placement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placement.is_empty()
    }

    pub fn slot(&self, index: usize) -> Slot {
        self.placement[index]
    }

    pub fn placement(&self) -> &[Slot] {
        &self.placement
    }

    fn check_bijection(&self) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for s in &self.placement {
            if s.bank >= self.n_rows || s.offset >= self.n_cols {
                return Err(Error::Structure(format!("slot {s:?} outside grid")));
            }
            let k = s.bank * self.n_cols + s.offset;
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::Structure(format!("slot {s:?} used twice")));
            }
        }
        Ok(())
    }
}

/// The S2P layout.
pub fn build_layout(n: usize, n_banks: usize) -> Result<BankLayout> {
    BankLayout::new(LayoutKind::S2p, n, n_banks)
}

/// Butterfly pairs `(low, high)` issued in each cycle of stage `level`.
pub fn stage_schedule(n: usize, n_banks: usize, level: usize) -> Vec<Vec<(usize, usize)>> {
    let r = n_banks;
    let t = stage_stride(n, level);
    let n_cols = n / r;
    let mut cycles = Vec::new();
    if t >= r {
        let dc = t / r;
        for c in (0..n_cols).filter(|c| c & dc == 0) {
            for parity in 0..2 {
                cycles.push(
                    (parity..r)
                        .step_by(2)
                        .map(|row| (c * r + row, (c + dc) * r + row))
                        .collect(),
                );
            }
        }
    } else {
        for c in 0..n_cols {
            cycles.push(
                (0..r)
                    .filter(|row| row & t == 0)
                    .map(|row| (c * r + row, c * r + row + t))
                    .collect(),
            );
        }
    }
    cycles
}

/// Concurrent reads of one stage under a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StageAccess {
    pub stage: usize,
    pub reads: Vec<Vec<Slot>>,
    pub pair_map: Vec<Vec<(usize, usize)>>,
}

pub fn stage_access(layout: &BankLayout, level: usize) -> StageAccess {
    let pair_map = stage_schedule(layout.len(), layout.n_rows, level);
    let reads = pair_map
        .iter()
        .map(|pairs| {
            pairs
                .iter()
                .flat_map(|&(a, b)| [layout.slot(a), layout.slot(b)])
                .collect()
        })
        .collect();
    StageAccess {
        stage: level,
        reads,
        pair_map,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleConflicts {
    pub stage: usize,
    pub cycle: usize,
    /// Reads beyond the first that hit an already-busy bank.
    pub conflicts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictReport {
    pub n: usize,
    pub n_banks: usize,
    pub kind: LayoutKind,
    pub cycles: Vec<CycleConflicts>,
}

impl ConflictReport {
    pub fn total(&self) -> usize {
        self.cycles.iter().map(|c| c.conflicts).sum()
    }

    pub fn is_conflict_free(&self) -> bool {
        self.total() == 0
    }

    pub fn stage_totals(&self) -> Vec<usize> {
        let levels = self.n.trailing_zeros() as usize;
        let mut out = vec![0; levels];
        for c in &self.cycles {
            out[c.stage] += c.conflicts;
        }
        out
    }
}

fn count_conflicts(reads: &[Slot], n_banks: usize) -> usize {
    let mut hits = vec![0usize; n_banks];
    for s in reads {
        hits[s.bank] += 1;
    }
    hits.iter().map(|h| h.saturating_sub(1)).sum()
}

/// Conflicts of every cycle of every stage under `layout`.
pub fn check_layout(layout: &BankLayout) -> ConflictReport {
    let n = layout.len();
    let levels = n.trailing_zeros() as usize;
    let mut cycles = Vec::new();
    for level in 0..levels {
        let access = stage_access(layout, level);
        for (cycle, reads) in access.reads.iter().enumerate() {
            cycles.push(CycleConflicts {
                stage: level,
                cycle,
                conflicts: count_conflicts(reads, layout.n_rows),
            });
        }
    }
    ConflictReport {
        n,
        n_banks: layout.n_rows,
        kind: layout.kind,
        cycles,
    }
}

/// S2P conflict check for an engine of `pairs_per_cycle` butterfly units,
/// which must own exactly `2 * pairs_per_cycle` banks.
pub fn check_conflict_free(n: usize, n_banks: usize, pairs_per_cycle: usize) -> Result<ConflictReport> {
    if n_banks != 2 * pairs_per_cycle {
        return Err(Error::Config(format!(
            "{pairs_per_cycle} units need {} banks, got {n_banks}",
            2 * pairs_per_cycle
        )));
    }
    Ok(check_layout(&build_layout(n, n_banks)?))
}

/// A word tagged with its logical element index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tagged {
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSlot {
    pub low: Tagged,
    pub high: Tagged,
}

/// Crossbar routing for one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shift {
    pub index: usize,
    pub src: usize,
    pub dst: usize,
    /// `(dst - src) mod R`.
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coalesced {
    pub slots: Vec<PairSlot>,
    pub shifts: Vec<Shift>,
}

impl Coalesced {
    /// Words in butterfly-unit input order.
    pub fn words(&self) -> Vec<Tagged> {
        self.slots.iter().flat_map(|s| [s.low, s.high]).collect()
    }
}

/// Route one S2P read (position `p` holds the word from bank `p`) onto the
/// butterfly units: partners differ in the stage's stride bit, slots are
/// ordered by low index, and each word moves by a shift derived from its
/// starting position.
pub fn coalesce_indices(column: &[Tagged], n: usize, level: usize) -> Result<Coalesced> {
    let r = column.len();
    if !is_pow2(r) || r < 2 || r > n {
        return Err(Error::Structure(format!("column of {r} words")));
    }
    let levels = log2_exact(n)? as usize;
    if level >= levels {
        return Err(Error::Structure(format!("stage {level} of a {levels}-stage butterfly")));
    }
    let stride = stage_stride(n, level);
    for (pos, w) in column.iter().enumerate() {
        if w.index >= n || s2p_bank(w.index, r) != pos {
            return Err(Error::Structure(format!(
                "x{} at position {pos} is not an S2P read",
                w.index
            )));
        }
    }
    let mut lows: Vec<usize> = Vec::with_capacity(r / 2);
    for (pos, w) in column.iter().enumerate() {
        let partner = w.index ^ stride;
        if !column.iter().any(|o| o.index == partner) {
            return Err(Error::Structure(format!(
                "x{} has no partner x{partner} in the column",
                w.index
            )));
        }
        if w.index & stride == 0 {
            lows.push(pos);
        }
    }
    lows.sort_by_key(|&p| column[p].index);
    let mut slots = Vec::with_capacity(r / 2);
    let mut shifts = vec![
        Shift {
            index: 0,
            src: 0,
            dst: 0,
            shift: 0
        };
        r
    ];
    for (slot, &lp) in lows.iter().enumerate() {
        let low = column[lp];
        let hp = column.iter().position(|o| o.index == low.index ^ stride).unwrap();
        let high = column[hp];
        slots.push(PairSlot { low, high });
        for (word, dst) in [(low, 2 * slot), (high, 2 * slot + 1)] {
            let src = s2p_bank(word.index, r);
            shifts[src] = Shift {
                index: word.index,
                src,
                dst,
                shift: (dst + r - src) % r,
            };
        }
    }
    Ok(Coalesced { slots, shifts })
}

/// Inverse routing: put butterfly outputs back at their S2P positions.
pub fn recover_order(outputs: &[PairSlot], n_banks: usize) -> Result<Vec<Tagged>> {
    if outputs.len() * 2 != n_banks {
        return Err(Error::Structure(format!(
            "{} pairs for {n_banks} banks",
            outputs.len()
        )));
    }
    let mut out: Vec<Option<Tagged>> = vec![None; n_banks];
    for w in outputs.iter().flat_map(|s| [s.low, s.high]) {
        let pos = s2p_bank(w.index, n_banks);
        if out[pos].replace(w).is_some() {
            return Err(Error::Structure(format!("two outputs map to position {pos}")));
        }
    }
    Ok(out.into_iter().map(|w| w.expect("every position filled")).collect())
}

/// Run `m` on `x` through an S2P-banked engine: every cycle reads one word per
/// bank, coalesces, computes, recovers order and writes back in place.
/// Returns the result and the number of cycles issued.
pub fn replay_butterfly(m: &ButterflyMatrix, x: &[f64], n_banks: usize) -> Result<(Vec<f64>, usize)> {
    let n = m.size();
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let layout = build_layout(n, n_banks)?;
    let mut banks = vec![vec![0.0; layout.n_cols]; n_banks];
    for (i, v) in x.iter().enumerate() {
        let s = layout.slot(i);
        banks[s.bank][s.offset] = *v;
    }
    let mut cycles = 0;
    for stage in m.stages() {
        let stride = stage_stride(n, stage.level);
        for pairs in stage_schedule(n, n_banks, stage.level) {
            let mut column: Vec<Option<Tagged>> = vec![None; n_banks];
            for index in pairs.iter().flat_map(|&(a, b)| [a, b]) {
                let s = layout.slot(index);
                if column[s.bank].is_some() {
                    return Err(Error::Structure(format!("bank {} read twice", s.bank)));
                }
                column[s.bank] = Some(Tagged {
                    index,
                    value: banks[s.bank][s.offset],
                });
            }
            let column: Vec<Tagged> = column.into_iter().map(|w| w.expect("full read")).collect();
            let routed = coalesce_indices(&column, n, stage.level)?;
            let outputs: Vec<PairSlot> = routed
                .slots
                .iter()
                .map(|p| {
                    let k = (p.low.index / (2 * stride)) * stride + p.low.index % stride;
                    let operands = BuOperands::Linear {
                        in1: p.low.value,
                        in2: p.high.value,
                        w: stage.pairs[k],
                    };
                    match bu_step(BuMode::ButterflyLinear, operands, Precision::Fp64)? {
                        BuOutputs::Linear(a, b) => Ok(PairSlot {
                            low: Tagged { index: p.low.index, value: a },
                            high: Tagged { index: p.high.index, value: b },
                        }),
                        BuOutputs::Fft(..) => unreachable!(),
                    }
                })
                .collect::<Result<_>>()?;
            for w in recover_order(&outputs, n_banks)? {
                let s = layout.slot(w.index);
                banks[s.bank][s.offset] = w.value;
            }
            cycles += 1;
        }
    }
    let y = (0..n)
        .map(|i| {
            let s = layout.slot(i);
            banks[s.bank][s.offset]
        })
        .collect();
    Ok((y, cycles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::butterfly::apply_butterfly;

    fn tags(idx: &[usize]) -> Vec<Tagged> {
        idx.iter()
            .map(|&index| Tagged {
                index,
                value: index as f64,
            })
            .collect()
    }

    #[test]
    fn start_positions_small() {
        assert_eq!(start_positions(1).unwrap(), vec![0]);
        assert_eq!(start_positions(4).unwrap(), vec![0, -1, -1, -2]);
        assert_eq!(start_positions(8).unwrap(), vec![0, -1, -1, -2, -1, -2, -2, -3]);
        assert!(start_positions(6).is_err());
    }

    #[test]
    fn placement_examples() {
        let l = build_layout(4, 4).unwrap();
        for i in 0..4 {
            assert_eq!(l.slot(i), Slot { bank: i, offset: 0 });
        }
        let l = build_layout(16, 4).unwrap();
        assert_eq!(l.slot(0), Slot { bank: 0, offset: 0 });
        // x5 is row 1 of column 1: rotated one bank down from column-major
        assert_eq!(l.slot(5), Slot { bank: 2, offset: 1 });
    }

    #[test]
    fn mixed_column_pairs() {
        let c = coalesce_indices(&tags(&[11, 1, 9, 3]), 16, 0).unwrap();
        let pairs: Vec<_> = c.slots.iter().map(|p| (p.low.index, p.high.index)).collect();
        assert_eq!(pairs, vec![(1, 9), (3, 11)]);
        assert_eq!(c.shifts[0], Shift { index: 11, src: 0, dst: 3, shift: 3 });
    }

    #[test]
    fn already_paired_is_identity() {
        let c = coalesce_indices(&tags(&[0, 8, 2, 10]), 16, 0).unwrap();
        assert!(c.shifts.iter().all(|s| s.shift == 0));
        let back = recover_order(&c.slots, 4).unwrap();
        assert_eq!(back, tags(&[0, 8, 2, 10]));
    }

    #[test]
    fn single_pair_roundtrip() {
        let col = tags(&[0, 1]);
        let c = coalesce_indices(&col, 2, 0).unwrap();
        assert_eq!(recover_order(&c.slots, 2).unwrap(), col);
    }

    #[test]
    fn malformed_columns_are_rejected() {
        assert!(coalesce_indices(&tags(&[1, 11, 9, 3]), 16, 0).is_err());
        assert!(coalesce_indices(&tags(&[11, 1, 9, 3]), 16, 3).is_err());
    }

    #[test]
    fn controls_conflict_where_expected() {
        let cm = check_layout(&BankLayout::new(LayoutKind::ColumnMajor, 16, 4).unwrap());
        assert!(cm.stage_totals()[0] > 0);
        let rm = check_layout(&BankLayout::new(LayoutKind::RowMajor, 16, 4).unwrap());
        assert!(rm.stage_totals()[2] > 0);
        assert!(check_conflict_free(16, 4, 2).unwrap().is_conflict_free());
        assert!(check_conflict_free(16, 4, 4).is_err());
    }

    #[test]
    fn replay_matches_staged_application() {
        let m = ButterflyMatrix::from_fn(32, |s, k| {
            let a = (s * 31 + k * 7) as f64;
            [a.sin(), a.cos(), (0.5 * a).sin(), 1.0 - 0.01 * a]
        })
        .unwrap();
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).cos()).collect();
        let (y, cycles) = replay_butterfly(&m, &x, 4).unwrap();
        let r = apply_butterfly(&m, &x).unwrap();
        assert_eq!(cycles, 5 * 32 / 4);
        for (a, b) in y.iter().zip(&r) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
