//! Symbolic 0-1 arrays cut from a window, and the way back.
//!
//! An integer `g` contributes symbol 1 when its embedding lands in the
//! window, 0 when it lands outside, and `?` when it lands in a frontier
//! cell the tree does not decide. Arrays are honest about that third
//! value: nothing downstream silently coerces `?` to a bit.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::measure::rat_u;
use crate::odometer::{OdometerPoint, OdometerSpec};
use crate::window::{CellStatus, WindowError, WindowTree};

#[derive(Debug, Error)]
pub enum ArrayError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("array must cover a full period: {covered} positions given, {needed} needed")]
    RangeTooShort { covered: usize, needed: u128 },
    #[error("unexpected character {0:?} in array text")]
    BadSymbol(char),
    #[error("position {0} outside the array range")]
    OutOfRange(i128),
}

/// One letter of a symbolic array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    One,
    Zero,
    Undecided,
}

impl Symbol {
    pub fn as_char(self) -> char {
        match self {
            Symbol::One => '1',
            Symbol::Zero => '0',
            Symbol::Undecided => '?',
        }
    }

    pub fn from_char(c: char) -> Result<Self, ArrayError> {
        match c {
            '1' => Ok(Symbol::One),
            '0' => Ok(Symbol::Zero),
            '?' => Ok(Symbol::Undecided),
            other => Err(ArrayError::BadSymbol(other)),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A contiguous stretch of symbols indexed by integers `start..start+len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicArray {
    spec: Arc<OdometerSpec>,
    depth: usize,
    start: i128,
    symbols: Vec<Symbol>,
}

impl SymbolicArray {
    pub fn spec(&self) -> &Arc<OdometerSpec> {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn start(&self) -> i128 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn get(&self, g: i128) -> Option<Symbol> {
        let idx = g.checked_sub(self.start)?;
        if idx < 0 || idx as usize >= self.symbols.len() {
            return None;
        }
        Some(self.symbols[idx as usize])
    }

    /// Iterate `(position, symbol)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i128, Symbol)> + '_ {
        self.symbols.iter().enumerate().map(move |(i, s)| (self.start + i as i128, *s))
    }

    pub fn count_undecided(&self) -> usize {
        self.symbols.iter().filter(|s| **s == Symbol::Undecided).count()
    }

    /// Plain text form: one character per position.
    pub fn to_text(&self) -> String {
        self.symbols.iter().map(|s| s.as_char()).collect()
    }

    /// Comma-separated `position,symbol` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("position,symbol\n");
        for (g, s) in self.iter() {
            out.push_str(&format!("{g},{s}\n"));
        }
        out
    }

    pub fn from_text(
        spec: &Arc<OdometerSpec>,
        depth: usize,
        start: i128,
        text: &str,
    ) -> Result<Self, ArrayError> {
        let symbols: Result<Vec<Symbol>, ArrayError> =
            text.trim().chars().map(Symbol::from_char).collect();
        Ok(SymbolicArray { spec: Arc::clone(spec), depth, start, symbols: symbols? })
    }
}

/// Cut the symbol sequence of `window` over `start..start+len`.
pub fn generate_array(
    window: &WindowTree,
    start: i128,
    len: usize,
) -> Result<SymbolicArray, ArrayError> {
    let mut symbols = Vec::with_capacity(len);
    for g in start..start + len as i128 {
        let symbol = match window.status_of_int(g)? {
            CellStatus::In => Symbol::One,
            CellStatus::Out => Symbol::Zero,
            CellStatus::Frontier => Symbol::Undecided,
        };
        symbols.push(symbol);
    }
    Ok(SymbolicArray {
        spec: Arc::clone(window.spec()),
        depth: window.depth(),
        start,
        symbols,
    })
}

/// Which residues mod `M_level` the window decides uniformly.
#[derive(Debug, Clone)]
pub struct PeriodReport {
    pub level: usize,
    pub modulus: u128,
    pub residues_one: Vec<u128>,
    pub residues_zero: Vec<u128>,
    pub residues_undecided: Vec<u128>,
    /// Mass of uniformly decided cells: `(ones + zeros) / modulus`.
    pub decided_density: BigRational,
}

/// Classify every level-`level` cell of `window` as constantly one,
/// constantly zero, or undecided at that resolution.
pub fn period_report(window: &WindowTree, level: usize) -> Result<PeriodReport, WindowError> {
    let spec = window.spec();
    let modulus = spec.subgroup_index(level);
    let mut ones = Vec::new();
    let mut zeros = Vec::new();
    let mut undecided = Vec::new();
    for r in 0..modulus {
        let path = OdometerPoint::from_residue(spec, r, level).digits().to_vec();
        match window.uniform_status_at(&path)? {
            Some(CellStatus::In) => ones.push(r),
            Some(CellStatus::Out) => zeros.push(r),
            _ => undecided.push(r),
        }
    }
    let decided = (ones.len() + zeros.len()) as u128;
    Ok(PeriodReport {
        level,
        modulus,
        residues_one: ones,
        residues_zero: zeros,
        residues_undecided: undecided,
        decided_density: rat_u(decided, modulus),
    })
}

/// Per-level agreement with periodic arrays, plus the limiting
/// certificate from frontier mass.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// For `n = 1..=depth`: the fraction of level-`n` cells the window
    /// decides uniformly, i.e. the density on which the array agrees with
    /// an `M_n`-periodic array. Non-decreasing in `n`.
    pub decided_fractions: Vec<BigRational>,
    /// `1 - frontier mass`: what the sequence reaches at `n = depth`.
    pub limit_certificate: BigRational,
}

pub fn regularity_report(window: &WindowTree) -> Result<RegularityReport, WindowError> {
    let mut decided_fractions = Vec::with_capacity(window.depth());
    for n in 1..=window.depth() {
        decided_fractions.push(window.decided_fraction_at_level(n)?);
    }
    let limit_certificate = BigRational::one() - window.frontier_mass();
    Ok(RegularityReport { decided_fractions, limit_certificate })
}

/// Rebuild a window from one full period of symbols.
///
/// Cells whose positions all read 1 become in-cells, all-0 cells become
/// out-cells, and anything else is refined; cells still unresolved at full
/// depth become frontier cells. Applied to an array cut from a window over
/// one period, this reproduces that window's cells exactly.
pub fn reconstruct_window(
    spec: &Arc<OdometerSpec>,
    depth: usize,
    array: &SymbolicArray,
) -> Result<WindowTree, ArrayError> {
    let needed = spec.subgroup_index(depth);
    if (array.len() as u128) < needed {
        return Err(ArrayError::RangeTooShort { covered: array.len(), needed });
    }
    let mut cells = Vec::new();
    let mut path = Vec::new();
    classify(spec, depth, array, &mut path, &mut cells);
    Ok(WindowTree::from_cells(spec, depth, &cells)?)
}

fn classify(
    spec: &Arc<OdometerSpec>,
    depth: usize,
    array: &SymbolicArray,
    path: &mut Vec<u64>,
    cells: &mut Vec<(Vec<u64>, CellStatus)>,
) {
    let level = path.len();
    let modulus = spec.subgroup_index(level) as i128;
    let mut residue = 0i128;
    for n in (1..=level).rev() {
        residue = residue * spec.scale(n) as i128 + path[n - 1] as i128;
    }
    let mut saw_one = false;
    let mut saw_zero = false;
    let mut saw_undecided = false;
    let mut g = residue + (array.start() - residue).div_euclid(modulus) * modulus;
    if g < array.start() {
        g += modulus;
    }
    while g < array.start() + array.len() as i128 {
        match array.get(g).expect("g within range") {
            Symbol::One => saw_one = true,
            Symbol::Zero => saw_zero = true,
            Symbol::Undecided => saw_undecided = true,
        }
        g += modulus;
    }
    if saw_one && !saw_zero && !saw_undecided {
        cells.push((path.clone(), CellStatus::In));
    } else if saw_zero && !saw_one && !saw_undecided {
        // out is the default; no cell entry needed
    } else if level == depth {
        cells.push((path.clone(), CellStatus::Frontier));
    } else {
        for digit in 0..spec.scale(level + 1) {
            path.push(digit);
            classify(spec, depth, array, path, cells);
            path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::rat;
    use crate::window::BoundaryInfo;

    fn spec(scales: &[u64]) -> Arc<OdometerSpec> {
        OdometerSpec::new(scales.to_vec()).unwrap()
    }

    #[test]
    fn generation_oracle() {
        let s = spec(&[3]);
        let w = WindowTree::from_cylinders(&s, 1, &[vec![0]]).unwrap();
        let a = generate_array(&w, 0, 6).unwrap();
        assert_eq!(a.to_text(), "100100");
        let b = generate_array(&w, -2, 4).unwrap();
        assert_eq!(b.to_text(), "0010");
    }

    #[test]
    fn undecided_positions_are_preserved() {
        let s = spec(&[3, 4]);
        let w = WindowTree::from_cells(
            &s,
            2,
            &[(vec![0], CellStatus::In), (vec![2, 3], CellStatus::Frontier)],
        )
        .unwrap();
        let a = generate_array(&w, 0, 12).unwrap();
        // residue 11 = digits (2,3) is the frontier cell
        assert_eq!(a.get(11), Some(Symbol::Undecided));
        assert_eq!(a.count_undecided(), 1);
        assert_eq!(a.get(0), Some(Symbol::One));
        assert_eq!(a.get(1), Some(Symbol::Zero));
    }

    #[test]
    fn text_round_trip() {
        let s = spec(&[3, 4]);
        let w = WindowTree::from_cells(
            &s,
            2,
            &[(vec![1], CellStatus::In), (vec![0, 2], CellStatus::Frontier)],
        )
        .unwrap();
        let a = generate_array(&w, -5, 20).unwrap();
        let back = SymbolicArray::from_text(&s, 2, -5, &a.to_text()).unwrap();
        assert_eq!(back, a);
        assert!(a.to_csv().starts_with("position,symbol\n-5,"));
    }

    #[test]
    fn period_report_oracle() {
        let s = spec(&[3, 4]);
        let w = WindowTree::from_cells(
            &s,
            2,
            &[
                (vec![0], CellStatus::In),
                (vec![1, 0], CellStatus::In),
                (vec![2, 2], CellStatus::Frontier),
            ],
        )
        .unwrap();
        let r1 = period_report(&w, 1).unwrap();
        assert_eq!(r1.residues_one, vec![0]);
        assert_eq!(r1.residues_zero, vec![]);
        assert_eq!(r1.decided_density, rat(1, 3));
        let r2 = period_report(&w, 2).unwrap();
        assert_eq!(r2.residues_one, vec![0, 1, 3, 6, 9]);
        assert_eq!(r2.residues_undecided, vec![8]);
        assert_eq!(r2.decided_density, rat(11, 12));
    }

    #[test]
    fn regularity_report_monotone() {
        let s = spec(&[3, 4]);
        let w = WindowTree::from_cells(
            &s,
            2,
            &[(vec![0], CellStatus::In), (vec![2, 2], CellStatus::Frontier)],
        )
        .unwrap();
        let r = regularity_report(&w).unwrap();
        assert_eq!(r.decided_fractions.len(), 2);
        assert!(r.decided_fractions[0] <= r.decided_fractions[1]);
        assert_eq!(r.decided_fractions[1], r.limit_certificate);
        assert_eq!(r.limit_certificate, rat(11, 12));
    }

    #[test]
    fn reconstruction_round_trip() {
        let s = spec(&[3, 4]);
        let w = WindowTree::from_cells(
            &s,
            2,
            &[
                (vec![0, 0], CellStatus::In),
                (vec![0, 2], CellStatus::In),
                (vec![1], CellStatus::In),
                (vec![2, 3], CellStatus::Frontier),
            ],
        )
        .unwrap();
        let a = generate_array(&w, 0, 12).unwrap();
        let back = reconstruct_window(&s, 2, &a).unwrap();
        assert_eq!(back.leaves(), w.leaves());
        // offset and oversized ranges reconstruct the same window
        let shifted = generate_array(&w, -31, 40).unwrap();
        let back2 = reconstruct_window(&s, 2, &shifted).unwrap();
        assert_eq!(back2.leaves(), w.leaves());
    }

    #[test]
    fn reconstruction_needs_full_period() {
        let s = spec(&[3, 4]);
        let w = WindowTree::from_cylinders(&s, 2, &[vec![0]]).unwrap();
        let a = generate_array(&w, 0, 11).unwrap();
        assert!(matches!(
            reconstruct_window(&s, 2, &a),
            Err(ArrayError::RangeTooShort { covered: 11, needed: 12 })
        ));
    }

    #[test]
    fn frontier_cells_reconstruct_at_depth_then_merge() {
        let s = spec(&[2, 2, 2]);
        let w = WindowTree::from_cells(&s, 3, &[(vec![1], CellStatus::Frontier)])
            .unwrap()
            .with_boundary(BoundaryInfo::Unknown)
            .unwrap();
        let a = generate_array(&w, 0, 8).unwrap();
        let back = reconstruct_window(&s, 3, &a).unwrap();
        // normalization merges the eight frontier leaves back into one cell
        assert_eq!(back.leaves(), w.leaves());
    }
}
