//! A measure-interpolation path from the empty window to the whole
//! group.
//!
//! For a dial value `t` in `[0, 1]` the builder walks the cylinder
//! tree level by level, keeping one "chain" cell alive. At each level
//! the chain cell's children are visited in a fixed order: first the
//! child containing the chain cell's centered representative (the
//! residue shifted into `(-M/2, M/2]`), then the remaining digits in
//! ascending order. The greedy rule admits as many whole children as
//! fit under the mass budget `t`; the next child in the order becomes
//! the new chain cell, and everything after it is left out.
//!
//! The accumulated inside mass after `n` levels is exactly
//! `floor(M_n t)/M_n`, so the map from the dial to the window moves by
//! at most one cell of the deepest level per dial step, and two dial
//! values closer than a cell mass give windows whose symmetric
//! difference sits inside a single chain cell. Dial 0 gives the empty
//! window, dial 1 the whole group, and an exact mass hit resolves the
//! tree completely (clopen window); otherwise the final chain cell
//! stays undecided.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::measure::rat_u;
use crate::odometer::OdometerSpec;
use crate::window::{CellStatus, WindowError, WindowTree};

#[derive(Debug, thiserror::Error)]
pub enum PathError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("interpolation parameter must lie in [0, 1], got {0}")]
    ParamOutOfRange(BigRational),
    #[error("depth {0} exceeds the spec's {1} levels")]
    DepthTooDeep(usize, usize),
}

/// A built path member: the tree and the greedy index per level.
#[derive(Debug, Clone)]
pub struct PathWindow {
    pub tree: WindowTree,
    /// 1-based greedy choices, one per processed level; an entry of
    /// `m+1` means the whole chain cell was admitted at that level.
    pub trace: Vec<u64>,
}

/// Child digits of a chain cell with residue `r` mod `modulus`: the
/// child holding the centered representative first (digit 0 when
/// `2r <= modulus`, digit `m-1` otherwise), the rest ascending.
fn child_order(residue: u128, modulus: u128, m: u64) -> Vec<u64> {
    let mut order = Vec::with_capacity(m as usize);
    if 2 * residue <= modulus {
        order.extend(0..m);
    } else {
        order.push(m - 1);
        order.extend(0..m - 1);
    }
    order
}

/// Build the path member at dial `t` over the first `depth` levels of
/// `spec`.
pub fn path_window(
    spec: &Arc<OdometerSpec>,
    depth: usize,
    t: &BigRational,
) -> Result<PathWindow, PathError> {
    if t.is_negative() || t > &BigRational::one() {
        return Err(PathError::ParamOutOfRange(t.clone()));
    }
    if depth == 0 || depth > spec.max_depth() {
        return Err(PathError::DepthTooDeep(depth, spec.max_depth()));
    }
    let mut cells: Vec<(Vec<u64>, CellStatus)> = Vec::new();
    let mut trace: Vec<u64> = Vec::new();
    let mut acc = BigRational::zero();
    let mut prefix: Vec<u64> = Vec::new();
    let mut residue: u128 = 0;
    let mut resolved = false;
    for level in 0..depth {
        let m = spec.scale(level + 1);
        let index_cur = spec.subgroup_index(level);
        let index_next = spec.subgroup_index(level + 1);
        let order = child_order(residue, index_cur, m);
        // largest j in 0..=m with acc + j/M_(level+1) <= t
        let budget = (t - &acc) * BigRational::from_integer(BigInt::from(index_next));
        let fit = budget.floor().to_integer().to_u64().expect("budget fits u64");
        let j = fit.min(m);
        trace.push(j + 1);
        if j == m {
            // every child fits: the whole chain cell is inside
            cells.push((prefix.clone(), CellStatus::In));
            resolved = true;
            break;
        }
        for (pos, &d) in order.iter().enumerate() {
            if pos as u64 == j {
                continue; // the new chain cell
            }
            let mut path = prefix.clone();
            path.push(d);
            let status =
                if (pos as u64) < j { CellStatus::In } else { CellStatus::Out };
            cells.push((path, status));
        }
        let chain_digit = order[j as usize];
        prefix.push(chain_digit);
        residue += chain_digit as u128 * index_cur;
        acc += rat_u(j as u128, index_next);
        if &acc == t {
            // exact mass hit: the rest of the chain cell stays outside
            cells.push((prefix.clone(), CellStatus::Out));
            resolved = true;
            break;
        }
    }
    if !resolved {
        cells.push((prefix, CellStatus::Frontier));
    }
    let tree = WindowTree::from_cells(spec, depth, &cells)?;
    Ok(PathWindow { tree, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::rat;

    fn spec34() -> Arc<OdometerSpec> {
        OdometerSpec::new(vec![3, 4]).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let spec = spec34();
        assert!(path_window(&spec, 2, &rat(3, 2)).is_err());
        assert!(path_window(&spec, 2, &rat(-1, 2)).is_err());
        assert!(path_window(&spec, 3, &rat(1, 2)).is_err());
        assert!(path_window(&spec, 0, &rat(1, 2)).is_err());
    }

    #[test]
    fn endpoints_are_empty_and_full() {
        let spec = spec34();
        let empty = path_window(&spec, 2, &rat(0, 1)).unwrap();
        assert_eq!(empty.tree.measure().lo, rat(0, 1));
        assert_eq!(empty.tree.measure().hi, rat(0, 1));
        assert_eq!(empty.tree.frontier_mass(), rat(0, 1));
        let full = path_window(&spec, 2, &rat(1, 1)).unwrap();
        assert_eq!(full.tree.measure().lo, rat(1, 1));
        assert_eq!(full.tree.frontier_mass(), rat(0, 1));
        assert_eq!(full.trace, vec![4]);
    }

    #[test]
    fn exact_hit_resolves_the_tree() {
        // t = 1/2 over (3,4): one full level-1 cell plus two quarters
        let w = path_window(&spec34(), 2, &rat(1, 2)).unwrap();
        assert_eq!(w.trace, vec![2, 3]);
        assert_eq!(w.tree.frontier_mass(), rat(0, 1));
        let m = w.tree.measure();
        assert_eq!(m.lo, rat(1, 2));
        assert_eq!(m.hi, rat(1, 2));
        for path in [vec![0u64], vec![1, 0], vec![1, 1]] {
            assert_eq!(w.tree.uniform_status_at(&path).unwrap(), Some(CellStatus::In), "{path:?}");
        }
        for path in [vec![2u64], vec![1, 2], vec![1, 3]] {
            assert_eq!(w.tree.uniform_status_at(&path).unwrap(), Some(CellStatus::Out), "{path:?}");
        }
    }

    #[test]
    fn inexact_dial_leaves_one_frontier_cell() {
        let w = path_window(&spec34(), 2, &rat(1, 5)).unwrap();
        assert_eq!(w.trace, vec![1, 3]);
        for path in [vec![0u64, 0], vec![0, 1]] {
            assert_eq!(w.tree.uniform_status_at(&path).unwrap(), Some(CellStatus::In), "{path:?}");
        }
        assert_eq!(w.tree.uniform_status_at(&[0, 2]).unwrap(), Some(CellStatus::Frontier));
        assert_eq!(w.tree.uniform_status_at(&[0, 3]).unwrap(), Some(CellStatus::Out));
        assert_eq!(w.tree.uniform_status_at(&[1]).unwrap(), Some(CellStatus::Out));
        // floor(12 * 1/5) / 12 = 2/12
        assert_eq!(w.tree.measure().lo, rat(1, 6));
        assert_eq!(w.tree.frontier_mass(), rat(1, 12));
    }

    #[test]
    fn inside_mass_is_the_floor_of_the_dial() {
        let spec = OdometerSpec::new(vec![3, 4, 8]).unwrap();
        for num in 0..=192i128 {
            let t = rat(num, 192);
            let w = path_window(&spec, 3, &t).unwrap();
            let floor96 = rat(num / 2, 96); // floor(96 * num/192) / 96
            assert_eq!(w.tree.measure().lo, floor96, "t={num}/192");
            let gap = &t - &w.tree.measure().lo;
            assert!(gap >= rat(0, 1) && gap < rat(1, 96));
        }
    }

    #[test]
    fn dial_order_nests_the_windows() {
        let spec = OdometerSpec::new(vec![3, 4, 8]).unwrap();
        let mut prev = path_window(&spec, 3, &rat(0, 1)).unwrap();
        for num in 1..=64i128 {
            let next = path_window(&spec, 3, &rat(num, 64)).unwrap();
            assert!(
                prev.tree.cellwise_subset(&next.tree).unwrap(),
                "nesting fails at t={num}/64"
            );
            prev = next;
        }
    }

    #[test]
    fn negative_half_representative_flips_child_order() {
        // chain cell at residue 2 mod 3 has rep -1; its first child is
        // the top digit so the rep's cell stays on the chain
        assert_eq!(child_order(2, 3, 4), vec![3, 0, 1, 2]);
        assert_eq!(child_order(1, 3, 4), vec![0, 1, 2, 3]);
        // tie 2r = modulus keeps the nonnegative rep
        assert_eq!(child_order(2, 4, 3), vec![0, 1, 2]);
    }
}
