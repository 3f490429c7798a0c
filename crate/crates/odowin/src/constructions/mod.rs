//! Named window families and the combinators that join them.
//!
//! Each submodule builds one family of windows with hand-checkable
//! structure: [`counterexample`] grows an irregular window over doubly
//! exponential scales, [`ac`] builds the tunable-dimension family,
//! [`path`] walks a measure-continuous path from the empty window to
//! the full group, and [`entropy`] runs the staged positive-entropy
//! construction. The free functions here combine windows from those
//! families.

pub mod ac;
pub mod counterexample;
pub mod entropy;
pub mod path;

use crate::window::{CellStatus, WindowError, WindowTree};

/// Interpolate between nested windows: on each cell the result follows
/// `inner` where the dial window is out, `outer` where the dial window
/// is in, and stays undecided where the dial is undecided unless both
/// endpoints already agree decisively.
///
/// Requires `inner` to sit inside `outer` cellwise. The cellwise rule
/// (rather than the equivalent set-algebra composition) keeps every
/// decided cell decided: where the dial is undecided but `inner` is
/// already in, the result is in regardless of the dial, and likewise
/// out where `outer` is out.
pub fn blend(
    inner: &WindowTree,
    outer: &WindowTree,
    dial: &WindowTree,
) -> Result<WindowTree, WindowError> {
    if !inner.cellwise_subset(outer)? {
        return Err(WindowError::NotNested);
    }
    dial.zip3_with(inner, outer, |d, i, o| match d {
        CellStatus::In => o,
        CellStatus::Out => i,
        CellStatus::Frontier => match (i, o) {
            (CellStatus::In, _) => CellStatus::In,
            (_, CellStatus::Out) => CellStatus::Out,
            _ => CellStatus::Frontier,
        },
    })
}

/// Regularize a window: keep the decided interior and exterior, leave
/// the undecided cells undecided. At tree resolution the decided cells
/// already carry the closure of the interior, so this is the identity
/// on the tree and only strips stale boundary metadata. It exists so
/// that pipelines can state the normalization step explicitly and so
/// generated arrays can be compared before and after.
pub fn properify(window: &WindowTree) -> WindowTree {
    window.clone_without_boundary()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::measure::rat;
    use crate::odometer::OdometerSpec;
    use crate::window::BoundaryInfo;

    fn spec() -> Arc<OdometerSpec> {
        OdometerSpec::new(vec![2, 3]).unwrap()
    }

    fn from_cells(cells: &[(Vec<u64>, CellStatus)]) -> WindowTree {
        WindowTree::from_cells(&spec(), 2, cells).unwrap()
    }

    #[test]
    fn blend_endpoints_are_exact() {
        let inner = from_cells(&[(vec![0, 0], CellStatus::In)]);
        let outer = from_cells(&[
            (vec![0, 0], CellStatus::In),
            (vec![0, 1], CellStatus::In),
            (vec![1, 2], CellStatus::In),
        ]);
        let all_out = from_cells(&[]);
        let all_in = from_cells(&[(vec![], CellStatus::In)]);
        assert_eq!(blend(&inner, &outer, &all_out).unwrap(), inner);
        assert_eq!(blend(&inner, &outer, &all_in).unwrap(), outer);
    }

    #[test]
    fn blend_keeps_agreeing_cells_decided() {
        let inner = from_cells(&[(vec![0, 0], CellStatus::In)]);
        let outer = from_cells(&[
            (vec![0, 0], CellStatus::In),
            (vec![0, 1], CellStatus::In),
        ]);
        let dial = from_cells(&[(vec![], CellStatus::Frontier)]);
        let mix = blend(&inner, &outer, &dial).unwrap();
        // both endpoints in: stays in even though the dial is undecided
        assert_eq!(mix.uniform_status_at(&[0, 0]).unwrap(), Some(CellStatus::In));
        // endpoints disagree: undecided
        assert_eq!(mix.uniform_status_at(&[0, 1]).unwrap(), Some(CellStatus::Frontier));
        // both endpoints out: stays out
        assert_eq!(mix.uniform_status_at(&[1, 0]).unwrap(), Some(CellStatus::Out));
    }

    #[test]
    fn blend_rejects_non_nested_endpoints() {
        let a = from_cells(&[(vec![0, 0], CellStatus::In)]);
        let b = from_cells(&[(vec![1, 0], CellStatus::In)]);
        let dial = from_cells(&[]);
        assert!(matches!(blend(&a, &b, &dial), Err(WindowError::NotNested)));
    }

    #[test]
    fn blend_sits_between_endpoints() {
        let inner = from_cells(&[(vec![0, 0], CellStatus::In)]);
        let outer = from_cells(&[
            (vec![0, 0], CellStatus::In),
            (vec![0, 1], CellStatus::In),
            (vec![1, 1], CellStatus::Frontier),
        ]);
        let dial = from_cells(&[
            (vec![0], CellStatus::In),
            (vec![1, 0], CellStatus::Frontier),
        ]);
        let mix = blend(&inner, &outer, &dial).unwrap();
        assert!(inner.cellwise_subset(&mix).unwrap());
        assert!(mix.cellwise_subset(&outer).unwrap());
    }

    #[test]
    fn properify_fixes_the_tree_and_clears_metadata() {
        let w = from_cells(&[
            (vec![0, 0], CellStatus::In),
            (vec![1, 0], CellStatus::Frontier),
        ]);
        let p = properify(&w);
        assert_eq!(p.measure(), w.measure());
        assert_eq!(p.frontier_mass(), rat(1, 6));
        for path in [[0u64, 0], [0, 1], [1, 0], [1, 1]] {
            let path = path.to_vec();
            assert_eq!(p.uniform_status_at(&path).unwrap(), w.uniform_status_at(&path).unwrap());
        }
        assert!(matches!(p.boundary(), BoundaryInfo::Unknown));
    }
}
