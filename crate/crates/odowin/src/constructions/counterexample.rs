//! The irregular window over the doubly exponential odometer.
//!
//! Scales grow as `q_1 = 3`, `q_{n+1} = 2^(q_n - 1)`, so only four levels
//! are enumerable (`q_5 = 2^127`). Stage `n` of the build splits each of
//! the first `q_n - 1` children of the running tail cell into an in/out
//! half-half pattern keyed by the binary expansion of the child index,
//! and the last child becomes the next tail. The tail chain converges to
//! the single edge point whose digits are maximal at every level, i.e.
//! the embedded image of -1.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::measure::{log2_of_3_bounds, RatInterval};
use crate::odometer::{OdometerPoint, OdometerSpec};
use crate::window::{BoundaryInfo, CellStatus, EmbeddedStatus, WindowError, WindowTree};

/// Largest buildable tree depth: level 5 would need 2^127 children.
pub const MAX_DEPTH: usize = 4;

/// First `count` scale values `q_1..q_count` (count <= 4 stays in u64:
/// 3, 4, 8, 128).
pub fn scale_chain(count: usize) -> Result<Vec<u64>, WindowError> {
    if count == 0 || count > MAX_DEPTH {
        return Err(WindowError::BadDepth { requested: count, available: MAX_DEPTH });
    }
    let mut q = Vec::with_capacity(count);
    let mut cur: u64 = 3;
    for i in 0..count {
        q.push(cur);
        if i + 1 < count {
            cur = 1u64 << (cur - 1); // next exponent <= 127 for count <= 4
        }
    }
    Ok(q)
}

/// The odometer spec truncated at `depth` levels.
pub fn counterexample_spec(depth: usize) -> Result<Arc<OdometerSpec>, WindowError> {
    let scales = scale_chain(depth)?;
    Ok(OdometerSpec::new(scales)?)
}

/// Build the window tree at `depth` in `2..=4`. Stages `1..depth` are
/// fully resolved; the remaining tail cell is the frontier.
pub fn counterexample_window(depth: usize) -> Result<WindowTree, WindowError> {
    if !(2..=MAX_DEPTH).contains(&depth) {
        return Err(WindowError::BadDepth { requested: depth, available: MAX_DEPTH });
    }
    let spec = counterexample_spec(depth)?;
    let q = scale_chain(depth)?;
    let mut cells: Vec<(Vec<u64>, CellStatus)> = Vec::new();
    // prefix of the tail chain: all digits maximal
    let mut prefix: Vec<u64> = Vec::new();
    for n in 1..depth {
        let next_scale = q[n]; // q_{n+1}, the subdivision at level n+1
        for l in 0..q[n - 1] - 1 {
            let modulus = 1u64 << (l + 1);
            let half = 1u64 << l;
            for x in 0..next_scale {
                let status =
                    if x % modulus < half { CellStatus::In } else { CellStatus::Out };
                let mut path = prefix.clone();
                path.push(l);
                path.push(x);
                cells.push((path, status));
            }
        }
        prefix.push(q[n - 1] - 1);
    }
    cells.push((prefix, CellStatus::Frontier));
    let tree = WindowTree::from_cells(&spec, depth, &cells)?;
    let edge = OdometerPoint::embed(&spec, -1, depth)?;
    tree.with_boundary(BoundaryInfo::SingletonChain {
        digits: edge.digits().to_vec(),
        embedded: EmbeddedStatus::At(-1),
    })
}

/// Translate by a point that stands for a non-embedded group element.
/// Cell statuses at tree resolution are unchanged up to relabeling, and
/// the singleton edge moves off the embedded integers, which is exactly
/// what makes the translated window pass the genericity probe.
pub fn shifted_generic(
    window: &WindowTree,
    shift: &OdometerPoint,
) -> Result<WindowTree, WindowError> {
    window.shifted_by_nonembedded(shift)
}

/// Terms of the complexity lower-bound chain, evaluated as exact rational
/// brackets. `chain[n-1]` brackets
/// `(sum_{j<=n+1} log2 q_j) / (sum_{j<=n} log2 q_j + 1)` and
/// `simplified[n-1]` brackets `(q_n - 1) / (sum_{j<=n} log2 q_j + 1)`.
/// Only `log2 q_1 = log2 3` is irrational; it is bracketed to `1/precision`.
#[derive(Debug, Clone)]
pub struct DivergenceTerms {
    pub chain: Vec<RatInterval>,
    pub simplified: Vec<RatInterval>,
}

/// Exact big-integer values `log2 q_j` for `j >= 2` and `q_n - 1`;
/// `n_max` may go to 5 because only logarithms of `q_6` are needed, never
/// `q_6` itself.
pub fn divergence_terms(n_max: usize, precision: u32) -> DivergenceTerms {
    assert!((1..=5).contains(&n_max), "terms beyond n=5 are astronomically large");
    // log2 q_j: interval for j=1, exact integers afterwards.
    let log_q1 = log2_of_3_bounds(precision);
    // q_j as big integers for j = 1..=n_max (q_5 = 2^127 fits BigInt easily)
    let mut q: Vec<BigInt> = vec![BigInt::from(3)];
    for _ in 1..n_max {
        let prev = q.last().unwrap();
        // 2^(q_prev - 1); exponent fits u64 for q <= q_5
        let exp = u64::try_from(prev - BigInt::one()).expect("exponent fits");
        q.push(BigInt::one() << exp);
    }
    let exact_log = |j: usize| -> BigRational {
        // log2 q_j for j >= 2 equals q_{j-1} - 1
        BigRational::from_integer(&q[j - 2] - BigInt::one())
    };
    let mut chain = Vec::new();
    let mut simplified = Vec::new();
    let mut log_sum = log_q1.clone();
    for n in 1..=n_max {
        if n >= 2 {
            log_sum = log_sum.add_exact(&exact_log(n));
        }
        let denom = log_sum.add_exact(&BigRational::one());
        let numer_chain = log_sum.add_exact(&exact_log(n + 1));
        chain.push(numer_chain.div(&denom));
        let numer_simple =
            RatInterval::point(BigRational::from_integer(&q[n - 1] - BigInt::one()));
        simplified.push(numer_simple.div(&denom));
    }
    DivergenceTerms { chain, simplified }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{rat, to_f64};

    #[test]
    fn scale_chain_values() {
        assert_eq!(scale_chain(4).unwrap(), vec![3, 4, 8, 128]);
        assert!(scale_chain(5).is_err());
        assert!(scale_chain(0).is_err());
    }

    #[test]
    fn depth_two_cells() {
        let w = counterexample_window(2).unwrap();
        let spec = w.spec();
        // first-stage in-cells as listed: [0,0], [0,2], [1,0], [1,1]
        for path in [[0, 0], [0, 2], [1, 0], [1, 1]] {
            let p = path.to_vec();
            assert_eq!(w.uniform_status_at(&p).unwrap(), Some(CellStatus::In), "{path:?}");
        }
        for path in [[0, 1], [0, 3], [1, 2], [1, 3]] {
            let p = path.to_vec();
            assert_eq!(w.uniform_status_at(&p).unwrap(), Some(CellStatus::Out), "{path:?}");
        }
        assert_eq!(w.uniform_status_at(&[2]).unwrap(), Some(CellStatus::Frontier));
        assert_eq!(w.frontier_mass(), rat(1, 3));
        let _ = spec;
    }

    #[test]
    fn depth_three_second_stage_cells() {
        let w = counterexample_window(3).unwrap();
        let in_sets: [&[u64]; 3] = [&[0, 2, 4, 6], &[0, 1, 4, 5], &[0, 1, 2, 3]];
        for (l, in_set) in in_sets.iter().enumerate() {
            for x in 0..8u64 {
                let expect = if in_set.contains(&x) { CellStatus::In } else { CellStatus::Out };
                let path = vec![2, l as u64, x];
                assert_eq!(w.uniform_status_at(&path).unwrap(), Some(expect), "{path:?}");
            }
        }
        assert_eq!(w.uniform_status_at(&[2, 3]).unwrap(), Some(CellStatus::Frontier));
        assert_eq!(w.frontier_mass(), rat(1, 12));
    }

    #[test]
    fn depth_four_frontier_and_boundary() {
        let w = counterexample_window(4).unwrap();
        assert_eq!(w.frontier_mass(), rat(1, 96));
        match w.boundary() {
            BoundaryInfo::SingletonChain { digits, embedded } => {
                assert_eq!(digits, &vec![2, 3, 7, 127]);
                assert_eq!(*embedded, EmbeddedStatus::At(-1));
            }
            other => panic!("unexpected boundary {other:?}"),
        }
    }

    #[test]
    fn decided_fractions_depth_three() {
        let w = counterexample_window(3).unwrap();
        assert_eq!(w.decided_fraction_at_level(1).unwrap(), rat(0, 1));
        assert_eq!(w.decided_fraction_at_level(2).unwrap(), rat(2, 3));
        assert_eq!(w.decided_fraction_at_level(3).unwrap(), rat(11, 12));
    }

    #[test]
    fn stage_halves_balance() {
        // each stage cell splits its subcells exactly in half, so the
        // decided mass is shared evenly and only the tail is uncertain
        let w = counterexample_window(3).unwrap();
        let m = w.measure();
        assert_eq!(m.lo, rat(11, 24));
        assert_eq!(m.hi, rat(13, 24));
        assert_eq!(w.frontier_mass(), rat(1, 12));
        // in-mass == out-mass: lo + hi = (in) + (in + frontier) = 1
        assert_eq!(m.lo + m.hi, rat(1, 1));
    }

    #[test]
    fn shifted_window_keeps_cells_and_frees_edge() {
        let w = counterexample_window(3).unwrap();
        let spec = w.spec().clone();
        let zeta = OdometerPoint::from_digits(&spec, vec![1, 1, 1]).unwrap();
        let shifted = shifted_generic(&w, &zeta).unwrap();
        assert_eq!(shifted.measure(), w.measure());
        match shifted.boundary() {
            BoundaryInfo::SingletonChain { embedded, .. } => {
                assert_eq!(*embedded, EmbeddedStatus::NotEmbedded);
            }
            other => panic!("unexpected boundary {other:?}"),
        }
    }

    #[test]
    fn divergence_chain_brackets() {
        let terms = divergence_terms(5, 400);
        // chain terms strictly increase throughout
        for pair in terms.chain.windows(2) {
            assert!(pair[0].certainly_lt(&pair[1]), "{:?} !< {:?}", pair[0], pair[1]);
        }
        // simplified terms dip from n=1 to n=2 and then increase
        assert!(terms.simplified[1].certainly_lt(&terms.simplified[0]));
        for pair in terms.simplified[1..].windows(2) {
            assert!(pair[0].certainly_lt(&pair[1]));
        }
        // float spot checks
        let approx = |iv: &RatInterval| to_f64(&iv.lo);
        assert!((approx(&terms.simplified[0]) - 0.7737).abs() < 1e-3);
        assert!((approx(&terms.simplified[1]) - 0.6543).abs() < 1e-3);
        // both final terms clear 10^35
        let huge = BigRational::from_integer(BigInt::from(10).pow(35));
        assert!(terms.simplified[4].certainly_gt(&huge));
        assert!(terms.chain[4].certainly_gt(&huge));
    }
}
