//! The tunable-dimension window family.
//!
//! Over scales `(s*p, p, p, ...)` each level's digit set splits into
//! three blocks: digit 0 is decidedly outside, a top block of
//! "continue" digits defers the decision to the next level, and the
//! middle block (never empty) is decidedly inside. The continue block
//! at level k is fat (`p-2` digits, `s(p-2)` at level one) when the
//! dial value `t` in `[0,1]` scores a hit at k, i.e.
//! `floor(k t) > floor((k-1) t)`, and thin (one digit, `s` at level
//! one) otherwise. After n levels the undecided mass is exactly
//! `eps(t,n) = (p-2)^floor(nt) / p^n`, so the dial sweeps the decay
//! rate of the uncertainty, and with it the box dimension of the
//! window's translation metric, continuously between the two extremes.
//!
//! The point metric `d_t` reads `eps(t,n)` at the first level where
//! two digit streams differ; its open ball of radius `eps(t,n)` around
//! a point is exactly that point's level-n cylinder.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::measure::{ln_rational, rat_u, MeasureInterval};
use crate::odometer::OdometerPoint;
use crate::window::{CellStatus, WindowError, WindowTree};
use crate::OdometerSpec;

#[derive(Debug, thiserror::Error)]
pub enum AcError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("level branching p must be at least 3, got {0}")]
    BranchingTooSmall(u64),
    #[error("first-level multiplier s must be at least 1")]
    MultiplierZero,
    #[error("dial value t must lie in [0, 1], got {0}")]
    DialOutOfRange(BigRational),
    #[error("depth must be at least 1")]
    DepthZero,
}

/// Parameters of one family member.
#[derive(Debug, Clone, PartialEq)]
pub struct AcParams {
    pub p: u64,
    pub s: u64,
    pub t: BigRational,
    pub depth: usize,
}

impl AcParams {
    pub fn new(p: u64, s: u64, t: BigRational, depth: usize) -> Result<Self, AcError> {
        if p < 3 {
            return Err(AcError::BranchingTooSmall(p));
        }
        if s == 0 {
            return Err(AcError::MultiplierZero);
        }
        if t < BigRational::zero() || t > BigRational::one() {
            return Err(AcError::DialOutOfRange(t));
        }
        if depth == 0 {
            return Err(AcError::DepthZero);
        }
        Ok(AcParams { p, s, t, depth })
    }

    /// Scale sequence `(s*p, p, ..., p)` with `depth` entries.
    pub fn scales(&self) -> Vec<u64> {
        let mut v = vec![self.s * self.p];
        v.resize(self.depth, self.p);
        v
    }

    pub fn spec(&self) -> Result<Arc<OdometerSpec>, AcError> {
        Ok(OdometerSpec::new(self.scales()).map_err(WindowError::from)?)
    }

    /// Whether level `k` scores a hit: `floor(k t) > floor((k-1) t)`.
    pub fn hit(&self, k: usize) -> bool {
        self.hit_count(k) > self.hit_count(k - 1)
    }

    /// Number of hits among levels `1..=n`, which equals `floor(n t)`.
    pub fn hit_count(&self, n: usize) -> u64 {
        let scaled = &self.t * BigRational::from_integer(BigInt::from(n));
        scaled.floor().to_integer().to_u64().expect("hit count fits u64")
    }

    /// Size of the continue block at level `k >= 1`.
    pub fn continue_count(&self, k: usize) -> u64 {
        let base = if self.hit(k) { self.p - 2 } else { 1 };
        if k == 1 {
            self.s * base
        } else {
            base
        }
    }

    /// Undecided mass after `n` levels:
    /// `eps(t,n) = prod_(k<=n) #C_k/m_k = (p-2)^floor(nt) / p^n`.
    /// Pure arithmetic; valid beyond the tree depth.
    pub fn cell_fraction(&self, n: usize) -> BigRational {
        let mut frac = BigRational::one();
        for k in 1..=n {
            let m = if k == 1 { self.s * self.p } else { self.p };
            frac *= rat_u(self.continue_count(k) as u128, m as u128);
        }
        frac
    }

    /// Distance between two digit streams under `d_t`: exactly
    /// `eps(t, l)` when they first differ at level `l` within the
    /// common depth, otherwise the interval spanning every remaining
    /// possibility for points of those two cylinders.
    pub fn point_metric(&self, a: &OdometerPoint, b: &OdometerPoint) -> MeasureInterval {
        let common = a.digits().len().min(b.digits().len());
        for lvl in 1..=common {
            if a.digits()[lvl - 1] != b.digits()[lvl - 1] {
                return MeasureInterval::point(self.cell_fraction(lvl));
            }
        }
        MeasureInterval::new(BigRational::zero(), self.cell_fraction(common + 1))
    }

    /// Log-log slope of the level-n cylinder count against the
    /// level-n uncertainty: `ln M_n / (-ln eps(t,n))`.
    pub fn finite_stage_ratio(&self, n: usize) -> f64 {
        let spec = OdometerSpec::new(self.scales_to(n)).expect("valid scales");
        let m_n = rat_u(spec.subgroup_index(n), 1);
        let eps = self.cell_fraction(n);
        ln_rational(&m_n) / -ln_rational(&eps)
    }

    /// Limiting value of the finite-stage ratios:
    /// `(1 - t ln(p-2)/ln p)^(-1)`.
    pub fn limit_ratio(&self) -> f64 {
        let t = crate::measure::to_f64(&self.t);
        let lp = (self.p as f64).ln();
        let lq = ((self.p - 2) as f64).ln();
        1.0 / (1.0 - t * lq / lp)
    }

    fn scales_to(&self, n: usize) -> Vec<u64> {
        let mut v = vec![self.s * self.p];
        v.resize(n.max(1), self.p);
        v
    }
}

/// A built family member: the tree together with the dial that shaped it.
#[derive(Debug, Clone)]
pub struct AcWindow {
    pub params: AcParams,
    pub tree: WindowTree,
}

/// Build the window at the params' depth. Digit 0 is outside at every
/// level reached, the middle block is inside, the top `continue_count`
/// digits recurse, and whatever is still undecided at the final level
/// stays a frontier cell. The all-maximal digit chain lies in the top
/// block at every level, so the undecided residue always contains the
/// embedded image of -1 and the true edge never empties out; boundary
/// metadata stays unknown accordingly.
pub fn ac_window(params: &AcParams) -> Result<AcWindow, AcError> {
    let spec = params.spec()?;
    let mut cells: Vec<(Vec<u64>, CellStatus)> = Vec::new();
    let mut live: Vec<Vec<u64>> = vec![Vec::new()];
    for level in 1..=params.depth {
        let m = if level == 1 { params.s * params.p } else { params.p };
        let c = params.continue_count(level);
        debug_assert!(m - c >= 2, "out digit and a nonempty in block");
        let mut next = Vec::with_capacity(live.len() * c as usize);
        for prefix in live {
            for d in 1..m - c {
                let mut path = prefix.clone();
                path.push(d);
                cells.push((path, CellStatus::In));
            }
            for d in m - c..m {
                let mut path = prefix.clone();
                path.push(d);
                next.push(path);
            }
        }
        live = next;
    }
    for path in live {
        cells.push((path, CellStatus::Frontier));
    }
    let tree = WindowTree::from_cells(&spec, params.depth, &cells)?;
    Ok(AcWindow { params: params.clone(), tree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::rat;
    use crate::metrics::ball_profile;

    fn params(p: u64, s: u64, t: (i128, i128), depth: usize) -> AcParams {
        AcParams::new(p, s, rat(t.0, t.1), depth).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(AcParams::new(2, 1, rat(1, 2), 3).is_err());
        assert!(AcParams::new(5, 0, rat(1, 2), 3).is_err());
        assert!(AcParams::new(5, 1, rat(3, 2), 3).is_err());
        assert!(AcParams::new(5, 1, rat(-1, 2), 3).is_err());
        assert!(AcParams::new(5, 1, rat(1, 2), 0).is_err());
    }

    #[test]
    fn hit_rule_matches_rotation_orbits() {
        let half = params(5, 1, (1, 2), 8);
        let hits: Vec<usize> = (1..=8).filter(|&k| half.hit(k)).collect();
        assert_eq!(hits, vec![2, 4, 6, 8]);
        let third = params(5, 1, (2, 3), 9);
        let hits: Vec<usize> = (1..=9).filter(|&k| third.hit(k)).collect();
        assert_eq!(hits, vec![2, 3, 5, 6, 8, 9]);
        let zero = params(5, 1, (0, 1), 6);
        assert!((1..=6).all(|k| !zero.hit(k)));
        let one = params(5, 1, (1, 1), 6);
        assert!((1..=6).all(|k| one.hit(k)));
    }

    #[test]
    fn cell_fraction_closed_form() {
        // eps(t,n) = (p-2)^floor(nt) / p^n for several dials
        for (num, den) in [(0i128, 1i128), (1, 2), (1, 3), (2, 3), (1, 1)] {
            let pr = params(5, 2, (num, den), 7);
            for n in 1..=7usize {
                let c = pr.hit_count(n) as u32;
                let expect = rat(3i128.pow(c), 5i128.pow(n as u32));
                assert_eq!(pr.cell_fraction(n), expect, "t={num}/{den} n={n}");
            }
        }
        // extremes: p^-n and ((p-2)/p)^n
        let zero = params(5, 3, (0, 1), 6);
        assert_eq!(zero.cell_fraction(6), rat(1, 5i128.pow(6)));
        let one = params(5, 3, (1, 1), 6);
        assert_eq!(one.cell_fraction(6), rat(3i128.pow(6), 5i128.pow(6)));
    }

    #[test]
    fn small_tree_statuses() {
        // p=3, s=1, t=1, depth 2: every level keeps one continue digit
        let w = ac_window(&params(3, 1, (1, 1), 2)).unwrap();
        let t = &w.tree;
        assert_eq!(t.uniform_status_at(&[0]).unwrap(), Some(CellStatus::Out));
        assert_eq!(t.uniform_status_at(&[1]).unwrap(), Some(CellStatus::In));
        assert_eq!(t.uniform_status_at(&[2, 0]).unwrap(), Some(CellStatus::Out));
        assert_eq!(t.uniform_status_at(&[2, 1]).unwrap(), Some(CellStatus::In));
        assert_eq!(t.uniform_status_at(&[2, 2]).unwrap(), Some(CellStatus::Frontier));
        assert_eq!(t.frontier_mass(), rat(1, 9));
    }

    #[test]
    fn frontier_mass_tracks_cell_fraction() {
        for (num, den) in [(0i128, 1i128), (1, 2), (1, 1)] {
            let pr = params(5, 2, (num, den), 6);
            let w = ac_window(&pr).unwrap();
            assert_eq!(w.tree.frontier_mass(), pr.cell_fraction(6));
        }
    }

    #[test]
    fn point_metric_reads_first_difference() {
        let pr = params(5, 1, (1, 1), 4);
        let spec = pr.spec().unwrap();
        let a = OdometerPoint::from_digits(&spec, vec![0, 0, 0, 0]).unwrap();
        let b = OdometerPoint::from_digits(&spec, vec![0, 0, 1, 0]).unwrap();
        assert_eq!(pr.point_metric(&a, &b), MeasureInterval::point(rat(27, 125)));
        let c = OdometerPoint::from_digits(&spec, vec![0, 0, 0, 0]).unwrap();
        let d = pr.point_metric(&a, &c);
        assert_eq!(d.lo, rat(0, 1));
        assert_eq!(d.hi, pr.cell_fraction(5));
    }

    #[test]
    fn unit_ball_is_the_cylinder() {
        // open d_t ball of radius eps(t,1) around 0 at grid level 2
        let pr = params(5, 1, (1, 1), 2);
        let spec = pr.spec().unwrap();
        let center = OdometerPoint::embed(&spec, 0, 2).unwrap();
        let radius = pr.cell_fraction(1);
        let profile =
            ball_profile(&spec, 2, &center, &radius, |a, b| pr.point_metric(a, b), false)
                .unwrap();
        assert_eq!(profile.certain, vec![0, 5, 10, 15, 20]);
        assert_eq!(profile.possible, profile.certain);
        assert_eq!(profile.mass.lo, rat(1, 5));
        assert_eq!(profile.mass.hi, rat(1, 5));
    }

    #[test]
    fn constant_dial_ratio_is_flat() {
        let pr = params(5, 1, (1, 1), 7);
        let limit = pr.limit_ratio();
        assert!((limit - 5f64.ln() / (5f64.ln() - 3f64.ln())).abs() < 1e-15);
        for n in 1..=7 {
            assert!((pr.finite_stage_ratio(n) - limit).abs() < 1e-12, "n={n}");
        }
    }
}
