//! Estimators over symbolic arrays and windows: array pseudo-distances,
//! ball mass profiles, log-log slope readings, periodic-structure bounds,
//! and word counts.
//!
//! Everything here either returns exact rationals, honest intervals, or is
//! explicitly labelled an estimate. Undecided symbols are never coerced:
//! each routine states whether it skips them (reporting how many) or
//! refuses to proceed.

use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use thiserror::Error;

use crate::measure::{ln_rational, rat_u, MeasureInterval};
use crate::model_set::{Symbol, SymbolicArray};
use crate::odometer::{OdometerPoint, OdometerSpec};
use crate::window::{WindowError, WindowTree};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("arrays do not overlap")]
    RangesDisjoint,
    #[error("undecided symbol at position {0}")]
    UndecidedSymbol(i128),
    #[error("position {0} outside the array range")]
    OutOfRange(i128),
    #[error("window length must be positive and fit the common range")]
    BadWindowLength,
    #[error("word length must be positive and fit the array")]
    BadWordLength,
    #[error("scan over {0} residues is too large")]
    ScanTooLarge(u128),
}

/// What to do when a compared position is undecided on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UndecidedPolicy {
    /// Drop the position from numerator and denominator, but count it.
    Exclude,
    /// Refuse and report the first offending position.
    Error,
}

/// Result of comparing two arrays position by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonEstimate {
    pub differing: usize,
    pub compared: usize,
    pub excluded: usize,
}

impl ComparisonEstimate {
    /// Fraction of compared positions that differ; `None` when nothing
    /// could be compared.
    pub fn density(&self) -> Option<BigRational> {
        if self.compared == 0 {
            None
        } else {
            Some(rat_u(self.differing as u128, self.compared as u128))
        }
    }
}

fn common_range(a: &SymbolicArray, b: &SymbolicArray) -> Result<(i128, i128), MetricsError> {
    let lo = a.start().max(b.start());
    let hi = (a.start() + a.len() as i128).min(b.start() + b.len() as i128);
    if lo >= hi {
        return Err(MetricsError::RangesDisjoint);
    }
    Ok((lo, hi))
}

fn compare_span(
    a: &SymbolicArray,
    b: &SymbolicArray,
    lo: i128,
    hi: i128,
    policy: UndecidedPolicy,
) -> Result<ComparisonEstimate, MetricsError> {
    let mut differing = 0;
    let mut compared = 0;
    let mut excluded = 0;
    for g in lo..hi {
        let x = a.get(g).ok_or(MetricsError::OutOfRange(g))?;
        let y = b.get(g).ok_or(MetricsError::OutOfRange(g))?;
        if x == Symbol::Undecided || y == Symbol::Undecided {
            match policy {
                UndecidedPolicy::Exclude => {
                    excluded += 1;
                    continue;
                }
                UndecidedPolicy::Error => return Err(MetricsError::UndecidedSymbol(g)),
            }
        }
        compared += 1;
        if x != y {
            differing += 1;
        }
    }
    Ok(ComparisonEstimate { differing, compared, excluded })
}

/// Average disagreement density over the whole common range: the
/// finite-length reading of the averaged array pseudo-distance.
pub fn besicovitch_estimate(
    a: &SymbolicArray,
    b: &SymbolicArray,
    policy: UndecidedPolicy,
) -> Result<ComparisonEstimate, MetricsError> {
    let (lo, hi) = common_range(a, b)?;
    compare_span(a, b, lo, hi, policy)
}

/// Worst window of a fixed length: the finite-length reading of the
/// sup-over-intervals array pseudo-distance. With `window_len` equal to
/// the whole common range this coincides with the averaged reading, so
/// the averaged value never exceeds it.
#[derive(Debug, Clone)]
pub struct WeylEstimate {
    pub best_offset: i128,
    pub estimate: ComparisonEstimate,
}

pub fn weyl_estimate(
    a: &SymbolicArray,
    b: &SymbolicArray,
    window_len: usize,
    policy: UndecidedPolicy,
) -> Result<WeylEstimate, MetricsError> {
    let (lo, hi) = common_range(a, b)?;
    let span = (hi - lo) as usize;
    if window_len == 0 || window_len > span {
        return Err(MetricsError::BadWindowLength);
    }
    let mut best: Option<WeylEstimate> = None;
    for offset in lo..=hi - window_len as i128 {
        let est = compare_span(a, b, offset, offset + window_len as i128, policy)?;
        let better = match (&best, est.density()) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(cur), Some(d)) => match cur.estimate.density() {
                None => true,
                Some(cd) => d > cd,
            },
        };
        if better {
            best = Some(WeylEstimate { best_offset: offset, estimate: est });
        }
    }
    best.ok_or(MetricsError::RangesDisjoint)
}

/// Mass profile of one metric ball, read off a full residue grid.
///
/// Every residue class at `grid_level` is represented by its embedded
/// point and tested against `radius`. Interval-valued distances make the
/// ball two-sided: `certain` members have `dist.hi < radius`, `possible`
/// members merely fail to be excluded (`dist.lo < radius`). The mass
/// interval spans those two counts.
#[derive(Debug, Clone)]
pub struct BallProfile {
    pub radius: BigRational,
    pub grid_level: usize,
    pub certain: Vec<u128>,
    pub possible: Vec<u128>,
    pub mass: MeasureInterval,
}

pub fn ball_profile<F>(
    spec: &std::sync::Arc<OdometerSpec>,
    grid_level: usize,
    center: &OdometerPoint,
    radius: &BigRational,
    dist: F,
    parallel: bool,
) -> Result<BallProfile, MetricsError>
where
    F: Fn(&OdometerPoint, &OdometerPoint) -> MeasureInterval + Sync,
{
    let modulus = spec.subgroup_index(grid_level);
    let total: u64 = modulus.try_into().map_err(|_| MetricsError::ScanTooLarge(modulus))?;
    let classify = |r: u64| -> (u128, bool, bool) {
        let rep = OdometerPoint::from_residue(spec, r as u128, grid_level);
        let d = dist(center, &rep);
        (r as u128, &d.hi < radius, &d.lo < radius)
    };
    let rows: Vec<(u128, bool, bool)> = if parallel {
        (0..total).into_par_iter().map(classify).collect()
    } else {
        (0..total).map(classify).collect()
    };
    let mut certain = Vec::new();
    let mut possible = Vec::new();
    for (r, is_certain, is_possible) in rows {
        if is_certain {
            certain.push(r);
        }
        if is_possible {
            possible.push(r);
        }
    }
    let mass = MeasureInterval::new(
        rat_u(certain.len() as u128, modulus),
        rat_u(possible.len() as u128, modulus),
    );
    Ok(BallProfile { radius: radius.clone(), grid_level, certain, possible, mass })
}

/// One radius/mass pair with its log-log slope reading.
///
/// For radius below one, `ln(mass)/ln(radius)` is decreasing in the mass,
/// so the interval endpoints swap: the slope floor comes from the mass
/// ceiling and vice versa. A zero mass floor pushes the slope ceiling to
/// infinity.
#[derive(Debug, Clone)]
pub struct SlopePoint {
    pub radius: BigRational,
    pub mass: MeasureInterval,
    pub slope_lo: f64,
    pub slope_hi: f64,
}

/// Slope readings for a radius sequence, with the extremes over a tail.
#[derive(Debug, Clone)]
pub struct SlopeEstimate {
    pub points: Vec<SlopePoint>,
}

impl SlopeEstimate {
    pub fn from_pairs(pairs: Vec<(BigRational, MeasureInterval)>) -> Self {
        let points = pairs
            .into_iter()
            .map(|(radius, mass)| {
                let ln_eps = ln_rational(&radius);
                debug_assert!(ln_eps < 0.0, "radii must be below one");
                let slope_lo = if mass.hi.is_zero() {
                    f64::INFINITY
                } else {
                    ln_rational(&mass.hi) / ln_eps
                };
                let slope_hi = if mass.lo.is_zero() {
                    f64::INFINITY
                } else {
                    ln_rational(&mass.lo) / ln_eps
                };
                SlopePoint { radius, mass, slope_lo, slope_hi }
            })
            .collect();
        SlopeEstimate { points }
    }

    /// Largest certified slope floor among the last `tail` points.
    pub fn tail_max_lo(&self, tail: usize) -> Option<f64> {
        let skip = self.points.len().saturating_sub(tail);
        self.points[skip..].iter().map(|p| p.slope_lo).fold(None, |acc, v| {
            Some(match acc {
                None => v,
                Some(a) if v > a => v,
                Some(a) => a,
            })
        })
    }

    /// Smallest slope ceiling among the last `tail` points.
    pub fn tail_min_hi(&self, tail: usize) -> Option<f64> {
        let skip = self.points.len().saturating_sub(tail);
        self.points[skip..].iter().map(|p| p.slope_hi).fold(None, |acc, v| {
            Some(match acc {
                None => v,
                Some(a) if v < a => v,
                Some(a) => a,
            })
        })
    }
}

/// Upper bound on the ball-mass slope from periodic structure: the best
/// value of `ln M_(n+1) / (-ln(1 - D_n))` over levels where the decided
/// fraction `D_n` is strictly between zero and one.
#[derive(Debug, Clone)]
pub struct PeriodicSlopeBound {
    /// `(level, term)` for each usable level.
    pub terms: Vec<(usize, f64)>,
    pub bound: Option<f64>,
}

pub fn periodic_slope_bound(
    window: &WindowTree,
    max_level: usize,
) -> Result<PeriodicSlopeBound, MetricsError> {
    use num_traits::One;
    let mut terms = Vec::new();
    let top = max_level.min(window.depth() - 1);
    for n in 1..=top {
        let d = window.decided_fraction_at_level(n)?;
        if d.is_zero() || d == BigRational::one() {
            continue;
        }
        let gap = BigRational::one() - d;
        let m_next = window.spec().subgroup_index(n + 1);
        let term = ln_rational(&rat_u(m_next, 1)) / (-ln_rational(&gap));
        terms.push((n, term));
    }
    let bound = terms.iter().map(|(_, t)| *t).fold(None, |acc: Option<f64>, v| {
        Some(match acc {
            None => v,
            Some(a) if v > a => v,
            Some(a) => a,
        })
    });
    Ok(PeriodicSlopeBound { terms, bound })
}

/// Count distinct fully decided length-`len` factors. Refuses if any
/// scanned position is undecided.
pub fn entropy_word_count(array: &SymbolicArray, len: usize) -> Result<usize, MetricsError> {
    if len == 0 || len > array.len() {
        return Err(MetricsError::BadWordLength);
    }
    let mut words: HashSet<Vec<u8>> = HashSet::new();
    let start = array.start();
    for offset in 0..=array.len() - len {
        let mut word = Vec::with_capacity(len);
        for i in 0..len {
            let g = start + (offset + i) as i128;
            match array.get(g).expect("scan stays in range") {
                Symbol::One => word.push(1),
                Symbol::Zero => word.push(0),
                Symbol::Undecided => return Err(MetricsError::UndecidedSymbol(g)),
            }
        }
        words.insert(word);
    }
    Ok(words.len())
}

/// Distinct decided patterns read on `positions + h` for each offset `h`.
/// Refuses on undecided or out-of-range reads.
pub fn patterns_on_set(
    array: &SymbolicArray,
    positions: &[i128],
    offsets: &[i128],
) -> Result<HashSet<Vec<u8>>, MetricsError> {
    let mut patterns = HashSet::new();
    for &h in offsets {
        let mut pattern = Vec::with_capacity(positions.len());
        for &p in positions {
            let g = p + h;
            match array.get(g).ok_or(MetricsError::OutOfRange(g))? {
                Symbol::One => pattern.push(1),
                Symbol::Zero => pattern.push(0),
                Symbol::Undecided => return Err(MetricsError::UndecidedSymbol(g)),
            }
        }
        patterns.insert(pattern);
    }
    Ok(patterns)
}
