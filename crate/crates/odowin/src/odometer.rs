//! Integer odometers: mixed-radix digit arithmetic and the cylinder metric.
//!
//! A spec fixes a scale sequence `(m_1, ..., m_N)` with every `m_n >= 2`.
//! Points at depth `d <= N` are digit vectors `(x_1, ..., x_d)` with
//! `x_n < m_n`; the vector stands for the residue `x_1 + x_2*M_1 + ...`
//! modulo `M_d`, where `M_n = m_1 * ... * m_n` and `M_0 = 1`. Addition is
//! school addition with carries moving toward deeper levels, so the first
//! `n` digits of a sum depend only on the first `n` digits of the inputs.
//!
//! The metric is the canonical ultrametric of the quotient chain:
//! `dist(x, y) = 1/M_(n-1)` where `n` is the first level whose digits
//! differ. Every ball is a cylinder (a digit-prefix set) and conversely.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{rat_u, MeasureInterval};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OdometerError {
    #[error("scale {0} at level {1} is below 2")]
    ScaleTooSmall(u64, usize),
    #[error("empty scale sequence")]
    EmptyScales,
    #[error("cumulative index overflows at level {0}")]
    IndexOverflow(usize),
    #[error("depth {requested} exceeds available depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("digit {digit} at level {level} exceeds scale {scale}")]
    DigitOutOfRange { digit: u64, level: usize, scale: u64 },
    #[error("points live over different scale sequences")]
    SpecMismatch,
    #[error("points have different depths ({0} vs {1})")]
    DepthMismatch(usize, usize),
    #[error("ball radius must satisfy 0 < eps <= 1")]
    RadiusOutOfRange,
    #[error("no cylinder at available depth is small enough for radius {0}")]
    RadiusBelowResolution(String),
}

/// Scale sequence of an odometer together with the cumulative indices `M_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OdometerSpec {
    scales: Vec<u64>,
    // cumulative[n] = M_n for n in 0..=N, cumulative[0] = 1
    cumulative: Vec<u128>,
}

impl OdometerSpec {
    pub fn new(scales: Vec<u64>) -> Result<Arc<Self>, OdometerError> {
        if scales.is_empty() {
            return Err(OdometerError::EmptyScales);
        }
        let mut cumulative = Vec::with_capacity(scales.len() + 1);
        cumulative.push(1u128);
        for (i, &m) in scales.iter().enumerate() {
            if m < 2 {
                return Err(OdometerError::ScaleTooSmall(m, i + 1));
            }
            let next = cumulative[i]
                .checked_mul(m as u128)
                .ok_or(OdometerError::IndexOverflow(i + 1))?;
            cumulative.push(next);
        }
        Ok(Arc::new(OdometerSpec { scales, cumulative }))
    }

    pub fn max_depth(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[u64] {
        &self.scales
    }

    /// Scale `m_n`, one-based.
    pub fn scale(&self, n: usize) -> u64 {
        self.scales[n - 1]
    }

    /// Subgroup index `M_n = m_1 * ... * m_n`; `M_0 = 1`.
    pub fn subgroup_index(&self, n: usize) -> u128 {
        self.cumulative[n]
    }

    /// Haar measure `1/M_n` of a level-`n` cylinder.
    pub fn cylinder_measure(&self, n: usize) -> BigRational {
        rat_u(1, self.cumulative[n])
    }

    /// Exact measure of `count` level-`n` cylinders, as a point interval.
    pub fn cells_measure(&self, count: u128, n: usize) -> MeasureInterval {
        MeasureInterval::point(rat_u(count, self.cumulative[n]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpecFile {
            scales: self.scales.clone(),
            max_depth: self.scales.len(),
        })
        .expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Arc<Self>, String> {
        let file: SpecFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.max_depth == 0 || file.max_depth > file.scales.len() {
            return Err(format!(
                "max_depth {} incompatible with {} scales",
                file.max_depth,
                file.scales.len()
            ));
        }
        let mut scales = file.scales;
        scales.truncate(file.max_depth);
        OdometerSpec::new(scales).map_err(|e| e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    scales: Vec<u64>,
    max_depth: usize,
}

/// A point known to finite depth: the digit prefix of an odometer element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OdometerPoint {
    spec: Arc<OdometerSpec>,
    digits: Vec<u64>,
}

impl OdometerPoint {
    pub fn from_digits(
        spec: &Arc<OdometerSpec>,
        digits: Vec<u64>,
    ) -> Result<Self, OdometerError> {
        if digits.len() > spec.max_depth() {
            return Err(OdometerError::DepthExceeded {
                requested: digits.len(),
                available: spec.max_depth(),
            });
        }
        for (i, &d) in digits.iter().enumerate() {
            let m = spec.scale(i + 1);
            if d >= m {
                return Err(OdometerError::DigitOutOfRange { digit: d, level: i + 1, scale: m });
            }
        }
        Ok(OdometerPoint { spec: Arc::clone(spec), digits })
    }

    /// The embedded integer `tau(g)` truncated to `depth` digits. Negative
    /// integers land on their residues: at every level the digit vector
    /// represents `g mod M_n`.
    pub fn embed(
        spec: &Arc<OdometerSpec>,
        g: i128,
        depth: usize,
    ) -> Result<Self, OdometerError> {
        if depth == 0 || depth > spec.max_depth() {
            return Err(OdometerError::DepthExceeded { requested: depth, available: spec.max_depth() });
        }
        let modulus = spec.subgroup_index(depth) as i128;
        let residue = g.rem_euclid(modulus) as u128;
        Ok(Self::from_residue(spec, residue, depth))
    }

    /// Digits of `residue mod M_depth`. The residue must already be reduced.
    pub fn from_residue(spec: &Arc<OdometerSpec>, residue: u128, depth: usize) -> Self {
        debug_assert!(residue < spec.subgroup_index(depth));
        let mut digits = Vec::with_capacity(depth);
        let mut rest = residue;
        for n in 1..=depth {
            let m = spec.scale(n) as u128;
            digits.push((rest % m) as u64);
            rest /= m;
        }
        OdometerPoint { spec: Arc::clone(spec), digits }
    }

    pub fn identity(spec: &Arc<OdometerSpec>, depth: usize) -> Self {
        OdometerPoint { spec: Arc::clone(spec), digits: vec![0; depth] }
    }

    pub fn spec(&self) -> &Arc<OdometerSpec> {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// The residue this digit vector represents modulo `M_depth`.
    pub fn residue(&self) -> u128 {
        let mut acc = 0u128;
        for n in (1..=self.digits.len()).rev() {
            acc = acc * self.spec.scale(n) as u128 + self.digits[n - 1] as u128;
        }
        acc
    }

    pub fn truncate(&self, depth: usize) -> Self {
        assert!(depth <= self.depth());
        OdometerPoint { spec: Arc::clone(&self.spec), digits: self.digits[..depth].to_vec() }
    }

    fn check_compatible(&self, other: &Self) -> Result<(), OdometerError> {
        if self.spec.scales != other.spec.scales {
            return Err(OdometerError::SpecMismatch);
        }
        if self.depth() != other.depth() {
            return Err(OdometerError::DepthMismatch(self.depth(), other.depth()));
        }
        Ok(())
    }

    /// Digit addition with carry-over. The first `n` digits of the result
    /// depend only on the first `n` digits of the inputs.
    pub fn add(&self, other: &Self) -> Result<Self, OdometerError> {
        self.check_compatible(other)?;
        let mut digits = Vec::with_capacity(self.depth());
        let mut carry = 0u64;
        for n in 1..=self.depth() {
            let m = self.spec.scale(n);
            let sum = self.digits[n - 1] + other.digits[n - 1] + carry;
            digits.push(sum % m);
            carry = sum / m;
        }
        Ok(OdometerPoint { spec: Arc::clone(&self.spec), digits })
    }

    /// Additive inverse modulo `M_depth`.
    pub fn negate(&self) -> Self {
        let depth = self.depth();
        if depth == 0 {
            return self.clone();
        }
        let modulus = self.spec.subgroup_index(depth);
        let r = self.residue();
        let neg = if r == 0 { 0 } else { modulus - r };
        Self::from_residue(&self.spec, neg, depth)
    }

    /// Canonical ultrametric: `1/M_(n-1)` at the first differing level,
    /// zero when all available digits agree.
    pub fn dist(&self, other: &Self) -> Result<BigRational, OdometerError> {
        self.check_compatible(other)?;
        for n in 1..=self.depth() {
            if self.digits[n - 1] != other.digits[n - 1] {
                return Ok(rat_u(1, self.spec.subgroup_index(n - 1)));
            }
        }
        Ok(BigRational::zero())
    }

    /// The open ball `{y : dist(x, y) < eps}` as a cylinder: returns the
    /// level `n` and digit prefix of `[x]_n`, where `n` is minimal with
    /// `1/M_n < eps`. Requires `0 < eps <= 1`.
    pub fn ball_to_cylinder(&self, eps: &BigRational) -> Result<(usize, Vec<u64>), OdometerError> {
        use num_traits::One;
        if !(eps > &BigRational::zero() && eps <= &BigRational::one()) {
            return Err(OdometerError::RadiusOutOfRange);
        }
        for n in 1..=self.depth() {
            if &rat_u(1, self.spec.subgroup_index(n)) < eps {
                return Ok((n, self.digits[..n].to_vec()));
            }
        }
        Err(OdometerError::RadiusBelowResolution(eps.to_string()))
    }
}
