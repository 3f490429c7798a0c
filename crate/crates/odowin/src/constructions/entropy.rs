//! Staged window pairs with tunable pattern richness.
//!
//! The builder lays binary words onto cosets of an odometer, stage by stage,
//! so that the generated 0-1 array shows a prescribed density of "free"
//! positions while the window stays a finite union of cylinders plus one
//! shrinking undecided chain. Two windows come out of a run:
//!
//! * the **upper** window decides every cell that carries a word and leaves
//!   the rest on the frontier; its array realises every word on the free
//!   positions, so the pattern count grows exponentially in the free-set
//!   size, and
//! * the **lower** window keeps only the reserve chain of cylinders (one per
//!   stage) plus the final undecided cell; its array is a sparse indicator
//!   with a single non-periodic accumulation point.
//!
//! The lower window sits inside the upper one cellwise, so the pair serves
//! as the endpoints of [`blend`](super::blend).
//!
//! Every choice the builder makes (levels, capacities, translate offsets,
//! cover points, word assignments) is deterministic and recorded in an
//! [`EntropyLog`], and [`verify_log`] re-checks the construction's internal
//! invariants exhaustively over one period from the log alone.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::measure::RationalRepr;
use crate::odometer::{OdometerPoint, OdometerSpec};
use crate::window::{BoundaryInfo, CellStatus, EmbeddedStatus, WindowError, WindowTree};

/// Scanning a full period is part of the contract; refuse periods past this.
const PERIOD_BUDGET: u128 = 1 << 20;

/// Largest free-set size we are willing to enumerate words for.
/// A stage with `f` free positions needs `f * 2^f` translate elements.
const FREE_SET_BUDGET: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum EntropyError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("the richness dial must lie strictly between 0 and 1")]
    GammaOutOfRange,
    #[error("need at least one stage")]
    NoStages,
    #[error(
        "stage {stage} would need 2^{survivors} word translates; \
         refusing past 2^{FREE_SET_BUDGET}"
    )]
    TooManyWords { stage: usize, survivors: usize },
    #[error("stage {stage} does not fit the given scales: needs {inequality}")]
    SizeHint { stage: usize, inequality: String },
    #[error("stage {stage} has period {period}, past the exhaustive-check budget")]
    PeriodTooLarge { stage: usize, period: u128 },
}

/// Everything one stage commits to, in integers and residue sets.
///
/// Residue sets (`carriers`, `word_*`, `survivors`, `word_classes`,
/// `claimed_classes`) live at the stage's `coset_level`; `translates` and
/// `covers` are plain integers prepared for the *next* stage and stay empty
/// on the last one.
#[derive(Debug, Clone, Serialize)]
pub struct StageLog {
    /// 1-based stage index.
    pub stage: usize,
    /// Level `k`: the stage works inside the fundamental block `[0, M_k)`.
    pub domain_level: usize,
    /// Word budget `r`: how many carriers a sliding block may meet.
    pub capacity: u128,
    /// Level `l > k` whose cosets separate the stage's sets.
    pub coset_level: usize,
    /// The reserved point `g*`: its level-`l` cell stays undecided.
    pub reserve: u128,
    /// Positions that carry a word bit this stage, sorted.
    pub carriers: Vec<u128>,
    /// Carriers whose bit is 1.
    pub word_one: Vec<u128>,
    /// Carriers whose bit is 0.
    pub word_zero: Vec<u128>,
    /// Free positions in `[0, M_k)`: not claimed by any stage so far.
    pub survivors: Vec<u128>,
    /// Level-`l` classes decided by this stage (the carrier classes).
    pub word_classes: Vec<u128>,
    /// `word_classes` plus the reserve class.
    pub claimed_classes: Vec<u128>,
    /// Offsets `(j - 1) * M_l` shifting the free set, one per word.
    pub translates: Vec<u128>,
    /// One fresh point per leftover class, keeping the next stage's words
    /// generic there.
    pub covers: Vec<u128>,
    /// `covers.len()`, recorded separately for quick report columns.
    pub cover_count: usize,
}

/// Deterministic record of a full run; serializable as the construction log.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyLog {
    pub gamma: RationalRepr,
    pub requested_stages: usize,
    pub scales: Vec<u64>,
    pub stages: Vec<StageLog>,
}

/// The two windows of a run plus the log that explains them.
#[derive(Debug, Clone)]
pub struct EntropyWindows {
    /// Word-carrying window: decided on every carrier class, frontier elsewhere.
    pub upper: WindowTree,
    /// Reserve-chain window: one cylinder per stage plus the final undecided cell.
    pub lower: WindowTree,
    pub log: EntropyLog,
}

/// One named exhaustive check over a stage's period.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub stage: usize,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`verify_log`]: every check, pass or fail.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&InvariantCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Run the staged builder and assemble both windows.
///
/// The scale vector doubles as the size budget: each stage picks the
/// smallest levels that satisfy its inequalities, and a budget that cannot
/// fit some stage yields [`EntropyError::SizeHint`] naming the inequality
/// that failed. `gamma` is the richness dial: at least a `gamma` fraction
/// of each stage's fundamental block stays free for word placement.
pub fn entropy_windows(
    spec: &Arc<OdometerSpec>,
    gamma: &BigRational,
    stages: usize,
) -> Result<EntropyWindows, EntropyError> {
    let log = build_log(spec, gamma, stages)?;
    let upper = upper_window(spec, &log)?;
    let lower = lower_window(spec, &log)?;
    Ok(EntropyWindows { upper, lower, log })
}

/// Run only the staged accounting, without building trees.
pub fn build_log(
    spec: &Arc<OdometerSpec>,
    gamma: &BigRational,
    stages: usize,
) -> Result<EntropyLog, EntropyError> {
    if gamma <= &BigRational::zero() || gamma >= &BigRational::one() {
        return Err(EntropyError::GammaOutOfRange);
    }
    if stages == 0 {
        return Err(EntropyError::NoStages);
    }
    let mut done: Vec<StageLog> = Vec::with_capacity(stages);
    done.push(first_stage(spec, gamma)?);
    while done.len() < stages {
        next_stage(spec, gamma, &mut done)?;
    }
    Ok(EntropyLog {
        gamma: RationalRepr::of(gamma),
        requested_stages: stages,
        scales: spec.scales().to_vec(),
        stages: done,
    })
}

/// `floor(x)` of a nonnegative rational, as u128.
fn floor_u128(x: &BigRational) -> u128 {
    debug_assert!(!x.is_negative());
    x.floor().to_integer().to_u128().unwrap_or(u128::MAX)
}

fn big(n: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn first_stage(spec: &Arc<OdometerSpec>, gamma: &BigRational) -> Result<StageLog, EntropyError> {
    let one_minus = BigRational::one() - gamma;
    let max = spec.max_depth();
    // Smallest block with room for at least 4 word positions.
    let mut picked = None;
    for k in 1..=max {
        let capacity = floor_u128(&(&one_minus * big(spec.subgroup_index(k))));
        if capacity >= 4 {
            picked = Some((k, capacity));
            break;
        }
    }
    let Some((domain_level, capacity)) = picked else {
        return Err(EntropyError::SizeHint {
            stage: 1,
            inequality: format!(
                "a level k <= {max} with floor((1 - gamma) * M_k) >= 4"
            ),
        });
    };
    let block = spec.subgroup_index(domain_level);
    check_period(1, block)?;

    // One short word at the identity: carriers 0..capacity-1, bit 1 only at 0.
    let carriers: Vec<u128> = (0..capacity - 1).collect();
    let word_one = vec![0u128];
    let word_zero: Vec<u128> = carriers.iter().copied().filter(|&g| g != 0).collect();

    let coset_level = pick_coset_level(spec, 1, domain_level, None)?;
    let period = spec.subgroup_index(coset_level);
    check_period(1, period)?;

    // Reserve: smallest point whose level-l class clears the block and the
    // carriers. The carriers sit inside the block, so the block test wins.
    let claimed: BTreeSet<u128> = carriers.iter().copied().collect();
    let reserve = (0..period)
        .find(|&x| x >= block && !claimed.contains(&x))
        .ok_or_else(|| EntropyError::SizeHint {
            stage: 1,
            inequality: format!("a free class at level {coset_level}"),
        })?;

    let word_classes = carriers.clone();
    let mut claimed_classes = word_classes.clone();
    claimed_classes.push(reserve);
    claimed_classes.sort_unstable();

    let word_class_set: BTreeSet<u128> = word_classes.iter().copied().collect();
    let survivors: Vec<u128> = (0..block).filter(|g| !word_class_set.contains(g)).collect();

    Ok(StageLog {
        stage: 1,
        domain_level,
        capacity,
        coset_level,
        reserve,
        carriers,
        word_one,
        word_zero,
        survivors,
        word_classes,
        claimed_classes,
        translates: Vec::new(),
        covers: Vec::new(),
        cover_count: 0,
    })
}

/// Extend a run by one stage, filling in the previous stage's translates
/// and covers along the way.
fn next_stage(
    spec: &Arc<OdometerSpec>,
    gamma: &BigRational,
    done: &mut Vec<StageLog>,
) -> Result<(), EntropyError> {
    let prev = done.last().expect("at least one finished stage");
    let stage = prev.stage + 1;
    let free = prev.survivors.len();
    if free == 0 {
        return Err(EntropyError::SizeHint {
            stage,
            inequality: "a non-empty free set in the previous stage".into(),
        });
    }
    if free > FREE_SET_BUDGET {
        return Err(EntropyError::TooManyWords { stage, survivors: free });
    }
    let prev_period = spec.subgroup_index(prev.coset_level);
    let words = 1usize << free;

    // One translate of the free set per word on it.
    let translates: Vec<u128> = (0..words as u128).map(|j| j * prev_period).collect();
    let mut elements: Vec<u128> = Vec::with_capacity(free * words);
    for &t in &translates {
        for &s in &prev.survivors {
            elements.push(s + t);
        }
    }

    // Classes of the older reserve ball still undecided after `prev`:
    // each needs one fresh cover point so the new words stay generic there.
    let needed = leftover_classes(spec, done, done.len());
    let mut committed_max = elements
        .iter()
        .copied()
        .chain(std::iter::once(prev.reserve))
        .max()
        .expect("free set is non-empty");
    let mut covers = Vec::with_capacity(needed.len());
    for &class in &needed {
        let base = committed_max + 1;
        let offset = (class + prev_period - base % prev_period) % prev_period;
        let cover = base + offset;
        covers.push(cover);
        committed_max = cover;
    }

    let mut carriers: Vec<u128> = Vec::with_capacity(elements.len() + covers.len() + 1);
    carriers.extend_from_slice(&elements);
    carriers.extend_from_slice(&covers);
    carriers.push(prev.reserve);
    carriers.sort_unstable();
    debug_assert!(carriers.windows(2).all(|w| w[0] < w[1]));
    let max_carrier = *carriers.last().expect("non-empty");

    // Demand: every carrier plus one reserve slot must fit the budget.
    let demand = carriers.len() as u128 + 1;
    let one_minus = BigRational::one() - gamma;
    let shrink = big(1u128 << stage.min(127));
    let max = spec.max_depth();
    let mut picked = None;
    for k in (prev.domain_level + 1)..=max {
        let block = spec.subgroup_index(k);
        if block <= max_carrier {
            continue;
        }
        let capacity = floor_u128(&(&one_minus * big(block) / &shrink));
        if capacity >= demand {
            picked = Some((k, capacity));
            break;
        }
    }
    let Some((domain_level, capacity)) = picked else {
        return Err(EntropyError::SizeHint {
            stage,
            inequality: format!(
                "a level k <= {max} with floor((1 - gamma) * M_k / 2^{stage}) >= {demand} \
                 and M_k > {max_carrier}"
            ),
        });
    };
    let block = spec.subgroup_index(domain_level);
    check_period(stage, block)?;

    let coset_level = pick_coset_level(spec, stage, domain_level, Some(prev.coset_level))?;
    let period = spec.subgroup_index(coset_level);
    check_period(stage, period)?;

    // Fresh reserve: continue the previous reserve chain into a class that
    // clears both the new block and every new carrier.
    let carrier_set: BTreeSet<u128> = carriers.iter().copied().collect();
    let mut reserve = None;
    let mut x = prev.reserve;
    while x < period {
        if x >= block && !carrier_set.contains(&x) {
            reserve = Some(x);
            break;
        }
        x += prev_period;
    }
    let Some(reserve) = reserve else {
        return Err(EntropyError::SizeHint {
            stage,
            inequality: format!(
                "a free class at level {coset_level} inside the stage-{} reserve cylinder",
                prev.stage
            ),
        });
    };

    // Word bits: the j-th translate carries the j-th binary word on the
    // free positions (most significant bit on the smallest position);
    // covers read 0; the old reserve reads 1.
    let mut word_one: Vec<u128> = Vec::new();
    let mut word_zero: Vec<u128> = covers.clone();
    for (j, &t) in translates.iter().enumerate() {
        for (i, &s) in prev.survivors.iter().enumerate() {
            let bit = (j >> (free - 1 - i)) & 1;
            if bit == 1 {
                word_one.push(s + t);
            } else {
                word_zero.push(s + t);
            }
        }
    }
    word_one.push(prev.reserve);
    word_one.sort_unstable();
    word_zero.sort_unstable();

    let word_classes = carriers.clone();
    let mut claimed_classes = word_classes.clone();
    claimed_classes.push(reserve);
    claimed_classes.sort_unstable();

    // Free set: block positions no stage has claimed.
    let mut survivors = Vec::new();
    'next: for g in 0..block {
        for s in done.iter() {
            let m = spec.subgroup_index(s.coset_level);
            if s.word_classes.binary_search(&(g % m)).is_ok() {
                continue 'next;
            }
        }
        if carrier_set.contains(&g) {
            continue;
        }
        survivors.push(g);
    }

    let fresh = StageLog {
        stage,
        domain_level,
        capacity,
        coset_level,
        reserve,
        carriers,
        word_one,
        word_zero,
        survivors,
        word_classes,
        claimed_classes,
        translates: Vec::new(),
        covers: Vec::new(),
        cover_count: 0,
    };
    let prev = done.last_mut().expect("at least one finished stage");
    prev.cover_count = covers.len();
    prev.translates = translates;
    prev.covers = covers;
    done.push(fresh);
    Ok(())
}

/// Smallest level whose cosets separate the stage's sets: it must refine the
/// block, and past the first stage each period must more than double.
fn pick_coset_level(
    spec: &Arc<OdometerSpec>,
    stage: usize,
    domain_level: usize,
    prev_coset_level: Option<usize>,
) -> Result<usize, EntropyError> {
    let block = spec.subgroup_index(domain_level);
    let floor = prev_coset_level.map(|l| 2 * spec.subgroup_index(l)).unwrap_or(0);
    for l in (domain_level + 1)..=spec.max_depth() {
        let period = spec.subgroup_index(l);
        if period > block && period > floor {
            return Ok(l);
        }
    }
    Err(EntropyError::SizeHint {
        stage,
        inequality: format!(
            "a level l <= {} with M_l > {}",
            spec.max_depth(),
            block.max(floor)
        ),
    })
}

/// Classes (at the newest finished stage's coset level) of the next-older
/// reserve ball that no stage has decided yet. These are exactly the cells
/// the next stage must cover.
fn leftover_classes(spec: &Arc<OdometerSpec>, done: &[StageLog], upto: usize) -> Vec<u128> {
    let last = &done[upto - 1];
    let period = spec.subgroup_index(last.coset_level);
    let (ball_mod, ball_class) = if upto >= 2 {
        let older = &done[upto - 2];
        let m = spec.subgroup_index(older.coset_level);
        (m, older.reserve % m)
    } else {
        (1, 0)
    };
    let mut out = Vec::new();
    'next: for c in 0..period {
        if c % ball_mod != ball_class {
            continue;
        }
        for s in &done[..upto] {
            let m = spec.subgroup_index(s.coset_level);
            if s.word_classes.binary_search(&(c % m)).is_ok() {
                continue 'next;
            }
        }
        out.push(c);
    }
    out
}

fn check_period(stage: usize, period: u128) -> Result<(), EntropyError> {
    if period > PERIOD_BUDGET {
        return Err(EntropyError::PeriodTooLarge { stage, period });
    }
    Ok(())
}

fn cell_path(spec: &Arc<OdometerSpec>, residue: u128, depth: usize) -> Vec<u64> {
    OdometerPoint::from_residue(spec, residue, depth).digits().to_vec()
}

/// Word-carrying window at the last stage's coset level: carrier cells are
/// decided by their bit, everything never claimed stays on the frontier.
pub fn upper_window(
    spec: &Arc<OdometerSpec>,
    log: &EntropyLog,
) -> Result<WindowTree, EntropyError> {
    let last = log.stages.last().ok_or(EntropyError::NoStages)?;
    let depth = last.coset_level;
    let period = spec.subgroup_index(depth);
    check_period(last.stage, period)?;

    let mut cells: Vec<(Vec<u64>, CellStatus)> = Vec::new();
    for s in &log.stages {
        for &g in &s.word_one {
            cells.push((cell_path(spec, g, s.coset_level), CellStatus::In));
        }
        for &g in &s.word_zero {
            cells.push((cell_path(spec, g, s.coset_level), CellStatus::Out));
        }
    }
    'next: for c in 0..period {
        for s in &log.stages {
            let m = spec.subgroup_index(s.coset_level);
            if s.word_classes.binary_search(&(c % m)).is_ok() {
                continue 'next;
            }
        }
        cells.push((cell_path(spec, c, depth), CellStatus::Frontier));
    }
    Ok(WindowTree::from_cells(spec, depth, &cells)?)
}

/// Reserve-chain window: one decided cylinder per stage (the previous
/// reserve, seen at the new coset level) and the final reserve cell left
/// undecided. Its closure adds a single point, the limit of the reserve
/// chain; that limit escapes every translate of the integers, recorded as
/// a non-embedded singleton boundary.
pub fn lower_window(
    spec: &Arc<OdometerSpec>,
    log: &EntropyLog,
) -> Result<WindowTree, EntropyError> {
    let last = log.stages.last().ok_or(EntropyError::NoStages)?;
    let depth = last.coset_level;

    let mut cells: Vec<(Vec<u64>, CellStatus)> = Vec::new();
    let mut prev_reserve = 0u128;
    for s in &log.stages {
        let m = spec.subgroup_index(s.coset_level);
        cells.push((cell_path(spec, prev_reserve % m, s.coset_level), CellStatus::In));
        prev_reserve = s.reserve;
    }
    let frontier = cell_path(spec, last.reserve, depth);
    cells.push((frontier.clone(), CellStatus::Frontier));

    let tree = WindowTree::from_cells(spec, depth, &cells)?;
    Ok(tree.with_boundary(BoundaryInfo::SingletonChain {
        digits: frontier,
        embedded: EmbeddedStatus::NotEmbedded,
    })?)
}

/// Re-check a finished log exhaustively over one period per stage.
///
/// The checks, by name:
/// * `window-count`: every block-sized sliding window meets at most
///   `capacity` claimed classes (and never fewer word classes than claimed).
/// * `survivor-fraction`: at least a `gamma` fraction of each block is free.
/// * `ball-difference`: what is left of the older reserve ball equals that
///   ball minus the previous reserve class and the new non-reserve carriers.
/// * `domain-coverage`: every point of the previous block is decided by now.
/// * `fresh-ball-disjoint`: the reserve class clears every stage's words.
/// * `translate-avoidance`: free positions clear all earlier words and the
///   current claimed classes.
/// * `frontier-cover`: the recorded covers hit each leftover class exactly once.
/// * `carrier-budget`: carriers plus the reserve fit the stage capacity.
pub fn verify_log(log: &EntropyLog) -> Result<InvariantReport, EntropyError> {
    let spec = OdometerSpec::new(log.scales.clone()).map_err(WindowError::from)?;
    let gamma = BigRational::new(
        log.gamma.num.parse::<BigInt>().map_err(|_| EntropyError::GammaOutOfRange)?,
        log.gamma.den.parse::<BigInt>().map_err(|_| EntropyError::GammaOutOfRange)?,
    );
    let stages = &log.stages;
    let mut checks = Vec::new();

    for (idx, s) in stages.iter().enumerate() {
        let period = spec.subgroup_index(s.coset_level);
        check_period(s.stage, period)?;
        let block = spec.subgroup_index(s.domain_level);
        let words: BTreeSet<u128> = s.word_classes.iter().copied().collect();
        let claimed: BTreeSet<u128> = s.claimed_classes.iter().copied().collect();

        // window-count: cyclic sliding block over the claimed classes.
        let mut max_words = 0u128;
        let mut max_claimed = 0u128;
        let mut ordered = true;
        {
            let p = period as usize;
            let w = block as usize;
            let mut ind_w = vec![0u32; p];
            let mut ind_c = vec![0u32; p];
            for &t in &words {
                ind_w[t as usize] += 1;
            }
            for &t in &claimed {
                ind_c[t as usize] += 1;
            }
            let mut pre_w = vec![0u64; 2 * p + 1];
            let mut pre_c = vec![0u64; 2 * p + 1];
            for i in 0..2 * p {
                pre_w[i + 1] = pre_w[i] + u64::from(ind_w[i % p]);
                pre_c[i + 1] = pre_c[i] + u64::from(ind_c[i % p]);
            }
            for h in 0..p {
                let cw = pre_w[h + w] - pre_w[h];
                let cc = pre_c[h + w] - pre_c[h];
                if cw > cc {
                    ordered = false;
                }
                max_words = max_words.max(u128::from(cw));
                max_claimed = max_claimed.max(u128::from(cc));
            }
        }
        checks.push(InvariantCheck {
            name: "window-count".into(),
            stage: s.stage,
            passed: ordered && max_claimed <= s.capacity,
            detail: format!(
                "max sliding-block load {max_claimed} (words {max_words}) <= capacity {}",
                s.capacity
            ),
        });

        // survivor-fraction: the free set keeps a gamma share of the block.
        let enough = big(s.survivors.len() as u128) >= &gamma * big(block);
        checks.push(InvariantCheck {
            name: "survivor-fraction".into(),
            stage: s.stage,
            passed: enough,
            detail: format!("{} free of {} (need fraction {})", s.survivors.len(), block, gamma),
        });

        // ball-difference: two descriptions of the leftover classes agree.
        let (ball_mod, ball_class, prev_reserve) = if idx >= 1 {
            let older = &stages[idx - 1];
            let m = spec.subgroup_index(older.coset_level);
            (m, older.reserve % m, older.reserve)
        } else {
            (1, 0, 0)
        };
        let mut lhs = BTreeSet::new();
        'lhs: for c in 0..period {
            if c % ball_mod != ball_class {
                continue;
            }
            for l in &stages[..=idx] {
                let m = spec.subgroup_index(l.coset_level);
                if l.word_classes.binary_search(&(c % m)).is_ok() {
                    continue 'lhs;
                }
            }
            lhs.insert(c);
        }
        // The right-hand description removes only the previous reserve class
        // and this stage's own carriers: the identity says no older stage
        // intrudes on the ball beyond those.
        let mut removed: BTreeSet<u128> = BTreeSet::new();
        removed.insert(prev_reserve % period);
        for &g in &s.carriers {
            removed.insert(g % period);
        }
        let mut rhs = BTreeSet::new();
        for c in 0..period {
            if c % ball_mod == ball_class && !removed.contains(&c) {
                rhs.insert(c);
            }
        }
        checks.push(InvariantCheck {
            name: "ball-difference".into(),
            stage: s.stage,
            passed: lhs == rhs,
            detail: format!("{} leftover classes, both descriptions", lhs.len()),
        });

        // domain-coverage: the previous block is fully decided.
        let prev_block = if idx >= 1 { spec.subgroup_index(stages[idx - 1].domain_level) } else { 1 };
        let mut uncovered = 0u128;
        'cov: for f in 0..prev_block {
            for l in &stages[..=idx] {
                let m = spec.subgroup_index(l.coset_level);
                if l.word_classes.binary_search(&(f % m)).is_ok() {
                    continue 'cov;
                }
            }
            uncovered += 1;
        }
        checks.push(InvariantCheck {
            name: "domain-coverage".into(),
            stage: s.stage,
            passed: uncovered == 0,
            detail: format!("{uncovered} of {prev_block} previous-block points undecided"),
        });

        // fresh-ball-disjoint: the reserve class clears every stage's words.
        let mut clear = true;
        for l in &stages[..=idx] {
            let m = spec.subgroup_index(l.coset_level);
            if l.word_classes.binary_search(&(s.reserve % m)).is_ok() {
                clear = false;
            }
        }
        checks.push(InvariantCheck {
            name: "fresh-ball-disjoint".into(),
            stage: s.stage,
            passed: clear,
            detail: format!("reserve {} meets no word class", s.reserve),
        });

        // translate-avoidance: free positions clear earlier words and the
        // current claimed classes.
        let mut avoid = true;
        for &f in &s.survivors {
            for l in &stages[..idx] {
                let m = spec.subgroup_index(l.coset_level);
                if l.word_classes.binary_search(&(f % m)).is_ok() {
                    avoid = false;
                }
            }
            if claimed.contains(&(f % period)) {
                avoid = false;
            }
        }
        checks.push(InvariantCheck {
            name: "translate-avoidance".into(),
            stage: s.stage,
            passed: avoid,
            detail: format!("{} free positions checked", s.survivors.len()),
        });

        // frontier-cover: recorded covers hit each leftover class exactly
        // once. The leftover set is the same one ball-difference computed.
        if !s.covers.is_empty() || idx + 1 < stages.len() {
            let got: BTreeSet<u128> = s.covers.iter().map(|&g| g % period).collect();
            let passed = got == lhs && got.len() == s.covers.len();
            checks.push(InvariantCheck {
                name: "frontier-cover".into(),
                stage: s.stage,
                passed,
                detail: format!("{} covers onto {} leftover classes", s.covers.len(), lhs.len()),
            });
        }

        // carrier-budget: carriers plus reserve fit the capacity.
        let load = s.carriers.len() as u128 + 1;
        checks.push(InvariantCheck {
            name: "carrier-budget".into(),
            stage: s.stage,
            passed: load <= s.capacity,
            detail: format!("{load} committed positions <= capacity {}", s.capacity),
        });
    }

    Ok(InvariantReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{rat, rat_u};
    use crate::metrics::patterns_on_set;
    use crate::model_set::generate_array;
    use crate::model_set::Symbol;

    fn staged_spec() -> Arc<OdometerSpec> {
        OdometerSpec::new(vec![8, 2, 2, 2, 2, 2, 2, 2, 2, 2]).unwrap()
    }

    fn half() -> BigRational {
        rat(1, 2)
    }

    #[test]
    fn rejects_bad_dials_and_stage_counts() {
        let spec = staged_spec();
        assert!(matches!(
            build_log(&spec, &rat(0, 1), 1),
            Err(EntropyError::GammaOutOfRange)
        ));
        assert!(matches!(
            build_log(&spec, &rat(1, 1), 1),
            Err(EntropyError::GammaOutOfRange)
        ));
        assert!(matches!(
            build_log(&spec, &rat(3, 2), 1),
            Err(EntropyError::GammaOutOfRange)
        ));
        assert!(matches!(build_log(&spec, &half(), 0), Err(EntropyError::NoStages)));
    }

    #[test]
    fn first_stage_commits_the_expected_constants() {
        let log = build_log(&staged_spec(), &half(), 1).unwrap();
        assert_eq!(log.stages.len(), 1);
        let s = &log.stages[0];
        assert_eq!(s.domain_level, 1);
        assert_eq!(s.capacity, 4);
        assert_eq!(s.coset_level, 2);
        assert_eq!(s.reserve, 8);
        assert_eq!(s.carriers, vec![0, 1, 2]);
        assert_eq!(s.word_one, vec![0]);
        assert_eq!(s.word_zero, vec![1, 2]);
        assert_eq!(s.survivors, vec![3, 4, 5, 6, 7]);
        assert_eq!(s.word_classes, vec![0, 1, 2]);
        assert_eq!(s.claimed_classes, vec![0, 1, 2, 8]);
        assert!(s.translates.is_empty());
        assert!(s.covers.is_empty());
        assert_eq!(s.cover_count, 0);
    }

    #[test]
    fn second_stage_commits_the_expected_constants() {
        let log = build_log(&staged_spec(), &half(), 2).unwrap();
        assert_eq!(log.stages.len(), 2);

        let first = &log.stages[0];
        let expected_translates: Vec<u128> = (0..32).map(|j| 16 * j).collect();
        assert_eq!(first.translates, expected_translates);
        assert_eq!(first.covers, (515..=527).collect::<Vec<u128>>());
        assert_eq!(first.cover_count, 13);

        let s = &log.stages[1];
        assert_eq!(s.domain_level, 9);
        assert_eq!(s.capacity, 256);
        assert_eq!(s.coset_level, 10);
        assert_eq!(s.reserve, 2056);
        assert_eq!(s.carriers.len(), 174);
        assert_eq!(*s.carriers.last().unwrap(), 527);
        assert!(s.carriers.contains(&8));
        assert_eq!(s.word_one.len(), 81);
        assert_eq!(s.word_zero.len(), 93);
        assert!(s.word_one.contains(&8));
        assert!(s.word_zero.contains(&515));
        assert_eq!(s.survivors.len(), 1490);
        assert_eq!(s.claimed_classes.len(), 175);
        assert!(s.claimed_classes.contains(&2056));
        assert!(s.translates.is_empty());
        assert!(s.covers.is_empty());
    }

    #[test]
    fn translate_words_enumerate_every_bit_pattern() {
        let log = build_log(&staged_spec(), &half(), 2).unwrap();
        let first = &log.stages[0];
        let second = &log.stages[1];
        let ones: BTreeSet<u128> = second.word_one.iter().copied().collect();
        let mut seen = BTreeSet::new();
        for &t in &first.translates {
            let word: Vec<bool> =
                first.survivors.iter().map(|&s| ones.contains(&(s + t))).collect();
            seen.insert(word);
        }
        assert_eq!(seen.len(), 32);
    }

    #[test]
    fn invariant_report_is_all_green() {
        let log = build_log(&staged_spec(), &half(), 2).unwrap();
        let report = verify_log(&log).unwrap();
        assert!(report.all_passed(), "failures: {:?}", report.failures());
        let names: BTreeSet<&str> =
            report.checks.iter().map(|c| c.name.as_str()).collect();
        for name in [
            "window-count",
            "survivor-fraction",
            "ball-difference",
            "domain-coverage",
            "fresh-ball-disjoint",
            "translate-avoidance",
            "frontier-cover",
            "carrier-budget",
        ] {
            assert!(names.contains(name), "missing check {name}");
        }
        // The exhaustive sliding-block maxima for this run.
        let loads: Vec<&InvariantCheck> =
            report.checks.iter().filter(|c| c.name == "window-count").collect();
        assert!(loads[0].detail.contains("load 3"), "got {}", loads[0].detail);
        assert!(loads[1].detail.contains("load 174"), "got {}", loads[1].detail);
    }

    #[test]
    fn upper_window_masses_match_the_carrier_count() {
        let spec = staged_spec();
        let built = entropy_windows(&spec, &half(), 2).unwrap();
        let w = &built.upper;
        assert_eq!(w.depth(), 10);
        let m = w.measure();
        assert_eq!(m.lo, rat_u(337, 4096));
        assert_eq!(m.hi, rat_u(3491, 4096));
        assert_eq!(w.frontier_mass(), rat_u(3154, 4096));
        assert_eq!(w.boundary(), &BoundaryInfo::Unknown);
    }

    #[test]
    fn lower_window_is_the_reserve_chain() {
        let spec = staged_spec();
        let built = entropy_windows(&spec, &half(), 2).unwrap();
        let w = &built.lower;
        let m = w.measure();
        assert_eq!(m.lo, rat_u(257, 4096));
        assert_eq!(m.hi, rat_u(258, 4096));
        match w.boundary() {
            BoundaryInfo::SingletonChain { digits, embedded } => {
                assert_eq!(digits, &vec![0, 1, 0, 0, 0, 0, 0, 0, 0, 1]);
                assert_eq!(embedded, &EmbeddedStatus::NotEmbedded);
            }
            other => panic!("expected a singleton chain boundary, got {other:?}"),
        }
        assert!(built.lower.cellwise_subset(&built.upper).unwrap());
    }

    #[test]
    fn generated_array_reads_the_words() {
        let spec = staged_spec();
        let built = entropy_windows(&spec, &half(), 2).unwrap();
        let array = generate_array(&built.upper, 0, 600).unwrap();
        assert_eq!(array.get(0), Some(Symbol::One));
        assert_eq!(array.get(1), Some(Symbol::Zero));
        assert_eq!(array.get(8), Some(Symbol::One));
        assert_eq!(array.get(515), Some(Symbol::Zero));
        assert_eq!(array.get(3), Some(Symbol::Zero));

        let first = &built.log.stages[0];
        let positions: Vec<i128> = first.survivors.iter().map(|&s| s as i128).collect();
        let offsets: Vec<i128> = first.translates.iter().map(|&t| t as i128).collect();
        let patterns = patterns_on_set(&array, &positions, &offsets).unwrap();
        assert_eq!(patterns.len(), 32);
    }

    #[test]
    fn reserve_chain_stays_undecided() {
        let spec = staged_spec();
        let built = entropy_windows(&spec, &half(), 2).unwrap();
        let array = generate_array(&built.upper, 0, 4096).unwrap();
        assert_eq!(array.get(2056), Some(Symbol::Undecided));
        let undecided = array.count_undecided();
        assert_eq!(undecided, 3154);
    }

    #[test]
    fn third_stage_is_refused_for_word_blowup() {
        let spec = staged_spec();
        match build_log(&spec, &half(), 3) {
            Err(EntropyError::TooManyWords { stage, survivors }) => {
                assert_eq!(stage, 3);
                assert_eq!(survivors, 1490);
            }
            other => panic!("expected a word-blowup refusal, got {other:?}"),
        }
    }

    #[test]
    fn scale_budget_failures_name_the_inequality() {
        // Too small for even the first stage's four word positions.
        let tiny = OdometerSpec::new(vec![2, 2]).unwrap();
        match build_log(&tiny, &half(), 1) {
            Err(EntropyError::SizeHint { stage: 1, inequality }) => {
                assert!(inequality.contains(">= 4"), "got {inequality}");
            }
            other => panic!("expected a first-stage budget failure, got {other:?}"),
        }
        // First stage fits, second cannot.
        let shallow = OdometerSpec::new(vec![8, 2]).unwrap();
        match build_log(&shallow, &half(), 2) {
            Err(EntropyError::SizeHint { stage: 2, inequality }) => {
                assert!(inequality.contains("M_k"), "got {inequality}");
            }
            other => panic!("expected a second-stage budget failure, got {other:?}"),
        }
    }

    #[test]
    fn single_stage_windows_are_the_small_picture() {
        let spec = staged_spec();
        let built = entropy_windows(&spec, &half(), 1).unwrap();
        assert_eq!(built.upper.depth(), 2);
        let m = built.upper.measure();
        assert_eq!(m.lo, rat_u(1, 16));
        assert_eq!(m.hi, rat_u(14, 16));
        let lower = built.lower.measure();
        assert_eq!(lower.lo, rat_u(1, 16));
        assert_eq!(lower.hi, rat_u(2, 16));
    }

    #[test]
    fn log_serializes_deterministically() {
        let log = build_log(&staged_spec(), &half(), 2).unwrap();
        let a = serde_json::to_string(&log).unwrap();
        let b = serde_json::to_string(&build_log(&staged_spec(), &half(), 2).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"covers\":[515,"));
    }
}
