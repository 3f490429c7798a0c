//! Cylinder-tree windows: exact, finite descriptions of compact subsets.
//!
//! A window is stored as a tree subdividing the odometer into cylinder
//! cells. Every leaf carries one of three marks: the cell lies entirely
//! inside the window, entirely outside, or on the frontier (the tree does
//! not decide it). All measure questions are answered exactly as rational
//! intervals `[decided-in mass, decided-in + frontier mass]`, so a result
//! is never an approximation whose error is unknown: the interval width is
//! the frontier mass and shrinks as the tree is refined.
//!
//! The three-valued cell algebra is conservative: combining a frontier
//! cell with anything that cannot force a decision yields a frontier cell.
//! Decisions that are forced regardless of how the frontier resolves (for
//! instance union with a fully-inside cell) are taken.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{rat_u, MeasureInterval};
use crate::odometer::{OdometerError, OdometerPoint, OdometerSpec};

#[derive(Debug, Error)]
pub enum WindowError {
    #[error(transparent)]
    Odometer(#[from] OdometerError),
    #[error("tree depth {requested} invalid for spec with max depth {available}")]
    BadDepth { requested: usize, available: usize },
    #[error("cell path of length {0} exceeds tree depth {1}")]
    PathTooDeep(usize, usize),
    #[error("digit {digit} at level {level} exceeds scale {scale}")]
    PathDigit { digit: u64, level: usize, scale: u64 },
    #[error("cell path {0:?} overlaps a previously assigned cell")]
    OverlappingCells(Vec<u64>),
    #[error("windows live over different scale sequences or depths")]
    Incompatible,
    #[error("inner window must sit inside the outer window cellwise")]
    NotNested,
    #[error("point depth {0} is below tree depth {1}")]
    PointTooShallow(usize, usize),
    #[error("boundary chain digits must name a frontier cell")]
    BoundaryNotOnFrontier,
    #[error("window file: {0}")]
    Format(String),
    #[error("subgroup index {0} too large for an exhaustive residue scan")]
    ScanTooLarge(u128),
}

/// Mark carried by a leaf cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    /// The cell lies entirely inside the window.
    In,
    /// The cell lies entirely outside the window.
    Out,
    /// The tree does not decide this cell; it may meet the window's edge.
    Frontier,
}

/// One node of the subdivision tree. A `Mixed` node at level `l` has
/// exactly `m_(l+1)` children, one per digit value at the next level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(CellStatus),
    Mixed(Vec<Node>),
}

/// What is known about the edge of the limit set the tree approximates.
///
/// Frontier cells bound *where* the edge can live; this record carries the
/// sharper facts some constructions can certify, such as the edge being a
/// single point with known digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryInfo {
    /// The limit set is clopen: its edge is empty.
    Empty,
    /// The edge is exactly one point, whose digits at tree depth are given.
    SingletonChain { digits: Vec<u64>, embedded: EmbeddedStatus },
    /// Nothing certified.
    Unknown,
}

/// Whether a certified single edge point is the image of an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddedStatus {
    /// The point is the embedded integer `g`.
    At(i128),
    /// The point is certified not to be any embedded integer.
    NotEmbedded,
    /// Not known either way.
    Unknown,
}

/// Outcome of the translate-orbit freeness probe over a range of integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenericOutcome {
    /// No probed integer can lie on the window's edge.
    Certified,
    /// The probed integer `g` is certified to lie on the edge.
    FailsAt(i128),
    /// Some probed integer lands in an undecided cell with no sharper
    /// boundary fact available.
    Inconclusive { first_undecided: i128 },
}

/// Outcome of the pairwise-translate separation probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrredundantOutcome {
    /// Every nonzero residue class moves the window by positive mass.
    Certified,
    /// Residue `witness` may or may not move the window; the tree is too
    /// coarse to tell. Never a certified "no".
    Inconclusive { witness: u64 },
}

/// Bundle of structural facts about one window.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    /// The decided-in part is clopen and nonempty (or the window is fully
    /// empty), which certifies the window equals the closure of its
    /// interior at tree resolution.
    pub proper: bool,
    pub generic: GenericOutcome,
    /// Upper bound on edge mass: the total frontier mass. Zero certifies a
    /// clopen (hence Haar-regular) window.
    pub regular_certificate: BigRational,
    pub irredundant: IrredundantOutcome,
}

/// Probe configuration for [`WindowTree::check_properties`].
#[derive(Debug, Clone)]
pub struct ProbeOptions {
    /// Integers `g` in `lo..hi` tested against the edge.
    pub generic_range: (i128, i128),
    /// Fan the separation probe out across threads.
    pub parallel: bool,
}

/// A compact subset of an odometer, described exactly to a finite depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowTree {
    spec: Arc<OdometerSpec>,
    depth: usize,
    root: Node,
    boundary: BoundaryInfo,
}

fn validate_path(spec: &OdometerSpec, depth: usize, path: &[u64]) -> Result<(), WindowError> {
    if path.len() > depth {
        return Err(WindowError::PathTooDeep(path.len(), depth));
    }
    for (i, &d) in path.iter().enumerate() {
        let m = spec.scale(i + 1);
        if d >= m {
            return Err(WindowError::PathDigit { digit: d, level: i + 1, scale: m });
        }
    }
    Ok(())
}

fn contains_non_out(node: &Node) -> bool {
    match node {
        Node::Leaf(CellStatus::Out) => false,
        Node::Leaf(_) => true,
        Node::Mixed(children) => children.iter().any(contains_non_out),
    }
}

/// Assign `status` to the cell at `path`, splitting leaves as needed.
/// Fails if the region already holds anything other than uniform `Out`.
fn set_cell(
    spec: &OdometerSpec,
    node: &mut Node,
    level: usize,
    path: &[u64],
    status: CellStatus,
) -> Result<(), WindowError> {
    if path.is_empty() {
        if contains_non_out(node) {
            return Err(WindowError::OverlappingCells(vec![]));
        }
        *node = Node::Leaf(status);
        return Ok(());
    }
    match node {
        Node::Leaf(CellStatus::Out) => {
            let m = spec.scale(level + 1) as usize;
            *node = Node::Mixed(vec![Node::Leaf(CellStatus::Out); m]);
            set_cell(spec, node, level, path, status)
        }
        Node::Leaf(_) => Err(WindowError::OverlappingCells(path.to_vec())),
        Node::Mixed(children) => {
            let child = &mut children[path[0] as usize];
            set_cell(spec, child, level + 1, &path[1..], status)
        }
    }
}

fn normalize(node: &mut Node) {
    if let Node::Mixed(children) = node {
        for child in children.iter_mut() {
            normalize(child);
        }
        if let Node::Leaf(first) = children[0] {
            if children.iter().all(|c| matches!(c, Node::Leaf(s) if *s == first)) {
                *node = Node::Leaf(first);
            }
        }
    }
}

fn uniform_status(node: &Node) -> Option<CellStatus> {
    match node {
        Node::Leaf(s) => Some(*s),
        Node::Mixed(children) => {
            let first = uniform_status(&children[0])?;
            for c in &children[1..] {
                if uniform_status(c)? != first {
                    return None;
                }
            }
            Some(first)
        }
    }
}

impl WindowTree {
    /// The whole group, fully inside.
    pub fn full(spec: &Arc<OdometerSpec>, depth: usize) -> Result<Self, WindowError> {
        Self::check_depth(spec, depth)?;
        Ok(WindowTree {
            spec: Arc::clone(spec),
            depth,
            root: Node::Leaf(CellStatus::In),
            boundary: BoundaryInfo::Empty,
        })
    }

    /// The empty window.
    pub fn empty(spec: &Arc<OdometerSpec>, depth: usize) -> Result<Self, WindowError> {
        Self::check_depth(spec, depth)?;
        Ok(WindowTree {
            spec: Arc::clone(spec),
            depth,
            root: Node::Leaf(CellStatus::Out),
            boundary: BoundaryInfo::Empty,
        })
    }

    fn check_depth(spec: &OdometerSpec, depth: usize) -> Result<(), WindowError> {
        if depth == 0 || depth > spec.max_depth() {
            return Err(WindowError::BadDepth { requested: depth, available: spec.max_depth() });
        }
        Ok(())
    }

    /// Build from explicit cell assignments; unassigned space is `Out`.
    /// Overlapping assignments are rejected.
    pub fn from_cells(
        spec: &Arc<OdometerSpec>,
        depth: usize,
        cells: &[(Vec<u64>, CellStatus)],
    ) -> Result<Self, WindowError> {
        Self::check_depth(spec, depth)?;
        let mut root = Node::Leaf(CellStatus::Out);
        for (path, status) in cells {
            validate_path(spec, depth, path)?;
            set_cell(spec, &mut root, 0, path, *status)
                .map_err(|_| WindowError::OverlappingCells(path.clone()))?;
        }
        normalize(&mut root);
        let boundary =
            if contains_frontier(&root) { BoundaryInfo::Unknown } else { BoundaryInfo::Empty };
        Ok(WindowTree { spec: Arc::clone(spec), depth, root, boundary })
    }

    /// Build a clopen window: the named cells are inside, the rest outside.
    pub fn from_cylinders(
        spec: &Arc<OdometerSpec>,
        depth: usize,
        cells: &[Vec<u64>],
    ) -> Result<Self, WindowError> {
        let assignments: Vec<(Vec<u64>, CellStatus)> =
            cells.iter().map(|p| (p.clone(), CellStatus::In)).collect();
        Self::from_cells(spec, depth, &assignments)
    }

    /// Attach a sharper boundary fact. A singleton chain must point at a
    /// frontier cell; everything else about the claim is the caller's to
    /// certify.
    pub fn with_boundary(mut self, info: BoundaryInfo) -> Result<Self, WindowError> {
        if let BoundaryInfo::SingletonChain { digits, .. } = &info {
            if digits.len() != self.depth {
                return Err(WindowError::BoundaryNotOnFrontier);
            }
            let point = OdometerPoint::from_digits(&self.spec, digits.clone())?;
            if self.status_of(&point)? != CellStatus::Frontier {
                return Err(WindowError::BoundaryNotOnFrontier);
            }
        }
        self.boundary = info;
        Ok(self)
    }

    /// Copy of the tree with boundary metadata reset to what the tree
    /// itself supports: unknown while any cell is undecided, empty once
    /// every cell is decided.
    pub fn clone_without_boundary(&self) -> Self {
        let boundary = if contains_frontier(&self.root) {
            BoundaryInfo::Unknown
        } else {
            BoundaryInfo::Empty
        };
        WindowTree {
            spec: Arc::clone(&self.spec),
            depth: self.depth,
            root: self.root.clone(),
            boundary,
        }
    }

    pub fn spec(&self) -> &Arc<OdometerSpec> {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn boundary(&self) -> &BoundaryInfo {
        &self.boundary
    }

    /// All leaf cells as `(digit path, status)` pairs, depth-first.
    pub fn leaves(&self) -> Vec<(Vec<u64>, CellStatus)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        collect_leaves(&self.root, &mut path, &mut out);
        out
    }

    /// Uniform status of the whole cell named by `path`, or `None` when
    /// the window is not constant there.
    pub fn uniform_status_at(&self, path: &[u64]) -> Result<Option<CellStatus>, WindowError> {
        validate_path(&self.spec, self.depth, path)?;
        let mut node = &self.root;
        for &digit in path {
            match node {
                Node::Leaf(s) => return Ok(Some(*s)),
                Node::Mixed(children) => node = &children[digit as usize],
            }
        }
        Ok(uniform_status(node))
    }

    /// Status of the leaf cell containing `point`.
    pub fn status_of(&self, point: &OdometerPoint) -> Result<CellStatus, WindowError> {
        if point.spec().scales() != self.spec.scales() {
            return Err(WindowError::Incompatible);
        }
        let mut node = &self.root;
        let mut level = 0;
        loop {
            match node {
                Node::Leaf(s) => return Ok(*s),
                Node::Mixed(children) => {
                    if level >= point.depth() {
                        return Err(WindowError::PointTooShallow(point.depth(), self.depth));
                    }
                    node = &children[point.digits()[level] as usize];
                    level += 1;
                }
            }
        }
    }

    /// Status of the embedded integer `g`.
    pub fn status_of_int(&self, g: i128) -> Result<CellStatus, WindowError> {
        let point = OdometerPoint::embed(&self.spec, g, self.depth)?;
        self.status_of(&point)
    }

    fn unit_masses(&self) -> (u128, u128, u128) {
        let total = self.spec.subgroup_index(self.depth);
        let mut acc = (0u128, 0u128, 0u128);
        mass_walk(&self.root, total, &mut acc);
        acc
    }

    /// Exact Haar measure as an interval: decided-in mass up to decided-in
    /// plus frontier mass.
    pub fn measure(&self) -> MeasureInterval {
        let (inside, frontier, _) = self.unit_masses();
        let total = self.spec.subgroup_index(self.depth);
        MeasureInterval::new(rat_u(inside, total), rat_u(inside + frontier, total))
    }

    /// Total mass of frontier cells: an upper bound on edge mass.
    pub fn frontier_mass(&self) -> BigRational {
        let (_, frontier, _) = self.unit_masses();
        rat_u(frontier, self.spec.subgroup_index(self.depth))
    }

    /// Fraction of level-`n` cells on which the window is constant
    /// (uniformly in or uniformly out).
    pub fn decided_fraction_at_level(&self, n: usize) -> Result<BigRational, WindowError> {
        if n == 0 || n > self.depth {
            return Err(WindowError::BadDepth { requested: n, available: self.depth });
        }
        let decided = decided_cells_walk(&self.root, 0, n, &self.spec);
        Ok(rat_u(decided, self.spec.subgroup_index(n)))
    }

    fn check_compatible(&self, other: &Self) -> Result<(), WindowError> {
        if self.spec.scales() != other.spec.scales() || self.depth != other.depth {
            return Err(WindowError::Incompatible);
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: fn(CellStatus, CellStatus) -> CellStatus) -> Self {
        let mut root = zip_nodes(&self.root, &other.root, f);
        normalize(&mut root);
        let boundary =
            if contains_frontier(&root) { BoundaryInfo::Unknown } else { BoundaryInfo::Empty };
        WindowTree { spec: Arc::clone(&self.spec), depth: self.depth, root, boundary }
    }

    /// Combine three aligned windows cellwise. Used by combinators whose
    /// result on a cell depends jointly on all three statuses and which
    /// would lose precision if expressed through pairwise set algebra.
    pub(crate) fn zip3_with(
        &self,
        second: &Self,
        third: &Self,
        f: fn(CellStatus, CellStatus, CellStatus) -> CellStatus,
    ) -> Result<Self, WindowError> {
        self.check_compatible(second)?;
        self.check_compatible(third)?;
        let mut root = zip3_nodes(&self.root, &second.root, &third.root, f);
        normalize(&mut root);
        let boundary =
            if contains_frontier(&root) { BoundaryInfo::Unknown } else { BoundaryInfo::Empty };
        Ok(WindowTree { spec: Arc::clone(&self.spec), depth: self.depth, root, boundary })
    }

    /// Union. A cell is in when either side certifies in; out only when
    /// both certify out.
    pub fn union(&self, other: &Self) -> Result<Self, WindowError> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| match (a, b) {
            (CellStatus::In, _) | (_, CellStatus::In) => CellStatus::In,
            (CellStatus::Out, CellStatus::Out) => CellStatus::Out,
            _ => CellStatus::Frontier,
        }))
    }

    /// Intersection. Dual to union.
    pub fn intersect(&self, other: &Self) -> Result<Self, WindowError> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| match (a, b) {
            (CellStatus::Out, _) | (_, CellStatus::Out) => CellStatus::Out,
            (CellStatus::In, CellStatus::In) => CellStatus::In,
            _ => CellStatus::Frontier,
        }))
    }

    /// Symmetric difference. Frontier on either side stays frontier: the
    /// tree cannot decide whether the two sides differ there.
    pub fn symm_diff(&self, other: &Self) -> Result<Self, WindowError> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| match (a, b) {
            (CellStatus::Frontier, _) | (_, CellStatus::Frontier) => CellStatus::Frontier,
            (x, y) if x == y => CellStatus::Out,
            _ => CellStatus::In,
        }))
    }

    /// Complement. Swaps in and out; the edge, and hence the frontier and
    /// any singleton-chain fact, is shared with the original.
    pub fn complement(&self) -> Self {
        let mut root = map_nodes(&self.root, |s| match s {
            CellStatus::In => CellStatus::Out,
            CellStatus::Out => CellStatus::In,
            CellStatus::Frontier => CellStatus::Frontier,
        });
        normalize(&mut root);
        WindowTree {
            spec: Arc::clone(&self.spec),
            depth: self.depth,
            root,
            boundary: self.boundary.clone(),
        }
    }

    /// True when every cell certifies containment of `self` in `other`:
    /// in-cells of `self` are in-cells of `other`, and frontier cells of
    /// `self` avoid out-cells of `other`.
    pub fn cellwise_subset(&self, other: &Self) -> Result<bool, WindowError> {
        self.check_compatible(other)?;
        Ok(subset_nodes(&self.root, &other.root))
    }

    fn translate_core(&self, shift: &OdometerPoint) -> Result<(Node, Vec<u64>), WindowError> {
        if shift.spec().scales() != self.spec.scales() {
            return Err(WindowError::Incompatible);
        }
        if shift.depth() < self.depth {
            return Err(WindowError::PointTooShallow(shift.depth(), self.depth));
        }
        let shift = shift.truncate(self.depth);
        let mut root = Node::Leaf(CellStatus::Out);
        for (path, status) in self.leaves() {
            if status == CellStatus::Out {
                continue;
            }
            let moved = shift_path(&self.spec, &path, &shift);
            set_cell(&self.spec, &mut root, 0, &moved, status)
                .expect("translation maps cells bijectively at every level");
        }
        normalize(&mut root);
        let chain_digits = match &self.boundary {
            BoundaryInfo::SingletonChain { digits, .. } => {
                let p = OdometerPoint::from_digits(&self.spec, digits.clone())?;
                p.add(&shift)?.digits().to_vec()
            }
            _ => vec![],
        };
        Ok((root, chain_digits))
    }

    fn translated_boundary(&self, digits: Vec<u64>, map: impl Fn(EmbeddedStatus) -> EmbeddedStatus) -> BoundaryInfo {
        match &self.boundary {
            BoundaryInfo::Empty => BoundaryInfo::Empty,
            BoundaryInfo::Unknown => BoundaryInfo::Unknown,
            BoundaryInfo::SingletonChain { embedded, .. } => {
                BoundaryInfo::SingletonChain { digits, embedded: map(*embedded) }
            }
        }
    }

    /// Translate by a point of unknown provenance. Any knowledge of the
    /// edge point being an embedded integer is discarded.
    pub fn translate(&self, shift: &OdometerPoint) -> Result<Self, WindowError> {
        let (root, digits) = self.translate_core(shift)?;
        let boundary = self.translated_boundary(digits, |_| EmbeddedStatus::Unknown);
        Ok(WindowTree { spec: Arc::clone(&self.spec), depth: self.depth, root, boundary })
    }

    /// Translate by the embedded integer `g`. An edge point known to be
    /// the integer `h` moves to `h + g`; one known to be non-embedded
    /// stays non-embedded.
    pub fn translate_by_int(&self, g: i128) -> Result<Self, WindowError> {
        let shift = OdometerPoint::embed(&self.spec, g, self.depth)?;
        let (root, digits) = self.translate_core(&shift)?;
        let boundary = self.translated_boundary(digits, |e| match e {
            EmbeddedStatus::At(h) => EmbeddedStatus::At(h + g),
            EmbeddedStatus::NotEmbedded => EmbeddedStatus::NotEmbedded,
            EmbeddedStatus::Unknown => EmbeddedStatus::Unknown,
        });
        Ok(WindowTree { spec: Arc::clone(&self.spec), depth: self.depth, root, boundary })
    }

    /// Translate by a point the caller certifies is *not* an embedded
    /// integer (a fact no finite digit prefix can witness). An edge point
    /// that was an embedded integer becomes certified non-embedded; one
    /// that was non-embedded could land anywhere, so it degrades to
    /// unknown.
    pub fn shifted_by_nonembedded(&self, shift: &OdometerPoint) -> Result<Self, WindowError> {
        let (root, digits) = self.translate_core(shift)?;
        let boundary = self.translated_boundary(digits, |e| match e {
            EmbeddedStatus::At(_) => EmbeddedStatus::NotEmbedded,
            _ => EmbeddedStatus::Unknown,
        });
        Ok(WindowTree { spec: Arc::clone(&self.spec), depth: self.depth, root, boundary })
    }

    /// Mass of the symmetric difference, as an exact interval.
    pub fn pseudo_metric(&self, other: &Self) -> Result<MeasureInterval, WindowError> {
        Ok(self.symm_diff(other)?.measure())
    }

    /// Mass of the closed symmetric difference. Cells are clopen, so at
    /// tree resolution taking closures adds nothing beyond the frontier
    /// cells already counted: the interval coincides with
    /// [`Self::pseudo_metric`]. Kept separate so callers state which
    /// notion they mean.
    pub fn pseudo_metric_closed(&self, other: &Self) -> Result<MeasureInterval, WindowError> {
        self.pseudo_metric(other)
    }

    /// Window-induced point pseudo-distance: mass of
    /// `(W - xi) symm-diff (W - eta)`. Constant on cylinders at tree
    /// depth, and translation-invariant as an interval.
    pub fn point_distance(
        &self,
        xi: &OdometerPoint,
        eta: &OdometerPoint,
    ) -> Result<MeasureInterval, WindowError> {
        let a = self.translate(&xi.negate())?;
        let b = self.translate(&eta.negate())?;
        a.pseudo_metric(&b)
    }

    /// Structural property probe; see [`PropertyReport`].
    pub fn check_properties(&self, options: &ProbeOptions) -> Result<PropertyReport, WindowError> {
        let (inside, frontier, _) = self.unit_masses();
        // Decided-in cells are clopen, so a window with certified interior
        // equals the closure of that interior up to frontier mass. With no
        // certified interior at all, only the fully empty window is safe to
        // call proper.
        let proper = inside > 0 || frontier == 0;
        let regular_certificate = self.frontier_mass();
        let generic = self.generic_on_range(options.generic_range.0, options.generic_range.1)?;
        let irredundant = self.irredundant_probe(options.parallel)?;
        Ok(PropertyReport { proper, generic, regular_certificate, irredundant })
    }

    /// Test whether any embedded integer in `lo..hi` can lie on the edge.
    /// Decided cells certify "no" outright; frontier hits are resolved
    /// through the boundary record when one is attached.
    pub fn generic_on_range(&self, lo: i128, hi: i128) -> Result<GenericOutcome, WindowError> {
        let mut first_undecided = None;
        for g in lo..hi {
            let point = OdometerPoint::embed(&self.spec, g, self.depth)?;
            if self.status_of(&point)? != CellStatus::Frontier {
                continue;
            }
            match &self.boundary {
                BoundaryInfo::Empty => {}
                BoundaryInfo::SingletonChain { digits, embedded } => {
                    if point.digits() != &digits[..] {
                        continue;
                    }
                    match embedded {
                        EmbeddedStatus::At(h) => {
                            if g == *h {
                                return Ok(GenericOutcome::FailsAt(g));
                            }
                        }
                        EmbeddedStatus::NotEmbedded => {}
                        EmbeddedStatus::Unknown => {
                            first_undecided.get_or_insert(g);
                        }
                    }
                }
                BoundaryInfo::Unknown => {
                    first_undecided.get_or_insert(g);
                }
            }
        }
        Ok(match first_undecided {
            None => GenericOutcome::Certified,
            Some(g) => GenericOutcome::Inconclusive { first_undecided: g },
        })
    }

    fn irredundant_probe(&self, parallel: bool) -> Result<IrredundantOutcome, WindowError> {
        let total = self.spec.subgroup_index(self.depth);
        let total: u64 =
            total.try_into().map_err(|_| WindowError::ScanTooLarge(total))?;
        let zero_lo = |g: u64| -> bool {
            let moved = self.translate_by_int(g as i128).expect("translate within period");
            moved.pseudo_metric(self).expect("compatible").lo.is_zero()
        };
        let witness = if parallel {
            (1..total).into_par_iter().filter(|&g| zero_lo(g)).min()
        } else {
            (1..total).find(|&g| zero_lo(g))
        };
        Ok(match witness {
            None => IrredundantOutcome::Certified,
            Some(g) => IrredundantOutcome::Inconclusive { witness: g },
        })
    }

    /// Serialize to the versioned window file format. Only in and frontier
    /// cells are listed; absent space is out.
    pub fn save_json(&self) -> String {
        let nodes = self
            .leaves()
            .into_iter()
            .filter(|(_, s)| *s != CellStatus::Out)
            .map(|(path, status)| NodeEntry { path, status })
            .collect();
        let boundary = match &self.boundary {
            BoundaryInfo::Empty => Some(BoundaryFile::Empty),
            BoundaryInfo::Unknown => None,
            BoundaryInfo::SingletonChain { digits, embedded } => Some(BoundaryFile::Chain {
                digits: digits.clone(),
                embedded: match embedded {
                    EmbeddedStatus::At(v) => EmbeddedFile::At { value: v.to_string() },
                    EmbeddedStatus::NotEmbedded => EmbeddedFile::NotEmbedded,
                    EmbeddedStatus::Unknown => EmbeddedFile::Unknown,
                },
            }),
        };
        let file = WindowFile {
            version: 1,
            scales: self.spec.scales().to_vec(),
            depth: self.depth,
            nodes,
            boundary,
        };
        serde_json::to_string_pretty(&file).expect("window serializes")
    }

    pub fn load_json(text: &str) -> Result<Self, WindowError> {
        let file: WindowFile =
            serde_json::from_str(text).map_err(|e| WindowError::Format(e.to_string()))?;
        if file.version != 1 {
            return Err(WindowError::Format(format!("unsupported version {}", file.version)));
        }
        let spec = OdometerSpec::new(file.scales)
            .map_err(|e| WindowError::Format(e.to_string()))?;
        let cells: Vec<(Vec<u64>, CellStatus)> =
            file.nodes.into_iter().map(|n| (n.path, n.status)).collect();
        let tree = WindowTree::from_cells(&spec, file.depth, &cells)?;
        match file.boundary {
            None => Ok(tree),
            Some(BoundaryFile::Empty) => {
                if tree.frontier_mass().is_zero() {
                    Ok(tree)
                } else {
                    tree.with_boundary(BoundaryInfo::Empty)
                }
            }
            Some(BoundaryFile::Unknown) => tree.with_boundary(BoundaryInfo::Unknown),
            Some(BoundaryFile::Chain { digits, embedded }) => {
                let embedded = match embedded {
                    EmbeddedFile::At { value } => EmbeddedStatus::At(
                        value
                            .parse()
                            .map_err(|_| WindowError::Format(format!("bad integer {value:?}")))?,
                    ),
                    EmbeddedFile::NotEmbedded => EmbeddedStatus::NotEmbedded,
                    EmbeddedFile::Unknown => EmbeddedStatus::Unknown,
                };
                tree.with_boundary(BoundaryInfo::SingletonChain { digits, embedded })
            }
        }
    }
}

fn collect_leaves(node: &Node, path: &mut Vec<u64>, out: &mut Vec<(Vec<u64>, CellStatus)>) {
    match node {
        Node::Leaf(s) => out.push((path.clone(), *s)),
        Node::Mixed(children) => {
            for (digit, child) in children.iter().enumerate() {
                path.push(digit as u64);
                collect_leaves(child, path, out);
                path.pop();
            }
        }
    }
}

fn contains_frontier(node: &Node) -> bool {
    match node {
        Node::Leaf(s) => *s == CellStatus::Frontier,
        Node::Mixed(children) => children.iter().any(contains_frontier),
    }
}

fn mass_walk(node: &Node, units: u128, acc: &mut (u128, u128, u128)) {
    match node {
        Node::Leaf(CellStatus::In) => acc.0 += units,
        Node::Leaf(CellStatus::Frontier) => acc.1 += units,
        Node::Leaf(CellStatus::Out) => acc.2 += units,
        Node::Mixed(children) => {
            let share = units / children.len() as u128;
            for child in children {
                mass_walk(child, share, acc);
            }
        }
    }
}

fn decided_cells_walk(node: &Node, level: usize, n: usize, spec: &OdometerSpec) -> u128 {
    if level == n {
        return match uniform_status(node) {
            Some(CellStatus::In) | Some(CellStatus::Out) => 1,
            _ => 0,
        };
    }
    match node {
        Node::Leaf(CellStatus::In) | Node::Leaf(CellStatus::Out) => {
            // a decided cell at level `level` covers M_n / M_level level-n cells
            spec.subgroup_index(n) / spec.subgroup_index(level)
        }
        Node::Leaf(CellStatus::Frontier) => 0,
        Node::Mixed(children) => {
            children.iter().map(|c| decided_cells_walk(c, level + 1, n, spec)).sum()
        }
    }
}

fn zip_nodes(a: &Node, b: &Node, f: fn(CellStatus, CellStatus) -> CellStatus) -> Node {
    match (a, b) {
        (Node::Leaf(x), Node::Leaf(y)) => Node::Leaf(f(*x, *y)),
        (Node::Mixed(xs), Node::Mixed(ys)) => {
            Node::Mixed(xs.iter().zip(ys).map(|(x, y)| zip_nodes(x, y, f)).collect())
        }
        (Node::Leaf(_), Node::Mixed(ys)) => {
            Node::Mixed(ys.iter().map(|y| zip_nodes(a, y, f)).collect())
        }
        (Node::Mixed(xs), Node::Leaf(_)) => {
            Node::Mixed(xs.iter().map(|x| zip_nodes(x, b, f)).collect())
        }
    }
}

fn zip3_nodes(
    a: &Node,
    b: &Node,
    c: &Node,
    f: fn(CellStatus, CellStatus, CellStatus) -> CellStatus,
) -> Node {
    if let (Node::Leaf(x), Node::Leaf(y), Node::Leaf(z)) = (a, b, c) {
        return Node::Leaf(f(*x, *y, *z));
    }
    let width = [a, b, c]
        .iter()
        .find_map(|n| match n {
            Node::Mixed(children) => Some(children.len()),
            Node::Leaf(_) => None,
        })
        .expect("at least one mixed node");
    fn pick(n: &Node, i: usize) -> &Node {
        match n {
            Node::Leaf(_) => n,
            Node::Mixed(children) => &children[i],
        }
    }
    Node::Mixed((0..width).map(|i| zip3_nodes(pick(a, i), pick(b, i), pick(c, i), f)).collect())
}

fn map_nodes(node: &Node, f: fn(CellStatus) -> CellStatus) -> Node {
    match node {
        Node::Leaf(s) => Node::Leaf(f(*s)),
        Node::Mixed(children) => Node::Mixed(children.iter().map(|c| map_nodes(c, f)).collect()),
    }
}

fn subset_nodes(a: &Node, b: &Node) -> bool {
    match (a, b) {
        (Node::Leaf(CellStatus::Out), _) => true,
        (Node::Leaf(CellStatus::In), node) => {
            matches!(uniform_status(node), Some(CellStatus::In))
        }
        (Node::Leaf(CellStatus::Frontier), node) => no_out(node),
        (Node::Mixed(xs), Node::Mixed(ys)) => {
            xs.iter().zip(ys).all(|(x, y)| subset_nodes(x, y))
        }
        (Node::Mixed(xs), Node::Leaf(_)) => xs.iter().all(|x| subset_nodes(x, b)),
    }
}

fn no_out(node: &Node) -> bool {
    match node {
        Node::Leaf(s) => *s != CellStatus::Out,
        Node::Mixed(children) => children.iter().all(no_out),
    }
}

/// Cell image under translation: the level-`l` cell named by `path` maps
/// onto the level-`l` cell of `residue(path) + shift`, because digits of a
/// sum up to level `l` depend only on digits of the summands up to `l`.
fn shift_path(spec: &OdometerSpec, path: &[u64], shift: &OdometerPoint) -> Vec<u64> {
    let level = path.len();
    let mut res = 0u128;
    for n in (1..=level).rev() {
        res = res * spec.scale(n) as u128 + path[n - 1] as u128;
    }
    let shift_res = shift.truncate(level).residue();
    let modulus = spec.subgroup_index(level);
    let mut moved = (res + shift_res) % modulus;
    let mut digits = Vec::with_capacity(level);
    for n in 1..=level {
        let m = spec.scale(n) as u128;
        digits.push((moved % m) as u64);
        moved /= m;
    }
    digits
}

#[derive(Serialize, Deserialize)]
struct WindowFile {
    version: u32,
    scales: Vec<u64>,
    depth: usize,
    nodes: Vec<NodeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary: Option<BoundaryFile>,
}

#[derive(Serialize, Deserialize)]
struct NodeEntry {
    path: Vec<u64>,
    status: CellStatus,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BoundaryFile {
    Empty,
    Chain { digits: Vec<u64>, embedded: EmbeddedFile },
    Unknown,
}

// the integer value travels as a string: internally tagged enums buffer
// their content in a representation without 128-bit support
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EmbeddedFile {
    At { value: String },
    NotEmbedded,
    Unknown,
}
