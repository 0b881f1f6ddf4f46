//! Hierarchical bipartition trees.
//!
//! A tree is stored level by level. After relabeling, region `k` at level `j`
//! has children `2k` and `2k+1` when it splits; a single-node region is carried
//! down as child `2k` and slot `2k+1` stays empty (fictitious). Regions on each
//! level are kept sorted by `k`.

use std::collections::BTreeSet;
use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{fiedler_vector, split_by_sign, EigenConfig, Graph, LaplacianKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub k: usize,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTree {
    n: usize,
    levels: Vec<Vec<Region>>,
}

/// Unrelabeled tree: per level, regions in contiguous order. Children of a
/// level's regions appear in parent order on the next level.
pub type RawTree = Vec<Vec<Vec<usize>>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RootViolation,
    LeafSizeViolation { j: usize, k: usize, size: usize },
    EmptyRegion { j: usize, k: usize },
    IndexOutOfRange { j: usize, k: usize },
    DisjointnessViolation { j: usize },
    CoverageViolation { j: usize },
    OrphanRegion { j: usize, k: usize },
    SplitViolation { j: usize, k: usize },
    CarryViolation { j: usize, k: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootViolation => write!(f, "level 0 is not a single region holding every node"),
            Violation::LeafSizeViolation { j, k, size } => {
                write!(f, "leaf region ({j},{k}) has {size} nodes")
            }
            Violation::EmptyRegion { j, k } => write!(f, "region ({j},{k}) is empty"),
            Violation::IndexOutOfRange { j, k } => write!(f, "region index k={k} out of range at level {j}"),
            Violation::DisjointnessViolation { j } => write!(f, "regions on level {j} overlap"),
            Violation::CoverageViolation { j } => write!(f, "regions on level {j} do not cover every node"),
            Violation::OrphanRegion { j, k } => write!(f, "region ({j},{k}) has no parent"),
            Violation::SplitViolation { j, k } => {
                write!(f, "region ({j},{k}) is not split into two nonempty children covering it")
            }
            Violation::CarryViolation { j, k } => {
                write!(f, "single-node region ({j},{k}) is not carried down to child {}", 2 * k)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Largest ratio between sibling sizes over all splits (1.0 means perfectly balanced).
    pub max_child_ratio: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Columns,
}

impl PartitionTree {
    /// Wraps relabeled levels without checking them; see [`PartitionTree::validate`].
    pub fn from_levels_unchecked(n: usize, mut levels: Vec<Vec<Region>>) -> Self {
        for level in &mut levels {
            level.sort_by_key(|r| r.k);
        }
        PartitionTree { n, levels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn jmax(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Vec<Region>] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> &[Region] {
        &self.levels[j]
    }

    pub fn region(&self, j: usize, k: usize) -> Option<&Region> {
        let level = self.levels.get(j)?;
        level.binary_search_by_key(&k, |r| r.k).ok().map(|p| &level[p])
    }

    /// Position of relabeled region `k` among the existing regions of level `j`
    /// (its index before relabeling).
    pub fn original_index(&self, j: usize, k: usize) -> Option<usize> {
        self.levels.get(j)?.binary_search_by_key(&k, |r| r.k).ok()
    }

    /// Relabeled index of the `pos`-th existing region on level `j`.
    pub fn relabeled_index(&self, j: usize, pos: usize) -> Option<usize> {
        self.levels.get(j)?.get(pos).map(|r| r.k)
    }

    /// Nodes in leaf order (the reordering induced by the tree).
    pub fn leaf_order(&self) -> Vec<usize> {
        self.levels[self.jmax()].iter().flat_map(|r| r.nodes.iter().copied()).collect()
    }

    pub fn to_raw(&self) -> RawTree {
        self.levels.iter().map(|l| l.iter().map(|r| r.nodes.clone()).collect()).collect()
    }

    /// Checks the four structural conditions against a node set `0..n` and
    /// reports sibling balance.
    pub fn validate(&self, n: usize) -> ValidationReport {
        let mut violations = Vec::new();
        let all: BTreeSet<usize> = (0..n).collect();

        let root_ok = self.levels.first().is_some_and(|l| {
            l.len() == 1 && l[0].k == 0 && {
                let s: BTreeSet<usize> = l[0].nodes.iter().copied().collect();
                s == all && l[0].nodes.len() == n
            }
        });
        if !root_ok {
            violations.push(Violation::RootViolation);
        }

        for (j, level) in self.levels.iter().enumerate() {
            let mut seen = BTreeSet::new();
            let mut overlap = false;
            for r in level {
                if r.k >= 1usize.checked_shl(j as u32).unwrap_or(usize::MAX) {
                    violations.push(Violation::IndexOutOfRange { j, k: r.k });
                }
                if r.nodes.is_empty() {
                    violations.push(Violation::EmptyRegion { j, k: r.k });
                }
                for &v in &r.nodes {
                    overlap |= !seen.insert(v);
                }
            }
            if overlap {
                violations.push(Violation::DisjointnessViolation { j });
            }
            if seen != all {
                violations.push(Violation::CoverageViolation { j });
            }
        }

        let jmax = self.jmax();
        for r in &self.levels[jmax] {
            if r.nodes.len() != 1 {
                violations.push(Violation::LeafSizeViolation { j: jmax, k: r.k, size: r.nodes.len() });
            }
        }

        let mut max_ratio = 1.0f64;
        for j in 0..jmax {
            for r in &self.levels[j] {
                let c0 = self.region(j + 1, 2 * r.k);
                let c1 = self.region(j + 1, 2 * r.k + 1);
                if r.nodes.len() == 1 {
                    if c0.map(|c| &c.nodes) != Some(&r.nodes) || c1.is_some() {
                        violations.push(Violation::CarryViolation { j, k: r.k });
                    }
                    continue;
                }
                match (c0, c1) {
                    (Some(a), Some(b)) if !a.nodes.is_empty() && !b.nodes.is_empty() => {
                        let parent: BTreeSet<usize> = r.nodes.iter().copied().collect();
                        let union: BTreeSet<usize> = a.nodes.iter().chain(&b.nodes).copied().collect();
                        if parent != union {
                            violations.push(Violation::SplitViolation { j, k: r.k });
                        }
                        let (x, y) = (a.nodes.len() as f64, b.nodes.len() as f64);
                        max_ratio = max_ratio.max(x.max(y) / x.min(y));
                    }
                    _ => violations.push(Violation::SplitViolation { j, k: r.k }),
                }
            }
            for r in &self.levels[j + 1] {
                if self.region(j, r.k / 2).is_none() {
                    violations.push(Violation::OrphanRegion { j: j + 1, k: r.k });
                }
            }
        }

        ValidationReport { violations, max_child_ratio: max_ratio }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TreeJson::from(self))?)
    }

    /// Parses a tree; the result is not validated.
    pub fn from_json(s: &str) -> Result<Self> {
        let t: TreeJson = serde_json::from_str(s)?;
        if t.levels.len() != t.jmax + 1 {
            return Err(Error::MalformedTree(format!(
                "jmax is {} but {} levels are listed",
                t.jmax,
                t.levels.len()
            )));
        }
        Ok(Self::from_levels_unchecked(t.n, t.levels))
    }
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    jmax: usize,
    n: usize,
    levels: Vec<Vec<Region>>,
}

impl From<&PartitionTree> for TreeJson {
    fn from(t: &PartitionTree) -> Self {
        TreeJson { jmax: t.jmax(), n: t.n, levels: t.levels.clone() }
    }
}

/// Moves contiguous region indices onto the perfect binary tree.
pub fn relabel_tree(raw: &RawTree) -> Result<PartitionTree> {
    let malformed = |m: String| Err(Error::MalformedTree(m));
    if raw.is_empty() || raw[0].len() != 1 {
        return malformed("level 0 must hold exactly one region".into());
    }
    let root = &raw[0][0];
    let n = root.len();
    let mut sorted_root = root.clone();
    sorted_root.sort_unstable();
    if n == 0 || sorted_root.iter().enumerate().any(|(i, &v)| i != v) {
        return malformed("the root must contain each node 0..n exactly once".into());
    }

    let mut levels = vec![vec![Region { k: 0, nodes: root.clone() }]];
    for j in 1..raw.len() {
        let children = &raw[j];
        let mut next = Vec::with_capacity(children.len());
        let mut pos = 0;
        for parent in &levels[j - 1] {
            if parent.nodes.len() == 1 {
                match children.get(pos) {
                    Some(c) if *c == parent.nodes => {
                        next.push(Region { k: 2 * parent.k, nodes: c.clone() });
                        pos += 1;
                    }
                    _ => {
                        return malformed(format!(
                            "single-node region at level {} index {} is not carried down",
                            j - 1,
                            parent.k
                        ))
                    }
                }
            } else {
                let (Some(a), Some(b)) = (children.get(pos), children.get(pos + 1)) else {
                    return malformed(format!("level {j} is missing children"));
                };
                let mut both: Vec<usize> = a.iter().chain(b).copied().collect();
                both.sort_unstable();
                let mut p = parent.nodes.clone();
                p.sort_unstable();
                if a.is_empty() || b.is_empty() || both != p {
                    return malformed(format!(
                        "regions {pos} and {} at level {j} do not split their parent",
                        pos + 1
                    ));
                }
                next.push(Region { k: 2 * parent.k, nodes: a.clone() });
                next.push(Region { k: 2 * parent.k + 1, nodes: b.clone() });
                pos += 2;
            }
        }
        if pos != children.len() {
            return malformed(format!("level {j} has {} regions without a parent", children.len() - pos));
        }
        levels.push(next);
    }
    if let Some(r) = levels.last().unwrap().iter().find(|r| r.nodes.len() != 1) {
        return malformed(format!("leaf region {} has {} nodes", r.k, r.nodes.len()));
    }
    Ok(PartitionTree { n, levels })
}

/// Grows a raw tree level by level with `split` until every region is a singleton.
fn grow<F>(n: usize, split: F) -> Result<RawTree>
where
    F: Fn(&[usize]) -> Result<(Vec<usize>, Vec<usize>)> + Sync,
{
    let mut raw: RawTree = vec![vec![(0..n).collect()]];
    loop {
        let last = raw.last().unwrap();
        if last.iter().all(|r| r.len() == 1) {
            return Ok(raw);
        }
        let parts: Vec<Vec<Vec<usize>>> = last
            .par_iter()
            .map(|r| {
                if r.len() == 1 {
                    Ok(vec![r.clone()])
                } else {
                    split(r).map(|(a, b)| vec![a, b])
                }
            })
            .collect::<Result<_>>()?;
        raw.push(parts.into_iter().flatten().collect());
    }
}

/// Recursive Fiedler bisection on the random-walk Laplacian of each region.
///
/// A region whose induced subgraph is disconnected is split into its largest
/// component versus the union of the remaining components.
pub fn build_partition_tree_spectral(g: &Graph, cfg: &EigenConfig) -> Result<PartitionTree> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidGraph("graph has no nodes".into()));
    }
    let comps = g.components();
    if comps.len() > 1 {
        return Err(Error::NotConnected { components: comps.len() });
    }
    let raw = grow(n, |region| {
        let sub = g.induced_subgraph(region);
        let comps = sub.components();
        let (a, b) = if comps.len() > 1 {
            let big = (0..comps.len()).max_by(|&x, &y| comps[x].len().cmp(&comps[y].len()).then(y.cmp(&x))).unwrap();
            let mut rest: Vec<usize> =
                comps.iter().enumerate().filter(|&(c, _)| c != big).flat_map(|(_, v)| v.iter().copied()).collect();
            rest.sort_unstable();
            (comps[big].clone(), rest)
        } else {
            let f = fiedler_vector(&sub, LaplacianKind::RandomWalk, cfg)?;
            split_by_sign(&f.vector, cfg.zero_tol)
        };
        Ok((a.into_iter().map(|i| region[i]).collect(), b.into_iter().map(|i| region[i]).collect()))
    })?;
    relabel_tree(&raw)
}

/// Splits index ranges at the middle, the extra node of odd regions going left.
pub fn build_partition_tree_midpoint(n: usize) -> Result<PartitionTree> {
    if n == 0 {
        return Err(Error::InvalidConfig("midpoint tree needs n >= 1".into()));
    }
    let raw = grow(n, |r| {
        let h = r.len().div_ceil(2);
        Ok((r[..h].to_vec(), r[h..].to_vec()))
    })?;
    relabel_tree(&raw)
}

/// Penalized total-variation tree along one image axis.
///
/// Each range is cut where `TV(I1)/|I1|^p + TV(I2)/|I2|^p` is smallest, TV
/// counting only pixel pairs inside a part. Exact ties go to the most
/// balanced cut, and between two equally balanced cuts to the one with the
/// larger left part, so a constant image reproduces the midpoint tree.
pub fn build_partition_tree_ptv(img: &Array2<f64>, axis: Axis, p: f64) -> Result<PartitionTree> {
    if !(p > 0.0) {
        return Err(Error::InvalidConfig(format!("PTV exponent must be positive, got {p}")));
    }
    let (rows, cols) = img.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::SizeMismatch("image has no pixels".into()));
    }
    let (len, width) = match axis {
        Axis::Rows => (rows, cols),
        Axis::Columns => (cols, rows),
    };
    let at = |i: usize, t: usize| match axis {
        Axis::Rows => img[(i, t)],
        Axis::Columns => img[(t, i)],
    };
    // inner[i]: variation inside slice i; cross[i]: variation between slices i and i+1.
    let mut pin = vec![0.0; len + 1];
    let mut pcross = vec![0.0; len];
    for i in 0..len {
        let inner: f64 = (1..width).map(|t| (at(i, t) - at(i, t - 1)).abs()).sum();
        pin[i + 1] = pin[i] + inner;
        if i + 1 < len {
            let cross: f64 = (0..width).map(|t| (at(i + 1, t) - at(i, t)).abs()).sum();
            pcross[i + 1] = pcross[i] + cross;
        }
    }
    let tv = |a: usize, b: usize| (pin[b] - pin[a]) + (pcross[b - 1] - pcross[a]);
    let w = width as f64;

    let raw = grow(len, |r| {
        let a = r[0];
        let b = a + r.len();
        let mut best: Option<(f64, usize, usize)> = None;
        for c in a + 1..b {
            let (s1, s2) = (c - a, b - c);
            let cost = tv(a, c) / (s1 as f64 * w).powf(p) + tv(c, b) / (s2 as f64 * w).powf(p);
            let imbalance = s1.abs_diff(s2);
            let better = match best {
                None => true,
                Some((bc, bi, bs1)) => cost < bc || (cost == bc && (imbalance < bi || (imbalance == bi && s1 > bs1))),
            };
            if better {
                best = Some((cost, imbalance, s1));
            }
        }
        let h = best.expect("range has at least two indices").2;
        Ok((r[..h].to_vec(), r[h..].to_vec()))
    })?;
    relabel_tree(&raw)
}
