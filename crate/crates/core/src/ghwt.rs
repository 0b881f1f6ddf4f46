//! The Generalized Haar-Walsh dictionary on a partition tree.
//!
//! Every existing basis vector is addressed by a [`TagKey`] `(j, k, l)` with
//! `k` the relabeled region index. Each level of the dictionary is an
//! orthonormal basis, so it holds exactly `n` keys; keys are laid out level by
//! level ("slots") in coarse-to-fine order and looked up through a hash index.
//! Fictitious keys are never stored.
//!
//! Going from level `j+1` to level `j`, a region with children `A`, `B`
//! combines, for every child tag `l`:
//! * both children have `l = 0`: scaling and Haar coefficients
//!   `(a*dA + b*dB, b*dA - a*dB)` with `a = sqrt(|A|/|R|)`, `b = sqrt(|B|/|R|)`;
//! * both have `l >= 1`: Walsh pair `((dA + dB)/sqrt2, (dA - dB)/sqrt2)` at tags `2l, 2l+1`;
//! * only one has `l`: the coefficient passes through to tag `2l`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::PartitionTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TagKey {
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl TagKey {
    pub const fn new(j: usize, k: usize, l: usize) -> Self {
        TagKey { j, k, l }
    }
}

impl fmt::Display for TagKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.j, self.k, self.l)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    Scale { c0: usize, c1: usize, p0: usize, p1: usize, a: f64, b: f64 },
    Walsh { c0: usize, c1: usize, p0: usize, p1: usize },
    Pass { c: usize, p: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct RegionSlots {
    pub k: usize,
    pub offset: usize,
    pub tags: Vec<usize>,
}

/// A partition tree together with the slot layout of its GHWT dictionary.
#[derive(Debug)]
pub struct Dictionary {
    tree: PartitionTree,
    n: usize,
    keys: Vec<TagKey>,
    index: HashMap<TagKey, usize>,
    regions: Vec<Vec<RegionSlots>>,
    leaf_nodes: Vec<usize>,
    ops: Vec<Vec<Op>>,
}

impl Dictionary {
    pub fn new(tree: PartitionTree) -> Arc<Self> {
        let n = tree.n();
        let jmax = tree.jmax();
        let mut regions: Vec<Vec<RegionSlots>> = vec![Vec::new(); jmax + 1];
        let mut ops: Vec<Vec<Op>> = vec![Vec::new(); jmax];

        regions[jmax] = tree
            .level(jmax)
            .iter()
            .enumerate()
            .map(|(pos, r)| RegionSlots { k: r.k, offset: pos, tags: vec![0] })
            .collect();

        for j in (0..jmax).rev() {
            let below = &regions[j + 1];
            let find = |k: usize| below.binary_search_by_key(&k, |r| r.k).ok().map(|i| &below[i]);
            let base_c = (j + 1) * n;
            let base_p = j * n;
            let mut offset = 0;
            let mut level = Vec::with_capacity(tree.level(j).len());
            for r in tree.level(j) {
                let size = r.nodes.len() as f64;
                let (ca, cb) = (find(2 * r.k), find(2 * r.k + 1));
                let mut tags = Vec::new();
                let slot = |reg: Option<&RegionSlots>, l: usize| {
                    reg.and_then(|x| x.tags.binary_search(&l).ok().map(|i| base_c + x.offset + i))
                };
                let max_tag = ca.iter().chain(cb.iter()).filter_map(|x| x.tags.last().copied()).max().unwrap_or(0);
                for l in 0..=max_tag {
                    let p0 = base_p + offset + tags.len();
                    match (slot(ca, l), slot(cb, l)) {
                        (Some(c0), Some(c1)) => {
                            if l == 0 {
                                let na = tree.region(j + 1, 2 * r.k).unwrap().nodes.len() as f64;
                                let nb = tree.region(j + 1, 2 * r.k + 1).unwrap().nodes.len() as f64;
                                let (a, b) = ((na / size).sqrt(), (nb / size).sqrt());
                                ops[j].push(Op::Scale { c0, c1, p0, p1: p0 + 1, a, b });
                            } else {
                                ops[j].push(Op::Walsh { c0, c1, p0, p1: p0 + 1 });
                            }
                            tags.push(2 * l);
                            tags.push(2 * l + 1);
                        }
                        (Some(c), None) | (None, Some(c)) => {
                            ops[j].push(Op::Pass { c, p: p0 });
                            tags.push(2 * l);
                        }
                        (None, None) => {}
                    }
                }
                let count = tags.len();
                level.push(RegionSlots { k: r.k, offset, tags });
                offset += count;
            }
            debug_assert_eq!(offset, n, "level {j} must hold n keys");
            regions[j] = level;
        }

        let mut keys = Vec::with_capacity(n * (jmax + 1));
        for (j, level) in regions.iter().enumerate() {
            for r in level {
                keys.extend(r.tags.iter().map(|&l| TagKey::new(j, r.k, l)));
            }
        }
        let index = keys.iter().enumerate().map(|(s, &key)| (key, s)).collect();
        let leaf_nodes = tree.leaf_order();
        Arc::new(Dictionary { tree, n, keys, index, regions, leaf_nodes, ops })
    }

    pub fn tree(&self) -> &PartitionTree {
        &self.tree
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn jmax(&self) -> usize {
        self.tree.jmax()
    }

    pub fn num_slots(&self) -> usize {
        self.keys.len()
    }

    pub fn contains(&self, key: &TagKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn slot(&self, key: &TagKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, slot: usize) -> TagKey {
        self.keys[slot]
    }

    /// Every existing key, coarse-to-fine: by level, then region, then tag.
    pub fn c2f_view(&self) -> &[TagKey] {
        &self.keys
    }

    /// Every existing key grouped by tag, levels from finest to coarsest.
    pub fn f2c_view(&self) -> Vec<TagKey> {
        let mut v = self.keys.clone();
        v.sort_by(|a, b| a.l.cmp(&b.l).then(b.j.cmp(&a.j)).then(a.k.cmp(&b.k)));
        v
    }

    pub(crate) fn regions(&self, j: usize) -> &[RegionSlots] {
        &self.regions[j]
    }

    /// Key with the region index replaced by its position before relabeling.
    pub fn to_original(&self, key: TagKey) -> Option<TagKey> {
        self.tree.original_index(key.j, key.k).map(|k| TagKey::new(key.j, k, key.l))
    }

    pub fn from_original(&self, key: TagKey) -> Option<TagKey> {
        self.tree.relabeled_index(key.j, key.k).map(|k| TagKey::new(key.j, k, key.l))
    }

    pub fn analyze(self: &Arc<Self>, f: &[f64]) -> Result<CoeffTable> {
        if f.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: f.len() });
        }
        Ok(CoeffTable { dict: Arc::clone(self), values: self.analyze_lanes(f, 1) })
    }

    /// Analysis of `width` signals at once; `data[node * width + lane]`.
    /// Returns `out[slot * width + lane]`.
    pub(crate) fn analyze_lanes(&self, data: &[f64], width: usize) -> Vec<f64> {
        let jmax = self.jmax();
        let mut out = vec![0.0; self.keys.len() * width];
        let leaf_base = jmax * self.n;
        for (pos, &node) in self.leaf_nodes.iter().enumerate() {
            let dst = (leaf_base + pos) * width;
            out[dst..dst + width].copy_from_slice(&data[node * width..(node + 1) * width]);
        }
        for j in (0..jmax).rev() {
            for op in &self.ops[j] {
                match *op {
                    Op::Scale { c0, c1, p0, p1, a, b } => {
                        for t in 0..width {
                            let (x, y) = (out[c0 * width + t], out[c1 * width + t]);
                            out[p0 * width + t] = a * x + b * y;
                            out[p1 * width + t] = b * x - a * y;
                        }
                    }
                    Op::Walsh { c0, c1, p0, p1 } => {
                        for t in 0..width {
                            let (x, y) = (out[c0 * width + t], out[c1 * width + t]);
                            out[p0 * width + t] = (x + y) / std::f64::consts::SQRT_2;
                            out[p1 * width + t] = (x - y) / std::f64::consts::SQRT_2;
                        }
                    }
                    Op::Pass { c, p } => {
                        for t in 0..width {
                            out[p * width + t] = out[c * width + t];
                        }
                    }
                }
            }
        }
        out
    }

    /// Pushes coefficients placed at arbitrary slots down to the leaves,
    /// accumulating linearly. `buf[slot * width + lane]` is consumed.
    pub(crate) fn synthesize_lanes(&self, mut buf: Vec<f64>, width: usize) -> Vec<f64> {
        let jmax = self.jmax();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..jmax {
            for op in &self.ops[j] {
                match *op {
                    Op::Scale { c0, c1, p0, p1, a, b } => {
                        for t in 0..width {
                            let (x, y) = (buf[p0 * width + t], buf[p1 * width + t]);
                            buf[c0 * width + t] += a * x + b * y;
                            buf[c1 * width + t] += b * x - a * y;
                        }
                    }
                    Op::Walsh { c0, c1, p0, p1 } => {
                        for t in 0..width {
                            let (x, y) = (buf[p0 * width + t], buf[p1 * width + t]);
                            buf[c0 * width + t] += (x + y) * h;
                            buf[c1 * width + t] += (x - y) * h;
                        }
                    }
                    Op::Pass { c, p } => {
                        for t in 0..width {
                            buf[c * width + t] += buf[p * width + t];
                        }
                    }
                }
            }
        }
        let mut out = vec![0.0; self.n * width];
        let leaf_base = jmax * self.n;
        for (pos, &node) in self.leaf_nodes.iter().enumerate() {
            let src = (leaf_base + pos) * width;
            out[node * width..(node + 1) * width].copy_from_slice(&buf[src..src + width]);
        }
        out
    }

    /// Linear combination of dictionary vectors. Keys need not be orthogonal.
    pub fn combine<'a, I>(&self, coeffs: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = (&'a TagKey, &'a f64)>,
    {
        let mut buf = vec![0.0; self.keys.len()];
        for (key, &v) in coeffs {
            let s = self.slot(key).ok_or(Error::FictitiousKey(*key))?;
            buf[s] += v;
        }
        Ok(self.synthesize_lanes(buf, 1))
    }

    /// `sum coeffs[key] * psi_key` over a basis; the coefficient keys must be exactly the basis keys.
    pub fn synthesize(&self, basis: &BasisSpec, coeffs: &HashMap<TagKey, f64>) -> Result<Vec<f64>> {
        if coeffs.len() != basis.len() {
            return Err(Error::KeyMismatch(format!(
                "{} coefficients for a basis of {} keys",
                coeffs.len(),
                basis.len()
            )));
        }
        if let Some(k) = basis.keys().iter().find(|k| !coeffs.contains_key(k)) {
            return Err(Error::KeyMismatch(format!("no coefficient for key {k}")));
        }
        self.combine(coeffs.iter())
    }

    pub fn basis_vector(&self, key: &TagKey) -> Result<Vec<f64>> {
        self.combine([(key, &1.0)])
    }

    /// All vectors of one level; O(n^2) memory, intended for small graphs.
    pub fn level_vectors(&self, j: usize) -> Vec<(TagKey, Vec<f64>)> {
        self.keys[j * self.n..(j + 1) * self.n]
            .iter()
            .map(|k| (*k, self.basis_vector(k).expect("level keys exist")))
            .collect()
    }

    pub fn level_basis(&self, j: usize) -> BasisSpec {
        BasisSpec::new(self.keys[j * self.n..(j + 1) * self.n].to_vec())
    }

    /// The global Walsh basis: every vector of level 0.
    pub fn walsh_basis(&self) -> BasisSpec {
        self.level_basis(0)
    }

    /// The graph Haar basis: the global scaling vector and every Haar vector.
    pub fn haar_basis(&self) -> BasisSpec {
        let mut keys = vec![TagKey::new(0, 0, 0)];
        keys.extend(self.keys.iter().filter(|k| k.l == 1));
        BasisSpec::new(keys)
    }

    /// Checks that `basis` is a set of `n` existing keys whose tiles are disjoint.
    pub fn validate_basis(&self, basis: &BasisSpec) -> Result<()> {
        if let Some(k) = basis.keys().iter().find(|k| !self.contains(k)) {
            return Err(Error::FictitiousKey(*k));
        }
        if basis.len() != self.n {
            return Err(Error::InvalidTiling(format!("{} keys for dimension {}", basis.len(), self.n)));
        }
        self.check_disjoint(basis.keys())
    }

    /// Checks that existing keys have pairwise disjoint tiles (an orthonormal set).
    pub fn check_disjoint(&self, keys: &[TagKey]) -> Result<()> {
        if disjoint_tiles(keys.to_vec(), self.jmax(), TagKey::new(0, 0, 0)) {
            Ok(())
        } else {
            Err(Error::InvalidTiling("tiles overlap".into()))
        }
    }
}

/// Whether a key lies in the stage-`m` block rooted at `b`.
pub(crate) fn block_contains(m: usize, b: TagKey, key: &TagKey) -> bool {
    key.j >= b.j && key.j <= b.j + m && key.k >> (key.j - b.j) == b.k && key.l >> (b.j + m - key.j) == b.l
}

/// Recursive disjointness test of tiles inside one block. Any disjoint family
/// of dyadic tiles admits a time or a sequency split of the block, so the
/// recursion is exact.
fn disjoint_tiles(keys: Vec<TagKey>, m: usize, b: TagKey) -> bool {
    if keys.len() <= 1 {
        return true;
    }
    if m == 0 {
        return false;
    }
    let (first, second): (Vec<TagKey>, Vec<TagKey>);
    let (c0, c1);
    if keys.iter().all(|x| x.j > b.j) {
        c0 = TagKey::new(b.j + 1, 2 * b.k, b.l);
        c1 = TagKey::new(b.j + 1, 2 * b.k + 1, b.l);
        (first, second) = keys.into_iter().partition(|x| block_contains(m - 1, c0, x));
    } else if keys.iter().all(|x| x.j < b.j + m) {
        c0 = TagKey::new(b.j, b.k, 2 * b.l);
        c1 = TagKey::new(b.j, b.k, 2 * b.l + 1);
        (first, second) = keys.into_iter().partition(|x| block_contains(m - 1, c0, x));
    } else {
        return false;
    }
    disjoint_tiles(first, m - 1, c0) && disjoint_tiles(second, m - 1, c1)
}

/// The GHWT expansion coefficients of one signal.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    dict: Arc<Dictionary>,
    values: Vec<f64>,
}

impl CoeffTable {
    /// Builds a table from values listed in slot (coarse-to-fine) order.
    pub fn from_values(dict: Arc<Dictionary>, values: Vec<f64>) -> Result<Self> {
        if values.len() != dict.num_slots() {
            return Err(Error::LengthMismatch { expected: dict.num_slots(), found: values.len() });
        }
        Ok(CoeffTable { dict, values })
    }

    pub fn dict(&self) -> &Arc<Dictionary> {
        &self.dict
    }

    pub fn get(&self, key: &TagKey) -> Option<f64> {
        self.dict.slot(key).map(|s| self.values[s])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn level(&self, j: usize) -> &[f64] {
        let n = self.dict.n;
        &self.values[j * n..(j + 1) * n]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TagKey, f64)> + '_ {
        self.dict.keys.iter().copied().zip(self.values.iter().copied())
    }

    /// Coefficients of `basis`, in the basis' key order.
    pub fn restrict(&self, basis: &BasisSpec) -> Result<Vec<(TagKey, f64)>> {
        basis
            .keys()
            .iter()
            .map(|k| self.get(k).map(|v| (*k, v)).ok_or(Error::FictitiousKey(*k)))
            .collect()
    }

    pub fn cost_of(&self, basis: &BasisSpec, cost: &CostFunction) -> Result<f64> {
        let vals: Vec<f64> = self.restrict(basis)?.into_iter().map(|(_, v)| v).collect();
        Ok(cost.eval(&vals))
    }
}

/// Additive cost `J(d) = sum g(d_i)` with a nonnegative `g`.
#[derive(Clone)]
pub enum CostFunction {
    LpToTheP(f64),
    L0(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::LpToTheP(p) => write!(f, "LpToTheP({p})"),
            CostFunction::L0(t) => write!(f, "L0({t})"),
            CostFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl CostFunction {
    pub fn lp(p: f64) -> Result<Self> {
        if p > 0.0 && p < 2.0 {
            Ok(CostFunction::LpToTheP(p))
        } else {
            Err(Error::InvalidCost(format!("p must lie in (0, 2), got {p}")))
        }
    }

    pub fn l0(threshold: f64) -> Result<Self> {
        if threshold >= 0.0 {
            Ok(CostFunction::L0(threshold))
        } else {
            Err(Error::InvalidCost(format!("threshold must be nonnegative, got {threshold}")))
        }
    }

    /// A user cost; `g` must return nonnegative values.
    pub fn custom(g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CostFunction::Custom(Arc::new(g))
    }

    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        match self {
            CostFunction::LpToTheP(p) if *p == 1.0 => x.abs(),
            CostFunction::LpToTheP(p) => x.abs().powf(*p),
            CostFunction::L0(t) => f64::from(u8::from(x.abs() > *t)),
            CostFunction::Custom(g) => g(x),
        }
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        values.iter().map(|&x| self.g(x)).sum()
    }
}

pub fn cost_eval(values: &[f64], cost: &CostFunction) -> f64 {
    cost.eval(values)
}

/// A set of dictionary keys, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    keys: Vec<TagKey>,
}

impl BasisSpec {
    pub fn new(mut keys: Vec<TagKey>) -> Self {
        keys.sort_unstable();
        keys.dedup();
        BasisSpec { keys }
    }

    pub fn keys(&self) -> &[TagKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: &TagKey) -> bool {
        self.keys.binary_search(key).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    C2f,
    F2c,
}

impl Ordering {
    pub fn name(self) -> &'static str {
        match self {
            Ordering::C2f => "c2f",
            Ordering::F2c => "f2c",
        }
    }
}

/// A tree of coefficient blocks, children listed before parents.
#[derive(Debug, Clone)]
pub(crate) struct BlockTree {
    pub slots: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl BlockTree {
    pub fn root(&self) -> usize {
        self.slots.len() - 1
    }

    /// Regions as blocks: each region with all of its tags.
    pub fn c2f(dict: &Dictionary) -> Self {
        let mut t = BlockTree { slots: Vec::new(), children: Vec::new() };
        let mut below: Vec<(usize, usize)> = Vec::new();
        for j in (0..=dict.jmax()).rev() {
            let mut ids = Vec::new();
            for r in dict.regions(j) {
                let base = j * dict.n + r.offset;
                let children = below.iter().filter(|&&(k, _)| k / 2 == r.k).map(|&(_, id)| id).collect();
                t.slots.push((base..base + r.tags.len()).collect());
                t.children.push(children);
                ids.push((r.k, t.slots.len() - 1));
            }
            below = ids;
        }
        t
    }

    /// `(j, l)` groups as blocks: tag `l` on level `j` over all regions; the
    /// children of `(j, l)` are `(j-1, 2l)` and `(j-1, 2l+1)`.
    pub fn f2c(dict: &Dictionary) -> Self {
        let mut t = BlockTree { slots: Vec::new(), children: Vec::new() };
        let mut below: Vec<(usize, usize)> = Vec::new();
        for j in 0..=dict.jmax() {
            let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            for r in dict.regions(j) {
                for (i, &l) in r.tags.iter().enumerate() {
                    groups.entry(l).or_default().push(j * dict.n + r.offset + i);
                }
            }
            let mut ids = Vec::new();
            for (l, slots) in groups {
                let children = below.iter().filter(|&&(cl, _)| cl / 2 == l).map(|&(_, id)| id).collect();
                t.slots.push(slots);
                t.children.push(children);
                ids.push((l, t.slots.len() - 1));
            }
            below = ids;
        }
        t
    }

    pub fn for_ordering(dict: &Dictionary, ordering: Ordering) -> Self {
        match ordering {
            Ordering::C2f => Self::c2f(dict),
            Ordering::F2c => Self::f2c(dict),
        }
    }
}

/// Tolerance under which a parent block is preferred over its children.
pub(crate) const PARENT_TIE: f64 = 1e-12;

/// Coifman-Wickerhauser search on the c2f or f2c block tree.
pub fn best_basis_cw(c: &CoeffTable, ordering: Ordering, cost: &CostFunction) -> (BasisSpec, f64) {
    let slot_cost: Vec<f64> = c.values.iter().map(|&v| cost.g(v)).collect();
    cw_search(&c.dict, ordering, &slot_cost)
}

/// The search itself, on a precomputed cost per dictionary slot.
pub(crate) fn cw_search(dict: &Dictionary, ordering: Ordering, slot_cost: &[f64]) -> (BasisSpec, f64) {
    let tree = BlockTree::for_ordering(dict, ordering);
    let nb = tree.slots.len();
    let mut best = vec![0.0; nb];
    let mut keep = vec![true; nb];
    for b in 0..nb {
        let own: f64 = tree.slots[b].iter().map(|&s| slot_cost[s]).sum();
        if tree.children[b].is_empty() {
            best[b] = own;
            continue;
        }
        let kids: f64 = tree.children[b].iter().map(|&ch| best[ch]).sum();
        if own <= kids + PARENT_TIE {
            best[b] = own;
        } else {
            best[b] = kids;
            keep[b] = false;
        }
    }
    let mut keys = Vec::with_capacity(dict.n);
    let mut stack = vec![tree.root()];
    while let Some(b) = stack.pop() {
        if keep[b] {
            keys.extend(tree.slots[b].iter().map(|&s| dict.keys[s]));
        } else {
            stack.extend(tree.children[b].iter().copied());
        }
    }
    (BasisSpec::new(keys), best[tree.root()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::build_partition_tree_midpoint;

    #[test]
    fn cost_examples() {
        assert_eq!(cost_eval(&[3.0, -4.0], &CostFunction::lp(1.0).unwrap()), 7.0);
        assert_eq!(cost_eval(&[0.0, 0.5, -2.0], &CostFunction::l0(0.0).unwrap()), 2.0);
        assert_eq!(cost_eval(&[1.0, 1.0], &CostFunction::lp(0.5).unwrap()), 2.0);
        assert!(CostFunction::lp(2.0).is_err());
    }

    #[test]
    fn every_level_has_n_keys() {
        for n in 1..40 {
            let d = Dictionary::new(build_partition_tree_midpoint(n).unwrap());
            assert_eq!(d.num_slots(), n * (d.jmax() + 1));
            for j in 0..=d.jmax() {
                assert_eq!(d.keys[j * n..(j + 1) * n].iter().filter(|k| k.j == j).count(), n);
            }
        }
    }

    #[test]
    fn haar_and_walsh_are_tilings() {
        for n in 1..30 {
            let d = Dictionary::new(build_partition_tree_midpoint(n).unwrap());
            d.validate_basis(&d.haar_basis()).unwrap();
            d.validate_basis(&d.walsh_basis()).unwrap();
        }
    }

    #[test]
    fn overlapping_keys_are_rejected() {
        let d = Dictionary::new(build_partition_tree_midpoint(4).unwrap());
        let mut keys = d.level_basis(1).keys().to_vec();
        keys[0] = TagKey::new(0, 0, 0);
        assert!(d.validate_basis(&BasisSpec::new(keys)).is_err());
    }
}
