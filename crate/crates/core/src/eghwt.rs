//! The eGHWT best-basis search.
//!
//! A stage-`m` block `(j, k, l)` is the union of the tiles of the `2^m` keys it
//! contains. It can be split in sequency, into `(j, k, 2l)` and `(j, k, 2l+1)`,
//! or in time, into `(j+1, 2k, l)` and `(j+1, 2k+1, l)`, both at stage `m-1`.
//! The search keeps for every block the cheaper of the two splits; fictitious
//! blocks cost nothing and contribute no keys.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::ghwt::{BasisSpec, CoeffTable, CostFunction, Dictionary, TagKey};

/// Cost array `A_m`.
pub type CostArray = HashMap<TagKey, f64>;
/// Choice array `I_m`: 0 keeps the sequency split, 1 the time split.
pub type ChoiceArray = HashMap<TagKey, u8>;

pub const SEQUENCY: u8 = 0;
pub const TIME: u8 = 1;

fn seq_children(p: TagKey) -> [TagKey; 2] {
    [TagKey::new(p.j, p.k, 2 * p.l), TagKey::new(p.j, p.k, 2 * p.l + 1)]
}

fn time_children(p: TagKey) -> [TagKey; 2] {
    [TagKey::new(p.j + 1, 2 * p.k, p.l), TagKey::new(p.j + 1, 2 * p.k + 1, p.l)]
}

/// Keys of the next stage: every block with a child among `keys`.
fn next_stage_keys<'a>(keys: impl Iterator<Item = &'a TagKey>, jmax: usize, m: usize) -> BTreeSet<TagKey> {
    let top = jmax - m - 1;
    let mut out = BTreeSet::new();
    for key in keys {
        if key.j <= top {
            out.insert(TagKey::new(key.j, key.k, key.l / 2));
        }
        if key.j >= 1 {
            out.insert(TagKey::new(key.j - 1, key.k / 2, key.l));
        }
    }
    out
}

/// Full record of a search: the stage arrays `A_m`, `I_m` for `m = 0..=jmax`.
#[derive(Debug, Clone)]
pub struct EghwtTrace {
    pub basis: BasisSpec,
    pub cost: f64,
    pub costs: Vec<CostArray>,
    pub choices: Vec<ChoiceArray>,
}

pub fn eghwt_best_basis(c: &CoeffTable, cost: &CostFunction) -> (BasisSpec, f64) {
    let (basis, total, _) = search(c, cost, false);
    (basis, total)
}

/// Like [`eghwt_best_basis`] but keeps every stage array for inspection.
pub fn eghwt_best_basis_traced(c: &CoeffTable, cost: &CostFunction) -> EghwtTrace {
    let (basis, total, trace) = search(c, cost, true);
    let (costs, choices) = trace.unwrap();
    EghwtTrace { basis, cost: total, costs, choices }
}

#[allow(clippy::type_complexity)]
fn search(
    c: &CoeffTable,
    cost: &CostFunction,
    keep: bool,
) -> (BasisSpec, f64, Option<(Vec<CostArray>, Vec<ChoiceArray>)>) {
    let jmax = c.dict().jmax();
    let mut a: CostArray = c.iter().map(|(key, v)| (key, cost.g(v))).collect();
    let mut choices: Vec<ChoiceArray> = vec![ChoiceArray::new()];
    let mut kept_costs = Vec::new();

    for m in 0..jmax {
        let parents = next_stage_keys(a.keys(), jmax, m);
        let get = |key: &TagKey| a.get(key).copied().unwrap_or(0.0);
        let mut next = CostArray::with_capacity(parents.len());
        let mut pick = ChoiceArray::with_capacity(parents.len());
        for p in parents {
            let [d, u] = seq_children(p);
            let [l, r] = time_children(p);
            let seq = get(&d) + get(&u);
            let time = get(&l) + get(&r);
            if seq <= time {
                next.insert(p, seq);
                pick.insert(p, SEQUENCY);
            } else {
                next.insert(p, time);
                pick.insert(p, TIME);
            }
        }
        let prev = std::mem::replace(&mut a, next);
        if keep {
            kept_costs.push(prev);
        }
        choices.push(pick);
    }
    let root = TagKey::new(0, 0, 0);
    let total = a[&root];
    if keep {
        kept_costs.push(a);
    }

    let mut selected = vec![root];
    for m in (1..=jmax).rev() {
        let exists = |key: &TagKey| if m == 1 { c.dict().contains(key) } else { choices[m - 1].contains_key(key) };
        let mut below = Vec::with_capacity(2 * selected.len());
        for key in selected {
            let kids = if choices[m][&key] == SEQUENCY { seq_children(key) } else { time_children(key) };
            below.extend(kids.into_iter().filter(|k| exists(k)));
        }
        selected = below;
    }
    debug_assert_eq!(selected.len(), c.dict().n());
    let trace = keep.then_some((kept_costs, choices));
    (BasisSpec::new(selected), total, trace)
}

/// Blocks of every stage with links to their split children.
#[derive(Debug, Clone)]
pub(crate) struct Lattice {
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone)]
pub(crate) struct Stage {
    pub keys: Vec<TagKey>,
    pub seq: Vec<[Option<u32>; 2]>,
    pub time: Vec<[Option<u32>; 2]>,
}

impl Lattice {
    /// Stage 0 lists the dictionary keys in slot order, so indices are slots.
    pub fn new(dict: &Dictionary) -> Self {
        let jmax = dict.jmax();
        let mut stages = vec![Stage {
            keys: dict.c2f_view().to_vec(),
            seq: vec![[None, None]; dict.num_slots()],
            time: vec![[None, None]; dict.num_slots()],
        }];
        for m in 0..jmax {
            let prev = &stages[m];
            let index: HashMap<TagKey, u32> = prev.keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
            let keys: Vec<TagKey> = next_stage_keys(prev.keys.iter(), jmax, m).into_iter().collect();
            let look = |pair: [TagKey; 2]| [index.get(&pair[0]).copied(), index.get(&pair[1]).copied()];
            let seq = keys.iter().map(|&p| look(seq_children(p))).collect();
            let time = keys.iter().map(|&p| look(time_children(p))).collect();
            stages.push(Stage { keys, seq, time });
        }
        Lattice { stages }
    }

    pub fn top(&self) -> usize {
        self.stages.len() - 1
    }

    /// Stage-`m-2` quadrants of a stage-`m` block, in the order (D,L), (D,R), (U,L), (U,R).
    fn quadrants(&self, m: usize, i: usize) -> [Option<u32>; 4] {
        let below = &self.stages[m - 1];
        let [d, u] = self.stages[m].seq[i];
        let part = |x: Option<u32>| x.map_or([None, None], |x| below.time[x as usize]);
        let (dq, uq) = (part(d), part(u));
        [dq[0], dq[1], uq[0], uq[1]]
    }
}

/// Number of choosable orthonormal bases: the tilings reachable by sequency
/// and time splits from the root block.
pub fn count_onbs(dict: &Dictionary) -> BigUint {
    let lat = Lattice::new(dict);
    let one = BigUint::from(1u32);
    let mut prev: Vec<BigUint> = vec![one.clone(); lat.stages[0].keys.len()];
    let mut prev2: Vec<BigUint> = Vec::new();
    for m in 1..=lat.top() {
        let st = &lat.stages[m];
        let c = |v: &Vec<BigUint>, x: Option<u32>| x.map_or(one.clone(), |x| v[x as usize].clone());
        let cur: Vec<BigUint> = (0..st.keys.len())
            .map(|i| {
                let [d, u] = st.seq[i];
                let [l, r] = st.time[i];
                let both = c(&prev, d) * c(&prev, u) + c(&prev, l) * c(&prev, r);
                if m == 1 {
                    both
                } else {
                    let q = lat.quadrants(m, i);
                    both - q.iter().fold(one.clone(), |acc, &x| acc * c(&prev2, x))
                }
            })
            .collect();
        prev2 = std::mem::replace(&mut prev, cur);
    }
    prev.into_iter().next().expect("root block exists")
}

/// Largest dimension for which tilings are listed explicitly.
pub const LIST_MAX_N: usize = 16;
/// Largest number of tilings materialized by listing.
pub const LIST_MAX_COUNT: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct OnbEnumeration {
    pub count: BigUint,
    pub bases: Option<Vec<BasisSpec>>,
}

/// Counts the choosable ONBs and, when `list` is set, lists them.
pub fn enumerate_onbs(dict: &Dictionary, list: bool) -> Result<OnbEnumeration> {
    let count = count_onbs(dict);
    let bases = if list {
        let sets = list_tilings(dict)?;
        Some(sets.into_iter().map(|s| BasisSpec::new(s.into_iter().map(|x| dict.key(x as usize)).collect())).collect())
    } else {
        None
    };
    Ok(OnbEnumeration { count, bases })
}

/// Largest number of root tilings scanned by [`exhaustive_best_basis`].
pub const EXHAUSTIVE_MAX_COUNT: usize = 20_000_000;

type Family = HashMap<Vec<u32>, f64>;

fn check_size(dict: &Dictionary, limit: usize) -> Result<()> {
    if dict.n() > LIST_MAX_N {
        return Err(Error::TooLarge { what: format!("listing tilings for n = {}", dict.n()), limit: LIST_MAX_N });
    }
    let total = count_onbs(dict);
    if total > BigUint::from(limit) {
        return Err(Error::TooLarge { what: format!("listing {total} tilings"), limit });
    }
    Ok(())
}

/// Tiling families of every block of stage `upto`, each tiling (a sorted slot
/// list) carrying the minimum over its split derivations of the
/// derivation-ordered cost sum.
fn families(lat: &Lattice, costs: Option<&[f64]>, upto: usize) -> Vec<Family> {
    let mut prev: Vec<Family> = (0..lat.stages[0].keys.len())
        .map(|s| std::iter::once((vec![s as u32], costs.map_or(0.0, |c| c[s]))).collect())
        .collect();
    let empty: Family = std::iter::once((Vec::new(), 0.0)).collect();
    for m in 1..=upto {
        let st = &lat.stages[m];
        let fam = |x: Option<u32>| x.map_or(&empty, |x| &prev[x as usize]);
        let mut cur = Vec::with_capacity(st.keys.len());
        for i in 0..st.keys.len() {
            let mut out: Family = HashMap::new();
            for [a, b] in [st.seq[i], st.time[i]] {
                for (sa, ca) in fam(a) {
                    for (sb, cb) in fam(b) {
                        let mut s: Vec<u32> = sa.iter().chain(sb).copied().collect();
                        s.sort_unstable();
                        let c = ca + cb;
                        out.entry(s).and_modify(|v| *v = v.min(c)).or_insert(c);
                    }
                }
            }
            cur.push(out);
        }
        prev = cur;
    }
    prev
}

fn list_tilings(dict: &Dictionary) -> Result<Vec<Vec<u32>>> {
    check_size(dict, LIST_MAX_COUNT)?;
    let lat = Lattice::new(dict);
    let mut all: Vec<Vec<u32>> = families(&lat, None, lat.top()).swap_remove(0).into_keys().collect();
    all.sort_unstable();
    Ok(all)
}

/// Minimum cost over every enumerated tiling, by explicit enumeration (n <= 16).
/// Among equal costs the lexicographically smallest key set is returned.
///
/// Blocks below the root keep deduplicated tiling families. The root stage is
/// scanned pair by pair without being stored; a tiling reachable by both
/// splits is simply seen twice, which cannot change the minimum.
pub fn exhaustive_best_basis(c: &CoeffTable, cost: &CostFunction) -> Result<(BasisSpec, f64)> {
    let dict = c.dict();
    check_size(dict, EXHAUSTIVE_MAX_COUNT)?;
    let g: Vec<f64> = c.values().iter().map(|&v| cost.g(v)).collect();
    let lat = Lattice::new(dict);
    let top = lat.top();
    let to_basis = |set: &[u32]| BasisSpec::new(set.iter().map(|&s| dict.key(s as usize)).collect());
    if top == 0 {
        let set: Vec<u32> = vec![0];
        return Ok((to_basis(&set), g[0]));
    }
    let below = families(&lat, Some(&g), top - 1);
    let empty: Family = std::iter::once((Vec::new(), 0.0)).collect();
    let fam = |x: Option<u32>| x.map_or(&empty, |x| &below[x as usize]);
    let root = &lat.stages[top];
    let mut best: Option<(Vec<u32>, f64)> = None;
    for [a, b] in [root.seq[0], root.time[0]] {
        for (sa, ca) in fam(a) {
            for (sb, cb) in fam(b) {
                let v = ca + cb;
                let better = match &best {
                    None => true,
                    Some((_, bv)) if v < *bv => true,
                    Some((bs, bv)) if v == *bv => {
                        let mut s: Vec<u32> = sa.iter().chain(sb).copied().collect();
                        s.sort_unstable();
                        s < *bs
                    }
                    _ => false,
                };
                if better {
                    let mut s: Vec<u32> = sa.iter().chain(sb).copied().collect();
                    s.sort_unstable();
                    best = Some((s, v));
                }
            }
        }
    }
    let (set, v) = best.expect("at least one tiling");
    Ok((to_basis(&set), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::build_partition_tree_midpoint;

    fn dict(n: usize) -> std::sync::Arc<Dictionary> {
        Dictionary::new(build_partition_tree_midpoint(n).unwrap())
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_onbs(&dict(1)), BigUint::from(1u32));
        assert_eq!(count_onbs(&dict(2)), BigUint::from(2u32));
        assert_eq!(count_onbs(&dict(4)), BigUint::from(7u32));
        assert_eq!(count_onbs(&dict(8)), BigUint::from(82u32));
    }

    #[test]
    fn listing_matches_count_on_small_midpoint_trees() {
        for n in 1..=12 {
            let d = dict(n);
            let e = enumerate_onbs(&d, true).unwrap();
            assert_eq!(BigUint::from(e.bases.unwrap().len()), e.count, "n = {n}");
        }
    }

    #[test]
    fn listing_refuses_large_inputs() {
        assert!(matches!(enumerate_onbs(&dict(17), true), Err(Error::TooLarge { .. })));
    }
}
