//! Independent oracles and random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use eghwt::partition::{build_partition_tree_midpoint, build_partition_tree_spectral, relabel_tree, PartitionTree, RawTree};
use eghwt::{Dictionary, EigenConfig, Graph, TagKey};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Partition tree over `0..n` (path order) with uniformly random cut positions.
pub fn random_path_tree(rng: &mut ChaCha8Rng, n: usize) -> PartitionTree {
    let mut raw: RawTree = vec![vec![(0..n).collect()]];
    while raw.last().unwrap().iter().any(|r| r.len() > 1) {
        let mut next = Vec::new();
        for r in raw.last().unwrap() {
            if r.len() == 1 {
                next.push(r.clone());
            } else {
                let c = rng.random_range(1..r.len());
                next.push(r[..c].to_vec());
                next.push(r[c..].to_vec());
            }
        }
        raw.push(next);
    }
    relabel_tree(&raw).unwrap()
}

/// Like [`random_path_tree`], but every cut is at floor or ceil of half the region.
pub fn random_balanced_tree(rng: &mut ChaCha8Rng, n: usize) -> PartitionTree {
    let mut raw: RawTree = vec![vec![(0..n).collect()]];
    while raw.last().unwrap().iter().any(|r| r.len() > 1) {
        let mut next = Vec::new();
        for r in raw.last().unwrap() {
            if r.len() == 1 {
                next.push(r.clone());
            } else {
                let c = if rng.random_bool(0.5) { r.len() / 2 } else { r.len().div_ceil(2) };
                next.push(r[..c].to_vec());
                next.push(r[c..].to_vec());
            }
        }
        raw.push(next);
    }
    relabel_tree(&raw).unwrap()
}

/// Spectral tree of a path with random edge weights in [0.1, 2).
pub fn weighted_path_tree(rng: &mut ChaCha8Rng, n: usize) -> PartitionTree {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i, rng.random_range(0.1..2.0))).collect();
    let g = Graph::from_edges(n, edges).unwrap();
    build_partition_tree_spectral(&g, &EigenConfig::default()).unwrap()
}

/// A weighted-path spectral tree or a randomly balanced cut tree, with equal odds.
pub fn random_oracle_tree(rng: &mut ChaCha8Rng, n: usize) -> PartitionTree {
    if rng.random_bool(0.5) {
        weighted_path_tree(rng, n)
    } else {
        random_balanced_tree(rng, n)
    }
}

/// Connected graph: a random spanning tree plus extra random edges, weights in [0.1, 2).
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Graph {
    let mut edges: HashMap<(usize, usize), f64> = HashMap::new();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        let (a, b) = (order[i].min(parent), order[i].max(parent));
        edges.insert((a, b), rng.random_range(0.1..2.0));
    }
    for _ in 0..extra {
        if n < 2 {
            break;
        }
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.entry((a.min(b), a.max(b))).or_insert_with(|| rng.random_range(0.1..2.0));
        }
    }
    let mut list: Vec<_> = edges.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    list.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    Graph::from_edges(n, list).unwrap()
}

pub fn midpoint_dict(n: usize) -> Arc<Dictionary> {
    Dictionary::new(build_partition_tree_midpoint(n).unwrap())
}

/// Paley (natural) tag to sequency index: s(0) = 0, s(2p+b) = 2 s(p) + (b xor (s(p) & 1)).
pub fn paley_to_sequency(l: usize) -> usize {
    if l == 0 {
        return 0;
    }
    let s = paley_to_sequency(l >> 1);
    2 * s + ((l & 1) ^ (s & 1))
}

/// Classical sequency-ordered Walsh packets of length `len` (a power of two):
/// `W_{2s} = [W_s, (-1)^s W_s]/sqrt2`, `W_{2s+1} = [W_s, -(-1)^s W_s]/sqrt2`.
pub fn walsh_sequency(len: usize) -> Vec<Vec<f64>> {
    let mut w = vec![vec![1.0]];
    let mut cur = 1;
    while cur < len {
        let mut next = vec![Vec::new(); 2 * cur];
        for (s, v) in w.iter().enumerate() {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut even: Vec<f64> = v.iter().map(|x| x * h).collect();
            even.extend(v.iter().map(|x| sign * x * h));
            let mut odd: Vec<f64> = v.iter().map(|x| x * h).collect();
            odd.extend(v.iter().map(|x| -sign * x * h));
            next[2 * s] = even;
            next[2 * s + 1] = odd;
        }
        w = next;
        cur *= 2;
    }
    w
}

/// Classical packet table of `f` (length 2^m): `table[j][k][s]` is the inner
/// product of block `k` (length 2^{m-j}) with sequency packet `s`.
pub fn classical_table(f: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let n = f.len();
    let m = n.trailing_zeros() as usize;
    (0..=m)
        .map(|j| {
            let len = n >> j;
            let w = walsh_sequency(len);
            (0..1usize << j)
                .map(|k| w.iter().map(|v| v.iter().zip(&f[k * len..(k + 1) * len]).map(|(a, b)| a * b).sum()).collect())
                .collect()
        })
        .collect()
}

/// The coefficients of a dyadic midpoint dictionary laid out like
/// [`classical_table`]: `out[j][k][paley_to_sequency(l)] = c(j,k,l)`.
pub fn sequency_layout(c: &eghwt::CoeffTable) -> Vec<Vec<Vec<f64>>> {
    let n = c.dict().n();
    let m = n.trailing_zeros() as usize;
    (0..=m)
        .map(|j| {
            let len = n >> j;
            (0..1usize << j)
                .map(|k| {
                    let mut blk = vec![0.0; len];
                    for l in 0..len {
                        blk[paley_to_sequency(l)] = c.get(&TagKey::new(j, k, l)).unwrap();
                    }
                    blk
                })
                .collect()
        })
        .collect()
}

/// Flat-array Thiele-Villemoes search on a classical table. Returns the tiles
/// `(j, k, s)` and the cost. Ties keep the frequency split.
pub fn thiele_villemoes(table: &[Vec<Vec<f64>>], g: impl Fn(f64) -> f64) -> (BTreeSet<(usize, usize, usize)>, f64) {
    let big_m = table.len() - 1;
    // cost[m][j][k][s], choice[m][j][k][s] (true = time split)
    let mut cost: Vec<Vec<Vec<Vec<f64>>>> = vec![table.iter().map(|lvl| lvl.iter().map(|b| b.iter().map(|&x| g(x)).collect()).collect()).collect()];
    let mut choice: Vec<Vec<Vec<Vec<bool>>>> = vec![Vec::new()];
    for m in 1..=big_m {
        let prev = &cost[m - 1];
        let mut cm = Vec::new();
        let mut chm = Vec::new();
        for j in 0..=big_m - m {
            let mut cj = Vec::new();
            let mut chj = Vec::new();
            for k in 0..1usize << j {
                let nfreq = 1usize << (big_m - j - m);
                let mut ck = Vec::with_capacity(nfreq);
                let mut chk = Vec::with_capacity(nfreq);
                for s in 0..nfreq {
                    let freq = prev[j][k][2 * s] + prev[j][k][2 * s + 1];
                    let time = prev[j + 1][2 * k][s] + prev[j + 1][2 * k + 1][s];
                    if freq <= time {
                        ck.push(freq);
                        chk.push(false);
                    } else {
                        ck.push(time);
                        chk.push(true);
                    }
                }
                cj.push(ck);
                chj.push(chk);
            }
            cm.push(cj);
            chm.push(chj);
        }
        cost.push(cm);
        choice.push(chm);
    }
    let mut tiles = BTreeSet::new();
    let mut stack = vec![(big_m, 0usize, 0usize, 0usize)];
    while let Some((m, j, k, s)) = stack.pop() {
        if m == 0 {
            tiles.insert((j, k, s));
        } else if choice[m][j][k][s] {
            stack.push((m - 1, j + 1, 2 * k, s));
            stack.push((m - 1, j + 1, 2 * k + 1, s));
        } else {
            stack.push((m - 1, j, k, 2 * s));
            stack.push((m - 1, j, k, 2 * s + 1));
        }
    }
    (tiles, cost[big_m][0][0][0])
}

/// Classical 2D packet table: `t[(jr,kr,sr)][(jc,kc,sc)]` via tensor of 1D classical transforms.
pub fn classical_table_2d(img: &Array2<f64>) -> HashMap<((usize, usize, usize), (usize, usize, usize)), f64> {
    let (rows, cols) = img.dim();
    // analyze every column
    let col_tables: Vec<Vec<Vec<Vec<f64>>>> = (0..cols).map(|c| classical_table(&img.column(c).to_vec())).collect();
    let mut out = HashMap::new();
    let mr = rows.trailing_zeros() as usize;
    for jr in 0..=mr {
        for kr in 0..1usize << jr {
            for sr in 0..rows >> jr {
                let row: Vec<f64> = (0..cols).map(|c| col_tables[c][jr][kr][sr]).collect();
                let t = classical_table(&row);
                for (jc, lvl) in t.iter().enumerate() {
                    for (kc, blk) in lvl.iter().enumerate() {
                        for (sc, &v) in blk.iter().enumerate() {
                            out.insert(((jr, kr, sr), (jc, kc, sc)), v);
                        }
                    }
                }
            }
        }
    }
    out
}

/// A tensor coefficient table of two dyadic midpoint dictionaries laid out like [`classical_table_2d`].
pub fn sequency_layout_2d(tc: &eghwt::TensorCoeffTable) -> HashMap<((usize, usize, usize), (usize, usize, usize)), f64> {
    let mut out = HashMap::new();
    for kr in tc.rows().c2f_view() {
        for kc in tc.cols().c2f_view() {
            let v = tc.get(&eghwt::TensorKey { row: *kr, col: *kc }).unwrap();
            out.insert(((kr.j, kr.k, paley_to_sequency(kr.l)), (kc.j, kc.k, paley_to_sequency(kc.l))), v);
        }
    }
    out
}

type Tile = (usize, usize, usize);

/// Flat Lindberg-Villemoes search on a classical 2D table, tie order
/// row-frequency, column-frequency, row-time, column-time.
pub fn lindberg_villemoes(
    table: &HashMap<(Tile, Tile), f64>,
    rows: usize,
    cols: usize,
    g: impl Fn(f64) -> f64,
) -> (BTreeSet<(Tile, Tile)>, f64) {
    let (mr, mc) = (rows.trailing_zeros() as usize, cols.trailing_zeros() as usize);
    let blocks = |big: usize, m: usize| -> Vec<Tile> {
        let mut v = Vec::new();
        for j in 0..=big - m {
            for k in 0..1usize << j {
                for s in 0..1usize << (big - j - m) {
                    v.push((j, k, s));
                }
            }
        }
        v
    };
    type Key = (usize, Tile, usize, Tile);
    let mut cost: HashMap<Key, f64> = HashMap::new();
    let mut choice: HashMap<Key, u8> = HashMap::new();
    for s_tot in 0..=mr + mc {
        for a in 0..=mr {
            if s_tot < a || s_tot - a > mc {
                continue;
            }
            let b = s_tot - a;
            for rb in blocks(mr, a) {
                for cb in blocks(mc, b) {
                    let key = (a, rb, b, cb);
                    if a == 0 && b == 0 {
                        cost.insert(key, g(table[&(rb, cb)]));
                        continue;
                    }
                    let (j, k, s) = rb;
                    let (jc, kc, sc) = cb;
                    let mut opts: Vec<(f64, u8)> = Vec::new();
                    if a > 0 {
                        opts.push((cost[&(a - 1, (j, k, 2 * s), b, cb)] + cost[&(a - 1, (j, k, 2 * s + 1), b, cb)], 0));
                    }
                    if b > 0 {
                        opts.push((cost[&(a, rb, b - 1, (jc, kc, 2 * sc))] + cost[&(a, rb, b - 1, (jc, kc, 2 * sc + 1))], 1));
                    }
                    if a > 0 {
                        opts.push((cost[&(a - 1, (j + 1, 2 * k, s), b, cb)] + cost[&(a - 1, (j + 1, 2 * k + 1, s), b, cb)], 2));
                    }
                    if b > 0 {
                        opts.push((cost[&(a, rb, b - 1, (jc + 1, 2 * kc, sc))] + cost[&(a, rb, b - 1, (jc + 1, 2 * kc + 1, sc))], 3));
                    }
                    let mut best = opts[0];
                    for &o in &opts[1..] {
                        if o.0 < best.0 {
                            best = o;
                        }
                    }
                    cost.insert(key, best.0);
                    choice.insert(key, best.1);
                }
            }
        }
    }
    let mut tiles = BTreeSet::new();
    let mut stack = vec![(mr, (0, 0, 0), mc, (0, 0, 0))];
    while let Some(key) = stack.pop() {
        let (a, (j, k, s), b, (jc, kc, sc)) = key;
        if a == 0 && b == 0 {
            tiles.insert(((j, k, s), (jc, kc, sc)));
            continue;
        }
        match choice[&key] {
            0 => stack.extend([(a - 1, (j, k, 2 * s), b, key.3), (a - 1, (j, k, 2 * s + 1), b, key.3)]),
            1 => stack.extend([(a, key.1, b - 1, (jc, kc, 2 * sc)), (a, key.1, b - 1, (jc, kc, 2 * sc + 1))]),
            2 => stack.extend([(a - 1, (j + 1, 2 * k, s), b, key.3), (a - 1, (j + 1, 2 * k + 1, s), b, key.3)]),
            _ => stack.extend([(a, key.1, b - 1, (jc + 1, 2 * kc, sc)), (a, key.1, b - 1, (jc + 1, 2 * kc + 1, sc))]),
        }
    }
    (tiles, cost[&(mr, (0, 0, 0), mc, (0, 0, 0))])
}

/// All tilings of a 2D block reachable by the four-way split recursion on
/// two dictionaries, by explicit enumeration (each tiling a sorted key list).
pub fn all_tilings_2d(rows: &Dictionary, cols: &Dictionary) -> Vec<Vec<(TagKey, TagKey)>> {
    type Blk = (usize, TagKey);
    fn exists(d: &Dictionary, b: Blk) -> bool {
        if b.0 == 0 {
            return d.contains(&b.1);
        }
        let (m, t) = b;
        [
            TagKey::new(t.j, t.k, 2 * t.l),
            TagKey::new(t.j, t.k, 2 * t.l + 1),
            TagKey::new(t.j + 1, 2 * t.k, t.l),
            TagKey::new(t.j + 1, 2 * t.k + 1, t.l),
        ]
        .iter()
        .any(|&c| exists(d, (m - 1, c)))
    }
    fn rec(
        rows: &Dictionary,
        cols: &Dictionary,
        r: Blk,
        c: Blk,
        memo: &mut HashMap<(Blk, Blk), Vec<Vec<(TagKey, TagKey)>>>,
    ) -> Vec<Vec<(TagKey, TagKey)>> {
        if !exists(rows, r) || !exists(cols, c) {
            return vec![Vec::new()];
        }
        if let Some(v) = memo.get(&(r, c)) {
            return v.clone();
        }
        let mut out: BTreeSet<Vec<(TagKey, TagKey)>> = BTreeSet::new();
        if r.0 == 0 && c.0 == 0 {
            out.insert(vec![(r.1, c.1)]);
        }
        let mut splits: Vec<[(Blk, Blk); 2]> = Vec::new();
        if r.0 > 0 {
            let t = r.1;
            splits.push([((r.0 - 1, TagKey::new(t.j, t.k, 2 * t.l)), c), ((r.0 - 1, TagKey::new(t.j, t.k, 2 * t.l + 1)), c)]);
            splits.push([((r.0 - 1, TagKey::new(t.j + 1, 2 * t.k, t.l)), c), ((r.0 - 1, TagKey::new(t.j + 1, 2 * t.k + 1, t.l)), c)]);
        }
        if c.0 > 0 {
            let t = c.1;
            splits.push([(r, (c.0 - 1, TagKey::new(t.j, t.k, 2 * t.l))), (r, (c.0 - 1, TagKey::new(t.j, t.k, 2 * t.l + 1)))]);
            splits.push([(r, (c.0 - 1, TagKey::new(t.j + 1, 2 * t.k, t.l))), (r, (c.0 - 1, TagKey::new(t.j + 1, 2 * t.k + 1, t.l)))]);
        }
        for [(r1, c1), (r2, c2)] in splits {
            let a = rec(rows, cols, r1, c1, memo);
            let b = rec(rows, cols, r2, c2, memo);
            for x in &a {
                for y in &b {
                    let mut v: Vec<(TagKey, TagKey)> = x.iter().chain(y).copied().collect();
                    v.sort();
                    out.insert(v);
                }
            }
        }
        let v: Vec<_> = out.into_iter().collect();
        memo.insert((r, c), v.clone());
        v
    }
    let root = TagKey::new(0, 0, 0);
    rec(rows, cols, (rows.jmax(), root), (cols.jmax(), root), &mut HashMap::new())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
