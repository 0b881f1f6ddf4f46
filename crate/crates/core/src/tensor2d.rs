//! Matrix signals on the tensor product of a row tree and a column tree.
//!
//! A 2D block pairs a row block and a column block (each a stage and a key of
//! its own axis). The best-basis search splits a block four ways: sequency or
//! time along rows, sequency or time along columns. Blocks are processed by
//! increasing total stage so that only two diagonals of costs are alive.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eghwt::Lattice;
use crate::error::{Error, Result};
use crate::ghwt::{block_contains, cw_search, BasisSpec, CostFunction, Dictionary, Ordering, TagKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TensorKey {
    pub row: TagKey,
    pub col: TagKey,
}

/// GHWT coefficients of a matrix: `values[row_slot * col_slots + col_slot]`.
#[derive(Debug, Clone)]
pub struct TensorCoeffTable {
    rows: Arc<Dictionary>,
    cols: Arc<Dictionary>,
    values: Vec<f64>,
}

impl TensorCoeffTable {
    pub fn rows(&self) -> &Arc<Dictionary> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<Dictionary> {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, key: &TensorKey) -> Option<f64> {
        let r = self.rows.slot(&key.row)?;
        let c = self.cols.slot(&key.col)?;
        Some(self.values[r * self.cols.num_slots() + c])
    }

    pub fn restrict(&self, keys: &[TensorKey]) -> Result<Vec<(TensorKey, f64)>> {
        keys.iter()
            .map(|k| {
                self.get(k).map(|v| (*k, v)).ok_or_else(|| Error::InvalidTiling(format!("key {k:?} is fictitious")))
            })
            .collect()
    }

    pub fn cost_of(&self, keys: &[TensorKey], cost: &CostFunction) -> Result<f64> {
        Ok(self.restrict(keys)?.iter().map(|&(_, v)| cost.g(v)).sum())
    }
}

/// Analyzes every column with the row tree, then every coefficient row with the column tree.
pub fn tensor_analyze(img: &Array2<f64>, rows: &Arc<Dictionary>, cols: &Arc<Dictionary>) -> Result<TensorCoeffTable> {
    let (m, n) = img.dim();
    if m != rows.n() || n != cols.n() {
        return Err(Error::SizeMismatch(format!(
            "image is {m}x{n} but the trees have {} and {} nodes",
            rows.n(),
            cols.n()
        )));
    }
    let data: Vec<f64> = img.iter().copied().collect();
    let stage1 = rows.analyze_lanes(&data, n);
    let ncs = cols.num_slots();
    let mut values = vec![0.0; rows.num_slots() * ncs];
    values.par_chunks_mut(ncs).zip(stage1.par_chunks(n)).for_each(|(out, row)| {
        out.copy_from_slice(&cols.analyze_lanes(row, 1));
    });
    Ok(TensorCoeffTable { rows: Arc::clone(rows), cols: Arc::clone(cols), values })
}

/// Sum of `coeff * (psi_row outer psi_col)`. The keys must be pairwise
/// disjoint in a way the four-way split recursion can certify.
pub fn tensor_synthesize(
    coeffs: &[(TensorKey, f64)],
    rows: &Arc<Dictionary>,
    cols: &Arc<Dictionary>,
) -> Result<Array2<f64>> {
    let keys: Vec<TensorKey> = coeffs.iter().map(|c| c.0).collect();
    check_disjoint_2d(&keys, rows, cols)?;
    tensor_combine(coeffs, rows, cols)
}

/// Linear combination of tensor atoms without any tiling check.
pub fn tensor_combine(coeffs: &[(TensorKey, f64)], rows: &Arc<Dictionary>, cols: &Arc<Dictionary>) -> Result<Array2<f64>> {
    let (m, n) = (rows.n(), cols.n());
    let ncs = cols.num_slots();
    let mut by_row: HashMap<usize, Vec<f64>> = HashMap::new();
    for (key, v) in coeffs {
        let r = rows.slot(&key.row).ok_or(Error::FictitiousKey(key.row))?;
        let c = cols.slot(&key.col).ok_or(Error::FictitiousKey(key.col))?;
        by_row.entry(r).or_insert_with(|| vec![0.0; ncs])[c] += v;
    }
    let mut buf = vec![0.0; rows.num_slots() * n];
    let mut entries: Vec<(usize, Vec<f64>)> = by_row.into_iter().collect();
    entries.sort_unstable_by_key(|e| e.0);
    let synthesized: Vec<(usize, Vec<f64>)> =
        entries.into_par_iter().map(|(r, cbuf)| (r, cols.synthesize_lanes(cbuf, 1))).collect();
    for (r, row) in synthesized {
        buf[r * n..(r + 1) * n].copy_from_slice(&row);
    }
    let out = rows.synthesize_lanes(buf, n);
    Ok(Array2::from_shape_vec((m, n), out).expect("shape matches"))
}

/// Checks that tensor keys exist and have disjoint tiles.
pub fn check_disjoint_2d(keys: &[TensorKey], rows: &Dictionary, cols: &Dictionary) -> Result<()> {
    for k in keys {
        if !rows.contains(&k.row) {
            return Err(Error::FictitiousKey(k.row));
        }
        if !cols.contains(&k.col) {
            return Err(Error::FictitiousKey(k.col));
        }
    }
    let root = TagKey::new(0, 0, 0);
    if disjoint_2d(keys.to_vec(), (rows.jmax(), root), (cols.jmax(), root)) {
        Ok(())
    } else {
        Err(Error::InvalidTiling("tensor tiles overlap or admit no split".into()))
    }
}

/// Validates a full 2D basis: `M*N` disjoint keys.
pub fn validate_basis_2d(keys: &[TensorKey], rows: &Dictionary, cols: &Dictionary) -> Result<()> {
    if keys.len() != rows.n() * cols.n() {
        return Err(Error::InvalidTiling(format!("{} keys for dimension {}", keys.len(), rows.n() * cols.n())));
    }
    check_disjoint_2d(keys, rows, cols)
}

type Block = (usize, TagKey);

fn disjoint_2d(keys: Vec<TensorKey>, r: Block, c: Block) -> bool {
    if keys.len() <= 1 {
        return true;
    }
    let time = |b: Block| [TagKey::new(b.1.j + 1, 2 * b.1.k, b.1.l), TagKey::new(b.1.j + 1, 2 * b.1.k + 1, b.1.l)];
    let seq = |b: Block| [TagKey::new(b.1.j, b.1.k, 2 * b.1.l), TagKey::new(b.1.j, b.1.k, 2 * b.1.l + 1)];
    if r.0 > 0 {
        if keys.iter().all(|x| x.row.j > r.1.j) {
            let [a, b] = time(r);
            let (p, q) = keys.into_iter().partition(|x| block_contains(r.0 - 1, a, &x.row));
            return disjoint_2d(p, (r.0 - 1, a), c) && disjoint_2d(q, (r.0 - 1, b), c);
        }
        if keys.iter().all(|x| x.row.j < r.1.j + r.0) {
            let [a, b] = seq(r);
            let (p, q) = keys.into_iter().partition(|x| block_contains(r.0 - 1, a, &x.row));
            return disjoint_2d(p, (r.0 - 1, a), c) && disjoint_2d(q, (r.0 - 1, b), c);
        }
    }
    if c.0 > 0 {
        if keys.iter().all(|x| x.col.j > c.1.j) {
            let [a, b] = time(c);
            let (p, q) = keys.into_iter().partition(|x| block_contains(c.0 - 1, a, &x.col));
            return disjoint_2d(p, r, (c.0 - 1, a)) && disjoint_2d(q, r, (c.0 - 1, b));
        }
        if keys.iter().all(|x| x.col.j < c.1.j + c.0) {
            let [a, b] = seq(c);
            let (p, q) = keys.into_iter().partition(|x| block_contains(c.0 - 1, a, &x.col));
            return disjoint_2d(p, r, (c.0 - 1, a)) && disjoint_2d(q, r, (c.0 - 1, b));
        }
    }
    false
}

/// Tensor product of a row basis and a column basis.
pub fn tensor_basis(row: &BasisSpec, col: &BasisSpec) -> Vec<TensorKey> {
    row.keys().iter().flat_map(|&r| col.keys().iter().map(move |&c| TensorKey { row: r, col: c })).collect()
}

const ROW_SEQ: u8 = 0;
const COL_SEQ: u8 = 1;
const ROW_TIME: u8 = 2;
const COL_TIME: u8 = 3;
const LEAF: u8 = 4;

/// The 2D eGHWT best basis. Ties keep the first of row-sequency,
/// column-sequency, row-time, column-time.
pub fn eghwt2d_best_basis(tc: &TensorCoeffTable, cost: &CostFunction) -> (Vec<TensorKey>, f64) {
    let lr = Lattice::new(&tc.rows);
    let lc = Lattice::new(&tc.cols);
    let (jr, jc) = (lr.top(), lc.top());
    let nr = |m: usize| lr.stages[m].keys.len();
    let nc = |m: usize| lc.stages[m].keys.len();
    let ncs = tc.cols.num_slots();
    let leaf_cost = |ir: usize, ic: usize| cost.g(tc.values[ir * ncs + ic]);

    let mut choices: Vec<Vec<Vec<u8>>> = (0..=jr).map(|_| vec![Vec::new(); jc + 1]).collect();
    let mut prev: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut root_cost = if jr == 0 && jc == 0 { leaf_cost(0, 0) } else { f64::NAN };
    choices[0][0] = vec![LEAF; nr(0) * nc(0)];

    for s in 1..=jr + jc {
        let mut cur: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        for mr in s.saturating_sub(jc)..=s.min(jr) {
            let mc = s - mr;
            let (rows_n, cols_n) = (nr(mr), nc(mc));
            let below_r = (mr > 0).then(|| (prev.get(&(mr - 1, mc)), nc(mc)));
            let below_c = (mc > 0).then(|| (prev.get(&(mr, mc - 1)), nc(mc - 1)));
            let get = |src: Option<&Vec<f64>>, width: usize, i: Option<u32>, j: Option<u32>| -> f64 {
                match (i, j) {
                    (Some(i), Some(j)) => match src {
                        Some(v) => v[i as usize * width + j as usize],
                        None => leaf_cost(i as usize, j as usize),
                    },
                    _ => 0.0,
                }
            };
            let mut costs = vec![0.0; rows_n * cols_n];
            let mut pick = vec![0u8; rows_n * cols_n];
            costs.par_chunks_mut(cols_n).zip(pick.par_chunks_mut(cols_n)).enumerate().for_each(|(ir, (crow, prow))| {
                let rs = &lr.stages[mr];
                let cs = &lc.stages[mc];
                for ic in 0..cols_n {
                    let ici = Some(ic as u32);
                    let iri = Some(ir as u32);
                    let mut best = f64::INFINITY;
                    let mut ch = LEAF;
                    let mut consider = |v: f64, c: u8| {
                        if v < best {
                            best = v;
                            ch = c;
                        }
                    };
                    if let Some((src, w)) = below_r {
                        let [a, b] = rs.seq[ir];
                        consider(get(src, w, a, ici) + get(src, w, b, ici), ROW_SEQ);
                    }
                    if let Some((src, w)) = below_c {
                        let [a, b] = cs.seq[ic];
                        consider(get(src, w, iri, a) + get(src, w, iri, b), COL_SEQ);
                    }
                    if let Some((src, w)) = below_r {
                        let [a, b] = rs.time[ir];
                        consider(get(src, w, a, ici) + get(src, w, b, ici), ROW_TIME);
                    }
                    if let Some((src, w)) = below_c {
                        let [a, b] = cs.time[ic];
                        consider(get(src, w, iri, a) + get(src, w, iri, b), COL_TIME);
                    }
                    crow[ic] = best;
                    prow[ic] = ch;
                }
            });
            choices[mr][mc] = pick;
            cur.insert((mr, mc), costs);
        }
        prev = cur;
        if s == jr + jc {
            root_cost = prev[&(jr, jc)][0];
        }
    }

    let mut keys = Vec::with_capacity(tc.rows.n() * tc.cols.n());
    let mut stack = vec![(jr, 0usize, jc, 0usize)];
    while let Some((mr, ir, mc, ic)) = stack.pop() {
        let ch = choices[mr][mc][ir * nc(mc) + ic];
        let push_r = |stack: &mut Vec<_>, pair: [Option<u32>; 2]| {
            for x in pair.into_iter().flatten() {
                stack.push((mr - 1, x as usize, mc, ic));
            }
        };
        let push_c = |stack: &mut Vec<_>, pair: [Option<u32>; 2]| {
            for x in pair.into_iter().flatten() {
                stack.push((mr, ir, mc - 1, x as usize));
            }
        };
        match ch {
            LEAF => keys.push(TensorKey { row: lr.stages[0].keys[ir], col: lc.stages[0].keys[ic] }),
            ROW_SEQ => push_r(&mut stack, lr.stages[mr].seq[ir]),
            ROW_TIME => push_r(&mut stack, lr.stages[mr].time[ir]),
            COL_SEQ => push_c(&mut stack, lc.stages[mc].seq[ic]),
            _ => push_c(&mut stack, lc.stages[mc].time[ic]),
        }
    }
    keys.sort_unstable();
    (keys, root_cost)
}

/// Separable c2f (or f2c) best basis. The row basis is the
/// Coifman-Wickerhauser choice for all columns at once, with slot costs summed
/// over the pixel columns; the column basis is then chosen the same way on the
/// row-transformed matrix. The result is the tensor product of the two.
pub fn best_basis_2d_cw(tc: &TensorCoeffTable, ordering: Ordering, cost: &CostFunction) -> (Vec<TensorKey>, f64) {
    let (rd, cd) = (&tc.rows, &tc.cols);
    let ncs = cd.num_slots();
    let slots = |d: &Dictionary, b: &BasisSpec| -> Vec<usize> {
        b.keys().iter().map(|k| d.slot(k).expect("basis keys come from the dictionary")).collect()
    };
    // The finest column level holds the pixel deltas, so these entries are the
    // row transforms of the individual columns.
    let pixels = slots(cd, &cd.level_basis(cd.jmax()));
    let row_cost: Vec<f64> = (0..rd.num_slots())
        .into_par_iter()
        .map(|r| pixels.iter().map(|&c| cost.g(tc.values[r * ncs + c])).sum())
        .collect();
    let (row_basis, _) = cw_search(rd, ordering, &row_cost);
    let kept_rows = slots(rd, &row_basis);
    let col_cost: Vec<f64> = (0..ncs)
        .into_par_iter()
        .map(|c| kept_rows.iter().map(|&r| cost.g(tc.values[r * ncs + c])).sum())
        .collect();
    let (col_basis, total) = cw_search(cd, ordering, &col_cost);
    (tensor_basis(&row_basis, &col_basis), total)
}
