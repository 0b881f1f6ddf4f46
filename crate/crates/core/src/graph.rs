//! Weighted undirected graphs, their Laplacians, and Fiedler-vector bisection.
//!
//! The Fiedler vector of the random-walk Laplacian is obtained from the
//! symmetric normalized Laplacian through `phi_rw = D^{-1/2} phi_sym`. Small
//! graphs use a dense symmetric eigendecomposition; larger ones use Lanczos
//! with full reorthogonalization on the shifted operator `sigma*I - M`, with
//! the known null vector deflated.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaplacianKind {
    Unnormalized,
    RandomWalk,
    Symmetric,
}

/// Undirected simple graph with nonnegative weights, stored as symmetric CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    coords: Option<Vec<Vec<f64>>>,
}

impl Graph {
    /// Builds a graph from undirected edges `(i, j, w)`.
    ///
    /// An edge may be listed once or in both directions (as symmetric
    /// MatrixMarket files and general edge lists do); listing it twice with
    /// different weights is an error, as are loops and negative or
    /// non-finite weights. Zero-weight edges are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("loop at node {i}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) has weight {w}")));
            }
            let key = (i.min(j), i.max(j));
            match seen.get(&key) {
                Some(&prev) if prev != w => {
                    return Err(Error::InvalidGraph(format!(
                        "edge ({}, {}) listed with weights {prev} and {w}",
                        key.0, key.1
                    )));
                }
                _ => {
                    seen.insert(key, w);
                }
            }
        }
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * seen.len());
        for ((i, j), w) in seen {
            if w > 0.0 {
                triplets.push((i, j, w));
                triplets.push((j, i, w));
            }
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(Self::from_sorted_triplets(n, &triplets))
    }

    fn from_sorted_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col = triplets.iter().map(|t| t.1).collect();
        let val = triplets.iter().map(|t| t.2).collect();
        Graph { n, row_ptr, col, val, coords: None }
    }

    /// Dense symmetric weight matrix; the diagonal must be zero.
    pub fn from_dense(w: &DMatrix<f64>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::InvalidGraph("weight matrix is not square".into()));
        }
        let n = w.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("loop at node {i}")));
            }
            for j in 0..n {
                if w[(i, j)] != w[(j, i)] {
                    return Err(Error::InvalidGraph(format!("W[{i},{j}] != W[{j},{i}]")));
                }
                if j > i && w[(i, j)] != 0.0 {
                    edges.push((i, j, w[(i, j)]));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    /// Unweighted path 0 - 1 - ... - (n-1).
    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i, 1.0))).expect("path edges are valid")
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: coords.len() });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.col.len() / 2
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    /// Neighbors of `i` with their edge weights, in increasing node order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(p) => self.val[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i).filter(move |&(j, _)| j > i).map(move |(j, w)| (i, j, w))
        })
    }

    pub fn degree_vector(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.neighbors(i).map(|(_, w)| w).sum()).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut g = self.clone();
        g.val.iter_mut().for_each(|w| *w *= c);
        g
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut comps = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut comp = vec![s];
            label[s] = id;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    /// Subgraph induced on `nodes`; local node `i` corresponds to `nodes[i]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(a, &v)| (v, a)).collect();
        let mut triplets = Vec::new();
        for (a, &v) in nodes.iter().enumerate() {
            for (u, w) in self.neighbors(v) {
                if let Some(&b) = local.get(&u) {
                    triplets.push((a, b, w));
                }
            }
        }
        triplets.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut g = Self::from_sorted_triplets(nodes.len(), &triplets);
        if let Some(c) = &self.coords {
            g.coords = Some(nodes.iter().map(|&v| c[v].clone()).collect());
        }
        g
    }

    /// Dense Laplacian of the requested kind.
    pub fn laplacian(&self, kind: LaplacianKind) -> Result<DMatrix<f64>> {
        let d = self.degree_vector();
        if kind != LaplacianKind::Unnormalized {
            if let Some(node) = d.iter().position(|&x| x <= 0.0) {
                return Err(Error::ZeroDegreeNode { node });
            }
        }
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, w) in self.neighbors(i) {
                m[(i, j)] = match kind {
                    LaplacianKind::Unnormalized => -w,
                    LaplacianKind::RandomWalk => -w / d[i],
                    LaplacianKind::Symmetric => -w / (d[i].sqrt() * d[j].sqrt()),
                };
            }
            m[(i, i)] = match kind {
                LaplacianKind::Unnormalized => d[i],
                _ => 1.0,
            };
        }
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct EigenConfig {
    /// Relative residual tolerance: `||M x - lambda x|| <= tol * ||M||`.
    pub tol: f64,
    /// Operator applications allowed for the iterative solver; `None` means `10 * n`.
    pub max_iter: Option<usize>,
    /// Graphs with at most this many nodes use the dense eigensolver.
    pub dense_threshold: usize,
    /// Entries with `|phi_i| <= zero_tol * max|phi|` are treated as exact zeros.
    pub zero_tol: f64,
    /// Seed for the Lanczos starting vector.
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { tol: 1e-8, max_iter: None, dense_threshold: 128, zero_tol: 1e-10, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Fiedler {
    pub vector: Vec<f64>,
    pub eigenvalue: f64,
    /// Residual `||M x - lambda x||` of the symmetric problem that was solved.
    pub residual: f64,
}

/// Fiedler vector of `g` for the given Laplacian, unit norm, first nonzero entry positive.
pub fn fiedler_vector(g: &Graph, kind: LaplacianKind, cfg: &EigenConfig) -> Result<Fiedler> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidGraph("Fiedler vector needs at least two nodes".into()));
    }
    let comps = g.components();
    if comps.len() > 1 {
        return Err(Error::NotConnected { components: comps.len() });
    }
    let d = g.degree_vector();
    let op = SymOperator::new(g, kind, &d);
    let (eigenvalue, mut x, residual) = if n <= cfg.dense_threshold {
        dense_fiedler(&op)
    } else {
        lanczos_fiedler(&op, cfg)?
    };
    if kind == LaplacianKind::RandomWalk {
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi /= di.sqrt();
        }
        normalize(&mut x);
    }
    fix_sign(&mut x, cfg.zero_tol);
    Ok(Fiedler { vector: x, eigenvalue, residual })
}

/// Splits `region` (global node ids) by the sign of the random-walk Fiedler
/// vector of its induced subgraph. Returns `(V1, V2)`, each ascending.
pub fn bipartition_by_fiedler(
    g: &Graph,
    region: &[usize],
    cfg: &EigenConfig,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if region.len() < 2 {
        return Err(Error::InvalidGraph("cannot bipartition fewer than two nodes".into()));
    }
    let mut nodes = region.to_vec();
    nodes.sort_unstable();
    let sub = g.induced_subgraph(&nodes);
    let f = fiedler_vector(&sub, LaplacianKind::RandomWalk, cfg)?;
    let (v1, v2) = split_by_sign(&f.vector, cfg.zero_tol);
    Ok((v1.into_iter().map(|i| nodes[i]).collect(), v2.into_iter().map(|i| nodes[i]).collect()))
}

/// Local indices with `phi >= 0` (numerical zeros included) versus the rest.
/// If one side comes out empty, the entry of smallest magnitude is moved over.
pub(crate) fn split_by_sign(phi: &[f64], zero_tol: f64) -> (Vec<usize>, Vec<usize>) {
    let thresh = zero_tol * phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (mut v1, mut v2): (Vec<usize>, Vec<usize>) =
        (0..phi.len()).partition(|&i| phi[i] >= -thresh);
    if v1.is_empty() || v2.is_empty() {
        let (from, to) = if v1.is_empty() { (&mut v2, &mut v1) } else { (&mut v1, &mut v2) };
        let pos = (0..from.len())
            .min_by(|&a, &b| phi[from[a]].abs().total_cmp(&phi[from[b]].abs()))
            .expect("region has at least two nodes");
        to.push(from.remove(pos));
        to.sort_unstable();
    }
    (v1, v2)
}

fn fix_sign(x: &mut [f64], zero_tol: f64) {
    let thresh = zero_tol * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > thresh) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn normalize(x: &mut [f64]) {
    let nrm = dot(x, x).sqrt();
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The symmetric matrix whose second eigenpair is sought: `L` for the
/// unnormalized kind, `L_sym` otherwise.
struct SymOperator<'a> {
    g: &'a Graph,
    diag: Vec<f64>,
    /// Off-diagonal scaling per node: entry (i,j) is `-w_ij * s_i * s_j`.
    scale: Vec<f64>,
    null: Vec<f64>,
    norm_bound: f64,
}

impl<'a> SymOperator<'a> {
    fn new(g: &'a Graph, kind: LaplacianKind, d: &[f64]) -> Self {
        let n = g.n();
        match kind {
            LaplacianKind::Unnormalized => {
                let dmax = d.iter().fold(0.0f64, |m, &x| m.max(x));
                SymOperator {
                    g,
                    diag: d.to_vec(),
                    scale: vec![1.0; n],
                    null: vec![1.0 / (n as f64).sqrt(); n],
                    norm_bound: 2.0 * dmax,
                }
            }
            _ => {
                let total: f64 = d.iter().sum();
                SymOperator {
                    g,
                    diag: vec![1.0; n],
                    scale: d.iter().map(|x| 1.0 / x.sqrt()).collect(),
                    null: d.iter().map(|x| (x / total).sqrt()).collect(),
                    norm_bound: 2.0,
                }
            }
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..x.len() {
            let mut acc = self.diag[i] * x[i];
            let si = self.scale[i];
            for (j, w) in self.g.neighbors(i) {
                acc -= w * si * self.scale[j] * x[j];
            }
            y[i] = acc;
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for (j, w) in self.g.neighbors(i) {
                m[(i, j)] = -w * self.scale[i] * self.scale[j];
            }
        }
        m
    }

    fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        y.iter().zip(x).map(|(yi, xi)| (yi - lambda * xi).powi(2)).sum::<f64>().sqrt()
    }
}

fn dense_fiedler(op: &SymOperator) -> (f64, Vec<f64>, f64) {
    let eig = SymmetricEigen::new(op.dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let idx = order[1];
    let lambda = eig.eigenvalues[idx];
    let mut x: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    normalize(&mut x);
    let res = op.residual(lambda, &x);
    (lambda, x, res)
}

/// Largest eigenpair of `B = sigma*I - M` on the complement of the null
/// vector, by restarted Lanczos with full reorthogonalization.
fn lanczos_fiedler(op: &SymOperator, cfg: &EigenConfig) -> Result<(f64, Vec<f64>, f64)> {
    const CHECK_EVERY: usize = 10;
    const KRYLOV_MAX: usize = 400;

    let n = op.diag.len();
    let budget = cfg.max_iter.unwrap_or(10 * n).max(1);
    let sigma = op.norm_bound;
    let target = cfg.tol * op.norm_bound;
    let kmax = KRYLOV_MAX.min(n - 1);
    let u0 = &op.null;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut used = 0usize;
    let mut best_res = f64::INFINITY;
    let mut tmp = vec![0.0; n];

    loop {
        orthogonalize(&mut start, std::slice::from_ref(u0));
        normalize(&mut start);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz: Option<(f64, Vec<f64>)> = None;

        for i in 0..kmax {
            op.apply(&basis[i], &mut tmp);
            used += 1;
            let mut w: Vec<f64> = basis[i].iter().zip(&tmp).map(|(v, mv)| sigma * v - mv).collect();
            let a = dot(&w, &basis[i]);
            alpha.push(a);
            for (wi, vi) in w.iter_mut().zip(&basis[i]) {
                *wi -= a * vi;
            }
            if i > 0 {
                let b = beta[i - 1];
                for (wi, vi) in w.iter_mut().zip(&basis[i - 1]) {
                    *wi -= b * vi;
                }
            }
            for _ in 0..2 {
                orthogonalize(&mut w, std::slice::from_ref(u0));
                orthogonalize(&mut w, &basis);
            }
            let b = dot(&w, &w).sqrt();
            beta.push(b);

            let k = i + 1;
            let breakdown = b <= 1e-13 * sigma;
            let last = k == kmax || used >= budget || breakdown;
            if k % CHECK_EVERY == 0 || last {
                let (theta, s) = top_ritz(&alpha, &beta[..k - 1]);
                let estimate = (b * s[k - 1]).abs();
                if estimate <= target || last {
                    let mut x = vec![0.0; n];
                    for (sj, vj) in s.iter().zip(&basis) {
                        for (xi, vi) in x.iter_mut().zip(vj) {
                            *xi += sj * vi;
                        }
                    }
                    normalize(&mut x);
                    let lambda = sigma - theta;
                    let res = op.residual(lambda, &x);
                    best_res = best_res.min(res);
                    if res <= target {
                        return Ok((lambda, x, res));
                    }
                    ritz = Some((lambda, x));
                    if last {
                        break;
                    }
                }
            }
            for wi in w.iter_mut() {
                *wi /= b;
            }
            basis.push(w);
        }

        if used >= budget {
            return Err(Error::ConvergenceFailure { iterations: used, residual: best_res });
        }
        match ritz {
            Some((_, x)) => start = x,
            None => return Err(Error::ConvergenceFailure { iterations: used, residual: best_res }),
        }
    }
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    for v in against {
        let c = dot(w, v);
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi -= c * vi;
        }
    }
}

/// Largest eigenvalue of the tridiagonal matrix and its eigenvector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let idx = (0..k).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).iter().copied().collect())
}
