//! Image to graph bridges, best-k approximation and error metrics.

use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ghwt::{Dictionary, TagKey};
use crate::graph::Graph;
use crate::tensor2d::{tensor_combine, TensorKey};

/// Edge weights `exp(-|F_i - F_j|^2 / sigma_f) * exp(-|x_i - x_j|^2 / sigma_x)`
/// between pixels closer than `radius`.
#[derive(Debug, Clone)]
pub struct PixelAffinityConfig {
    pub radius: f64,
    /// Spatial bandwidth in squared pixels; `f64::INFINITY` disables the spatial factor.
    pub sigma_x: f64,
    pub sigma_f: f64,
    /// Per-pixel features, one row per pixel in row-major order. `None` uses the intensities.
    pub features: Option<Array2<f64>>,
}

impl PixelAffinityConfig {
    pub fn new(radius: f64, sigma_x: f64, sigma_f: f64) -> Self {
        PixelAffinityConfig { radius, sigma_x, sigma_f, features: None }
    }
}

#[derive(Debug, Clone)]
pub struct PixelGraph {
    pub graph: Graph,
    pub components: usize,
}

impl PixelGraph {
    pub fn is_connected(&self) -> bool {
        self.components == 1
    }
}

/// One node per pixel in row-major order. A disconnected result is returned
/// as is, with its component count, so the caller can enlarge the radius.
pub fn image_to_graph(img: &Array2<f64>, cfg: &PixelAffinityConfig) -> Result<PixelGraph> {
    if !(cfg.radius > 0.0) || !(cfg.sigma_f > 0.0) || !(cfg.sigma_x > 0.0) {
        return Err(Error::InvalidConfig("radius, sigma_x and sigma_f must be positive".into()));
    }
    let (rows, cols) = img.dim();
    let npix = rows * cols;
    let features = match &cfg.features {
        Some(f) => {
            if f.nrows() != npix || f.ncols() == 0 {
                return Err(Error::SizeMismatch(format!(
                    "feature matrix is {}x{} for {npix} pixels",
                    f.nrows(),
                    f.ncols()
                )));
            }
            f.clone()
        }
        None => Array2::from_shape_vec((npix, 1), img.iter().copied().collect()).expect("pixel count"),
    };

    let reach = cfg.radius.ceil() as isize;
    let r2 = cfg.radius * cfg.radius;
    let mut offsets = Vec::new();
    for di in 0..=reach {
        for dj in -reach..=reach {
            if (di == 0 && dj <= 0) || ((di * di + dj * dj) as f64) >= r2 {
                continue;
            }
            offsets.push((di, dj));
        }
    }

    let edges: Vec<(usize, usize, f64)> = (0..npix)
        .into_par_iter()
        .flat_map_iter(|p| {
            let (i, j) = ((p / cols) as isize, (p % cols) as isize);
            let features = &features;
            offsets.iter().filter_map(move |&(di, dj)| {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= rows as isize || b >= cols as isize {
                    return None;
                }
                let q = a as usize * cols + b as usize;
                let df: f64 = features.row(p).iter().zip(features.row(q)).map(|(x, y)| (x - y).powi(2)).sum();
                let dx = (di * di + dj * dj) as f64;
                let spatial = if cfg.sigma_x.is_infinite() { 1.0 } else { (-dx / cfg.sigma_x).exp() };
                let w = (-df / cfg.sigma_f).exp() * spatial;
                (w > 0.0).then_some((p, q, w))
            })
        })
        .collect();
    let graph = Graph::from_edges(npix, edges)?;
    let components = graph.components().len();
    Ok(PixelGraph { graph, components })
}

/// Indices ordered by decreasing magnitude, ties broken by increasing key.
pub fn rank_by_magnitude<K: Ord>(coeffs: &[(K, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..coeffs.len()).collect();
    idx.sort_by(|&a, &b| coeffs[b].1.abs().total_cmp(&coeffs[a].1.abs()).then_with(|| coeffs[a].0.cmp(&coeffs[b].0)));
    idx
}

#[derive(Debug, Clone)]
pub struct Approximation<T, K> {
    pub signal: T,
    pub kept: Vec<(K, f64)>,
    /// Norm of the discarded coefficients; equals the approximation error for an orthonormal basis.
    pub residual_norm: f64,
}

fn split_top_k<K: Ord + Copy>(coeffs: &[(K, f64)], k: usize) -> (Vec<(K, f64)>, f64) {
    let order = rank_by_magnitude(coeffs);
    let k = k.min(coeffs.len());
    let kept = order[..k].iter().map(|&i| coeffs[i]).collect();
    let mut dropped: Vec<f64> = order[k..].iter().map(|&i| coeffs[i].1 * coeffs[i].1).collect();
    dropped.sort_by(f64::total_cmp);
    (kept, dropped.iter().fold(0.0, |a, b| a + b).sqrt())
}

/// Keeps the `k` largest coefficients of an expansion and synthesizes them.
pub fn top_k_approximation(
    coeffs: &[(TagKey, f64)],
    k: usize,
    dict: &Dictionary,
) -> Result<Approximation<Vec<f64>, TagKey>> {
    let (kept, residual_norm) = split_top_k(coeffs, k);
    let signal = dict.combine(kept.iter().map(|(a, b)| (a, b)))?;
    Ok(Approximation { signal, kept, residual_norm })
}

pub fn top_k_approximation_2d(
    coeffs: &[(TensorKey, f64)],
    k: usize,
    rows: &Arc<Dictionary>,
    cols: &Arc<Dictionary>,
) -> Result<Approximation<Array2<f64>, TensorKey>> {
    let (kept, residual_norm) = split_top_k(coeffs, k);
    let signal = tensor_combine(&kept, rows, cols)?;
    Ok(Approximation { signal, kept, residual_norm })
}

/// Number of coefficients retained for a fraction of `n`.
pub fn kept_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round().max(0.0) as usize).min(n)
}

/// `step, 2*step, ..., 1`.
pub fn fraction_grid(step: f64) -> Vec<f64> {
    let count = (1.0 / step).round().max(1.0) as usize;
    (1..=count).map(|i| if i == count { 1.0 } else { i as f64 * step }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub name: String,
    pub fractions: Vec<f64>,
    pub errors: Vec<f64>,
    pub psnr: Vec<(f64, f64)>,
}

impl ApproxReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fraction,error\n");
        for (f, e) in self.fractions.iter().zip(&self.errors) {
            s.push_str(&format!("{f:?},{e:?}\n"));
        }
        s
    }
}

/// Relative l2 error of best-k approximation in an orthonormal expansion,
/// `sqrt(sum of dropped coeff^2) / ||f||`, over the given fractions.
pub fn error_curve(name: &str, coeffs: &[f64], signal_energy: f64, fractions: &[f64]) -> ApproxReport {
    let n = coeffs.len();
    let mut sq: Vec<f64> = coeffs.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    // tail[k]: energy of everything past the k largest, summed smallest first.
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + sq[k];
    }
    let norm = signal_energy.sqrt();
    let errors = fractions
        .iter()
        .map(|&f| {
            let t = tail[kept_count(f, n)];
            if norm > 0.0 {
                t.sqrt() / norm
            } else {
                0.0
            }
        })
        .collect();
    ApproxReport { name: name.to_string(), fractions: fractions.to_vec(), errors, psnr: Vec::new() }
}

/// `10 log10(max(reference)^2 / MSE)`; identical images give `f64::INFINITY`.
pub fn psnr(reference: &Array2<f64>, approx: &Array2<f64>) -> Result<f64> {
    if reference.dim() != approx.dim() {
        return Err(Error::SizeMismatch(format!("{:?} vs {:?}", reference.dim(), approx.dim())));
    }
    let count = reference.len() as f64;
    let mse = reference.iter().zip(approx).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / count;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    Ok(10.0 * (peak * peak / mse).log10())
}
