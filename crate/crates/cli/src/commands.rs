use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use eghwt::eghwt::{eghwt_best_basis, exhaustive_best_basis};
use eghwt::imaging::{error_curve, fraction_grid, image_to_graph, kept_count, psnr, top_k_approximation, top_k_approximation_2d, PixelAffinityConfig};
use eghwt::io::{read_edge_list_csv, read_matrix, read_matrix_market, read_signal_csv, write_pgm, write_signal_csv, BestBasisReport};
use eghwt::partition::{build_partition_tree_midpoint, build_partition_tree_ptv, build_partition_tree_spectral, Axis};
use eghwt::tensor2d::{best_basis_2d_cw, eghwt2d_best_basis, tensor_analyze, tensor_basis};
use eghwt::{best_basis_cw, BasisSpec, CoeffTable, CostFunction, Dictionary, EigenConfig, Graph, Ordering, PartitionTree, TagKey, TensorKey};
use ndarray::Array2;
use serde_json::{json, Map, Value};

use crate::{ApproximateArgs, AxisArg, BasisName, BestBasisArgs, CostArgs, Failure, PartitionArgs, TreeArgs, TreeKind};

/// JSON has no infinities; they are written as strings.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Failure::Usage(msg.into()).into()
}

fn cost_function(a: &CostArgs) -> Result<CostFunction> {
    Ok(match a.cost {
        crate::CostKind::Lp => CostFunction::lp(a.p)?,
        crate::CostKind::L0 => CostFunction::l0(a.threshold)?,
    })
}

fn cost_label(a: &CostArgs) -> String {
    match a.cost {
        crate::CostKind::Lp => format!("lp(p={:?})", a.p),
        crate::CostKind::L0 => format!("l0(threshold={:?})", a.threshold),
    }
}

fn eigen_config(t: &TreeArgs) -> EigenConfig {
    EigenConfig { seed: t.seed, ..EigenConfig::default() }
}

fn load_graph(t: &TreeArgs) -> Result<Graph> {
    let path = t.graph.as_ref().ok_or_else(|| usage("the spectral tree needs --graph"))?;
    let g = if path.extension().and_then(|e| e.to_str()) == Some("mtx") {
        let g = read_matrix_market(path)?;
        if let Some(n) = t.nodes.filter(|&n| n != g.n()) {
            return Err(eghwt::Error::SizeMismatch(format!("--nodes {n} but the matrix has {} rows", g.n())).into());
        }
        g
    } else {
        read_edge_list_csv(path, t.one_based, t.nodes)?
    };
    Ok(g)
}

fn load_tree_file(path: &Path) -> Result<PartitionTree> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let tree = PartitionTree::from_json(&s)?;
    let report = tree.validate(tree.n());
    if !report.is_valid() {
        let list: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::InvalidTree(format!("{}: {}", path.display(), list.join("; "))).into());
    }
    Ok(tree)
}

/// A tree for a signal of length `n`. PTV treats the signal as a single image row.
fn tree_for_signal(t: &TreeArgs, f: &[f64]) -> Result<PartitionTree> {
    if let Some(p) = &t.tree_file {
        return load_tree_file(p);
    }
    Ok(match t.tree {
        TreeKind::Spectral => build_partition_tree_spectral(&load_graph(t)?, &eigen_config(t))?,
        TreeKind::Midpoint => build_partition_tree_midpoint(f.len())?,
        TreeKind::Ptv => {
            let row = Array2::from_shape_vec((1, f.len()), f.to_vec())?;
            build_partition_tree_ptv(&row, Axis::Columns, t.ptv_p)?
        }
    })
}

fn validation_json(tree: &PartitionTree) -> (bool, Value) {
    let report = tree.validate(tree.n());
    let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    let valid = report.is_valid();
    let v = json!({
        "n": tree.n(),
        "jmax": tree.jmax(),
        "valid": valid,
        "violations": violations,
        "max_child_ratio": num(report.max_child_ratio),
    });
    (valid, v)
}

pub fn partition(a: &PartitionArgs) -> Result<()> {
    fs::create_dir_all(&a.out)?;
    let t = &a.tree;
    let tree = if let Some(path) = &a.validate {
        let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        PartitionTree::from_json(&s)?
    } else if let Some(path) = &t.tree_file {
        let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        PartitionTree::from_json(&s)?
    } else {
        match t.tree {
            TreeKind::Spectral => build_partition_tree_spectral(&load_graph(t)?, &eigen_config(t))?,
            TreeKind::Midpoint => {
                let n = match (a.n, &t.graph) {
                    (Some(n), _) => n,
                    (None, Some(_)) => load_graph(t)?.n(),
                    (None, None) => return Err(usage("the midpoint tree needs --n or --graph")),
                };
                build_partition_tree_midpoint(n)?
            }
            TreeKind::Ptv => {
                let path = a.image.as_ref().ok_or_else(|| usage("the PTV tree needs --image"))?;
                let img = read_matrix(path, a.normalize)?;
                let axis = match a.axis {
                    AxisArg::Rows => Axis::Rows,
                    AxisArg::Columns => Axis::Columns,
                };
                build_partition_tree_ptv(&img, axis, t.ptv_p)?
            }
        }
    };
    let (valid, report) = validation_json(&tree);
    write_json(&a.out.join("validation.json"), &report)?;
    if a.validate.is_none() {
        fs::write(a.out.join("tree.json"), tree.to_json()? + "\n")?;
    }
    if !valid {
        return Err(Failure::InvalidTree(format!("tree has violations: {}", report["violations"])).into());
    }
    Ok(())
}

/// Within rounding of the last few additions.
fn dominated(best: f64, other: f64) -> bool {
    best <= other + 1e-12 * other.abs().max(1.0)
}

/// The basis and its cost as the search reported it.
fn basis_1d(c: &CoeffTable, which: BasisName, cost: &CostFunction) -> Result<(BasisSpec, f64)> {
    let dict = c.dict();
    Ok(match which {
        BasisName::Haar => (dict.haar_basis(), c.cost_of(&dict.haar_basis(), cost)?),
        BasisName::Walsh => (dict.walsh_basis(), c.cost_of(&dict.walsh_basis(), cost)?),
        BasisName::C2f => best_basis_cw(c, Ordering::C2f, cost),
        BasisName::F2c => best_basis_cw(c, Ordering::F2c, cost),
        BasisName::Eghwt => eghwt_best_basis(c, cost),
    })
}

pub fn bestbasis(a: &BestBasisArgs) -> Result<()> {
    let f = read_signal_csv(&a.signal)?;
    let cost = cost_function(&a.cost)?;
    let dict = Dictionary::new(tree_for_signal(&a.tree, &f)?);
    let c = dict.analyze(&f)?;
    fs::create_dir_all(&a.out)?;

    let mut costs = Map::new();
    let mut totals = Vec::new();
    for which in BasisName::ALL {
        let (basis, total) = basis_1d(&c, which, &cost)?;
        write_json(&a.out.join(format!("{}.json", which.name())), &serde_json::to_value(BestBasisReport::new(which.name(), total, &basis, &c)?)?)?;
        costs.insert(which.name().into(), num(total));
        totals.push((which, total));
    }

    let mut summary = json!({
        "n": dict.n(),
        "jmax": dict.jmax(),
        "cost": cost_label(&a.cost),
        "costs": costs,
    });
    let eg = totals.iter().find(|t| t.0 == BasisName::Eghwt).map(|t| t.1).expect("eghwt is always run");
    let beaten: Vec<String> = totals
        .iter()
        .filter(|&&(_, other)| !dominated(eg, other))
        .map(|(w, other)| format!("{} ({other:?})", w.name()))
        .collect();
    if a.oracle {
        let (_, ex) = exhaustive_best_basis(&c, &cost)?;
        summary["oracle"] = json!({ "cost": num(ex), "agrees": ex == eg });
        write_json(&a.out.join("summary.json"), &summary)?;
        if ex != eg {
            return Err(Failure::Check(format!("eGHWT cost {eg:?} differs from the exhaustive optimum {ex:?}")).into());
        }
    } else {
        write_json(&a.out.join("summary.json"), &summary)?;
    }
    if !beaten.is_empty() {
        return Err(Failure::Check(format!("eGHWT cost {eg:?} exceeds {}", beaten.join(", "))).into());
    }
    Ok(())
}

fn check_fractions(a: &ApproximateArgs) -> Result<()> {
    if let Some(f) = a.fraction.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(usage(format!("fractions must lie in [0, 1], got {f}")));
    }
    if !(a.grid_step > 0.0 && a.grid_step <= 1.0) {
        return Err(usage(format!("--grid-step must lie in (0, 1], got {}", a.grid_step)));
    }
    Ok(())
}

fn fraction_tag(f: f64) -> String {
    format!("{f:?}")
}

/// What one basis produced in the approximation run.
struct Entry {
    basis: BasisName,
    cost: f64,
    rows: Vec<Value>,
}

fn write_summary(out: &Path, cost: &str, dims: Value, entries: &[Entry]) -> Result<()> {
    let mut bases = Map::new();
    for e in entries {
        bases.insert(e.basis.name().into(), json!({ "cost": num(e.cost), "fractions": e.rows }));
    }
    write_json(&out.join("summary.json"), &json!({ "cost": cost, "dims": dims, "bases": bases }))
}

pub fn approximate(a: &ApproximateArgs) -> Result<()> {
    check_fractions(a)?;
    let cost = cost_function(&a.cost)?;
    fs::create_dir_all(&a.out)?;
    let mut bases = a.bases.clone();
    bases.sort();
    bases.dedup();
    match (&a.signal, &a.image) {
        (Some(path), None) => {
            let f = read_signal_csv(path)?;
            let dict = Dictionary::new(tree_for_signal(&a.tree, &f)?);
            approximate_1d(a, &bases, &cost, &dict, &f, None)
        }
        (None, Some(path)) => {
            let img = read_matrix(path, a.normalize)?;
            if a.tree.tree_file.is_none() && a.tree.tree == TreeKind::Spectral {
                let cfg = PixelAffinityConfig::new(a.radius, a.sigma_x, a.sigma_f);
                let pg = image_to_graph(&img, &cfg)?;
                if !pg.is_connected() {
                    return Err(eghwt::Error::NotConnected { components: pg.components }.into());
                }
                let dict = Dictionary::new(build_partition_tree_spectral(&pg.graph, &eigen_config(&a.tree))?);
                let f: Vec<f64> = img.iter().copied().collect();
                approximate_1d(a, &bases, &cost, &dict, &f, Some(&img))
            } else {
                approximate_2d(a, &bases, &cost, &img)
            }
        }
        _ => Err(usage("approximate needs exactly one of --signal and --image")),
    }
}

/// Keeping every coefficient reproduces the input exactly in exact arithmetic,
/// so the sentinel is reported instead of a PSNR of a few hundred dB that
/// only measures rounding.
fn full_or_psnr(k: usize, total: usize, img: &Array2<f64>, rec: &Array2<f64>) -> Result<f64> {
    if k == total {
        return Ok(f64::INFINITY);
    }
    Ok(psnr(img, rec)?)
}

fn pgm_peak(a: &ApproximateArgs, img: &Array2<f64>) -> f64 {
    let max = img.iter().fold(0.0f64, |m, &v| m.max(v));
    if a.normalize {
        1.0
    } else if max <= 255.0 {
        255.0
    } else {
        max
    }
}

/// Graph signals and pixel graphs. With `img` set the signal is the image in
/// row-major order and reconstructions are written as PGM with PSNR.
fn approximate_1d(
    a: &ApproximateArgs,
    bases: &[BasisName],
    cost: &CostFunction,
    dict: &Arc<Dictionary>,
    f: &[f64],
    img: Option<&Array2<f64>>,
) -> Result<()> {
    let c = dict.analyze(f)?;
    let energy: f64 = f.iter().map(|v| v * v).sum();
    let grid = fraction_grid(a.grid_step);
    let mut entries = Vec::new();
    for &which in bases {
        let (basis, total) = basis_1d(&c, which, cost)?;
        let coeffs: Vec<(TagKey, f64)> = c.restrict(&basis)?;
        let values: Vec<f64> = coeffs.iter().map(|x| x.1).collect();
        let curve = error_curve(which.name(), &values, energy, &grid);
        fs::write(a.out.join(format!("curve_{}.csv", which.name())), curve.to_csv())?;
        let mut rows = Vec::new();
        for &frac in &a.fraction {
            let k = kept_count(frac, f.len());
            let approx = top_k_approximation(&coeffs, k, dict)?;
            let rel = if energy > 0.0 { approx.residual_norm / energy.sqrt() } else { 0.0 };
            let stem = format!("recon_{}_{}", which.name(), fraction_tag(frac));
            let mut row = json!({ "fraction": frac, "kept": k, "rel_error": num(rel) });
            if let Some(img) = img {
                let rec = Array2::from_shape_vec(img.dim(), approx.signal)?;
                row["psnr"] = num(full_or_psnr(k, f.len(), img, &rec)?);
                write_pgm(&a.out.join(stem + ".pgm"), &rec, pgm_peak(a, img))?;
            } else {
                write_signal_csv(&a.out.join(stem + ".csv"), &approx.signal)?;
            }
            rows.push(row);
        }
        entries.push(Entry { basis: which, cost: total, rows });
    }
    let dims = match img {
        Some(m) => json!([m.nrows(), m.ncols()]),
        None => json!([f.len()]),
    };
    write_summary(&a.out, &cost_label(&a.cost), dims, &entries)
}

fn approximate_2d(a: &ApproximateArgs, bases: &[BasisName], cost: &CostFunction, img: &Array2<f64>) -> Result<()> {
    let (m, n) = img.dim();
    let (rows, cols) = match (&a.tree.tree_file, a.tree.tree) {
        (Some(_), _) => return Err(usage("a tree file describes one axis; use --tree midpoint or ptv for images")),
        (None, TreeKind::Ptv) => (
            build_partition_tree_ptv(img, Axis::Rows, a.tree.ptv_p)?,
            build_partition_tree_ptv(img, Axis::Columns, a.tree.ptv_p)?,
        ),
        (None, _) => (build_partition_tree_midpoint(m)?, build_partition_tree_midpoint(n)?),
    };
    let (rd, cd) = (Dictionary::new(rows), Dictionary::new(cols));
    let tc = tensor_analyze(img, &rd, &cd)?;
    let energy: f64 = img.iter().map(|v| v * v).sum();
    let grid = fraction_grid(a.grid_step);
    let mut entries = Vec::new();
    for &which in bases {
        let keys: Vec<TensorKey> = match which {
            BasisName::Haar => tensor_basis(&rd.haar_basis(), &cd.haar_basis()),
            BasisName::Walsh => tensor_basis(&rd.walsh_basis(), &cd.walsh_basis()),
            BasisName::C2f => best_basis_2d_cw(&tc, Ordering::C2f, cost).0,
            BasisName::F2c => best_basis_2d_cw(&tc, Ordering::F2c, cost).0,
            BasisName::Eghwt => eghwt2d_best_basis(&tc, cost).0,
        };
        let coeffs = tc.restrict(&keys)?;
        let values: Vec<f64> = coeffs.iter().map(|x| x.1).collect();
        let curve = error_curve(which.name(), &values, energy, &grid);
        fs::write(a.out.join(format!("curve_{}.csv", which.name())), curve.to_csv())?;
        let mut out_rows = Vec::new();
        for &frac in &a.fraction {
            let k = kept_count(frac, m * n);
            let approx = top_k_approximation_2d(&coeffs, k, &rd, &cd)?;
            let rel = if energy > 0.0 { approx.residual_norm / energy.sqrt() } else { 0.0 };
            let p = full_or_psnr(k, m * n, img, &approx.signal)?;
            write_pgm(&a.out.join(format!("recon_{}_{}.pgm", which.name(), fraction_tag(frac))), &approx.signal, pgm_peak(a, img))?;
            out_rows.push(json!({ "fraction": frac, "kept": k, "rel_error": num(rel), "psnr": num(p) }));
        }
        entries.push(Entry { basis: which, cost: tc.cost_of(&keys, cost)?, rows: out_rows });
    }
    write_summary(&a.out, &cost_label(&a.cost), json!([m, n]), &entries)
}
