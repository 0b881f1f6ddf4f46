//! File formats: edge lists, MatrixMarket, signals, matrices, images,
//! coefficient tables, bases and best-basis reports.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ghwt::{BasisSpec, CoeffTable, Dictionary, TagKey};
use crate::graph::Graph;
use crate::tensor2d::TensorKey;

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, src: &str) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::parse(src, format!("missing column {i} in {rec:?}")))?;
    raw.parse().map_err(|_| Error::parse(src, format!("cannot parse {raw:?}")))
}

/// Edge list with a `src,dst,weight` header (weight optional, default 1).
/// `n` defaults to one past the largest node index.
pub fn read_edge_list_csv(path: &Path, one_based: bool, n: Option<usize>) -> Result<Graph> {
    let src = name(path);
    let mut rdr = csv_reader(File::open(path)?);
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (i, j): (usize, usize) = (field(&rec, 0, &src)?, field(&rec, 1, &src)?);
        let w = if rec.len() > 2 { field(&rec, 2, &src)? } else { 1.0 };
        let shift = |v: usize| {
            if one_based {
                v.checked_sub(1).ok_or_else(|| Error::parse(&src, "node index 0 in a 1-based edge list"))
            } else {
                Ok(v)
            }
        };
        edges.push((shift(i)?, shift(j)?, w));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0));
    Graph::from_edges(n, edges)
}

/// MatrixMarket coordinate file (`real`, `integer` or `pattern`; `general` or `symmetric`).
pub fn read_matrix_market(path: &Path) -> Result<Graph> {
    let src = name(path);
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::parse(&src, "empty file"))??.to_lowercase();
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() < 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" || toks[2] != "coordinate" {
        return Err(Error::parse(&src, "expected a '%%MatrixMarket matrix coordinate' header"));
    }
    let pattern = toks[3] == "pattern";
    if !pattern && toks[3] != "real" && toks[3] != "integer" {
        return Err(Error::parse(&src, format!("unsupported field type {}", toks[3])));
    }
    if toks[4] != "symmetric" && toks[4] != "general" {
        return Err(Error::parse(&src, format!("unsupported symmetry {}", toks[4])));
    }
    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(&src, format!("bad number {s:?}")));
        if size.is_none() {
            if parts.len() < 3 {
                return Err(Error::parse(&src, "bad size line"));
            }
            let (r, c) = (num(parts[0])? as usize, num(parts[1])? as usize);
            if r != c {
                return Err(Error::parse(&src, "adjacency matrix must be square"));
            }
            size = Some((r, c));
            continue;
        }
        let need = if pattern { 2 } else { 3 };
        if parts.len() < need {
            return Err(Error::parse(&src, format!("bad entry line {t:?}")));
        }
        let (i, j) = (num(parts[0])? as usize, num(parts[1])? as usize);
        if i == 0 || j == 0 {
            return Err(Error::parse(&src, "MatrixMarket indices are 1-based"));
        }
        let w = if pattern { 1.0 } else { num(parts[2])? };
        if i == j && w == 0.0 {
            continue;
        }
        edges.push((i - 1, j - 1, w));
    }
    let (n, _) = size.ok_or_else(|| Error::parse(&src, "missing size line"))?;
    Graph::from_edges(n, edges)
}

/// Dispatches on the extension: `.mtx` is MatrixMarket, anything else an edge-list CSV.
pub fn read_graph(path: &Path, one_based: bool) -> Result<Graph> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") => read_matrix_market(path),
        _ => read_edge_list_csv(path, one_based, None),
    }
}

/// Coordinates CSV `node,x,y[,...]` with 0-based node ids.
pub fn read_coords_csv(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let src = name(path);
    let mut rdr = csv_reader(File::open(path)?);
    let mut out: Vec<Option<Vec<f64>>> = vec![None; n];
    for rec in rdr.records() {
        let rec = rec?;
        let node: usize = field(&rec, 0, &src)?;
        if node >= n {
            return Err(Error::parse(&src, format!("node {node} out of range")));
        }
        let xs = (1..rec.len()).map(|i| field(&rec, i, &src)).collect::<Result<Vec<f64>>>()?;
        out[node] = Some(xs);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| Error::parse(&src, format!("no coordinates for node {i}"))))
        .collect()
}

/// One value per line; a non-numeric first line is taken as a header.
pub fn read_signal_csv(path: &Path) -> Result<Vec<f64>> {
    let src = name(path);
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.split(',').next().unwrap_or("").trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::parse(&src, format!("line {}: {t:?}", i + 1))),
        }
    }
    Ok(out)
}

pub fn write_signal_csv(path: &Path, f: &[f64]) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    writeln!(w, "value")?;
    for v in f {
        writeln!(w, "{v:?}")?;
    }
    Ok(())
}

/// Headerless numeric CSV, one matrix row per line.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let src = name(path);
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_path(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::parse(&src, format!("row {rows} has {} entries", rec.len())));
        }
        for i in 0..rec.len() {
            data.push(field::<f64>(&rec, i, &src)?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), data).map_err(|e| Error::parse(&src, e.to_string()))
}

pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Grayscale image (PGM P5 8/16-bit, or any format the image crate reads,
/// converted to luma). With `normalize` values are divided by the format's
/// maximum (255 or 65535).
pub fn read_image(path: &Path, normalize: bool) -> Result<Array2<f64>> {
    let img = image::open(path)?;
    let sixteen = matches!(
        img.color(),
        image::ColorType::L16 | image::ColorType::La16 | image::ColorType::Rgb16 | image::ColorType::Rgba16
    );
    let (w, h, data, max) = if sixteen {
        let g = img.to_luma16();
        (g.width(), g.height(), g.into_raw().into_iter().map(f64::from).collect::<Vec<_>>(), 65535.0)
    } else {
        let g = img.to_luma8();
        (g.width(), g.height(), g.into_raw().into_iter().map(f64::from).collect::<Vec<_>>(), 255.0)
    };
    let mut m = Array2::from_shape_vec((h as usize, w as usize), data).expect("buffer matches dimensions");
    if normalize {
        m.mapv_inplace(|v| v / max);
    }
    Ok(m)
}

/// `.csv` is read as a numeric matrix; anything else as an image.
pub fn read_matrix(path: &Path, normalize: bool) -> Result<Array2<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let mut m = read_matrix_csv(path)?;
            if normalize {
                let max = m.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                if max > 0.0 {
                    m.mapv_inplace(|v| v / max);
                }
            }
            Ok(m)
        }
        _ => read_image(path, normalize),
    }
}

/// Writes an 8-bit binary PGM, mapping `[0, peak]` to `[0, 255]` with clamping.
pub fn write_pgm(path: &Path, m: &Array2<f64>, peak: f64) -> Result<()> {
    let (h, w) = m.dim();
    let mut out = std::io::BufWriter::new(File::create(path)?);
    write!(out, "P5\n{w} {h}\n255\n")?;
    let bytes: Vec<u8> = m.iter().map(|&v| (v / peak * 255.0).round().clamp(0.0, 255.0) as u8).collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn write_coeff_csv<W: Write>(w: W, c: &CoeffTable) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "k", "l", "value"])?;
    for (key, v) in c.iter() {
        wr.write_record([key.j.to_string(), key.k.to_string(), key.l.to_string(), format!("{v:?}")])?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a coefficient table; every key of `dict` must appear exactly once.
pub fn read_coeff_csv<R: Read>(r: R, dict: &Arc<Dictionary>) -> Result<CoeffTable> {
    let mut values = vec![f64::NAN; dict.num_slots()];
    let mut seen = 0;
    for rec in csv_reader(r).records() {
        let rec = rec?;
        let key = TagKey::new(field(&rec, 0, "coefficients")?, field(&rec, 1, "coefficients")?, field(&rec, 2, "coefficients")?);
        let s = dict.slot(&key).ok_or(Error::FictitiousKey(key))?;
        if !values[s].is_nan() {
            return Err(Error::KeyMismatch(format!("key {key} listed twice")));
        }
        values[s] = field(&rec, 3, "coefficients")?;
        seen += 1;
    }
    if seen != dict.num_slots() {
        return Err(Error::KeyMismatch(format!("{seen} of {} keys present", dict.num_slots())));
    }
    CoeffTable::from_values(Arc::clone(dict), values)
}

pub fn write_basis_csv<W: Write>(w: W, b: &BasisSpec) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "k", "l"])?;
    for key in b.keys() {
        wr.write_record([key.j.to_string(), key.k.to_string(), key.l.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_basis_csv<R: Read>(r: R) -> Result<BasisSpec> {
    let mut keys = Vec::new();
    for rec in csv_reader(r).records() {
        let rec = rec?;
        keys.push(TagKey::new(field(&rec, 0, "basis")?, field(&rec, 1, "basis")?, field(&rec, 2, "basis")?));
    }
    Ok(BasisSpec::new(keys))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyCoeff {
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestBasisReport {
    pub total_cost: f64,
    pub ordering: String,
    pub keys: Vec<KeyCoeff>,
}

impl BestBasisReport {
    pub fn new(ordering: &str, total_cost: f64, basis: &BasisSpec, c: &CoeffTable) -> Result<Self> {
        let keys = c
            .restrict(basis)?
            .into_iter()
            .map(|(key, coeff)| KeyCoeff { j: key.j, k: key.k, l: key.l, coeff })
            .collect();
        Ok(BestBasisReport { total_cost, ordering: ordering.to_string(), keys })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorKeyCoeff {
    pub row: [usize; 3],
    pub col: [usize; 3],
    pub coeff: f64,
}

impl TensorKeyCoeff {
    pub fn new(key: &TensorKey, coeff: f64) -> Self {
        TensorKeyCoeff { row: [key.row.j, key.row.k, key.row.l], col: [key.col.j, key.col.k, key.col.l], coeff }
    }
}
