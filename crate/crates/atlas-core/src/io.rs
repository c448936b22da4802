//! Columnar text formats for every artifact the pipeline writes.
//!
//! All files are whitespace-separated numeric tables. Metadata lives in
//! `#`-prefixed header lines; a plain first row names data columns where the
//! format calls for it. Floats are printed with 17 significant digits so
//! values round-trip exactly and files are byte-stable across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::covering::{BoxCollection, BoxDomain};
use crate::dimension::DimensionScan;
use crate::dmaps::{DiffusionModel, GraphDiagnostics, KernelParams};
use crate::error::{Error, Result};
use crate::observation::PodBasis;

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("bad float `{s}`")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("bad integer `{s}`")))
}

/// Key-value lines of the form `# key v1 v2 ...`.
struct Header {
    entries: Vec<(String, Vec<String>)>,
}

impl Header {
    fn parse(lines: &[&str]) -> Self {
        let mut entries = Vec::new();
        for line in lines {
            let mut parts = line.trim_start_matches('#').split_whitespace();
            if let Some(key) = parts.next() {
                entries.push((key.to_string(), parts.map(str::to_string).collect()));
            }
        }
        Self { entries }
    }

    fn get(&self, key: &str) -> Result<&[String]> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Parse(format!("missing header `{key}`")))
    }

    fn scalar(&self, key: &str) -> Result<f64> {
        parse_f64(self.get(key)?.first().ok_or_else(|| Error::Parse(format!("empty `{key}`")))?)
    }

    fn count(&self, key: &str) -> Result<usize> {
        parse_usize(self.get(key)?.first().ok_or_else(|| Error::Parse(format!("empty `{key}`")))?)
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        self.get(key)?.iter().map(|s| parse_f64(s)).collect()
    }
}

fn split_file(text: &str) -> (Vec<&str>, Vec<&str>) {
    let mut headers = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            headers.push(t);
        } else {
            rows.push(t);
        }
    }
    (headers, rows)
}

/// Trajectory/state table: named columns, first column is the sample time.
pub fn write_trajectory(
    path: &Path,
    column_names: &[String],
    times: &[f64],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut out = String::new();
    out.push_str("time");
    for name in column_names {
        out.push(' ');
        out.push_str(name);
    }
    out.push('\n');
    for (t, row) in times.iter().zip(rows) {
        out.push_str(&fmt(*t));
        for v in row {
            out.push(' ');
            out.push_str(&fmt(*v));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || i == 0 {
            continue;
        }
        let mut vals = t.split_whitespace();
        let time = parse_f64(
            vals.next().ok_or_else(|| Error::Parse(format!("empty row {i}")))?,
        )?;
        let row: Vec<f64> = vals.map(parse_f64).collect::<Result<_>>()?;
        times.push(time);
        rows.push(row);
    }
    Ok((times, rows))
}

/// POD basis: grid size, mode count, singular values and quadrature weight in
/// the header; one column per mode below.
pub fn write_pod_basis(path: &Path, basis: &PodBasis) -> Result<()> {
    let mut out = String::new();
    out.push_str("# pod_basis\n");
    let _ = writeln!(out, "# grid_size {}", basis.grid_len());
    let _ = writeln!(out, "# k {}", basis.k());
    out.push_str("# singular_values");
    for s in &basis.singular_values {
        out.push(' ');
        out.push_str(&fmt(*s));
    }
    out.push('\n');
    let _ = writeln!(out, "# weight {}", fmt(basis.grid_weights[0]));
    for row in 0..basis.grid_len() {
        for (i, zeta) in basis.vectors.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&fmt(zeta[row]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pod_basis(path: &Path) -> Result<PodBasis> {
    let text = fs::read_to_string(path)?;
    let (headers, rows) = split_file(&text);
    let h = Header::parse(&headers);
    let n = h.count("grid_size")?;
    let k = h.count("k")?;
    let singular_values = h.vector("singular_values")?;
    let weight = h.scalar("weight")?;
    if rows.len() != n {
        return Err(Error::Parse(format!("expected {n} grid rows, found {}", rows.len())));
    }
    let mut vectors = vec![vec![0.0; n]; k];
    for (r, line) in rows.iter().enumerate() {
        let vals: Vec<f64> =
            line.split_whitespace().map(parse_f64).collect::<Result<_>>()?;
        if vals.len() != k {
            return Err(Error::Parse(format!("row {r} has {} of {k} modes", vals.len())));
        }
        for (c, v) in vals.into_iter().enumerate() {
            vectors[c][r] = v;
        }
    }
    Ok(PodBasis { vectors, singular_values, grid_weights: vec![weight; n] })
}

/// Covering file: domain geometry in the header, one sorted multi-index per
/// line. This is the golden-file surface, so the row order is canonical
/// (lexicographic in the multi-index).
pub fn write_covering(path: &Path, coll: &BoxCollection) -> Result<()> {
    let mut out = String::new();
    out.push_str("# covering\n");
    let _ = writeln!(out, "# k {}", coll.domain().dim());
    let _ = writeln!(out, "# depth {}", coll.depth());
    out.push_str("# center");
    for c in &coll.domain().center {
        out.push(' ');
        out.push_str(&fmt(*c));
    }
    out.push('\n');
    out.push_str("# radius");
    for r in &coll.domain().radius {
        out.push(' ');
        out.push_str(&fmt(*r));
    }
    out.push('\n');
    let _ = writeln!(out, "# boxes {}", coll.len());

    let mut indices: Vec<Vec<u64>> = coll.keys().map(|k| coll.multi_index_of(k)).collect();
    indices.sort();
    for idx in indices {
        let mut first = true;
        for i in idx {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{i}");
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_covering(path: &Path) -> Result<BoxCollection> {
    let text = fs::read_to_string(path)?;
    let (headers, rows) = split_file(&text);
    let h = Header::parse(&headers);
    let k = h.count("k")?;
    let depth = h.count("depth")? as u32;
    let center = h.vector("center")?;
    let radius = h.vector("radius")?;
    let expected = h.count("boxes")?;
    if center.len() != k || radius.len() != k {
        return Err(Error::Parse("domain dimension mismatch".into()));
    }
    let domain = BoxDomain::new(center, radius)?;
    let template = BoxCollection::from_keys(domain.clone(), depth, [])?;
    let mut keys = Vec::with_capacity(rows.len());
    for line in &rows {
        let idx: Vec<u64> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad index `{s}`"))))
            .collect::<Result<_>>()?;
        keys.push(template.key_from_multi_index(&idx)?);
    }
    if keys.len() != expected {
        return Err(Error::Parse(format!("expected {expected} boxes, found {}", keys.len())));
    }
    BoxCollection::from_keys(domain, depth, keys)
}

/// Diffusion model: parameters and eigenvalues in the header; per anchor one
/// row holding its coordinates, q/d normalization sums and eigenvector
/// entries.
pub fn write_model(path: &Path, model: &DiffusionModel) -> Result<()> {
    let m = model.len();
    let k = model.anchors.first().map(|a| a.dim()).unwrap_or(0);
    let n_ev = model.n_ev();
    let mut out = String::new();
    out.push_str("# dmap_model\n");
    let _ = writeln!(out, "# m {m}");
    let _ = writeln!(out, "# k {k}");
    let _ = writeln!(out, "# epsilon {}", fmt(model.params.epsilon));
    let _ = writeln!(out, "# alpha {}", fmt(model.params.alpha));
    let _ = writeln!(out, "# cutoff {}", fmt(model.params.cutoff_radius));
    let _ = writeln!(out, "# min_neighbors {}", model.params.min_neighbors);
    let _ = writeln!(out, "# n_ev {n_ev}");
    let _ = writeln!(out, "# components {}", model.diagnostics.components);
    let _ = writeln!(out, "# isolated {}", model.diagnostics.isolated);
    out.push_str("# eigenvalues");
    for v in &model.eigenvalues {
        out.push(' ');
        out.push_str(&fmt(*v));
    }
    out.push('\n');
    out.push_str("# columns anchor qtilde dtilde psi\n");
    for i in 0..m {
        for c in &model.anchors[i].coords {
            out.push_str(&fmt(*c));
            out.push(' ');
        }
        out.push_str(&fmt(model.q_tilde[i]));
        out.push(' ');
        out.push_str(&fmt(model.d_tilde[i]));
        for l in 0..n_ev {
            out.push(' ');
            out.push_str(&fmt(model.eigenvectors[l][i]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<DiffusionModel> {
    let text = fs::read_to_string(path)?;
    let (headers, rows) = split_file(&text);
    let h = Header::parse(&headers);
    let m = h.count("m")?;
    let k = h.count("k")?;
    let n_ev = h.count("n_ev")?;
    let params = KernelParams {
        epsilon: h.scalar("epsilon")?,
        alpha: h.scalar("alpha")?,
        cutoff_radius: h.scalar("cutoff")?,
        min_neighbors: h.count("min_neighbors")?,
    };
    let diagnostics = GraphDiagnostics {
        components: h.count("components")?,
        isolated: h.count("isolated")?,
    };
    let eigenvalues = h.vector("eigenvalues")?;
    if rows.len() != m || eigenvalues.len() != n_ev {
        return Err(Error::Parse("model shape mismatch".into()));
    }
    let mut anchors = Vec::with_capacity(m);
    let mut q_tilde = Vec::with_capacity(m);
    let mut d_tilde = Vec::with_capacity(m);
    let mut eigenvectors = vec![vec![0.0; m]; n_ev];
    for (i, line) in rows.iter().enumerate() {
        let vals: Vec<f64> =
            line.split_whitespace().map(parse_f64).collect::<Result<_>>()?;
        if vals.len() != k + 2 + n_ev {
            return Err(Error::Parse(format!("row {i} has {} columns", vals.len())));
        }
        anchors.push(crate::state::ObservedPoint::new(vals[..k].to_vec()));
        q_tilde.push(vals[k]);
        d_tilde.push(vals[k + 1]);
        for l in 0..n_ev {
            eigenvectors[l][i] = vals[k + 2 + l];
        }
    }
    Ok(DiffusionModel {
        anchors,
        params,
        q_tilde,
        d_tilde,
        eigenvalues,
        eigenvectors,
        diagnostics,
    })
}

/// Embedding table: named coordinate columns plus the coloring columns used
/// by the figures (third coordinate and phase angle in the (y1, y2) plane).
pub fn write_embedding(path: &Path, coords: &[Vec<f64>]) -> Result<()> {
    let n_coords = coords.first().map(Vec::len).unwrap_or(0);
    let mut out = String::new();
    for l in 1..=n_coords {
        if l > 1 {
            out.push(' ');
        }
        let _ = write!(out, "y{l}");
    }
    out.push_str(" color_y3 phase\n");
    for row in coords {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&fmt(*v));
        }
        let color = row.get(2).copied().unwrap_or(0.0);
        let phase = if row.len() >= 2 { row[1].atan2(row[0]) } else { 0.0 };
        out.push(' ');
        out.push_str(&fmt(color));
        out.push(' ');
        out.push_str(&fmt(phase));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Dimension scan table: (ε, S, log ε, log S, a), with the slope written on
/// the row it is attributed to and `nan` elsewhere.
pub fn write_scan(path: &Path, scan: &DimensionScan) -> Result<()> {
    let n = scan.epsilons.len();
    // forward differences sit on the left endpoint, centered ones on their
    // grid point
    let offset = if scan.slopes.len() + 1 == n { 0usize } else { 1 };
    let mut out = String::new();
    let _ = writeln!(out, "# eps_star {}", fmt(scan.eps_star));
    let _ = writeln!(out, "# d_int {}", fmt(scan.d_int));
    let _ = writeln!(out, "# scan_cutoff {}", fmt(scan.scan_cutoff));
    let _ = writeln!(out, "# linear_region {} {}", scan.linear_region.0, scan.linear_region.1);
    out.push_str("epsilon S log_eps log_S slope\n");
    for i in 0..n {
        let slope = if i >= offset && i - offset < scan.slopes.len() {
            fmt(scan.slopes[i - offset])
        } else {
            "nan".to_string()
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            fmt(scan.epsilons[i]),
            fmt(scan.s_values[i]),
            fmt(scan.epsilons[i].ln()),
            fmt(scan.s_values[i].ln()),
            slope
        );
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read back the tuned bandwidth and dimension estimate of a stored scan.
pub fn read_scan_summary(path: &Path) -> Result<(f64, f64)> {
    let text = fs::read_to_string(path)?;
    let (headers, _) = split_file(&text);
    let h = Header::parse(&headers);
    Ok((h.scalar("eps_star")?, h.scalar("d_int")?))
}
