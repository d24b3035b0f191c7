//! Instance files.
//!
//! TOML with top-level `k`, `labels`, `multiplicity` (optional, defaults to
//! all ones) and exactly one distance source:
//!
//! ```toml
//! k = 3
//! labels = ["a", "b", "c"]
//! multiplicity = [1, 1, 1]
//! # full matrix, or lower triangle rows of length 1, 2, ..., m
//! matrix = [[0.0], [1.0, 0.0], [2.0, 1.0, 0.0]]
//! # or: edges = [["a", "b", 1.0], ["b", "c", 1.0]]
//! # or: [points] table, one coordinate list per label
//! ```
//!
//! [`serialize`] writes the canonical form: points when the instance has
//! coordinates, otherwise the full matrix, floats in shortest round-trip
//! notation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use corecheck::{from_points, metric_closure, EuclideanConfig, GraphSpec, Instance, MetricError};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    k: usize,
    labels: Vec<String>,
    multiplicity: Option<Vec<usize>>,
    matrix: Option<Vec<Vec<f64>>>,
    edges: Option<Vec<(String, String, f64)>>,
    points: Option<BTreeMap<String, Vec<f64>>>,
}

pub fn parse(text: &str) -> Result<Instance, FormatError> {
    let raw: RawInstance = toml::from_str(text)?;
    let m = raw.labels.len();
    let multiplicity = raw.multiplicity.unwrap_or_else(|| vec![1; m]);
    let sources = [raw.matrix.is_some(), raw.edges.is_some(), raw.points.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(FormatError::Shape("expected exactly one of `matrix`, `edges`, `points`".into()));
    }
    if let Some(rows) = raw.matrix {
        let dist = expand_matrix(rows, m)?;
        return Ok(Instance::new(raw.labels, multiplicity, dist, raw.k)?);
    }
    if let Some(edges) = raw.edges {
        let mut g = GraphSpec::new(raw.labels, multiplicity, raw.k);
        for (a, b, len) in &edges {
            g.edge(a, b, *len)?;
        }
        return Ok(metric_closure(&g)?);
    }
    let mut points = raw.points.expect("one source is present");
    let mut coords = Vec::with_capacity(m);
    for label in &raw.labels {
        let p = points
            .remove(label)
            .ok_or_else(|| FormatError::Shape(format!("no point given for `{label}`")))?;
        coords.push(p);
    }
    if let Some(extra) = points.keys().next() {
        return Err(FormatError::Shape(format!("point `{extra}` is not a listed label")));
    }
    let dim = coords.first().map_or(0, Vec::len);
    if dim == 0 || coords.iter().any(|p| p.len() != dim) {
        return Err(FormatError::Shape("points must share one positive dimension".into()));
    }
    Ok(from_points(&EuclideanConfig { labels: raw.labels, multiplicity, coords, k: raw.k })?)
}

/// Full square matrix as given, or lower triangle (diagonal included)
/// mirrored into a symmetric one.
fn expand_matrix(rows: Vec<Vec<f64>>, m: usize) -> Result<Vec<Vec<f64>>, FormatError> {
    if rows.len() != m {
        return Err(FormatError::Shape(format!("matrix has {} rows for {} labels", rows.len(), m)));
    }
    if rows.iter().all(|r| r.len() == m) {
        return Ok(rows);
    }
    if rows.iter().enumerate().all(|(i, r)| r.len() == i + 1) {
        let mut full = vec![vec![0.0; m]; m];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                full[i][j] = v;
                full[j][i] = v;
            }
        }
        return Ok(full);
    }
    Err(FormatError::Shape("matrix must be full or lower-triangular".into()))
}

/// Reads `path`, falling back to `path.toml` when `path` does not exist.
pub fn load(path: &Path) -> Result<(Instance, String), FormatError> {
    let resolved = resolve(path);
    let text = std::fs::read_to_string(&resolved).map_err(|source| FormatError::Io { path: resolved, source })?;
    Ok((parse(&text)?, text))
}

pub fn resolve(path: &Path) -> PathBuf {
    if !path.exists() {
        let mut with_ext = path.as_os_str().to_owned();
        with_ext.push(".toml");
        let with_ext = PathBuf::from(with_ext);
        if with_ext.exists() {
            return with_ext;
        }
    }
    path.to_path_buf()
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if c.is_control() => write!(out, "\\u{:04X}", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn float_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", items.join(", "))
}

pub fn serialize(inst: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "k = {}", inst.k()).unwrap();
    let labels: Vec<String> = inst.labels().iter().map(|l| quote(l)).collect();
    writeln!(out, "labels = [{}]", labels.join(", ")).unwrap();
    let mult: Vec<String> = inst.multiplicity().iter().map(|c| c.to_string()).collect();
    writeln!(out, "multiplicity = [{}]", mult.join(", ")).unwrap();
    match inst.coords() {
        Some(coords) => {
            out.push_str("\n[points]\n");
            for (label, p) in inst.labels().iter().zip(coords) {
                writeln!(out, "{} = {}", quote(label), float_list(p)).unwrap();
            }
        }
        None => {
            out.push_str("matrix = [\n");
            for row in inst.dist_matrix() {
                writeln!(out, "  {},", float_list(row)).unwrap();
            }
            out.push_str("]\n");
        }
    }
    out
}

/// SHA-256 of the canonical serialization, hex encoded.
pub fn digest(inst: &Instance) -> String {
    hex::encode(Sha256::digest(serialize(inst).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use corecheck::{build_gadget, euclidean_fixture, GadgetParams};

    #[test]
    fn lower_triangle_is_mirrored() {
        let inst = parse("k = 1\nlabels = [\"x\", \"y\"]\nmatrix = [[0], [2.5, 0]]\n").unwrap();
        assert_eq!(inst.dist(0, 1), 2.5);
        assert_eq!(inst.dist(1, 0), 2.5);
        assert_eq!(inst.multiplicity(), &[1, 1]);
    }

    #[test]
    fn edges_are_closed() {
        let text = "k = 1\nlabels = [\"x\", \"y\", \"z\"]\nedges = [[\"x\", \"y\", 1], [\"y\", \"z\", 1], [\"x\", \"z\", 3]]\n";
        assert_eq!(parse(text).unwrap().dist(0, 2), 2.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        for text in [
            "k = 1\nlabels = [\"x\"]\n",
            "k = 1\nlabels = [\"x\"]\nmatrix = [[0]]\nedges = []\n",
            "k = 1\nlabels = [\"x\", \"y\"]\nmatrix = [[0, 1]]\n",
            "k = 1\nlabels = [\"x\"]\n[points]\ny = [0.0]\n",
            "k = 1\nlabels = [\"x\", \"y\"]\n[points]\nx = [0.0]\ny = [0.0, 1.0]\n",
            "k = 1\nlabels = [\"x\"]\nmatrix = [[0]]\nextra = 1\n",
            "k = 1\nlabels = [\"x\"]\nmatrix = [[0]\n",
        ] {
            assert!(parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn canonical_round_trip() {
        for inst in [build_gadget(&GadgetParams::new(4, 12)).unwrap(), euclidean_fixture()] {
            let text = serialize(&inst);
            let back = parse(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(serialize(&back), text);
        }
    }

    #[test]
    fn digest_is_stable() {
        let a = digest(&euclidean_fixture());
        assert_eq!(a, digest(&parse(&serialize(&euclidean_fixture())).unwrap()));
        assert_eq!(a.len(), 64);
        assert_ne!(a, digest(&build_gadget(&GadgetParams::new(3, 9)).unwrap()));
    }
}
