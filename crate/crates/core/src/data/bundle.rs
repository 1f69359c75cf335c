//! Plain-text dataset bundles.
//!
//! ```text
//! meta.json      {"num_nodes": N, "num_classes": C, "feature_dim": d}
//! edges.csv      one "u,v" per line, 0-indexed, u < v, no header
//! features.csv   N lines of d comma-separated reals
//! labels.csv     N lines, one integer in [0, C)
//! splits.json    {"train": [...], "val": [...], "test": [...]}
//! ```
//!
//! `meta.json` may also carry `"num_edges"`, the published edge count of the
//! source dataset.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Split};
use crate::graph::EdgeList;
use crate::numerics::DenseMatrix;

#[derive(Serialize, Deserialize)]
struct Meta {
    num_nodes: usize,
    num_classes: usize,
    feature_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_edges: Option<usize>,
}

fn open_lines(dir: &Path, name: &str) -> Result<Vec<String>, DataError> {
    let path = dir.join(name);
    let file = fs::File::open(&path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => DataError::MissingFile(path.clone()),
        _ => DataError::Io {
            path: path.clone(),
            source,
        },
    })?;
    BufReader::new(file)
        .lines()
        .map(|l| {
            l.map_err(|source| DataError::Io {
                path: path.clone(),
                source,
            })
        })
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T, DataError> {
    let text = open_lines(dir, name)?.join("\n");
    serde_json::from_str(&text).map_err(|e| DataError::Parse {
        file: name.into(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        file: file.into(),
        line,
        message: message.into(),
    }
}

fn parse_usize(file: &str, line: usize, field: &str) -> Result<usize, DataError> {
    field
        .trim()
        .parse()
        .map_err(|e| parse_err(file, line, format!("{field:?}: {e}")))
}

/// Reads and validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let dir = dir.as_ref();
    let meta: Meta = read_json(dir, "meta.json")?;
    let n = meta.num_nodes;

    let mut pairs = Vec::new();
    for (i, line) in open_lines(dir, "edges.csv")?.iter().enumerate() {
        let lineno = i + 1;
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| parse_err("edges.csv", lineno, "expected \"u,v\""))?;
        let (u, v) = (
            parse_usize("edges.csv", lineno, a)?,
            parse_usize("edges.csv", lineno, b)?,
        );
        if u >= v {
            return Err(DataError::NonCanonicalEdge { line: lineno, u, v });
        }
        if v >= n {
            return Err(DataError::NodeOutOfRange {
                file: "edges.csv".into(),
                node: v,
                num_nodes: n,
            });
        }
        pairs.push((u, v));
    }
    let edges = EdgeList::from_pairs(pairs)?;

    let feature_lines = open_lines(dir, "features.csv")?;
    if feature_lines.len() != n {
        return Err(DataError::DimensionMismatch {
            file: "features.csv".into(),
            what: "rows",
            expected: n,
            found: feature_lines.len(),
        });
    }
    let mut data = Vec::with_capacity(n * meta.feature_dim);
    for (i, line) in feature_lines.iter().enumerate() {
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| parse_err("features.csv", i + 1, format!("{field:?}: {e}")))?;
            data.push(v);
        }
        if data.len() - before != meta.feature_dim {
            return Err(DataError::DimensionMismatch {
                file: "features.csv".into(),
                what: "columns",
                expected: meta.feature_dim,
                found: data.len() - before,
            });
        }
    }
    let features = DenseMatrix::from_vec(n, meta.feature_dim, data).expect("row lengths checked");

    let label_lines = open_lines(dir, "labels.csv")?;
    if label_lines.len() != n {
        return Err(DataError::DimensionMismatch {
            file: "labels.csv".into(),
            what: "rows",
            expected: n,
            found: label_lines.len(),
        });
    }
    let labels = label_lines
        .iter()
        .enumerate()
        .map(|(i, l)| parse_usize("labels.csv", i + 1, l))
        .collect::<Result<Vec<_>, _>>()?;

    let mut split: Split = read_json(dir, "splits.json")?;
    for nodes in [&mut split.train, &mut split.val, &mut split.test] {
        nodes.sort_unstable();
    }

    let dataset = Dataset {
        num_nodes: n,
        num_classes: meta.num_classes,
        edges,
        reported_edges: meta.num_edges,
        features,
        labels,
        split,
    };
    dataset.validate()?;
    Ok(dataset)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>, DataError> {
    let path = dir.join(name);
    fs::File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| DataError::Io { path, source })
}

/// Writes `dataset` as a bundle, creating `dir` if needed. Reals are written
/// in shortest round-trip form, so `load_bundle` restores them exactly.
pub fn write_bundle(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<(), DataError> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DataError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;

    let meta = Meta {
        num_nodes: dataset.num_nodes,
        num_classes: dataset.num_classes,
        feature_dim: dataset.feature_dim(),
        num_edges: dataset.reported_edges,
    };
    let mut w = create(dir, "meta.json")?;
    serde_json::to_writer(&mut w, &meta).expect("meta serializes");
    writeln!(w).map_err(io(&dir.join("meta.json")))?;

    let mut w = create(dir, "edges.csv")?;
    for (u, v) in dataset.edges.iter() {
        writeln!(w, "{u},{v}").map_err(io(&dir.join("edges.csv")))?;
    }
    w.flush().map_err(io(&dir.join("edges.csv")))?;

    let mut w = create(dir, "features.csv")?;
    for r in 0..dataset.num_nodes {
        let line: Vec<String> = dataset.features.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io(&dir.join("features.csv")))?;
    }
    w.flush().map_err(io(&dir.join("features.csv")))?;

    let mut w = create(dir, "labels.csv")?;
    for l in &dataset.labels {
        writeln!(w, "{l}").map_err(io(&dir.join("labels.csv")))?;
    }
    w.flush().map_err(io(&dir.join("labels.csv")))?;

    let mut w = create(dir, "splits.json")?;
    serde_json::to_writer(&mut w, &dataset.split).expect("split serializes");
    writeln!(w).map_err(io(&dir.join("splits.json")))?;
    w.flush().map_err(io(&dir.join("splits.json")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny;
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = tiny();
        d.features.set(1, 0, 0.1 + 0.2);
        d.features.set(3, 1, -1.0e-300);
        d.reported_edges = Some(5);
        write_bundle(&d, dir.path()).unwrap();
        assert_eq!(load_bundle(dir.path()).unwrap(), d);
    }

    #[test]
    fn missing_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&tiny(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("labels.csv")).unwrap();
        match load_bundle(dir.path()) {
            Err(DataError::MissingFile(p)) => assert!(p.ends_with("labels.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn feature_row_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("features.csv"), "1,0\n0,1\n").unwrap();
        assert!(matches!(
            load_bundle(dir.path()),
            Err(DataError::DimensionMismatch {
                what: "rows",
                expected: 4,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn label_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("labels.csv"), "0\n0\n7\n1\n").unwrap();
        assert!(matches!(
            load_bundle(dir.path()),
            Err(DataError::LabelOutOfRange { node: 2, label: 7, .. })
        ));
    }

    #[test]
    fn directed_or_reversed_edges_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("edges.csv"), "0,1\n2,1\n").unwrap();
        assert!(matches!(
            load_bundle(dir.path()),
            Err(DataError::NonCanonicalEdge { line: 2, u: 2, v: 1 })
        ));
    }

    #[test]
    fn duplicate_edge_lines_collapse() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("edges.csv"), "0,1\n0,1\n2,3\n").unwrap();
        assert_eq!(load_bundle(dir.path()).unwrap().edges.len(), 2);
    }
}
