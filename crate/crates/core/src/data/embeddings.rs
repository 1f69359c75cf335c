use std::path::Path;

use super::DataError;
use crate::numerics::DenseMatrix;

/// One row of an exported embedding table.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRow {
    pub node: usize,
    pub label: usize,
    pub high_confidence: bool,
    pub agreed: bool,
    pub embedding: Vec<f64>,
}

fn io_err(path: &Path) -> impl Fn(csv::Error) -> DataError + '_ {
    move |e| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io {
                path: path.to_path_buf(),
                source,
            },
            kind => DataError::Parse {
                file: path.display().to_string(),
                line,
                message: format!("{kind:?}"),
            },
        }
    }
}

/// Writes `node,label,high_confidence,agreed,h0,..,h{d-1}`, one row per node.
pub fn export_embeddings(
    path: impl AsRef<Path>,
    embeddings: &DenseMatrix,
    labels: &[usize],
    high_confidence: &[bool],
    agreed: &[bool],
) -> Result<(), DataError> {
    let path = path.as_ref();
    let n = embeddings.rows();
    for (what, len) in [
        ("labels", labels.len()),
        ("high_confidence", high_confidence.len()),
        ("agreed", agreed.len()),
    ] {
        if len != n {
            return Err(DataError::DimensionMismatch {
                file: path.display().to_string(),
                what,
                expected: n,
                found: len,
            });
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(io_err(path))?;
    let mut header = vec![
        "node".to_string(),
        "label".into(),
        "high_confidence".into(),
        "agreed".into(),
    ];
    header.extend((0..embeddings.cols()).map(|j| format!("h{j}")));
    w.write_record(&header).map_err(io_err(path))?;
    for u in 0..n {
        let mut rec = vec![
            u.to_string(),
            labels[u].to_string(),
            u8::from(high_confidence[u]).to_string(),
            u8::from(agreed[u]).to_string(),
        ];
        rec.extend(embeddings.row(u).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(io_err(path))?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a table written by [`export_embeddings`].
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRow>, DataError> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(io_err(path))?;
        let line = i + 2;
        let bad = |m: String| DataError::Parse {
            file: file.clone(),
            line,
            message: m,
        };
        if rec.len() < 4 {
            return Err(bad(format!("expected at least 4 fields, found {}", rec.len())));
        }
        let int = |j: usize| rec[j].parse::<usize>().map_err(|e| bad(format!("{:?}: {e}", &rec[j])));
        let flag = |j: usize| match &rec[j] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(bad(format!("flag {other:?} is not 0 or 1"))),
        };
        let embedding = (4..rec.len())
            .map(|j| rec[j].parse::<f64>().map_err(|e| bad(format!("{:?}: {e}", &rec[j]))))
            .collect::<Result<_, _>>()?;
        rows.push(EmbeddingRow {
            node: int(0)?,
            label: int(1)?,
            high_confidence: flag(2)?,
            agreed: flag(3)?,
            embedding,
        });
    }
    Ok(rows)
}
