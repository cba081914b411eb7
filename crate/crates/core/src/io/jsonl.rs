//! One graph per line: `{"n": 3, "edges": [[0, 1], [1, 2]], "label": 0}`.
//! Labels may be integers or strings; node indices are 0-based.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::read_to_string;
use crate::graph::{Graph, LabeledDataset};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    n: usize,
    edges: Vec<(usize, usize)>,
    label: Value,
}

pub fn parse_jsonl(path: &Path) -> Result<LabeledDataset> {
    let name = path
        .file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    parse_jsonl_str(path, &name, &read_to_string(path)?)
}

/// Parses JSONL text; `path` is only used in error messages.
pub fn parse_jsonl_str(path: &Path, name: &str, text: &str) -> Result<LabeledDataset> {
    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let label = match rec.label {
            Value::String(s) => s,
            Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
            other => {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("label must be an integer or string, got {other}"),
                ))
            }
        };
        let g = Graph::new(rec.n, rec.edges).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        graphs.push(g);
        labels.push(label);
    }
    if graphs.is_empty() {
        return Err(Error::Dataset(format!("{}: no graphs", path.display())));
    }
    LabeledDataset::from_named_labels(name, graphs, labels)
}

/// Writes a dataset in the JSONL interchange format. Integer class names are
/// written as numbers.
pub fn write_jsonl<W: Write>(ds: &LabeledDataset, mut out: W) -> Result<()> {
    for (g, &l) in ds.graphs.iter().zip(&ds.labels) {
        let name = &ds.class_names[l];
        let label = name
            .parse::<i64>()
            .ok()
            .filter(|v| v.to_string() == *name)
            .map_or_else(|| Value::String(name.clone()), Value::from);
        let rec = Record {
            n: g.node_count(),
            edges: g.edges().to_vec(),
            label,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(|e| Error::io("<jsonl output>", e))?;
    }
    Ok(())
}
