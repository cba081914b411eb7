//! TUDataset flat-file layout: `<DS>_A.txt` (1-based `row, col` node pairs,
//! each undirected edge usually listed in both directions),
//! `<DS>_graph_indicator.txt` (graph id per node) and
//! `<DS>_graph_labels.txt` (label per graph). `<DS>_node_labels.txt` is read
//! when present.

use std::path::{Path, PathBuf};

use log::warn;

use super::read_to_string;
use crate::graph::{Graph, LabeledDataset, NodeAttributes};
use crate::{Error, Result};

/// Resolves the directory holding the `<name>_*.txt` files: either `root`
/// itself or `root/<name>`.
fn dataset_dir(root: &Path, name: &str) -> PathBuf {
    let nested = root.join(name);
    if nested.join(format!("{name}_A.txt")).exists() {
        nested
    } else {
        root.to_path_buf()
    }
}

fn parse_ints(path: &Path, text: &str, columns: usize) -> Result<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != columns {
            let msg = if columns == 2 && fields.len() == 3 {
                "weighted edges are not supported".to_string()
            } else {
                format!("expected {columns} value(s), found {}", fields.len())
            };
            return Err(Error::parse(path, i + 1, msg));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<i64>()
                    .map_err(|_| Error::parse(path, i + 1, format!("not an integer: {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(values);
    }
    Ok(out)
}

pub fn parse_tudataset(root: &Path, name: &str) -> Result<LabeledDataset> {
    let dir = dataset_dir(root, name);
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_path = file("graph_indicator");
    let indicator = parse_ints(&indicator_path, &read_to_string(&indicator_path)?, 1)?;
    let labels_path = file("graph_labels");
    let graph_labels = parse_ints(&labels_path, &read_to_string(&labels_path)?, 1)?;
    let graph_count = graph_labels.len();

    // node (0-based global) -> (graph, local index)
    let mut sizes = vec![0usize; graph_count];
    let mut placement = Vec::with_capacity(indicator.len());
    for (i, row) in indicator.iter().enumerate() {
        let g = row[0];
        if g < 1 || g as usize > graph_count {
            return Err(Error::parse(
                &indicator_path,
                i + 1,
                format!("graph id {g} outside 1..={graph_count}"),
            ));
        }
        let g = g as usize - 1;
        placement.push((g, sizes[g]));
        sizes[g] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Dataset(format!(
            "{name}: graph {} has no nodes",
            empty + 1
        )));
    }

    let edges_path = file("A");
    let pairs = parse_ints(&edges_path, &read_to_string(&edges_path)?, 2)?;
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_count];
    let mut self_loops = 0usize;
    for (i, pair) in pairs.iter().enumerate() {
        let mut ends = [(0usize, 0usize); 2];
        for (slot, &node) in ends.iter_mut().zip(pair) {
            if node < 1 || node as usize > placement.len() {
                return Err(Error::parse(
                    &edges_path,
                    i + 1,
                    format!("node {node} is assigned to no graph"),
                ));
            }
            *slot = placement[node as usize - 1];
        }
        let [(ga, la), (gb, lb)] = ends;
        if ga != gb {
            return Err(Error::parse(
                &edges_path,
                i + 1,
                format!("edge crosses graphs {} and {}", ga + 1, gb + 1),
            ));
        }
        if la == lb {
            self_loops += 1;
            continue;
        }
        edges[ga].push((la, lb));
    }
    if self_loops > 0 {
        warn!("{name}: dropped {self_loops} self-loop entries");
    }

    let graphs = sizes
        .iter()
        .zip(edges)
        .map(|(&n, e)| Graph::new(n, e))
        .collect::<Result<Vec<_>>>()?;
    let labels = graph_labels.iter().map(|l| l[0].to_string()).collect();
    let mut dataset = LabeledDataset::from_named_labels(name, graphs, labels)?;

    let node_labels_path = file("node_labels");
    if node_labels_path.exists() {
        let node_labels = parse_ints(&node_labels_path, &read_to_string(&node_labels_path)?, 1)?;
        if node_labels.len() != placement.len() {
            return Err(Error::Dataset(format!(
                "{name}: {} node labels for {} nodes",
                node_labels.len(),
                placement.len()
            )));
        }
        let mut per_graph: Vec<Vec<i64>> = sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
        for (&(g, _), l) in placement.iter().zip(&node_labels) {
            per_graph[g].push(l[0]);
        }
        dataset.node_attributes = Some(per_graph.into_iter().map(NodeAttributes::Labels).collect());
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, suffix: &str, body: &str) {
        fs::write(dir.join(format!("{name}_{suffix}.txt")), body).unwrap();
    }

    #[test]
    fn minimal_fixture() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T", "A", "1, 2\n2, 1\n");
        write(dir.path(), "T", "graph_indicator", "1\n1\n");
        write(dir.path(), "T", "graph_labels", "1\n");
        let ds = parse_tudataset(dir.path(), "T").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs[0], Graph::new(2, [(0, 1)]).unwrap());
        assert_eq!(ds.class_names, vec!["1"]);
    }

    #[test]
    fn two_graphs_with_node_labels_in_subdir() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("T");
        fs::create_dir(&dir).unwrap();
        write(&dir, "T", "A", "1,2\n2,1\n2,3\n3,2\n4,5\n5,4\n5,5\n");
        write(&dir, "T", "graph_indicator", "1\n1\n1\n2\n2\n");
        write(&dir, "T", "graph_labels", "-1\n1\n");
        write(&dir, "T", "node_labels", "3\n3\n4\n0\n1\n");
        let ds = parse_tudataset(root.path(), "T").unwrap();
        assert_eq!(ds.graphs[0], Graph::path(3).unwrap());
        assert_eq!(ds.graphs[1], Graph::new(2, [(0, 1)]).unwrap());
        assert_eq!(ds.labels, vec![0, 1]);
        assert_eq!(ds.class_names, vec!["-1", "1"]);
        assert_eq!(
            ds.node_attributes.as_ref().unwrap()[1],
            NodeAttributes::Labels(vec![0, 1])
        );
        assert_eq!(ds.stats().mean_edges, 1.5);
    }

    #[test]
    fn malformed_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T", "A", "1, 2\n1; x\n");
        write(dir.path(), "T", "graph_indicator", "1\n1\n");
        write(dir.path(), "T", "graph_labels", "1\n");
        match parse_tudataset(dir.path(), "T") {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 2);
                assert!(path.ends_with("T_A.txt"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T", "graph_indicator", "1\n1\n2\n");
        write(dir.path(), "T", "graph_labels", "1\n2\n");
        // edge across graphs
        write(dir.path(), "T", "A", "2, 3\n");
        assert!(parse_tudataset(dir.path(), "T").is_err());
        // node outside indicator
        write(dir.path(), "T", "A", "1, 9\n");
        assert!(parse_tudataset(dir.path(), "T").is_err());
        // weighted edge
        write(dir.path(), "T", "A", "1, 2, 0.5\n");
        assert!(parse_tudataset(dir.path(), "T").is_err());
        // graph with no nodes
        write(dir.path(), "T", "A", "1, 2\n");
        write(dir.path(), "T", "graph_labels", "1\n2\n1\n");
        assert!(parse_tudataset(dir.path(), "T").is_err());
        // missing file
        assert!(matches!(parse_tudataset(dir.path(), "U"), Err(Error::Io { .. })));
    }
}
