//! GXL graphs listed by CXL index files (the IAM Letter layout).
//!
//! A CXL index holds `<print file="X.gxl" class="A"/>` entries; each GXL file
//! holds one `<graph>` with `<node id=…>` and `<edge from=… to=…>` elements.
//! Node `x`/`y` attributes are kept as positions; only structure feeds the
//! embedding.

use std::collections::HashMap;
use std::path::Path;

use roxmltree::{Document, Node, ParsingOptions};

use super::read_to_string;
use crate::graph::{Graph, LabeledDataset, NodeAttributes};
use crate::{Error, Result};

/// Index files of a Letter distortion level, in load order.
pub const LETTER_SPLITS: [&str; 3] = ["train.cxl", "validation.cxl", "test.cxl"];

fn parse_xml<'a>(path: &Path, text: &'a str) -> Result<Document<'a>> {
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    Document::parse_with_options(text, opts).map_err(|e| {
        let pos = e.pos();
        Error::parse(path, pos.row as usize, e.to_string())
    })
}

fn line_of(doc: &Document, node: Node) -> usize {
    doc.text_pos_at(node.range().start).row as usize
}

fn float_attr(node: Node, name: &str) -> Option<f64> {
    node.children()
        .find(|c| c.has_tag_name("attr") && c.attribute("name") == Some(name))?
        .descendants()
        .find(|c| c.is_text())?
        .text()?
        .trim()
        .parse()
        .ok()
}

/// Parses one GXL file into a graph and its node positions.
pub fn parse_gxl_graph(path: &Path) -> Result<(Graph, Vec<[f64; 2]>)> {
    let text = read_to_string(path)?;
    let doc = parse_xml(path, &text)?;
    let graph = doc
        .descendants()
        .find(|n| n.has_tag_name("graph"))
        .ok_or_else(|| Error::parse(path, 1, "no <graph> element"))?;

    let mut index = HashMap::new();
    let mut positions = Vec::new();
    for node in graph.children().filter(|n| n.has_tag_name("node")) {
        let id = node
            .attribute("id")
            .ok_or_else(|| Error::parse(path, line_of(&doc, node), "node without id"))?;
        if index.insert(id, positions.len()).is_some() {
            return Err(Error::parse(path, line_of(&doc, node), format!("duplicate node id {id}")));
        }
        positions.push([
            float_attr(node, "x").unwrap_or(f64::NAN),
            float_attr(node, "y").unwrap_or(f64::NAN),
        ]);
    }

    let mut edges = Vec::new();
    for edge in graph.children().filter(|n| n.has_tag_name("edge")) {
        let line = line_of(&doc, edge);
        let end = |attr: &str| -> Result<usize> {
            let id = edge
                .attribute(attr)
                .ok_or_else(|| Error::parse(path, line, format!("edge without {attr}")))?;
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::parse(path, line, format!("dangling edge endpoint {id}")))
        };
        let (a, b) = (end("from")?, end("to")?);
        if a == b {
            return Err(Error::parse(path, line, "self-loop edge"));
        }
        edges.push((a, b));
    }
    let g = Graph::new(positions.len(), edges)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    Ok((g, positions))
}

/// Loads every graph listed in the given CXL index files under `root`.
pub fn parse_gxl_dataset(root: &Path, name: &str, split_files: &[&str]) -> Result<LabeledDataset> {
    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    let mut positions = Vec::new();
    for split in split_files {
        let path = root.join(split);
        let text = read_to_string(&path)?;
        let doc = parse_xml(&path, &text)?;
        for print in doc.descendants().filter(|n| n.has_tag_name("print")) {
            let line = line_of(&doc, print);
            let file = print
                .attribute("file")
                .ok_or_else(|| Error::parse(&path, line, "entry without file attribute"))?;
            let class = print
                .attribute("class")
                .ok_or_else(|| Error::parse(&path, line, format!("{file}: missing class attribute")))?;
            let (g, pos) = parse_gxl_graph(&root.join(file))?;
            graphs.push(g);
            positions.push(NodeAttributes::Positions(pos));
            labels.push(class.to_string());
        }
    }
    if graphs.is_empty() {
        return Err(Error::Dataset(format!("{name}: index files list no graphs")));
    }
    let mut ds = LabeledDataset::from_named_labels(name, graphs, labels)?;
    ds.node_attributes = Some(positions);
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    const P3: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<!DOCTYPE gxl SYSTEM "http://www.gupro.de/GXL/gxl-1.0.dtd">
<gxl>
<graph id="AP1_0000" edgeids="false" edgemode="undirected">
<node id="_0"><attr name="x"><float>0.5</float></attr><attr name="y"><float>1.25</float></attr></node>
<node id="_1"><attr name="x"><float>1.0</float></attr><attr name="y"><float>2.0</float></attr></node>
<node id="_2"><attr name="x"><float>1.5</float></attr><attr name="y"><float>0.0</float></attr></node>
<edge from="_0" to="_1"/>
<edge from="_2" to="_1"/>
<edge from="_1" to="_0"/>
</graph>
</gxl>
"#;

    #[test]
    fn path_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.gxl");
        fs::write(&p, P3).unwrap();
        let (g, pos) = parse_gxl_graph(&p).unwrap();
        assert_eq!(g, Graph::path(3).unwrap());
        assert_eq!(pos[0], [0.5, 1.25]);
    }

    #[test]
    fn dataset_from_index() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.gxl"), P3).unwrap();
        fs::write(dir.path().join("b.gxl"), P3.replace(r#"<edge from="_2" to="_1"/>"#, "")).unwrap();
        fs::write(
            dir.path().join("train.cxl"),
            r#"<?xml version="1.0"?><GraphCollection><fingerprints path="." count="2">
<print file="a.gxl" class="A"/>
<print file="b.gxl" class="E"/>
</fingerprints></GraphCollection>"#,
        )
        .unwrap();
        let ds = parse_gxl_dataset(dir.path(), "L", &["train.cxl"]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.class_names, vec!["A", "E"]);
        assert_eq!(ds.graphs[1].edge_count(), 1);
    }

    #[test]
    fn error_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.gxl");
        fs::write(&p, "<gxl><graph><node id=\"a\"></graph></gxl>").unwrap();
        assert!(matches!(parse_gxl_graph(&p), Err(Error::Parse { .. })));

        fs::write(&p, P3.replace(r#"to="_1"/>"#, r#"to="_9"/>"#)).unwrap();
        let err = parse_gxl_graph(&p).unwrap_err().to_string();
        assert!(err.contains("dangling"), "{err}");

        fs::write(dir.path().join("ok.gxl"), P3).unwrap();
        fs::write(
            dir.path().join("train.cxl"),
            r#"<GraphCollection><fingerprints><print file="ok.gxl"/></fingerprints></GraphCollection>"#,
        )
        .unwrap();
        let err = parse_gxl_dataset(dir.path(), "L", &["train.cxl"]).unwrap_err().to_string();
        assert!(err.contains("missing class"), "{err}");
    }
}
