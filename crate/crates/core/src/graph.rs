//! Simple undirected graphs, labelled graph datasets, and the adjacency,
//! degree and Laplacian matrices built from them.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// A simple undirected, unweighted graph on nodes `0..node_count`.
///
/// Edges are stored once per unordered pair as `(lo, hi)` with `lo < hi`,
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list. Repeated pairs (in either
    /// orientation) collapse to one edge; self-loops and out-of-range
    /// endpoints are rejected.
    pub fn new<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if node_count == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Graph {
            node_count,
            edges: set.into_iter().collect(),
        })
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Returns a copy with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count {
            return Err(Error::DimensionMismatch {
                expected: self.node_count,
                got: perm.len(),
            });
        }
        Graph::new(
            self.node_count,
            self.edges.iter().map(|&(a, b)| (perm[a], perm[b])),
        )
    }

    /// Number of connected components (isolated nodes count as components).
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.node_count;
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }
}

/// Erdős–Rényi graph: each of the `n(n-1)/2` pairs is an edge with
/// probability `p`.
pub fn random_graph<R: rand::Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n.max(1), edges).expect("generated edges are in range")
}

/// Erdős–Rényi graph conditioned on connectivity (rejection sampling).
pub fn random_connected_graph<R: rand::Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    loop {
        let g = random_graph(n, p, rng);
        if g.is_connected() {
            return g;
        }
    }
}

/// Symmetric 0/1 adjacency matrix with zero diagonal.
pub fn adjacency_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}

/// Diagonal matrix of column sums of `a`.
pub fn degree_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        d[(j, j)] = a.column(j).sum();
    }
    d
}

/// Combinatorial Laplacian `L = D - A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let a = adjacency_matrix(g);
    degree_matrix(&a) - a
}

/// Per-node side information carried by some dataset formats. The embedding
/// only uses graph structure; these are kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeAttributes {
    Labels(Vec<i64>),
    Positions(Vec<[f64; 2]>),
}

/// An ordered collection of graphs with one class label each.
///
/// Class labels are stored as dense indices into `class_names`, which is
/// sorted (numerically when every name parses as an integer).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub node_attributes: Option<Vec<NodeAttributes>>,
}

impl LabeledDataset {
    pub fn from_named_labels(
        name: impl Into<String>,
        graphs: Vec<Graph>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        let mut class_names: Vec<String> = labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if class_names.iter().all(|c| c.parse::<i64>().is_ok()) {
            class_names.sort_by_key(|c| c.parse::<i64>().unwrap_or_default());
        }
        let labels = labels
            .iter()
            .map(|l| class_names.iter().position(|c| c == l).unwrap_or_default())
            .collect();
        Ok(LabeledDataset {
            name: name.into(),
            graphs,
            labels,
            class_names,
            node_attributes: None,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Largest node count in the dataset; the padded feature width.
    pub fn max_nodes(&self) -> usize {
        self.graphs.iter().map(Graph::node_count).max().unwrap_or(0)
    }

    pub fn stats(&self) -> DatasetStats {
        let n = self.graphs.len().max(1) as f64;
        DatasetStats {
            name: self.name.clone(),
            graphs: self.graphs.len(),
            classes: self.class_count(),
            mean_vertices: self.graphs.iter().map(|g| g.node_count() as f64).sum::<f64>() / n,
            mean_edges: self.graphs.iter().map(|g| g.edge_count() as f64).sum::<f64>() / n,
        }
    }

    /// Checks that the dataset is usable for classification.
    pub fn validate_for_classification(&self) -> Result<()> {
        if self.class_count() < 2 {
            return Err(Error::Dataset(format!(
                "dataset {} has {} class(es); at least 2 are required",
                self.name,
                self.class_count()
            )));
        }
        Ok(())
    }
}

/// Summary statistics in the layout of a dataset table: graph count, class
/// count, mean vertices and mean undirected edges per graph.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DatasetStats {
    pub name: String,
    pub graphs: usize,
    pub classes: usize,
    pub mean_vertices: f64,
    pub mean_edges: f64,
}
