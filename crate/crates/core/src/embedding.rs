//! Powered fractional spectra, filtered features, and assembled embedding
//! rows.
//!
//! For a graph with fractional operator `F^α` and power `ω`, the powered
//! spectrum has entries
//!
//! ```text
//! X̂^α_ω[λ_l] = Σ_u (Φ^α_l[u])^ω
//! ```
//!
//! where `Φ^α_l` is the vector with `x̂^α[λ_l] = Σ_u x[u] Φ^α_l[u]`, i.e. row
//! `l` of `F^α` (at `α = 1` this is the eigenvector `φ_l`). A feature is that
//! spectrum multiplied by a filter response, zero-padded to the dataset's
//! largest node count and realified by interleaving real and imaginary
//! parts. Rows are laid out filter-major, power-minor.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::filters::{evaluate_filter, FilterBank, FilterSpec};
use crate::graph::{laplacian, Graph, LabeledDataset};
use crate::spectral::{decompose, FractionalOperator, GftEigenbasis, SpectralDecomposition};
use crate::{Error, Result, C64};

/// Imaginary parts above this at `α = 1` indicate a broken transform.
const REAL_ORDER_IMAG_TOL: f64 = 1e-10;

/// `X̂^α_ω` for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub alpha: f64,
    pub omega: u32,
    pub values: DVector<C64>,
}

impl PowerSpectrum {
    /// Real parts, after checking that the imaginary parts vanish. Only
    /// meaningful for real transforms such as `α = 1`.
    pub fn real_values(&self) -> Result<DVector<f64>> {
        let max_im = self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_im > REAL_ORDER_IMAG_TOL {
            return Err(Error::Decomposition(format!(
                "power spectrum at alpha {} has imaginary part {max_im:e}",
                self.alpha
            )));
        }
        Ok(self.values.map(|z| z.re))
    }
}

/// Integer power by repeated multiplication, with `0⁰ = 1`.
fn ipow(z: C64, omega: u32) -> C64 {
    (0..omega).fold(C64::new(1.0, 0.0), |acc, _| acc * z)
}

pub fn power_spectrum(op: &FractionalOperator, omega: u32) -> PowerSpectrum {
    let m = op.matrix();
    let values = DVector::from_iterator(
        m.nrows(),
        m.row_iter().map(|row| row.iter().map(|&z| ipow(z, omega)).sum::<C64>()),
    );
    PowerSpectrum {
        alpha: op.alpha(),
        omega,
        values,
    }
}

/// Identifies one feature block: filter, power order and fractional order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureKey {
    pub filter: String,
    pub omega: u32,
    pub alpha: f64,
}

impl FeatureKey {
    pub fn new(filter: impl Into<String>, omega: u32, alpha: f64) -> Self {
        FeatureKey {
            filter: filter.into(),
            omega,
            alpha,
        }
    }
}

/// `filter-omega-alpha`, e.g. `AH3-4-0.58`.
impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.filter, self.omega, self.alpha)
    }
}

/// One filtered, powered feature for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFeature {
    pub key: FeatureKey,
    /// Realified values, length `2 · D`.
    pub values: Vec<f64>,
}

/// `(Re v_1, Im v_1, Re v_2, Im v_2, …)`.
pub fn realify(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Zero-extends `v` on the right to length `dim`.
pub fn pad_to<T: Clone + Default>(mut v: Vec<T>, dim: usize) -> Result<Vec<T>> {
    if v.len() > dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    v.resize(dim, T::default());
    Ok(v)
}

/// Complex filtered spectrum `H(λ_l) · X̂^α_ω[λ_l]` before padding.
pub fn filtered_spectrum(
    dec: &SpectralDecomposition,
    op: &FractionalOperator,
    filter: &FilterSpec,
    omega: u32,
) -> Result<Vec<C64>> {
    if op.len() != dec.len() {
        return Err(Error::DimensionMismatch {
            expected: dec.len(),
            got: op.len(),
        });
    }
    let response = evaluate_filter(filter, dec.eigenvalues().as_slice(), dec.max_eigenvalue())?;
    let spectrum = power_spectrum(op, omega);
    Ok(spectrum
        .values
        .iter()
        .zip(response)
        .map(|(x, h)| x * h)
        .collect())
}

/// A single feature, padded to `dim` complex entries and realified.
pub fn feature(
    dec: &SpectralDecomposition,
    op: &FractionalOperator,
    filter: &FilterSpec,
    omega: u32,
    dim: usize,
) -> Result<EmbeddingFeature> {
    let values = pad_to(filtered_spectrum(dec, op, filter, omega)?, dim)?;
    Ok(EmbeddingFeature {
        key: FeatureKey::new(filter.to_string(), omega, op.alpha()),
        values: realify(&values),
    })
}

/// Concatenates features into one embedding row in the given order.
pub fn assemble(features: &[EmbeddingFeature]) -> Result<Vec<f64>> {
    let Some(first) = features.first() else {
        return Ok(Vec::new());
    };
    let width = first.values.len();
    let mut row = Vec::with_capacity(width * features.len());
    for f in features {
        if f.values.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: f.values.len(),
            });
        }
        row.extend_from_slice(&f.values);
    }
    Ok(row)
}

/// Decomposition and GFT eigenbasis of one graph.
#[derive(Debug, Clone)]
pub struct GraphSpectrum {
    pub decomposition: SpectralDecomposition,
    pub eigenbasis: Arc<GftEigenbasis>,
}

impl GraphSpectrum {
    pub fn from_graph(g: &Graph) -> Result<Self> {
        Self::from_decomposition(decompose(&laplacian(g))?)
    }

    pub fn from_decomposition(decomposition: SpectralDecomposition) -> Result<Self> {
        let eigenbasis = Arc::new(decomposition.gft_eigenbasis()?);
        Ok(GraphSpectrum {
            decomposition,
            eigenbasis,
        })
    }

    pub fn operator(&self, alpha: f64) -> Result<FractionalOperator> {
        FractionalOperator::new(Arc::clone(&self.eigenbasis), alpha)
    }
}

/// A feature evaluated on every graph of a dataset: an `n × width` matrix
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub key: FeatureKey,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureBlock {
    pub fn rows(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Spectra for every graph of a dataset, plus the padded dimension.
#[derive(Debug, Clone)]
pub struct DatasetSpectra {
    pub graphs: Vec<GraphSpectrum>,
    pub padded_dim: usize,
}

impl DatasetSpectra {
    /// Decomposes every graph in parallel; output order follows the dataset.
    pub fn compute(dataset: &LabeledDataset) -> Result<Self> {
        let graphs = dataset
            .graphs
            .par_iter()
            .map(GraphSpectrum::from_graph)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_spectra(graphs))
    }

    pub fn from_spectra(graphs: Vec<GraphSpectrum>) -> Self {
        let padded_dim = graphs.iter().map(|g| g.decomposition.len()).max().unwrap_or(0);
        DatasetSpectra { graphs, padded_dim }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Features for every `(filter, ω)` at one shared order `α`, in
    /// filter-major, power-minor order. `F^α` is formed once per graph.
    pub fn blocks_at(
        &self,
        alpha: f64,
        filters: &FilterBank,
        powers: &[u32],
    ) -> Result<Vec<FeatureBlock>> {
        let specs: Vec<(&str, &FilterSpec, u32)> = filters
            .iter()
            .flat_map(|(name, f)| powers.iter().map(move |&w| (name, f, w)))
            .collect();
        let dim = self.padded_dim;
        let per_graph: Vec<Vec<Vec<f64>>> = self
            .graphs
            .par_iter()
            .map(|g| {
                let op = g.operator(alpha)?;
                specs
                    .iter()
                    .map(|(_, f, w)| feature(&g.decomposition, &op, f, *w, dim).map(|e| e.values))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        Ok(specs
            .iter()
            .enumerate()
            .map(|(k, (name, _, w))| {
                let mut data = Vec::with_capacity(self.len() * 2 * dim);
                for g in &per_graph {
                    data.extend_from_slice(&g[k]);
                }
                FeatureBlock {
                    key: FeatureKey::new(*name, *w, alpha),
                    width: 2 * dim,
                    data,
                }
            })
            .collect())
    }

    /// A single feature block.
    pub fn block(&self, name: &str, filter: &FilterSpec, omega: u32, alpha: f64) -> Result<FeatureBlock> {
        let bank = FilterBank::new(vec![*filter])?;
        let mut blocks = self.blocks_at(alpha, &bank, &[omega])?;
        let mut block = blocks.pop().expect("one filter, one power");
        block.key.filter = name.to_string();
        Ok(block)
    }
}

/// One embedding row per graph, with the key of each column block.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: Vec<Vec<f64>>,
    pub blocks: Vec<FeatureKey>,
    pub block_width: usize,
}

impl EmbeddingMatrix {
    /// Concatenates blocks row-wise in the order given.
    pub fn from_blocks(blocks: &[FeatureBlock]) -> Result<Self> {
        let n = blocks.first().map_or(0, FeatureBlock::rows);
        let width = blocks.first().map_or(0, |b| b.width);
        for b in blocks {
            if b.width != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    got: b.width,
                });
            }
            if b.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.rows(),
                });
            }
        }
        let rows = (0..n)
            .map(|i| blocks.iter().flat_map(|b| b.row(i).iter().copied()).collect())
            .collect();
        Ok(EmbeddingMatrix {
            rows,
            blocks: blocks.iter().map(|b| b.key.clone()).collect(),
            block_width: width,
        })
    }

    /// Column names `filter-omega-alpha[index]re|im`.
    pub fn column_names(&self) -> Vec<String> {
        let entries = self.block_width / 2;
        self.blocks
            .iter()
            .flat_map(|k| {
                (0..entries).flat_map(move |i| [format!("{k}[{i}]re"), format!("{k}[{i}]im")])
            })
            .collect()
    }

    /// CSV with a header row; leading `graph` and `label` columns.
    pub fn write_csv<W: Write>(&self, mut out: W, labels: &[String]) -> std::io::Result<()> {
        let mut header = vec!["graph".to_string(), "label".to_string()];
        header.extend(self.column_names());
        writeln!(out, "{}", header.join(","))?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(out, "{i},{}", labels.get(i).map_or("", String::as_str))?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_json<M: Serialize>(&self, metadata: &M, labels: &[String]) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a, M> {
            metadata: &'a M,
            blocks: &'a [FeatureKey],
            block_width: usize,
            labels: &'a [String],
            rows: &'a [Vec<f64>],
        }
        Ok(serde_json::to_string_pretty(&Doc {
            metadata,
            blocks: &self.blocks,
            block_width: self.block_width,
            labels,
            rows: &self.rows,
        })?)
    }
}

/// Builds an embedding whose blocks may each use their own `α`. Blocks are
/// emitted in the order of `keys`; each distinct `α` forms `F^α` once.
pub fn embed_keys(
    spectra: &DatasetSpectra,
    keys: &[(FeatureKey, FilterSpec)],
) -> Result<EmbeddingMatrix> {
    let mut by_alpha: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (k, _)) in keys.iter().enumerate() {
        by_alpha.entry(k.alpha.to_bits()).or_default().push(i);
    }
    let mut blocks: Vec<Option<FeatureBlock>> = vec![None; keys.len()];
    for (bits, idx) in by_alpha {
        let alpha = f64::from_bits(bits);
        for i in idx {
            let (k, f) = &keys[i];
            blocks[i] = Some(spectra.block(&k.filter, f, k.omega, alpha)?);
        }
    }
    let blocks: Vec<FeatureBlock> = blocks.into_iter().map(|b| b.expect("filled")).collect();
    EmbeddingMatrix::from_blocks(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_connected_graph;
    use crate::spectral::gfrft_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spectrum_of(g: &Graph) -> GraphSpectrum {
        GraphSpectrum::from_graph(g).unwrap()
    }

    #[test]
    fn zeroth_power_counts_nodes() {
        let g = Graph::new(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let s = spectrum_of(&g);
        for alpha in [0.0, 0.3, 1.0, -2.2] {
            let ps = power_spectrum(&s.operator(alpha).unwrap(), 0);
            assert!(ps.values.iter().all(|&z| z == C64::new(5.0, 0.0)));
        }
    }

    #[test]
    fn first_power_at_unit_order_is_gft_of_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random_connected_graph(7, 0.4, &mut rng);
        let s = spectrum_of(&g);
        let op = s.operator(1.0).unwrap();
        let ps = power_spectrum(&op, 1).real_values().unwrap();
        let oracle = op.apply_real(&DVector::from_element(7, 1.0)).unwrap().coefficients;
        assert!((ps[0] - 7f64.sqrt()).abs() < 1e-10);
        for l in 0..7 {
            assert!((C64::new(ps[l], 0.0) - oracle[l]).norm() < 1e-10);
        }
    }

    #[test]
    fn second_power_at_unit_order_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = spectrum_of(&random_connected_graph(9, 0.4, &mut rng));
        let ps = power_spectrum(&s.operator(1.0).unwrap(), 2).real_values().unwrap();
        assert!(ps.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn non_real_order_fails_real_check() {
        let s = spectrum_of(&Graph::path(4).unwrap());
        let ps = power_spectrum(&s.operator(0.5).unwrap(), 1);
        assert!(ps.real_values().is_err());
    }

    #[test]
    fn identity_filter_kills_zero_frequency() {
        let s = spectrum_of(&Graph::path(5).unwrap());
        for alpha in [0.2, 1.0, 2.9] {
            for omega in 0..6 {
                let op = s.operator(alpha).unwrap();
                let f = filtered_spectrum(&s.decomposition, &op, &FilterSpec::LambdaIdentity, omega)
                    .unwrap();
                assert!(f[0].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn heat_filter_on_zeroth_power() {
        let s = spectrum_of(&Graph::path(4).unwrap());
        let op = s.operator(0.77).unwrap();
        let f = filtered_spectrum(&s.decomposition, &op, &FilterSpec::Heat { t: 1.0 }, 0).unwrap();
        for (z, l) in f.iter().zip(s.decomposition.eigenvalues().iter()) {
            assert!((z - C64::new(4.0 * (-l).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn realify_and_pad() {
        assert_eq!(realify(&[C64::new(0.0, 1.0)]), vec![0.0, 1.0]);
        assert_eq!(realify(&[C64::new(2.0, 0.0)]), vec![2.0, 0.0]);
        assert_eq!(pad_to(vec![1.0, 2.0, 3.0], 5).unwrap(), vec![1.0, 2.0, 3.0, 0.0, 0.0]);
        assert_eq!(pad_to(vec![1, 2], 2).unwrap(), vec![1, 2]);
        assert!(pad_to(vec![1, 2, 3], 2).is_err());
    }

    #[test]
    fn assemble_preserves_order() {
        let a = EmbeddingFeature {
            key: FeatureKey::new("H1", 1, 1.0),
            values: vec![1.0, 2.0, 3.0, 4.0],
        };
        let b = EmbeddingFeature {
            key: FeatureKey::new("H1", 2, 1.0),
            values: vec![5.0, 6.0, 7.0, 8.0],
        };
        assert_eq!(assemble(std::slice::from_ref(&a)).unwrap(), a.values);
        assert_eq!(
            assemble(&[a.clone(), b]).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        );
        let short = EmbeddingFeature {
            key: FeatureKey::new("X", 0, 1.0),
            values: vec![0.0],
        };
        assert!(assemble(&[a, short]).is_err());
    }

    #[test]
    fn standard_bank_gives_sixty_blocks() {
        let ds = LabeledDataset::from_named_labels(
            "letters",
            vec![Graph::path(4).unwrap(), Graph::new(5, [(0, 1), (2, 3), (3, 4)]).unwrap()],
            vec!["A".into(), "E".into()],
        )
        .unwrap();
        let spectra = DatasetSpectra::compute(&ds).unwrap();
        let powers: Vec<u32> = (0..6).collect();
        let blocks = spectra.blocks_at(0.4, &FilterBank::standard(), &powers).unwrap();
        assert_eq!(blocks.len(), 60);
        let m = EmbeddingMatrix::from_blocks(&blocks).unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.rows[0].len(), 60 * 2 * 5);
        assert_eq!(m.blocks[0].to_string(), "X-0-0.4");
        assert_eq!(m.blocks[1].to_string(), "X-1-0.4");
        assert_eq!(m.blocks[6].to_string(), "H1-0-0.4");
        assert_eq!(m.column_names()[..3], ["X-0-0.4[0]re", "X-0-0.4[0]im", "X-0-0.4[1]re"]);
    }

    #[test]
    fn feature_matches_free_function_route() {
        let g = Graph::path(3).unwrap();
        let s = spectrum_of(&g);
        let op = gfrft_matrix(&s.decomposition, 0.6).unwrap();
        let f = feature(&s.decomposition, &op, &FilterSpec::AntiHeat { t: 3.0 }, 4, 5).unwrap();
        assert_eq!(f.values.len(), 10);
        assert_eq!(&f.values[6..], &[0.0; 4]);
        assert_eq!(f.key.to_string(), "AH3-4-0.6");
    }

    #[test]
    fn relabeling_invariance_at_unit_order() {
        // graphs with simple spectrum and an unambiguous sign-defining entry
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        while checked < 10 {
            let g = random_connected_graph(8, 0.4, &mut rng);
            let s = spectrum_of(&g);
            let ev = s.decomposition.eigenvalues();
            if ev.as_slice().windows(2).any(|w| w[1] - w[0] < 1e-6) {
                continue;
            }
            let perm: Vec<usize> = (0..8).rev().collect();
            let s2 = spectrum_of(&g.relabel(&perm).unwrap());
            for f in FilterBank::standard().iter().map(|(_, f)| *f) {
                for omega in 0..6 {
                    let a = filtered_spectrum(&s.decomposition, &s.operator(1.0).unwrap(), &f, omega)
                        .unwrap();
                    let b = filtered_spectrum(&s2.decomposition, &s2.operator(1.0).unwrap(), &f, omega)
                        .unwrap();
                    for (x, y) in a.iter().zip(&b) {
                        // odd powers flip with eigenvector sign ties; skip those
                        if omega % 2 == 1 && (x + y).norm() < 1e-8 && x.norm() > 1e-8 {
                            continue;
                        }
                        assert!((x - y).norm() <= 1e-8, "{f} {omega}: {x} vs {y}");
                    }
                }
            }
            checked += 1;
        }
    }
}
