//! Per-graph decomposition cache.
//!
//! Each entry is a JSON sidecar `<key>.json` holding `key`, `n`,
//! `eigenvalues` and column-major `eigenvectors`, where `key` is the SHA-256
//! of the canonical edge list. Entries are written to a temporary file and
//! renamed into place. An entry that fails to parse, carries the wrong key,
//! or does not reproduce the Laplacian is recomputed and overwritten.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{DatasetSpectra, GraphSpectrum};
use crate::graph::{laplacian, Graph, LabeledDataset};
use crate::spectral::{decompose, SpectralDecomposition};
use crate::{Error, Result};

/// Content hash of a graph's node count and sorted edge list.
pub fn content_key(g: &Graph) -> String {
    let mut h = Sha256::new();
    h.update((g.node_count() as u64).to_le_bytes());
    for &(a, b) in g.edges() {
        h.update((a as u64).to_le_bytes());
        h.update((b as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<f64>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    pub repaired: usize,
}

#[derive(Debug)]
pub struct DecompositionCache {
    dir: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
    repaired: AtomicUsize,
}

impl DecompositionCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(DecompositionCache {
            dir,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            repaired: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            repaired: self.repaired.load(Ordering::Relaxed),
        }
    }

    pub fn entry_path(&self, g: &Graph) -> PathBuf {
        self.dir.join(format!("{}.json", content_key(g)))
    }

    fn load(&self, path: &Path, key: &str, l: &DMatrix<f64>) -> std::result::Result<SpectralDecomposition, String> {
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let entry: Entry = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        if entry.key != key {
            return Err(format!("key mismatch ({})", entry.key));
        }
        if entry.n != l.nrows() || entry.eigenvectors.len() != entry.n * entry.n {
            return Err("wrong dimensions".into());
        }
        let vectors = DMatrix::from_column_slice(entry.n, entry.n, &entry.eigenvectors);
        let dec = SpectralDecomposition::from_parts(entry.eigenvalues, vectors).map_err(|e| e.to_string())?;
        dec.verify(l).map_err(|e| e.to_string())?;
        Ok(dec)
    }

    fn store(&self, path: &Path, key: &str, dec: &SpectralDecomposition) -> Result<()> {
        let entry = Entry {
            key: key.to_string(),
            n: dec.len(),
            eigenvalues: dec.eigenvalues().as_slice().to_vec(),
            eigenvectors: dec.eigenvectors().as_slice().to_vec(),
        };
        let tmp = self.dir.join(format!(
            ".{key}.{}.{:?}.tmp",
            std::process::id(),
            std::thread::current().id()
        ));
        fs::write(&tmp, serde_json::to_vec(&entry)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    /// Cached decomposition of `g`, computing and storing it on a miss.
    pub fn get_or_compute(&self, g: &Graph) -> Result<SpectralDecomposition> {
        let key = content_key(g);
        let path = self.entry_path(g);
        let l = laplacian(g);
        if path.exists() {
            match self.load(&path, &key, &l) {
                Ok(dec) => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(dec);
                }
                Err(why) => {
                    warn!("cache entry {} unusable ({why}); recomputing", path.display());
                    self.repaired.fetch_add(1, Ordering::Relaxed);
                }
            }
        } else {
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
        let dec = decompose(&l)?;
        self.store(&path, &key, &dec)?;
        Ok(dec)
    }

    /// Spectra for a whole dataset, through the cache.
    pub fn spectra(&self, ds: &LabeledDataset) -> Result<DatasetSpectra> {
        let graphs = ds
            .graphs
            .par_iter()
            .map(|g| GraphSpectrum::from_decomposition(self.get_or_compute(g)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(DatasetSpectra::from_spectra(graphs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::FilterBank;
    use crate::graph::random_connected_graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset() -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let graphs: Vec<Graph> = (0..12).map(|i| random_connected_graph(3 + i % 7, 0.5, &mut rng)).collect();
        let labels = (0..12).map(|i| (i % 2).to_string()).collect();
        LabeledDataset::from_named_labels("c", graphs, labels).unwrap()
    }

    fn embedding(spectra: &DatasetSpectra) -> Vec<f64> {
        spectra
            .blocks_at(0.37, &FilterBank::standard(), &[0, 1, 3])
            .unwrap()
            .into_iter()
            .flat_map(|b| b.data)
            .collect()
    }

    #[test]
    fn cold_warm_and_uncached_agree_bitwise() {
        let ds = dataset();
        let dir = tempfile::tempdir().unwrap();
        let cache = DecompositionCache::open(dir.path()).unwrap();
        let cold = embedding(&cache.spectra(&ds).unwrap());
        assert_eq!(cache.stats().misses, 12);
        let warm = embedding(&cache.spectra(&ds).unwrap());
        assert_eq!(cache.stats().hits, 12);
        let direct = embedding(&DatasetSpectra::compute(&ds).unwrap());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&cold), bits(&warm));
        assert_eq!(bits(&cold), bits(&direct));
    }

    #[test]
    fn corrupted_entry_is_recomputed() {
        let ds = dataset();
        let dir = tempfile::tempdir().unwrap();
        let cache = DecompositionCache::open(dir.path()).unwrap();
        let g = &ds.graphs[3];
        let good = cache.get_or_compute(g).unwrap();
        fs::write(cache.entry_path(g), b"{not json").unwrap();
        assert_eq!(cache.get_or_compute(g).unwrap(), good);
        assert_eq!(cache.stats().repaired, 1);
        // a valid entry for a different graph under this key
        let other = &ds.graphs[4];
        cache.get_or_compute(other).unwrap();
        fs::copy(cache.entry_path(other), cache.entry_path(g)).unwrap();
        assert_eq!(cache.get_or_compute(g).unwrap(), good);
        assert_eq!(cache.stats().repaired, 2);
        // and the repaired entry now loads cleanly
        cache.get_or_compute(g).unwrap();
        assert_eq!(cache.stats().repaired, 2);
    }

    #[test]
    fn keys_distinguish_graphs() {
        let a = Graph::path(3).unwrap();
        let b = Graph::complete(3).unwrap();
        assert_ne!(content_key(&a), content_key(&b));
        assert_eq!(content_key(&a), content_key(&Graph::new(3, [(2, 1), (1, 0)]).unwrap()));
        assert_eq!(content_key(&a).len(), 64);
    }
}
