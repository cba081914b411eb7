//! k-nearest-neighbour classification and repeated k-fold cross-validation.
//!
//! Neighbours are ranked by squared Euclidean distance; equal distances go to
//! the lower row index. A vote tie is resolved in favour of the class of the
//! single nearest neighbour when it is among the tied classes, otherwise the
//! smallest class id.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::FeatureBlock;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalConfig {
    pub neighbors: usize,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    /// 5-NN, 5 folds, 20 repeats.
    fn default() -> Self {
        EvalConfig {
            neighbors: 5,
            folds: 5,
            repeats: 20,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbors < 1 || self.folds < 2 || self.repeats < 1 {
            return Err(Error::InvalidInput(format!(
                "need neighbors >= 1, folds >= 2, repeats >= 1 (got {}, {}, {})",
                self.neighbors, self.folds, self.repeats
            )));
        }
        Ok(())
    }

    /// Shuffle seed of repeat `r`, derived from the base seed.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        splitmix64(self.seed ^ (r as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dense symmetric matrix of squared Euclidean distances between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistances {
    n: usize,
    data: Vec<f64>,
}

impl SquaredDistances {
    pub fn zeros(n: usize) -> Self {
        SquaredDistances {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(Self::from_flat(rows.len(), width, &flat))
    }

    fn from_flat(n: usize, width: usize, flat: &[f64]) -> Self {
        let row = |i: usize| &flat[i * width..(i + 1) * width];
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, out)| {
            let a = row(i);
            for (j, d) in out.iter_mut().enumerate() {
                *d = a.iter().zip(row(j)).map(|(x, y)| (x - y) * (x - y)).sum();
            }
        });
        SquaredDistances { n, data }
    }

    pub fn from_block(block: &FeatureBlock) -> Self {
        Self::from_flat(block.rows(), block.width, &block.data)
    }

    /// Distances on the concatenation of several blocks, accumulated block by
    /// block in the order given.
    pub fn from_blocks(blocks: &[FeatureBlock]) -> Result<Self> {
        let n = blocks.first().map_or(0, FeatureBlock::rows);
        let mut acc = SquaredDistances::zeros(n);
        for b in blocks {
            acc.add(&SquaredDistances::from_block(b))?;
        }
        Ok(acc)
    }

    pub fn add(&mut self, other: &SquaredDistances) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        self.data
            .par_iter_mut()
            .zip(other.data.par_iter())
            .for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn sum(&self, other: &SquaredDistances) -> Result<SquaredDistances> {
        let mut out = self.clone();
        out.add(other)?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Majority vote over `(distance, index, label)` candidates.
fn vote(candidates: &mut [(f64, usize, usize)], k: usize) -> usize {
    let cmp = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    };
    let k = k.min(candidates.len());
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp);
    }
    let nearest = &mut candidates[..k];
    nearest.sort_unstable_by(cmp);

    let classes = nearest.iter().map(|c| c.2).max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; classes];
    for c in nearest.iter() {
        counts[c.2] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    let first = nearest[0].2;
    if counts[first] == top {
        first
    } else {
        counts.iter().position(|&c| c == top).unwrap_or(0)
    }
}

/// Predicts the class of `query` from its `k` nearest training rows.
pub fn knn_predict(train: &[Vec<f64>], labels: &[usize], query: &[f64], k: usize) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if train.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: train.len(),
            got: labels.len(),
        });
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} with {} training rows",
            train.len()
        )));
    }
    let mut candidates = train
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (row, &label))| {
            if row.len() != query.len() {
                return Err(Error::DimensionMismatch {
                    expected: query.len(),
                    got: row.len(),
                });
            }
            let d = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok((d, i, label))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vote(&mut candidates, k))
}

/// Shuffles `0..n` with `seed` and splits it into `folds` parts whose sizes
/// differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Mean accuracy and its per-repeat breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub mean_accuracy: f64,
    pub per_repeat: Vec<f64>,
    pub repeat_seeds: Vec<u64>,
}

/// Repeated k-fold kNN accuracy from a precomputed distance matrix.
///
/// Fold accuracies are averaged uniformly over all folds of all repeats.
pub fn cross_validate_distances(
    dist: &SquaredDistances,
    labels: &[usize],
    cfg: &EvalConfig,
) -> Result<CvReport> {
    cfg.validate()?;
    let n = dist.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if n < cfg.folds {
        return Err(Error::InvalidInput(format!(
            "{n} samples cannot be split into {} folds",
            cfg.folds
        )));
    }
    let smallest_train = n - n.div_ceil(cfg.folds);
    if smallest_train < cfg.neighbors {
        return Err(Error::InvalidInput(format!(
            "training folds hold {smallest_train} samples, fewer than k = {}",
            cfg.neighbors
        )));
    }

    let seeds: Vec<u64> = (0..cfg.repeats).map(|r| cfg.repeat_seed(r)).collect();
    let tasks: Vec<(usize, usize)> = (0..cfg.repeats)
        .flat_map(|r| (0..cfg.folds).map(move |f| (r, f)))
        .collect();
    let assignments: Vec<Vec<Vec<usize>>> = seeds
        .iter()
        .map(|&s| fold_assignment(n, cfg.folds, s))
        .collect();

    let fold_acc: Vec<f64> = tasks
        .par_iter()
        .map(|&(r, f)| {
            let test = &assignments[r][f];
            let mut in_test = vec![false; n];
            for &i in test {
                in_test[i] = true;
            }
            let mut candidates = Vec::with_capacity(n);
            let mut correct = 0usize;
            for &q in test {
                candidates.clear();
                candidates.extend(
                    dist.row(q)
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| !in_test[*j])
                        .map(|(j, &d)| (d, j, labels[j])),
                );
                if vote(&mut candidates, cfg.neighbors) == labels[q] {
                    correct += 1;
                }
            }
            correct as f64 / test.len() as f64
        })
        .collect();

    let per_repeat: Vec<f64> = fold_acc
        .chunks(cfg.folds)
        .map(|c| c.iter().sum::<f64>() / cfg.folds as f64)
        .collect();
    let mean_accuracy = fold_acc.iter().sum::<f64>() / fold_acc.len() as f64;
    Ok(CvReport {
        mean_accuracy,
        per_repeat,
        repeat_seeds: seeds,
    })
}

/// Repeated k-fold kNN accuracy of plain feature rows.
pub fn cross_validate(rows: &[Vec<f64>], labels: &[usize], cfg: &EvalConfig) -> Result<CvReport> {
    cross_validate_distances(&SquaredDistances::from_rows(rows)?, labels, cfg)
}

/// Accuracy of the concatenation of `blocks`.
pub fn cross_validate_blocks(
    blocks: &[FeatureBlock],
    labels: &[usize],
    cfg: &EvalConfig,
) -> Result<CvReport> {
    cross_validate_distances(&SquaredDistances::from_blocks(blocks)?, labels, cfg)
}
