//! Fractional-order grid search and greedy forward feature selection.

use std::cmp::Ordering;

use log::{debug, info};
use serde::Serialize;

use crate::embedding::{DatasetSpectra, FeatureBlock, FeatureKey};
use crate::eval::{cross_validate_distances, CvReport, EvalConfig, SquaredDistances};
use crate::filters::{FilterBank, FilterSpec};
use crate::{Error, Result};

/// Grid points are rounded to this many decimal places so that decimal
/// steps land exactly on values such as `1.0`.
const GRID_DECIMALS: f64 = 1e9;

/// Distance matrices for forward selection are cached up to this many bytes.
const DISTANCE_CACHE_BYTES: usize = 2 << 30;

/// Ordered set of fractional orders to search. Always contains `α = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaGrid {
    points: Vec<f64>,
}

impl AlphaGrid {
    /// Inclusive range `lo, lo + step, …, hi`.
    pub fn range(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "invalid alpha grid lo={lo} hi={hi} step={step}"
            )));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let points = (0..count)
            .map(|k| ((lo + k as f64 * step) * GRID_DECIMALS).round() / GRID_DECIMALS)
            .collect();
        Self::from_points(points)
    }

    /// 301 points from −3 to 3 in steps of 0.02.
    pub fn standard() -> Self {
        Self::range(-3.0, 3.0, 0.02).expect("standard grid is valid")
    }

    /// The single point `α = 1`.
    pub fn unit() -> Self {
        AlphaGrid { points: vec![1.0] }
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if !points.contains(&1.0) {
            return Err(Error::InvalidInput("alpha grid must contain 1.0".into()));
        }
        if let Some(bad) = points.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite alpha {bad}")));
        }
        Ok(AlphaGrid { points })
    }

    /// Every `stride`-th point, plus `α = 1` if the stride skipped it.
    pub fn subsample(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let mut points: Vec<f64> = self.points.iter().copied().step_by(stride).collect();
        if !points.contains(&1.0) {
            points.push(1.0);
            points.sort_by(f64::total_cmp);
        }
        AlphaGrid { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Orders `(accuracy, α)` results: higher accuracy first, then `α` closer to
/// 1, then smaller `α`.
fn rank(a: (f64, f64), b: (f64, f64)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then((a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
        .then(a.1.total_cmp(&b.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaAccuracy {
    pub alpha: f64,
    pub accuracy: f64,
}

/// Accuracy for every searched `α` and the best of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub per_alpha: Vec<AlphaAccuracy>,
    pub best_alpha: f64,
    pub best_accuracy: f64,
    /// Per-repeat accuracies, aligned with `per_alpha`.
    pub per_repeat: Vec<Vec<f64>>,
}

impl AccuracyReport {
    fn from_results(results: Vec<(f64, CvReport)>) -> Result<Self> {
        let best = results
            .iter()
            .map(|(a, r)| (r.mean_accuracy, *a))
            .min_by(|x, y| rank(*x, *y))
            .ok_or_else(|| Error::InvalidInput("empty alpha grid".into()))?;
        Ok(AccuracyReport {
            per_alpha: results
                .iter()
                .map(|(a, r)| AlphaAccuracy {
                    alpha: *a,
                    accuracy: r.mean_accuracy,
                })
                .collect(),
            best_alpha: best.1,
            best_accuracy: best.0,
            per_repeat: results.into_iter().map(|(_, r)| r.per_repeat).collect(),
        })
    }

    pub fn accuracy_at(&self, alpha: f64) -> Option<f64> {
        self.per_alpha
            .iter()
            .find(|p| p.alpha == alpha)
            .map(|p| p.accuracy)
    }

    /// `alpha,accuracy` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,accuracy\n");
        for p in &self.per_alpha {
            out.push_str(&format!("{},{}\n", p.alpha, p.accuracy));
        }
        out
    }
}

/// Evaluates the full filter × power embedding at each `α` of the grid,
/// with all blocks sharing that `α`.
pub fn grid_search_alpha(
    spectra: &DatasetSpectra,
    labels: &[usize],
    filters: &FilterBank,
    powers: &[u32],
    grid: &AlphaGrid,
    cfg: &EvalConfig,
) -> Result<AccuracyReport> {
    let mut results = Vec::with_capacity(grid.len());
    for &alpha in grid.points() {
        let blocks = spectra.blocks_at(alpha, filters, powers)?;
        let report = cross_validate_distances(&SquaredDistances::from_blocks(&blocks)?, labels, cfg)?;
        debug!("alpha {alpha}: accuracy {}", report.mean_accuracy);
        results.push((alpha, report));
    }
    AccuracyReport::from_results(results)
}

/// Outcome of searching `α` for a single `(filter, ω)` feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSearch {
    pub report: AccuracyReport,
    /// The feature at its best `α`.
    pub block: FeatureBlock,
}

/// Searches `α` independently for every `(filter, ω)` pair. `F^α` is formed
/// once per graph and grid point and shared by all pairs. Results are in
/// filter-major, power-minor order.
pub fn per_feature_search_all(
    spectra: &DatasetSpectra,
    labels: &[usize],
    filters: &FilterBank,
    powers: &[u32],
    grid: &AlphaGrid,
    cfg: &EvalConfig,
) -> Result<Vec<FeatureSearch>> {
    let pairs = filters.len() * powers.len();
    let mut results: Vec<Vec<(f64, CvReport)>> = vec![Vec::with_capacity(grid.len()); pairs];
    let mut best: Vec<Option<(f64, FeatureBlock)>> = vec![None; pairs];
    for (step, &alpha) in grid.points().iter().enumerate() {
        let blocks = spectra.blocks_at(alpha, filters, powers)?;
        for (k, block) in blocks.into_iter().enumerate() {
            let report = cross_validate_distances(&SquaredDistances::from_block(&block), labels, cfg)?;
            let acc = report.mean_accuracy;
            results[k].push((alpha, report));
            let replace = match &best[k] {
                None => true,
                Some((b_acc, b)) => rank((acc, alpha), (*b_acc, b.key.alpha)) == Ordering::Less,
            };
            if replace {
                best[k] = Some((acc, block));
            }
        }
        if (step + 1) % 25 == 0 {
            info!("per-feature search: {}/{} alpha values", step + 1, grid.len());
        }
    }
    results
        .into_iter()
        .zip(best)
        .map(|(r, b)| {
            Ok(FeatureSearch {
                report: AccuracyReport::from_results(r)?,
                block: b.expect("grid is non-empty").1,
            })
        })
        .collect()
}

/// Searches `α` for one feature and returns its best order, accuracy and
/// block.
pub fn per_feature_alpha_search(
    spectra: &DatasetSpectra,
    labels: &[usize],
    filter: &FilterSpec,
    omega: u32,
    grid: &AlphaGrid,
    cfg: &EvalConfig,
) -> Result<FeatureSearch> {
    let bank = FilterBank::new(vec![*filter])?;
    let mut all = per_feature_search_all(spectra, labels, &bank, &[omega], grid, cfg)?;
    Ok(all.pop().expect("one feature"))
}

/// How candidate features get their fractional order.
#[derive(Debug, Clone, PartialEq)]
pub enum CandidateMode {
    /// Every feature at `α = 1`.
    Unit,
    /// Every feature at its own best `α` over the grid.
    PerFeature(AlphaGrid),
}

/// Builds the forward-selection candidate pool: one block per
/// `(filter, ω)`, filter-major, power-minor.
pub fn candidate_pool(
    spectra: &DatasetSpectra,
    labels: &[usize],
    filters: &FilterBank,
    powers: &[u32],
    mode: &CandidateMode,
    cfg: &EvalConfig,
) -> Result<Vec<FeatureSearch>> {
    let grid = match mode {
        CandidateMode::Unit => AlphaGrid::unit(),
        CandidateMode::PerFeature(grid) => grid.clone(),
    };
    per_feature_search_all(spectra, labels, filters, powers, &grid, cfg)
}

/// Ordered selection with the accuracy after each addition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardSelection {
    /// Indices into the candidate list, in selection order.
    pub selected: Vec<usize>,
    pub keys: Vec<FeatureKey>,
    /// Strictly increasing accuracies; `trace[i]` is the accuracy with the
    /// first `i + 1` selected features.
    pub trace: Vec<f64>,
}

impl ForwardSelection {
    pub fn final_accuracy(&self) -> f64 {
        self.trace.last().copied().unwrap_or(0.0)
    }
}

/// Greedy forward selection: start from the best single candidate and keep
/// adding whichever remaining candidate gives the highest combined accuracy,
/// stopping once no candidate strictly improves it. Ties go to the earlier
/// candidate.
pub fn forward_select(
    candidates: &[FeatureBlock],
    labels: &[usize],
    cfg: &EvalConfig,
) -> Result<ForwardSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate features".into()));
    }
    let n = candidates[0].rows();
    let cache = n * n * 8 * candidates.len() <= DISTANCE_CACHE_BYTES;
    let cached: Vec<Option<SquaredDistances>> = candidates
        .iter()
        .map(|c| cache.then(|| SquaredDistances::from_block(c)))
        .collect();
    let distances = |i: usize| -> SquaredDistances {
        cached[i]
            .clone()
            .unwrap_or_else(|| SquaredDistances::from_block(&candidates[i]))
    };

    let mut selected: Vec<usize> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut base = SquaredDistances::zeros(n);
    loop {
        let mut step_best: Option<(usize, f64, SquaredDistances)> = None;
        for i in (0..candidates.len()).filter(|i| !selected.contains(i)) {
            let combined = base.sum(&distances(i))?;
            let acc = cross_validate_distances(&combined, labels, cfg)?.mean_accuracy;
            if step_best.as_ref().map_or(true, |(_, b, _)| acc > *b) {
                step_best = Some((i, acc, combined));
            }
        }
        match step_best {
            Some((i, acc, combined)) if trace.last().map_or(true, |&prev| acc > prev) => {
                debug!("forward: add {} -> {acc}", candidates[i].key);
                selected.push(i);
                trace.push(acc);
                base = combined;
            }
            _ => break,
        }
    }
    Ok(ForwardSelection {
        keys: selected.iter().map(|&i| candidates[i].key.clone()).collect(),
        selected,
        trace,
    })
}
