//! Wall-clock scaling of per-graph embedding cost with node count.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embedding::{feature, GraphSpectrum};
use crate::filters::FilterBank;
use crate::graph::random_connected_graph;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub nodes: usize,
    /// Best-of-rounds mean seconds per graph.
    pub seconds_per_graph: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of log(time) against log(N).
    pub loglog_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub graphs_per_size: usize,
    pub rounds: usize,
    pub edge_probability: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            sizes: vec![16, 32, 64, 128],
            graphs_per_size: 4,
            rounds: 3,
            edge_probability: 0.3,
            alpha: 0.58,
            seed: 0,
        }
    }
}

/// Time to embed one graph end to end: Laplacian eigendecomposition, GFT
/// eigenbasis, `F^α`, and every filter × ω ∈ {0..5} feature.
fn embed_once(g: &crate::Graph, bank: &FilterBank, alpha: f64) -> Result<f64> {
    let n = g.node_count();
    let start = Instant::now();
    let spectrum = GraphSpectrum::from_graph(g)?;
    let op = spectrum.operator(alpha)?;
    let mut sink = 0.0;
    for (_, f) in bank.iter() {
        for omega in 0..6 {
            sink += feature(&spectrum.decomposition, &op, f, omega, n)?.values[0];
        }
    }
    std::hint::black_box(sink);
    Ok(start.elapsed().as_secs_f64())
}

pub fn loglog_slope(points: &[ScalingPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.nodes as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds_per_graph.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Runs on the calling thread; graphs are generated from `cfg.seed`.
pub fn bench_scaling(cfg: &ScalingConfig) -> Result<ScalingReport> {
    let bank = FilterBank::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let graphs: Vec<_> = (0..cfg.graphs_per_size.max(1))
            .map(|_| random_connected_graph(n, cfg.edge_probability, &mut rng))
            .collect();
        // warm-up
        embed_once(&graphs[0], &bank, cfg.alpha)?;
        let mut best = f64::INFINITY;
        for _ in 0..cfg.rounds.max(1) {
            let mut total = 0.0;
            for g in &graphs {
                total += embed_once(g, &bank, cfg.alpha)?;
            }
            best = best.min(total / graphs.len() as f64);
        }
        log::info!("bench-scaling: N = {n}: {best:.3e} s/graph");
        points.push(ScalingPoint {
            nodes: n,
            seconds_per_graph: best,
        });
    }
    Ok(ScalingReport {
        loglog_slope: loglog_slope(&points),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let points: Vec<ScalingPoint> = [8usize, 16, 32, 64]
            .iter()
            .map(|&n| ScalingPoint {
                nodes: n,
                seconds_per_graph: 1e-9 * (n as f64).powi(3),
            })
            .collect();
        assert!((loglog_slope(&points) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_run_produces_points() {
        let cfg = ScalingConfig {
            sizes: vec![4, 8],
            graphs_per_size: 1,
            rounds: 1,
            ..Default::default()
        };
        let r = bench_scaling(&cfg).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.points.iter().all(|p| p.seconds_per_graph > 0.0));
    }
}
