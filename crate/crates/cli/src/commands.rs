use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use gefrfe::bench::{self, ScalingConfig};
use gefrfe::embedding::{embed_keys, DatasetSpectra, EmbeddingMatrix, FeatureKey};
use gefrfe::eval::{cross_validate_blocks, CvReport};
use gefrfe::filters::FilterSpec;
use gefrfe::io::{DatasetManifest, DecompositionCache};
use gefrfe::select::{candidate_pool, forward_select, grid_search_alpha, AlphaGrid, CandidateMode, FeatureSearch};
use gefrfe::LabeledDataset;
use log::info;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{CliError, PoolMode};

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(contents.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(gefrfe::Error::from)?;
    text.push('\n');
    write_file(path, &text)
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Data(format!("stdout: {e}"))
}

fn setup_threads(cfg: &RunConfig) {
    if let Some(n) = cfg.threads {
        // only fails if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

struct Loaded {
    dataset: LabeledDataset,
    spectra: DatasetSpectra,
}

fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    setup_threads(cfg);
    let t = Instant::now();
    let dataset = cfg.manifest.load()?;
    info!("loaded {} graphs of {} in {:.2?}", dataset.len(), dataset.name, t.elapsed());
    let t = Instant::now();
    let spectra = match &cfg.cache_dir {
        Some(dir) => {
            let cache = DecompositionCache::open(dir)?;
            let s = cache.spectra(&dataset)?;
            info!("decomposition cache: {:?}", cache.stats());
            s
        }
        None => DatasetSpectra::compute(&dataset)?,
    };
    info!("spectra computed in {:.2?}", t.elapsed());
    Ok(Loaded { dataset, spectra })
}

fn label_names(ds: &LabeledDataset) -> Vec<String> {
    ds.labels.iter().map(|&l| ds.class_names[l].clone()).collect()
}

pub fn info(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = cfg.manifest.load()?;
    let s = ds.stats();
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{}: {} graphs, {} classes, mean vertices {:.2}, mean edges {:.2}",
        s.name, s.graphs, s.classes, s.mean_vertices, s.mean_edges
    )
    .map_err(stdout_err)?;
    if let Some(p) = DatasetManifest::published_stats(&s.name) {
        writeln!(
            out,
            "published: {} graphs, {} classes, mean vertices {:.2}, mean edges {:.2}",
            p.graphs, p.classes, p.mean_vertices, p.mean_edges
        )
        .map_err(stdout_err)?;
    }
    Ok(())
}

/// Feature keys in filter-major, power-minor order with their orders taken
/// from the alpha map or the fixed alpha.
fn fixed_keys(cfg: &RunConfig) -> Vec<(FeatureKey, FilterSpec)> {
    cfg.filters
        .iter()
        .flat_map(|(name, f)| {
            cfg.powers.iter().map(move |&w| {
                let alpha = cfg
                    .alpha_map
                    .get(&format!("{name}-{w}"))
                    .copied()
                    .unwrap_or(cfg.alpha);
                (FeatureKey::new(name, w, alpha), *f)
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Provenance<'a> {
    command: &'a str,
    config: &'a RunConfig,
    dataset: &'a str,
    seed: u64,
}

fn provenance<'a>(command: &'a str, cfg: &'a RunConfig) -> Provenance<'a> {
    Provenance {
        command,
        config: cfg,
        dataset: &cfg.manifest.name,
        seed: cfg.eval.seed,
    }
}

pub fn embed(cfg: &RunConfig) -> Result<(), CliError> {
    let loaded = load(cfg)?;
    let matrix: EmbeddingMatrix = embed_keys(&loaded.spectra, &fixed_keys(cfg))?;
    let labels = label_names(&loaded.dataset);
    match &cfg.out {
        Some(stem) => {
            let path = with_ext(stem, "csv");
            let mut w = create(&path)?;
            matrix
                .write_csv(&mut w, &labels)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            info!("wrote {}", path.display());
            let json = matrix.to_json(&provenance("embed", cfg), &labels)?;
            write_file(&with_ext(stem, "json"), &(json + "\n"))?;
        }
        None => matrix
            .write_csv(std::io::stdout().lock(), &labels)
            .map_err(stdout_err)?,
    }
    Ok(())
}

pub fn gridsearch(cfg: &RunConfig) -> Result<(), CliError> {
    let loaded = load(cfg)?;
    let t = Instant::now();
    let report = grid_search_alpha(
        &loaded.spectra,
        &loaded.dataset.labels,
        &cfg.filters,
        &cfg.powers,
        &cfg.grid,
        &cfg.eval,
    )?;
    info!(
        "grid search over {} alphas in {:.2?}: best alpha {} accuracy {:.4}",
        cfg.grid.len(),
        t.elapsed(),
        report.best_alpha,
        report.best_accuracy
    );

    #[derive(Serialize)]
    struct Doc<'a> {
        provenance: Provenance<'a>,
        best_alpha: f64,
        best_accuracy: f64,
        accuracy_at_unit_order: Option<f64>,
        report: &'a gefrfe::select::AccuracyReport,
        repeat_seeds: Vec<u64>,
    }
    let doc = Doc {
        provenance: provenance("gridsearch", cfg),
        best_alpha: report.best_alpha,
        best_accuracy: report.best_accuracy,
        accuracy_at_unit_order: report.accuracy_at(1.0),
        report: &report,
        repeat_seeds: (0..cfg.eval.repeats).map(|r| cfg.eval.repeat_seed(r)).collect(),
    };
    match &cfg.out {
        Some(stem) => {
            write_file(&with_ext(stem, "csv"), &report.to_csv())?;
            write_json(&with_ext(stem, "json"), &doc)?;
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn pool(cfg: &RunConfig, loaded: &Loaded, mode: PoolMode) -> Result<Vec<FeatureSearch>, CliError> {
    let t = Instant::now();
    let searches = match mode {
        PoolMode::Geffe => candidate_pool(
            &loaded.spectra,
            &loaded.dataset.labels,
            &cfg.filters,
            &cfg.powers,
            &CandidateMode::Unit,
            &cfg.eval,
        )?,
        PoolMode::Gefrfe => candidate_pool(
            &loaded.spectra,
            &loaded.dataset.labels,
            &cfg.filters,
            &cfg.powers,
            &CandidateMode::PerFeature(cfg.grid.clone()),
            &cfg.eval,
        )?,
        PoolMode::Fixed => fixed_keys(cfg)
            .into_iter()
            .map(|(k, f)| {
                let grid = AlphaGrid::from_points(vec![k.alpha, 1.0])?;
                let mut s = gefrfe::select::per_feature_alpha_search(
                    &loaded.spectra,
                    &loaded.dataset.labels,
                    &f,
                    k.omega,
                    &grid,
                    &cfg.eval,
                )?;
                // pin the requested order rather than the better of the two
                s.block = loaded.spectra.block(&k.filter, &f, k.omega, k.alpha)?;
                s.report.best_alpha = k.alpha;
                s.report.best_accuracy = s.report.accuracy_at(k.alpha).unwrap_or(f64::NAN);
                Ok(s)
            })
            .collect::<Result<Vec<_>, gefrfe::Error>>()?,
    };
    info!("candidate pool of {} features built in {:.2?}", searches.len(), t.elapsed());
    Ok(searches)
}

#[derive(Serialize)]
struct Candidate {
    feature: String,
    alpha: f64,
    accuracy: f64,
}

fn candidates_summary(pool: &[FeatureSearch]) -> Vec<Candidate> {
    pool.iter()
        .map(|s| Candidate {
            feature: format!("{}-{}", s.block.key.filter, s.block.key.omega),
            alpha: s.report.best_alpha,
            accuracy: s.report.best_accuracy,
        })
        .collect()
}

pub fn forward(cfg: &RunConfig, mode: PoolMode) -> Result<(), CliError> {
    let loaded = load(cfg)?;
    let pool = pool(cfg, &loaded, mode)?;
    let blocks: Vec<_> = pool.iter().map(|s| s.block.clone()).collect();
    let t = Instant::now();
    let selection = forward_select(&blocks, &loaded.dataset.labels, &cfg.eval)?;
    info!("forward selection in {:.2?}", t.elapsed());

    let mut table = String::from("step  feature       alpha     accuracy\n");
    for (i, (k, acc)) in selection.keys.iter().zip(&selection.trace).enumerate() {
        table.push_str(&format!(
            "{:<5} {:<13} {:<9} {:.4}\n",
            i + 1,
            format!("{}-{}", k.filter, k.omega),
            k.alpha,
            acc
        ));
    }
    table.push_str(&format!("final accuracy {:.4}\n", selection.final_accuracy()));
    print!("{table}");

    #[derive(Serialize)]
    struct Doc<'a> {
        provenance: Provenance<'a>,
        mode: &'a str,
        candidates: Vec<Candidate>,
        selection: &'a gefrfe::select::ForwardSelection,
        final_accuracy: f64,
    }
    if let Some(stem) = &cfg.out {
        write_json(
            &with_ext(stem, "json"),
            &Doc {
                provenance: provenance("forward", cfg),
                mode: mode_name(mode),
                candidates: candidates_summary(&pool),
                selection: &selection,
                final_accuracy: selection.final_accuracy(),
            },
        )?;
    }
    Ok(())
}

fn mode_name(mode: PoolMode) -> &'static str {
    match mode {
        PoolMode::Geffe => "geffe",
        PoolMode::Gefrfe => "gefrfe",
        PoolMode::Fixed => "fixed",
    }
}

pub fn evaluate(cfg: &RunConfig, mode: PoolMode) -> Result<(), CliError> {
    let loaded = load(cfg)?;
    let blocks: Vec<_> = match mode {
        // no per-feature search needed
        PoolMode::Fixed => fixed_keys(cfg)
            .iter()
            .map(|(k, f)| loaded.spectra.block(&k.filter, f, k.omega, k.alpha))
            .collect::<Result<Vec<_>, _>>()?,
        _ => pool(cfg, &loaded, mode)?.into_iter().map(|s| s.block).collect(),
    };
    let report: CvReport = cross_validate_blocks(&blocks, &loaded.dataset.labels, &cfg.eval)?;
    println!("{} accuracy {:.4}", mode_name(mode), report.mean_accuracy);

    #[derive(Serialize)]
    struct Doc<'a> {
        provenance: Provenance<'a>,
        mode: &'a str,
        features: Vec<FeatureKey>,
        accuracy: f64,
        cv: &'a CvReport,
    }
    if let Some(stem) = &cfg.out {
        write_json(
            &with_ext(stem, "json"),
            &Doc {
                provenance: provenance("evaluate", cfg),
                mode: mode_name(mode),
                features: blocks.iter().map(|b| b.key.clone()).collect(),
                accuracy: report.mean_accuracy,
                cv: &report,
            },
        )?;
    }
    Ok(())
}

pub fn bench_scaling(
    sizes: &str,
    graphs_per_size: usize,
    rounds: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let sizes = sizes
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("invalid sizes {sizes:?}")))?;
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(CliError::Usage("need at least two positive sizes".into()));
    }
    let cfg = ScalingConfig {
        sizes,
        graphs_per_size,
        rounds,
        seed,
        ..Default::default()
    };
    let report = bench::bench_scaling(&cfg)?;
    println!("nodes  seconds_per_graph");
    for p in &report.points {
        println!("{:<6} {:.6e}", p.nodes, p.seconds_per_graph);
    }
    println!("log-log slope {:.3}", report.loglog_slope);

    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a ScalingConfig,
        report: &'a bench::ScalingReport,
    }
    if let Some(stem) = out {
        write_json(&with_ext(stem, "json"), &Doc { config: &cfg, report: &report })?;
    }
    Ok(())
}
