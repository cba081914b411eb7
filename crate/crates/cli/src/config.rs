//! Run configuration: a `key = value` file merged under command-line flags.
//!
//! Keys are the long flag names without dashes-prefix, e.g.
//!
//! ```text
//! # Llow, anti-heat filter, fourth power
//! dataset = Llow
//! data-dir = /data
//! filters = AH3
//! powers = 4
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use gefrfe::eval::EvalConfig;
use gefrfe::filters::FilterBank;
use gefrfe::io::{DatasetFormat, DatasetManifest};
use gefrfe::select::AlphaGrid;
use serde::Serialize;

use crate::CliError;

/// Options shared by the pipeline subcommands. Every flag can also be given
/// in the `--config` file; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset name; a preset (Llow, Lmed, Lhigh, PROTEINS, IMDB-MULTI, NCI1)
    /// unless --format is given
    #[arg(long)]
    pub dataset: Option<String>,
    /// Directory holding preset datasets in their usual layout
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Explicit format: tud, gxl or jsonl
    #[arg(long)]
    pub format: Option<String>,
    /// Dataset location for an explicit format (directory, or file for jsonl)
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Comma-separated filters: H<t>, AH<t>, PS<r>[:rho], X
    #[arg(long)]
    pub filters: Option<String>,
    /// Power orders: `lo..hi` (inclusive) or a comma list
    #[arg(long)]
    pub powers: Option<String>,
    /// Fractional order for fixed-order runs
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Per-feature orders, e.g. `H1-4=0.58,X-2=1`
    #[arg(long)]
    pub alpha_map: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_lo: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_hi: Option<String>,
    #[arg(long)]
    pub grid_step: Option<String>,
    /// Keep every n-th grid point (α = 1 is always kept)
    #[arg(long)]
    pub grid_stride: Option<String>,
    /// Explicit comma-separated α values instead of a range
    #[arg(long, allow_hyphen_values = true)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub neighbors: Option<String>,
    #[arg(long)]
    pub folds: Option<String>,
    #[arg(long)]
    pub repeats: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long)]
    pub threads: Option<String>,
    /// Output path stem; `.csv` / `.json` are appended as needed
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Decomposition cache directory
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

impl RunArgs {
    fn flag_values(&self) -> Vec<(&'static str, Option<String>)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        vec![
            ("dataset", self.dataset.clone()),
            ("data-dir", path(&self.data_dir)),
            ("format", self.format.clone()),
            ("root", path(&self.root)),
            ("filters", self.filters.clone()),
            ("powers", self.powers.clone()),
            ("alpha", self.alpha.clone()),
            ("alpha-map", self.alpha_map.clone()),
            ("grid-lo", self.grid_lo.clone()),
            ("grid-hi", self.grid_hi.clone()),
            ("grid-step", self.grid_step.clone()),
            ("grid-stride", self.grid_stride.clone()),
            ("alphas", self.alphas.clone()),
            ("neighbors", self.neighbors.clone()),
            ("folds", self.folds.clone()),
            ("repeats", self.repeats.clone()),
            ("seed", self.seed.clone()),
            ("threads", self.threads.clone()),
            ("out", path(&self.out)),
            ("cache-dir", path(&self.cache_dir)),
        ]
    }

    /// Merges the config file (if any) with the flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut kv = match &self.config {
            Some(path) => parse_kv_file(path)?,
            None => BTreeMap::new(),
        };
        let known: Vec<&str> = self.flag_values().iter().map(|(k, _)| *k).collect();
        if let Some(bad) = kv.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown configuration key {bad:?}")));
        }
        for (k, v) in self.flag_values() {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        }
        RunConfig::from_kv(&kv)
    }
}

pub fn parse_kv_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_kv(&text).map_err(|(line, msg)| CliError::Usage(format!("{}:{line}: {msg}", path.display())))
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, (usize, String)> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or((i + 1, format!("expected key = value, got {line:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    kv.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| CliError::Usage(format!("invalid value for {key}: {v:?}")))
        })
        .transpose()
}

/// Parses `0..5` (inclusive) or `0,2,4`.
pub fn parse_powers(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Usage(format!("invalid power list {s:?}"));
    let powers: Vec<u32> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if powers.is_empty() {
        return Err(bad());
    }
    Ok(powers)
}

/// Parses `H1-4=0.58,X-2=1` into `(filter, ω) → α`.
pub fn parse_alpha_map(s: &str) -> Result<BTreeMap<(String, u32), f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in s.split(',').filter(|i| !i.trim().is_empty()) {
        let bad = || CliError::Usage(format!("invalid alpha-map entry {item:?}"));
        let (feat, alpha) = item.split_once('=').ok_or_else(bad)?;
        let (filter, omega) = feat.trim().rsplit_once('-').ok_or_else(bad)?;
        let omega: u32 = omega.parse().map_err(|_| bad())?;
        let alpha: f64 = alpha.trim().parse().map_err(|_| bad())?;
        // normalise the filter name through the grammar
        let filter = FilterBank::parse(filter)
            .map_err(|e| CliError::Usage(e.to_string()))?
            .to_string();
        out.insert((filter, omega), alpha);
    }
    Ok(out)
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub manifest: DatasetManifest,
    #[serde(serialize_with = "as_display")]
    pub filters: FilterBank,
    pub powers: Vec<u32>,
    pub alpha: f64,
    pub alpha_map: BTreeMap<String, f64>,
    pub grid: AlphaGrid,
    pub eval: EvalConfig,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

fn as_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl RunConfig {
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let manifest = manifest(kv)?;
        let filters = FilterBank::parse(kv.get("filters").map_or("X,H1,H3,H6,AH1,AH3,AH6,PS1,PS6,PS11", String::as_str))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let powers = parse_powers(kv.get("powers").map_or("0..5", String::as_str))?;
        let alpha = num::<f64>(kv, "alpha")?.unwrap_or(1.0);
        if !alpha.is_finite() {
            return Err(CliError::Usage(format!("alpha must be finite, got {alpha}")));
        }
        let alpha_map = match kv.get("alpha-map") {
            Some(s) => parse_alpha_map(s)?
                .into_iter()
                .map(|((f, w), a)| (format!("{f}-{w}"), a))
                .collect(),
            None => BTreeMap::new(),
        };

        let grid = match kv.get("alphas") {
            Some(list) => {
                let points = list
                    .split(',')
                    .map(|a| a.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Usage(format!("invalid alphas {list:?}")))?;
                AlphaGrid::from_points(points).map_err(|e| CliError::Usage(e.to_string()))?
            }
            None => AlphaGrid::range(
                num(kv, "grid-lo")?.unwrap_or(-3.0),
                num(kv, "grid-hi")?.unwrap_or(3.0),
                num(kv, "grid-step")?.unwrap_or(0.02),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?,
        };
        let grid = grid.subsample(num(kv, "grid-stride")?.unwrap_or(1));

        let defaults = EvalConfig::default();
        let eval = EvalConfig {
            neighbors: num(kv, "neighbors")?.unwrap_or(defaults.neighbors),
            folds: num(kv, "folds")?.unwrap_or(defaults.folds),
            repeats: num(kv, "repeats")?.unwrap_or(defaults.repeats),
            seed: num(kv, "seed")?.unwrap_or(defaults.seed),
        };
        eval.validate().map_err(|e| CliError::Usage(e.to_string()))?;

        Ok(RunConfig {
            manifest,
            filters,
            powers,
            alpha,
            alpha_map,
            grid,
            eval,
            threads: num(kv, "threads")?,
            out: kv.get("out").map(PathBuf::from),
            cache_dir: kv.get("cache-dir").map(PathBuf::from),
        })
    }
}

fn manifest(kv: &BTreeMap<String, String>) -> Result<DatasetManifest, CliError> {
    let name = kv.get("dataset");
    match (kv.get("format"), kv.get("root")) {
        (Some(format), Some(root)) => {
            let format: DatasetFormat = format.parse().map_err(|e: gefrfe::Error| CliError::Usage(e.to_string()))?;
            let root = PathBuf::from(root);
            let name = name.cloned().unwrap_or_else(|| {
                root.file_stem()
                    .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
            });
            Ok(DatasetManifest::new(name, format, root))
        }
        (Some(_), None) => Err(CliError::Usage("--format requires --root".into())),
        (None, _) => {
            let name = name.ok_or_else(|| CliError::Usage("no dataset given (--dataset or --format/--root)".into()))?;
            let dir = kv.get("data-dir").map_or_else(|| PathBuf::from("data"), PathBuf::from);
            DatasetManifest::preset(name, &dir).map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::from_kv(&kv(&[("dataset", "Llow")])).unwrap();
        assert_eq!(cfg.powers, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(cfg.filters.len(), 10);
        assert_eq!(cfg.grid.len(), 301);
        assert_eq!(cfg.eval, EvalConfig::default());
        assert_eq!(cfg.manifest.root, Path::new("data/Letter/LOW"));
    }

    #[test]
    fn kv_text() {
        let m = parse_kv("# comment\n dataset = NCI1 \nseed=3 # trailing\n\n").unwrap();
        assert_eq!(m["dataset"], "NCI1");
        assert_eq!(m["seed"], "3");
        assert!(parse_kv("nonsense").is_err());
    }

    #[test]
    fn powers_grammar() {
        assert_eq!(parse_powers("0..5").unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(parse_powers("4").unwrap(), vec![4]);
        assert_eq!(parse_powers("1, 3").unwrap(), vec![1, 3]);
        assert!(parse_powers("-1").is_err());
        assert!(parse_powers("a..b").is_err());
    }

    #[test]
    fn alpha_map_grammar() {
        let m = parse_alpha_map("H1-4=0.58,PS11:0.579-2=-1.2").unwrap();
        assert_eq!(m[&("H1".to_string(), 4)], 0.58);
        assert_eq!(m[&("PS11".to_string(), 2)], -1.2);
        assert!(parse_alpha_map("H1=2").is_err());
    }

    #[test]
    fn explicit_format_and_grid() {
        let cfg = RunConfig::from_kv(&kv(&[
            ("format", "jsonl"),
            ("root", "/x/graphs.jsonl"),
            ("alphas", "1.0"),
            ("filters", "H1"),
            ("powers", "1"),
        ]))
        .unwrap();
        assert_eq!(cfg.manifest.name, "graphs");
        assert_eq!(cfg.grid.points(), &[1.0]);
        assert!(RunConfig::from_kv(&kv(&[("format", "jsonl")])).is_err());
        assert!(RunConfig::from_kv(&kv(&[("dataset", "Llow"), ("alphas", "0.5")])).is_err());
        assert!(RunConfig::from_kv(&kv(&[("dataset", "Llow"), ("folds", "1")])).is_err());
    }
}
