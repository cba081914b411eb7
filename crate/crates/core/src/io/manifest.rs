use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::{parse_gxl_dataset, parse_jsonl, parse_tudataset, LETTER_SPLITS};
use crate::graph::LabeledDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Tud,
    Gxl,
    Jsonl,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tud" => Ok(DatasetFormat::Tud),
            "gxl" => Ok(DatasetFormat::Gxl),
            "jsonl" => Ok(DatasetFormat::Jsonl),
            other => Err(Error::InvalidInput(format!("unknown dataset format {other:?}"))),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Tud => "tud",
            DatasetFormat::Gxl => "gxl",
            DatasetFormat::Jsonl => "jsonl",
        })
    }
}

/// Published per-dataset statistics: mean vertices, mean edges, graph and
/// class counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedStats {
    pub mean_vertices: f64,
    pub mean_edges: f64,
    pub graphs: usize,
    pub classes: usize,
}

/// Benchmark datasets: name, on-disk layout relative to the data directory,
/// and published statistics.
const PRESETS: [(&str, DatasetFormat, &str, PublishedStats); 6] = [
    ("Llow", DatasetFormat::Gxl, "Letter/LOW", stats(4.68, 3.13, 2250, 15)),
    ("Lmed", DatasetFormat::Gxl, "Letter/MED", stats(4.67, 3.21, 2250, 15)),
    ("Lhigh", DatasetFormat::Gxl, "Letter/HIGH", stats(4.67, 4.50, 2250, 15)),
    ("PROTEINS", DatasetFormat::Tud, "PROTEINS", stats(39.06, 72.82, 1113, 2)),
    ("IMDB-MULTI", DatasetFormat::Tud, "IMDB-MULTI", stats(13.00, 65.98, 1500, 3)),
    ("NCI1", DatasetFormat::Tud, "NCI1", stats(29.87, 32.30, 4110, 2)),
];

const fn stats(mean_vertices: f64, mean_edges: f64, graphs: usize, classes: usize) -> PublishedStats {
    PublishedStats {
        mean_vertices,
        mean_edges,
        graphs,
        classes,
    }
}

/// Where a dataset lives and what it should contain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetManifest {
    pub name: String,
    pub format: DatasetFormat,
    pub root: PathBuf,
    pub expected_graphs: Option<usize>,
    pub expected_classes: Option<usize>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, format: DatasetFormat, root: impl Into<PathBuf>) -> Self {
        DatasetManifest {
            name: name.into(),
            format,
            root: root.into(),
            expected_graphs: None,
            expected_classes: None,
        }
    }

    /// Names with a built-in layout and expectations.
    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|p| p.0)
    }

    /// Manifest for a benchmark dataset stored under `data_dir` in its
    /// usual layout (`Letter/LOW`, `NCI1/NCI1_A.txt`, …).
    pub fn preset(name: &str, data_dir: &Path) -> Result<Self> {
        let (name, format, rel, s) = PRESETS
            .iter()
            .find(|p| p.0.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown dataset preset {name:?} (known: {})",
                    Self::preset_names().collect::<Vec<_>>().join(", ")
                ))
            })?;
        Ok(DatasetManifest {
            name: name.to_string(),
            format: *format,
            root: data_dir.join(rel),
            expected_graphs: Some(s.graphs),
            expected_classes: Some(s.classes),
        })
    }

    pub fn published_stats(name: &str) -> Option<PublishedStats> {
        PRESETS
            .iter()
            .find(|p| p.0.eq_ignore_ascii_case(name))
            .map(|p| p.3)
    }

    /// Parses the dataset and checks any expectations.
    pub fn load(&self) -> Result<LabeledDataset> {
        let ds = match self.format {
            DatasetFormat::Tud => parse_tudataset(&self.root, &self.name)?,
            DatasetFormat::Gxl => parse_gxl_dataset(&self.root, &self.name, &LETTER_SPLITS)?,
            DatasetFormat::Jsonl => {
                let mut ds = parse_jsonl(&self.root)?;
                ds.name = self.name.clone();
                ds
            }
        };
        if let Some(want) = self.expected_graphs {
            if ds.len() != want {
                return Err(Error::Dataset(format!(
                    "{}: parsed {} graphs, expected {want}",
                    self.name,
                    ds.len()
                )));
            }
        }
        if let Some(want) = self.expected_classes {
            if ds.class_count() != want {
                return Err(Error::Dataset(format!(
                    "{}: parsed {} classes, expected {want}",
                    self.name,
                    ds.class_count()
                )));
            }
        }
        Ok(ds)
    }
}
