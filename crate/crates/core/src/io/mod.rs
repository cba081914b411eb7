//! Dataset readers and the on-disk decomposition cache.

mod cache;
mod gxl;
mod jsonl;
mod manifest;
mod tud;

pub use cache::{content_key, CacheStats, DecompositionCache};
pub use gxl::{parse_gxl_dataset, parse_gxl_graph, LETTER_SPLITS};
pub use jsonl::{parse_jsonl, parse_jsonl_str, write_jsonl};
pub use manifest::{DatasetFormat, DatasetManifest, PublishedStats};
pub use tud::parse_tudataset;

use std::path::Path;

use crate::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
