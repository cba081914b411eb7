//! Graph embeddings built from the fractional powers of the graph Fourier
//! transform.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`graph`]: simple undirected graphs and their Laplacians.
//! 2. [`spectral`]: Laplacian eigendecomposition, the GFT matrix `F = Vᵀ`,
//!    and its fractional powers `F^α` with the α-derivative.
//! 3. [`filters`]: heat, anti-heat, part-sine and identity spectral filters.
//! 4. [`embedding`]: powered column-sum spectra, filtered features and the
//!    assembled per-graph embedding rows.
//! 5. [`eval`] and [`select`]: kNN cross-validation, the α grid search and
//!    greedy forward feature selection.
//!
//! Dataset parsers and the decomposition cache live in [`io`].

pub mod bench;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod filters;
pub mod graph;
pub mod io;
pub mod select;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{Graph, LabeledDataset};
pub use spectral::{FractionalOperator, GftEigenbasis, SpectralDecomposition};

/// Complex scalar used throughout the fractional transform.
pub type C64 = num_complex::Complex<f64>;
