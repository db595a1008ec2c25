//! Sublinear-time approximate sparse recovery.
//!
//! A signal `x` of length `N` is measured by a random layered matrix `Phi`
//! with `O(k log(N/k))` rows; [`decoder::recover`] returns a sparse `x_hat`
//! from `Phi x` (plus noise) while touching only a polylogarithmic number of
//! matrix entries per recovered position.
//!
//! Module map:
//! - [`matrix`]: sparse matrices and the row-direct-sum / element-wise /
//!   semi-direct combinators.
//! - [`hash`]: affine hashing over a prime field, sign families, permutations.
//! - [`code`]: short lexicode block codes with nearest-neighbour decoding.
//! - [`ensemble`]: the measurement layout, column generation, encode/update.
//! - [`decoder`]: identify / estimate iterations.
//! - [`oracles`]: brute-force references and tail-bound evaluators.
//! - [`harness`]: signal models and Monte Carlo trial runners.
//! - [`io`]: spec, sketch and CSV file formats.

pub mod code;
pub mod decoder;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod hash;
pub mod io;
pub mod matrix;
pub mod oracles;

pub use code::CodeTable;
pub use decoder::{recover, DecodeOptions, RecoveredVector};
pub use harness::{RunSummary, SignalKind, SignalModel, TrialConfig, TrialReport};
pub use ensemble::{ColumnView, Ensemble, EnsembleParams, RepsMode, SketchVector};
pub use error::{Error, Result};

pub use matrix::SparseMatrix;
