//! Small-sample image classification with complex-fused representations.
//!
//! The pipeline has four stages:
//!
//! 1. [`dataset`]: load class-per-directory image trees, resize, and split
//!    each class into its first `n` samples for training and the rest for test.
//! 2. [`representation`]: derive a second view of every image with the
//!    elementwise map `v * (255 - v)` and pack the original and the derived
//!    view into one complex vector (real = original, imaginary = derived).
//! 3. [`kernel`]: map complex vectors through a Gaussian kernel
//!    `exp(-|u - v|^2 / (2 sigma))`, producing the training Gram matrix and a
//!    kernel vector per test sample.
//! 4. [`crc`]: regularized collaborative representation in kernel space,
//!    solved either as `(K + lambda I)^-1 k_z` or `(K^T K + lambda I)^-1 K^T k_z`,
//!    then classified by smallest per-class reconstruction residual.
//!
//! [`evaluation`] drives whole experiments (first-n splits, sigma sweeps,
//! solver comparisons) and writes CSV reports.
//!
//! ```
//! use complexface::{dataset, crc, SolverForm, SplitSpec};
//!
//! let ds = dataset::generate_synthetic(7, 3, 4, 8, 10, 5.0).unwrap();
//! let (train, test) = dataset::split_first_n(&ds, SplitSpec::new(2).unwrap()).unwrap();
//! let model = crc::fit(&train, 1e10, 0.01, SolverForm::Beta).unwrap();
//! let pred = model.classify(&test.samples[0].image).unwrap();
//! assert!(pred.class_id < 3);
//! ```

pub mod crc;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod kernel;
pub mod linalg;
pub mod representation;

pub use crc::{Coefficients, KernelCrcModel, LinearCrcModel, Prediction, SolverForm};
pub use dataset::{GrayImage, LabeledDataset, Sample, SplitSpec};
pub use error::{Error, Result};
pub use evaluation::{
    DataSource, ExperimentConfig, ExperimentReport, Method, SigmaSweepResult, SweepPoint,
};
pub use kernel::{GramMatrix, KernelParams, KernelVector};
pub use representation::{Complex, ComplexFeature, FeatureVector};

/// Regularization used throughout the reference experiments.
pub const DEFAULT_LAMBDA: f64 = 0.01;

/// Kernel width used throughout the reference experiments.
pub const DEFAULT_SIGMA: f64 = 1e10;

/// Runs `f` on a dedicated rayon pool with `threads` workers.
///
/// Every parallel reduction in this crate has a fixed evaluation order, so the
/// result is bit-identical for any `threads`.
pub fn with_threads<T, F>(threads: usize, f: F) -> Result<T>
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
