//! Synthetic document image foundry and segmentation evaluation suite.
//!
//! The pipeline composites layered grayscale document images with
//! pixel-exact multi-channel ground truth, applies a deterministic
//! two-phase augmentation schedule, and scores prediction maps with
//! F-measure, pseudo-F-measure, IoU, Dice and blank-image false-positive
//! statistics.
//!
//! Everything downstream of a `(master_seed, sample_index)` pair is
//! bit-reproducible, independent of worker count.

pub mod augment;
pub mod compositor;
pub mod dataset;
pub mod element_synth;
pub mod error;
pub mod metrics;
pub mod patchwork;
pub mod raster;
pub mod rng;

pub use error::{Error, Result};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is
/// enabled. Results are always returned in index order, so callers see
/// identical output regardless of worker count.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
