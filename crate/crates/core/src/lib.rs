//! Online multi-target tracking with spatiotemporal discriminative K-SVD
//! appearance models.
//!
//! - [`sparse`]: dictionaries and orthogonal matching pursuit.
//! - [`ksvd`]: K-SVD dictionary learning.
//! - [`stksvd`]: joint learning of dictionary, code transform and classifier.
//! - [`features`]: color-histogram descriptors of detection boxes.
//! - [`tracker`]: two-stage association, confidences, target lifecycle.
//! - [`mot`], [`metrics`], [`pipeline`], [`cli`]: file formats, CLEAR MOT
//!   evaluation and command-line plumbing.

pub mod cli;
pub mod error;
pub mod features;
pub mod geometry;
pub mod ksvd;
pub mod metrics;
pub mod mot;
pub mod pipeline;
pub mod sparse;
pub mod stksvd;
pub mod synthetic;
pub mod tracker;

pub use error::{Error, Result};
