//! Post-processing, fusion and evaluation of multi-object video
//! segmentation masks.
//!
//! Everything works on [`LabelMap`]s: one byte per pixel, `0` for background
//! and `1..=255` for objects.
//!
//! - [`morphology`]: binary dilation/erosion with square or disk elements,
//!   plus a brute-force reference dilation.
//! - [`postprocess`]: closes background gaps between adjacent objects.
//! - [`fusion`]: test-time augmentation transforms and plurality voting over
//!   multi-scale prediction stacks.
//! - [`metrics`]: region J, boundary F and J&F reports.
//! - [`maskio`]: indexed PNG masks in `<root>/<sequence>/<frame>.png` trees.
//! - [`cli`]: the batch commands behind the `maskpost` binary.

pub mod cli;
pub mod error;
pub mod fusion;
pub mod maskio;
pub mod metrics;
pub mod morphology;
pub mod postprocess;
pub mod raster;

pub use error::{Error, Result};
pub use fusion::{
    apply_transform, fuse_sequence, invert_transform, vote_fuse, PredictionStack, ScaleSchedule,
    StackMember, TtaTransform,
};
pub use maskio::{read_mask_file, write_mask_file};
pub use metrics::{
    aggregate, boundary_f, evaluate_sequence, extract_boundary, jaccard, BoundaryParams,
    FrameScore, ScoreReport,
};
pub use morphology::{brute_force_dilate, dilate, erode, SeShape, StructuringElement};
pub use postprocess::{adjacency_pairs, gap_fill, gap_fill_sequence, GapFillConfig};
pub use raster::{merge_labels, resize_labelmap, split_labels, BinaryMask, LabelMap, ObjectSet};
