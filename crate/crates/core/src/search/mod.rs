//! Exact frame-level pair search and descriptor post-processing.

mod normalize;
mod topk;

pub use normalize::{
    apply_normalization, dimension_variances, fit_normalizer, l2_normalize, Normalization,
    ScoreNormalizer,
};
pub use topk::{detection_scores, global_topk_pairs, FrameMatch};
