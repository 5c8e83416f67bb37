//! Partial video copy detection and localization toolkit.
//!
//! * [`search`]: exact global frame-pair search, detection scores, descriptor
//!   normalization.
//! * [`localization`]: temporal-network localization of copied segments.
//! * [`metrics`]: detection and localization micro AP, mAP, analysis.
//! * [`simulator`]: seeded descriptor-level benchmark generator and the
//!   baseline pipeline.
//! * [`storage`]: file formats and submission checks.

pub mod error;
pub mod localization;
pub mod metrics;
pub mod model;
pub mod search;
pub mod simulator;
pub mod storage;

pub use error::{Error, Result};
pub use model::{
    DescriptorSet, DetectionPrediction, GroundTruth, GtBox, LocalizationPrediction, SegmentBox,
    TransformTag, VideoId, VideoKind, VideoPair,
};
