//! Detection and localization micro AP, per-query mAP and analysis helpers.

mod analysis;
mod detection;
mod interval;
mod localization;

pub use analysis::{
    evaluate_subset, exclude_distractors, hard_negative_comparison, HardNegativePoint,
    QuerySubset, SubsetReport,
};
pub use detection::{detection_uap, mean_ap, rank_detections};
pub use interval::IntervalUnion;
pub use localization::{ground_truth_lengths, localization_pr, localization_uap};

/// Precision and recall after the first `rank` predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRPoint {
    pub rank: usize,
    /// Score of the prediction at this rank.
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// A ranked precision-recall curve and the area under it.
#[derive(Debug, Clone, PartialEq)]
pub struct PRCurve {
    pub points: Vec<PRPoint>,
    pub uap: f64,
}

impl PRCurve {
    /// Area by the rectangle rule: `sum P(i) * (R(i) - R(i-1))`, `R(0) = 0`.
    pub fn from_points(points: Vec<PRPoint>) -> Self {
        let mut uap = 0.0;
        let mut prev_recall = 0.0;
        for p in &points {
            uap += p.precision * (p.recall - prev_recall);
            prev_recall = p.recall;
        }
        PRCurve { points, uap }
    }
}
