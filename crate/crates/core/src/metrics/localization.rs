use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{GroundTruth, LocalizationPrediction, SegmentBox, VideoPair};

use super::{IntervalUnion, PRCurve, PRPoint};

/// Projection unions of one video pair. `x` is the reference axis, `y` the
/// query axis.
#[derive(Debug, Default, Clone)]
struct PairUnions {
    pred_x: IntervalUnion,
    pred_y: IntervalUnion,
    overlap_x: IntervalUnion,
    overlap_y: IntervalUnion,
}

/// Sums of union lengths over all pairs.
#[derive(Debug, Default, Clone, Copy)]
struct Totals {
    pred_x: f64,
    pred_y: f64,
    overlap_x: f64,
    overlap_y: f64,
}

/// Precision and recall from projected lengths, each the square root of a
/// product of x and y ratios.
pub fn localization_pr(
    overlap: (f64, f64),
    predicted: (f64, f64),
    ground_truth: (f64, f64),
) -> (f64, f64) {
    let o = overlap.0 * overlap.1;
    let p = predicted.0 * predicted.1;
    let g = ground_truth.0 * ground_truth.1;
    let precision = if p > 0.0 { (o / p).sqrt() } else { 0.0 };
    let recall = if g > 0.0 { (o / g).sqrt() } else { 0.0 };
    (precision, recall)
}

/// Total projected ground-truth lengths `(x, y)` summed over pairs.
pub fn ground_truth_lengths(gt: &GroundTruth) -> (f64, f64) {
    let mut gx = 0.0;
    let mut gy = 0.0;
    for boxes in gt.boxes_by_pair().values() {
        let mut ux = IntervalUnion::new();
        let mut uy = IntervalUnion::new();
        for b in boxes {
            ux.insert(b.ref_start(), b.ref_end());
            uy.insert(b.query_start(), b.query_end());
        }
        gx += ux.len();
        gy += uy.len();
    }
    (gx, gy)
}

/// Localization-aware micro AP.
///
/// Predictions are ranked by score. After each rank, the per-pair unions of
/// predicted and overlap projections are updated incrementally; overlap
/// boxes are the intersections of each prediction with every ground-truth
/// box of its pair.
pub fn localization_uap(preds: &[LocalizationPrediction], gt: &GroundTruth) -> Result<PRCurve> {
    if gt.boxes().is_empty() {
        return Err(Error::validation("ground truth has no boxes; recall is undefined"));
    }
    let gt_boxes: BTreeMap<VideoPair, Vec<SegmentBox>> = gt.boxes_by_pair();
    let gt_len = ground_truth_lengths(gt);

    let mut ranked: Vec<&LocalizationPrediction> = preds.iter().collect();
    ranked.sort_by(|a, b| a.rank_cmp(b));

    let mut state: BTreeMap<VideoPair, PairUnions> = BTreeMap::new();
    let mut totals = Totals::default();
    let mut points = Vec::with_capacity(ranked.len());
    for (idx, p) in ranked.iter().enumerate() {
        let pair = p.pair();
        let unions = state.entry(pair.clone()).or_default();
        let before = (
            unions.pred_x.len(),
            unions.pred_y.len(),
            unions.overlap_x.len(),
            unions.overlap_y.len(),
        );
        unions.pred_x.insert(p.bbox.ref_start(), p.bbox.ref_end());
        unions.pred_y.insert(p.bbox.query_start(), p.bbox.query_end());
        if let Some(boxes) = gt_boxes.get(&pair) {
            for g in boxes {
                if let Some(o) = p.bbox.intersection(g) {
                    unions.overlap_x.insert(o.ref_start(), o.ref_end());
                    unions.overlap_y.insert(o.query_start(), o.query_end());
                }
            }
        }
        totals.pred_x += unions.pred_x.len() - before.0;
        totals.pred_y += unions.pred_y.len() - before.1;
        totals.overlap_x += unions.overlap_x.len() - before.2;
        totals.overlap_y += unions.overlap_y.len() - before.3;

        let (precision, recall) = localization_pr(
            (totals.overlap_x, totals.overlap_y),
            (totals.pred_x, totals.pred_y),
            gt_len,
        );
        points.push(PRPoint {
            rank: idx + 1,
            threshold: p.score,
            precision: precision.min(1.0),
            recall: recall.min(1.0),
        });
    }
    Ok(PRCurve::from_points(points))
}
