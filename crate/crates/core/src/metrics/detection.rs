use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{DetectionPrediction, GroundTruth, VideoId, VideoPair};

use super::{PRCurve, PRPoint};

/// Keeps the best score of each pair and sorts by rank order.
pub fn rank_detections(preds: &[DetectionPrediction]) -> Vec<DetectionPrediction> {
    let mut best: BTreeMap<VideoPair, f64> = BTreeMap::new();
    for p in preds {
        best.entry(p.pair())
            .and_modify(|s| *s = s.max(p.score))
            .or_insert(p.score);
    }
    let mut ranked: Vec<DetectionPrediction> = best
        .into_iter()
        .map(|((query, reference), score)| DetectionPrediction {
            query,
            reference,
            score,
        })
        .collect();
    ranked.sort_by(DetectionPrediction::rank_cmp);
    ranked
}

/// Micro AP over all queries jointly.
///
/// A prediction is correct when its pair is a ground-truth match; recall is
/// relative to every matching pair. Predictions on distractor queries are
/// simply incorrect.
pub fn detection_uap(preds: &[DetectionPrediction], gt: &GroundTruth) -> Result<PRCurve> {
    let total = gt.pair_set().len();
    if total == 0 {
        return Err(Error::validation("ground truth has no matching pairs; recall is undefined"));
    }
    let ranked = rank_detections(preds);
    let mut correct = 0usize;
    let mut points = Vec::with_capacity(ranked.len());
    for (idx, p) in ranked.iter().enumerate() {
        if gt.is_match(&p.query, &p.reference) {
            correct += 1;
        }
        let rank = idx + 1;
        points.push(PRPoint {
            rank,
            threshold: p.score,
            precision: correct as f64 / rank as f64,
            recall: correct as f64 / total as f64,
        });
    }
    Ok(PRCurve::from_points(points))
}

/// Per-query average precision, averaged over queries with ground-truth
/// matches. Matched queries without predictions score 0.
pub fn mean_ap(preds: &[DetectionPrediction], gt: &GroundTruth) -> Result<f64> {
    if gt.pair_set().is_empty() {
        return Err(Error::validation("ground truth has no matching pairs"));
    }
    let mut relevant: BTreeMap<&VideoId, BTreeSet<&VideoId>> = BTreeMap::new();
    for (q, r) in gt.pair_set() {
        relevant.entry(q).or_default().insert(r);
    }
    let mut per_query: BTreeMap<VideoId, Vec<DetectionPrediction>> = BTreeMap::new();
    for p in rank_detections(preds) {
        per_query.entry(p.query.clone()).or_default().push(p);
    }
    let mut sum = 0.0;
    for (q, refs) in &relevant {
        let Some(list) = per_query.get(*q) else { continue };
        let mut correct = 0usize;
        let mut ap = 0.0;
        for (idx, p) in list.iter().enumerate() {
            if refs.contains(&p.reference) {
                correct += 1;
                ap += (correct as f64 / (idx + 1) as f64) / refs.len() as f64;
            }
        }
        sum += ap;
    }
    Ok(sum / relevant.len() as f64)
}
