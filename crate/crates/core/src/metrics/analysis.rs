//! Subset evaluation and cross-run comparisons.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{
    DetectionPrediction, GroundTruth, LocalizationPrediction, TransformTag, VideoId, VideoPair,
};

use super::{detection_uap, localization_uap, mean_ap, rank_detections};

/// Metrics recomputed on a query subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    /// Matched queries kept by the predicate.
    pub matched_queries: usize,
    pub detection_uap: Option<f64>,
    pub map: Option<f64>,
    pub localization_uap: Option<f64>,
}

/// Queries retained by a subset: the matched queries selected by a predicate
/// plus every distractor query.
#[derive(Debug, Clone)]
pub struct QuerySubset {
    matched: BTreeSet<VideoId>,
    kept: BTreeSet<VideoId>,
}

impl QuerySubset {
    pub fn select(
        gt: &GroundTruth,
        tags: &[TransformTag],
        mut keep: impl FnMut(&VideoId, Option<&TransformTag>) -> bool,
    ) -> Result<Self> {
        let by_query: BTreeMap<&VideoId, &TransformTag> =
            tags.iter().map(|t| (&t.query, t)).collect();
        let matched = gt.matched_queries();
        let kept: BTreeSet<VideoId> = matched
            .iter()
            .filter(|q| keep(q, by_query.get(q).copied()))
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(Error::validation("subset keeps no query with copied segments"));
        }
        Ok(QuerySubset { matched, kept })
    }

    /// True for kept matched queries and for any distractor query.
    pub fn contains(&self, query: &VideoId) -> bool {
        self.kept.contains(query) || !self.matched.contains(query)
    }

    pub fn matched_len(&self) -> usize {
        self.kept.len()
    }

    pub fn ground_truth(&self, gt: &GroundTruth) -> GroundTruth {
        gt.filter_queries(|q| self.kept.contains(q))
    }

    pub fn detections(&self, preds: &[DetectionPrediction]) -> Vec<DetectionPrediction> {
        preds.iter().filter(|p| self.contains(&p.query)).cloned().collect()
    }

    pub fn localizations(&self, preds: &[LocalizationPrediction]) -> Vec<LocalizationPrediction> {
        preds.iter().filter(|p| self.contains(&p.query)).cloned().collect()
    }
}

/// Recomputes the metrics on queries selected by `keep`, always retaining
/// distractor queries.
pub fn evaluate_subset(
    detections: Option<&[DetectionPrediction]>,
    localizations: Option<&[LocalizationPrediction]>,
    gt: &GroundTruth,
    tags: &[TransformTag],
    keep: impl FnMut(&VideoId, Option<&TransformTag>) -> bool,
) -> Result<SubsetReport> {
    let subset = QuerySubset::select(gt, tags, keep)?;
    let sub_gt = subset.ground_truth(gt);
    let (detection_uap, map) = match detections {
        Some(d) => {
            let d = subset.detections(d);
            (Some(detection_uap(&d, &sub_gt)?.uap), Some(mean_ap(&d, &sub_gt)?))
        }
        None => (None, None),
    };
    let localization_uap = match localizations {
        Some(l) => Some(localization_uap(&subset.localizations(l), &sub_gt)?.uap),
        None => None,
    };
    Ok(SubsetReport {
        matched_queries: subset.matched_len(),
        detection_uap,
        map,
        localization_uap,
    })
}

/// Drops predictions for queries without copied segments.
pub fn exclude_distractors<T, F>(preds: &[T], gt: &GroundTruth, query_of: F) -> Vec<T>
where
    T: Clone,
    F: Fn(&T) -> &VideoId,
{
    let matched = gt.matched_queries();
    preds
        .iter()
        .filter(|p| matched.contains(query_of(p)))
        .cloned()
        .collect()
}

/// A negative pair ranked high by at least one run, with the precision at
/// the rank it holds in each run (0 when a run does not return it).
#[derive(Debug, Clone, PartialEq)]
pub struct HardNegativePoint {
    pub pair: VideoPair,
    pub precision_a: f64,
    pub precision_b: f64,
}

fn precision_by_pair(preds: &[DetectionPrediction], gt: &GroundTruth) -> Vec<(VideoPair, bool, f64)> {
    let mut correct = 0usize;
    rank_detections(preds)
        .into_iter()
        .enumerate()
        .map(|(idx, p)| {
            let positive = gt.is_match(&p.query, &p.reference);
            correct += usize::from(positive);
            (p.pair(), positive, correct as f64 / (idx + 1) as f64)
        })
        .collect()
}

/// Collects the negatives within the top `top_n` ranks of either run and
/// reports the precision each run reaches at that pair's rank.
pub fn hard_negative_comparison(
    run_a: &[DetectionPrediction],
    run_b: &[DetectionPrediction],
    gt: &GroundTruth,
    top_n: usize,
) -> Vec<HardNegativePoint> {
    let ranked_a = precision_by_pair(run_a, gt);
    let ranked_b = precision_by_pair(run_b, gt);
    let mut negatives: BTreeSet<VideoPair> = BTreeSet::new();
    for ranked in [&ranked_a, &ranked_b] {
        negatives.extend(
            ranked
                .iter()
                .take(top_n)
                .filter(|(_, positive, _)| !positive)
                .map(|(pair, _, _)| pair.clone()),
        );
    }
    let lookup = |ranked: &[(VideoPair, bool, f64)]| -> BTreeMap<VideoPair, f64> {
        ranked.iter().map(|(pair, _, p)| (pair.clone(), *p)).collect()
    };
    let pa = lookup(&ranked_a);
    let pb = lookup(&ranked_b);
    negatives
        .into_iter()
        .map(|pair| HardNegativePoint {
            precision_a: pa.get(&pair).copied().unwrap_or(0.0),
            precision_b: pb.get(&pair).copied().unwrap_or(0.0),
            pair,
        })
        .collect()
}
