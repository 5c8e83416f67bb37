use crate::error::Result;
use crate::localization::{localize_candidates, TNConfig};
use crate::metrics::{detection_uap, localization_uap, mean_ap, PRCurve};
use crate::model::{DescriptorSet, DetectionPrediction, LocalizationPrediction, VideoPair};
use crate::search::{
    apply_normalization, detection_scores, fit_normalizer, global_topk_pairs, Normalization,
};

use super::BenchmarkInstance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreNormParams {
    pub k: usize,
    pub beta: f64,
}

impl Default for ScoreNormParams {
    fn default() -> Self {
        ScoreNormParams { k: 1, beta: 1.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Number of frame pairs kept by the global search.
    pub k: usize,
    pub normalization: Normalization,
    pub score_norm: Option<ScoreNormParams>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: 10_000,
            normalization: Normalization::L2,
            score_norm: None,
        }
    }
}

/// Applies L2 normalization and, if configured, score normalization fitted on
/// the training videos. Returns (queries, references).
pub fn prepare_descriptors(
    queries: &[DescriptorSet],
    references: &[DescriptorSet],
    training: &[DescriptorSet],
    search: &SearchConfig,
) -> Result<(Vec<DescriptorSet>, Vec<DescriptorSet>)> {
    let (q, _) = apply_normalization(queries, search.normalization);
    let (r, _) = apply_normalization(references, search.normalization);
    match search.score_norm {
        None => Ok((q, r)),
        Some(p) => {
            let (t, _) = apply_normalization(training, search.normalization);
            let normalizer = fit_normalizer(&t, p.k, p.beta, &t)?;
            normalizer.apply(&q, &r)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutput {
    pub detections: Vec<DetectionPrediction>,
    pub localizations: Vec<LocalizationPrediction>,
    pub detection_curve: PRCurve,
    pub localization_curve: PRCurve,
    pub map: f64,
}

/// Search, detection scoring, localization of every detected pair, and
/// evaluation against the instance ground truth.
pub fn run_baseline(
    instance: &BenchmarkInstance,
    search: &SearchConfig,
    tn: &TNConfig,
) -> Result<BaselineOutput> {
    let (queries, references) = prepare_descriptors(
        &instance.queries,
        &instance.references,
        &instance.training,
        search,
    )?;
    let matches = global_topk_pairs(&queries, &references, search.k)?;
    let detections = detection_scores(&matches);
    let candidates: Vec<VideoPair> = detections.iter().map(DetectionPrediction::pair).collect();
    let localizations = localize_candidates(&candidates, &queries, &references, tn)?;
    let detection_curve = detection_uap(&detections, &instance.gt)?;
    let localization_curve = localization_uap(&localizations, &instance.gt)?;
    let map = mean_ap(&detections, &instance.gt)?;
    Ok(BaselineOutput {
        detections,
        localizations,
        detection_curve,
        localization_curve,
        map,
    })
}
