//! Copied-segment localization with a temporal network.
//!
//! Frame matches above a similarity threshold become nodes of a DAG whose
//! edges only move forward in both query and reference time. The heaviest
//! path is extracted, turned into a box, its nodes removed, and the process
//! repeats.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    inner, median_spacing, DescriptorSet, LocalizationPrediction, SegmentBox, VideoId, VideoPair,
};

/// Frame-by-frame similarities of one (query, reference) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    query: VideoId,
    reference: VideoId,
    query_times: Vec<f64>,
    ref_times: Vec<f64>,
    /// Row-major, one row per query frame.
    values: Vec<f32>,
}

impl SimilarityMatrix {
    pub fn new(
        query: VideoId,
        reference: VideoId,
        query_times: Vec<f64>,
        ref_times: Vec<f64>,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != query_times.len() * ref_times.len() {
            return Err(Error::validation(format!(
                "{} similarities for a {}x{} matrix",
                values.len(),
                query_times.len(),
                ref_times.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite similarity"));
        }
        for times in [&query_times, &ref_times] {
            if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::validation("timestamps must be finite and non-decreasing"));
            }
        }
        Ok(SimilarityMatrix {
            query,
            reference,
            query_times,
            ref_times,
            values,
        })
    }

    pub fn query(&self) -> &VideoId {
        &self.query
    }

    pub fn reference(&self) -> &VideoId {
        &self.reference
    }

    pub fn query_times(&self) -> &[f64] {
        &self.query_times
    }

    pub fn ref_times(&self) -> &[f64] {
        &self.ref_times
    }

    pub fn rows(&self) -> usize {
        self.query_times.len()
    }

    pub fn cols(&self) -> usize {
        self.ref_times.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.cols() + j]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// `S = Q R^T` for one query and one reference video.
pub fn similarity_matrix(q: &DescriptorSet, r: &DescriptorSet) -> Result<SimilarityMatrix> {
    if q.dim() != r.dim() {
        return Err(Error::Dim {
            expected: q.dim(),
            found: r.dim(),
        });
    }
    let mut values = Vec::with_capacity(q.len() * r.len());
    for qrow in q.rows() {
        values.extend(r.rows().map(|rrow| inner(qrow, rrow)));
    }
    Ok(SimilarityMatrix {
        query: q.video().clone(),
        reference: r.video().clone(),
        query_times: q.timestamps().to_vec(),
        ref_times: r.timestamps().to_vec(),
        values,
    })
}

/// Temporal network parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TNConfig {
    /// A match becomes a node when `similarity + offset` is strictly above this.
    pub similarity_threshold: f64,
    /// Added to every similarity before thresholding and path weighting.
    pub offset: f64,
    /// Largest forward step, in seconds, on either axis between consecutive path nodes.
    pub max_time_gap: f64,
    /// Paths with fewer nodes are discarded.
    pub min_path_length: usize,
    pub max_paths_per_pair: usize,
}

impl Default for TNConfig {
    fn default() -> Self {
        TNConfig {
            similarity_threshold: 0.5,
            offset: 0.0,
            max_time_gap: 3.0,
            min_path_length: 3,
            max_paths_per_pair: 5,
        }
    }
}

impl TNConfig {
    /// Defaults for score-normalized similarities, which can be negative.
    pub fn score_normalized() -> Self {
        TNConfig {
            offset: 0.5,
            ..TNConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_time_gap.is_finite() && self.max_time_gap > 0.0) {
            return Err(Error::validation("max_time_gap must be positive"));
        }
        if self.min_path_length == 0 {
            return Err(Error::validation("min_path_length must be at least 1"));
        }
        if !self.similarity_threshold.is_finite() || !self.offset.is_finite() {
            return Err(Error::validation("threshold and offset must be finite"));
        }
        Ok(())
    }
}

const NONE: usize = usize::MAX;

/// Per-node state of one dynamic-programming pass.
#[derive(Clone, Copy)]
struct Cell {
    weight: f64,
    alive: bool,
    best: f64,
    /// Node count of the chosen path ending here.
    len: usize,
    /// Longest path (in nodes) ending here, independent of weight.
    max_len: usize,
    start: usize,
    prev: usize,
}

struct Network<'a> {
    s: &'a SimilarityMatrix,
    cfg: &'a TNConfig,
    cells: Vec<Option<Cell>>,
    /// For each reference column, the half-open column range of admissible predecessors.
    col_window: Vec<(usize, usize)>,
}

impl<'a> Network<'a> {
    fn new(s: &'a SimilarityMatrix, cfg: &'a TNConfig) -> Self {
        let cells = s
            .values
            .iter()
            .map(|v| {
                let weight = f64::from(*v) + cfg.offset;
                (weight > cfg.similarity_threshold).then_some(Cell {
                    weight,
                    alive: true,
                    best: 0.0,
                    len: 0,
                    max_len: 0,
                    start: NONE,
                    prev: NONE,
                })
            })
            .collect();
        let rt = &s.ref_times;
        let col_window = (0..rt.len())
            .map(|j| {
                let lo = rt.partition_point(|t| rt[j] - t > cfg.max_time_gap);
                let hi = rt.partition_point(|t| *t < rt[j]);
                (lo, hi.max(lo))
            })
            .collect();
        Network {
            s,
            cfg,
            cells,
            col_window,
        }
    }

    /// One pass over alive nodes in (i, j) order, which is topological
    /// because edges strictly increase query time. Returns the end node of
    /// the heaviest path and whether any alive path reaches the minimum length.
    fn solve(&mut self) -> Option<(usize, bool)> {
        let cols = self.s.cols();
        let qt = &self.s.query_times;
        let mut best_end: Option<usize> = None;
        let mut long_enough = false;
        for i in 0..self.s.rows() {
            // first row whose query time is within the gap
            let row_lo = qt.partition_point(|t| qt[i] - t > self.cfg.max_time_gap);
            let row_hi = qt.partition_point(|t| *t < qt[i]);
            for j in 0..cols {
                let n = i * cols + j;
                let Some(cell) = self.cells[n] else { continue };
                if !cell.alive {
                    continue;
                }
                let (col_lo, col_hi) = self.col_window[j];
                let mut pred = NONE;
                let mut pred_best = 0.0f64;
                let mut pred_start = NONE;
                let mut max_len = 0usize;
                for pi in row_lo..row_hi {
                    for pj in col_lo..col_hi {
                        let p = pi * cols + pj;
                        let Some(pc) = self.cells[p] else { continue };
                        if !pc.alive {
                            continue;
                        }
                        max_len = max_len.max(pc.max_len);
                        if pc.best <= 0.0 {
                            continue;
                        }
                        let better = pred == NONE
                            || pc.best > pred_best
                            || (pc.best == pred_best && pc.start < pred_start);
                        if better {
                            pred = p;
                            pred_best = pc.best;
                            pred_start = pc.start;
                        }
                    }
                }
                let updated = if pred == NONE {
                    Cell {
                        best: cell.weight,
                        len: 1,
                        max_len: max_len + 1,
                        start: n,
                        prev: NONE,
                        ..cell
                    }
                } else {
                    let pc = self.cells[pred].unwrap();
                    Cell {
                        best: cell.weight + pc.best,
                        len: pc.len + 1,
                        max_len: max_len + 1,
                        start: pc.start,
                        prev: pred,
                        ..cell
                    }
                };
                long_enough |= updated.max_len >= self.cfg.min_path_length;
                self.cells[n] = Some(updated);
                best_end = match best_end {
                    None => Some(n),
                    Some(b) => {
                        let bc = self.cells[b].unwrap();
                        let wins = updated.best > bc.best
                            || (updated.best == bc.best && updated.start < bc.start);
                        Some(if wins { n } else { b })
                    }
                };
            }
        }
        best_end.map(|b| (b, long_enough))
    }

    fn take_path(&mut self, end: usize) -> Vec<(usize, usize)> {
        let cols = self.s.cols();
        let mut path = Vec::new();
        let mut n = end;
        while n != NONE {
            let cell = self.cells[n].as_mut().unwrap();
            cell.alive = false;
            path.push((n / cols, n % cols));
            n = cell.prev;
        }
        path.reverse();
        path
    }

    /// Retires every alive node inside the given time box.
    fn suppress(&mut self, (qs, qe): (f64, f64), (rs, re): (f64, f64)) {
        let cols = self.s.cols();
        let qt = &self.s.query_times;
        let rt = &self.s.ref_times;
        let (i0, i1) = (qt.partition_point(|t| *t < qs), qt.partition_point(|t| *t < qe));
        let (j0, j1) = (rt.partition_point(|t| *t < rs), rt.partition_point(|t| *t < re));
        for i in i0..i1 {
            for cell in self.cells[i * cols + j0..i * cols + j1].iter_mut().flatten() {
                cell.alive = false;
            }
        }
    }
}

/// Step used to pad a path's last node: the median step along the path,
/// falling back to the video's sampling period.
fn path_period(times: &[f64], video_times: &[f64]) -> f64 {
    median_spacing(times)
        .or_else(|| median_spacing(video_times))
        .unwrap_or(1.0)
}

fn axis_extent(times: &[f64], video_times: &[f64]) -> (f64, f64) {
    let video_period = median_spacing(video_times).unwrap_or(1.0);
    let duration = video_times.last().map_or(0.0, |t| t + video_period);
    let start = times[0];
    let last = *times.last().unwrap();
    let end = (last + path_period(times, video_times)).min(duration);
    (start, end)
}

/// Extracts scored boxes from one similarity matrix.
///
/// Path weight is the sum of `similarity + offset` over its nodes. Equal
/// weights prefer the path starting at the smallest (query, reference)
/// frame index. Each emitted box spans the path's first frame to its last
/// frame plus one step, and is scored by the largest raw similarity on the
/// path. Nodes inside an emitted box are not reused by later paths.
pub fn temporal_network_localize(
    s: &SimilarityMatrix,
    cfg: &TNConfig,
) -> Result<Vec<LocalizationPrediction>> {
    cfg.validate()?;
    let mut net = Network::new(s, cfg);
    let mut out = Vec::new();
    while out.len() < cfg.max_paths_per_pair {
        let Some((end, long_enough)) = net.solve() else {
            break;
        };
        if !long_enough {
            break;
        }
        let path = net.take_path(end);
        if path.len() < cfg.min_path_length {
            continue;
        }
        let qtimes: Vec<f64> = path.iter().map(|(i, _)| s.query_times[*i]).collect();
        let rtimes: Vec<f64> = path.iter().map(|(_, j)| s.ref_times[*j]).collect();
        let (qs, qe) = axis_extent(&qtimes, &s.query_times);
        let (rs, re) = axis_extent(&rtimes, &s.ref_times);
        net.suppress((qs, qe), (rs, re));
        let score = path
            .iter()
            .map(|(i, j)| s.get(*i, *j))
            .fold(f32::NEG_INFINITY, f32::max);
        out.push(LocalizationPrediction::new(
            s.query.clone(),
            s.reference.clone(),
            SegmentBox::new(qs, qe, rs, re)?,
            f64::from(score),
        )?);
    }
    Ok(out)
}

/// Runs the temporal network on every candidate pair.
///
/// Output is sorted by score (see [`LocalizationPrediction::rank_cmp`]) and
/// does not depend on candidate order or duplicates.
pub fn localize_candidates(
    candidates: &[VideoPair],
    queries: &[DescriptorSet],
    references: &[DescriptorSet],
    cfg: &TNConfig,
) -> Result<Vec<LocalizationPrediction>> {
    cfg.validate()?;
    let qmap: BTreeMap<&VideoId, &DescriptorSet> = queries.iter().map(|s| (s.video(), s)).collect();
    let rmap: BTreeMap<&VideoId, &DescriptorSet> =
        references.iter().map(|s| (s.video(), s)).collect();
    let mut pairs: Vec<(&DescriptorSet, &DescriptorSet)> = candidates
        .iter()
        .map(|(q, r)| {
            let qs = qmap
                .get(q)
                .ok_or_else(|| Error::validation(format!("no descriptors for query {q}")))?;
            let rs = rmap
                .get(r)
                .ok_or_else(|| Error::validation(format!("no descriptors for reference {r}")))?;
            Ok((*qs, *rs))
        })
        .collect::<Result<_>>()?;
    pairs.sort_by(|a, b| (a.0.video(), a.1.video()).cmp(&(b.0.video(), b.1.video())));
    pairs.dedup_by(|a, b| a.0.video() == b.0.video() && a.1.video() == b.1.video());

    let per_pair: Vec<Vec<LocalizationPrediction>> = pairs
        .par_iter()
        .map(|(q, r)| temporal_network_localize(&similarity_matrix(q, r)?, cfg))
        .collect::<Result<_>>()?;
    let mut out: Vec<LocalizationPrediction> = per_pair.into_iter().flatten().collect();
    out.sort_by(LocalizationPrediction::rank_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f32) -> SimilarityMatrix {
        let mut values = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        SimilarityMatrix::new(
            VideoId::query("Q1").unwrap(),
            VideoId::reference("R1").unwrap(),
            (0..rows).map(|i| i as f64).collect(),
            (0..cols).map(|j| j as f64).collect(),
            values,
        )
        .unwrap()
    }

    fn set(id: &str, rows: &[&[f32]]) -> DescriptorSet {
        DescriptorSet::new(
            VideoId::parse(id).unwrap(),
            rows[0].len(),
            (0..rows.len()).map(|i| i as f64).collect(),
            rows.concat(),
        )
        .unwrap()
    }

    #[test]
    fn orthonormal_rows_give_identity() {
        let q = set("Q1", &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let r = set("R1", &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let s = similarity_matrix(&q, &r).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn scalar_product() {
        let s = similarity_matrix(&set("Q1", &[&[2.0]]), &set("R1", &[&[3.0]])).unwrap();
        assert_eq!(s.values(), &[6.0]);
        assert!(matches!(
            similarity_matrix(&set("Q1", &[&[2.0]]), &set("R1", &[&[3.0, 1.0]])),
            Err(Error::Dim { .. })
        ));
    }

    #[test]
    fn all_zero_matrix_has_no_nodes() {
        let s = matrix(8, 8, |_, _| 0.0);
        let cfg = TNConfig {
            similarity_threshold: 0.0,
            ..TNConfig::default()
        };
        assert!(temporal_network_localize(&s, &cfg).unwrap().is_empty());
    }

    #[test]
    fn single_diagonal_band() {
        // query t=2..10 matches reference t=5..13
        let s = matrix(20, 20, |i, j| {
            if (2..=10).contains(&i) && j == i + 3 {
                0.8 + 0.01 * i as f32
            } else {
                -1.0
            }
        });
        let cfg = TNConfig {
            similarity_threshold: 0.0,
            ..TNConfig::default()
        };
        let preds = temporal_network_localize(&s, &cfg).unwrap();
        assert_eq!(preds.len(), 1);
        let b = preds[0].bbox;
        assert_eq!(b.query_interval(), (2.0, 11.0));
        assert_eq!(b.ref_interval(), (5.0, 14.0));
        assert_eq!(preds[0].score, f64::from(0.8f32 + 0.01 * 10.0));
    }

    #[test]
    fn short_paths_are_dropped() {
        let s = matrix(10, 10, |i, j| if i == j && i < 2 { 1.0 } else { -1.0 });
        assert!(temporal_network_localize(&s, &TNConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn gap_splits_paths() {
        // two bands whose nearest nodes are 6 s apart on both axes
        let s = matrix(30, 30, |i, j| {
            let first = i < 5 && j == i;
            let second = (10..15).contains(&i) && j == i;
            if first || second { 1.0 } else { 0.0 }
        });
        let preds = temporal_network_localize(&s, &TNConfig::default()).unwrap();
        assert_eq!(preds.len(), 2);
        let mut spans: Vec<(f64, f64)> = preds.iter().map(|p| p.bbox.query_interval()).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(spans, vec![(0.0, 5.0), (10.0, 15.0)]);
    }

    #[test]
    fn speed_changed_band_is_padded_by_its_step() {
        // query frame k copies reference frame 2k (2x speed-up)
        let s = matrix(10, 20, |i, j| if j == 2 * i && i < 5 { 1.0 } else { 0.0 });
        let preds = temporal_network_localize(&s, &TNConfig::default()).unwrap();
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].bbox.query_interval(), (0.0, 5.0));
        assert_eq!(preds[0].bbox.ref_interval(), (0.0, 10.0));
    }

    #[test]
    fn max_paths_caps_output() {
        let s = matrix(40, 40, |i, j| if i == j && i % 8 < 4 { 1.0 } else { 0.0 });
        let cfg = TNConfig {
            max_paths_per_pair: 2,
            ..TNConfig::default()
        };
        assert_eq!(temporal_network_localize(&s, &cfg).unwrap().len(), 2);
    }

    #[test]
    fn config_validation() {
        let s = matrix(2, 2, |_, _| 0.0);
        let bad = TNConfig {
            max_time_gap: 0.0,
            ..TNConfig::default()
        };
        assert!(temporal_network_localize(&s, &bad).is_err());
        let bad = TNConfig {
            min_path_length: 0,
            ..TNConfig::default()
        };
        assert!(temporal_network_localize(&s, &bad).is_err());
    }

    #[test]
    fn candidates_missing_descriptors() {
        let q = set("Q1", &[&[1.0]]);
        let pair = (VideoId::query("Q1").unwrap(), VideoId::reference("R9").unwrap());
        assert!(localize_candidates(&[pair], &[q], &[], &TNConfig::default()).is_err());
        assert!(localize_candidates(&[], &[], &[], &TNConfig::default()).unwrap().is_empty());
    }
}
