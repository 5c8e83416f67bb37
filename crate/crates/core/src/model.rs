//! Domain types shared across the toolkit.
//!
//! Everything here is immutable after construction. Constructors validate
//! the invariants, so downstream code can rely on them without re-checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Which collection a video belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VideoKind {
    Query,
    Reference,
    Training,
}

impl VideoKind {
    /// The id prefix used for this kind in every file format.
    pub fn prefix(self) -> char {
        match self {
            VideoKind::Query => 'Q',
            VideoKind::Reference => 'R',
            VideoKind::Training => 'T',
        }
    }

    pub fn from_prefix(c: char) -> Option<Self> {
        match c {
            'Q' => Some(VideoKind::Query),
            'R' => Some(VideoKind::Reference),
            'T' => Some(VideoKind::Training),
            _ => None,
        }
    }
}

/// Identifier of a video, e.g. `Q100097` or `R109933`.
///
/// The first character encodes the kind (`Q`, `R`, `T`). Ids are compared
/// by their string first, which is the order used for every tie-break.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VideoId {
    id: Arc<str>,
    kind: VideoKind,
}

impl VideoId {
    pub fn new(kind: VideoKind, id: &str) -> Result<Self> {
        let parsed = Self::parse(id)?;
        if parsed.kind != kind {
            return Err(Error::validation(format!(
                "video id {id:?} does not start with '{}' required for {kind:?}",
                kind.prefix()
            )));
        }
        Ok(parsed)
    }

    /// Parses an id, inferring its kind from the prefix.
    pub fn parse(id: &str) -> Result<Self> {
        let first = id
            .chars()
            .next()
            .ok_or_else(|| Error::validation("empty video id"))?;
        let kind = VideoKind::from_prefix(first).ok_or_else(|| {
            Error::validation(format!("video id {id:?} has no Q/R/T kind prefix"))
        })?;
        if id.chars().any(|c| matches!(c, ',' | '"' | '\n' | '\r')) {
            return Err(Error::validation(format!(
                "video id {id:?} contains a reserved character"
            )));
        }
        Ok(VideoId {
            id: Arc::from(id),
            kind,
        })
    }

    pub fn query(id: &str) -> Result<Self> {
        Self::new(VideoKind::Query, id)
    }

    pub fn reference(id: &str) -> Result<Self> {
        Self::new(VideoKind::Reference, id)
    }

    pub fn training(id: &str) -> Result<Self> {
        Self::new(VideoKind::Training, id)
    }

    pub fn as_str(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> VideoKind {
        self.kind
    }
}

impl PartialOrd for VideoId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VideoId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id
            .cmp(&other.id)
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

impl fmt::Debug for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)
    }
}

/// A (query, reference) video pair.
pub type VideoPair = (VideoId, VideoId);

/// Median of the positive spacings between consecutive timestamps.
pub fn median_spacing(times: &[f64]) -> Option<f64> {
    let mut gaps: Vec<f64> = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g > 0.0)
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    Some(if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        0.5 * (gaps[mid - 1] + gaps[mid])
    })
}

/// Frame descriptors of one video, one row per sampled timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    video: VideoId,
    dim: usize,
    timestamps: Vec<f64>,
    vectors: Vec<f32>,
}

impl DescriptorSet {
    /// `vectors` is row-major with `timestamps.len()` rows of `dim` values.
    pub fn new(video: VideoId, dim: usize, timestamps: Vec<f64>, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation(format!("{video}: descriptor dim must be positive")));
        }
        if vectors.len() != timestamps.len() * dim {
            return Err(Error::validation(format!(
                "{video}: {} values do not form {} rows of dim {dim}",
                vectors.len(),
                timestamps.len()
            )));
        }
        if let Some(t) = timestamps.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::validation(format!("{video}: invalid timestamp {t}")));
        }
        if timestamps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::validation(format!("{video}: timestamps must be non-decreasing")));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("{video}: non-finite descriptor entry")));
        }
        Ok(DescriptorSet {
            video,
            dim,
            timestamps,
            vectors,
        })
    }

    pub fn video(&self) -> &VideoId {
        &self.video
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Row-major descriptor matrix.
    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.vectors.chunks_exact(self.dim)
    }

    /// Median sampling interval, 1 s when it cannot be estimated.
    pub fn frame_period(&self) -> f64 {
        median_spacing(&self.timestamps).unwrap_or(1.0)
    }

    /// Covered duration: last timestamp plus one frame period.
    pub fn duration(&self) -> f64 {
        match self.timestamps.last() {
            Some(last) => last + self.frame_period(),
            None => 0.0,
        }
    }

    /// Same video and timestamps with replaced descriptors.
    pub fn with_vectors(&self, dim: usize, vectors: Vec<f32>) -> Result<Self> {
        DescriptorSet::new(self.video.clone(), dim, self.timestamps.clone(), vectors)
    }
}

/// Inner product of two equally sized rows.
///
/// Accumulates in eight independent lanes; the summation order is fixed,
/// so results are reproducible bit for bit.
#[inline]
pub fn inner(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f32 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Axis-aligned box in (query time × reference time), half-open on both axes.
///
/// When plotted, the reference axis is x and the query axis is y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentBox {
    query_start: f64,
    query_end: f64,
    ref_start: f64,
    ref_end: f64,
}

impl SegmentBox {
    pub fn new(query_start: f64, query_end: f64, ref_start: f64, ref_end: f64) -> Result<Self> {
        let all = [query_start, query_end, ref_start, ref_end];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("box coordinates must be finite"));
        }
        if query_start >= query_end || ref_start >= ref_end {
            return Err(Error::validation(format!(
                "degenerate box [{query_start},{query_end})x[{ref_start},{ref_end})"
            )));
        }
        Ok(SegmentBox {
            query_start,
            query_end,
            ref_start,
            ref_end,
        })
    }

    pub fn query_start(&self) -> f64 {
        self.query_start
    }

    pub fn query_end(&self) -> f64 {
        self.query_end
    }

    pub fn ref_start(&self) -> f64 {
        self.ref_start
    }

    pub fn ref_end(&self) -> f64 {
        self.ref_end
    }

    pub fn query_interval(&self) -> (f64, f64) {
        (self.query_start, self.query_end)
    }

    pub fn ref_interval(&self) -> (f64, f64) {
        (self.ref_start, self.ref_end)
    }

    pub fn query_len(&self) -> f64 {
        self.query_end - self.query_start
    }

    pub fn ref_len(&self) -> f64 {
        self.ref_end - self.ref_start
    }

    pub fn area(&self) -> f64 {
        self.query_len() * self.ref_len()
    }

    /// Intersection box, `None` when the boxes do not overlap with positive area.
    pub fn intersection(&self, other: &SegmentBox) -> Option<SegmentBox> {
        let qs = self.query_start.max(other.query_start);
        let qe = self.query_end.min(other.query_end);
        let rs = self.ref_start.max(other.ref_start);
        let re = self.ref_end.min(other.ref_end);
        (qs < qe && rs < re).then_some(SegmentBox {
            query_start: qs,
            query_end: qe,
            ref_start: rs,
            ref_end: re,
        })
    }

    /// Area intersection over union of two boxes.
    pub fn iou(&self, other: &SegmentBox) -> f64 {
        match self.intersection(other) {
            Some(inter) => {
                let i = inter.area();
                i / (self.area() + other.area() - i)
            }
            None => 0.0,
        }
    }

    /// Lexicographic order on (query_start, query_end, ref_start, ref_end).
    pub fn total_cmp(&self, other: &SegmentBox) -> std::cmp::Ordering {
        self.query_start
            .total_cmp(&other.query_start)
            .then(self.query_end.total_cmp(&other.query_end))
            .then(self.ref_start.total_cmp(&other.ref_start))
            .then(self.ref_end.total_cmp(&other.ref_end))
    }
}

fn check_pair(query: &VideoId, reference: &VideoId) -> Result<()> {
    if query.kind() != VideoKind::Query || reference.kind() != VideoKind::Reference {
        return Err(Error::validation(format!(
            "expected a (query, reference) pair, got ({query}, {reference})"
        )));
    }
    Ok(())
}

/// A scored video pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionPrediction {
    pub query: VideoId,
    pub reference: VideoId,
    pub score: f64,
}

impl DetectionPrediction {
    pub fn new(query: VideoId, reference: VideoId, score: f64) -> Result<Self> {
        check_pair(&query, &reference)?;
        if !score.is_finite() {
            return Err(Error::validation(format!("non-finite score for ({query}, {reference})")));
        }
        Ok(DetectionPrediction {
            query,
            reference,
            score,
        })
    }

    pub fn pair(&self) -> VideoPair {
        (self.query.clone(), self.reference.clone())
    }

    /// Ranking order: score descending, then query id, then reference id.
    pub fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.query.cmp(&other.query))
            .then_with(|| self.reference.cmp(&other.reference))
    }
}

/// A scored copied-segment box for a video pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationPrediction {
    pub query: VideoId,
    pub reference: VideoId,
    pub bbox: SegmentBox,
    pub score: f64,
}

impl LocalizationPrediction {
    pub fn new(query: VideoId, reference: VideoId, bbox: SegmentBox, score: f64) -> Result<Self> {
        check_pair(&query, &reference)?;
        if !score.is_finite() {
            return Err(Error::validation(format!("non-finite score for ({query}, {reference})")));
        }
        Ok(LocalizationPrediction {
            query,
            reference,
            bbox,
            score,
        })
    }

    pub fn pair(&self) -> VideoPair {
        (self.query.clone(), self.reference.clone())
    }

    /// Ranking order: score descending, then query id, reference id and box
    /// coordinates.
    pub fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.query.cmp(&other.query))
            .then_with(|| self.reference.cmp(&other.reference))
            .then_with(|| self.bbox.total_cmp(&other.bbox))
    }
}

/// One annotated copied segment.
#[derive(Debug, Clone, PartialEq)]
pub struct GtBox {
    pub query: VideoId,
    pub reference: VideoId,
    pub bbox: SegmentBox,
}

/// Annotated copied segments plus the derived set of matching video pairs.
///
/// Boxes of one pair may overlap; metrics only ever look at their unions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    boxes: Vec<GtBox>,
    pair_set: BTreeSet<VideoPair>,
}

impl GroundTruth {
    pub fn new(boxes: Vec<GtBox>) -> Result<Self> {
        for b in &boxes {
            check_pair(&b.query, &b.reference)?;
        }
        let pair_set = boxes
            .iter()
            .map(|b| (b.query.clone(), b.reference.clone()))
            .collect();
        Ok(GroundTruth { boxes, pair_set })
    }

    pub fn boxes(&self) -> &[GtBox] {
        &self.boxes
    }

    pub fn pair_set(&self) -> &BTreeSet<VideoPair> {
        &self.pair_set
    }

    pub fn is_match(&self, query: &VideoId, reference: &VideoId) -> bool {
        // BTreeSet lookups need an owned tuple; pairs are cheap to clone.
        self.pair_set.contains(&(query.clone(), reference.clone()))
    }

    /// Queries with at least one copied segment.
    pub fn matched_queries(&self) -> BTreeSet<VideoId> {
        self.pair_set.iter().map(|(q, _)| q.clone()).collect()
    }

    pub fn boxes_by_pair(&self) -> BTreeMap<VideoPair, Vec<SegmentBox>> {
        let mut out: BTreeMap<VideoPair, Vec<SegmentBox>> = BTreeMap::new();
        for b in &self.boxes {
            out.entry((b.query.clone(), b.reference.clone()))
                .or_default()
                .push(b.bbox);
        }
        out
    }

    /// Keeps only the boxes whose query satisfies `keep`.
    pub fn filter_queries(&self, mut keep: impl FnMut(&VideoId) -> bool) -> GroundTruth {
        let boxes = self.boxes.iter().filter(|b| keep(&b.query)).cloned().collect();
        GroundTruth::new(boxes).expect("subset of a valid ground truth")
    }
}

/// The edit types applied to one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformTag {
    pub query: VideoId,
    pub tags: BTreeSet<String>,
    pub n_transforms: usize,
}

impl TransformTag {
    pub fn new<I, S>(query: VideoId, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tags: BTreeSet<String> = tags.into_iter().map(Into::into).collect();
        let n_transforms = tags.len();
        TransformTag {
            query,
            tags,
            n_transforms,
        }
    }

    pub fn has(&self, name: &str) -> bool {
        self.tags.contains(name)
    }
}
