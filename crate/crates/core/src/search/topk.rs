use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{inner, DescriptorSet, DetectionPrediction, VideoId, VideoKind, VideoPair};

/// One query frame matched to one reference frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatch {
    pub query: VideoId,
    pub query_frame_idx: usize,
    pub reference: VideoId,
    pub ref_frame_idx: usize,
    pub similarity: f32,
}

#[derive(Clone, Copy)]
struct Candidate {
    similarity: f32,
    query_rank: u32,
    query_frame: u32,
    ref_rank: u32,
    ref_frame: u32,
}

impl Candidate {
    /// `Less` means `self` ranks ahead of `other`.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .similarity
            .total_cmp(&self.similarity)
            .then(self.query_rank.cmp(&other.query_rank))
            .then(self.query_frame.cmp(&other.query_frame))
            .then(self.ref_rank.cmp(&other.ref_rank))
            .then(self.ref_frame.cmp(&other.ref_frame))
    }
}

// Heap order: the worst-ranked candidate sits on top.
impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// Position of each set in (id, input position) order.
fn id_ranks(sets: &[DescriptorSet]) -> (Vec<u32>, Vec<usize>) {
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[a].video().cmp(sets[b].video()).then(a.cmp(&b)));
    let mut rank = vec![0u32; sets.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32;
    }
    (rank, order)
}

pub(crate) fn check_dims<'a>(
    sets: impl IntoIterator<Item = &'a DescriptorSet>,
) -> Result<Option<usize>> {
    let mut dim = None;
    for s in sets {
        match dim {
            None => dim = Some(s.dim()),
            Some(d) if d != s.dim() => {
                return Err(Error::Dim {
                    expected: d,
                    found: s.dim(),
                })
            }
            _ => {}
        }
    }
    Ok(dim)
}

fn check_kind(sets: &[DescriptorSet], kind: VideoKind) -> Result<()> {
    match sets.iter().find(|s| s.video().kind() != kind) {
        Some(s) => Err(Error::validation(format!(
            "{} is not a {kind:?} video",
            s.video()
        ))),
        None => Ok(()),
    }
}

/// The `k` largest inner products over all query frames × reference frames.
///
/// The search is joint over every query rather than per query descriptor.
/// Equal similarities are ordered by (query id, query frame, reference id,
/// reference frame), so the output does not depend on input order or on the
/// size of the rayon pool the call runs in.
pub fn global_topk_pairs(
    queries: &[DescriptorSet],
    references: &[DescriptorSet],
    k: usize,
) -> Result<Vec<FrameMatch>> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    check_dims(queries.iter().chain(references))?;
    check_kind(queries, VideoKind::Query)?;
    check_kind(references, VideoKind::Reference)?;

    let (query_rank, query_order) = id_ranks(queries);
    let (ref_rank, ref_order) = id_ranks(references);

    let mut merged: Vec<Candidate> = queries
        .par_iter()
        .enumerate()
        .flat_map_iter(|(qi, qset)| {
            let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k.min(1 << 16));
            for (qf, qrow) in qset.rows().enumerate() {
                for (ri, rset) in references.iter().enumerate() {
                    for (rf, rrow) in rset.rows().enumerate() {
                        let cand = Candidate {
                            similarity: inner(qrow, rrow),
                            query_rank: query_rank[qi],
                            query_frame: qf as u32,
                            ref_rank: ref_rank[ri],
                            ref_frame: rf as u32,
                        };
                        if heap.len() < k {
                            heap.push(cand);
                        } else if let Some(mut worst) = heap.peek_mut() {
                            if cand < *worst {
                                *worst = cand;
                            }
                        }
                    }
                }
            }
            heap.into_vec()
        })
        .collect();

    merged.par_sort_unstable();
    merged.truncate(k);
    Ok(merged
        .into_iter()
        .map(|c| FrameMatch {
            query: queries[query_order[c.query_rank as usize]].video().clone(),
            query_frame_idx: c.query_frame as usize,
            reference: references[ref_order[c.ref_rank as usize]].video().clone(),
            ref_frame_idx: c.ref_frame as usize,
            similarity: c.similarity,
        })
        .collect())
}

/// Video-level scores: the best frame similarity of each matched pair.
pub fn detection_scores(matches: &[FrameMatch]) -> Vec<DetectionPrediction> {
    let mut best: BTreeMap<VideoPair, f32> = BTreeMap::new();
    for m in matches {
        best.entry((m.query.clone(), m.reference.clone()))
            .and_modify(|s| *s = s.max(m.similarity))
            .or_insert(m.similarity);
    }
    let mut preds: Vec<DetectionPrediction> = best
        .into_iter()
        .map(|((query, reference), s)| DetectionPrediction {
            query,
            reference,
            score: f64::from(s),
        })
        .collect();
    preds.sort_by(DetectionPrediction::rank_cmp);
    preds
}
