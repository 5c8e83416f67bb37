//! Independent reference implementations and random instance builders shared
//! by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use vidcopy::{
    DescriptorSet, DetectionPrediction, GroundTruth, GtBox, LocalizationPrediction, SegmentBox,
    VideoId,
};

pub fn qid(i: usize) -> VideoId {
    VideoId::query(&format!("Q{i}")).unwrap()
}

pub fn rid(i: usize) -> VideoId {
    VideoId::reference(&format!("R{i}")).unwrap()
}

pub fn tid(i: usize) -> VideoId {
    VideoId::training(&format!("T{i}")).unwrap()
}

/// Descriptor set with small integer components, so every inner product is
/// exact in f32 whatever the summation order.
pub fn integer_set(rng: &mut impl Rng, id: VideoId, frames: usize, dim: usize) -> DescriptorSet {
    let vectors = (0..frames * dim)
        .map(|_| rng.random_range(-3i32..=3) as f32)
        .collect();
    DescriptorSet::new(id, dim, (0..frames).map(|t| t as f64).collect(), vectors).unwrap()
}

pub fn gaussian_set(rng: &mut impl Rng, id: VideoId, frames: usize, dim: usize) -> DescriptorSet {
    let vectors = (0..frames * dim)
        .map(|_| rng.sample::<f32, _>(rand_distr::StandardNormal))
        .collect();
    DescriptorSet::new(id, dim, (0..frames).map(|t| t as f64).collect(), vectors).unwrap()
}

/// Length of the union of half-open intervals, by sort and sweep.
pub fn union_length(intervals: &[(f64, f64)]) -> f64 {
    let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (a, b) in v {
        current = match current {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((s, e)) = current {
        total += e - s;
    }
    total
}

/// Detection curve recomputed from scratch at every rank: (precision, recall)
/// per rank and the rectangle-rule area.
pub fn naive_detection(preds: &[DetectionPrediction], gt: &GroundTruth) -> (Vec<(f64, f64)>, f64) {
    let mut best: Vec<(String, String, f64)> = Vec::new();
    for p in preds {
        let (q, r) = (p.query.as_str().to_string(), p.reference.as_str().to_string());
        match best.iter_mut().find(|(bq, br, _)| *bq == q && *br == r) {
            Some(entry) => entry.2 = entry.2.max(p.score),
            None => best.push((q, r, p.score)),
        }
    }
    best.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    let positives: BTreeSet<(String, String)> = gt
        .boxes()
        .iter()
        .map(|b| (b.query.as_str().to_string(), b.reference.as_str().to_string()))
        .collect();
    let mut points = Vec::new();
    for i in 1..=best.len() {
        let tp = best[..i]
            .iter()
            .filter(|(q, r, _)| positives.contains(&(q.clone(), r.clone())))
            .count();
        points.push((tp as f64 / i as f64, tp as f64 / positives.len() as f64));
    }
    let mut area = 0.0;
    let mut prev = 0.0;
    for (p, r) in &points {
        area += p * (r - prev);
        prev = *r;
    }
    (points, area)
}

/// Localization precision and recall recomputed from scratch at every rank.
/// Rank order: score descending, then query id, reference id, box coordinates.
pub fn naive_localization(preds: &[LocalizationPrediction], gt: &GroundTruth) -> Vec<(f64, f64)> {
    let mut ranked: Vec<&LocalizationPrediction> = preds.iter().collect();
    let key = |p: &LocalizationPrediction| {
        let b = p.bbox;
        (
            p.query.as_str().to_string(),
            p.reference.as_str().to_string(),
            [b.query_start(), b.query_end(), b.ref_start(), b.ref_end()],
        )
    };
    ranked.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| ka.0.cmp(&kb.0))
            .then_with(|| ka.1.cmp(&kb.1))
            .then_with(|| ka.2.partial_cmp(&kb.2).unwrap())
    });

    let mut gt_by_pair: BTreeMap<(String, String), Vec<SegmentBox>> = BTreeMap::new();
    for b in gt.boxes() {
        gt_by_pair
            .entry((b.query.as_str().to_string(), b.reference.as_str().to_string()))
            .or_default()
            .push(b.bbox);
    }
    let (mut gx, mut gy) = (0.0, 0.0);
    for boxes in gt_by_pair.values() {
        gx += union_length(&boxes.iter().map(|b| b.ref_interval()).collect::<Vec<_>>());
        gy += union_length(&boxes.iter().map(|b| b.query_interval()).collect::<Vec<_>>());
    }

    let mut out = Vec::new();
    for i in 1..=ranked.len() {
        let mut by_pair: BTreeMap<(String, String), Vec<SegmentBox>> = BTreeMap::new();
        for p in &ranked[..i] {
            by_pair
                .entry((p.query.as_str().to_string(), p.reference.as_str().to_string()))
                .or_default()
                .push(p.bbox);
        }
        let (mut px, mut py, mut ox, mut oy) = (0.0, 0.0, 0.0, 0.0);
        for (pair, boxes) in &by_pair {
            px += union_length(&boxes.iter().map(|b| b.ref_interval()).collect::<Vec<_>>());
            py += union_length(&boxes.iter().map(|b| b.query_interval()).collect::<Vec<_>>());
            let mut ix = Vec::new();
            let mut iy = Vec::new();
            for p in boxes {
                for g in gt_by_pair.get(pair).map(Vec::as_slice).unwrap_or(&[]) {
                    let qs = p.query_start().max(g.query_start());
                    let qe = p.query_end().min(g.query_end());
                    let rs = p.ref_start().max(g.ref_start());
                    let re = p.ref_end().min(g.ref_end());
                    if qs < qe && rs < re {
                        ix.push((rs, re));
                        iy.push((qs, qe));
                    }
                }
            }
            ox += union_length(&ix);
            oy += union_length(&iy);
        }
        let precision = if px * py > 0.0 { (ox * oy / (px * py)).sqrt() } else { 0.0 };
        let recall = (ox * oy / (gx * gy)).sqrt();
        out.push((precision, recall));
    }
    out
}

/// Full-sort top-k over every frame pair. Entries are
/// (query id, query frame, reference id, reference frame, similarity).
pub fn brute_topk(
    queries: &[DescriptorSet],
    references: &[DescriptorSet],
    k: usize,
) -> Vec<(String, usize, String, usize, f32)> {
    let mut all = Vec::new();
    for q in queries {
        for (qf, qrow) in q.rows().enumerate() {
            for r in references {
                for (rf, rrow) in r.rows().enumerate() {
                    let s: f32 = qrow.iter().zip(rrow).map(|(a, b)| a * b).sum();
                    all.push((q.video().as_str().to_string(), qf, r.video().as_str().to_string(), rf, s));
                }
            }
        }
    }
    all.sort_by(|a, b| {
        b.4.partial_cmp(&a.4)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
            .then_with(|| a.3.cmp(&b.3))
    });
    all.truncate(k);
    all
}

/// Box on a half-second grid inside [0, 20).
pub fn grid_box(rng: &mut impl Rng) -> SegmentBox {
    let mut axis = || {
        let a = rng.random_range(0..38u32);
        let len = rng.random_range(1..=(40 - a).min(12));
        (f64::from(a) * 0.5, f64::from(a + len) * 0.5)
    };
    let (qs, qe) = axis();
    let (rs, re) = axis();
    SegmentBox::new(qs, qe, rs, re).unwrap()
}

/// Random localization instance: up to 5 ground-truth pairs with up to 6
/// boxes each, predictions on those pairs and on unrelated pairs, and
/// scores drawn from a small set so ties are common.
pub fn random_localization_instance(
    rng: &mut impl Rng,
) -> (Vec<LocalizationPrediction>, GroundTruth) {
    let n_pairs = rng.random_range(1..=5);
    let mut boxes = Vec::new();
    for p in 0..n_pairs {
        for _ in 0..rng.random_range(1..=6) {
            boxes.push(GtBox {
                query: qid(p),
                reference: rid(p % 3),
                bbox: grid_box(rng),
            });
        }
    }
    let gt = GroundTruth::new(boxes).unwrap();
    let mut preds = Vec::new();
    for _ in 0..rng.random_range(0..=15) {
        let (q, r) = if rng.random_bool(0.8) {
            let p = rng.random_range(0..n_pairs);
            (qid(p), rid(p % 3))
        } else {
            (qid(rng.random_range(0..8)), rid(rng.random_range(3..6)))
        };
        let score = f64::from(rng.random_range(0..6u32)) / 5.0;
        preds.push(LocalizationPrediction::new(q, r, grid_box(rng), score).unwrap());
    }
    (preds, gt)
}

/// Random detection instance with duplicate pairs, distractor queries and
/// tied scores.
pub fn random_detection_instance(rng: &mut impl Rng) -> (Vec<DetectionPrediction>, GroundTruth) {
    let unit = SegmentBox::new(0.0, 1.0, 0.0, 1.0).unwrap();
    let n_gt = rng.random_range(1..=8);
    let boxes = (0..n_gt)
        .map(|_| GtBox {
            query: qid(rng.random_range(0..6)),
            reference: rid(rng.random_range(0..6)),
            bbox: unit,
        })
        .collect();
    let gt = GroundTruth::new(boxes).unwrap();
    let preds = (0..rng.random_range(0..=30))
        .map(|_| {
            DetectionPrediction::new(
                qid(rng.random_range(0..10)),
                rid(rng.random_range(0..6)),
                f64::from(rng.random_range(0..8u32)) / 7.0 - 0.3,
            )
            .unwrap()
        })
        .collect();
    (preds, gt)
}
