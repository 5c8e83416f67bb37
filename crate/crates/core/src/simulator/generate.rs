use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{DescriptorSet, GroundTruth, GtBox, SegmentBox, TransformTag, VideoId, VideoPair};

use super::SimConfig;

/// Visual edits recorded as tags on copied queries. They are labels only:
/// the descriptor-level effect of every visual edit is the additive noise.
pub const VISUAL_TRANSFORMS: &[&str] = &[
    "brightness",
    "color_jitter",
    "grayscale",
    "overlay_emoji",
    "overlay_text",
    "frame_effect",
    "hstack",
    "vstack",
    "blur",
    "noise",
    "pixelize",
    "encoding_quality",
    "blend_videos",
    "crop",
    "pad",
    "rotate",
    "flip",
    "aspect_ratio",
    "rescale",
];

pub const TAG_SPEED: &str = "change_video_speed";
pub const TAG_DECIMATE: &str = "time_decimate";
pub const TAG_MULTI_SEGMENT: &str = "multi_segment";
pub const TAG_MULTI_REFERENCE: &str = "multi_reference";

/// Base-content padding before the first copied segment, in seconds.
const LEAD_RANGE: (u32, u32) = (0, 5);
/// Base content between two copied segments.
const SEPARATOR_RANGE: (u32, u32) = (5, 10);
const TAIL_RANGE: (u32, u32) = (0, 5);
/// Kept/dropped piece length for time decimation.
const DECIMATE_PIECE_RANGE: (u32, u32) = (2, 4);
const BLANK_NORM: f64 = 0.1;
const BLANK_JITTER: f64 = 0.3;

const QUERY_ID_BASE: usize = 100_000;
const REFERENCE_ID_BASE: usize = 100_000;
const TRAINING_ID_BASE: usize = 100_000;

/// A simulated benchmark with exact ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkInstance {
    pub queries: Vec<DescriptorSet>,
    pub references: Vec<DescriptorSet>,
    pub training: Vec<DescriptorSet>,
    pub gt: GroundTruth,
    /// One entry per query; empty for distractors.
    pub tags: Vec<TransformTag>,
    pub hard_negative_pairs: Vec<VideoPair>,
}

/// Split composition in the usual table layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSummary {
    pub queries: usize,
    pub references: usize,
    pub training: usize,
    pub copied_segments: usize,
    pub queries_with_copies: usize,
    pub distractor_queries: usize,
    pub hard_negative_pairs: usize,
}

impl fmt::Display for InstanceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "queries references training copied_segments queries_with_copies distractor_queries hard_negative_pairs"
        )?;
        write!(
            f,
            "{} {} {} {} {} {} {}",
            self.queries,
            self.references,
            self.training,
            self.copied_segments,
            self.queries_with_copies,
            self.distractor_queries,
            self.hard_negative_pairs
        )
    }
}

impl BenchmarkInstance {
    pub fn summary(&self) -> InstanceSummary {
        let with_copies = self.gt.matched_queries().len();
        InstanceSummary {
            queries: self.queries.len(),
            references: self.references.len(),
            training: self.training.len(),
            copied_segments: self.gt.boxes().len(),
            queries_with_copies: with_copies,
            distractor_queries: self.queries.len() - with_copies,
            hard_negative_pairs: self.hard_negative_pairs.len(),
        }
    }

    pub fn durations(&self) -> BTreeMap<VideoId, f64> {
        self.queries
            .iter()
            .chain(&self.references)
            .chain(&self.training)
            .map(|s| (s.video().clone(), s.duration()))
            .collect()
    }
}

struct Generator {
    rng: ChaCha8Rng,
    dim: usize,
    blank_direction: Vec<f64>,
    blank_fraction: f64,
}

impl Generator {
    fn gaussian(&mut self) -> Vec<f64> {
        (0..self.dim).map(|_| self.rng.sample(StandardNormal)).collect()
    }

    fn unit(&mut self) -> Vec<f64> {
        loop {
            let v = self.gaussian();
            let n = norm(&v);
            if n > 0.0 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    fn blank(&mut self) -> Vec<f64> {
        let jitter = self.unit();
        let v: Vec<f64> = self
            .blank_direction
            .iter()
            .zip(&jitter)
            .map(|(b, j)| b + BLANK_JITTER * j)
            .collect();
        let n = norm(&v);
        v.into_iter().map(|x| BLANK_NORM * x / n).collect()
    }

    /// An ordinary frame: a random unit vector, or a blank one.
    fn frame(&mut self) -> Vec<f64> {
        if self.blank_fraction > 0.0 && self.rng.random_bool(self.blank_fraction) {
            self.blank()
        } else {
            self.unit()
        }
    }

    /// A frame sharing `latent` with correlation `rho`.
    fn correlated(&mut self, latent: &[f64], rho: f64) -> Vec<f64> {
        let own = self.unit();
        let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
        let v: Vec<f64> = latent.iter().zip(&own).map(|(z, u)| a * z + b * u).collect();
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    fn duration(&mut self, cfg: &SimConfig) -> u32 {
        self.rng.random_range(cfg.min_duration..=cfg.max_duration)
    }

    fn video(&mut self, frames: u32, latent: Option<(&[f64], f64)>) -> Vec<Vec<f64>> {
        (0..frames)
            .map(|_| match latent {
                Some((z, rho)) => self.correlated(z, rho),
                None => self.frame(),
            })
            .collect()
    }

    fn noisy_copy(&mut self, src: &[f32], sigma: f64) -> Vec<f32> {
        if sigma == 0.0 {
            return src.to_vec();
        }
        let noise = self.gaussian();
        let v: Vec<f64> = src
            .iter()
            .zip(&noise)
            .map(|(s, e)| f64::from(*s) + sigma * e)
            .collect();
        let target = norm(&src.iter().map(|x| f64::from(*x)).collect::<Vec<_>>());
        let n = norm(&v);
        if n == 0.0 {
            return src.to_vec();
        }
        v.into_iter().map(|x| (x * target / n) as f32).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn build_set(id: VideoId, dim: usize, frames: Vec<Vec<f64>>) -> Result<DescriptorSet> {
    let timestamps = (0..frames.len()).map(|t| t as f64).collect();
    let vectors = frames.into_iter().flatten().map(|x| x as f32).collect();
    DescriptorSet::new(id, dim, timestamps, vectors)
}

/// One reference stretch inserted into a query.
struct Piece {
    reference: usize,
    ref_start: u32,
    ref_len: u32,
}

/// Generates a benchmark instance. The same config always yields the same
/// instance.
pub fn generate(cfg: &SimConfig) -> Result<BenchmarkInstance> {
    cfg.validate()?;
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        dim: cfg.dim,
        blank_direction: Vec::new(),
        blank_fraction: cfg.blank_frame_fraction,
    };
    g.blank_direction = g.unit();

    let n_hn = cfg.n_hard_negative_pairs;
    let hn_refs = index::sample(&mut g.rng, cfg.n_references, n_hn).into_vec();
    let latents: Vec<Vec<f64>> = (0..n_hn).map(|_| g.unit()).collect();
    let rho = cfg.hard_negative_correlation;

    let mut references = Vec::with_capacity(cfg.n_references);
    for i in 0..cfg.n_references {
        let frames = g.duration(cfg);
        let latent = hn_refs.iter().position(|r| *r == i).map(|k| (latents[k].as_slice(), rho));
        let id = VideoId::reference(&format!("R{}", REFERENCE_ID_BASE + i))?;
        references.push(build_set(id, cfg.dim, g.video(frames, latent))?);
    }

    let mut training = Vec::with_capacity(cfg.n_training);
    for i in 0..cfg.n_training {
        let frames = g.duration(cfg);
        let id = VideoId::training(&format!("T{}", TRAINING_ID_BASE + i))?;
        training.push(build_set(id, cfg.dim, g.video(frames, None))?);
    }

    let eligible: Vec<usize> = (0..references.len())
        .filter(|&i| references[i].len() as u32 >= cfg.min_segment && !hn_refs.contains(&i))
        .collect();
    if cfg.n_copied_queries > 0 && eligible.is_empty() {
        return Err(Error::validation(format!(
            "no reference outside the hard negatives is long enough to host a {} s segment",
            cfg.min_segment
        )));
    }

    let n_queries = cfg.n_copied_queries + cfg.n_distractor_queries;
    let mut is_copied: Vec<bool> = (0..n_queries).map(|i| i < cfg.n_copied_queries).collect();
    is_copied.shuffle(&mut g.rng);
    let distractor_slots: Vec<usize> = (0..n_queries).filter(|&i| !is_copied[i]).collect();
    let hn_queries: Vec<usize> = index::sample(&mut g.rng, distractor_slots.len(), n_hn)
        .into_iter()
        .map(|k| distractor_slots[k])
        .collect();

    let mut queries = Vec::with_capacity(n_queries);
    let mut tags = Vec::with_capacity(n_queries);
    let mut boxes = Vec::new();
    let mut hard_negative_pairs = Vec::with_capacity(n_hn);
    for (slot, copied) in is_copied.iter().enumerate() {
        let id = VideoId::query(&format!("Q{}", QUERY_ID_BASE + slot))?;
        if *copied {
            let (set, query_boxes, names) = copied_query(&mut g, cfg, &id, &references, &eligible)?;
            queries.push(set);
            boxes.extend(query_boxes);
            tags.push(TransformTag::new(id, names));
        } else {
            let frames = g.duration(cfg);
            let latent = hn_queries
                .iter()
                .position(|q| *q == slot)
                .map(|k| (latents[k].as_slice(), rho));
            if let Some(k) = hn_queries.iter().position(|q| *q == slot) {
                hard_negative_pairs.push((id.clone(), references[hn_refs[k]].video().clone()));
            }
            queries.push(build_set(id.clone(), cfg.dim, g.video(frames, latent))?);
            tags.push(TransformTag::new(id, Vec::<String>::new()));
        }
    }
    hard_negative_pairs.sort();

    Ok(BenchmarkInstance {
        queries,
        references,
        training,
        gt: GroundTruth::new(boxes)?,
        tags,
        hard_negative_pairs,
    })
}

fn copied_query(
    g: &mut Generator,
    cfg: &SimConfig,
    id: &VideoId,
    references: &[DescriptorSet],
    eligible: &[usize],
) -> Result<(DescriptorSet, Vec<GtBox>, Vec<String>)> {
    let mut names: Vec<String> = Vec::new();
    let primary = *eligible.choose(&mut g.rng).expect("checked non-empty");
    let mut sources = vec![primary];
    if g.rng.random_bool(cfg.p_multi_segment) {
        sources.push(primary);
        names.push(TAG_MULTI_SEGMENT.into());
    }
    if g.rng.random_bool(cfg.p_multi_reference) && eligible.len() > 1 {
        let others: Vec<usize> = eligible.iter().copied().filter(|r| *r != primary).collect();
        sources.push(*others.choose(&mut g.rng).unwrap());
        names.push(TAG_MULTI_REFERENCE.into());
    }
    let speed: f64 = if g.rng.random_bool(cfg.p_speed_change) {
        names.push(TAG_SPEED.into());
        *[0.5, 2.0].choose(&mut g.rng).unwrap()
    } else {
        1.0
    };
    let decimate = g.rng.random_bool(cfg.p_time_decimate);
    if decimate {
        names.push(TAG_DECIMATE.into());
    }
    let n_visual = g.rng.random_range(1..=3);
    names.extend(
        VISUAL_TRANSFORMS
            .choose_multiple(&mut g.rng, n_visual)
            .map(|s| s.to_string()),
    );
    sources.shuffle(&mut g.rng);

    // a segment is a list of pieces that end up contiguous in the query
    let mut segments: Vec<Vec<Piece>> = Vec::with_capacity(sources.len());
    for &r in &sources {
        let ref_frames = references[r].len() as u32;
        let hi = cfg.max_segment.min(ref_frames);
        let mut len = g.rng.random_range(cfg.min_segment..=hi);
        if speed == 2.0 && len % 2 == 1 {
            len = if len < hi { len + 1 } else { len - 1 };
        }
        let start = g.rng.random_range(0..=ref_frames - len);
        let pieces = if decimate {
            let mut piece = g.rng.random_range(DECIMATE_PIECE_RANGE.0..=DECIMATE_PIECE_RANGE.1);
            if speed == 2.0 && piece % 2 == 1 {
                piece += 1;
            }
            let piece = piece.min(len);
            (0..)
                .map(|k| 2 * k * piece)
                .take_while(|off| off + piece <= len)
                .map(|off| Piece {
                    reference: r,
                    ref_start: start + off,
                    ref_len: piece,
                })
                .collect()
        } else {
            vec![Piece {
                reference: r,
                ref_start: start,
                ref_len: len,
            }]
        };
        segments.push(pieces);
    }

    let mut frames: Vec<Vec<f32>> = Vec::new();
    let mut boxes = Vec::new();
    let push_base = |g: &mut Generator, frames: &mut Vec<Vec<f32>>, (lo, hi): (u32, u32)| {
        let n = g.rng.random_range(lo..=hi);
        for _ in 0..n {
            frames.push(g.frame().into_iter().map(|x| x as f32).collect());
        }
    };
    push_base(g, &mut frames, LEAD_RANGE);
    for (k, pieces) in segments.iter().enumerate() {
        if k > 0 {
            push_base(g, &mut frames, SEPARATOR_RANGE);
        }
        for piece in pieces {
            let src = &references[piece.reference];
            let q_start = frames.len() as u32;
            let q_len = (f64::from(piece.ref_len) / speed).round() as u32;
            for step in 0..q_len {
                let offset = (f64::from(step) * speed).floor() as u32;
                let row = src.row((piece.ref_start + offset) as usize);
                frames.push(g.noisy_copy(row, cfg.noise_sigma));
            }
            boxes.push(GtBox {
                query: id.clone(),
                reference: src.video().clone(),
                bbox: SegmentBox::new(
                    f64::from(q_start),
                    f64::from(q_start + q_len),
                    f64::from(piece.ref_start),
                    f64::from(piece.ref_start + piece.ref_len),
                )?,
            });
        }
    }
    push_base(g, &mut frames, TAIL_RANGE);
    while (frames.len() as u32) < cfg.min_duration {
        frames.push(g.frame().into_iter().map(|x| x as f32).collect());
    }

    let timestamps = (0..frames.len()).map(|t| t as f64).collect();
    let set = DescriptorSet::new(id.clone(), cfg.dim, timestamps, frames.concat())?;
    Ok((set, boxes, names))
}
