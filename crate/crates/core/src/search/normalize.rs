use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{inner, DescriptorSet, VideoKind};

use super::topk::check_dims;

/// Descriptor post-processing applied before search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    None,
    L2,
}

/// Scales every row to unit L2 norm.
///
/// All-zero rows stay zero; the second value counts them.
pub fn l2_normalize(sets: &[DescriptorSet]) -> (Vec<DescriptorSet>, usize) {
    let mut zero_rows = 0;
    let out = sets
        .iter()
        .map(|set| {
            let mut vectors = set.vectors().to_vec();
            for row in vectors.chunks_exact_mut(set.dim()) {
                let norm = row.iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt();
                if norm == 0.0 {
                    zero_rows += 1;
                    continue;
                }
                for v in row.iter_mut() {
                    *v = (f64::from(*v) / norm) as f32;
                }
            }
            set.with_vectors(set.dim(), vectors)
                .expect("scaling preserves descriptor invariants")
        })
        .collect();
    (out, zero_rows)
}

pub fn apply_normalization(sets: &[DescriptorSet], mode: Normalization) -> (Vec<DescriptorSet>, usize) {
    match mode {
        Normalization::None => (sets.to_vec(), 0),
        Normalization::L2 => l2_normalize(sets),
    }
}

/// Folds query-side score normalization into the descriptors.
///
/// A query frame's similarities are corrected by `-beta * s_k(q)`, where
/// `s_k(q)` is its similarity to the k-th most similar training frame. The
/// correction is written into one descriptor dimension of the query and the
/// matching reference dimension is set to 1, so a plain inner product
/// applies it.
#[derive(Debug, Clone)]
pub struct ScoreNormalizer {
    /// Flattened training rows with `embed_dim_index` zeroed.
    training: Vec<f32>,
    dim: usize,
    k: usize,
    beta: f64,
    embed_dim_index: usize,
}

impl ScoreNormalizer {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The descriptor dimension replaced by the correction term.
    pub fn embed_dim_index(&self) -> usize {
        self.embed_dim_index
    }

    pub fn training_count(&self) -> usize {
        self.training.len() / self.dim
    }

    /// Similarity of `row` (with the embedding dimension zeroed) to its k-th
    /// most similar training vector.
    pub fn kth_similarity(&self, row: &[f32]) -> f32 {
        let mut zeroed = row.to_vec();
        zeroed[self.embed_dim_index] = 0.0;
        let mut sims: Vec<f32> = self
            .training
            .chunks_exact(self.dim)
            .map(|t| inner(&zeroed, t))
            .collect();
        let (_, kth, _) = sims.select_nth_unstable_by(self.k - 1, |a, b| b.total_cmp(a));
        *kth
    }

    /// Returns the transformed (queries, references).
    pub fn apply(
        &self,
        queries: &[DescriptorSet],
        references: &[DescriptorSet],
    ) -> Result<(Vec<DescriptorSet>, Vec<DescriptorSet>)> {
        if let Some(s) = queries.iter().chain(references).find(|s| s.dim() != self.dim) {
            return Err(Error::Dim {
                expected: self.dim,
                found: s.dim(),
            });
        }
        let e = self.embed_dim_index;
        let q_out = queries
            .iter()
            .map(|set| {
                let mut vectors = set.vectors().to_vec();
                vectors.par_chunks_exact_mut(self.dim).for_each(|row| {
                    let s_k = self.kth_similarity(row);
                    row[e] = (-self.beta * f64::from(s_k)) as f32;
                });
                set.with_vectors(self.dim, vectors)
            })
            .collect::<Result<Vec<_>>>()?;
        let r_out = references
            .iter()
            .map(|set| {
                let mut vectors = set.vectors().to_vec();
                for row in vectors.chunks_exact_mut(self.dim) {
                    row[e] = 1.0;
                }
                set.with_vectors(self.dim, vectors)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((q_out, r_out))
    }
}

/// Per-dimension population variance, accumulated in f64.
pub fn dimension_variances(sets: &[DescriptorSet]) -> Result<Vec<f64>> {
    let dim = check_dims(sets)?.ok_or_else(|| Error::validation("no descriptors for statistics"))?;
    let mut mean = vec![0.0f64; dim];
    let mut m2 = vec![0.0f64; dim];
    let mut n = 0.0f64;
    for row in sets.iter().flat_map(DescriptorSet::rows) {
        n += 1.0;
        for (d, v) in row.iter().enumerate() {
            let x = f64::from(*v);
            let delta = x - mean[d];
            mean[d] += delta / n;
            m2[d] += delta * (x - mean[d]);
        }
    }
    if n == 0.0 {
        return Err(Error::validation("no descriptors for statistics"));
    }
    Ok(m2.into_iter().map(|s| s / n).collect())
}

/// Builds a [`ScoreNormalizer`] from training videos.
///
/// The embedding dimension is the lowest-variance dimension of
/// `dim_stats_source` (first one on ties).
pub fn fit_normalizer(
    training: &[DescriptorSet],
    k: usize,
    beta: f64,
    dim_stats_source: &[DescriptorSet],
) -> Result<ScoreNormalizer> {
    if let Some(s) = training.iter().find(|s| s.video().kind() != VideoKind::Training) {
        return Err(Error::validation(format!(
            "{} is not a training video; only training data may fit the normalizer",
            s.video()
        )));
    }
    let dim = check_dims(training.iter().chain(dim_stats_source))?
        .ok_or_else(|| Error::validation("empty training set"))?;
    let training_rows: usize = training.iter().map(DescriptorSet::len).sum();
    if training_rows == 0 {
        return Err(Error::validation("empty training set"));
    }
    if k == 0 || k > training_rows {
        return Err(Error::validation(format!(
            "k={k} must be in 1..={training_rows} (training vectors)"
        )));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::validation(format!("beta must be a non-negative number, got {beta}")));
    }

    let variances = dimension_variances(dim_stats_source)?;
    let embed_dim_index = variances
        .iter()
        .enumerate()
        .fold(0, |best, (d, v)| if *v < variances[best] { d } else { best });

    let mut flat = Vec::with_capacity(training_rows * dim);
    for set in training {
        flat.extend_from_slice(set.vectors());
    }
    for row in flat.chunks_exact_mut(dim) {
        row[embed_dim_index] = 0.0;
    }
    Ok(ScoreNormalizer {
        training: flat,
        dim,
        k,
        beta,
        embed_dim_index,
    })
}
