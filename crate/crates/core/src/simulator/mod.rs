//! Seeded descriptor-level benchmark generator and the baseline pipeline.

mod baseline;
mod config;
mod generate;

use std::path::Path;

pub use baseline::{prepare_descriptors, run_baseline, BaselineOutput, ScoreNormParams, SearchConfig};
pub use config::SimConfig;
pub use generate::{
    generate, BenchmarkInstance, InstanceSummary, TAG_DECIMATE, TAG_MULTI_REFERENCE,
    TAG_MULTI_SEGMENT, TAG_SPEED, VISUAL_TRANSFORMS,
};

use crate::error::Result;
use crate::storage;

pub const QUERIES_FILE: &str = "queries.vcbd";
pub const REFERENCES_FILE: &str = "references.vcbd";
pub const TRAINING_FILE: &str = "training.vcbd";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const TAGS_FILE: &str = "tags.csv";
pub const HARD_NEGATIVES_FILE: &str = "hard_negatives.csv";
pub const DURATIONS_FILE: &str = "durations.csv";

/// Writes every part of an instance into `dir`, creating it if needed.
pub fn write_instance(dir: impl AsRef<Path>, instance: &BenchmarkInstance) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    storage::write_descriptors(dir.join(QUERIES_FILE), &instance.queries)?;
    storage::write_descriptors(dir.join(REFERENCES_FILE), &instance.references)?;
    storage::write_descriptors(dir.join(TRAINING_FILE), &instance.training)?;
    storage::write_ground_truth(dir.join(GROUND_TRUTH_FILE), &instance.gt)?;
    storage::write_tags(dir.join(TAGS_FILE), &instance.tags)?;
    storage::write_pairs(dir.join(HARD_NEGATIVES_FILE), &instance.hard_negative_pairs)?;
    storage::write_durations(dir.join(DURATIONS_FILE), &instance.durations())?;
    Ok(())
}

/// Reads an instance written by [`write_instance`].
pub fn read_instance(dir: impl AsRef<Path>) -> Result<BenchmarkInstance> {
    let dir = dir.as_ref();
    Ok(BenchmarkInstance {
        queries: storage::read_descriptors(dir.join(QUERIES_FILE))?,
        references: storage::read_descriptors(dir.join(REFERENCES_FILE))?,
        training: storage::read_descriptors(dir.join(TRAINING_FILE))?,
        gt: storage::read_ground_truth(dir.join(GROUND_TRUTH_FILE))?,
        tags: storage::read_tags(dir.join(TAGS_FILE))?,
        hard_negative_pairs: storage::read_pairs(dir.join(HARD_NEGATIVES_FILE))?,
    })
}
