//! Descriptor budget checks for detection-track submissions.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{DescriptorSet, VideoId};

/// Largest descriptor dimensionality accepted.
pub const MAX_DESCRIPTOR_DIM: usize = 512;
/// Allowed average number of descriptors per second of video.
pub const MAX_DESCRIPTORS_PER_SECOND: f64 = 1.0;

/// A video that individually exceeds the per-second rate. Informational only:
/// the limit applies to the average over all videos.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAdvisory {
    pub video: VideoId,
    pub descriptors: usize,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub max_dim_found: usize,
    pub total_descriptors: usize,
    pub total_seconds: f64,
    pub violations: Vec<String>,
    pub advisories: Vec<RateAdvisory>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max dim: {} (limit {MAX_DESCRIPTOR_DIM})", self.max_dim_found)?;
        writeln!(
            f,
            "descriptors: {} over {} s (limit {} per second on average)",
            self.total_descriptors, self.total_seconds, MAX_DESCRIPTORS_PER_SECOND
        )?;
        for v in &self.violations {
            writeln!(f, "VIOLATION: {v}")?;
        }
        for a in &self.advisories {
            writeln!(
                f,
                "advisory: {} has {} descriptors for {} s",
                a.video, a.descriptors, a.duration
            )?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Checks dimensionality and the aggregate descriptor rate.
pub fn validate_descriptor_budget(
    sets: &[DescriptorSet],
    durations: &BTreeMap<VideoId, f64>,
) -> Result<ValidationReport> {
    let mut violations = Vec::new();
    let mut advisories = Vec::new();
    let mut total_descriptors = 0usize;
    let mut total_seconds = 0.0f64;
    let mut max_dim_found = 0usize;

    for set in sets {
        let duration = *durations
            .get(set.video())
            .ok_or_else(|| Error::validation(format!("no duration for {}", set.video())))?;
        max_dim_found = max_dim_found.max(set.dim());
        total_descriptors += set.len();
        total_seconds += duration;
        if set.len() as f64 > duration * MAX_DESCRIPTORS_PER_SECOND {
            advisories.push(RateAdvisory {
                video: set.video().clone(),
                descriptors: set.len(),
                duration,
            });
        }
    }

    if max_dim_found > MAX_DESCRIPTOR_DIM {
        violations.push(format!(
            "descriptor dim {max_dim_found} exceeds {MAX_DESCRIPTOR_DIM}"
        ));
    }
    if total_descriptors as f64 > total_seconds * MAX_DESCRIPTORS_PER_SECOND {
        violations.push(format!(
            "{total_descriptors} descriptors exceed the budget of {total_seconds} s of video"
        ));
    }
    Ok(ValidationReport {
        max_dim_found,
        total_descriptors,
        total_seconds,
        violations,
        advisories,
    })
}
