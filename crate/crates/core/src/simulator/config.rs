use serde::Deserialize;

use crate::error::{Error, Result};

/// Parameters of a simulated benchmark instance.
///
/// Only `seed` is required when parsing; every other key has a default.
/// Durations and segment lengths are whole seconds at one frame per second.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default = "defaults::dim")]
    pub dim: usize,
    #[serde(default = "defaults::n_references")]
    pub n_references: usize,
    #[serde(default = "defaults::n_distractor_queries")]
    pub n_distractor_queries: usize,
    #[serde(default = "defaults::n_copied_queries")]
    pub n_copied_queries: usize,
    #[serde(default = "defaults::n_training")]
    pub n_training: usize,
    #[serde(default = "defaults::min_duration")]
    pub min_duration: u32,
    #[serde(default = "defaults::max_duration")]
    pub max_duration: u32,
    /// Reference-side length range of a copied segment.
    #[serde(default = "defaults::min_segment")]
    pub min_segment: u32,
    #[serde(default = "defaults::max_segment")]
    pub max_segment: u32,
    /// Per-component standard deviation of the noise added to copied frames.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "defaults::p_multi_segment")]
    pub p_multi_segment: f64,
    #[serde(default = "defaults::p_multi_reference")]
    pub p_multi_reference: f64,
    /// Probability of a 0.5x or 2x speed change (equally likely).
    #[serde(default = "defaults::p_speed_change")]
    pub p_speed_change: f64,
    #[serde(default = "defaults::p_time_decimate")]
    pub p_time_decimate: f64,
    #[serde(default = "defaults::n_hard_negative_pairs")]
    pub n_hard_negative_pairs: usize,
    #[serde(default = "defaults::hard_negative_correlation")]
    pub hard_negative_correlation: f64,
    /// Fraction of low-information frames: short vectors close to one shared
    /// direction, the descriptor-level analogue of empty or solid frames.
    #[serde(default)]
    pub blank_frame_fraction: f64,
}

mod defaults {
    pub fn dim() -> usize {
        64
    }
    pub fn n_references() -> usize {
        100
    }
    pub fn n_distractor_queries() -> usize {
        100
    }
    pub fn n_copied_queries() -> usize {
        30
    }
    pub fn n_training() -> usize {
        50
    }
    pub fn min_duration() -> u32 {
        5
    }
    pub fn max_duration() -> u32 {
        60
    }
    pub fn min_segment() -> u32 {
        6
    }
    pub fn max_segment() -> u32 {
        20
    }
    pub fn p_multi_segment() -> f64 {
        0.2
    }
    pub fn p_multi_reference() -> f64 {
        0.1
    }
    pub fn p_speed_change() -> f64 {
        0.2
    }
    pub fn p_time_decimate() -> f64 {
        0.1
    }
    pub fn n_hard_negative_pairs() -> usize {
        5
    }
    pub fn hard_negative_correlation() -> f64 {
        0.5
    }
}

impl SimConfig {
    /// Defaults with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        SimConfig {
            seed,
            dim: defaults::dim(),
            n_references: defaults::n_references(),
            n_distractor_queries: defaults::n_distractor_queries(),
            n_copied_queries: defaults::n_copied_queries(),
            n_training: defaults::n_training(),
            min_duration: defaults::min_duration(),
            max_duration: defaults::max_duration(),
            min_segment: defaults::min_segment(),
            max_segment: defaults::max_segment(),
            noise_sigma: 0.0,
            p_multi_segment: defaults::p_multi_segment(),
            p_multi_reference: defaults::p_multi_reference(),
            p_speed_change: defaults::p_speed_change(),
            p_time_decimate: defaults::p_time_decimate(),
            n_hard_negative_pairs: defaults::n_hard_negative_pairs(),
            hard_negative_correlation: defaults::hard_negative_correlation(),
            blank_frame_fraction: 0.0,
        }
    }

    /// Parses `key = value` text (TOML).
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::validation(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let probabilities = [
            ("p_multi_segment", self.p_multi_segment),
            ("p_multi_reference", self.p_multi_reference),
            ("p_speed_change", self.p_speed_change),
            ("p_time_decimate", self.p_time_decimate),
            ("blank_frame_fraction", self.blank_frame_fraction),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.dim < 2 {
            return Err(Error::validation("dim must be at least 2"));
        }
        if self.min_duration == 0 || self.min_duration > self.max_duration {
            return Err(Error::validation("need 0 < min_duration <= max_duration"));
        }
        if self.min_segment < 2 || self.min_segment > self.max_segment {
            return Err(Error::validation("need 2 <= min_segment <= max_segment"));
        }
        if self.n_copied_queries > 0 && self.max_duration < self.min_segment {
            return Err(Error::validation(format!(
                "videos of at most {} s cannot host a {} s segment",
                self.max_duration, self.min_segment
            )));
        }
        if self.n_copied_queries > 0 && self.n_references == 0 {
            return Err(Error::validation("copied queries need at least one reference"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::validation("noise_sigma must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.hard_negative_correlation) {
            return Err(Error::validation("hard_negative_correlation must be in [0, 1)"));
        }
        if self.n_hard_negative_pairs > self.n_distractor_queries
            || self.n_hard_negative_pairs > self.n_references
        {
            return Err(Error::validation(
                "each hard negative pair needs its own distractor query and reference",
            ));
        }
        Ok(())
    }
}
