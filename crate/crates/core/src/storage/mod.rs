//! On-disk formats and submission checks.

mod budget;
mod descriptors;
mod tables;

pub use budget::{
    validate_descriptor_budget, RateAdvisory, ValidationReport, MAX_DESCRIPTORS_PER_SECOND,
    MAX_DESCRIPTOR_DIM,
};
pub use descriptors::{
    decode_descriptors, encode_descriptors, read_descriptors, write_descriptors, FORMAT_VERSION,
    MAGIC,
};
pub use tables::*;
