//! Penalized model selection over a countable hierarchy of bit-prefix
//! hypothesis classes.
//!
//! `H_n` is the class of binary classifiers that depend only on the first
//! `n` bits of an instance. The crate provides the class algebra and its
//! exact dyadic premeasure ([`hypothesis`], [`measure`]), closed-form
//! generalization bounds ([`bounds`]), ERM and penalized selection over a
//! range of `n` ([`learner`]), synthetic distributions with exact true
//! risk ([`synth`]), and a seeded Monte Carlo harness that checks the
//! bounds and the consistency of the selection rule ([`experiment`]).

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod hypothesis;
pub mod learner;
pub mod measure;
pub mod synth;

pub use error::{Error, Result};
pub use hypothesis::{BitString, DepthCap, Hypothesis, LabeledExample, LabeledSample, SetOp};
pub use measure::DyadicRational;

/// Version written to, and required of, every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn schema_version() -> u32 {
    SCHEMA_VERSION
}

pub(crate) fn check_schema(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema version {found} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}
