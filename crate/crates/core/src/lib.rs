//! Composition of balanced, multi-set recording scripts from a pool of
//! annotated candidate sentences.
//!
//! The pipeline has three file-based phases: [`filters`] narrows the
//! candidate pool, [`ga`] composes a script whose unit distribution tracks a
//! reference corpus, and [`postprocess`] swaps out sentences a reviewer
//! flagged. [`report`] summarizes any script.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod filters;
pub mod fitness;
pub mod ga;
pub mod ingest;
pub mod postprocess;
pub mod report;
pub mod synth;

pub use corpus::{
    DistributionVector, FitnessWeights, Script, Sentence, SentenceId, SentencePool, UnitInventory,
};
pub use error::{Error, ErrorKind, Result};
pub use fitness::{Evaluator, FitnessBreakdown};
pub use ga::{evolve, GaConfig, GaOutcome};
