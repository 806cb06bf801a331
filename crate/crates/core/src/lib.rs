//! Semi-supervised iterated learning of binary languages, with language contact.
//!
//! A language maps every `n1`-bit meaning to an `n3`-bit signal. Each
//! generation a pupil agent (neural encoder + decoder) learns from a
//! bottlenecked sample of its tutor's language plus autoencoder practice on
//! imagined meanings, then becomes the next tutor. Generation 0 is a
//! per-meaning mixture of two parent languages.

pub mod bitlang;
pub mod error;
pub mod ilm;
pub mod metrics;
pub mod neuralnet;

pub use bitlang::{
    identity_language, mix_languages, random_compositional_language, table_similarity_raw,
    CompositionalLanguage, LanguageTable, Meaning, Signal,
};
pub use error::{IlmError, Result};
pub use ilm::{
    extract_language, run_batch, run_simulation, sample_bottleneck, train_pupil, AutoPer,
    BatchResult, GenerationRecord, Parents, SimConfig, Trajectory,
};
pub use metrics::{Baselines, MetricReport};
pub use neuralnet::{Agent, Loss, Mlp, TrainHyper};
