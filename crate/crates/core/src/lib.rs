//! Online continual learning with unbiased experience replay.
//!
//! The crate learns a sequence of disjoint class groups from a single-pass
//! stream. The classifier is a small ReLU feature extractor followed by a
//! linear predictor whose scores can be read two ways:
//!
//! * **dot-product** logits `w·h + b`, which carry both the norm factor
//!   (`‖w‖‖h‖ + b`) and the angle factor (`cos(w, h)`), and
//! * **cosine** logits `γ·cos(w, h)`, which carry only the angle factor.
//!
//! Current samples are learned with cosine logits, samples replayed from a
//! reservoir buffer are learned with an `α`-weighted mix of dot-product and
//! cosine cross-entropy, and test samples are classified with dot-product
//! logits. The same engine, parameterised by a [`trainer::LogitTriple`],
//! also realises plain experience replay, a LUCIR-style cosine learner,
//! fine-tuning, and every other learn/replay/test combination.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, configuration
//! and the command line live in the `uer` companion crate.
#![cfg_attr(not(test), no_std)]
#![deny(missing_docs)]

extern crate alloc;

mod error;

pub mod eval;
pub mod logits;
pub mod memory;
pub mod net;
pub mod numeric;
pub mod stream;
pub mod trainer;

pub use error::{Error, Result, Shape};
pub use eval::{BiasDiagnostics, GroupStats, StageMetrics};
pub use logits::{ClassProbabilities, CosineScale, LogitMode, PredictorParams, ReplayMode};
pub use memory::{MemoryBuffer, StoredSample};
pub use net::{FeatureExtractor, GradientTape, LayerParams, ParamGrad};
pub use numeric::{DenseMatrix, DenseVector, Rng};
pub use stream::{gen_synthetic, Dataset, Sample, Stage, StreamConfig, SyntheticSpec};
pub use trainer::{
    backprop, run_experiment, LogitTriple, MethodConfig, Preset, RunResult, StepRecord, TrainState,
};
