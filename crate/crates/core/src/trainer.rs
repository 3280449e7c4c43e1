//! The online training loop.
//!
//! Each step retrieves a replay batch from memory, scores the current batch
//! with the learning objective and the replay batch with the replay
//! objective, takes one SGD step on `L = L_c + L_p` over every parameter,
//! and only then offers the current batch to the reservoir. Which logits
//! each phase uses is fixed by a [`LogitTriple`].

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::eval::{self, StageMetrics};
use crate::logits::{weighted_loss, CosineScale, LogitMode, PredictorParams, ReplayMode};
use crate::memory::{MemoryBuffer, StoredSample};
use crate::net::{init_bound, sgd_step, FeatureExtractor, GradientTape};
use crate::numeric::{DenseVector, Rng};
use crate::stream::{build_stages, iterate_batches, Dataset, Sample, StreamConfig};

/// Fork ids of the per-run random streams.
mod streams {
    pub const CLASS_ORDER: u64 = 1;
    pub const EXTRACTOR_INIT: u64 = 2;
    pub const BATCH_ORDER: u64 = 3;
    pub const MEMORY: u64 = 4;
    pub const PREDICTOR_INIT: u64 = 5;
}

/// Scoring rule used when learning current samples, replaying memory, and
/// testing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitTriple {
    /// Objective on the current batch.
    pub learn: LogitMode,
    /// Objective on the replay batch.
    pub replay: ReplayMode,
    /// Scores used for prediction.
    pub test: LogitMode,
}

impl LogitTriple {
    /// Cosine learning, `α`-mixed replay, dot-product testing.
    pub const fn uer(alpha: f64) -> Self {
        Self {
            learn: LogitMode::Cosine,
            replay: ReplayMode::Mixed(alpha),
            test: LogitMode::Dot,
        }
    }

    /// Dot-product everywhere.
    pub const fn er() -> Self {
        Self {
            learn: LogitMode::Dot,
            replay: ReplayMode::Dot,
            test: LogitMode::Dot,
        }
    }

    /// Cosine everywhere.
    pub const fn lucir() -> Self {
        Self {
            learn: LogitMode::Cosine,
            replay: ReplayMode::Cosine,
            test: LogitMode::Cosine,
        }
    }

    /// The eight learn/replay/test combinations of dot-product and cosine,
    /// in the conventional order (1 = ER, 3 = LUCIR, 8 = cosine/dot/dot).
    pub const fn grid() -> [LogitTriple; 8] {
        use LogitMode::{Cosine as C, Dot as D};
        const fn t(learn: LogitMode, replay: ReplayMode, test: LogitMode) -> LogitTriple {
            LogitTriple {
                learn,
                replay,
                test,
            }
        }
        [
            t(D, ReplayMode::Dot, D),
            t(D, ReplayMode::Dot, C),
            t(C, ReplayMode::Cosine, C),
            t(C, ReplayMode::Cosine, D),
            t(D, ReplayMode::Cosine, D),
            t(D, ReplayMode::Cosine, C),
            t(C, ReplayMode::Dot, C),
            t(C, ReplayMode::Dot, D),
        ]
    }

    /// Checks the mixing weight.
    pub fn validate(&self) -> Result<()> {
        self.replay.validate().map(|_| ())
    }
}

/// Named method presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Cosine learning, `α`-mixed replay, dot testing.
    Uer,
    /// UER with the mixing weight pinned to 1 (pure dot-product replay).
    UerA,
    /// Experience replay with dot-product logits.
    Er,
    /// Cosine logits for learning, replay and testing.
    Lucir,
    /// Dot-product learning without replay.
    FineTune,
}

impl Preset {
    /// Canonical lower-case name.
    pub fn name(self) -> &'static str {
        match self {
            Preset::Uer => "uer",
            Preset::UerA => "uer-a",
            Preset::Er => "er",
            Preset::Lucir => "lucir",
            Preset::FineTune => "fine-tune",
        }
    }

    /// Parses a canonical name.
    pub fn from_name(name: &str) -> Option<Self> {
        [
            Preset::Uer,
            Preset::UerA,
            Preset::Er,
            Preset::Lucir,
            Preset::FineTune,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }
}

/// Everything that distinguishes one method from another.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    /// Label used in reports and file names.
    pub name: String,
    /// Scoring rules.
    pub triple: LogitTriple,
    /// Whether the memory buffer is filled and replayed.
    pub replay_enabled: bool,
    /// Average current and replay losses over the union of both batches
    /// instead of per batch.
    pub joint_batch: bool,
    /// Cosine scale `γ`.
    pub gamma: CosineScale,
    /// SGD learning rate.
    pub lr: f64,
    /// Reservoir capacity.
    pub buffer_capacity: usize,
    /// Hidden and output widths of the extractor (input width comes from
    /// the data).
    pub extractor_dims: Vec<usize>,
}

impl MethodConfig {
    /// Default mixing weight.
    pub const DEFAULT_ALPHA: f64 = 0.5;
    /// Default learning rate.
    pub const DEFAULT_LR: f64 = 0.1;
    /// Default reservoir capacity.
    pub const DEFAULT_BUFFER: usize = 200;
    /// Default extractor widths after the input.
    pub const DEFAULT_DIMS: [usize; 2] = [64, 64];

    /// A method with the given triple and the default hyper-parameters.
    pub fn custom(name: impl Into<String>, triple: LogitTriple) -> Self {
        Self {
            name: name.into(),
            triple,
            replay_enabled: true,
            joint_batch: false,
            gamma: CosineScale::default(),
            lr: Self::DEFAULT_LR,
            buffer_capacity: Self::DEFAULT_BUFFER,
            extractor_dims: Self::DEFAULT_DIMS.to_vec(),
        }
    }

    /// A preset; `alpha` only affects [`Preset::Uer`].
    pub fn preset(preset: Preset, alpha: f64) -> Self {
        let triple = match preset {
            Preset::Uer => LogitTriple::uer(alpha),
            Preset::UerA => LogitTriple::uer(1.0),
            Preset::Er | Preset::FineTune => LogitTriple::er(),
            Preset::Lucir => LogitTriple::lucir(),
        };
        let mut cfg = Self::custom(preset.name(), triple);
        cfg.replay_enabled = preset != Preset::FineTune;
        cfg
    }

    /// The mixing weight, when the replay objective is mixed.
    pub fn alpha(&self) -> Option<f64> {
        match self.triple.replay {
            ReplayMode::Mixed(a) => Some(a),
            _ => None,
        }
    }

    /// Checks hyper-parameter ranges.
    pub fn validate(&self) -> Result<()> {
        self.triple.validate()?;
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(invalid(alloc::format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.extractor_dims.is_empty() || self.extractor_dims.contains(&0) {
            return Err(invalid("extractor_dims must be non-empty and positive"));
        }
        Ok(())
    }
}

/// Losses reported by one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// `L_c`.
    pub current_loss: f64,
    /// `L_p`; zero when nothing was replayed.
    pub replay_loss: f64,
    /// `L = L_c + L_p`.
    pub total_loss: f64,
    /// Current samples consumed.
    pub current_samples: usize,
    /// Replayed samples used.
    pub replay_samples: usize,
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct TrainState {
    /// Feature extractor.
    pub extractor: FeatureExtractor,
    /// Predictor; row `r` belongs to label `classes()[r]`.
    pub predictor: PredictorParams,
    /// Episodic memory.
    pub buffer: MemoryBuffer,
    class_rows: Vec<usize>,
    baseline: PredictorParams,
    step: u64,
    stage: usize,
    stream_position: u64,
    memory_rng: Rng,
    predictor_rng: Rng,
}

impl TrainState {
    /// Fresh state with an empty predictor and buffer.
    pub fn new(
        extractor: FeatureExtractor,
        buffer_capacity: usize,
        memory_rng: Rng,
        predictor_rng: Rng,
    ) -> Self {
        let predictor = PredictorParams::new(extractor.output_dim());
        Self {
            baseline: predictor.clone(),
            extractor,
            predictor,
            buffer: MemoryBuffer::new(buffer_capacity),
            class_rows: Vec::new(),
            step: 0,
            stage: 0,
            stream_position: 0,
            memory_rng,
            predictor_rng,
        }
    }

    /// Labels in predictor-row order.
    pub fn classes(&self) -> &[usize] {
        &self.class_rows
    }

    /// Predictor row of `label`, if registered.
    pub fn row_of(&self, label: usize) -> Option<usize> {
        self.class_rows.iter().position(|&c| c == label)
    }

    /// Steps taken so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Stages started so far.
    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Predictor snapshot taken when the current stage began; rows of
    /// classes registered later hold their initial values.
    pub fn baseline(&self) -> &PredictorParams {
        &self.baseline
    }

    /// Marks the start of a stage and snapshots the predictor.
    pub fn begin_stage(&mut self) {
        self.stage += 1;
        self.baseline = self.predictor.clone();
    }

    /// Appends a predictor row for every label not yet seen, in first
    /// occurrence order. Rows are drawn like extractor weights with
    /// `fan_in = d`, `fan_out = 1`; biases start at zero.
    pub fn register_classes(&mut self, labels: impl IntoIterator<Item = usize>) -> Result<()> {
        let d = self.predictor.feature_dim();
        let s = init_bound(d, 1);
        for label in labels {
            if self.row_of(label).is_some() {
                continue;
            }
            let row = (0..d)
                .map(|_| self.predictor_rng.uniform(-s, s))
                .collect::<Result<Vec<_>>>()?;
            self.predictor.push_class(&row, 0.0)?;
            self.baseline.push_class(&row, 0.0)?;
            self.class_rows.push(label);
        }
        Ok(())
    }

    fn rows_for(
        &self,
        samples: impl Iterator<Item = (DenseVector, usize)>,
    ) -> Result<Vec<(DenseVector, usize)>> {
        samples
            .map(|(x, label)| {
                let row = self.row_of(label).ok_or(Error::ClassOutOfRange {
                    index: label,
                    classes: self.class_rows.len(),
                })?;
                Ok((x, row))
            })
            .collect()
    }
}

/// `Σ weight·objective(x, row)` over `inputs`, with the forward pass through
/// `extractor` and `predictor`. Gradients of every parameter are added to
/// `tape`.
pub fn backprop(
    extractor: &FeatureExtractor,
    predictor: &PredictorParams,
    scale: CosineScale,
    objective: ReplayMode,
    inputs: &[(DenseVector, usize)],
    weight: f64,
    tape: &mut GradientTape,
) -> Result<f64> {
    let mut feats = Vec::with_capacity(inputs.len());
    let mut caches = Vec::with_capacity(inputs.len());
    for (x, row) in inputs {
        let (h, cache) = extractor.forward(x)?;
        feats.push((h, *row));
        caches.push(cache);
    }
    let loss = weighted_loss(predictor, scale, objective, &feats, weight)?;
    tape.predictor.axpy(1.0, &loss.predictor);
    for (cache, dh) in caches.iter().zip(&loss.feature_grads) {
        extractor.backward(cache, dh, tape)?;
    }
    Ok(loss.loss)
}

fn accumulate(
    state: &TrainState,
    inputs: &[(DenseVector, usize)],
    objective: ReplayMode,
    weight: f64,
    cfg: &MethodConfig,
    tape: &mut GradientTape,
) -> Result<f64> {
    backprop(
        &state.extractor,
        &state.predictor,
        cfg.gamma,
        objective,
        inputs,
        weight,
        tape,
    )
}

/// One online step on `batch`, replaying up to `memory_batch` stored samples.
pub fn train_step(
    state: &mut TrainState,
    batch: &[&Sample],
    cfg: &MethodConfig,
    memory_batch: usize,
) -> Result<StepRecord> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    state.register_classes(batch.iter().map(|s| s.y))?;

    let replayed: Vec<(DenseVector, usize)> = if cfg.replay_enabled && memory_batch > 0 {
        let picked = state.buffer.retrieve(memory_batch, &mut state.memory_rng);
        let owned: Vec<_> = picked.into_iter().map(|s| (s.x.clone(), s.y)).collect();
        state.rows_for(owned.into_iter())?
    } else {
        Vec::new()
    };
    let current = state.rows_for(batch.iter().map(|s| (s.x.clone(), s.y)))?;

    let (n_c, n_m) = (current.len(), replayed.len());
    let (w_c, w_m) = if cfg.joint_batch {
        let w = 1.0 / (n_c + n_m) as f64;
        (w, w)
    } else {
        (
            1.0 / n_c as f64,
            if n_m > 0 { 1.0 / n_m as f64 } else { 0.0 },
        )
    };

    let mut tape = GradientTape::for_params(&state.extractor, &state.predictor);
    let current_loss = accumulate(
        state,
        &current,
        cfg.triple.learn.into(),
        w_c,
        cfg,
        &mut tape,
    )?;
    let replay_loss = if n_m > 0 {
        accumulate(state, &replayed, cfg.triple.replay, w_m, cfg, &mut tape)?
    } else {
        0.0
    };
    sgd_step(
        &mut state.extractor,
        &mut state.predictor,
        &mut tape,
        cfg.lr,
    )?;

    if cfg.replay_enabled {
        for s in batch {
            state.stream_position += 1;
            let stored = StoredSample {
                x: s.x.clone(),
                y: s.y,
                stream_position: state.stream_position,
            };
            state.buffer.offer(stored, &mut state.memory_rng);
        }
    } else {
        state.stream_position += batch.len() as u64;
    }
    state.step += 1;

    Ok(StepRecord {
        current_loss,
        replay_loss,
        total_loss: current_loss + replay_loss,
        current_samples: n_c,
        replay_samples: n_m,
    })
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Metrics recorded after each stage.
    pub metrics: Vec<StageMetrics>,
    /// Training samples consumed in each stage.
    pub consumed: Vec<usize>,
    /// Per-step loss records, in order.
    pub steps: Vec<StepRecord>,
    /// Class groups in stage order.
    pub stage_classes: Vec<Vec<usize>>,
    /// Final state.
    pub state: TrainState,
}

/// Runs the whole stream once with `method`, evaluating after each stage.
///
/// All randomness derives from `seed`: class order (unless
/// `stream.shuffle_seed` pins it), extractor and predictor initialisation,
/// batch order and memory operations each use their own fork.
pub fn run_experiment(
    dataset: &Dataset,
    method: &MethodConfig,
    stream: &StreamConfig,
    seed: u64,
) -> Result<RunResult> {
    method.validate()?;
    stream.validate()?;
    let root = Rng::new(seed);
    let mut order_rng = match stream.shuffle_seed {
        Some(s) => Rng::new(s).fork(streams::CLASS_ORDER),
        None => root.fork(streams::CLASS_ORDER),
    };
    let stages = build_stages(dataset, stream, &mut order_rng)?;

    let mut dims = vec![dataset.input_dim()];
    dims.extend_from_slice(&method.extractor_dims);
    let extractor = FeatureExtractor::init(&dims, &mut root.fork(streams::EXTRACTOR_INIT))?;
    let mut state = TrainState::new(
        extractor,
        method.buffer_capacity,
        root.fork(streams::MEMORY),
        root.fork(streams::PREDICTOR_INIT),
    );
    let mut batch_rng = root.fork(streams::BATCH_ORDER);

    let mut metrics = Vec::with_capacity(stages.len());
    let mut consumed = Vec::with_capacity(stages.len());
    let mut steps = Vec::new();
    for (t, stage) in stages.iter().enumerate() {
        state.begin_stage();
        let mut n = 0;
        for batch in iterate_batches(stage, stream, &mut batch_rng) {
            let rec = train_step(&mut state, &batch, method, stream.batch_size_memory)?;
            n += rec.current_samples;
            steps.push(rec);
        }
        consumed.push(n);
        metrics.push(eval::stage_metrics(
            &state,
            &stages[..=t],
            method.triple.test,
            method.gamma,
        )?);
    }
    Ok(RunResult {
        metrics,
        consumed,
        steps,
        stage_classes: stages.iter().map(|s| s.classes.clone()).collect(),
        state,
    })
}

impl core::fmt::Display for LogitTriple {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let mode = |m: LogitMode| match m {
            LogitMode::Dot => "dot",
            LogitMode::Cosine => "cosine",
        };
        let replay = match self.replay {
            ReplayMode::Dot => "dot".to_string(),
            ReplayMode::Cosine => "cosine".to_string(),
            ReplayMode::Mixed(a) => alloc::format!("mixed({a})"),
        };
        write!(f, "{}/{}/{}", mode(self.learn), replay, mode(self.test))
    }
}
