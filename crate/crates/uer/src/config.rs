//! Experiment configs.
//!
//! A config is a TOML document. Every key is optional except that at least
//! one `[method.<name>]` table must exist:
//!
//! ```toml
//! output = "runs"            # directory for metrics, summaries, checkpoints
//! seeds = [0, 1, 2]          # one run per seed and method
//!
//! [dataset]
//! kind = "split-gauss-10"    # "split-gauss-10" | "synthetic" | "csv"
//! seed = 0                   # synthetic only: draws means and samples
//! classes = 10               # synthetic defaults follow split-gauss-10
//! dim = 20
//! radius = 3.0
//! stddev = 1.0
//! train_per_class = 500
//! test_per_class = 100
//! # train = "train.csv"      # csv only, relative to the config file
//! # test = "test.csv"
//!
//! [stream]
//! stages = 5
//! classes_per_stage = 2
//! batch_current = 10
//! batch_memory = 10
//! # shuffle_seed = 7        # pin the class order across run seeds
//!
//! [model]
//! dims = [64, 64]            # extractor widths after the input layer
//!
//! [method.uer]               # a preset name needs nothing else
//! preset = "uer"             # uer | uer-a | er | lucir | fine-tune
//! alpha = 0.5
//! gamma = 10.0
//! lr = 0.1
//! buffer = 200
//! # learn = "cosine"         # override the preset's triple
//! # replay = "mixed"         # "dot" | "cosine" | "mixed" (uses alpha)
//! # test = "dot"
//! # replay_enabled = true
//! # joint = false            # average losses over both batches together
//! # dims = [64, 64]
//! ```
//!
//! A method whose table name is a preset name uses that preset unless
//! `preset` says otherwise; any other name must set `learn`, `replay` and
//! `test`. Methods run in table-name order.

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;
use uer_core::{
    gen_synthetic, CosineScale, Dataset, LogitMode, LogitTriple, MethodConfig, Preset, ReplayMode,
    Rng, StreamConfig, SyntheticSpec,
};

use crate::csv::load_csv_dataset;
use crate::error::{ConfigError, IoError};

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// Gaussian clusters around means drawn on a sphere.
    Synthetic {
        seed: u64,
        classes: usize,
        dim: usize,
        radius: f64,
        stddev: f64,
        train_per_class: usize,
        test_per_class: usize,
    },
    /// Label-first CSV files.
    Csv { train: PathBuf, test: PathBuf },
}

impl DatasetSpec {
    /// The desk-scale benchmark with means and samples drawn from `seed`.
    pub fn split_gauss_10(seed: u64) -> Self {
        DatasetSpec::Synthetic {
            seed,
            classes: 10,
            dim: 20,
            radius: 3.0,
            stddev: 1.0,
            train_per_class: 500,
            test_per_class: 100,
        }
    }

    /// Generates or reads the dataset.
    pub fn load(&self) -> Result<Dataset, IoError> {
        match self {
            DatasetSpec::Synthetic {
                seed,
                classes,
                dim,
                radius,
                stddev,
                train_per_class,
                test_per_class,
            } => {
                let root = Rng::new(*seed);
                let spec = SyntheticSpec::on_sphere(
                    *classes,
                    *dim,
                    *radius,
                    *stddev,
                    *train_per_class,
                    *test_per_class,
                    &mut root.fork(1),
                )?;
                Ok(gen_synthetic(&spec, &mut root.fork(2))?)
            }
            DatasetSpec::Csv { train, test } => {
                let (train, test) = load_csv_dataset(train, test)?;
                Ok(Dataset::new(train, test)?)
            }
        }
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub stream: StreamConfig,
    pub methods: Vec<MethodConfig>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
}

impl ExperimentConfig {
    /// Sets `α` on every method with a mixed replay objective.
    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), ConfigError> {
        for m in &mut self.methods {
            if let ReplayMode::Mixed(_) = m.triple.replay {
                m.triple.replay = ReplayMode::Mixed(alpha);
                m.validate()
                    .map_err(|e| invalid(format!("method.{}.alpha", m.name), 0, e))?;
            }
        }
        Ok(())
    }

    /// Sets the reservoir capacity of every method.
    pub fn set_buffer(&mut self, capacity: usize) {
        for m in &mut self.methods {
            m.buffer_capacity = capacity;
        }
    }

    /// Canonical TOML text that parses back to `self`.
    pub fn to_toml_string(&self) -> String {
        let dataset = match &self.dataset {
            DatasetSpec::Synthetic {
                seed,
                classes,
                dim,
                radius,
                stddev,
                train_per_class,
                test_per_class,
            } => RawDataset {
                kind: s("synthetic".to_string()),
                seed: s(*seed),
                classes: s(*classes),
                dim: s(*dim),
                radius: s(*radius),
                stddev: s(*stddev),
                train_per_class: s(*train_per_class),
                test_per_class: s(*test_per_class),
                ..RawDataset::default()
            },
            DatasetSpec::Csv { train, test } => RawDataset {
                kind: s("csv".to_string()),
                train: s(path_string(train)),
                test: s(path_string(test)),
                ..RawDataset::default()
            },
        };
        let stream = RawStream {
            stages: s(self.stream.stages),
            classes_per_stage: s(self.stream.classes_per_stage),
            batch_current: s(self.stream.batch_size_current),
            batch_memory: s(self.stream.batch_size_memory),
            shuffle_seed: self.stream.shuffle_seed.map(|v| Spanned::new(0..0, v)),
        };
        let methods = self
            .methods
            .iter()
            .map(|m| {
                let raw = RawMethod {
                    preset: None,
                    alpha: m.alpha().map(|a| Spanned::new(0..0, a)),
                    gamma: s(m.gamma.gamma()),
                    lr: s(m.lr),
                    buffer: s(m.buffer_capacity),
                    learn: s(mode_name(m.triple.learn).to_string()),
                    replay: s(replay_name(m.triple.replay).to_string()),
                    test: s(mode_name(m.triple.test).to_string()),
                    replay_enabled: s(m.replay_enabled),
                    joint: s(m.joint_batch),
                    dims: s(m.extractor_dims.clone()),
                };
                (m.name.clone(), raw)
            })
            .collect();
        let raw = RawConfig {
            output: s(path_string(&self.output)),
            seeds: s(self.seeds.clone()),
            dataset: Some(dataset),
            stream: Some(stream),
            model: None,
            method: Some(methods),
        };
        toml::to_string(&raw).expect("config serializes")
    }
}

fn s<T>(v: T) -> Field<T> {
    Some(Spanned::new(0..0, v))
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn mode_name(m: LogitMode) -> &'static str {
    match m {
        LogitMode::Dot => "dot",
        LogitMode::Cosine => "cosine",
    }
}

fn replay_name(m: ReplayMode) -> &'static str {
    match m {
        ReplayMode::Dot => "dot",
        ReplayMode::Cosine => "cosine",
        ReplayMode::Mixed(_) => "mixed",
    }
}

type Field<T> = Option<Spanned<T>>;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Field<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seeds: Field<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<RawDataset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stream: Option<RawStream>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<RawModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<BTreeMap<String, RawMethod>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Field<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Field<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classes: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Field<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stddev: Field<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_per_class: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_per_class: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Field<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Field<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStream {
    #[serde(skip_serializing_if = "Option::is_none")]
    stages: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classes_per_stage: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_current: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_memory: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shuffle_seed: Field<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Field<Vec<usize>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethod {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Field<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Field<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Field<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lr: Field<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buffer: Field<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    learn: Field<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replay: Field<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Field<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replay_enabled: Field<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint: Field<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Field<Vec<usize>>,
}

fn invalid(key: impl Into<String>, line: usize, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        line,
        message: message.to_string(),
    }
}

/// Reads and validates a config file. Relative CSV paths resolve against
/// the file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_str(&text, path.parent())
}

/// Parses config text; `base` anchors relative CSV paths.
pub fn parse_str(text: &str, base: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| syntax_error(text, &e))?;
    Resolver { text, base }.resolve(raw)
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

fn syntax_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let line = e.span().map_or(0, |s| line_of(text, s));
    let message = e.message().trim().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(key) = rest.split('`').next() {
            return ConfigError::Unknown {
                key: key.to_string(),
                line,
            };
        }
    }
    ConfigError::Syntax { line, message }
}

struct Resolver<'a> {
    text: &'a str,
    base: Option<&'a Path>,
}

impl Resolver<'_> {
    fn line(&self, f: &Spanned<impl Sized>) -> usize {
        line_of(self.text, f.span())
    }

    fn get<T: Clone>(&self, f: &Field<T>, default: T) -> T {
        f.as_ref().map_or(default, |v| v.get_ref().clone())
    }

    fn positive(&self, key: &str, f: &Field<usize>, default: usize) -> Result<usize, ConfigError> {
        match f {
            Some(v) if *v.get_ref() == 0 => Err(invalid(key, self.line(v), "must be at least 1")),
            _ => Ok(self.get(f, default)),
        }
    }

    fn resolve(&self, raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
        let seeds = self.get(&raw.seeds, vec![0]);
        if let Some(s) = &raw.seeds {
            let line = self.line(s);
            if seeds.is_empty() {
                return Err(invalid("seeds", line, "needs at least one seed"));
            }
            if seeds
                .iter()
                .enumerate()
                .any(|(i, a)| seeds[..i].contains(a))
            {
                return Err(invalid("seeds", line, "seeds must be distinct"));
            }
        }
        let output = PathBuf::from(self.get(&raw.output, "runs".to_string()));
        let dataset = self.dataset(raw.dataset.unwrap_or_default())?;
        let stream = self.stream(raw.stream.unwrap_or_default(), &dataset)?;
        let model_dims = match raw.model.and_then(|m| m.dims) {
            Some(d) => self.dims("model.dims", &d)?,
            None => MethodConfig::DEFAULT_DIMS.to_vec(),
        };
        let methods = raw.method.unwrap_or_default();
        if methods.is_empty() {
            return Err(ConfigError::Missing("method".into()));
        }
        let methods = methods
            .into_iter()
            .map(|(name, m)| self.method(name, m, &model_dims))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExperimentConfig {
            dataset,
            stream,
            methods,
            seeds,
            output,
        })
    }

    fn dims(&self, key: &str, d: &Spanned<Vec<usize>>) -> Result<Vec<usize>, ConfigError> {
        if d.get_ref().is_empty() || d.get_ref().contains(&0) {
            return Err(invalid(
                key,
                self.line(d),
                "widths must be a non-empty list of positive integers",
            ));
        }
        Ok(d.get_ref().clone())
    }

    fn dataset(&self, d: RawDataset) -> Result<DatasetSpec, ConfigError> {
        let kind = self.get(&d.kind, "split-gauss-10".to_string());
        let kind_line = d.kind.as_ref().map_or(0, |k| self.line(k));
        let synthetic_keys = [
            ("dataset.seed", d.seed.as_ref().map(|v| v.span())),
            ("dataset.classes", d.classes.as_ref().map(|v| v.span())),
            ("dataset.dim", d.dim.as_ref().map(|v| v.span())),
            ("dataset.radius", d.radius.as_ref().map(|v| v.span())),
            ("dataset.stddev", d.stddev.as_ref().map(|v| v.span())),
            (
                "dataset.train_per_class",
                d.train_per_class.as_ref().map(|v| v.span()),
            ),
            (
                "dataset.test_per_class",
                d.test_per_class.as_ref().map(|v| v.span()),
            ),
        ];
        match kind.as_str() {
            "split-gauss-10" | "synthetic" => {
                for (key, span) in [("dataset.train", &d.train), ("dataset.test", &d.test)] {
                    if let Some(v) = span {
                        return Err(invalid(
                            key,
                            self.line(v),
                            format!("not used by dataset kind `{kind}`"),
                        ));
                    }
                }
                let DatasetSpec::Synthetic {
                    seed,
                    classes,
                    dim,
                    radius,
                    stddev,
                    train_per_class,
                    test_per_class,
                } = DatasetSpec::split_gauss_10(0)
                else {
                    unreachable!()
                };
                let spec = DatasetSpec::Synthetic {
                    seed: self.get(&d.seed, seed),
                    classes: self.positive("dataset.classes", &d.classes, classes)?,
                    dim: self.positive("dataset.dim", &d.dim, dim)?,
                    radius: self.positive_f64("dataset.radius", &d.radius, radius)?,
                    stddev: self.positive_f64("dataset.stddev", &d.stddev, stddev)?,
                    train_per_class: self.positive(
                        "dataset.train_per_class",
                        &d.train_per_class,
                        train_per_class,
                    )?,
                    test_per_class: self.get(&d.test_per_class, test_per_class),
                };
                Ok(spec)
            }
            "csv" => {
                if let Some((key, Some(span))) =
                    synthetic_keys.into_iter().find(|(_, s)| s.is_some())
                {
                    return Err(invalid(
                        key,
                        line_of(self.text, span),
                        "not used by dataset kind `csv`",
                    ));
                }
                let path = |key: &str, f: &Field<String>| -> Result<PathBuf, ConfigError> {
                    let p = PathBuf::from(
                        f.as_ref()
                            .ok_or_else(|| ConfigError::Missing(key.into()))?
                            .get_ref(),
                    );
                    Ok(match self.base {
                        Some(b) if p.is_relative() => b.join(p),
                        _ => p,
                    })
                };
                Ok(DatasetSpec::Csv {
                    train: path("dataset.train", &d.train)?,
                    test: path("dataset.test", &d.test)?,
                })
            }
            other => Err(invalid(
                "dataset.kind",
                kind_line,
                format!("expected split-gauss-10, synthetic or csv, found `{other}`"),
            )),
        }
    }

    fn positive_f64(&self, key: &str, f: &Field<f64>, default: f64) -> Result<f64, ConfigError> {
        match f {
            Some(v) if !(v.get_ref().is_finite() && *v.get_ref() > 0.0) => {
                Err(invalid(key, self.line(v), "must be a positive number"))
            }
            _ => Ok(self.get(f, default)),
        }
    }

    fn stream(&self, s: RawStream, dataset: &DatasetSpec) -> Result<StreamConfig, ConfigError> {
        let mut cfg = StreamConfig::new(
            self.positive("stream.stages", &s.stages, 5)?,
            self.positive("stream.classes_per_stage", &s.classes_per_stage, 2)?,
        );
        cfg.batch_size_current = self.positive(
            "stream.batch_current",
            &s.batch_current,
            cfg.batch_size_current,
        )?;
        cfg.batch_size_memory = self.get(&s.batch_memory, cfg.batch_size_memory);
        cfg.shuffle_seed = s.shuffle_seed.map(|v| v.into_inner());
        if let DatasetSpec::Synthetic { classes, .. } = dataset {
            if cfg.total_classes() > *classes {
                let line = s
                    .stages
                    .as_ref()
                    .or(s.classes_per_stage.as_ref())
                    .map_or(0, |v| self.line(v));
                return Err(invalid(
                    "stream.stages",
                    line,
                    format!(
                        "{} stages of {} classes need more than the {classes} available",
                        cfg.stages, cfg.classes_per_stage
                    ),
                ));
            }
        }
        Ok(cfg)
    }

    fn mode(&self, key: &str, f: &Spanned<String>) -> Result<LogitMode, ConfigError> {
        match f.get_ref().as_str() {
            "dot" => Ok(LogitMode::Dot),
            "cosine" => Ok(LogitMode::Cosine),
            other => Err(invalid(
                key,
                self.line(f),
                format!("expected dot or cosine, found `{other}`"),
            )),
        }
    }

    fn method(
        &self,
        name: String,
        m: RawMethod,
        model_dims: &[usize],
    ) -> Result<MethodConfig, ConfigError> {
        let key = |k: &str| format!("method.{name}.{k}");
        let alpha = self.get(&m.alpha, MethodConfig::DEFAULT_ALPHA);
        let preset = match &m.preset {
            Some(p) => Some(Preset::from_name(p.get_ref()).ok_or_else(|| {
                invalid(
                    key("preset"),
                    self.line(p),
                    format!(
                        "unknown preset `{}`; expected uer, uer-a, er, lucir or fine-tune",
                        p.get_ref()
                    ),
                )
            })?),
            None => Preset::from_name(&name),
        };
        let mut cfg = match preset {
            Some(p) => {
                let mut c = MethodConfig::preset(p, alpha);
                c.name = name.clone();
                c
            }
            None => {
                let need = |k: &str, f: &Field<String>| {
                    if f.is_none() {
                        Err(ConfigError::Missing(key(k)))
                    } else {
                        Ok(())
                    }
                };
                need("learn", &m.learn)?;
                need("replay", &m.replay)?;
                need("test", &m.test)?;
                MethodConfig::custom(name.clone(), LogitTriple::er())
            }
        };
        if let Some(f) = &m.learn {
            cfg.triple.learn = self.mode(&key("learn"), f)?;
        }
        if let Some(f) = &m.test {
            cfg.triple.test = self.mode(&key("test"), f)?;
        }
        if let Some(f) = &m.replay {
            cfg.triple.replay = match f.get_ref().as_str() {
                "mixed" => ReplayMode::Mixed(alpha),
                _ => self.mode(&key("replay"), f)?.into(),
            };
        }
        if let (Some(a), None) = (&m.alpha, cfg.alpha()) {
            return Err(invalid(
                key("alpha"),
                self.line(a),
                "only used with a mixed replay objective",
            ));
        }
        if let ReplayMode::Mixed(a) = cfg.triple.replay {
            cfg.triple.replay.validate().map_err(|_| {
                let line = m.alpha.as_ref().map_or(0, |v| self.line(v));
                invalid(key("alpha"), line, format!("alpha out of [0,1]: {a}"))
            })?;
        }
        if let Some(g) = &m.gamma {
            cfg.gamma = CosineScale::new(*g.get_ref())
                .map_err(|e| invalid(key("gamma"), self.line(g), e))?;
        }
        if let Some(lr) = &m.lr {
            if !(lr.get_ref().is_finite() && *lr.get_ref() > 0.0) {
                return Err(invalid(
                    key("lr"),
                    self.line(lr),
                    "must be a positive number",
                ));
            }
            cfg.lr = *lr.get_ref();
        }
        cfg.buffer_capacity = self.get(&m.buffer, cfg.buffer_capacity);
        cfg.replay_enabled = self.get(&m.replay_enabled, cfg.replay_enabled);
        cfg.joint_batch = self.get(&m.joint, cfg.joint_batch);
        cfg.extractor_dims = match &m.dims {
            Some(d) => self.dims(&key("dims"), d)?,
            None => model_dims.to_vec(),
        };
        cfg.validate()
            .map_err(|e| invalid(format!("method.{name}"), 0, e))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_str("[dataset]\nkind = \"split-gauss-10\"\n[method.uer]\n", None).unwrap();
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.output, PathBuf::from("runs"));
        assert_eq!(cfg.dataset, DatasetSpec::split_gauss_10(0));
        assert_eq!(
            (cfg.stream.batch_size_current, cfg.stream.batch_size_memory),
            (10, 10)
        );
        let m = &cfg.methods[0];
        assert_eq!(m.triple, LogitTriple::uer(0.5));
        assert_eq!(m.gamma.gamma(), 10.0);
        assert_eq!(m.lr, 0.1);
        assert_eq!(m.buffer_capacity, 200);
    }

    #[test]
    fn alpha_out_of_range_cites_key_and_line() {
        let err = parse_str("seeds = [1]\n[method.uer]\nalpha = 1.5\n", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpha out of [0,1]"), "{msg}");
        assert!(
            msg.contains("method.uer.alpha") && msg.contains("line 3"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_key_is_reported_with_line() {
        let err = parse_str("[method.er]\nlearning_rate = 0.2\n", None).unwrap_err();
        match err {
            ConfigError::Unknown { key, line } => {
                assert_eq!((key.as_str(), line), ("learning_rate", 2))
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn custom_method_requires_triple() {
        let err = parse_str("[method.mine]\nlearn = \"cosine\"\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::Missing(k) if k == "method.mine.replay"));
        let cfg = parse_str(
            "[method.mine]\nlearn = \"cosine\"\nreplay = \"dot\"\ntest = \"dot\"\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.methods[0].triple, LogitTriple::grid()[7]);
    }

    #[test]
    fn bad_values_are_rejected() {
        for text in [
            "[method.er]\nlr = -1.0\n",
            "[method.er]\nlearn = \"angle\"\n",
            "[method.er]\nalpha = 0.3\n",
            "[method.x]\npreset = \"gem\"\n",
            "seeds = []\n[method.er]\n",
            "seeds = [1, 1]\n[method.er]\n",
            "[stream]\nstages = 6\n[method.er]\n",
            "[dataset]\nkind = \"images\"\n[method.er]\n",
            "[dataset]\nkind = \"csv\"\nseed = 3\n[method.er]\n",
            "seeds = [0]\n",
            "seeds = [0\n",
        ] {
            assert!(parse_str(text, None).is_err(), "{text}");
        }
    }

    #[test]
    fn serialize_parse_round_trip() {
        let text = "output = \"out\"\nseeds = [3, 1]\n[dataset]\nkind = \"synthetic\"\nclasses = 4\ndim = 3\n\
                    [stream]\nstages = 2\nshuffle_seed = 9\n[model]\ndims = [8]\n\
                    [method.uer]\nalpha = 0.25\ngamma = 16.0\n[method.plain]\nlearn = \"dot\"\nreplay = \"mixed\"\n\
                    test = \"cosine\"\njoint = true\nbuffer = 7\n[method.fine-tune]\n";
        let cfg = parse_str(text, None).unwrap();
        let again = parse_str(&cfg.to_toml_string(), None).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml_string(), cfg.to_toml_string());
        let csv = parse_str(
            "[dataset]\nkind = \"csv\"\ntrain = \"a.csv\"\ntest = \"/b.csv\"\n[method.er]\n",
            Some(Path::new("/cfg")),
        )
        .unwrap();
        assert_eq!(
            csv.dataset,
            DatasetSpec::Csv {
                train: "/cfg/a.csv".into(),
                test: "/b.csv".into()
            }
        );
        assert_eq!(parse_str(&csv.to_toml_string(), None).unwrap(), csv);
    }

    #[test]
    fn overrides() {
        let mut cfg = parse_str("[method.uer]\n[method.er]\n", None).unwrap();
        cfg.set_alpha(0.75).unwrap();
        cfg.set_buffer(50);
        let er = cfg.methods.iter().find(|m| m.name == "er").unwrap();
        let uer = cfg.methods.iter().find(|m| m.name == "uer").unwrap();
        assert_eq!(er.triple, LogitTriple::er());
        assert_eq!(uer.triple, LogitTriple::uer(0.75));
        assert!(cfg.methods.iter().all(|m| m.buffer_capacity == 50));
        assert!(cfg.set_alpha(2.0).is_err());
    }
}
