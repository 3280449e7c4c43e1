//! Orchestration behind the subcommands. Every (method, seed) pair runs on
//! its own rayon worker and writes its own files; summaries are written by
//! the caller once all workers finish.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use uer_core::{
    run_experiment, Dataset, LogitMode, LogitTriple, MethodConfig, ReplayMode, RunResult, Sample,
    StageMetrics,
};

use crate::config::ExperimentConfig;
use crate::container::{save_buffer, Checkpoint};
use crate::error::{ConfigError, IoError, RunError};
use crate::metrics::write_metrics;

/// Mixing weights swept by default.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Column headers of the logit-triple table.
pub const TABLE1_HEADERS: [&str; 13] = [
    "Index",
    "Learning",
    "Replaying",
    "Testing",
    "A_all",
    "A_p",
    "A_c",
    "‖W_p‖",
    "‖W_c‖",
    "Mean(W_p)",
    "Mean(W_c)",
    "Mean(b_p)",
    "Mean(b_c)",
];

/// Outcome of one (method, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    /// `A_T` after the last stage.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_average_accuracy: Option<f64>,
    /// Metrics file, relative to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub name: String,
    pub triple: String,
    pub runs: Vec<SeedRun>,
    /// Mean of the successful runs' final `A_T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two successful runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

/// Result of [`run`], also written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub methods: Vec<MethodSummary>,
}

impl RunSummary {
    pub fn failures(&self) -> Vec<String> {
        self.methods
            .iter()
            .flat_map(|m| {
                m.runs.iter().filter_map(move |r| {
                    r.error
                        .as_ref()
                        .map(|e| format!("{} seed {}: {e}", m.name, r.seed))
                })
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:<24} {:>6} {:>8} {:>8}",
            "method", "triple", "runs", "A_T", "std"
        );
        for m in &self.methods {
            let ok = m.runs.iter().filter(|r| r.error.is_none()).count();
            let _ = writeln!(
                out,
                "{:<16} {:<24} {:>6} {:>8} {:>8}",
                m.name,
                m.triple,
                format!("{ok}/{}", m.runs.len()),
                fmt_opt(m.mean),
                fmt_opt(m.std)
            );
        }
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.and_then(|v| mean_std(&v).0)
}

fn write_json(value: &impl Serialize, path: &Path) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::io(path, e))
}

fn seed_file(seed: u64, ext: &str) -> String {
    format!("seed-{seed}.{ext}")
}

/// Runs one method and seed and writes its metrics to `out/rel`.
fn run_and_write(
    dataset: &Dataset,
    method: &MethodConfig,
    cfg: &ExperimentConfig,
    seed: u64,
    out: &Path,
    rel: &Path,
) -> Result<RunResult, String> {
    let result = run_experiment(dataset, method, &cfg.stream, seed).map_err(|e| e.to_string())?;
    write_metrics(&result.metrics, &out.join(rel)).map_err(|e| e.to_string())?;
    Ok(result)
}

fn load(cfg: &ExperimentConfig) -> Result<Dataset, RunError> {
    Ok(cfg.dataset.load()?)
}

/// Every method over every seed. Failed runs are recorded in the summary
/// and do not stop the others.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let dataset = load(cfg)?;
    let jobs: Vec<(usize, u64)> = (0..cfg.methods.len())
        .flat_map(|m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<SeedRun> = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let method = &cfg.methods[m];
            let rel = Path::new(&method.name).join(seed_file(seed, "jsonl"));
            match run_and_write(&dataset, method, cfg, seed, &cfg.output, &rel) {
                Ok(r) => SeedRun {
                    seed,
                    final_average_accuracy: r.metrics.last().map(|m| m.average_accuracy),
                    metrics_path: Some(rel),
                    error: None,
                },
                Err(e) => SeedRun {
                    seed,
                    final_average_accuracy: None,
                    metrics_path: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    let methods = cfg
        .methods
        .iter()
        .zip(results.chunks(cfg.seeds.len()))
        .map(|(m, runs)| {
            let finals: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.final_average_accuracy)
                .collect();
            let (mean, std) = mean_std(&finals);
            MethodSummary {
                name: m.name.clone(),
                triple: m.triple.to_string(),
                runs: runs.to_vec(),
                mean,
                std,
            }
        })
        .collect();
    let summary = RunSummary { methods };
    write_json(&summary, &cfg.output.join("summary.json"))?;
    Ok(summary)
}

/// Final-stage accuracies of one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub seed: u64,
    #[serde(rename = "A_T")]
    pub average_accuracy: f64,
    pub acc_prev: Option<f64>,
    pub acc_curr: f64,
}

/// One mixing weight, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    #[serde(rename = "A_T")]
    pub average_accuracy: f64,
    pub acc_prev: Option<f64>,
    pub acc_curr: f64,
    pub seeds: Vec<SweepPoint>,
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:>6} {:>8} {:>8} {:>8}\n",
        "alpha", "A_T", "acc_prev", "acc_curr"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>8.4} {:>8} {:>8.4}",
            r.alpha,
            r.average_accuracy,
            fmt_opt(r.acc_prev),
            r.acc_curr
        );
    }
    out
}

/// Holds out the last `fraction` of each class's training samples (at
/// least one when the class has two or more) as the evaluation set.
pub fn validation_split(dataset: &Dataset, fraction: f64) -> Result<Dataset, RunError> {
    let mut train = Vec::new();
    let mut held = Vec::new();
    for &c in dataset.classes() {
        let members: Vec<&Sample> = dataset.train().iter().filter(|s| s.y == c).collect();
        let k = ((members.len() as f64 * fraction).ceil() as usize)
            .min(members.len().saturating_sub(1));
        let cut = members.len() - k;
        train.extend(members[..cut].iter().map(|&s| s.clone()));
        held.extend(members[cut..].iter().map(|&s| s.clone()));
    }
    Ok(Dataset::new(train, held).map_err(IoError::from)?)
}

fn collect_failures<T>(results: Vec<Result<T, String>>) -> Result<Vec<T>, RunError> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push(e),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(RunError::Failed(failed))
    }
}

/// Runs the first mixed-replay method once per `alpha` and seed. With
/// `validate`, 10% of each class's training data replaces the test set.
pub fn sweep_alpha(
    cfg: &ExperimentConfig,
    alphas: &[f64],
    validate: bool,
) -> Result<Vec<SweepRow>, RunError> {
    let template = cfg
        .methods
        .iter()
        .find(|m| matches!(m.triple.replay, ReplayMode::Mixed(_)))
        .ok_or_else(|| {
            ConfigError::Missing("method with replay = \"mixed\" (e.g. [method.uer])".into())
        })?;
    if alphas.is_empty() {
        return Err(ConfigError::Missing("alpha values".into()).into());
    }
    let methods = alphas
        .iter()
        .map(|&a| {
            let mut m = template.clone();
            m.triple.replay = ReplayMode::Mixed(a);
            m.validate().map_err(|e| ConfigError::Invalid {
                key: "--alpha".into(),
                line: 0,
                message: e.to_string(),
            })?;
            Ok(m)
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let mut dataset = load(cfg)?;
    if validate {
        dataset = validation_split(&dataset, 0.1)?;
    }
    let base = cfg.output.join("sweep-alpha");
    let jobs: Vec<(usize, u64)> = (0..alphas.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let rel = Path::new(&format!("alpha-{}", alphas[i])).join(seed_file(seed, "jsonl"));
            let r = run_and_write(&dataset, &methods[i], cfg, seed, &base, &rel)?;
            let last = r.metrics.last().ok_or("run produced no stages")?;
            Ok(SweepPoint {
                seed,
                average_accuracy: last.average_accuracy,
                acc_prev: last.acc_previous,
                acc_curr: last.acc_current,
            })
        })
        .collect::<Vec<Result<_, String>>>();
    let points = collect_failures(points)?;
    let rows: Vec<SweepRow> = alphas
        .iter()
        .zip(points.chunks(cfg.seeds.len()))
        .map(|(&alpha, pts)| SweepRow {
            alpha,
            average_accuracy: mean_std(&pts.iter().map(|p| p.average_accuracy).collect::<Vec<_>>())
                .0
                .unwrap_or(0.0),
            acc_prev: mean_of(pts.iter().map(|p| p.acc_prev)),
            acc_curr: mean_std(&pts.iter().map(|p| p.acc_curr).collect::<Vec<_>>())
                .0
                .unwrap_or(0.0),
            seeds: pts.to_vec(),
        })
        .collect();
    write_json(&rows, &base.join("sweep.json"))?;
    Ok(rows)
}

/// One learn/replay/test combination averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub index: usize,
    pub learning: LogitMode,
    pub replaying: LogitMode,
    pub testing: LogitMode,
    #[serde(rename = "A_all")]
    pub a_all: f64,
    #[serde(rename = "A_p")]
    pub a_p: Option<f64>,
    #[serde(rename = "A_c")]
    pub a_c: f64,
    pub norm_p: Option<f64>,
    pub norm_c: Option<f64>,
    pub mean_w_p: Option<f64>,
    pub mean_w_c: Option<f64>,
    pub mean_b_p: Option<f64>,
    pub mean_b_c: Option<f64>,
    /// Final-stage metrics of each seed.
    pub per_seed: Vec<StageMetrics>,
}

impl Table1Row {
    fn cells(&self) -> [String; 13] {
        let mode = |m: LogitMode| if m == LogitMode::Dot { "D" } else { "C" }.to_string();
        [
            self.index.to_string(),
            mode(self.learning),
            mode(self.replaying),
            mode(self.testing),
            format!("{:.4}", self.a_all),
            fmt_opt(self.a_p),
            format!("{:.4}", self.a_c),
            fmt_opt(self.norm_p),
            fmt_opt(self.norm_c),
            fmt_opt(self.mean_w_p),
            fmt_opt(self.mean_w_c),
            fmt_opt(self.mean_b_p),
            fmt_opt(self.mean_b_c),
        ]
    }
}

pub fn render_table1(rows: &[Table1Row]) -> String {
    let cells: Vec<[String; 13]> = rows.iter().map(Table1Row::cells).collect();
    let widths: Vec<usize> = (0..13)
        .map(|i| {
            cells
                .iter()
                .map(|c| c[i].chars().count())
                .chain([TABLE1_HEADERS[i].chars().count()])
                .max()
                .unwrap()
        })
        .collect();
    let line = |items: &mut dyn Iterator<Item = String>| {
        let mut s = items
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.push('\n');
        s
    };
    let mut out = line(&mut TABLE1_HEADERS.iter().map(|h| h.to_string()));
    for c in cells {
        out.push_str(&line(&mut c.into_iter()));
    }
    out
}

fn replay_as_mode(r: ReplayMode) -> LogitMode {
    match r {
        ReplayMode::Cosine => LogitMode::Cosine,
        _ => LogitMode::Dot,
    }
}

/// Runs all eight logit triples with the first method's hyper-parameters.
pub fn table1(cfg: &ExperimentConfig) -> Result<Vec<Table1Row>, RunError> {
    let template = cfg
        .methods
        .first()
        .ok_or_else(|| ConfigError::Missing("method".into()))?;
    let grid = LogitTriple::grid();
    let methods: Vec<MethodConfig> = grid
        .iter()
        .enumerate()
        .map(|(i, &triple)| {
            let mut m = template.clone();
            m.name = format!("row-{}", i + 1);
            m.triple = triple;
            m.replay_enabled = true;
            m
        })
        .collect();
    let dataset = load(cfg)?;
    let base = cfg.output.join("table1");
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let finals = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let rel = Path::new(&methods[i].name).join(seed_file(seed, "jsonl"));
            let mut r = run_and_write(&dataset, &methods[i], cfg, seed, &base, &rel)?;
            r.metrics
                .pop()
                .ok_or_else(|| "run produced no stages".to_string())
        })
        .collect::<Vec<_>>();
    let finals = collect_failures(finals)?;
    let rows: Vec<Table1Row> = grid
        .iter()
        .zip(finals.chunks(cfg.seeds.len()))
        .enumerate()
        .map(|(i, (t, ms))| {
            let avg = |f: fn(&StageMetrics) -> Option<f64>| mean_of(ms.iter().map(f));
            Table1Row {
                index: i + 1,
                learning: t.learn,
                replaying: replay_as_mode(t.replay),
                testing: t.test,
                a_all: avg(|m| Some(m.average_accuracy)).unwrap_or(0.0),
                a_p: avg(|m| m.acc_previous),
                a_c: avg(|m| Some(m.acc_current)).unwrap_or(0.0),
                norm_p: avg(|m| m.norm_prev),
                norm_c: avg(|m| m.norm_curr),
                mean_w_p: avg(|m| m.mean_w_prev),
                mean_w_c: avg(|m| m.mean_w_curr),
                mean_b_p: avg(|m| m.mean_b_prev),
                mean_b_c: avg(|m| m.mean_b_curr),
                per_seed: ms.to_vec(),
            }
        })
        .collect();
    write_json(&rows, &base.join("table1.json"))?;
    Ok(rows)
}

/// Per-stage diagnostics of one run with the files it left behind.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagReport {
    pub method: String,
    pub seed: u64,
    pub metrics: Vec<StageMetrics>,
    pub consumed: Vec<usize>,
    pub checkpoint: PathBuf,
    pub buffer: PathBuf,
}

impl DiagReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} seed {}\n{:>5} {:>7} {:>8} {:>8} {:>7} {:>7} {:>7} {:>7} {:>8} {:>9} {:>8}\n",
            self.method,
            self.seed,
            "stage",
            "A_t",
            "acc_prev",
            "acc_curr",
            "norm_p",
            "norm_c",
            "b_p",
            "b_c",
            "post_gap",
            "change",
            "consumed"
        );
        for (m, n) in self.metrics.iter().zip(&self.consumed) {
            let _ = writeln!(
                out,
                "{:>5} {:>7.4} {:>8} {:>8.4} {:>7} {:>7} {:>7} {:>7} {:>8} {:>9.3} {:>8}",
                m.stage,
                m.average_accuracy,
                fmt_opt(m.acc_previous),
                m.acc_current,
                fmt_opt(m.norm_prev),
                fmt_opt(m.norm_curr),
                fmt_opt(m.mean_b_prev),
                fmt_opt(m.mean_b_curr),
                fmt_opt(m.posterior_gap()),
                m.accumulated_param_change,
                n
            );
        }
        out
    }
}

/// Runs every method on the first seed and saves its final parameters and
/// memory buffer.
pub fn diag(cfg: &ExperimentConfig) -> Result<Vec<DiagReport>, RunError> {
    let dataset = load(cfg)?;
    let seed = cfg.seeds[0];
    let base = cfg.output.join("diag");
    let reports = cfg
        .methods
        .par_iter()
        .map(|method| {
            let dir = Path::new(&method.name);
            let r = run_and_write(
                &dataset,
                method,
                cfg,
                seed,
                &base,
                &dir.join(seed_file(seed, "jsonl")),
            )?;
            let checkpoint = base.join(dir).join(seed_file(seed, "ckpt"));
            let buffer = base.join(dir).join(seed_file(seed, "buf"));
            let ck = Checkpoint {
                extractor: r.state.extractor.clone(),
                predictor: r.state.predictor.clone(),
                classes: r.state.classes().to_vec(),
            };
            ck.save(&checkpoint).map_err(|e| e.to_string())?;
            save_buffer(&r.state.buffer, &buffer).map_err(|e| e.to_string())?;
            Ok(DiagReport {
                method: method.name.clone(),
                seed,
                metrics: r.metrics,
                consumed: r.consumed,
                checkpoint,
                buffer,
            })
        })
        .collect::<Vec<_>>();
    collect_failures(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[2.0]), (Some(2.0), None));
        assert_eq!(mean_std(&[]), (None, None));
    }

    #[test]
    fn table_headers_render() {
        let text = render_table1(&[]);
        assert!(text.starts_with("Index  Learning  Replaying  Testing  A_all"));
        assert!(text.trim_end().ends_with("Mean(b_c)"));
    }
}
