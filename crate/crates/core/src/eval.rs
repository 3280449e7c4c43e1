//! Accuracy, average accuracy and predictor bias diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::logits::{logits, predict_with, softmax, CosineScale, LogitMode, PredictorParams};
use crate::stream::{Sample, Stage};
use crate::trainer::TrainState;

/// Fraction of `test` whose prediction under `mode` equals the label.
///
/// Samples of unregistered classes count as errors; an empty set scores 0.
pub fn accuracy(
    state: &TrainState,
    test: &[Sample],
    mode: LogitMode,
    scale: CosineScale,
) -> Result<f64> {
    if test.is_empty() || state.predictor.num_classes() == 0 {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for s in test {
        let h = state.extractor.features(&s.x)?;
        let row = predict_with(&state.predictor, &h, mode, scale)?;
        if state.classes()[row] == s.y {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// `A_i = (1/i)·Σ_j a_{i,j}`.
pub fn average_accuracy(row: &[f64]) -> Result<f64> {
    if row.is_empty() {
        return Err(invalid("average accuracy of an empty row"));
    }
    Ok(row.iter().sum::<f64>() / row.len() as f64)
}

/// Predictor statistics for one class group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    /// Mean `‖w_i‖` over the group.
    pub norm: f64,
    /// Mean of every weight entry in the group's rows.
    pub mean_weight: f64,
    /// Population standard deviation of those entries.
    pub std_weight: f64,
    /// Mean bias.
    pub mean_bias: f64,
    /// `Σ_i ‖w_i − w_i⁰‖₁ + |b_i − b_i⁰|` against the baseline.
    pub change: f64,
}

/// Statistics for the previous and current class groups; a group with no
/// rows reports `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasDiagnostics {
    /// Classes introduced before the current stage.
    pub previous: Option<GroupStats>,
    /// Classes introduced by the current stage.
    pub current: Option<GroupStats>,
}

fn group_stats(
    predictor: &PredictorParams,
    rows: &[usize],
    baseline: &PredictorParams,
) -> Option<GroupStats> {
    if rows.is_empty() {
        return None;
    }
    let w = predictor.weight();
    let n = rows.len() as f64;
    let norm = rows
        .iter()
        .map(|&r| crate::numeric::norm(w.row(r)))
        .sum::<f64>()
        / n;
    let entries: Vec<f64> = rows
        .iter()
        .flat_map(|&r| w.row(r).iter().copied())
        .collect();
    let mean_weight = entries.iter().sum::<f64>() / entries.len() as f64;
    let var = entries
        .iter()
        .map(|v| (v - mean_weight) * (v - mean_weight))
        .sum::<f64>()
        / entries.len() as f64;
    let mean_bias = rows.iter().map(|&r| predictor.bias()[r]).sum::<f64>() / n;
    let change = rows
        .iter()
        .map(|&r| {
            let dw: f64 = w
                .row(r)
                .iter()
                .zip(baseline.weight().row(r))
                .map(|(a, b)| (a - b).abs())
                .sum();
            dw + (predictor.bias()[r] - baseline.bias()[r]).abs()
        })
        .sum();
    Some(GroupStats {
        norm,
        mean_weight,
        std_weight: libm::sqrt(var),
        mean_bias,
        change,
    })
}

/// Norm, weight, bias and accumulated-change statistics for predictor rows
/// `previous` and `current`, measured against `baseline`.
pub fn bias_diagnostics(
    predictor: &PredictorParams,
    previous: &[usize],
    current: &[usize],
    baseline: &PredictorParams,
) -> Result<BiasDiagnostics> {
    let c = predictor.num_classes();
    if baseline.weight().shape() != predictor.weight().shape() {
        return Err(Error::DimensionMismatch {
            op: "bias_diagnostics",
            left: predictor.weight().shape(),
            right: baseline.weight().shape(),
        });
    }
    if let Some(&bad) = previous.iter().chain(current).find(|&&r| r >= c) {
        return Err(Error::ClassOutOfRange {
            index: bad,
            classes: c,
        });
    }
    if previous.iter().any(|r| current.contains(r)) {
        return Err(invalid("previous and current class groups overlap"));
    }
    Ok(BiasDiagnostics {
        previous: group_stats(predictor, previous, baseline),
        current: group_stats(predictor, current, baseline),
    })
}

/// Mean softmax vector (predictor-row order) over `test` under `mode`.
pub fn average_posterior(
    state: &TrainState,
    test: &[Sample],
    mode: LogitMode,
    scale: CosineScale,
) -> Result<Vec<f64>> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut acc = vec![0.0; state.predictor.num_classes()];
    for s in test {
        let h = state.extractor.features(&s.x)?;
        let p = softmax(&logits(&state.predictor, &h, mode, scale)?);
        acc.iter_mut()
            .zip(p.as_slice())
            .for_each(|(a, &pi)| *a += pi);
    }
    let n = test.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Everything recorded after stage `t`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageMetrics {
    /// 1-based stage number `t`.
    pub stage: usize,
    /// Labels in predictor-row order (indexes `avg_posterior`).
    pub classes: Vec<usize>,
    /// `a_{t,j}` for `j = 1..=t`.
    pub accuracy_matrix_row: Vec<f64>,
    /// `A_t`, the mean of `accuracy_matrix_row`.
    #[cfg_attr(feature = "serde", serde(rename = "A_t"))]
    pub average_accuracy: f64,
    /// Accuracy pooled over the test samples of stages before `t`.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub acc_previous: Option<f64>,
    /// `a_{t,t}`.
    pub acc_current: f64,
    /// Mean row norm of previous classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub norm_prev: Option<f64>,
    /// Mean row norm of current classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub norm_curr: Option<f64>,
    /// Mean weight entry of previous classes.
    #[cfg_attr(
        feature = "serde",
        serde(
            rename = "mean_W_prev",
            default,
            skip_serializing_if = "Option::is_none"
        )
    )]
    pub mean_w_prev: Option<f64>,
    /// Standard deviation of previous-class weight entries.
    #[cfg_attr(
        feature = "serde",
        serde(
            rename = "std_W_prev",
            default,
            skip_serializing_if = "Option::is_none"
        )
    )]
    pub std_w_prev: Option<f64>,
    /// Mean weight entry of current classes.
    #[cfg_attr(
        feature = "serde",
        serde(
            rename = "mean_W_curr",
            default,
            skip_serializing_if = "Option::is_none"
        )
    )]
    pub mean_w_curr: Option<f64>,
    /// Standard deviation of current-class weight entries.
    #[cfg_attr(
        feature = "serde",
        serde(
            rename = "std_W_curr",
            default,
            skip_serializing_if = "Option::is_none"
        )
    )]
    pub std_w_curr: Option<f64>,
    /// Mean bias of previous classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub mean_b_prev: Option<f64>,
    /// Mean bias of current classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub mean_b_curr: Option<f64>,
    /// L1 change of the whole predictor since the stage began.
    pub accumulated_param_change: f64,
    /// Change restricted to previous classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub accumulated_param_change_prev: Option<f64>,
    /// Change restricted to current classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub accumulated_param_change_curr: Option<f64>,
    /// Mean probability per class over all test samples seen so far.
    pub avg_posterior: Vec<f64>,
    /// Mean of `avg_posterior` over previous classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub posterior_prev: Option<f64>,
    /// Mean of `avg_posterior` over current classes.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub posterior_curr: Option<f64>,
}

impl StageMetrics {
    /// `|posterior_curr − posterior_prev|`, when both groups exist.
    pub fn posterior_gap(&self) -> Option<f64> {
        Some((self.posterior_curr? - self.posterior_prev?).abs())
    }
}

fn mean_at(values: &[f64], rows: &[usize]) -> Option<f64> {
    (!rows.is_empty()).then(|| rows.iter().map(|&r| values[r]).sum::<f64>() / rows.len() as f64)
}

/// Evaluates `state` after the last of `stages`, all earlier ones counting
/// as previous.
pub fn stage_metrics(
    state: &TrainState,
    stages: &[Stage],
    mode: LogitMode,
    scale: CosineScale,
) -> Result<StageMetrics> {
    let (current, previous) = stages
        .split_last()
        .ok_or_else(|| invalid("no stages to evaluate"))?;
    let accuracy_matrix_row = stages
        .iter()
        .map(|s| accuracy(state, &s.test, mode, scale))
        .collect::<Result<Vec<_>>>()?;
    let average_accuracy = average_accuracy(&accuracy_matrix_row)?;
    let prev_test: Vec<Sample> = previous
        .iter()
        .flat_map(|s| s.test.iter().cloned())
        .collect();
    let acc_previous = if previous.is_empty() {
        None
    } else {
        Some(accuracy(state, &prev_test, mode, scale)?)
    };

    let rows = |classes: &mut dyn Iterator<Item = &usize>| -> Vec<usize> {
        classes.filter_map(|&c| state.row_of(c)).collect()
    };
    let prev_rows = rows(&mut previous.iter().flat_map(|s| s.classes.iter()));
    let curr_rows = rows(&mut current.classes.iter());
    let diag = bias_diagnostics(&state.predictor, &prev_rows, &curr_rows, state.baseline())?;
    let total_change = group_stats(
        &state.predictor,
        &(0..state.predictor.num_classes()).collect::<Vec<_>>(),
        state.baseline(),
    )
    .map_or(0.0, |g| g.change);

    let all_test: Vec<Sample> = stages.iter().flat_map(|s| s.test.iter().cloned()).collect();
    let avg_posterior = if all_test.is_empty() {
        vec![0.0; state.predictor.num_classes()]
    } else {
        average_posterior(state, &all_test, mode, scale)?
    };

    let (p, c) = (diag.previous, diag.current);
    Ok(StageMetrics {
        stage: stages.len(),
        classes: state.classes().to_vec(),
        accuracy_matrix_row,
        average_accuracy,
        acc_previous,
        acc_current: accuracy(state, &current.test, mode, scale)?,
        norm_prev: p.map(|g| g.norm),
        norm_curr: c.map(|g| g.norm),
        mean_w_prev: p.map(|g| g.mean_weight),
        std_w_prev: p.map(|g| g.std_weight),
        mean_w_curr: c.map(|g| g.mean_weight),
        std_w_curr: c.map(|g| g.std_weight),
        mean_b_prev: p.map(|g| g.mean_bias),
        mean_b_curr: c.map(|g| g.mean_bias),
        accumulated_param_change: total_change,
        accumulated_param_change_prev: p.map(|g| g.change),
        accumulated_param_change_curr: c.map(|g| g.change),
        posterior_prev: mean_at(&avg_posterior, &prev_rows),
        posterior_curr: mean_at(&avg_posterior, &curr_rows),
        avg_posterior,
    })
}
