//! Decomposed classifier scores and the cross-entropy objectives built on
//! them.
//!
//! A predictor row `w_i` with bias `b_i` scores a feature `h` either as a
//! dot product `w_i·h + b_i` or as a scaled cosine `γ·cos(w_i, h)`. All
//! gradients here are closed-form; the cosine path uses
//! `∂cos(w,h)/∂w = (h/‖h‖ − cos(w,h)·w/‖w‖) / ‖w‖` and, by symmetry of the
//! cosine, the same expression with `w` and `h` swapped for `∂/∂h`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result, Shape};
use crate::net::ParamGrad;
use crate::numeric::{dot, norm, DenseMatrix, DenseVector};

/// Floor applied to vector norms inside cosine similarities.
pub const NORM_FLOOR: f64 = 1e-12;

/// Final linear layer: one weight row and one bias per observed class.
///
/// Classes are appended in the order they are first observed and never
/// reordered.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorParams {
    weight: DenseMatrix,
    bias: DenseVector,
}

impl PredictorParams {
    /// Predictor over `feature_dim`-wide features with no classes yet.
    pub fn new(feature_dim: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(0, feature_dim),
            bias: DenseVector::zeros(0),
        }
    }

    /// Wraps an existing `C × d` weight and length-`C` bias.
    pub fn from_parts(weight: DenseMatrix, bias: DenseVector) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::DimensionMismatch {
                op: "predictor",
                left: weight.shape(),
                right: Shape::vector(bias.len()),
            });
        }
        Ok(Self { weight, bias })
    }

    /// Number of classes `C`.
    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    /// Feature width `d`.
    pub fn feature_dim(&self) -> usize {
        self.weight.cols()
    }

    /// `C × d` weight matrix; row `i` is `w_i`.
    pub fn weight(&self) -> &DenseMatrix {
        &self.weight
    }

    /// Biases `b_i`.
    pub fn bias(&self) -> &DenseVector {
        &self.bias
    }

    /// Appends a class with weight row `row` and bias `bias`.
    pub fn push_class(&mut self, row: &[f64], bias: f64) -> Result<()> {
        if !bias.is_finite() {
            return Err(Error::NonFinite("predictor bias"));
        }
        self.weight.push_row(row)?;
        self.bias.push(bias);
        Ok(())
    }

    pub(crate) fn apply_update(&mut self, scale: f64, grad: &ParamGrad) {
        self.weight.axpy(scale, &grad.weight);
        self.bias.axpy(scale, &grad.bias);
    }

    fn check_feature(&self, op: &'static str, h: &DenseVector) -> Result<()> {
        if h.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.weight.shape(),
                right: Shape::vector(h.len()),
            });
        }
        Ok(())
    }
}

/// How a predictor row scores a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LogitMode {
    /// `w·h + b`: norm and angle factors together.
    Dot,
    /// `γ·cos(w, h)`: angle factor only.
    Cosine,
}

/// Objective applied to a batch: dot CE, cosine CE, or the `α`-weighted mix
/// `α·CE_dot + (1 − α)·CE_cos`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayMode {
    /// Cross-entropy on dot-product logits.
    Dot,
    /// Cross-entropy on cosine logits.
    Cosine,
    /// Convex mix of the two, weight `α` on the dot-product term.
    Mixed(f64),
}

impl ReplayMode {
    /// Checks `0 ≤ α ≤ 1` for the mixed objective.
    pub fn validate(self) -> Result<Self> {
        if let ReplayMode::Mixed(alpha) = self {
            check_alpha(alpha)?;
        }
        Ok(self)
    }

    /// Weights `(dot, cosine)` given to the two cross-entropies.
    pub fn weights(self) -> (f64, f64) {
        match self {
            ReplayMode::Dot => (1.0, 0.0),
            ReplayMode::Cosine => (0.0, 1.0),
            ReplayMode::Mixed(alpha) => (alpha, 1.0 - alpha),
        }
    }
}

impl From<LogitMode> for ReplayMode {
    fn from(mode: LogitMode) -> Self {
        match mode {
            LogitMode::Dot => ReplayMode::Dot,
            LogitMode::Cosine => ReplayMode::Cosine,
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha out of [0,1]: {alpha}")));
    }
    Ok(())
}

/// Scale `γ` multiplying cosine logits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineScale(f64);

impl CosineScale {
    /// Customary value of `γ`.
    pub const DEFAULT: f64 = 10.0;

    /// `γ`, which must be positive and finite.
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self(gamma))
    }

    /// The value of `γ`.
    pub fn gamma(self) -> f64 {
        self.0
    }
}

impl Default for CosineScale {
    fn default() -> Self {
        Self(Self::DEFAULT)
    }
}

/// Softmax output over the observed classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilities(DenseVector);

impl ClassProbabilities {
    /// Probabilities, one per class.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Number of classes.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when there are no classes.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(self.as_slice())
    }
}

/// `result[i] = w_i·h + b_i`.
pub fn dot_logits(pp: &PredictorParams, h: &DenseVector) -> Result<DenseVector> {
    pp.check_feature("dot_logits", h)?;
    let mut z = pp.weight.matvec(h)?;
    z.axpy(1.0, &pp.bias);
    Ok(z)
}

/// `result[i] = γ·(w_i·h) / (max(‖w_i‖, ε)·max(‖h‖, ε))`.
pub fn cosine_logits(
    pp: &PredictorParams,
    h: &DenseVector,
    scale: CosineScale,
) -> Result<DenseVector> {
    pp.check_feature("cosine_logits", h)?;
    let nh = norm(h.as_slice()).max(NORM_FLOOR);
    let data = (0..pp.num_classes())
        .map(|i| {
            let w = pp.weight.row(i);
            let c = dot(w, h.as_slice()) / (norm(w).max(NORM_FLOOR) * nh);
            scale.gamma() * c.clamp(-1.0, 1.0)
        })
        .collect();
    Ok(DenseVector::from_vec_unchecked(data))
}

/// Logits under `mode`.
pub fn logits(
    pp: &PredictorParams,
    h: &DenseVector,
    mode: LogitMode,
    scale: CosineScale,
) -> Result<DenseVector> {
    match mode {
        LogitMode::Dot => dot_logits(pp, h),
        LogitMode::Cosine => cosine_logits(pp, h, scale),
    }
}

/// Max-shifted softmax.
pub fn softmax(logits: &DenseVector) -> ClassProbabilities {
    let z = logits.as_slice();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = z.iter().map(|&v| libm::exp(v - max)).collect();
    let sum: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= sum);
    ClassProbabilities(DenseVector::from_vec_unchecked(e))
}

/// `−ln p[y]`.
pub fn cross_entropy(p: &ClassProbabilities, y: usize) -> Result<f64> {
    let py = *p.as_slice().get(y).ok_or(Error::ClassOutOfRange {
        index: y,
        classes: p.len(),
    })?;
    Ok(-libm::log(py.max(f64::MIN_POSITIVE)))
}

/// Cross-entropy computed from logits in log-sum-exp form.
fn cross_entropy_from_logits(z: &DenseVector, y: usize) -> f64 {
    let s = z.as_slice();
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(s.iter().map(|&v| libm::exp(v - max)).sum::<f64>());
    lse - s[y]
}

/// `∂cos(w, h)/∂w = (h/‖h‖ − cos(w, h)·w/‖w‖) / ‖w‖`.
///
/// Norms are floored at [`NORM_FLOOR`]; a floored norm is treated as a
/// constant, which drops the corresponding radial term.
pub fn angular_gradient(w: &DenseVector, h: &DenseVector) -> DenseVector {
    DenseVector::from_vec_unchecked(angle_grad(w.as_slice(), h.as_slice()))
}

fn angle_grad(w: &[f64], h: &[f64]) -> Vec<f64> {
    let (rw, rh) = (norm(w), norm(h));
    let (nw, nh) = (rw.max(NORM_FLOOR), rh.max(NORM_FLOOR));
    let cos = dot(w, h) / (nw * nh);
    let radial = if rw > NORM_FLOOR { cos / nw } else { 0.0 };
    w.iter()
        .zip(h)
        .map(|(&wi, &hi)| (hi / nh - radial * wi) / nw)
        .collect()
}

fn check_grad_shape(pp: &PredictorParams, grad: &ParamGrad) -> Result<()> {
    if grad.weight.shape() != pp.weight.shape() {
        return Err(Error::DimensionMismatch {
            op: "predictor gradient",
            left: pp.weight.shape(),
            right: grad.weight.shape(),
        });
    }
    Ok(())
}

fn check_sample(
    pp: &PredictorParams,
    p: &ClassProbabilities,
    h: &DenseVector,
    y: usize,
) -> Result<()> {
    pp.check_feature("predictor gradient", h)?;
    if p.len() != pp.num_classes() {
        return Err(Error::DimensionMismatch {
            op: "predictor gradient",
            left: pp.weight.shape(),
            right: Shape::vector(p.len()),
        });
    }
    if y >= p.len() {
        return Err(Error::ClassOutOfRange {
            index: y,
            classes: p.len(),
        });
    }
    Ok(())
}

/// Accumulates `weight·∂CE/∂(W, b)` for dot-product logits into `grad` and
/// returns `weight·∂CE/∂h`.
///
/// With `δ_j = p_j − [j = y]`: `∂/∂w_j = δ_j·h`, `∂/∂b_j = δ_j` and
/// `∂/∂h = Σ_j δ_j·w_j`.
pub fn predictor_grad_dot(
    p: &ClassProbabilities,
    h: &DenseVector,
    pp: &PredictorParams,
    y: usize,
    weight: f64,
    grad: &mut ParamGrad,
) -> Result<DenseVector> {
    check_sample(pp, p, h, y)?;
    check_grad_shape(pp, grad)?;
    let mut dh = DenseVector::zeros(h.len());
    for (j, &pj) in p.as_slice().iter().enumerate() {
        let delta = weight * (pj - if j == y { 1.0 } else { 0.0 });
        crate::numeric::axpy(grad.weight.row_mut(j), delta, h.as_slice());
        grad.bias[j] += delta;
        crate::numeric::axpy(dh.as_mut_slice(), delta, pp.weight.row(j));
    }
    Ok(dh)
}

/// Accumulates `weight·∂CE/∂W` for cosine logits into `grad` and returns
/// `weight·∂CE/∂h`.
///
/// `∂/∂w_j = γ·δ_j·ĥ_j` with `ĥ_j` the angular gradient of `cos(w_j, h)`;
/// the bias does not enter cosine logits and receives no gradient.
pub fn predictor_grad_cos(
    p: &ClassProbabilities,
    h: &DenseVector,
    pp: &PredictorParams,
    scale: CosineScale,
    y: usize,
    weight: f64,
    grad: &mut ParamGrad,
) -> Result<DenseVector> {
    check_sample(pp, p, h, y)?;
    check_grad_shape(pp, grad)?;
    let mut dh = DenseVector::zeros(h.len());
    for (j, &pj) in p.as_slice().iter().enumerate() {
        let coef = weight * scale.gamma() * (pj - if j == y { 1.0 } else { 0.0 });
        let w = pp.weight.row(j);
        crate::numeric::axpy(grad.weight.row_mut(j), coef, &angle_grad(w, h.as_slice()));
        crate::numeric::axpy(dh.as_mut_slice(), coef, &angle_grad(h.as_slice(), w));
    }
    Ok(dh)
}

/// Loss value and gradients of a batch objective.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    /// Weighted loss.
    pub loss: f64,
    /// Gradient with respect to the predictor.
    pub predictor: ParamGrad,
    /// Gradient with respect to each sample's feature vector, in batch order.
    pub feature_grads: Vec<DenseVector>,
}

/// `Σ_n weight·(a·CE_dot + c·CE_cos)` over `batch`, where `(a, c)` are the
/// objective's weights. Terms with zero weight are still evaluated so that
/// every mode takes the same arithmetic path.
pub fn weighted_loss(
    pp: &PredictorParams,
    scale: CosineScale,
    objective: ReplayMode,
    batch: &[(DenseVector, usize)],
    weight: f64,
) -> Result<BatchLoss> {
    objective.validate()?;
    let (a_dot, a_cos) = objective.weights();
    let mut out = BatchLoss {
        loss: 0.0,
        predictor: ParamGrad::zeros(pp.num_classes(), pp.feature_dim()),
        feature_grads: Vec::with_capacity(batch.len()),
    };
    for (h, y) in batch {
        let (h, y) = (h, *y);
        if y >= pp.num_classes() {
            return Err(Error::ClassOutOfRange {
                index: y,
                classes: pp.num_classes(),
            });
        }
        let mut dh = DenseVector::zeros(h.len());
        if objective != ReplayMode::Cosine {
            let z = dot_logits(pp, h)?;
            out.loss += weight * a_dot * cross_entropy_from_logits(&z, y);
            let p = softmax(&z);
            dh.axpy(
                1.0,
                &predictor_grad_dot(&p, h, pp, y, weight * a_dot, &mut out.predictor)?,
            );
        }
        if objective != ReplayMode::Dot {
            let z = cosine_logits(pp, h, scale)?;
            out.loss += weight * a_cos * cross_entropy_from_logits(&z, y);
            let p = softmax(&z);
            dh.axpy(
                1.0,
                &predictor_grad_cos(&p, h, pp, scale, y, weight * a_cos, &mut out.predictor)?,
            );
        }
        out.feature_grads.push(dh);
    }
    Ok(out)
}

fn mean_loss(
    pp: &PredictorParams,
    scale: CosineScale,
    objective: ReplayMode,
    batch: &[(DenseVector, usize)],
) -> Result<BatchLoss> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    weighted_loss(pp, scale, objective, batch, 1.0 / batch.len() as f64)
}

/// Mean dot-product cross-entropy over `batch`.
pub fn loss_dot(pp: &PredictorParams, batch: &[(DenseVector, usize)]) -> Result<BatchLoss> {
    mean_loss(pp, CosineScale::default(), ReplayMode::Dot, batch)
}

/// Mean cosine cross-entropy over `batch`, the learning objective for
/// current samples.
pub fn loss_current(
    pp: &PredictorParams,
    scale: CosineScale,
    batch: &[(DenseVector, usize)],
) -> Result<BatchLoss> {
    mean_loss(pp, scale, ReplayMode::Cosine, batch)
}

/// Mean of `α·CE_dot + (1 − α)·CE_cos` over `batch`, the replay objective.
pub fn loss_replay(
    pp: &PredictorParams,
    scale: CosineScale,
    alpha: f64,
    batch: &[(DenseVector, usize)],
) -> Result<BatchLoss> {
    check_alpha(alpha)?;
    mean_loss(pp, scale, ReplayMode::Mixed(alpha), batch)
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predicted class: argmax of the dot-product logits.
pub fn predict(pp: &PredictorParams, h: &DenseVector) -> Result<usize> {
    Ok(argmax(dot_logits(pp, h)?.as_slice()))
}

/// Predicted class under an arbitrary scoring mode.
pub fn predict_with(
    pp: &PredictorParams,
    h: &DenseVector,
    mode: LogitMode,
    scale: CosineScale,
) -> Result<usize> {
    Ok(argmax(logits(pp, h, mode, scale)?.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::from(x)
    }

    fn pp(rows: &[&[f64]], b: &[f64]) -> PredictorParams {
        PredictorParams::from_parts(DenseMatrix::from_rows(rows).unwrap(), v(b)).unwrap()
    }

    #[test]
    fn dot_logit_examples() {
        let p = pp(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.5, -0.5]);
        assert_eq!(dot_logits(&p, &v(&[2.0, 3.0])).unwrap(), v(&[2.5, 2.5]));
        assert_eq!(dot_logits(&p, &v(&[0.0, 0.0])).unwrap(), v(&[0.5, -0.5]));
        let z1 = dot_logits(&p, &v(&[1.0, -2.0])).unwrap();
        let z2 = dot_logits(&p, &v(&[2.0, -4.0])).unwrap();
        for i in 0..2 {
            assert!(((z2[i] - p.bias()[i]) - 2.0 * (z1[i] - p.bias()[i])).abs() < 1e-15);
        }
        assert!(dot_logits(&p, &v(&[1.0])).is_err());
    }

    #[test]
    fn cosine_logit_examples() {
        let s = CosineScale::default();
        let p = pp(&[&[3.0, 0.0]], &[0.0]);
        assert_eq!(cosine_logits(&p, &v(&[0.0, 5.0]), s).unwrap()[0], 0.0);
        let p = pp(&[&[1.0, 0.0]], &[0.0]);
        let z = cosine_logits(&p, &v(&[1.0, 1.0]), s).unwrap()[0];
        assert!((z - 10.0 / libm::sqrt(2.0)).abs() < 1e-12);
        let p = pp(&[&[1.0, 2.0], &[-0.5, 0.3]], &[0.1, 0.2]);
        let a = cosine_logits(&p, &v(&[0.7, 0.2]), s).unwrap();
        let b = cosine_logits(&p, &v(&[1.4, 0.4]), s).unwrap();
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_logits_stay_finite_for_zero_vectors() {
        let p = pp(&[&[0.0, 0.0], &[1.0, 0.0]], &[0.0, 0.0]);
        let z = cosine_logits(&p, &v(&[0.0, 0.0]), CosineScale::default()).unwrap();
        assert_eq!(z, v(&[0.0, 0.0]));
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&v(&[0.0, 0.0]));
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
        let p = softmax(&v(&[libm::log(2.0), 0.0]));
        assert!((p.as_slice()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.as_slice()[1] - 1.0 / 3.0).abs() < 1e-15);
        let a = softmax(&v(&[0.3, -1.2, 2.0]));
        let b = softmax(&v(&[100.3, 98.8, 102.0]));
        for i in 0..3 {
            assert!((a.as_slice()[i] - b.as_slice()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        let p = softmax(&v(&[0.0, 0.0]));
        assert!((cross_entropy(&p, 0).unwrap() - libm::log(2.0)).abs() < 1e-15);
        let sure = softmax(&v(&[50.0, 0.0]));
        assert!(cross_entropy(&sure, 0).unwrap() < 1e-20);
        let uniform = softmax(&v(&[1.0; 7]));
        assert!((cross_entropy(&uniform, 3).unwrap() - libm::log(7.0)).abs() < 1e-12);
        assert_eq!(
            cross_entropy(&p, 2),
            Err(Error::ClassOutOfRange {
                index: 2,
                classes: 2
            })
        );
    }

    #[test]
    fn grad_dot_example() {
        let p_params = pp(&[&[0.0, 0.0], &[0.0, 0.0]], &[0.0, 0.0]);
        let probs = softmax(&v(&[0.0, 0.0]));
        let mut g = ParamGrad::zeros(2, 2);
        predictor_grad_dot(&probs, &v(&[2.0, 0.0]), &p_params, 0, 1.0, &mut g).unwrap();
        assert_eq!(g.weight.row(0), &[-1.0, 0.0]);
        assert_eq!(g.weight.row(1), &[1.0, 0.0]);
        assert_eq!(g.bias.as_slice(), &[-0.5, 0.5]);
    }

    #[test]
    fn grad_dot_vanishes_at_one_hot() {
        let p_params = pp(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0]);
        let probs = ClassProbabilities(v(&[1.0, 0.0]));
        let mut g = ParamGrad::zeros(2, 2);
        let dh = predictor_grad_dot(&probs, &v(&[2.0, 1.0]), &p_params, 0, 1.0, &mut g).unwrap();
        assert!(g.is_zero());
        assert_eq!(dh, v(&[0.0, 0.0]));
    }

    #[test]
    fn angular_gradient_examples() {
        let g = angular_gradient(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]));
        assert_eq!(g, v(&[0.0, 1.0]));
        let g = angular_gradient(&v(&[2.0, 1.0]), &v(&[4.0, 2.0]));
        assert!(g.l2_norm() < 1e-15, "{g:?}");
        let w = v(&[0.3, -1.1, 0.4]);
        let g = angular_gradient(&w, &v(&[1.0, 0.2, 0.7]));
        assert!(g.dot(&w).abs() < 1e-15);
    }

    #[test]
    fn mixed_endpoints_are_exact() {
        let p_params = pp(
            &[&[0.4, -0.2, 0.9], &[0.1, 0.8, -0.3], &[-0.5, 0.2, 0.2]],
            &[0.1, -0.2, 0.05],
        );
        let batch = vec![
            (v(&[0.3, 1.2, 0.0]), 1),
            (v(&[2.0, 0.1, 0.4]), 0),
            (v(&[0.5, 0.5, 0.5]), 2),
        ];
        let s = CosineScale::default();
        let dot = loss_dot(&p_params, &batch).unwrap();
        let cos = loss_current(&p_params, s, &batch).unwrap();
        assert_eq!(loss_replay(&p_params, s, 1.0, &batch).unwrap(), dot);
        assert_eq!(loss_replay(&p_params, s, 0.0, &batch).unwrap(), cos);
        let half = loss_replay(&p_params, s, 0.5, &batch).unwrap();
        assert!((half.loss - 0.5 * (dot.loss + cos.loss)).abs() < 1e-12);
    }

    #[test]
    fn loss_current_closed_form() {
        let p_params = pp(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0]);
        let one = vec![(v(&[3.0, 0.0]), 0)];
        let l = loss_current(&p_params, CosineScale::default(), &one)
            .unwrap()
            .loss;
        let expected = -libm::log(libm::exp(10.0) / (libm::exp(10.0) + 1.0));
        assert!((l - expected).abs() < 1e-15);
        assert!((l - 4.54e-5).abs() < 1e-7);
        let two = vec![one[0].clone(), one[0].clone()];
        let l2 = loss_current(&p_params, CosineScale::default(), &two)
            .unwrap()
            .loss;
        assert!((l - l2).abs() < 1e-15);
    }

    #[test]
    fn loss_argument_checks() {
        let p_params = pp(&[&[1.0, 0.0]], &[0.0]);
        let s = CosineScale::default();
        assert_eq!(loss_current(&p_params, s, &[]), Err(Error::EmptyBatch));
        assert!(loss_replay(&p_params, s, 1.5, &[(v(&[1.0, 0.0]), 0)]).is_err());
        assert!(loss_replay(&p_params, s, -0.1, &[(v(&[1.0, 0.0]), 0)]).is_err());
        assert!(loss_dot(&p_params, &[(v(&[1.0, 0.0]), 3)]).is_err());
        assert!(CosineScale::new(0.0).is_err());
    }

    #[test]
    fn predict_examples() {
        let p_params = pp(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.5, -0.5]);
        assert_eq!(predict(&p_params, &v(&[2.0, 3.0])).unwrap(), 0);
        assert_eq!(argmax(&[1.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[2.5, 2.5]), 0);
    }

    #[test]
    fn predictor_growth_is_append_only() {
        let mut p_params = pp(&[&[1.0, 2.0]], &[0.3]);
        let h = v(&[0.5, 0.25]);
        let before = dot_logits(&p_params, &h).unwrap();
        p_params.push_class(&[-1.0, 4.0], 0.0).unwrap();
        let after = dot_logits(&p_params, &h).unwrap();
        assert_eq!(after[0], before[0]);
        assert!(p_params.push_class(&[1.0], 0.0).is_err());
    }
}
