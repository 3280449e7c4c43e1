//! ReLU multilayer perceptron used as the feature extractor, with a hand
//! written backward pass and plain SGD.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result, Shape};
use crate::logits::PredictorParams;
use crate::numeric::{DenseMatrix, DenseVector, Rng};

/// Weight (`out × in`) and bias (`out`) of one affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `out × in` weight matrix.
    pub weight: DenseMatrix,
    /// Bias, one entry per output unit.
    pub bias: DenseVector,
}

impl LayerParams {
    /// Checks `weight.rows == bias.len`.
    pub fn new(weight: DenseMatrix, bias: DenseVector) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::DimensionMismatch {
                op: "layer",
                left: weight.shape(),
                right: Shape::vector(bias.len()),
            });
        }
        Ok(Self { weight, bias })
    }

    /// Input width.
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    /// Output width.
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Half-width of the uniform initialisation range for a layer.
pub fn init_bound(fan_in: usize, fan_out: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in + fan_out) as f64)
}

/// Stack of affine layers, each followed by ReLU (the last one included),
/// so features are always element-wise non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    layers: Vec<LayerParams>,
}

/// Per-layer inputs and pre-activations recorded by [`FeatureExtractor::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<DenseVector>,
    pre_activations: Vec<DenseVector>,
}

impl FeatureExtractor {
    /// Random extractor with layer widths `dims`.
    ///
    /// Weights are uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(dims: &[usize], rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(invalid(
                "extractor needs at least an input and an output width",
            ));
        }
        if dims.contains(&0) {
            return Err(invalid(format!(
                "extractor widths must be positive, got {dims:?}"
            )));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let s = init_bound(fan_in, fan_out);
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform(-s, s))
                .collect::<Result<Vec<_>>>()?;
            layers.push(LayerParams {
                weight: DenseMatrix::from_vec(fan_out, fan_in, data)?,
                bias: DenseVector::zeros(fan_out),
            });
        }
        Ok(Self { layers })
    }

    /// Wraps explicit layers, checking that consecutive widths chain.
    pub fn from_layers(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("extractor needs at least one layer"));
        }
        for l in &layers {
            if l.weight.rows() != l.bias.len() {
                return Err(Error::DimensionMismatch {
                    op: "layer",
                    left: l.weight.shape(),
                    right: Shape::vector(l.bias.len()),
                });
            }
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimensionMismatch {
                    op: "layer chain",
                    left: pair[0].weight.shape(),
                    right: pair[1].weight.shape(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// The layers, input side first.
    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    /// Width of the raw input.
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    /// Width of the feature vector `h`.
    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// `h = ReLU(W_L · … ReLU(W_1 x + b_1) … + b_L)`.
    pub fn forward(&self, x: &DenseVector) -> Result<(DenseVector, ForwardCache)> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                op: "forward",
                left: self.layers[0].weight.shape(),
                right: Shape::vector(x.len()),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for layer in &self.layers {
            let mut z = layer.weight.matvec(&a)?;
            z.axpy(1.0, &layer.bias);
            let out = relu(&z);
            inputs.push(a);
            pre_activations.push(z);
            a = out;
        }
        Ok((
            a,
            ForwardCache {
                inputs,
                pre_activations,
            },
        ))
    }

    /// Features only.
    pub fn features(&self, x: &DenseVector) -> Result<DenseVector> {
        self.forward(x).map(|(h, _)| h)
    }

    /// Accumulates `∂L/∂θ` for every layer into `tape` and returns `∂L/∂x`.
    ///
    /// ReLU's derivative at exactly zero is taken as 0.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dl_dh: &DenseVector,
        tape: &mut GradientTape,
    ) -> Result<DenseVector> {
        if cache.inputs.len() != self.layers.len() || tape.layers.len() != self.layers.len() {
            return Err(invalid(
                "forward cache or tape does not match this extractor",
            ));
        }
        if dl_dh.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                op: "backward",
                left: Shape::vector(self.output_dim()),
                right: Shape::vector(dl_dh.len()),
            });
        }
        let mut upstream = dl_dh.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre_activations[k];
            let input = &cache.inputs[k];
            let grad = &mut tape.layers[k];
            if grad.weight.shape() != layer.weight.shape() || z.len() != layer.out_dim() {
                return Err(Error::DimensionMismatch {
                    op: "backward",
                    left: layer.weight.shape(),
                    right: grad.weight.shape(),
                });
            }
            let mut delta = upstream;
            for (d, &zi) in delta.as_mut_slice().iter_mut().zip(z.as_slice()) {
                if zi <= 0.0 {
                    *d = 0.0;
                }
            }
            grad.weight
                .add_outer(1.0, delta.as_slice(), input.as_slice());
            grad.bias.axpy(1.0, &delta);
            upstream = layer.weight.matvec_transposed(&delta)?;
        }
        Ok(upstream)
    }
}

fn relu(z: &DenseVector) -> DenseVector {
    let data = z
        .as_slice()
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    DenseVector::from_vec_unchecked(data)
}

/// Gradient buffer for one weight/bias pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    /// Gradient of the weight matrix.
    pub weight: DenseMatrix,
    /// Gradient of the bias vector.
    pub bias: DenseVector,
}

impl ParamGrad {
    /// Zero gradient for a `rows × cols` weight and `rows` bias.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(rows, cols),
            bias: DenseVector::zeros(rows),
        }
    }

    /// `self += scale · other`.
    pub fn axpy(&mut self, scale: f64, other: &ParamGrad) {
        self.weight.axpy(scale, &other.weight);
        self.bias.axpy(scale, &other.bias);
    }

    /// Resets to zero.
    pub fn fill_zero(&mut self) {
        self.weight.fill_zero();
        self.bias.fill_zero();
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.weight
            .as_slice()
            .iter()
            .chain(self.bias.as_slice())
            .all(|&v| v == 0.0)
    }
}

/// Gradient buffers mirroring an extractor and a predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    /// One entry per extractor layer.
    pub layers: Vec<ParamGrad>,
    /// Predictor `W` and `b`.
    pub predictor: ParamGrad,
}

impl GradientTape {
    /// Zero tape shaped like `extractor` and `predictor`.
    pub fn for_params(extractor: &FeatureExtractor, predictor: &PredictorParams) -> Self {
        Self {
            layers: extractor
                .layers
                .iter()
                .map(|l| ParamGrad::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            predictor: ParamGrad::zeros(predictor.num_classes(), predictor.feature_dim()),
        }
    }

    /// Resets every buffer to zero.
    pub fn zero(&mut self) {
        self.layers.iter_mut().for_each(ParamGrad::fill_zero);
        self.predictor.fill_zero();
    }

    /// True when every buffer is zero.
    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(ParamGrad::is_zero) && self.predictor.is_zero()
    }
}

/// One descent step `p ← p − lr · ∂L/∂p` over extractor and predictor, then
/// zeroes the tape.
pub fn sgd_step(
    extractor: &mut FeatureExtractor,
    predictor: &mut PredictorParams,
    tape: &mut GradientTape,
    lr: f64,
) -> Result<()> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(invalid(format!("learning rate must be positive, got {lr}")));
    }
    if tape.layers.len() != extractor.layers.len() {
        return Err(invalid("tape does not mirror the extractor"));
    }
    for (layer, grad) in extractor.layers.iter().zip(&tape.layers) {
        if layer.weight.shape() != grad.weight.shape() {
            return Err(Error::DimensionMismatch {
                op: "sgd_step",
                left: layer.weight.shape(),
                right: grad.weight.shape(),
            });
        }
    }
    if predictor.weight().shape() != tape.predictor.weight.shape() {
        return Err(Error::DimensionMismatch {
            op: "sgd_step",
            left: predictor.weight().shape(),
            right: tape.predictor.weight.shape(),
        });
    }
    for (layer, grad) in extractor.layers.iter_mut().zip(&tape.layers) {
        layer.weight.axpy(-lr, &grad.weight);
        layer.bias.axpy(-lr, &grad.bias);
    }
    predictor.apply_update(-lr, &tape.predictor);
    tape.zero();
    Ok(())
}
