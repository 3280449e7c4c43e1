//! Analytic gradients against central finite differences.

use proptest::prelude::{prop_assert, proptest, ProptestConfig};
use uer_core::logits::{
    cosine_logits, cross_entropy, dot_logits, loss_current, loss_dot, loss_replay,
    predictor_grad_cos, predictor_grad_dot, softmax,
};
use uer_core::{
    backprop, CosineScale, DenseMatrix, DenseVector, FeatureExtractor, GradientTape, LayerParams,
    ParamGrad, PredictorParams, ReplayMode, Rng,
};

const STEP: f64 = 1e-6;

fn uniform(rng: &mut Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(lo, hi).unwrap()).collect()
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-8)
}

fn central(f: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    (0..at.len())
        .map(|i| {
            let (mut up, mut down) = (at.to_vec(), at.to_vec());
            up[i] += STEP;
            down[i] -= STEP;
            (f(&up) - f(&down)) / (2.0 * STEP)
        })
        .collect()
}

fn predictor(rng: &mut Rng, classes: usize, d: usize) -> PredictorParams {
    let w = DenseMatrix::from_vec(classes, d, uniform(rng, classes * d, -1.0, 1.0)).unwrap();
    PredictorParams::from_parts(
        w,
        DenseVector::from_vec(uniform(rng, classes, -0.5, 0.5)).unwrap(),
    )
    .unwrap()
}

#[test]
fn dot_predictor_gradient_matches_differences() {
    let mut rng = Rng::new(11);
    for _ in 0..50 {
        let (c, d) = (2 + rng.below(4) as usize, 1 + rng.below(8) as usize);
        let pp = predictor(&mut rng, c, d);
        let h = DenseVector::from_vec(uniform(&mut rng, d, -2.0, 2.0)).unwrap();
        let y = rng.below(c as u64) as usize;
        let mut g = ParamGrad::zeros(c, d);
        let p = softmax(&dot_logits(&pp, &h).unwrap());
        let dh = predictor_grad_dot(&p, &h, &pp, y, 1.0, &mut g).unwrap();

        let loss_w = |w: &[f64]| {
            let q = PredictorParams::from_parts(
                DenseMatrix::from_vec(c, d, w.to_vec()).unwrap(),
                pp.bias().clone(),
            );
            cross_entropy(&softmax(&dot_logits(&q.unwrap(), &h).unwrap()), y).unwrap()
        };
        let loss_b = |b: &[f64]| {
            let q = PredictorParams::from_parts(pp.weight().clone(), DenseVector::from(b)).unwrap();
            cross_entropy(&softmax(&dot_logits(&q, &h).unwrap()), y).unwrap()
        };
        let loss_h = |v: &[f64]| {
            cross_entropy(
                &softmax(&dot_logits(&pp, &DenseVector::from(v)).unwrap()),
                y,
            )
            .unwrap()
        };
        assert!(
            rel_error(
                g.weight.as_slice(),
                &central(loss_w, pp.weight().as_slice())
            ) < 1e-5
        );
        assert!(rel_error(g.bias.as_slice(), &central(loss_b, pp.bias().as_slice())) < 1e-5);
        assert!(rel_error(dh.as_slice(), &central(loss_h, h.as_slice())) < 1e-5);
    }
}

#[test]
fn cosine_predictor_gradient_matches_differences() {
    let mut rng = Rng::new(12);
    let scale = CosineScale::new(10.0).unwrap();
    for _ in 0..50 {
        let (c, d) = (2 + rng.below(4) as usize, 2 + rng.below(7) as usize);
        let pp = predictor(&mut rng, c, d);
        let h = DenseVector::from_vec(uniform(&mut rng, d, -2.0, 2.0)).unwrap();
        let y = rng.below(c as u64) as usize;
        let mut g = ParamGrad::zeros(c, d);
        let p = softmax(&cosine_logits(&pp, &h, scale).unwrap());
        let dh = predictor_grad_cos(&p, &h, &pp, scale, y, 1.0, &mut g).unwrap();

        let loss_w = |w: &[f64]| {
            let q = PredictorParams::from_parts(
                DenseMatrix::from_vec(c, d, w.to_vec()).unwrap(),
                pp.bias().clone(),
            );
            cross_entropy(&softmax(&cosine_logits(&q.unwrap(), &h, scale).unwrap()), y).unwrap()
        };
        let loss_h = |v: &[f64]| {
            cross_entropy(
                &softmax(&cosine_logits(&pp, &DenseVector::from(v), scale).unwrap()),
                y,
            )
            .unwrap()
        };
        assert!(
            rel_error(
                g.weight.as_slice(),
                &central(loss_w, pp.weight().as_slice())
            ) < 1e-5
        );
        assert!(rel_error(dh.as_slice(), &central(loss_h, h.as_slice())) < 1e-5);
        assert!(g.bias.as_slice().iter().all(|&b| b == 0.0));
    }
}

#[test]
fn two_layer_tape_matches_differences() {
    let mut rng = Rng::new(13);
    let mut checked = 0;
    while checked < 30 {
        let dims = [3, 5, 4];
        let layers: Vec<LayerParams> = dims
            .windows(2)
            .map(|w| {
                let m =
                    DenseMatrix::from_vec(w[1], w[0], uniform(&mut rng, w[0] * w[1], -1.0, 1.0))
                        .unwrap();
                LayerParams::new(
                    m,
                    DenseVector::from_vec(uniform(&mut rng, w[1], -0.3, 0.3)).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let fe = FeatureExtractor::from_layers(layers).unwrap();
        let pp = predictor(&mut rng, 3, 4);
        let batch: Vec<(DenseVector, usize)> = (0..2)
            .map(|_| {
                (
                    DenseVector::from_vec(uniform(&mut rng, 3, -1.0, 1.0)).unwrap(),
                    rng.below(3) as usize,
                )
            })
            .collect();
        // Skip draws that put a unit on the ReLU kink.
        let near_kink = batch.iter().any(|(x, _)| {
            let mut a = x.clone();
            fe.layers().iter().any(|l| {
                let mut z = l.weight.matvec(&a).unwrap();
                z.axpy(1.0, &l.bias);
                let close = z.as_slice().iter().any(|v| v.abs() < 1e-3);
                a = DenseVector::from_vec(z.as_slice().iter().map(|v| v.max(0.0)).collect())
                    .unwrap();
                close
            })
        });
        if near_kink {
            continue;
        }
        let mut tape = GradientTape::for_params(&fe, &pp);
        backprop(
            &fe,
            &pp,
            CosineScale::default(),
            ReplayMode::Dot,
            &batch,
            0.5,
            &mut tape,
        )
        .unwrap();
        for k in 0..2 {
            let f = |w: &[f64]| {
                let mut layers = fe.layers().to_vec();
                let l = &layers[k];
                layers[k] = LayerParams::new(
                    DenseMatrix::from_vec(l.weight.rows(), l.weight.cols(), w.to_vec()).unwrap(),
                    l.bias.clone(),
                )
                .unwrap();
                let fe = FeatureExtractor::from_layers(layers).unwrap();
                let mut scratch = GradientTape::for_params(&fe, &pp);
                backprop(
                    &fe,
                    &pp,
                    CosineScale::default(),
                    ReplayMode::Dot,
                    &batch,
                    0.5,
                    &mut scratch,
                )
                .unwrap()
            };
            let numeric = central(f, fe.layers()[k].weight.as_slice());
            assert!(
                rel_error(tape.layers[k].weight.as_slice(), &numeric) < 1e-5,
                "layer {k}"
            );
        }
        checked += 1;
    }
}

fn batch_strategy() -> impl proptest::strategy::Strategy<Value = (Vec<f64>, Vec<f64>, u64, f64)> {
    use proptest::prelude::*;
    (
        proptest::collection::vec(-1.0f64..1.0, 12),
        proptest::collection::vec(0.05f64..2.0, 8),
        any::<u64>(),
        0.0f64..=1.0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mixed_objective_is_the_convex_combination((w, hs, seed, alpha) in batch_strategy()) {
        let pp = PredictorParams::from_parts(
            DenseMatrix::from_vec(3, 4, w).unwrap(),
            DenseVector::from(&[0.1, -0.2, 0.0][..]),
        ).unwrap();
        let batch: Vec<(DenseVector, usize)> = hs
            .chunks(4)
            .enumerate()
            .map(|(i, h)| (DenseVector::from(h), ((seed >> i) % 3) as usize))
            .collect();
        let scale = CosineScale::default();
        let mixed = loss_replay(&pp, scale, alpha, &batch).unwrap();
        let dot = loss_dot(&pp, &batch).unwrap();
        let cos = loss_current(&pp, scale, &batch).unwrap();
        prop_assert!((mixed.loss - (alpha * dot.loss + (1.0 - alpha) * cos.loss)).abs() < 1e-12);
        let combined: Vec<f64> = dot.predictor.weight.as_slice().iter()
            .zip(cos.predictor.weight.as_slice())
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        for (m, c) in mixed.predictor.weight.as_slice().iter().zip(&combined) {
            prop_assert!((m - c).abs() < 1e-12);
        }
    }
}
