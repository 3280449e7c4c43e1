//! Class-incremental stream construction: datasets, disjoint class stages
//! and single-pass mini-batches.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::numeric::{DenseVector, Rng};

/// A labelled input.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Raw features.
    pub x: DenseVector,
    /// Class label in `0..num_classes`.
    pub y: usize,
}

impl Sample {
    /// A sample from raw parts.
    pub fn new(x: DenseVector, y: usize) -> Self {
        Self { x, y }
    }
}

/// Train and test samples over a common feature width.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    train: Vec<Sample>,
    test: Vec<Sample>,
    input_dim: usize,
    classes: Vec<usize>,
}

impl Dataset {
    /// Validates uniform feature width across both splits.
    pub fn new(train: Vec<Sample>, test: Vec<Sample>) -> Result<Self> {
        let Some(first) = train.first() else {
            return Err(Error::EmptyDataset);
        };
        let input_dim = first.x.len();
        if input_dim == 0 {
            return Err(invalid("samples must have at least one feature"));
        }
        if let Some(bad) = train.iter().chain(&test).find(|s| s.x.len() != input_dim) {
            return Err(invalid(format!(
                "ragged features: expected width {input_dim}, found {}",
                bad.x.len()
            )));
        }
        let mut classes: Vec<usize> = train.iter().map(|s| s.y).collect();
        classes.sort_unstable();
        classes.dedup();
        Ok(Self {
            train,
            test,
            input_dim,
            classes,
        })
    }

    /// Training split.
    pub fn train(&self) -> &[Sample] {
        &self.train
    }

    /// Held-out split.
    pub fn test(&self) -> &[Sample] {
        &self.test
    }

    /// Feature width.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Distinct training labels, ascending.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }
}

/// One incremental stage: a class group with its train and test samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// 0-based stage index.
    pub index: usize,
    /// Labels introduced by this stage.
    pub classes: Vec<usize>,
    /// Training samples whose label is in `classes`, in dataset order.
    pub train: Vec<Sample>,
    /// Test samples whose label is in `classes`.
    pub test: Vec<Sample>,
}

/// Shape of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    /// Number of stages.
    pub stages: usize,
    /// Classes introduced per stage.
    pub classes_per_stage: usize,
    /// Current samples per training step.
    pub batch_size_current: usize,
    /// Samples retrieved from memory per training step.
    pub batch_size_memory: usize,
    /// Fixed class-order seed; when `None` the order follows the run seed.
    pub shuffle_seed: Option<u64>,
}

impl StreamConfig {
    /// `stages × classes_per_stage` with batch sizes 10 + 10.
    pub fn new(stages: usize, classes_per_stage: usize) -> Self {
        Self {
            stages,
            classes_per_stage,
            batch_size_current: 10,
            batch_size_memory: 10,
            shuffle_seed: None,
        }
    }

    /// Checks every count is at least one (the memory batch may be zero).
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 || self.classes_per_stage == 0 || self.batch_size_current == 0 {
            return Err(invalid(
                "stages, classes_per_stage and batch_size_current must be ≥ 1",
            ));
        }
        Ok(())
    }

    /// Total classes the stream expects.
    pub fn total_classes(&self) -> usize {
        self.stages * self.classes_per_stage
    }
}

/// Shuffles the dataset's classes with `rng` and partitions them, in order,
/// into `cfg.stages` groups of `cfg.classes_per_stage`.
pub fn build_stages(dataset: &Dataset, cfg: &StreamConfig, rng: &mut Rng) -> Result<Vec<Stage>> {
    cfg.validate()?;
    if dataset.classes.len() != cfg.total_classes() {
        return Err(Error::ClassCountMismatch {
            expected: cfg.total_classes(),
            found: dataset.classes.len(),
        });
    }
    let mut order = dataset.classes.clone();
    rng.shuffle(&mut order);
    let stages = order
        .chunks(cfg.classes_per_stage)
        .enumerate()
        .map(|(index, group)| {
            let pick = |set: &[Sample]| -> Vec<Sample> {
                set.iter()
                    .filter(|s| group.contains(&s.y))
                    .cloned()
                    .collect()
            };
            Stage {
                index,
                classes: group.to_vec(),
                train: pick(&dataset.train),
                test: pick(&dataset.test),
            }
        })
        .collect();
    Ok(stages)
}

/// Single pass over a stage's training samples in shuffled order.
#[derive(Debug, Clone)]
pub struct Batches<'a> {
    samples: &'a [Sample],
    order: Vec<usize>,
    pos: usize,
    size: usize,
}

impl<'a> Iterator for Batches<'a> {
    type Item = Vec<&'a Sample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.size).min(self.order.len());
        let batch = self.order[self.pos..end]
            .iter()
            .map(|&i| &self.samples[i])
            .collect();
        self.pos = end;
        Some(batch)
    }
}

/// Shuffles the stage once and yields batches of `cfg.batch_size_current`;
/// the last batch may be short. Every sample is yielded exactly once.
pub fn iterate_batches<'a>(stage: &'a Stage, cfg: &StreamConfig, rng: &mut Rng) -> Batches<'a> {
    let mut order: Vec<usize> = (0..stage.train.len()).collect();
    rng.shuffle(&mut order);
    Batches {
        samples: &stage.train,
        order,
        pos: 0,
        size: cfg.batch_size_current.max(1),
    }
}

/// Isotropic Gaussian class clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Feature width.
    pub input_dim: usize,
    /// One mean per class; class `c` has label `c`.
    pub means: Vec<DenseVector>,
    /// Per-coordinate standard deviation.
    pub stddev: f64,
    /// Training samples per class.
    pub train_per_class: usize,
    /// Test samples per class.
    pub test_per_class: usize,
}

impl SyntheticSpec {
    /// `classes` means drawn uniformly on the sphere of `radius` in
    /// `input_dim` dimensions.
    pub fn on_sphere(
        classes: usize,
        input_dim: usize,
        radius: f64,
        stddev: f64,
        train_per_class: usize,
        test_per_class: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("sphere needs positive dimension and radius"));
        }
        let means = (0..classes)
            .map(|_| loop {
                let mut dir =
                    DenseVector::from_vec_unchecked((0..input_dim).map(|_| rng.normal()).collect());
                let n = dir.l2_norm();
                if n > 1e-9 {
                    dir.scale(radius / n);
                    break dir;
                }
            })
            .collect();
        let spec = Self {
            input_dim,
            means,
            stddev,
            train_per_class,
            test_per_class,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The canonical desk-scale benchmark: 10 classes in 20 dimensions,
    /// means on the radius-3 sphere, unit noise, 500 train and 100 test
    /// samples per class.
    pub fn split_gauss_10(rng: &mut Rng) -> Self {
        Self::on_sphere(10, 20, 3.0, 1.0, 500, 100, rng).expect("valid preset")
    }

    /// Checks means are distinct with the right width and `stddev > 0`.
    pub fn validate(&self) -> Result<()> {
        if self.means.is_empty() {
            return Err(invalid("synthetic spec needs at least one class"));
        }
        if !(self.stddev.is_finite() && self.stddev > 0.0) {
            return Err(invalid(format!(
                "stddev must be positive, got {}",
                self.stddev
            )));
        }
        if self.train_per_class == 0 {
            return Err(invalid("train_per_class must be ≥ 1"));
        }
        if self.means.iter().any(|m| m.len() != self.input_dim) {
            return Err(invalid("class mean width differs from input_dim"));
        }
        for (i, a) in self.means.iter().enumerate() {
            if self.means[..i].iter().any(|b| a == b) {
                return Err(invalid(format!(
                    "class mean {i} duplicates an earlier mean"
                )));
            }
        }
        Ok(())
    }
}

/// Draws every class's train and test samples from `N(mean, stddev²·I)`.
pub fn gen_synthetic(spec: &SyntheticSpec, rng: &mut Rng) -> Result<Dataset> {
    spec.validate()?;
    let mut draw = |mean: &DenseVector| -> DenseVector {
        let data = mean
            .as_slice()
            .iter()
            .map(|&m| m + spec.stddev * rng.normal())
            .collect();
        DenseVector::from_vec_unchecked(data)
    };
    let mut train = Vec::with_capacity(spec.means.len() * spec.train_per_class);
    let mut test = Vec::with_capacity(spec.means.len() * spec.test_per_class);
    for (y, mean) in spec.means.iter().enumerate() {
        for _ in 0..spec.train_per_class {
            train.push(Sample::new(draw(mean), y));
        }
        for _ in 0..spec.test_per_class {
            test.push(Sample::new(draw(mean), y));
        }
    }
    Dataset::new(train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(classes: usize, per_class: usize) -> Dataset {
        let train = (0..classes * per_class)
            .map(|i| Sample::new(DenseVector::from(&[i as f64][..]), i % classes))
            .collect();
        let test = (0..classes)
            .map(|c| Sample::new(DenseVector::zeros(1), c))
            .collect();
        Dataset::new(train, test).unwrap()
    }

    #[test]
    fn ten_classes_five_stages() {
        let ds = toy(10, 3);
        let stages = build_stages(&ds, &StreamConfig::new(5, 2), &mut Rng::new(4)).unwrap();
        assert_eq!(stages.len(), 5);
        let mut all: Vec<usize> = stages.iter().flat_map(|s| s.classes.clone()).collect();
        assert!(stages.iter().all(|s| s.classes.len() == 2));
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        for s in &stages {
            assert!(s
                .train
                .iter()
                .chain(&s.test)
                .all(|x| s.classes.contains(&x.y)));
            assert_eq!(s.train.len(), 6);
        }
    }

    #[test]
    fn single_stage_takes_all_classes() {
        let ds = toy(4, 2);
        let stages = build_stages(&ds, &StreamConfig::new(1, 4), &mut Rng::new(0)).unwrap();
        assert_eq!(stages.len(), 1);
        assert_eq!(stages[0].train.len(), 8);
    }

    #[test]
    fn partition_is_seeded() {
        let ds = toy(10, 1);
        let cfg = StreamConfig::new(5, 2);
        let a = build_stages(&ds, &cfg, &mut Rng::new(9)).unwrap();
        let b = build_stages(&ds, &cfg, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_count_mismatch() {
        let ds = toy(10, 1);
        let err = build_stages(&ds, &StreamConfig::new(3, 3), &mut Rng::new(0)).unwrap_err();
        assert_eq!(
            err,
            Error::ClassCountMismatch {
                expected: 9,
                found: 10
            }
        );
    }

    fn batch_sizes(n: usize, size: usize) -> Vec<usize> {
        let stage = Stage {
            index: 0,
            classes: vec![0],
            train: (0..n)
                .map(|i| Sample::new(DenseVector::from(&[i as f64][..]), 0))
                .collect(),
            test: vec![],
        };
        let mut cfg = StreamConfig::new(1, 1);
        cfg.batch_size_current = size;
        iterate_batches(&stage, &cfg, &mut Rng::new(1))
            .map(|b| b.len())
            .collect()
    }

    #[test]
    fn batch_remainders() {
        assert_eq!(batch_sizes(25, 10), [10, 10, 5]);
        assert_eq!(batch_sizes(10, 10), [10]);
    }

    #[test]
    fn batches_are_a_permutation() {
        let stage = Stage {
            index: 0,
            classes: vec![0],
            train: (0..37)
                .map(|i| Sample::new(DenseVector::from(&[i as f64][..]), 0))
                .collect(),
            test: vec![],
        };
        let cfg = StreamConfig::new(1, 1);
        let mut seen: Vec<f64> = iterate_batches(&stage, &cfg, &mut Rng::new(3))
            .flatten()
            .map(|s| s.x[0])
            .collect();
        assert_ne!(seen, (0..37).map(|i| i as f64).collect::<Vec<_>>());
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..37).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_gaussian_hits_the_mean() {
        let mean = DenseVector::from(&[1.5, -2.0][..]);
        let spec = SyntheticSpec {
            input_dim: 2,
            means: vec![mean.clone()],
            stddev: 1e-300,
            train_per_class: 20,
            test_per_class: 5,
        };
        let ds = gen_synthetic(&spec, &mut Rng::new(2)).unwrap();
        assert!(ds.train().iter().chain(ds.test()).all(|s| s.x == mean));
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let mean = DenseVector::from(&[0.5, -1.0, 2.0][..]);
        let spec = SyntheticSpec {
            input_dim: 3,
            means: vec![mean.clone()],
            stddev: 0.7,
            train_per_class: 10_000,
            test_per_class: 0,
        };
        let ds = gen_synthetic(&spec, &mut Rng::new(17)).unwrap();
        let bound = 5.0 * 0.7 / 100.0;
        for j in 0..3 {
            let m: f64 = ds.train().iter().map(|s| s.x[j]).sum::<f64>() / 10_000.0;
            assert!((m - mean[j]).abs() < bound, "coord {j}: {m}");
        }
    }

    #[test]
    fn synthetic_determinism() {
        let spec = SyntheticSpec::on_sphere(3, 4, 2.0, 1.0, 5, 2, &mut Rng::new(1)).unwrap();
        let a = gen_synthetic(&spec, &mut Rng::new(10)).unwrap();
        let b = gen_synthetic(&spec, &mut Rng::new(10)).unwrap();
        let c = gen_synthetic(&spec, &mut Rng::new(11)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_specs() {
        let m = DenseVector::from(&[0.0][..]);
        let mut spec = SyntheticSpec {
            input_dim: 1,
            means: vec![m.clone(), m],
            stddev: 1.0,
            train_per_class: 1,
            test_per_class: 1,
        };
        assert!(spec.validate().is_err());
        spec.means.pop();
        spec.stddev = 0.0;
        assert!(gen_synthetic(&spec, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn split_gauss_shape() {
        let spec = SyntheticSpec::split_gauss_10(&mut Rng::new(0));
        assert_eq!(spec.means.len(), 10);
        assert!(spec.means.iter().all(|m| (m.l2_norm() - 3.0).abs() < 1e-12));
        let ds = gen_synthetic(&spec, &mut Rng::new(1)).unwrap();
        assert_eq!(
            (ds.train().len(), ds.test().len(), ds.input_dim()),
            (5000, 1000, 20)
        );
    }

    #[test]
    fn empty_and_ragged_datasets() {
        assert_eq!(Dataset::new(vec![], vec![]), Err(Error::EmptyDataset));
        let train = vec![
            Sample::new(DenseVector::zeros(2), 0),
            Sample::new(DenseVector::zeros(3), 1),
        ];
        assert!(Dataset::new(train, vec![]).is_err());
    }
}
