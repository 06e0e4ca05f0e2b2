//! The self-prompt unit: a logistic-regression classifier applied to every
//! embedding pixel independently.

mod io;
mod lbfgs;
mod problem;

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::data::{BinaryMask, CoordSpace, EmbeddingGrid, ProbabilityGrid, EMBED_CHANNELS, EMBED_SIZE};
use crate::error::{Error, Result};

pub use io::{load_classifier, save_classifier};
pub(crate) use problem::sigmoid;

/// Probability clamp used by [`objective`].
pub const PROBABILITY_EPSILON: f64 = 1e-12;

/// Learned state of the self-prompt unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelClassifier {
    weights: Vec<f32>,
    bias: f32,
}

impl PixelClassifier {
    pub fn new(weights: Vec<f32>, bias: f32) -> Result<Self> {
        if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite {
                context: "classifier weights".into(),
                index,
            });
        }
        if !bias.is_finite() {
            return Err(Error::NonFinite {
                context: "classifier bias".into(),
                index: 0,
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> f32 {
        self.bias
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn from_theta(theta: &[f64]) -> Result<Self> {
        let (w, b) = theta.split_at(theta.len() - 1);
        Self::new(w.iter().map(|&v| v as f32).collect(), b[0] as f32)
    }

    /// `w . x + b` in double precision.
    pub fn margin(&self, features: &[f32]) -> f64 {
        self.weights
            .iter()
            .zip(features)
            .map(|(&w, &x)| w as f64 * x as f64)
            .sum::<f64>()
            + self.bias as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    #[default]
    Zero,
    /// Small uniform weights in `[-0.01, 0.01]` drawn from the config seed.
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the objective by at most this
    /// fraction of its magnitude and the gradient norm is at most this
    /// fraction of the objective.
    pub convergence_tolerance: f64,
    /// Weight of `||w||^2`; the bias is not penalized.
    pub regularization_weight: f64,
    pub seed: u64,
    pub init: InitStrategy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            convergence_tolerance: 1e-6,
            regularization_weight: 0.5,
            seed: 0,
            init: InitStrategy::Zero,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::InvalidConfig("convergence_tolerance must be positive".into()));
        }
        if !(self.regularization_weight >= 0.0) || !self.regularization_weight.is_finite() {
            return Err(Error::InvalidConfig("regularization_weight must be >= 0".into()));
        }
        Ok(())
    }
}

/// `k` embedding/label pairs, labels already aligned to the 64x64 lattice.
#[derive(Debug, Clone)]
pub struct FewShotTrainSet {
    samples: Vec<(EmbeddingGrid, BinaryMask)>,
}

impl FewShotTrainSet {
    pub fn new(samples: Vec<(EmbeddingGrid, BinaryMask)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("training set must contain at least one sample".into()));
        }
        for (_, mask) in &samples {
            mask.expect_shape(EMBED_SIZE, EMBED_SIZE, "training mask")?;
            crate::data::expect_space(mask.space(), CoordSpace::Grid64)?;
        }
        Ok(Self { samples })
    }

    pub fn shot_count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[(EmbeddingGrid, BinaryMask)] {
        &self.samples
    }
}

/// Flat pixel-major design matrix with binary labels.
///
/// Every pixel carries the same loss weight (`1/k` for a `k`-shot set).
#[derive(Debug, Clone)]
pub struct PixelDataset {
    dim: usize,
    features: Vec<f32>,
    labels: Vec<bool>,
    weight: f64,
}

impl PixelDataset {
    pub fn new(dim: usize, features: Vec<f32>, labels: Vec<bool>, weight: f64) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::dims(
                "pixel dataset",
                format!("{} x {dim}", labels.len()),
                features.len(),
            ));
        }
        if labels.is_empty() {
            return Err(Error::InvalidConfig("pixel dataset is empty".into()));
        }
        if let Some(index) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "pixel features".into(),
                index,
            });
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidConfig("pixel weight must be positive".into()));
        }
        Ok(Self {
            dim,
            features,
            labels,
            weight,
        })
    }

    /// Flattens a train set in a canonical sample order (labels, then
    /// embedding bits), so any permutation of the same samples yields the
    /// same summation order.
    pub fn from_train_set(set: &FewShotTrainSet) -> Self {
        let mut order: Vec<usize> = (0..set.samples.len()).collect();
        order.sort_by(|&a, &b| canonical_cmp(&set.samples[a], &set.samples[b]));
        let pixels = EMBED_SIZE * EMBED_SIZE;
        let mut features = Vec::with_capacity(order.len() * pixels * EMBED_CHANNELS);
        let mut labels = Vec::with_capacity(order.len() * pixels);
        for i in order {
            let (emb, mask) = &set.samples[i];
            features.extend_from_slice(&emb.pixel_major());
            labels.extend_from_slice(mask.bits());
        }
        Self {
            dim: EMBED_CHANNELS,
            features,
            labels,
            weight: 1.0 / set.samples.len() as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn pixel(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

fn canonical_cmp(a: &(EmbeddingGrid, BinaryMask), b: &(EmbeddingGrid, BinaryMask)) -> Ordering {
    a.1.bits().cmp(b.1.bits()).then_with(|| {
        a.0.values()
            .iter()
            .map(|v| v.to_bits())
            .cmp(b.0.values().iter().map(|v| v.to_bits()))
    })
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub classifier: PixelClassifier,
    /// Smooth objective at the returned parameters (before f32 rounding).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Regularized cross-entropy on clamped probabilities:
/// `w_px * sum -[t ln p + (1-t) ln(1-p)] + lambda ||w||^2`.
pub fn pixel_objective(classifier: &PixelClassifier, data: &PixelDataset, lambda: f64) -> Result<f64> {
    if classifier.dim() != data.dim {
        return Err(Error::dims("classifier", data.dim, classifier.dim()));
    }
    let mut loss = 0.0;
    for (i, &t) in data.labels.iter().enumerate() {
        let p = sigmoid(classifier.margin(data.pixel(i))).clamp(PROBABILITY_EPSILON, 1.0 - PROBABILITY_EPSILON);
        loss -= if t { p.ln() } else { (1.0 - p).ln() };
    }
    let penalty: f64 = classifier.weights.iter().map(|&w| (w as f64).powi(2)).sum();
    Ok(data.weight * loss + lambda * penalty)
}

pub fn objective(classifier: &PixelClassifier, train_set: &FewShotTrainSet, config: &TrainConfig) -> Result<f64> {
    pixel_objective(
        classifier,
        &PixelDataset::from_train_set(train_set),
        config.regularization_weight,
    )
}

fn initial_theta(dim: usize, config: &TrainConfig) -> Vec<f64> {
    match config.init {
        InitStrategy::Zero => vec![0.0; dim + 1],
        InitStrategy::SeededRandom => {
            let mut rng = SplitMix64::seed_from_u64(config.seed);
            (0..=dim).map(|_| rng.gen_range(-0.01..=0.01)).collect()
        }
    }
}

pub fn train(data: &PixelDataset, config: &TrainConfig) -> Result<FitReport> {
    config.validate()?;
    let problem = problem::LogisticProblem {
        data,
        lambda: config.regularization_weight,
    };
    let solution = lbfgs::minimize(
        &problem,
        initial_theta(data.dim, config),
        config.max_iterations,
        config.convergence_tolerance,
    )?;
    Ok(FitReport {
        classifier: PixelClassifier::from_theta(&solution.theta)?,
        objective: solution.objective,
        iterations: solution.iterations,
        converged: solution.converged,
    })
}

pub fn fit_classifier(train_set: &FewShotTrainSet, config: &TrainConfig) -> Result<PixelClassifier> {
    train(&PixelDataset::from_train_set(train_set), config).map(|r| r.classifier)
}

/// `sigma(w . z + b)` at every embedding cell.
pub fn predict_probability_grid(classifier: &PixelClassifier, embedding: &EmbeddingGrid) -> Result<ProbabilityGrid> {
    if classifier.dim() != EMBED_CHANNELS {
        return Err(Error::dims("classifier", EMBED_CHANNELS, classifier.dim()));
    }
    let mut logits = vec![classifier.bias as f64; EMBED_SIZE * EMBED_SIZE];
    for (c, &w) in classifier.weights.iter().enumerate() {
        let w = w as f64;
        for (l, &z) in logits.iter_mut().zip(embedding.channel(c)) {
            *l += w * z as f64;
        }
    }
    let values = logits.into_iter().map(sigmoid).collect();
    ProbabilityGrid::new(EMBED_SIZE, EMBED_SIZE, values, CoordSpace::Grid64)
}

/// Strict `p > 0.5`; exactly one half is background.
pub fn threshold_mask(probs: &ProbabilityGrid) -> BinaryMask {
    let bits = probs.values().iter().map(|&p| p > 0.5).collect();
    BinaryMask::from_bits(probs.height(), probs.width(), bits, probs.space()).expect("same geometry")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn gaussian_problem(seed: u64, n: usize, dim: usize) -> PixelDataset {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut features = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let t = i % 3 == 0;
            for c in 0..dim {
                let mean = if c < 8 { if t { 0.6 } else { -0.6 } } else { 0.0 };
                features.push((mean + noise.sample(&mut rng)) as f32);
            }
            labels.push(t);
        }
        PixelDataset::new(dim, features, labels, 1.0).unwrap()
    }

    #[test]
    fn zero_classifier_costs_ln2_per_pixel() {
        let mask = BinaryMask::from_fn(64, 64, CoordSpace::Grid64, |x, y| (x + 2 * y) % 5 == 0);
        let set = FewShotTrainSet::new(vec![(EmbeddingGrid::zeros(), mask)]).unwrap();
        let f = objective(&PixelClassifier::zeros(256), &set, &TrainConfig::default()).unwrap();
        let want = 4096.0 * std::f64::consts::LN_2;
        assert!((f - want).abs() / want < 1e-12, "{f} vs {want}");
    }

    #[test]
    fn confident_classifier_leaves_only_penalty() {
        let data = PixelDataset::new(1, vec![1.0, -1.0, 1.0], vec![true, false, true], 1.0).unwrap();
        let c = PixelClassifier::new(vec![200.0], 0.0).unwrap();
        let f = pixel_objective(&c, &data, 0.5).unwrap();
        assert!((f - 0.5 * 200.0f64.powi(2)).abs() < 1e-9);
        // Clamped, so a confidently wrong classifier still has finite loss.
        let wrong = PixelClassifier::new(vec![-200.0], 0.0).unwrap();
        assert!(pixel_objective(&wrong, &data, 0.0).unwrap().is_finite());
    }

    #[test]
    fn all_background_labels_push_bias_negative() {
        let mask = BinaryMask::empty(64, 64, CoordSpace::Grid64);
        let emb = EmbeddingGrid::from_fn(|c, y, x| ((c + y * 3 + x * 7) % 11) as f32 * 0.1 - 0.5).unwrap();
        let set = FewShotTrainSet::new(vec![(emb.clone(), mask)]).unwrap();
        let c = fit_classifier(&set, &TrainConfig::default()).unwrap();
        assert!(c.bias() < 0.0);
        let probs = predict_probability_grid(&c, &emb).unwrap();
        assert!(probs.values().iter().all(|&p| p < 0.5));
    }

    #[test]
    fn symmetric_feature_forces_positive_weight() {
        let mask = BinaryMask::from_fn(64, 64, CoordSpace::Grid64, |x, y| x < 20 && y > 30);
        let m = mask.clone();
        let emb = EmbeddingGrid::from_fn(|c, y, x| match c {
            0 if m.get(x, y) => 1.0,
            0 => -1.0,
            _ => 0.0,
        })
        .unwrap();
        let set = FewShotTrainSet::new(vec![(emb.clone(), mask.clone())]).unwrap();
        let c = fit_classifier(&set, &TrainConfig::default()).unwrap();
        assert!(c.weights()[0] > 0.0);
        let pred = threshold_mask(&predict_probability_grid(&c, &emb).unwrap());
        assert_eq!(pred, mask);
    }

    #[test]
    fn fit_beats_zero_and_is_deterministic() {
        let data = gaussian_problem(3, 300, 256);
        let cfg = TrainConfig::default();
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a.classifier, b.classifier);
        let zero = pixel_objective(&PixelClassifier::zeros(256), &data, 0.5).unwrap();
        let fitted = pixel_objective(&a.classifier, &data, 0.5).unwrap();
        assert!(fitted < zero);
        assert!(a.converged);
    }

    #[test]
    fn random_init_reaches_same_optimum() {
        let data = gaussian_problem(9, 250, 256);
        let zero = train(&data, &TrainConfig::default()).unwrap();
        let rand = train(
            &data,
            &TrainConfig {
                init: InitStrategy::SeededRandom,
                seed: 77,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let rel = (zero.objective - rand.objective).abs() / zero.objective.abs();
        assert!(rel < 1e-6, "relative gap {rel}");
    }

    #[test]
    fn predictions_match_naive_dot_product() {
        let mut rng = SplitMix64::seed_from_u64(5);
        let emb = EmbeddingGrid::from_fn(|_, _, _| rng.gen_range(-2.0..2.0)).unwrap();
        let c = PixelClassifier::new((0..256).map(|_| rng.gen_range(-0.1..0.1)).collect(), 0.3).unwrap();
        let probs = predict_probability_grid(&c, &emb).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                let mut z = 0.0f64;
                for ch in 0..256 {
                    z += c.weights()[ch] as f64 * emb.get(ch, y, x) as f64;
                }
                z += c.bias() as f64;
                let p = 1.0 / (1.0 + (-z).exp());
                assert!((probs.get(x, y) - p).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn uniform_inputs_give_uniform_outputs() {
        let emb = EmbeddingGrid::zeros();
        let p = predict_probability_grid(&PixelClassifier::zeros(256), &emb).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.5));
        assert!(threshold_mask(&p).is_empty());

        let hot = PixelClassifier::new(vec![0.0; 256], 20.0).unwrap();
        let p = predict_probability_grid(&hot, &emb).unwrap();
        assert!(p.values().iter().all(|&v| v > 0.999));

        let g = ProbabilityGrid::uniform(4, 4, 0.51, CoordSpace::Grid64).unwrap();
        assert_eq!(threshold_mask(&g).count(), 16);
    }

    #[test]
    fn threshold_matches_per_cell_comparison() {
        let mut rng = SplitMix64::seed_from_u64(11);
        let g = ProbabilityGrid::from_fn(64, 64, CoordSpace::Grid64, |_, _| {
            if rng.gen_bool(0.1) {
                0.5
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .unwrap();
        let m = threshold_mask(&g);
        for y in 0..64 {
            for x in 0..64 {
                assert_eq!(m.get(x, y), g.get(x, y) > 0.5);
            }
        }
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        assert!(FewShotTrainSet::new(vec![]).is_err());
        let wrong = BinaryMask::empty(32, 32, CoordSpace::Grid64);
        assert!(FewShotTrainSet::new(vec![(EmbeddingGrid::zeros(), wrong)]).is_err());
        let wrong_space = BinaryMask::empty(64, 64, CoordSpace::Grid256);
        assert!(FewShotTrainSet::new(vec![(EmbeddingGrid::zeros(), wrong_space)]).is_err());
        let data = gaussian_problem(1, 10, 4);
        let bad = TrainConfig {
            max_iterations: 0,
            ..TrainConfig::default()
        };
        assert!(train(&data, &bad).is_err());
        assert!(pixel_objective(&PixelClassifier::zeros(3), &data, 0.5).is_err());
    }
}
