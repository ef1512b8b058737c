//! The synthetic logistic family, its closed-form calibration map, and a
//! small deterministic logistic trainer.
//!
//! Data: `Y ~ Bernoulli(1/2)`, `X | Y=1 ~ N(-1, 1)`, `X | Y=0 ~ N(1, 1)`, so the
//! true posterior is `P(Y=1 | x) = 1 / (1 + exp(2x))`. A model
//! `f(x) = sigmoid(beta0 + beta1 x)` then has the canonical calibration map
//!
//! ```text
//! pi1(z) = sigmoid(2 (beta0 + ln(1/z - 1)) / beta1)
//! ```
//!
//! which is the identity exactly when `(beta0, beta1) = (0, -2)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ScoredDataset, ScoredSample};
use crate::error::{Error, Result};
use crate::rng;

/// Samples per Monte-Carlo work unit. Fixed so that results do not depend on
/// the thread count.
pub(crate) const MC_CHUNK: usize = 1 << 15;

/// Raw synthetic datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: u8,
}

#[inline]
pub(crate) fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Anything that maps an input to a confidence in `[0, 1]`.
pub trait Scorer {
    fn score(&self, x: f64) -> f64;

    fn score_points(&self, points: &[LabeledPoint], provenance: &str) -> Result<ScoredDataset> {
        let samples = points
            .iter()
            .map(|p| ScoredSample::new(self.score(p.x), p.y))
            .collect::<Result<Vec<_>>>()?;
        ScoredDataset::new(samples, provenance)
    }
}

/// A training algorithm. `seed` is the algorithm's own randomness.
pub trait Learner: Sync {
    type Model: Scorer;

    fn fit(&self, train: &[LabeledPoint], seed: u64) -> Result<Self::Model>;
}

/// Logistic predictor `sigmoid(beta0 + beta1 x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    beta0: f64,
    beta1: f64,
}

impl SyntheticModel {
    pub fn new(beta0: f64, beta1: f64) -> Result<Self> {
        if !beta0.is_finite() || !beta1.is_finite() || beta1 == 0.0 {
            return Err(Error::invalid(format!(
                "model needs finite beta0 and nonzero finite beta1, got ({beta0}, {beta1})"
            )));
        }
        Ok(Self { beta0, beta1 })
    }

    /// The Bayes-optimal (perfectly calibrated) member of the family.
    pub fn calibrated() -> Self {
        Self {
            beta0: 0.0,
            beta1: -2.0,
        }
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn logit(&self, x: f64) -> f64 {
        self.beta0 + self.beta1 * x
    }

    pub fn predict(&self, x: f64) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn oracle(&self) -> CalibrationOracle {
        CalibrationOracle { model: *self }
    }
}

impl Scorer for SyntheticModel {
    fn score(&self, x: f64) -> f64 {
        self.predict(x)
    }
}

pub fn logistic_predict(m: &SyntheticModel, x: f64) -> f64 {
    m.predict(x)
}

/// Draws `n` points from the synthetic distribution.
pub fn sample_synthetic(n: usize, seed: u64) -> Vec<LabeledPoint> {
    let mut rng = rng::stream(seed, 0);
    draw_points(&mut rng, n)
}

fn draw_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<LabeledPoint> {
    (0..n)
        .map(|_| {
            let y = u8::from(rng.random::<bool>());
            let noise: f64 = StandardNormal.sample(rng);
            let x = if y == 1 { noise - 1.0 } else { noise + 1.0 };
            LabeledPoint { x, y }
        })
        .collect()
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl McEstimate {
    pub(crate) fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let mean = sum / n as f64;
        let std_error = if n > 1 {
            let var = ((sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error,
            n,
        }
    }
}

/// Runs `body` over `n` synthetic draws split into fixed chunks, each with
/// its own stream, and returns the per-chunk results in chunk order.
pub(crate) fn chunked_synthetic<T, F>(n: usize, seed: u64, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[LabeledPoint]) -> T + Sync,
{
    let chunks = n.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            let mut rng = rng::stream(rng::derive_seed(seed, c as u64), 2);
            body(&draw_points(&mut rng, len))
        })
        .collect()
}

/// Closed-form `E[Y | f(X) = z]` for a synthetic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOracle {
    model: SyntheticModel,
}

impl CalibrationOracle {
    pub fn new(model: SyntheticModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &SyntheticModel {
        &self.model
    }

    /// Calibration map evaluated at a logit `s = beta0 + beta1 x`, where
    /// `ln(1/z - 1) = -s`. Avoids the singularity of the score form.
    pub fn calibration_at_logit(&self, s: f64) -> f64 {
        sigmoid(2.0 * (self.model.beta0 - s) / self.model.beta1)
    }

    pub fn canonical_calibration(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::domain(format!(
                "calibration map undefined at z = {z}"
            )));
        }
        let a = 2.0 * (self.model.beta0 + (1.0 / z - 1.0).ln()) / self.model.beta1;
        Ok(1.0 / (1.0 + (-a).exp()))
    }

    /// Analytic `d pi1 / dz`.
    pub fn calibration_slope(&self, z: f64) -> Result<f64> {
        let p = self.canonical_calibration(z)?;
        Ok(-2.0 * p * (1.0 - p) / (self.model.beta1 * z * (1.0 - z)))
    }

    /// Monte-Carlo estimate of `E|f(X) - pi1(f(X))|`.
    pub fn mc_tce(&self, n_mc: usize, seed: u64) -> McEstimate {
        let n_mc = n_mc.max(1);
        let parts = chunked_synthetic(n_mc, seed, |pts| {
            pts.iter().fold((0.0, 0.0), |(s, s2), p| {
                let logit = self.model.logit(p.x);
                let d = (sigmoid(logit) - self.calibration_at_logit(logit)).abs();
                (s + d, s2 + d * d)
            })
        });
        let (sum, sum_sq) = parts
            .into_iter()
            .fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
        McEstimate::from_sums(sum, sum_sq, n_mc)
    }

    /// Largest `|d pi1 / dz|` over a uniform grid on `[1e-4, 1 - 1e-4]`.
    pub fn estimate_lipschitz(&self, grid: usize) -> Result<f64> {
        if grid < 3 {
            return Err(Error::invalid(format!(
                "Lipschitz grid needs >= 3 points, got {grid}"
            )));
        }
        const EPS: f64 = 1e-4;
        let step = (1.0 - 2.0 * EPS) / (grid - 1) as f64;
        (0..grid).try_fold(0.0_f64, |acc, i| {
            let z = EPS + step * i as f64;
            Ok(acc.max(self.calibration_slope(z)?.abs()))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainerConfig {
    pub fn new(learning_rate: f64, epochs: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            learning_rate,
            epochs,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        Ok(())
    }
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 200,
            seed: 0,
        }
    }
}

/// Full-batch gradient descent on the logistic log-loss.
pub fn train_logistic(train: &[LabeledPoint], cfg: &TrainerConfig) -> Result<SyntheticModel> {
    train_logistic_traced(train, cfg).map(|(m, _)| m)
}

/// As [`train_logistic`], also returning the loss at the start of each epoch.
pub fn train_logistic_traced(
    train: &[LabeledPoint],
    cfg: &TrainerConfig,
) -> Result<(SyntheticModel, Vec<f64>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let init = Normal::new(0.0, 0.1).expect("valid normal");
    let mut rng = rng::stream(cfg.seed, 3);
    let mut b0: f64 = init.sample(&mut rng);
    let mut b1: f64 = init.sample(&mut rng);
    let n = train.len() as f64;
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (mut loss, mut g0, mut g1) = (0.0, 0.0, 0.0);
        for p in train {
            let s = b0 + b1 * p.x;
            // log(1 + exp(-t)) with t = s for y = 1 and t = -s for y = 0
            let t = if p.y == 1 { s } else { -s };
            loss += if t > 0.0 {
                (-t).exp().ln_1p()
            } else {
                -t + t.exp().ln_1p()
            };
            let r = sigmoid(s) - p.y as f64;
            g0 += r;
            g1 += r * p.x;
        }
        loss /= n;
        if !loss.is_finite() || !g0.is_finite() || !g1.is_finite() {
            return Err(Error::Training { iteration: epoch });
        }
        losses.push(loss);
        b0 -= cfg.learning_rate * g0 / n;
        b1 -= cfg.learning_rate * g1 / n;
    }
    if !b0.is_finite() || !b1.is_finite() {
        return Err(Error::Training {
            iteration: cfg.epochs,
        });
    }
    Ok((SyntheticModel::new(b0, b1)?, losses))
}

/// [`Learner`] wrapper around [`train_logistic`]; the fit seed replaces the
/// config seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticLearner {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl LogisticLearner {
    pub fn from_config(cfg: &TrainerConfig) -> Self {
        Self {
            learning_rate: cfg.learning_rate,
            epochs: cfg.epochs,
        }
    }
}

impl Learner for LogisticLearner {
    type Model = SyntheticModel;

    fn fit(&self, train: &[LabeledPoint], seed: u64) -> Result<SyntheticModel> {
        train_logistic(
            train,
            &TrainerConfig {
                learning_rate: self.learning_rate,
                epochs: self.epochs,
                seed,
            },
        )
    }
}

/// Ignores its data and always predicts a fixed confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLearner(pub f64);

impl Scorer for ConstantLearner {
    fn score(&self, _x: f64) -> f64 {
        self.0
    }
}

impl Learner for ConstantLearner {
    type Model = ConstantLearner;

    fn fit(&self, _train: &[LabeledPoint], _seed: u64) -> Result<ConstantLearner> {
        Ok(*self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(b0: f64, b1: f64) -> SyntheticModel {
        SyntheticModel::new(b0, b1).unwrap()
    }

    #[test]
    fn predict_examples() {
        assert_eq!(model(0.0, -2.0).predict(0.0), 0.5);
        assert_relative_eq!(
            model(0.0, -2.0).predict(1.0),
            1.0 / (1.0 + 2f64.exp()),
            epsilon = 1e-15
        );
        assert_relative_eq!(model(0.0, -2.0).predict(1.0), 0.1192, epsilon = 1e-4);
        assert_relative_eq!(model(0.5, -1.5).predict(0.0), 0.6225, epsilon = 1e-4);
    }

    #[test]
    fn zero_slope_is_rejected() {
        assert!(SyntheticModel::new(0.3, 0.0).is_err());
    }

    #[test]
    fn synthetic_sample_statistics() {
        let pts = sample_synthetic(100_000, 42);
        let ones: Vec<f64> = pts.iter().filter(|p| p.y == 1).map(|p| p.x).collect();
        let p1 = ones.len() as f64 / pts.len() as f64;
        assert!((p1 - 0.5).abs() < 0.01, "P(Y=1) = {p1}");
        let mean = ones.iter().sum::<f64>() / ones.len() as f64;
        assert!((mean + 1.0).abs() < 0.02, "mean = {mean}");
        assert_eq!(sample_synthetic(50, 3), sample_synthetic(50, 3));
    }

    #[test]
    fn calibrated_model_has_identity_map() {
        let o = SyntheticModel::calibrated().oracle();
        assert!((o.canonical_calibration(0.3).unwrap() - 0.3).abs() < 1e-12);
        for i in 1..1000 {
            let z = i as f64 / 1000.0;
            assert!((o.canonical_calibration(z).unwrap() - z).abs() < 1e-12);
        }
        assert!(o.canonical_calibration(1.0).is_err());
        assert!(o.canonical_calibration(0.0).is_err());
    }

    #[test]
    fn logit_form_matches_score_form() {
        let o = model(0.5, -1.5).oracle();
        for &s in &[-3.0, -0.4, 0.0, 1.2, 4.0] {
            let z = sigmoid(s);
            assert_relative_eq!(
                o.calibration_at_logit(s),
                o.canonical_calibration(z).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn mc_tce_examples() {
        let calibrated = SyntheticModel::calibrated().oracle().mc_tce(1_000_000, 1);
        assert!(calibrated.value < 0.005);

        let o = model(0.5, -1.5).oracle();
        let a = o.mc_tce(200_000, 1);
        let b = o.mc_tce(200_000, 2);
        assert!(a.value > 0.0);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 3.0 * se + 1e-12);
        assert_eq!(o.mc_tce(5000, 9), o.mc_tce(5000, 9));
    }

    #[test]
    fn mc_tce_single_draw() {
        let o = model(0.5, -1.5).oracle();
        let est = o.mc_tce(1, 4);
        let mut rng = rng::stream(rng::derive_seed(4, 0), 2);
        let p = draw_points(&mut rng, 1)[0];
        let z = o.model().predict(p.x);
        assert_relative_eq!(
            est.value,
            (z - o.canonical_calibration(z).unwrap()).abs(),
            epsilon = 1e-12
        );
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        let l = SyntheticModel::calibrated()
            .oracle()
            .estimate_lipschitz(1001)
            .unwrap();
        assert_relative_eq!(l, 1.0, epsilon = 1e-9);
        let steep = model(0.0, -1.0).oracle();
        let l = steep.estimate_lipschitz(1001).unwrap();
        assert!(l > 1.0);
        // pi1(z) = z^2 / (z^2 + (1 - z)^2) peaks in slope at z = 1/2 with value 2
        assert_relative_eq!(l, 2.0, epsilon = 1e-6);
        assert!(steep.estimate_lipschitz(2).is_err());
    }

    #[test]
    fn training_loss_decreases_on_separable_pair() {
        let train = [
            LabeledPoint { x: -1.0, y: 1 },
            LabeledPoint { x: 1.0, y: 0 },
        ];
        let cfg = TrainerConfig::new(0.1, 100, 5).unwrap();
        let (_, losses) = train_logistic_traced(&train, &cfg).unwrap();
        assert!(losses.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn training_is_deterministic() {
        let data = sample_synthetic(500, 8);
        let cfg = TrainerConfig::new(0.5, 50, 21).unwrap();
        assert_eq!(
            train_logistic(&data, &cfg).unwrap(),
            train_logistic(&data, &cfg).unwrap()
        );
    }

    #[test]
    fn training_recovers_true_slope() {
        for seed in 0..5 {
            let data = sample_synthetic(10_000, 100 + seed);
            let m = train_logistic(
                &data,
                &TrainerConfig {
                    seed,
                    ..TrainerConfig::default()
                },
            )
            .unwrap();
            assert!(
                (m.beta1() + 2.0).abs() < 0.2,
                "seed {seed}: beta1 = {}",
                m.beta1()
            );
        }
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            train_logistic(&[], &TrainerConfig::default()),
            Err(Error::EmptyDataset)
        ));
        assert!(TrainerConfig::new(0.0, 10, 0).is_err());
        assert!(TrainerConfig::new(0.1, 0, 0).is_err());
        let huge = [
            LabeledPoint { x: 1e300, y: 1 },
            LabeledPoint { x: -1e300, y: 0 },
        ];
        let err = train_logistic(&huge, &TrainerConfig::new(1e10, 5, 0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Training { .. }));
    }
}
