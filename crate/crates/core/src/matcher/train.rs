//! Binary cross-entropy training with Adam and early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normalize_pair, sigmoid, MatchError, SiameseModel, DEFAULT_HIDDEN_DIM};
use crate::profiler::FeatureVector;
use crate::scalar::Scalar;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair<T> {
    pub a: FeatureVector<T>,
    pub b: FeatureVector<T>,
    /// 1 for a matching pair, 0 otherwise.
    pub label: T,
}

/// A pair after joint normalization, of any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPair<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub label: T,
}

impl<T: Scalar> NormalizedPair<T> {
    pub fn new(a: &[T], b: &[T], label: T) -> Result<Self, MatchError> {
        let (a, b) = normalize_pair(a, b)?;
        Ok(NormalizedPair { a, b, label })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub validation_fraction: f64,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 100,
            learning_rate: 1e-4,
            patience: 100,
            validation_fraction: 0.1,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        let bad = |m: &str| Err(MatchError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation fraction must lie in (0, 1)");
        }
        if self.hidden_dim == 0 {
            return bad("hidden dimension must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// Best validation accuracy up to and including this epoch.
    pub best_val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were returned.
    pub best_epoch: Option<usize>,
}

/// Gradients in parameter storage order (W1, b1, w2, b2).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub values: Vec<T>,
}

struct Scratch<T> {
    za: Vec<T>,
    zb: Vec<T>,
}

/// Accumulates the BCE gradient of one pair into `grad`; returns the loss.
fn accumulate<T: Scalar>(
    model: &SiameseModel<T>,
    pair: &NormalizedPair<T>,
    weight: T,
    grad: &mut [T],
    s: &mut Scratch<T>,
) -> T {
    let (f, h) = (model.input_dim(), model.hidden_dim());
    model.pre_activation(&pair.a, &mut s.za);
    model.pre_activation(&pair.b, &mut s.zb);
    let zero = T::zero();
    let mut logit = model.b2;
    for j in 0..h {
        let d = s.za[j].max(zero) - s.zb[j].max(zero);
        logit += model.w2[j] * d.abs();
    }
    let p = sigmoid(logit);
    let y = pair.label;
    // log(1 + e^-|s|) form keeps the loss finite for large logits
    let loss = logit.max(zero) - logit * y + (-logit.abs()).exp().ln_1p();
    let dl = (p - y) * weight;

    let (b1_at, w2_at) = (f * h, f * h + h);
    for j in 0..h {
        let ea = s.za[j].max(zero);
        let eb = s.zb[j].max(zero);
        let d = ea - eb;
        grad[w2_at + j] += dl * d.abs();
        let sign = if d > zero {
            T::one()
        } else if d < zero {
            -T::one()
        } else {
            zero
        };
        let g = dl * model.w2[j] * sign;
        if g == zero {
            continue;
        }
        let ga = if s.za[j] > zero { g } else { zero };
        let gb = if s.zb[j] > zero { -g } else { zero };
        grad[b1_at + j] += ga + gb;
        let row = &mut grad[j * f..(j + 1) * f];
        if ga != zero {
            for (r, x) in row.iter_mut().zip(&pair.a) {
                *r += ga * *x;
            }
        }
        if gb != zero {
            for (r, x) in row.iter_mut().zip(&pair.b) {
                *r += gb * *x;
            }
        }
    }
    grad[w2_at + h] += dl;
    loss
}

/// Mean BCE loss of a batch and its gradient with respect to every parameter.
pub fn loss_and_gradients<T: Scalar>(
    model: &SiameseModel<T>,
    batch: &[NormalizedPair<T>],
) -> (T, Gradients<T>) {
    let mut grad = vec![T::zero(); model.parameter_count()];
    let mut s = Scratch {
        za: vec![T::zero(); model.hidden_dim()],
        zb: vec![T::zero(); model.hidden_dim()],
    };
    let weight = T::one() / T::of_usize(batch.len().max(1));
    let mut loss = T::zero();
    for pair in batch {
        loss += accumulate(model, pair, weight, &mut grad, &mut s);
    }
    (loss * weight, Gradients { values: grad })
}

fn evaluate<T: Scalar>(model: &SiameseModel<T>, pairs: &[NormalizedPair<T>]) -> (f64, f64) {
    let half = T::of(0.5);
    let mut loss = 0.0;
    let mut correct = 0;
    for p in pairs {
        let logit = model.logit_normalized(&p.a, &p.b);
        let l = logit.max(T::zero()) - logit * p.label + (-logit.abs()).exp().ln_1p();
        loss += l.as_f64();
        let predicted = sigmoid(logit) > half;
        if predicted == (p.label > half) {
            correct += 1;
        }
    }
    let n = pairs.len().max(1) as f64;
    (loss / n, correct as f64 / n)
}

/// Held-out pair accuracy at threshold 0.5.
pub fn accuracy<T: Scalar>(model: &SiameseModel<T>, pairs: &[NormalizedPair<T>]) -> f64 {
    evaluate(model, pairs).1
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    fn step(&mut self, model: &mut SiameseModel<T>, grad: &[T], lr: T) {
        self.t += 1;
        let (b1, b2) = (T::of(BETA1), T::of(BETA2));
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let eps = T::of(ADAM_EPS);
        for (i, g) in grad.iter().enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            *m = b1 * *m + (T::one() - b1) * *g;
            *v = b2 * *v + (T::one() - b2) * *g * *g;
            let update = lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            *model.parameter_mut(i) -= update;
        }
    }
}

/// Trains on profile pairs; see [`train_normalized`].
pub fn train<T: Scalar>(
    pairs: &[TrainingPair<T>],
    config: &TrainConfig,
) -> Result<(SiameseModel<T>, TrainHistory), MatchError> {
    let normalized = pairs
        .iter()
        .map(|p| NormalizedPair::new(p.a.as_slice(), p.b.as_slice(), p.label))
        .collect::<Result<Vec<_>, _>>()?;
    train_normalized(&normalized, crate::profiler::layout::FEATURE_COUNT, config)
}

/// Seeded mini-batch training. A `validation_fraction` share of the pairs is held
/// out; the parameters with the best validation accuracy (ties: lower loss) are
/// returned, and training stops after `patience` epochs without improvement.
pub fn train_normalized<T: Scalar>(
    pairs: &[NormalizedPair<T>],
    input_dim: usize,
    config: &TrainConfig,
) -> Result<(SiameseModel<T>, TrainHistory), MatchError> {
    config.validate()?;
    let half = T::of(0.5);
    let positives = pairs.iter().filter(|p| p.label > half).count();
    if positives == 0 || positives == pairs.len() {
        return Err(MatchError::DegenerateDataset);
    }
    if let Some(p) = pairs.iter().find(|p| p.a.len() != input_dim || p.b.len() != input_dim) {
        return Err(MatchError::DimensionMismatch {
            expected: input_dim,
            found: p.a.len().max(p.b.len()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = SiameseModel::new(input_dim, config.hidden_dim, config.seed);
    let mut history = TrainHistory::default();
    if config.epochs == 0 {
        return Ok((model, history));
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((pairs.len() as f64 * config.validation_fraction).round() as usize)
        .clamp(1, pairs.len() - 1);
    let validation: Vec<NormalizedPair<T>> = order[..n_val].iter().map(|i| pairs[*i].clone()).collect();
    let mut train_idx: Vec<usize> = order[n_val..].to_vec();

    let n_params = model.parameter_count();
    let mut adam = Adam {
        m: vec![T::zero(); n_params],
        v: vec![T::zero(); n_params],
        t: 0,
    };
    let lr = T::of(config.learning_rate);
    let mut best: Option<(f64, f64, SiameseModel<T>)> = None;
    let mut since_best = 0;
    let mut s = Scratch {
        za: vec![T::zero(); config.hidden_dim],
        zb: vec![T::zero(); config.hidden_dim],
    };
    let mut grad = vec![T::zero(); n_params];

    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            let weight = T::one() / T::of_usize(batch.len());
            for i in batch {
                let l = accumulate(&model, &pairs[*i], weight, &mut grad, &mut s);
                epoch_loss += l.as_f64();
            }
            adam.step(&mut model, &grad, lr);
        }
        let (val_loss, val_accuracy) = evaluate(&model, &validation);
        let improved = match &best {
            None => true,
            Some((acc, loss, _)) => {
                val_accuracy > *acc || (val_accuracy == *acc && val_loss < *loss)
            }
        };
        if improved {
            best = Some((val_accuracy, val_loss, model.clone()));
            history.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
        }
        history.epochs.push(EpochStats {
            epoch,
            train_loss: epoch_loss / train_idx.len() as f64,
            val_loss,
            val_accuracy,
            best_val_accuracy: best.as_ref().map_or(0.0, |b| b.0),
        });
        if since_best >= config.patience {
            break;
        }
    }
    let model = best.map(|b| b.2).unwrap_or(model);
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn separable(n: usize, dim: usize, seed: u64) -> Vec<NormalizedPair<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..n {
            let base: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect();
            if i % 2 == 0 {
                let near: Vec<f64> = base.iter().map(|x| x * rng.gen_range(0.97..1.03)).collect();
                out.push(NormalizedPair::new(&base, &near, 1.0).unwrap());
            } else {
                let mut a = base.clone();
                let mut b = base;
                // disjoint flags in the first half of the features
                for k in 0..dim / 2 {
                    if k % 2 == 0 {
                        a[k] = 1.0;
                        b[k] = 0.0;
                    } else {
                        a[k] = 0.0;
                        b[k] = 1.0;
                    }
                }
                out.push(NormalizedPair::new(&a, &b, 0.0).unwrap());
            }
        }
        out
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let pairs = separable(10, 6, 1);
        let cfg = TrainConfig {
            epochs: 0,
            hidden_dim: 4,
            ..Default::default()
        };
        let (m, h) = train_normalized(&pairs, 6, &cfg).unwrap();
        assert_eq!(m, SiameseModel::new(6, 4, cfg.seed));
        assert!(h.epochs.is_empty());
    }

    #[test]
    fn single_class_is_rejected() {
        let pairs: Vec<_> = separable(10, 6, 1).into_iter().filter(|p| p.label == 1.0).collect();
        assert!(matches!(
            train_normalized(&pairs, 6, &TrainConfig::default()),
            Err(MatchError::DegenerateDataset)
        ));
    }

    #[test]
    fn learns_separable_pairs() {
        let pairs = separable(400, 12, 3);
        let cfg = TrainConfig {
            epochs: 150,
            batch_size: 20,
            learning_rate: 1e-2,
            hidden_dim: 16,
            patience: 50,
            ..Default::default()
        };
        let (m, h) = train_normalized(&pairs, 12, &cfg).unwrap();
        let held_out = separable(200, 12, 99);
        assert!(accuracy(&m, &held_out) >= 0.9, "{}", accuracy(&m, &held_out));
        let best: Vec<f64> = h.epochs.iter().map(|e| e.best_val_accuracy).collect();
        assert!(best.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn training_is_deterministic() {
        let pairs = separable(60, 5, 5);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 8,
            hidden_dim: 6,
            ..Default::default()
        };
        let (a, _) = train_normalized(&pairs, 5, &cfg).unwrap();
        let (b, _) = train_normalized(&pairs, 5, &cfg).unwrap();
        let bits = |m: &SiameseModel<f64>| m.parameters().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut model = SiameseModel::<f64>::new(7, 4, 11);
        model.b1.iter_mut().enumerate().for_each(|(i, b)| *b = 0.1 * i as f64);
        model.b2 = -0.2;
        let batch = separable(6, 7, 2);
        let (_, g) = loss_and_gradients(&model, &batch);
        let eps = 1e-5;
        for i in 0..model.parameter_count() {
            let mut plus = model.clone();
            *plus.parameter_mut(i) += eps;
            let mut minus = model.clone();
            *minus.parameter_mut(i) -= eps;
            let numeric =
                (loss_and_gradients(&plus, &batch).0 - loss_and_gradients(&minus, &batch).0) / (2.0 * eps);
            let analytic = g.values[i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            assert!((analytic - numeric).abs() / denom < 1e-4, "param {i}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn config_validation() {
        let cfg = TrainConfig {
            validation_fraction: 1.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(MatchError::InvalidConfig(_))));
    }
}
