//! Column to relation matching with a Siamese network over profile pairs.
//!
//! Both profiles of a pair are normalized jointly, encoded by one shared ReLU
//! layer and compared through the absolute difference of their encodings:
//! `score = sigmoid(w2 · |relu(W1 a + b1) - relu(W1 b + b1)| + b2)`.

mod persist;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::profiler::{layout, ColumnProfile, DomainProfile, FeatureVector};
use crate::rdf::RelationKey;
use crate::scalar::Scalar;

pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION, MODEL_HEADER};
pub use train::{
    accuracy, loss_and_gradients, train, train_normalized, EpochStats, Gradients,
    NormalizedPair, TrainConfig, TrainHistory, TrainingPair,
};

pub const DEFAULT_HIDDEN_DIM: usize = 256;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("non-finite value at feature {0}")]
    NonFiniteInput(usize),
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training pairs need both positive and negative labels")]
    DegenerateDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format {found:?}")]
    VersionMismatch { found: String },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-feature L1 normalization of a pair: `a_i / (|a_i| + |b_i|)`, zero when
/// both are zero.
pub fn normalize_pair<T: Scalar>(a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>), MatchError> {
    if a.len() != b.len() {
        return Err(MatchError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let mut na = Vec::with_capacity(a.len());
    let mut nb = Vec::with_capacity(b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(MatchError::NonFiniteInput(i));
        }
        let s = x.abs() + y.abs();
        if s == T::zero() {
            na.push(T::zero());
            nb.push(T::zero());
        } else {
            na.push(*x / s);
            nb.push(*y / s);
        }
    }
    Ok((na, nb))
}

pub(crate) fn sigmoid<T: Scalar>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiameseModel<T> {
    input_dim: usize,
    hidden_dim: usize,
    /// `hidden_dim x input_dim`, row-major.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

impl<T: Scalar> SiameseModel<T> {
    /// Glorot-uniform weights and zero biases from a seeded generator.
    pub fn new(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |fan_in: usize, fan_out: usize, n: usize| -> Vec<T> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| T::of(rng.gen_range(-limit..limit))).collect()
        };
        let w1 = glorot(input_dim, hidden_dim, input_dim * hidden_dim);
        let w2 = glorot(hidden_dim, 1, hidden_dim);
        SiameseModel {
            input_dim,
            hidden_dim,
            w1,
            b1: vec![T::zero(); hidden_dim],
            w2,
            b2: T::zero(),
        }
    }

    pub fn with_default_dims(seed: u64) -> Self {
        Self::new(layout::FEATURE_COUNT, DEFAULT_HIDDEN_DIM, seed)
    }

    /// Assembles a model from raw parameters, checking their shapes.
    pub fn from_parameters(
        input_dim: usize,
        hidden_dim: usize,
        w1: Vec<T>,
        b1: Vec<T>,
        w2: Vec<T>,
        b2: T,
    ) -> Result<Self, MatchError> {
        let check = |expected: usize, found: usize| {
            (expected == found)
                .then_some(())
                .ok_or(MatchError::DimensionMismatch { expected, found })
        };
        check(input_dim * hidden_dim, w1.len())?;
        check(hidden_dim, b1.len())?;
        check(hidden_dim, w2.len())?;
        let model = SiameseModel {
            input_dim,
            hidden_dim,
            w1,
            b1,
            w2,
            b2,
        };
        if let Some(i) = model.parameters().position(|p| !p.is_finite()) {
            return Err(MatchError::NonFiniteInput(i));
        }
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// All parameters in storage order: W1, b1, w2, b2.
    pub fn parameters(&self) -> impl Iterator<Item = &T> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(std::iter::once(&self.b2))
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub(crate) fn parameter_mut(&mut self, i: usize) -> &mut T {
        let (n1, nb) = (self.w1.len(), self.b1.len());
        if i < n1 {
            &mut self.w1[i]
        } else if i < n1 + nb {
            &mut self.b1[i - n1]
        } else if i < n1 + 2 * nb {
            &mut self.w2[i - n1 - nb]
        } else {
            &mut self.b2
        }
    }

    /// Pre-activations `W1 x + b1`.
    pub(crate) fn pre_activation(&self, x: &[T], out: &mut [T]) {
        let f = self.input_dim;
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.w1[j * f..(j + 1) * f];
            let mut acc = self.b1[j];
            for (w, v) in row.iter().zip(x) {
                acc += *w * *v;
            }
            *o = acc;
        }
    }

    pub fn encode(&self, x: &[T]) -> Vec<T> {
        let mut z = vec![T::zero(); self.hidden_dim];
        self.pre_activation(x, &mut z);
        z.iter().map(|v| v.max(T::zero())).collect()
    }

    /// Logit of an already normalized pair.
    pub(crate) fn logit_normalized(&self, a: &[T], b: &[T]) -> T {
        let ea = self.encode(a);
        let eb = self.encode(b);
        let mut s = self.b2;
        for ((w, x), y) in self.w2.iter().zip(&ea).zip(&eb) {
            s += *w * (*x - *y).abs();
        }
        s
    }

    pub fn score_normalized(&self, a: &[T], b: &[T]) -> T {
        sigmoid(self.logit_normalized(a, b))
    }

    /// Similarity in `[0, 1]`; symmetric in its arguments.
    pub fn score_pair(&self, a: &[T], b: &[T]) -> Result<T, MatchError> {
        for x in [a, b] {
            if x.len() != self.input_dim {
                return Err(MatchError::DimensionMismatch {
                    expected: self.input_dim,
                    found: x.len(),
                });
            }
        }
        let (na, nb) = normalize_pair(a, b)?;
        Ok(self.score_normalized(&na, &nb))
    }

    pub fn score_profiles(&self, a: &FeatureVector<T>, b: &FeatureVector<T>) -> Result<T, MatchError> {
        self.score_pair(a.as_slice(), b.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub relation: RelationKey,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnCandidates<T> {
    pub column_id: String,
    pub column_index: usize,
    /// Descending by score, ties by relation.
    pub candidates: Vec<Candidate<T>>,
}

/// Scores each column against the relations of its coarse type and keeps those
/// above `threshold`.
pub fn candidate_mappings<T: Scalar>(
    columns: &[ColumnProfile<T>],
    domain: &DomainProfile<T>,
    model: &SiameseModel<T>,
    threshold: T,
) -> Result<Vec<ColumnCandidates<T>>, MatchError> {
    let mut out = Vec::with_capacity(columns.len());
    for c in columns {
        let mut candidates = Vec::new();
        for r in domain.relation_profiles.values() {
            if r.typing.coarse != c.typing.coarse {
                continue;
            }
            let score = model.score_profiles(&c.vector, &r.vector)?;
            if score > threshold {
                candidates.push(Candidate {
                    relation: r.relation.clone(),
                    score,
                });
            }
        }
        candidates.sort_by(|x, y| {
            y.score
                .partial_cmp(&x.score)
                .expect("finite scores")
                .then_with(|| x.relation.cmp(&y.relation))
        });
        out.push(ColumnCandidates {
            column_id: c.column_id.clone(),
            column_index: c.column_index,
            candidates,
        });
    }
    out.sort_by_key(|c| c.column_index);
    Ok(out)
}
