//! Bernoulli restricted Boltzmann machine trained with one-step contrastive
//! divergence, used to compress normalized histograms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError, SCHEMA_VERSION};
use crate::scalar::Scalar;

/// Compression ratios accepted without an override.
pub const STANDARD_RATIOS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Error, PartialEq)]
pub enum RbmError {
    #[error("no training vectors")]
    Empty,
    #[error("ratio {0} is not one of 0.25, 0.5, 0.75 (set the override to allow it)")]
    Ratio(f64),
    #[error("vector dimension {found} does not match visible dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector {index} has a value outside [0, 1]")]
    OutOfRange { index: usize },
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbmHyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for RbmHyper {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 100, batch: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RbmModel<T> {
    /// Row-major `visible × hidden`.
    pub weights: Vec<T>,
    pub b_vis: Vec<T>,
    pub b_hid: Vec<T>,
    pub visible_dim: usize,
    pub hidden_dim: usize,
    pub ratio: f64,
    pub hyper: RbmHyper,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RbmFile<T> {
    version: u64,
    #[serde(flatten)]
    model: RbmModel<T>,
}

/// Hidden size for a ratio: `max(1, round(ratio · D))`.
pub fn hidden_size(visible_dim: usize, ratio: f64) -> usize {
    ((ratio * visible_dim as f64).round() as usize).max(1)
}

/// Scales a count vector to unit sum (all-zero vectors stay zero).
pub fn l1_normalize<T: Scalar>(counts: &[T]) -> Vec<T> {
    let total: T = counts.iter().map(|c| c.abs()).sum();
    if total > T::zero() {
        counts.iter().map(|&c| c / total).collect()
    } else {
        counts.to_vec()
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Scalar> RbmModel<T> {
    fn w(&self, i: usize, j: usize) -> T {
        self.weights[i * self.hidden_dim + j]
    }

    /// `sigmoid(Wᵀv + b_hid)`
    pub fn hidden_probs(&self, v: &[T]) -> Vec<T> {
        (0..self.hidden_dim)
            .map(|j| {
                let act = v.iter().enumerate().fold(self.b_hid[j], |acc, (i, &x)| acc + x * self.w(i, j));
                sigmoid(act)
            })
            .collect()
    }

    /// `sigmoid(W h + b_vis)`
    pub fn visible_probs(&self, h: &[T]) -> Vec<T> {
        (0..self.visible_dim)
            .map(|i| {
                let row = &self.weights[i * self.hidden_dim..(i + 1) * self.hidden_dim];
                let act = row.iter().zip(h).fold(self.b_vis[i], |acc, (&w, &x)| acc + w * x);
                sigmoid(act)
            })
            .collect()
    }

    /// Mean over vectors of the mean squared mean-field reconstruction error.
    pub fn reconstruction_error(&self, data: &[Vec<T>]) -> T {
        let total: T = data
            .iter()
            .map(|v| {
                let r = self.visible_probs(&self.hidden_probs(v));
                let se: T = v.iter().zip(&r).map(|(&a, &b)| (a - b) * (a - b)).sum();
                se / T::from_usize_lossy(self.visible_dim)
            })
            .sum();
        total / T::from_usize_lossy(data.len().max(1))
    }

    pub fn to_json(&self) -> String {
        artifact::to_json(&RbmFile { version: SCHEMA_VERSION, model: self.clone() })
    }

    pub fn from_json(text: &str) -> Result<Self, RbmError> {
        let f: RbmFile<T> = artifact::from_json(text)?;
        let m = f.model;
        if m.weights.len() != m.visible_dim * m.hidden_dim {
            return Err(ArtifactError::schema("weights", format!("expected {} entries", m.visible_dim * m.hidden_dim)).into());
        }
        if m.b_vis.len() != m.visible_dim {
            return Err(ArtifactError::schema("b_vis", format!("expected {} entries", m.visible_dim)).into());
        }
        if m.b_hid.len() != m.hidden_dim {
            return Err(ArtifactError::schema("b_hid", format!("expected {} entries", m.hidden_dim)).into());
        }
        Ok(m)
    }
}

/// A trained model with its reconstruction-error trace: entry 0 is before
/// training, entry `e` after epoch `e`.
#[derive(Debug, Clone)]
pub struct RbmTraining<T> {
    pub model: RbmModel<T>,
    pub error_history: Vec<T>,
}

/// CD-1 training on vectors in `[0, 1]` (L1-normalized histograms).
/// `ratio` must be one of [`STANDARD_RATIOS`] unless `allow_any_ratio` is set.
pub fn train_rbm<T: Scalar>(
    data: &[Vec<T>],
    ratio: f64,
    hyper: RbmHyper,
    allow_any_ratio: bool,
) -> Result<RbmTraining<T>, RbmError> {
    if data.is_empty() {
        return Err(RbmError::Empty);
    }
    if !(ratio > 0.0 && ratio <= 1.0) || (!allow_any_ratio && !STANDARD_RATIOS.contains(&ratio)) {
        return Err(RbmError::Ratio(ratio));
    }
    if !(hyper.lr > 0.0 && hyper.lr.is_finite()) || hyper.batch == 0 {
        return Err(RbmError::Hyper("lr must be positive and batch at least 1".into()));
    }
    let d = data[0].len();
    for (index, v) in data.iter().enumerate() {
        if v.len() != d {
            return Err(RbmError::DimensionMismatch { expected: d, found: v.len() });
        }
        if v.iter().any(|&x| !(x >= T::zero() && x <= T::one())) {
            return Err(RbmError::OutOfRange { index });
        }
    }
    let h = hidden_size(d, ratio);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let init = Normal::new(0.0, 0.01).expect("valid normal");
    let mut m = RbmModel {
        weights: (0..d * h).map(|_| T::lit(init.sample(&mut rng))).collect(),
        b_vis: vec![T::zero(); d],
        b_hid: vec![T::zero(); h],
        visible_dim: d,
        hidden_dim: h,
        ratio,
        hyper,
    };
    let lr = T::lit(hyper.lr);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = vec![m.reconstruction_error(data)];

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.batch) {
            let scale = lr / T::from_usize_lossy(chunk.len());
            let mut dw = vec![T::zero(); d * h];
            let mut dv = vec![T::zero(); d];
            let mut dh = vec![T::zero(); h];
            for &idx in chunk {
                let v = &data[idx];
                let h_pos = m.hidden_probs(v);
                let h_state: Vec<T> = h_pos
                    .iter()
                    .map(|&p| if rng.random::<f64>() < p.as_f64() { T::one() } else { T::zero() })
                    .collect();
                let v_neg = m.visible_probs(&h_state);
                let h_neg = m.hidden_probs(&v_neg);
                for i in 0..d {
                    for j in 0..h {
                        dw[i * h + j] = dw[i * h + j] + v[i] * h_pos[j] - v_neg[i] * h_neg[j];
                    }
                    dv[i] = dv[i] + v[i] - v_neg[i];
                }
                for j in 0..h {
                    dh[j] = dh[j] + h_pos[j] - h_neg[j];
                }
            }
            for (w, g) in m.weights.iter_mut().zip(&dw) {
                *w = *w + scale * *g;
            }
            for (b, g) in m.b_vis.iter_mut().zip(&dv) {
                *b = *b + scale * *g;
            }
            for (b, g) in m.b_hid.iter_mut().zip(&dh) {
                *b = *b + scale * *g;
            }
        }
        history.push(m.reconstruction_error(data));
    }
    Ok(RbmTraining { model: m, error_history: history })
}

/// Mean-field hidden probabilities: the compressed representation.
pub fn compress<T: Scalar>(m: &RbmModel<T>, v: &[T]) -> Result<Vec<T>, RbmError> {
    if v.len() != m.visible_dim {
        return Err(RbmError::DimensionMismatch { expected: m.visible_dim, found: v.len() });
    }
    Ok(m.hidden_probs(v))
}
