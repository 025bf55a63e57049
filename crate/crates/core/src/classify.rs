//! Supervised classifiers over fixed-length feature vectors: supervised OPF
//! and a diagonal-Gaussian Bayes classifier.
//!
//! Class labels are dense indices `0..c`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{euclidean, Scalar};

/// Variance floor for the Bayes classifier.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("no training samples")]
    Empty,
    #[error("{samples} samples but {labels} labels")]
    LabelCount { samples: usize, labels: usize },
    #[error("training data has a single class; at least two are required")]
    SingleClass,
    #[error("class {class} has {found} samples, at least {needed} required")]
    ClassTooSmall { class: usize, found: usize, needed: usize },
    #[error("feature dimension {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sample {0} has a non-finite feature")]
    NonFinite(usize),
}

fn check_training<T: Scalar>(x: &[Vec<T>], y: &[usize]) -> Result<(usize, usize), ClassifyError> {
    if x.is_empty() {
        return Err(ClassifyError::Empty);
    }
    if x.len() != y.len() {
        return Err(ClassifyError::LabelCount { samples: x.len(), labels: y.len() });
    }
    let dim = x[0].len();
    for (i, v) in x.iter().enumerate() {
        if v.len() != dim {
            return Err(ClassifyError::DimensionMismatch { expected: dim, found: v.len() });
        }
        if v.iter().any(|a| !a.is_finite()) {
            return Err(ClassifyError::NonFinite(i));
        }
    }
    let c = y.iter().max().map_or(0, |m| m + 1);
    Ok((dim, c))
}

fn class_sizes(y: &[usize], c: usize) -> Vec<usize> {
    let mut sizes = vec![0; c];
    for &l in y {
        sizes[l] += 1;
    }
    sizes
}

/// Supervised optimum-path forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SopfModel<T> {
    pub vectors: Vec<Vec<T>>,
    /// True training labels.
    pub labels: Vec<usize>,
    /// Label conquered through the optimum path.
    pub assigned: Vec<usize>,
    pub cost: Vec<T>,
    /// Sample indices by ascending `(cost, index)`.
    pub ordered: Vec<usize>,
    /// MST endpoints adjacent to a different class, ascending.
    pub prototypes: Vec<usize>,
    pub n_classes: usize,
}

/// Prim's MST over the complete Euclidean graph. Returns the parent of every
/// non-root node; node 0 is the root. Ties resolve toward the lower
/// `(weight, index)`.
fn minimum_spanning_tree<T: Scalar>(x: &[Vec<T>]) -> Vec<Option<usize>> {
    let n = x.len();
    let mut in_tree = vec![false; n];
    let mut key = vec![T::infinity(); n];
    let mut parent = vec![None; n];
    key[0] = T::zero();
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (u == usize::MAX || key[v] < key[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        for v in 0..n {
            if !in_tree[v] {
                let d = euclidean(&x[u], &x[v]);
                let better = d < key[v] || (d == key[v] && parent.get(v).copied().flatten().is_none_or(|p| u < p));
                if better {
                    key[v] = d;
                    parent[v] = Some(u);
                }
            }
        }
    }
    parent
}

/// Trains supervised OPF: MST boundary samples become prototypes at cost 0,
/// and every other sample takes the minimum over paths of the maximum arc
/// length along the path, inheriting the label of its root.
pub fn train_sopf<T: Scalar>(x: &[Vec<T>], y: &[usize]) -> Result<SopfModel<T>, ClassifyError> {
    let (_, c) = check_training(x, y)?;
    if class_sizes(y, c).iter().filter(|&&s| s > 0).count() < 2 {
        return Err(ClassifyError::SingleClass);
    }
    let n = x.len();
    let parent = minimum_spanning_tree(x);
    let mut is_proto = vec![false; n];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            if y[p] != y[v] {
                is_proto[p] = true;
                is_proto[v] = true;
            }
        }
    }
    let prototypes: Vec<usize> = (0..n).filter(|&i| is_proto[i]).collect();

    let mut cost = vec![T::infinity(); n];
    let mut assigned = y.to_vec();
    for &p in &prototypes {
        cost[p] = T::zero();
    }
    let mut done = vec![false; n];
    for _ in 0..n {
        let mut s = usize::MAX;
        for v in 0..n {
            if !done[v] && (s == usize::MAX || cost[v] < cost[s]) {
                s = v;
            }
        }
        done[s] = true;
        for t in 0..n {
            if done[t] {
                continue;
            }
            let offer = cost[s].max(euclidean(&x[s], &x[t]));
            if offer < cost[t] {
                cost[t] = offer;
                assigned[t] = assigned[s];
            }
        }
    }

    let mut ordered: Vec<usize> = (0..n).collect();
    ordered.sort_by(|&a, &b| cost[a].partial_cmp(&cost[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

    Ok(SopfModel { vectors: x.to_vec(), labels: y.to_vec(), assigned, cost, ordered, prototypes, n_classes: c })
}

impl<T: Scalar> SopfModel<T> {
    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }
}

/// Classifies `h` as `min_s max(cost(s), d(s, h))` over training samples,
/// scanning them by ascending cost and stopping once no cheaper path is possible.
/// Ties go to the lower training cost, then the lower index.
pub fn predict_sopf<T: Scalar>(m: &SopfModel<T>, h: &[T]) -> Result<(usize, T), ClassifyError> {
    if h.len() != m.dim() {
        return Err(ClassifyError::DimensionMismatch { expected: m.dim(), found: h.len() });
    }
    let mut best = (usize::MAX, T::infinity());
    for &s in &m.ordered {
        if m.cost[s] >= best.1 {
            break;
        }
        let offer = m.cost[s].max(euclidean(&m.vectors[s], h));
        if offer < best.1 {
            best = (s, offer);
        }
    }
    Ok((m.assigned[best.0], best.1))
}

/// Diagonal-covariance Gaussian class model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BayesModel<T> {
    pub means: Vec<Vec<T>>,
    pub variances: Vec<Vec<T>>,
    pub priors: Vec<T>,
}

/// Per-class means, unbiased variances floored at [`VARIANCE_FLOOR`], and
/// empirical priors. Every class in `0..c` needs at least two samples.
pub fn train_bayes<T: Scalar>(x: &[Vec<T>], y: &[usize]) -> Result<BayesModel<T>, ClassifyError> {
    let (dim, c) = check_training(x, y)?;
    let sizes = class_sizes(y, c);
    if let Some((class, &found)) = sizes.iter().enumerate().find(|(_, &s)| s < 2) {
        return Err(ClassifyError::ClassTooSmall { class, found, needed: 2 });
    }
    if c < 2 {
        return Err(ClassifyError::SingleClass);
    }
    let mut means = vec![vec![T::zero(); dim]; c];
    for (v, &l) in x.iter().zip(y) {
        for (m, &a) in means[l].iter_mut().zip(v) {
            *m = *m + a;
        }
    }
    for (m, &s) in means.iter_mut().zip(&sizes) {
        let s = T::from_usize_lossy(s);
        m.iter_mut().for_each(|a| *a = *a / s);
    }
    let mut variances = vec![vec![T::zero(); dim]; c];
    for (v, &l) in x.iter().zip(y) {
        for ((acc, &a), &mu) in variances[l].iter_mut().zip(v).zip(&means[l]) {
            *acc = *acc + (a - mu) * (a - mu);
        }
    }
    let floor = T::lit(VARIANCE_FLOOR);
    for (var, &s) in variances.iter_mut().zip(&sizes) {
        let denom = T::from_usize_lossy(s - 1);
        var.iter_mut().for_each(|a| *a = (*a / denom).max(floor));
    }
    let total = T::from_usize_lossy(x.len());
    let priors = sizes.iter().map(|&s| T::from_usize_lossy(s) / total).collect();
    Ok(BayesModel { means, variances, priors })
}

impl<T: Scalar> BayesModel<T> {
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// `log P(class) + Σ log N(h_d; μ_d, σ²_d)` for every class.
    pub fn log_posteriors(&self, h: &[T]) -> Vec<T> {
        let half_log_2pi = T::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
        let half = T::lit(0.5);
        self.means
            .iter()
            .zip(&self.variances)
            .zip(&self.priors)
            .map(|((mu, var), &p)| {
                let ll: T = h
                    .iter()
                    .zip(mu)
                    .zip(var)
                    .map(|((&x, &m), &v)| -half_log_2pi - half * v.ln() - (x - m) * (x - m) / (T::lit(2.0) * v))
                    .sum();
                p.ln() + ll
            })
            .collect()
    }
}

/// Maximum a-posteriori class; ties go to the lower class index.
pub fn predict_bayes<T: Scalar>(m: &BayesModel<T>, h: &[T]) -> Result<usize, ClassifyError> {
    if h.len() != m.dim() {
        return Err(ClassifyError::DimensionMismatch { expected: m.dim(), found: h.len() });
    }
    let scores = m.log_posteriors(h);
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = j;
        }
    }
    Ok(best)
}
