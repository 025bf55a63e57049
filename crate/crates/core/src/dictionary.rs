//! Visual dictionaries learned from descriptor sets, and bag-of-words quantization.
//!
//! A deep forest stacks optimum-path forest layers: layer 1 clusters the
//! descriptors, and every later layer clusters the previous layer's prototypes
//! with a `k_max` derived from the previous layer's size. The deep (dOPF)
//! dictionary keeps only the last layer's prototypes; the hierarchical (hOPF)
//! dictionary concatenates the prototypes of every layer.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError, SCHEMA_VERSION};
use crate::cluster::{cluster_best_k, kmeans_cluster, ClusterError, Forest};
use crate::scalar::{squared_distance, Scalar};
use crate::signal::{Descriptor, Label};

#[derive(Debug, Error, PartialEq)]
pub enum DictError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("invalid layer schedule: {0}")]
    Schedule(String),
    #[error("need at least {needed} descriptors, got {found}")]
    TooFewDescriptors { needed: usize, found: usize },
    #[error("no descriptors to quantize")]
    EmptyDescriptors,
    #[error("descriptor dimension {found} does not match dictionary dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dictionary has no words")]
    EmptyDictionary,
}

/// Per-layer `k_max` rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSchedule {
    pub n_layers: usize,
    pub layer1_kmax: usize,
    /// Fractions of the previous layer's prototype count, for layers `2..=n_layers`.
    pub fractions: Vec<f64>,
}

impl LayerSchedule {
    pub fn new(n_layers: usize, layer1_kmax: usize, fractions: Vec<f64>) -> Result<Self, DictError> {
        let s = Self { n_layers, layer1_kmax, fractions };
        s.validate()?;
        Ok(s)
    }

    /// Four layers: `k_max = 100`, then 1%, 10%, 10% of the previous layer.
    pub fn four_layer() -> Self {
        Self { n_layers: 4, layer1_kmax: 100, fractions: vec![0.01, 0.1, 0.1] }
    }

    pub fn validate(&self) -> Result<(), DictError> {
        let fail = |m: String| Err(DictError::Schedule(m));
        if self.n_layers < 1 {
            return fail("at least one layer required".into());
        }
        if self.layer1_kmax < 1 {
            return fail("layer1_kmax must be at least 1".into());
        }
        if self.fractions.len() != self.n_layers - 1 {
            return fail(format!(
                "{} layers need {} fractions, got {}",
                self.n_layers,
                self.n_layers - 1,
                self.fractions.len()
            ));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return fail(format!("fraction {f} is outside (0, 1]"));
        }
        Ok(())
    }
}

impl Default for LayerSchedule {
    fn default() -> Self {
        Self::four_layer()
    }
}

/// Why a schedule yields no further layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleStop {
    /// The previous layer collapsed to a single prototype.
    SinglePrototype,
    /// Every scheduled layer has been trained.
    Complete,
}

/// `k_max` for the layer following `observed` (prototype counts of the layers
/// trained so far): `max(1, round_half_up(f · |S_prev|))`, capped at `|S_prev| − 1`.
pub fn resolve_schedule(s: &LayerSchedule, observed: &[usize]) -> Result<usize, ScheduleStop> {
    let Some(&prev) = observed.last() else {
        return Ok(s.layer1_kmax);
    };
    if observed.len() >= s.n_layers {
        return Err(ScheduleStop::Complete);
    }
    if prev <= 1 {
        return Err(ScheduleStop::SinglePrototype);
    }
    let f = s.fractions[observed.len() - 1];
    let k = ((f * prev as f64) + 0.5).floor().max(1.0) as usize;
    Ok(k.min(prev - 1))
}

/// One trained layer.
#[derive(Debug, Clone)]
pub struct Layer<T> {
    pub forest: Forest<T>,
    pub k_max: usize,
    /// Prototype positions in the original descriptor list, ascending.
    pub prototype_indices: Vec<usize>,
    pub prototype_vectors: Vec<Vec<T>>,
}

#[derive(Debug, Clone)]
pub struct DeepForest<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> DeepForest<T> {
    /// `|S₁|, |S₂|, …`
    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.prototype_indices.len()).collect()
    }
}

/// Trains layers until the schedule is exhausted or a layer keeps a single
/// prototype. Each layer's `k_max` is capped at its input size minus one.
pub fn train_deep_forest<T: Scalar>(descriptors: &[Vec<T>], s: &LayerSchedule) -> Result<DeepForest<T>, DictError> {
    s.validate()?;
    if descriptors.len() < 2 {
        return Err(DictError::TooFewDescriptors { needed: 2, found: descriptors.len() });
    }
    let mut layers: Vec<Layer<T>> = Vec::new();
    let mut input_index: Vec<usize> = (0..descriptors.len()).collect();
    let mut sizes = Vec::new();
    while let Ok(k_max) = resolve_schedule(s, &sizes) {
        let input: Vec<Vec<T>> = input_index.iter().map(|&i| descriptors[i].clone()).collect();
        let k_max = k_max.min(input.len() - 1);
        let forest = cluster_best_k(&input, k_max)?;
        let prototype_indices: Vec<usize> = forest.sorted_prototypes().into_iter().map(|p| input_index[p]).collect();
        let prototype_vectors: Vec<Vec<T>> = prototype_indices.iter().map(|&i| descriptors[i].clone()).collect();
        sizes.push(prototype_indices.len());
        input_index = prototype_indices.clone();
        layers.push(Layer { forest, k_max, prototype_indices, prototype_vectors });
    }
    Ok(DeepForest { layers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictMethod {
    Opf,
    Dopf,
    Hopf,
    Kmeans,
}

impl fmt::Display for DictMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DictMethod::Opf => "OPF",
            DictMethod::Dopf => "dOPF",
            DictMethod::Hopf => "hOPF",
            DictMethod::Kmeans => "k-means",
        })
    }
}

/// Visual words. `provenance[i]` is the 1-based layer of word `i` for hOPF, 0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    pub words: Vec<Vec<T>>,
    pub method: DictMethod,
    pub provenance: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct DictionaryFile<T> {
    version: u64,
    method: DictMethod,
    dim: usize,
    words: Vec<Vec<T>>,
    provenance: Vec<usize>,
}

impl<T: Scalar> Dictionary<T> {
    pub fn new(words: Vec<Vec<T>>, method: DictMethod, provenance: Vec<usize>) -> Result<Self, DictError> {
        let d = Self { words, method, provenance };
        d.check()?;
        Ok(d)
    }

    fn check(&self) -> Result<(), DictError> {
        let dim = self.words.first().ok_or(DictError::EmptyDictionary)?.len();
        if let Some(w) = self.words.iter().find(|w| w.len() != dim) {
            return Err(DictError::DimensionMismatch { expected: dim, found: w.len() });
        }
        if self.provenance.len() != self.words.len() {
            return Err(ArtifactError::schema(
                "provenance",
                format!("has {} entries for {} words", self.provenance.len(), self.words.len()),
            )
            .into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Descriptor dimension.
    pub fn dim(&self) -> usize {
        self.words[0].len()
    }

    pub fn to_json(&self) -> String {
        artifact::to_json(&DictionaryFile {
            version: SCHEMA_VERSION,
            method: self.method,
            dim: self.dim(),
            words: self.words.clone(),
            provenance: self.provenance.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, DictError> {
        let f: DictionaryFile<T> = artifact::from_json(text)?;
        if f.words.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ArtifactError::schema("words", "non-finite value").into());
        }
        let d = Self::new(f.words, f.method, f.provenance)?;
        if d.dim() != f.dim {
            return Err(ArtifactError::schema("dim", format!("declares {} but words have dimension {}", f.dim, d.dim())).into());
        }
        Ok(d)
    }
}

/// Last-layer prototypes, ascending original index.
pub fn dict_dopf<T: Scalar>(df: &DeepForest<T>) -> Dictionary<T> {
    let last = df.layers.last().expect("trained deep forest has a layer");
    Dictionary {
        words: last.prototype_vectors.clone(),
        method: DictMethod::Dopf,
        provenance: vec![0; last.prototype_vectors.len()],
    }
}

/// Concatenation of every layer's prototypes (layer-major, ascending index),
/// duplicates across layers kept as separate words.
pub fn dict_hopf<T: Scalar>(df: &DeepForest<T>) -> Dictionary<T> {
    let mut words = Vec::new();
    let mut provenance = Vec::new();
    for (i, layer) in df.layers.iter().enumerate() {
        words.extend(layer.prototype_vectors.iter().cloned());
        provenance.extend(std::iter::repeat_n(i + 1, layer.prototype_vectors.len()));
    }
    Dictionary { words, method: DictMethod::Hopf, provenance }
}

/// Word count of an hOPF dictionary built from layers of the given sizes.
pub fn hopf_size(layer_sizes: &[usize]) -> usize {
    layer_sizes.iter().sum()
}

/// How to learn a dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum DictionaryConfig {
    /// Flat best-k OPF (`k_max` capped at `n − 1`).
    Opf { k_max: usize },
    Dopf { schedule: LayerSchedule },
    Hopf { schedule: LayerSchedule },
    /// k-means with a fixed `k`, or with `k` taken from the last layer of a
    /// dOPF run under `schedule` when `k` is absent.
    Kmeans {
        #[serde(default)]
        k: Option<usize>,
        #[serde(default)]
        schedule: Option<LayerSchedule>,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
}

fn default_max_iter() -> usize {
    300
}

impl DictionaryConfig {
    pub fn method(&self) -> DictMethod {
        match self {
            DictionaryConfig::Opf { .. } => DictMethod::Opf,
            DictionaryConfig::Dopf { .. } => DictMethod::Dopf,
            DictionaryConfig::Hopf { .. } => DictMethod::Hopf,
            DictionaryConfig::Kmeans { .. } => DictMethod::Kmeans,
        }
    }
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig::Hopf { schedule: LayerSchedule::four_layer() }
    }
}

/// Learns a dictionary. `seed` only affects k-means initialization.
pub fn learn_dictionary<T: Scalar>(
    descriptors: &[Vec<T>],
    cfg: &DictionaryConfig,
    seed: u64,
) -> Result<Dictionary<T>, DictError> {
    if descriptors.len() < 2 {
        return Err(DictError::TooFewDescriptors { needed: 2, found: descriptors.len() });
    }
    match cfg {
        DictionaryConfig::Opf { k_max } => {
            let k_max = (*k_max).min(descriptors.len() - 1);
            let forest = cluster_best_k(descriptors, k_max)?;
            let words: Vec<Vec<T>> = forest.sorted_prototypes().into_iter().map(|i| descriptors[i].clone()).collect();
            let n = words.len();
            Dictionary::new(words, DictMethod::Opf, vec![0; n])
        }
        DictionaryConfig::Dopf { schedule } => Ok(dict_dopf(&train_deep_forest(descriptors, schedule)?)),
        DictionaryConfig::Hopf { schedule } => Ok(dict_hopf(&train_deep_forest(descriptors, schedule)?)),
        DictionaryConfig::Kmeans { k, schedule, max_iter } => {
            let k = match k {
                Some(k) => *k,
                None => {
                    let schedule = schedule.clone().unwrap_or_default();
                    let df = train_deep_forest(descriptors, &schedule)?;
                    *df.layer_sizes().last().expect("at least one layer")
                }
            };
            let model = kmeans_cluster(descriptors, k, seed, *max_iter)?;
            Dictionary::new(model.centroids, DictMethod::Kmeans, vec![0; k])
        }
    }
}

/// Bag-of-words representation of one signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub subject_id: String,
    pub label: Label,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Index of the closest word (Euclidean); ties go to the lowest index.
pub fn nearest_word<T: Scalar>(x: &[T], dict: &Dictionary<T>) -> usize {
    let mut best = (0, T::infinity());
    for (j, w) in dict.words.iter().enumerate() {
        let d = squared_distance(x, w);
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// Word-frequency counts for a set of vectors.
pub fn bin_counts<'a, T: Scalar, I>(vectors: I, dict: &Dictionary<T>) -> Result<Vec<u64>, DictError>
where
    I: IntoIterator<Item = &'a [T]>,
{
    let mut counts = vec![0u64; dict.len()];
    let mut seen = 0usize;
    for v in vectors {
        if v.len() != dict.dim() {
            return Err(DictError::DimensionMismatch { expected: dict.dim(), found: v.len() });
        }
        counts[nearest_word(v, dict)] += 1;
        seen += 1;
    }
    if seen == 0 {
        return Err(DictError::EmptyDescriptors);
    }
    Ok(counts)
}

/// Quantizes one signal's descriptors into a histogram over `dict`.
pub fn quantize<T: Scalar>(descriptors: &[Descriptor<T>], dict: &Dictionary<T>, label: Label) -> Result<Histogram, DictError> {
    let counts = bin_counts(descriptors.iter().map(|d| d.values.as_slice()), dict)?;
    Ok(Histogram { counts, subject_id: descriptors[0].source_signal.clone(), label })
}
