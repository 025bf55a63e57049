//! Optimum-path forest toolkit for handwriting-dynamics screening: signal
//! ingestion and wavelet descriptors, unsupervised OPF clustering, deep
//! (layered) dictionaries, bag-of-words quantization, supervised OPF and
//! naive Bayes classifiers, RBM compression, and the hold-out protocol.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the precision.

pub mod artifact;
pub mod classify;
pub mod cluster;
pub mod dictionary;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod rbm;
pub mod scalar;
pub mod signal;

use thiserror::Error;

pub use artifact::{ArtifactError, SCHEMA_VERSION};
pub use classify::{predict_bayes, predict_sopf, train_bayes, train_sopf, BayesModel, ClassifyError, SopfModel};
pub use cluster::{
    cluster_best_k, cluster_with_k, kmeans_cluster, sweep_k, ClusterError, Forest, KMeansModel, KSweep, SweepOptions,
};
pub use dictionary::{
    dict_dopf, dict_hopf, hopf_size, learn_dictionary, quantize, train_deep_forest, DeepForest, DictError, DictMethod, Dictionary, DictionaryConfig,
    Histogram, LayerSchedule,
};
pub use eval::{
    balanced_accuracy, holdout_experiment, per_class_recall, wilcoxon_signed_rank, ConfusionMatrix, Dataset, EvalError,
    EvalReport, LabeledSample, WilcoxonOutcome,
};
pub use graph::{build_knn_graph, normalized_cut, ClusterLabeling, GraphError, KnnGraph, NeighborTable};
pub use pipeline::{Classifier, ClassifierBundle, ClassifierKind, PipelineConfig};
pub use rbm::{compress, train_rbm, RbmError, RbmHyper, RbmModel};
pub use scalar::{mix_seed, Scalar};
pub use signal::{
    extract_corpus, extract_descriptors, generate_synthetic_cohort, parse_signal_file, write_signal_csv, Descriptor, Label,
    MultiChannelSignal, SignalError, SynthParams,
};

pub type Signal64 = MultiChannelSignal<f64>;
pub type Signal32 = MultiChannelSignal<f32>;
pub type Descriptor64 = Descriptor<f64>;
pub type Descriptor32 = Descriptor<f32>;
pub type KnnGraph64 = KnnGraph<f64>;
pub type KnnGraph32 = KnnGraph<f32>;
pub type Forest64 = Forest<f64>;
pub type Forest32 = Forest<f32>;
pub type Dictionary64 = Dictionary<f64>;
pub type Dictionary32 = Dictionary<f32>;
pub type SopfModel64 = SopfModel<f64>;
pub type SopfModel32 = SopfModel<f32>;
pub type BayesModel64 = BayesModel<f64>;
pub type BayesModel32 = BayesModel<f32>;
pub type RbmModel64 = RbmModel<f64>;
pub type RbmModel32 = RbmModel<f32>;
pub type ClassifierBundle64 = ClassifierBundle<f64>;
pub type ClassifierBundle32 = ClassifierBundle<f32>;

/// Top-level error for the end-to-end pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what} dimension mismatch: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Dictionary(#[from] DictError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Rbm(#[from] RbmError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
