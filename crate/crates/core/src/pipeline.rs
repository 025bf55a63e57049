//! Workflow configuration and the single-split pipeline shared by the
//! hold-out protocol and the command-line stages.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::artifact::{self, ArtifactError, SCHEMA_VERSION};
use crate::classify::{predict_bayes, predict_sopf, train_bayes, train_sopf, BayesModel, ClassifyError, SopfModel};
use crate::dictionary::{learn_dictionary, quantize, DictError, Dictionary, DictionaryConfig, Histogram};
use crate::rbm::{compress, l1_normalize, train_rbm, RbmError, RbmHyper, RbmModel};
use crate::scalar::{mix_seed, Scalar};
use crate::signal::{Descriptor, Label};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Sopf,
    Bayes,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Sopf => "sOPF",
            ClassifierKind::Bayes => "BC",
        })
    }
}

/// Free parameters of the descriptor → dictionary → histogram → classifier flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub window_ms: f64,
    pub stride_ms: f64,
    pub dictionary: DictionaryConfig,
    pub classifier: ClassifierKind,
    /// Compress histograms with an RBM to this fraction of their length.
    pub rbm_ratio: Option<f64>,
    pub rbm: RbmHyper,
    /// L1-normalize histograms before classification.
    pub l1_normalize: bool,
    pub n_runs: usize,
    pub split: f64,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window_ms: 150.0,
            stride_ms: 100.0,
            dictionary: DictionaryConfig::default(),
            classifier: ClassifierKind::Sopf,
            rbm_ratio: None,
            rbm: RbmHyper::default(),
            l1_normalize: false,
            n_runs: 15,
            split: 0.5,
            seed: 0,
            input: None,
            output: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.window_ms > 0.0 && self.stride_ms > 0.0) {
            return bad("window_ms and stride_ms must be positive");
        }
        if self.n_runs < 1 {
            return bad("n_runs must be at least 1");
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad("split must lie strictly between 0 and 1");
        }
        if let Some(r) = self.rbm_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return bad("rbm_ratio must lie in (0, 1]");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        artifact::to_json(&ConfigFile { version: SCHEMA_VERSION, config: self.clone() })
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        Ok(artifact::from_json::<ConfigFile>(text)?.config)
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    version: u64,
    #[serde(flatten)]
    config: PipelineConfig,
}

/// Histogram counts as feature vectors, optionally L1-normalized.
pub fn histogram_features<T: Scalar>(h: &Histogram, l1: bool) -> Vec<T> {
    let v: Vec<T> = h.counts.iter().map(|&c| T::lit(c as f64)).collect();
    if l1 {
        l1_normalize(&v)
    } else {
        v
    }
}

/// A trained classifier of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase", bound = "T: Scalar")]
pub enum Classifier<T> {
    Sopf { model: SopfModel<T> },
    Bayes { model: BayesModel<T> },
}

impl<T: Scalar> Classifier<T> {
    pub fn train(kind: ClassifierKind, x: &[Vec<T>], y: &[usize]) -> Result<Self, ClassifyError> {
        Ok(match kind {
            ClassifierKind::Sopf => Classifier::Sopf { model: train_sopf(x, y)? },
            ClassifierKind::Bayes => Classifier::Bayes { model: train_bayes(x, y)? },
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Sopf { .. } => ClassifierKind::Sopf,
            Classifier::Bayes { .. } => ClassifierKind::Bayes,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Classifier::Sopf { model } => model.dim(),
            Classifier::Bayes { model } => model.dim(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Classifier::Sopf { model } => model.n_classes,
            Classifier::Bayes { model } => model.priors.len(),
        }
    }

    pub fn predict(&self, x: &[T]) -> Result<usize, ClassifyError> {
        match self {
            Classifier::Sopf { model } => Ok(predict_sopf(model, x)?.0),
            Classifier::Bayes { model } => predict_bayes(model, x),
        }
    }
}

/// Everything a classifier needs to map raw histograms to predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClassifierBundle<T> {
    pub l1_normalize: bool,
    pub compressor: Option<RbmModel<T>>,
    pub classifier: Classifier<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct BundleFile<T> {
    version: u64,
    #[serde(flatten)]
    bundle: ClassifierBundle<T>,
}

impl<T: Scalar> ClassifierBundle<T> {
    pub fn to_json(&self) -> String {
        artifact::to_json(&BundleFile { version: SCHEMA_VERSION, bundle: self.clone() })
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        Ok(artifact::from_json::<BundleFile<T>>(text)?.bundle)
    }
}

/// Per-signal inputs to one split.
pub struct SplitData<'a, T> {
    pub descriptors: &'a [Vec<Descriptor<T>>],
    pub labels: &'a [Label],
}

/// Outcome of one train/test split.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub truth: Vec<usize>,
    pub predicted: Vec<usize>,
    pub dictionary_size: usize,
}

fn class_indices(labels: &[Label], which: &[usize]) -> Result<Vec<usize>, Error> {
    which
        .iter()
        .map(|&i| labels[i].class_index().ok_or_else(|| Error::Config(format!("sample {i} is unlabeled"))))
        .collect()
}

/// Trains the optional compressor and the classifier on training features.
pub fn fit_classifier<T: Scalar>(
    cfg: &PipelineConfig,
    train: &[Vec<T>],
    y: &[usize],
    seed: u64,
) -> Result<ClassifierBundle<T>, Error> {
    let compressor = match cfg.rbm_ratio {
        Some(ratio) => {
            let data: Vec<Vec<T>> = train.iter().map(|v| l1_normalize(v)).collect();
            let hyper = RbmHyper { seed: mix_seed(seed, 0x5eed), ..cfg.rbm };
            Some(train_rbm(&data, ratio, hyper, false)?.model)
        }
        None => None,
    };
    let x: Vec<Vec<T>> = train
        .iter()
        .map(|v| transform(cfg.l1_normalize, compressor.as_ref(), v))
        .collect::<Result<_, _>>()?;
    let classifier = Classifier::train(cfg.classifier, &x, y)?;
    Ok(ClassifierBundle { l1_normalize: cfg.l1_normalize, compressor, classifier })
}

fn transform<T: Scalar>(l1: bool, compressor: Option<&RbmModel<T>>, counts: &[T]) -> Result<Vec<T>, RbmError> {
    match compressor {
        Some(rbm) => compress(rbm, &l1_normalize(counts)),
        None if l1 => Ok(l1_normalize(counts)),
        None => Ok(counts.to_vec()),
    }
}

impl<T: Scalar> ClassifierBundle<T> {
    /// Raw histogram counts → classifier input.
    pub fn transform(&self, counts: &[T]) -> Result<Vec<T>, RbmError> {
        transform(self.l1_normalize, self.compressor.as_ref(), counts)
    }

    /// Dimension of the raw input this bundle accepts.
    pub fn input_dim(&self) -> usize {
        match &self.compressor {
            Some(rbm) => rbm.visible_dim,
            None => self.classifier.dim(),
        }
    }

    pub fn predict(&self, counts: &[T]) -> Result<usize, Error> {
        if counts.len() != self.input_dim() {
            return Err(Error::Dimension { what: "histogram", expected: self.input_dim(), found: counts.len() });
        }
        Ok(self.classifier.predict(&self.transform(counts)?)?)
    }
}

/// Runs one split from descriptors: dictionary on training descriptors only,
/// quantization of every signal, then classifier training and testing.
pub fn run_signal_split<T: Scalar>(
    cfg: &PipelineConfig,
    data: &SplitData<'_, T>,
    train: &[usize],
    test: &[usize],
    seed: u64,
) -> Result<SplitOutcome, Error> {
    let train_desc: Vec<Vec<T>> = train
        .iter()
        .flat_map(|&i| data.descriptors[i].iter().map(|d| d.values.clone()))
        .collect();
    let dict: Dictionary<T> = learn_dictionary(&train_desc, &cfg.dictionary, seed)?;
    let hist = |i: usize| -> Result<Vec<T>, DictError> {
        Ok(histogram_features::<T>(&quantize(&data.descriptors[i], &dict, data.labels[i])?, false))
    };
    let xtr: Vec<Vec<T>> = train.iter().map(|&i| hist(i)).collect::<Result<_, _>>()?;
    let xte: Vec<Vec<T>> = test.iter().map(|&i| hist(i)).collect::<Result<_, _>>()?;
    let outcome = run_feature_split(cfg, &xtr, &class_indices(data.labels, train)?, &xte, &class_indices(data.labels, test)?, seed)?;
    Ok(SplitOutcome { dictionary_size: dict.len(), ..outcome })
}

/// Runs one split on precomputed count vectors.
pub fn run_feature_split<T: Scalar>(
    cfg: &PipelineConfig,
    xtr: &[Vec<T>],
    ytr: &[usize],
    xte: &[Vec<T>],
    yte: &[usize],
    seed: u64,
) -> Result<SplitOutcome, Error> {
    let bundle = fit_classifier(cfg, xtr, ytr, seed)?;
    let predicted = xte.iter().map(|x| bundle.predict(x)).collect::<Result<_, _>>()?;
    Ok(SplitOutcome { truth: yte.to_vec(), predicted, dictionary_size: xtr.first().map_or(0, Vec::len) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_round_trip_and_defaults() {
        let cfg = PipelineConfig { rbm_ratio: Some(0.5), seed: 42, ..Default::default() };
        let back = PipelineConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let partial = PipelineConfig::from_json(r#"{"version": 1, "classifier": "bayes"}"#).unwrap();
        assert_eq!(partial.classifier, ClassifierKind::Bayes);
        assert_eq!(partial.n_runs, 15);
        assert_eq!(partial.window_ms, 150.0);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig { split: 1.0, ..Default::default() }.validate().is_err());
        assert!(PipelineConfig { n_runs: 0, ..Default::default() }.validate().is_err());
        assert!(PipelineConfig::default().validate().is_ok());
    }

    #[test]
    fn bundle_round_trip() {
        let x = vec![vec![0.0f64, 4.0], vec![1.0, 3.0], vec![5.0, 0.0], vec![4.0, 1.0]];
        let y = vec![0, 0, 1, 1];
        for cfg in [
            PipelineConfig::default(),
            PipelineConfig { classifier: ClassifierKind::Bayes, l1_normalize: true, ..Default::default() },
            PipelineConfig { rbm_ratio: Some(0.5), rbm: RbmHyper { epochs: 3, ..Default::default() }, ..Default::default() },
        ] {
            let b = fit_classifier(&cfg, &x, &y, 1).unwrap();
            let back = ClassifierBundle::<f64>::from_json(&b.to_json()).unwrap();
            assert_eq!(back, b);
            assert_eq!(b.input_dim(), 2);
            assert!(matches!(b.predict(&[1.0]), Err(Error::Dimension { expected: 2, found: 1, .. })));
        }
        let b = fit_classifier(&PipelineConfig::default(), &x, &y, 1).unwrap();
        assert_eq!(b.predict(&[0.5, 3.5]).unwrap(), 0);
        assert_eq!(b.predict(&[4.5, 0.5]).unwrap(), 1);
    }
}
