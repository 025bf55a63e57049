//! Experimental protocol: seeded stratified hold-out runs, unbalance-aware
//! accuracy, per-class recall, and the Wilcoxon signed-rank comparison.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_traits::{FromPrimitive, Num};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};


use crate::artifact::{self, ArtifactError, SCHEMA_VERSION};
use crate::pipeline::{run_feature_split, run_signal_split, PipelineConfig, SplitData, SplitOutcome};
use crate::scalar::{mix_seed, Scalar};
use crate::signal::{extract_corpus, Label, MultiChannelSignal};
use crate::Error;

/// Largest sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("confusion matrix needs at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("class {0} has no true samples")]
    EmptyClass(usize),
    #[error("class index {index} outside 0..{classes}")]
    ClassIndex { index: usize, classes: usize },
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("{0} non-zero differences; the signed-rank test needs at least 5")]
    TooFewPairs(usize),
    #[error("class {label} has {found} subjects; at least 2 are needed to split")]
    ClassTooSmall { label: String, found: usize },
    #[error("subject {0} appears with conflicting labels")]
    ConflictingLabels(String),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self { n_classes, counts: vec![0; n_classes * n_classes] }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let c = rows.len();
        assert!(rows.iter().all(|r| r.len() == c), "confusion matrix must be square");
        Self { n_classes: c, counts: rows.concat() }
    }

    pub fn from_predictions(n_classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Self, EvalError> {
        let mut cm = Self::new(n_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<(), EvalError> {
        for index in [truth, predicted] {
            if index >= self.n_classes {
                return Err(EvalError::ClassIndex { index, classes: self.n_classes });
            }
        }
        self.counts[truth * self.n_classes + predicted] += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.n_classes).map(|j| self.get(i, j)).sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.n_classes).map(|i| self.get(i, j)).sum()
    }

    fn check(&self) -> Result<(), EvalError> {
        if self.n_classes < 2 {
            return Err(EvalError::TooFewClasses(self.n_classes));
        }
        match (0..self.n_classes).find(|&i| self.row_sum(i) == 0) {
            Some(i) => Err(EvalError::EmptyClass(i)),
            None => Ok(()),
        }
    }
}

fn num<R: FromPrimitive>(x: u64) -> R {
    R::from_u64(x).expect("count representable")
}

/// Unbalance-aware accuracy `1 − Σᵢ (FPᵢ/(|Z|−|Zᵢ|) + FNᵢ/|Zᵢ|) / 2c`.
///
/// Generic over the number type so it can be evaluated exactly over rationals.
pub fn balanced_accuracy<R>(cm: &ConfusionMatrix) -> Result<R, EvalError>
where
    R: Num + Clone + FromPrimitive,
{
    cm.check()?;
    let c = cm.n_classes;
    let z = cm.total();
    let mut errors = R::zero();
    for i in 0..c {
        let zi = cm.row_sum(i);
        let tp = cm.get(i, i);
        let fp = cm.col_sum(i) - tp;
        let fn_ = zi - tp;
        errors = errors + num::<R>(fp) / num::<R>(z - zi) + num::<R>(fn_) / num::<R>(zi);
    }
    Ok(R::one() - errors / num::<R>(2 * c as u64))
}

/// `recallᵢ = cmᵢᵢ / Σⱼ cmᵢⱼ`
pub fn per_class_recall<R>(cm: &ConfusionMatrix) -> Result<Vec<R>, EvalError>
where
    R: Num + Clone + FromPrimitive,
{
    cm.check()?;
    Ok((0..cm.n_classes).map(|i| num::<R>(cm.get(i, i)) / num::<R>(cm.row_sum(i))).collect())
}

/// Signed-rank test statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W⁺, W⁻)`
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub reject: bool,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WilcoxonOutcome {
    Decision(WilcoxonResult),
    /// Every difference was zero.
    NoDecision,
}

/// Mid-ranks of `values` (1-based, ties averaged), returned doubled so they stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; doubled average = i + j + 2
        for &o in &order[i..=j] {
            ranks[o] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test of `a − b`. Zero differences are
/// dropped. The exact null distribution is used for `n ≤ 20`, the tie-corrected
/// normal approximation above that.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<WilcoxonOutcome, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonOutcome::NoDecision);
    }
    if n < 5 {
        return Err(EvalError::TooFewPairs(n));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks2 = doubled_midranks(&abs);
    let plus2: u64 = diffs.iter().zip(&ranks2).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total2: u64 = ranks2.iter().sum();
    let minus2 = total2 - plus2;
    let stat2 = plus2.min(minus2);

    let (p_value, exact) = if n <= EXACT_LIMIT {
        // counts[s] = number of sign assignments with doubled W⁺ = s
        let mut counts = vec![0u64; total2 as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let tail: u64 = counts[..=stat2 as usize].iter().sum();
        ((2.0 * tail as f64 / (1u64 << n) as f64).min(1.0), true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = abs.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        let mut i = 0;
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
            let t = j as f64;
            tie_term += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let p = if var > 0.0 {
            let z = (stat2 as f64 / 2.0 - mean) / var.sqrt();
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (2.0 * normal.cdf(z)).min(1.0)
        } else {
            1.0
        };
        (p, false)
    };
    Ok(WilcoxonOutcome::Decision(WilcoxonResult {
        statistic: stat2 as f64 / 2.0,
        w_plus: plus2 as f64 / 2.0,
        w_minus: minus2 as f64 / 2.0,
        p_value,
        reject: p_value < alpha,
        n,
        exact,
    }))
}

/// Inputs to the hold-out protocol.
pub enum Dataset<'a, T> {
    /// Raw signals; descriptors are extracted once and each run learns its own
    /// dictionary on the training subjects.
    Signals(&'a [MultiChannelSignal<T>]),
    /// Precomputed per-sample count vectors with subject and label.
    Features(&'a [LabeledSample<T>]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample<T> {
    pub subject_id: String,
    pub label: Label,
    pub values: Vec<T>,
}

/// Config summary carried in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dictionary: String,
    pub classifier: String,
    pub rbm_ratio: Option<f64>,
    pub n_runs: usize,
    pub split: f64,
    pub seed: u64,
    pub run_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u64,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub class_names: Vec<String>,
    pub recall_mean: Vec<f64>,
    pub recall_std: Vec<f64>,
    pub per_run_recall: Vec<Vec<f64>>,
    pub dictionary_sizes: Vec<usize>,
    pub config: ConfigEcho,
}

/// Mean and sample standard deviation (divisor `n − 1`, 0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        artifact::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        artifact::from_json(text)
    }

    /// Aligned text table: one row, percentages as `mean±std`.
    pub fn to_table(&self) -> String {
        let cell = |m: f64, s: f64| format!("{:.2}±{:.2}", 100.0 * m, 100.0 * s);
        let mut headers = vec!["dictionary".to_string(), "classifier".to_string(), "accuracy".to_string()];
        headers.extend(self.class_names.iter().cloned());
        let mut row = vec![self.config.dictionary.clone(), self.config.classifier.clone(), cell(self.mean, self.std)];
        row.extend(self.recall_mean.iter().zip(&self.recall_std).map(|(&m, &s)| cell(m, s)));
        let widths: Vec<usize> = headers.iter().zip(&row).map(|(h, r)| h.chars().count().max(r.chars().count())).collect();
        let mut out = String::new();
        for line in [&headers, &row] {
            let cells: Vec<String> = line.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        }
        out
    }
}

/// Groups samples by subject (first-appearance order) and checks label consistency.
fn subjects(ids: &[&str], labels: &[Label]) -> Result<Vec<(Label, Vec<usize>)>, EvalError> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, (Label, Vec<usize>)> = BTreeMap::new();
    for (i, (&id, &label)) in ids.iter().zip(labels).enumerate() {
        match groups.get_mut(id) {
            Some((l, members)) => {
                if *l != label {
                    return Err(EvalError::ConflictingLabels(id.to_string()));
                }
                members.push(i);
            }
            None => {
                order.push(id);
                groups.insert(id, (label, vec![i]));
            }
        }
    }
    Ok(order.into_iter().map(|id| groups.remove(id).expect("grouped")).collect())
}

/// Stratified subject-level split: in every class, `round(split · n)` subjects
/// (at least one, at most `n − 1`) go to training. Returns sample indices.
pub fn stratified_split(
    ids: &[&str],
    labels: &[Label],
    split: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let groups = subjects(ids, labels)?;
    let mut by_class: BTreeMap<Label, Vec<&Vec<usize>>> = BTreeMap::new();
    for (label, members) in &groups {
        by_class.entry(*label).or_default().push(members);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (label, mut members) in by_class {
        let n = members.len();
        if n < 2 {
            return Err(EvalError::ClassTooSmall { label: label.to_string(), found: n });
        }
        members.shuffle(rng);
        let n_train = ((split * n as f64).round() as usize).clamp(1, n - 1);
        for (k, m) in members.into_iter().enumerate() {
            if k < n_train {
                train.extend(m);
            } else {
                test.extend(m);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Permutes labels across subjects (class counts over subjects preserved); every
/// sample of a subject receives that subject's new label. For null-distribution controls.
pub fn shuffle_labels_by_subject(ids: &[&str], labels: &[Label], seed: u64) -> Result<Vec<Label>, EvalError> {
    let groups = subjects(ids, labels)?;
    let mut drawn: Vec<Label> = groups.iter().map(|(l, _)| *l).collect();
    drawn.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = labels.to_vec();
    for ((_, members), label) in groups.iter().zip(drawn) {
        for &i in members {
            out[i] = label;
        }
    }
    Ok(out)
}

/// [`shuffle_labels_by_subject`] applied to a signal corpus.
pub fn shuffle_subject_labels<T: Clone>(signals: &[MultiChannelSignal<T>], seed: u64) -> Result<Vec<MultiChannelSignal<T>>, EvalError> {
    let ids: Vec<&str> = signals.iter().map(|s| s.subject_id.as_str()).collect();
    let labels: Vec<Label> = signals.iter().map(|s| s.label).collect();
    let shuffled = shuffle_labels_by_subject(&ids, &labels, seed)?;
    Ok(signals
        .iter()
        .zip(shuffled)
        .map(|(s, label)| {
            let mut s = s.clone();
            s.label = label;
            s
        })
        .collect())
}

/// Seed of hold-out run `run`.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    mix_seed(seed, run as u64)
}

/// Repeated stratified hold-out. Runs execute in parallel; run `r` depends
/// only on `(cfg.seed, r)`, and results are ordered by run index.
pub fn holdout_experiment<T: Scalar>(dataset: &Dataset<'_, T>, cfg: &PipelineConfig) -> Result<EvalReport, Error> {
    cfg.validate()?;
    let (ids, labels): (Vec<&str>, Vec<Label>) = match dataset {
        Dataset::Signals(s) => s.iter().map(|x| (x.subject_id.as_str(), x.label)).unzip(),
        Dataset::Features(f) => f.iter().map(|x| (x.subject_id.as_str(), x.label)).unzip(),
    };
    if let Some(i) = labels.iter().position(|l| l.class_index().is_none()) {
        return Err(Error::Config(format!("sample {} ({}) is unlabeled", i, ids[i])));
    }
    let descriptors = match dataset {
        Dataset::Signals(s) => Some(extract_corpus(s, cfg.window_ms, cfg.stride_ms)?),
        Dataset::Features(_) => None,
    };
    let n_classes = 2;
    let seeds: Vec<u64> = (0..cfg.n_runs).map(|r| run_seed(cfg.seed, r)).collect();

    let outcomes: Vec<SplitOutcome> = seeds
        .par_iter()
        .map(|&seed| -> Result<SplitOutcome, Error> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (train, test) = stratified_split(&ids, &labels, cfg.split, &mut rng)?;
            match (dataset, &descriptors) {
                (Dataset::Signals(_), Some(desc)) => {
                    run_signal_split(cfg, &SplitData { descriptors: desc, labels: &labels }, &train, &test, seed)
                }
                (Dataset::Features(f), _) => {
                    let pick = |idx: &[usize]| -> (Vec<Vec<T>>, Vec<usize>) {
                        idx.iter().map(|&i| (f[i].values.clone(), f[i].label.class_index().expect("labeled"))).unzip()
                    };
                    let (xtr, ytr) = pick(&train);
                    let (xte, yte) = pick(&test);
                    run_feature_split(cfg, &xtr, &ytr, &xte, &yte, seed)
                }
                _ => unreachable!("descriptors exist for signal datasets"),
            }
        })
        .collect::<Result<_, _>>()?;

    let mut accuracies = Vec::with_capacity(outcomes.len());
    let mut per_run_recall = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let cm = ConfusionMatrix::from_predictions(n_classes, &o.truth, &o.predicted)?;
        accuracies.push(balanced_accuracy::<f64>(&cm)?);
        per_run_recall.push(per_class_recall::<f64>(&cm)?);
    }
    let (mean, std) = mean_std(&accuracies);
    let (recall_mean, recall_std): (Vec<f64>, Vec<f64>) = (0..n_classes)
        .map(|c| mean_std(&per_run_recall.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .unzip();
    let dictionary = match dataset {
        Dataset::Signals(_) => cfg.dictionary.method().to_string(),
        Dataset::Features(_) => "precomputed".to_string(),
    };
    let classifier = match cfg.rbm_ratio {
        Some(r) => format!("{} (RBM {:.0}%)", cfg.classifier, 100.0 * r),
        None => cfg.classifier.to_string(),
    };
    Ok(EvalReport {
        version: SCHEMA_VERSION,
        accuracies,
        mean,
        std,
        class_names: (0..n_classes).map(|c| Label::from_class_index(c).expect("binary").to_string()).collect(),
        recall_mean,
        recall_std,
        per_run_recall,
        dictionary_sizes: outcomes.iter().map(|o| o.dictionary_size).collect(),
        config: ConfigEcho {
            dictionary,
            classifier,
            rbm_ratio: cfg.rbm_ratio,
            n_runs: cfg.n_runs,
            split: cfg.split,
            seed: cfg.seed,
            run_seeds: seeds,
        },
    })
}

/// Wilcoxon comparison of two reports' per-run accuracies.
pub fn compare_reports(a: &EvalReport, b: &EvalReport, alpha: f64) -> Result<WilcoxonOutcome, EvalError> {
    wilcoxon_signed_rank(&a.accuracies, &b.accuracies, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn balanced_accuracy_examples() {
        let cm = ConfusionMatrix::from_rows(&[vec![8, 2], vec![3, 7]]);
        assert_eq!(balanced_accuracy::<Ratio<i64>>(&cm).unwrap(), Ratio::new(3, 4));
        assert!((balanced_accuracy::<f64>(&cm).unwrap() - 0.75).abs() < 1e-15);
        let cm = ConfusionMatrix::from_rows(&[vec![90, 0], vec![10, 0]]);
        assert_eq!(balanced_accuracy::<Ratio<i64>>(&cm).unwrap(), Ratio::new(1, 2));
        let cm = ConfusionMatrix::from_rows(&[vec![5, 0, 0], vec![0, 3, 0], vec![0, 0, 9]]);
        assert_eq!(balanced_accuracy::<f64>(&cm).unwrap(), 1.0);
    }

    #[test]
    fn recall_examples() {
        let cm = ConfusionMatrix::from_rows(&[vec![8, 2], vec![3, 7]]);
        assert_eq!(per_class_recall::<Ratio<i64>>(&cm).unwrap(), vec![Ratio::new(4, 5), Ratio::new(7, 10)]);
        let cm = ConfusionMatrix::from_rows(&[vec![4, 0], vec![0, 6]]);
        assert_eq!(per_class_recall::<f64>(&cm).unwrap(), vec![1.0, 1.0]);
        let cm = ConfusionMatrix::from_rows(&[vec![4, 0], vec![6, 0]]);
        assert_eq!(per_class_recall::<f64>(&cm).unwrap()[1], 0.0);
    }

    #[test]
    fn metric_errors() {
        let cm = ConfusionMatrix::from_rows(&[vec![4, 0], vec![0, 0]]);
        assert_eq!(balanced_accuracy::<f64>(&cm), Err(EvalError::EmptyClass(1)));
        assert_eq!(per_class_recall::<f64>(&cm), Err(EvalError::EmptyClass(1)));
        assert_eq!(balanced_accuracy::<f64>(&ConfusionMatrix::from_rows(&[vec![3]])), Err(EvalError::TooFewClasses(1)));
        assert!(ConfusionMatrix::new(2).record(2, 0).is_err());
    }

    #[test]
    fn wilcoxon_hand_example() {
        let a = [1.0, -2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let WilcoxonOutcome::Decision(r) = wilcoxon_signed_rank(&a, &b, 0.05).unwrap() else { panic!() };
        assert_eq!((r.w_minus, r.w_plus, r.statistic), (2.0, 13.0, 2.0));
        // W⁺ ≤ 2 occurs for sign patterns with positive-rank sets {}, {1}, {2}: 3 of 32.
        assert!((r.p_value - 6.0 / 32.0).abs() < 1e-15);
        assert!(!r.reject);
        assert!(r.exact);
    }

    #[test]
    fn wilcoxon_no_decision_and_errors() {
        let a = [0.7, 0.8, 0.9, 0.6, 0.5, 0.4];
        assert_eq!(wilcoxon_signed_rank(&a, &a, 0.05).unwrap(), WilcoxonOutcome::NoDecision);
        assert_eq!(wilcoxon_signed_rank(&a, &a[..5], 0.05), Err(EvalError::LengthMismatch(6, 5)));
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[0.0, 0.0], 0.05), Err(EvalError::TooFewPairs(2)));
    }

    #[test]
    fn wilcoxon_large_sample_rejects_shift() {
        let a: Vec<f64> = (0..30).map(|i| 1.0 + (i as f64) * 0.01).collect();
        let b: Vec<f64> = (0..30).map(|i| (i as f64) * 0.013).collect();
        let WilcoxonOutcome::Decision(r) = wilcoxon_signed_rank(&a, &b, 0.05).unwrap() else { panic!() };
        assert!(!r.exact);
        assert!(r.reject);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn midranks() {
        assert_eq!(doubled_midranks(&[3.0, 1.0, 3.0, 2.0]), vec![7, 2, 7, 4]);
    }

    #[test]
    fn split_is_stratified_by_subject() {
        let ids = ["a", "a", "b", "c", "c", "d", "e", "f"];
        let labels = [Label::Hc, Label::Hc, Label::Hc, Label::Hc, Label::Hc, Label::Pd, Label::Pd, Label::Pd];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (train, test) = stratified_split(&ids, &labels, 0.5, &mut rng).unwrap();
        assert_eq!(train.len() + test.len(), ids.len());
        for (i, j) in train.iter().flat_map(|&i| test.iter().map(move |&j| (i, j))) {
            assert_ne!(ids[i], ids[j], "subject leaked across partitions");
        }
        let pd_train = train.iter().filter(|&&i| labels[i] == Label::Pd).count();
        assert_eq!(pd_train, 2);

        let bad = [Label::Hc, Label::Pd];
        assert!(matches!(stratified_split(&["a", "a"], &bad, 0.5, &mut rng), Err(EvalError::ConflictingLabels(_))));
        assert!(matches!(
            stratified_split(&["a", "b", "c"], &[Label::Hc, Label::Hc, Label::Pd], 0.5, &mut rng),
            Err(EvalError::ClassTooSmall { found: 1, .. })
        ));
    }

    #[test]
    fn shuffle_keeps_subjects_whole() {
        let ids = ["a", "a", "b", "c", "c", "d"];
        let labels = [Label::Hc, Label::Hc, Label::Hc, Label::Pd, Label::Pd, Label::Pd];
        for seed in 0..20 {
            let out = shuffle_labels_by_subject(&ids, &labels, seed).unwrap();
            assert_eq!(out[0], out[1]);
            assert_eq!(out[3], out[4]);
            assert_eq!([out[0], out[2], out[3], out[5]].iter().filter(|&&l| l == Label::Pd).count(), 2);
        }
    }

    #[test]
    fn table_shape() {
        let report = EvalReport {
            version: 1,
            accuracies: vec![0.9, 0.8],
            mean: 0.85,
            std: 0.0707,
            class_names: vec!["HC".into(), "PD".into()],
            recall_mean: vec![0.8, 0.9],
            recall_std: vec![0.1, 0.05],
            per_run_recall: vec![],
            dictionary_sizes: vec![10, 12],
            config: ConfigEcho {
                dictionary: "hOPF".into(),
                classifier: "sOPF".into(),
                rbm_ratio: None,
                n_runs: 2,
                split: 0.5,
                seed: 0,
                run_seeds: vec![1, 2],
            },
        };
        let t = report.to_table();
        assert!(t.contains("85.00±7.07"));
        assert_eq!(t.lines().count(), 2);
        assert_eq!(EvalReport::from_json(&report.to_json()).unwrap(), report);
    }
}
