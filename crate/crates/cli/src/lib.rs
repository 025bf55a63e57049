//! Staged command-line pipeline: signals → descriptors → dictionary →
//! histograms → (compressed features) → classifier, plus hold-out evaluation
//! and dictionary-learning benchmarks.

pub mod bench;
pub mod io;

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use opf_forge::dictionary::quantize;
use opf_forge::eval::{compare_reports, holdout_experiment, shuffle_labels_by_subject, shuffle_subject_labels, WilcoxonOutcome};
use opf_forge::pipeline::fit_classifier;
use opf_forge::rbm::{compress, l1_normalize, train_rbm};
use opf_forge::{
    balanced_accuracy, extract_corpus, generate_synthetic_cohort, learn_dictionary, write_signal_csv, ClassifierBundle64,
    ClassifierKind, ConfusionMatrix, Dataset, Dictionary64, DictionaryConfig, EvalReport, Label, LabeledSample,
    LayerSchedule, PipelineConfig, RbmHyper, Signal64, SynthParams, SCHEMA_VERSION,
};

use crate::bench::{bench_dictionaries, synthetic_descriptors, BenchConfig, FlatLimit};
use crate::io::*;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "OPF_FORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "opf-forge", version, about = "Optimum-path forest bag-of-words pipeline for multi-channel signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic HC/PD cohort as signal CSVs plus manifest.json.
    Synth(SynthArgs),
    /// Cut sliding-window Haar descriptors from a directory of signal CSVs.
    Extract(ExtractArgs),
    /// Learn a visual dictionary from a descriptor file.
    Dict(DictArgs),
    /// Quantize descriptors into per-signal word histograms.
    Quantize(QuantizeArgs),
    /// Train an RBM on L1-normalized histograms and write compressed features.
    Compress(CompressArgs),
    /// Train a classifier on histograms or features.
    Train(TrainArgs),
    /// Apply a trained classifier.
    Predict(PredictArgs),
    /// Repeated stratified hold-out evaluation, or a Wilcoxon comparison of two reports.
    Eval(EvalArgs),
    /// Time dOPF, k-means and flat OPF dictionary learning on the same descriptors.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Subjects per class.
    #[arg(long)]
    pub subjects: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SynthParams::SEPARABLE_TREMOR_AMPLITUDE)]
    pub tremor_amplitude: f64,
    #[arg(long, default_value_t = SynthParams::SEPARABLE_NOISE_STD)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 10.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 100.0)]
    pub rate_hz: f64,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub signals: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Window and stride are taken from here when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub window_ms: Option<f64>,
    #[arg(long)]
    pub stride_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Opf,
    Dopf,
    Hopf,
    Kmeans,
}

#[derive(Debug, Args)]
pub struct DictArgs {
    #[arg(long)]
    pub descriptors: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dictionary settings come from this config unless --method is given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Flat OPF k_max, or layer-1 k_max for layered methods.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Fixed k for k-means (default: matched to a dOPF run).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub descriptors: PathBuf,
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub histograms: PathBuf,
    #[arg(long)]
    pub ratio: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the trained RBM here.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Accept ratios other than 0.25, 0.5 and 0.75.
    #[arg(long)]
    pub allow_any_ratio: bool,
    #[arg(long, default_value_t = RbmHyper::default().lr)]
    pub lr: f64,
    #[arg(long, default_value_t = RbmHyper::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = RbmHyper::default().batch)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Sopf,
    Bayes,
}

impl From<ClassifierArg> for ClassifierKind {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Sopf => ClassifierKind::Sopf,
            ClassifierArg::Bayes => ClassifierKind::Bayes,
        }
    }
}

#[derive(Debug, Args)]
#[group(id = "samples", required = true, multiple = false, args = ["histograms", "features"])]
pub struct SampleInput {
    /// Histogram set from `quantize`.
    #[arg(long)]
    pub histograms: Option<PathBuf>,
    /// Feature set from `compress`.
    #[arg(long)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: SampleInput,
    #[arg(long)]
    pub out: PathBuf,
    /// Classifier, RBM and normalization settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierArg>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: SampleInput,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of signal CSVs (dictionary learned per run on training subjects).
    #[arg(long, conflicts_with_all = ["histograms", "features", "descriptors", "compare"])]
    pub signals: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["features", "descriptors", "compare"])]
    pub histograms: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["descriptors", "compare"])]
    pub features: Option<PathBuf>,
    /// Descriptors quantized with the fixed dictionary given by --dict.
    #[arg(long, requires = "dict", conflicts_with = "compare")]
    pub descriptors: Option<PathBuf>,
    #[arg(long, requires = "descriptors")]
    pub dict: Option<PathBuf>,
    /// Compare two existing reports with the Wilcoxon signed-rank test.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub compare: Option<Vec<PathBuf>>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Permute labels across subjects with this seed first (null control).
    #[arg(long)]
    pub shuffle_labels: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the plain-text table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub descriptors: Option<PathBuf>,
    /// Generate this many synthetic descriptors instead.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Layer schedule for dOPF (default 4 layers: 100, 1%, 10%, 10%).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1500)]
    pub flat_k_max: usize,
    /// Stop flat OPF after this many seconds.
    #[arg(long, conflicts_with = "flat_limit_factor")]
    pub time_limit_s: Option<f64>,
    /// Stop flat OPF after this multiple of the dOPF time.
    #[arg(long)]
    pub flat_limit_factor: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Sizes rayon's global pool from [`THREADS_ENV`] when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        ensure!(n >= 1, "{THREADS_ENV} must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool already initialized")?;
    }
    Ok(())
}

/// Runs one command and returns its one-line summary.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract(a),
        Command::Dict(a) => dict(a),
        Command::Quantize(a) => quantize_cmd(a),
        Command::Compress(a) => compress_cmd(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench_cmd(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let cfg = match path {
        Some(p) => load(p, PipelineConfig::from_json)?,
        None => PipelineConfig::default(),
    };
    cfg.validate().with_context(|| match path {
        Some(p) => format!("invalid config {}", p.display()),
        None => "invalid default config".into(),
    })?;
    Ok(cfg)
}

fn synth(a: SynthArgs) -> Result<String> {
    let params = SynthParams {
        n_subjects_per_class: a.subjects,
        duration_s: a.duration_s,
        sample_rate_hz: a.rate_hz,
        tremor_amplitude: a.tremor_amplitude,
        noise_std: a.noise_std,
        ..SynthParams::separable(a.subjects, a.seed)
    };
    let signals: Vec<Signal64> = generate_synthetic_cohort(&params)?;
    let mut entries = Vec::with_capacity(signals.len());
    for s in &signals {
        let file = format!("{}.csv", s.subject_id);
        write_text(&a.out.join(&file), &write_signal_csv(s))?;
        entries.push(ManifestEntry { file, subject_id: s.subject_id.clone(), label: s.label });
    }
    let manifest = Manifest { version: SCHEMA_VERSION, params, signals: entries };
    write_text(&a.out.join("manifest.json"), &opf_forge::artifact::to_json(&manifest))?;
    Ok(format!(
        "synth: wrote {} signals ({} HC, {} PD) and manifest.json to {}",
        signals.len(),
        a.subjects,
        a.subjects,
        a.out.display()
    ))
}

fn extract(a: ExtractArgs) -> Result<String> {
    let cfg = load_config(a.config.as_deref())?;
    let window_ms = a.window_ms.unwrap_or(cfg.window_ms);
    let stride_ms = a.stride_ms.unwrap_or(cfg.stride_ms);
    let signals = read_signal_dir(&a.signals)?;
    let corpus = extract_corpus(&signals, window_ms, stride_ms)?;
    let dim = corpus.iter().flatten().next().map_or(0, |d| d.values.len());
    let rows: Vec<_> = signals
        .iter()
        .zip(corpus)
        .flat_map(|(s, ds)| ds.into_iter().map(move |d| (s.label, d)))
        .collect();
    let table = DescriptorTable { dim, rows };
    write_descriptors(&a.out, &table)?;
    Ok(format!(
        "extract: {} descriptors of dim {} from {} signals -> {}",
        table.rows.len(),
        dim,
        signals.len(),
        a.out.display()
    ))
}

fn dictionary_config(a: &DictArgs, cfg: &PipelineConfig) -> DictionaryConfig {
    let layered = |k_max: Option<usize>| {
        let mut s = LayerSchedule::four_layer();
        if let Some(k) = k_max {
            s.layer1_kmax = k;
        }
        s
    };
    match a.method {
        None => cfg.dictionary.clone(),
        Some(MethodArg::Opf) => DictionaryConfig::Opf { k_max: a.k_max.unwrap_or(100) },
        Some(MethodArg::Dopf) => DictionaryConfig::Dopf { schedule: layered(a.k_max) },
        Some(MethodArg::Hopf) => DictionaryConfig::Hopf { schedule: layered(a.k_max) },
        Some(MethodArg::Kmeans) => DictionaryConfig::Kmeans {
            k: a.k,
            schedule: a.k.is_none().then(|| layered(a.k_max)),
            max_iter: 300,
        },
    }
}

fn dict(a: DictArgs) -> Result<String> {
    let cfg = load_config(a.config.as_deref())?;
    let dcfg = dictionary_config(&a, &cfg);
    let table = read_descriptors(&a.descriptors)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let d: Dictionary64 = learn_dictionary(&table.vectors(), &dcfg, seed)?;
    write_text(&a.out, &d.to_json())?;
    Ok(format!(
        "dict: {} {} words of dim {} from {} descriptors -> {}",
        d.len(),
        d.method,
        d.dim(),
        table.rows.len(),
        a.out.display()
    ))
}

fn check_dims(dict: &Dictionary64, dict_path: &Path, table: &DescriptorTable, desc_path: &Path) -> Result<()> {
    if dict.dim() != table.dim {
        bail!(
            "dimension mismatch: dictionary {} has word dimension {} but descriptors {} have dimension {}",
            dict_path.display(),
            dict.dim(),
            desc_path.display(),
            table.dim
        );
    }
    Ok(())
}

fn histograms_from(table: &DescriptorTable, dict: &Dictionary64) -> Result<HistogramSet> {
    let histograms = table
        .by_signal()
        .iter()
        .map(|(label, ds)| quantize(ds, dict, *label))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HistogramSet::new(dict.len(), histograms))
}

fn quantize_cmd(a: QuantizeArgs) -> Result<String> {
    let table = read_descriptors(&a.descriptors)?;
    let dict = load(&a.dict, Dictionary64::from_json)?;
    check_dims(&dict, &a.dict, &table, &a.descriptors)?;
    let set = histograms_from(&table, &dict)?;
    write_text(&a.out, &opf_forge::artifact::to_json(&set))?;
    Ok(format!(
        "quantize: {} histograms over {} words ({} descriptors) -> {}",
        set.histograms.len(),
        set.dictionary_size,
        table.rows.len(),
        a.out.display()
    ))
}

fn compress_cmd(a: CompressArgs) -> Result<String> {
    let set = HistogramSet::load(&a.histograms)?;
    let data: Vec<Vec<f64>> = FeatureSet::from_histograms(&set).samples.iter().map(|r| l1_normalize(&r.values)).collect();
    let hyper = RbmHyper { lr: a.lr, epochs: a.epochs, batch: a.batch, seed: a.seed };
    let training = train_rbm(&data, a.ratio, hyper, a.allow_any_ratio)?;
    let model = training.model;
    let samples = set
        .histograms
        .iter()
        .zip(&data)
        .map(|(h, v)| Ok(FeatureRow { subject_id: h.subject_id.clone(), label: h.label, values: compress(&model, v)? }))
        .collect::<Result<Vec<_>>>()?;
    let features = FeatureSet::new(model.hidden_dim, samples);
    write_text(&a.out, &opf_forge::artifact::to_json(&features))?;
    if let Some(path) = &a.model {
        write_text(path, &model.to_json())?;
    }
    let first = training.error_history.first().copied().unwrap_or(f64::NAN);
    let last = training.error_history.last().copied().unwrap_or(f64::NAN);
    Ok(format!(
        "compress: {} -> {} dims for {} histograms, reconstruction error {first:.6} -> {last:.6} -> {}",
        model.visible_dim,
        model.hidden_dim,
        features.samples.len(),
        a.out.display()
    ))
}

/// Samples from either input kind. Histogram counts pass through the
/// configured normalization and compressor; features are used as given.
fn load_samples(input: &SampleInput) -> Result<(FeatureSet, bool)> {
    match (&input.histograms, &input.features) {
        (Some(h), None) => Ok((FeatureSet::from_histograms(&HistogramSet::load(h)?), true)),
        (None, Some(f)) => Ok((FeatureSet::load(f)?, false)),
        _ => bail!("exactly one of --histograms or --features is required"),
    }
}

fn class_labels(set: &FeatureSet) -> Result<Vec<usize>> {
    set.samples
        .iter()
        .map(|r| r.label.class_index().with_context(|| format!("sample {} has no class label", r.subject_id)))
        .collect()
}

fn train(a: TrainArgs) -> Result<String> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(c) = a.classifier {
        cfg.classifier = c.into();
    }
    let (set, raw) = load_samples(&a.input)?;
    if !raw {
        cfg.rbm_ratio = None;
        cfg.l1_normalize = false;
    }
    let x: Vec<Vec<f64>> = set.samples.iter().map(|r| r.values.clone()).collect();
    let y = class_labels(&set)?;
    let bundle: ClassifierBundle64 = fit_classifier(&cfg, &x, &y, a.seed.unwrap_or(cfg.seed))?;
    write_text(&a.out, &bundle.to_json())?;
    let rbm = match &bundle.compressor {
        Some(r) => format!(", RBM {} -> {}", r.visible_dim, r.hidden_dim),
        None => String::new(),
    };
    Ok(format!(
        "train: {} on {} samples of dim {}{rbm} -> {}",
        bundle.classifier.kind(),
        x.len(),
        set.dim,
        a.out.display()
    ))
}

fn predict(a: PredictArgs) -> Result<String> {
    let bundle = load(&a.model, ClassifierBundle64::from_json)?;
    let (set, _) = load_samples(&a.input)?;
    let input_path = a.input.histograms.as_ref().or(a.input.features.as_ref()).expect("one input");
    if set.dim != bundle.input_dim() {
        bail!(
            "dimension mismatch: model {} expects inputs of dimension {} but {} has dimension {}",
            a.model.display(),
            bundle.input_dim(),
            input_path.display(),
            set.dim
        );
    }
    let mut predictions = Vec::with_capacity(set.samples.len());
    for r in &set.samples {
        let c = bundle.predict(&r.values)?;
        let predicted = Label::from_class_index(c).with_context(|| format!("model predicted unknown class {c}"))?;
        predictions.push(Prediction { subject_id: r.subject_id.clone(), label: r.label, predicted });
    }
    let balanced = if predictions.iter().all(|p| p.label.class_index().is_some()) {
        let truth: Vec<usize> = predictions.iter().filter_map(|p| p.label.class_index()).collect();
        let pred: Vec<usize> = predictions.iter().filter_map(|p| p.predicted.class_index()).collect();
        ConfusionMatrix::from_predictions(2, &truth, &pred).ok().and_then(|cm| balanced_accuracy::<f64>(&cm).ok())
    } else {
        None
    };
    let out = Predictions { version: SCHEMA_VERSION, balanced_accuracy: balanced, predictions };
    write_text(&a.out, &opf_forge::artifact::to_json(&out))?;
    let acc = balanced.map_or(String::new(), |b| format!(", balanced accuracy {:.2}%", 100.0 * b));
    Ok(format!("predict: {} samples{acc} -> {}", out.predictions.len(), a.out.display()))
}

fn eval(a: EvalArgs) -> Result<String> {
    if let Some(paths) = &a.compare {
        return compare(&paths[0], &paths[1], a.alpha, &a.out);
    }
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(r) = a.runs {
        cfg.n_runs = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let report = if let Some(dir) = &a.signals {
        let mut signals = read_signal_dir(dir)?;
        if let Some(seed) = a.shuffle_labels {
            signals = shuffle_subject_labels(&signals, seed)?;
        }
        holdout_experiment(&Dataset::Signals(&signals), &cfg)?
    } else {
        let set = if let (Some(dp), Some(jp)) = (&a.descriptors, &a.dict) {
            let table = read_descriptors(dp)?;
            let dict = load(jp, Dictionary64::from_json)?;
            check_dims(&dict, jp, &table, dp)?;
            FeatureSet::from_histograms(&histograms_from(&table, &dict)?)
        } else {
            let input = SampleInput { histograms: a.histograms.clone(), features: a.features.clone() };
            let (set, raw) = load_samples(&input).context("eval needs --signals, --histograms, --features, --descriptors with --dict, or --compare")?;
            if !raw {
                cfg.rbm_ratio = None;
                cfg.l1_normalize = false;
            }
            set
        };
        let mut samples: Vec<LabeledSample<f64>> = set
            .samples
            .into_iter()
            .map(|r| LabeledSample { subject_id: r.subject_id, label: r.label, values: r.values })
            .collect();
        if let Some(seed) = a.shuffle_labels {
            let ids: Vec<&str> = samples.iter().map(|s| s.subject_id.as_str()).collect();
            let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
            let shuffled = shuffle_labels_by_subject(&ids, &labels, seed)?;
            for (s, l) in samples.iter_mut().zip(shuffled) {
                s.label = l;
            }
        }
        holdout_experiment(&Dataset::Features(&samples), &cfg)?
    };
    write_text(&a.out, &report.to_json())?;
    if let Some(t) = &a.table {
        write_text(t, &report.to_table())?;
    }
    Ok(format!(
        "eval: {} runs, {} + {}, balanced accuracy {:.2}±{:.2}% -> {}",
        report.accuracies.len(),
        report.config.dictionary,
        report.config.classifier,
        100.0 * report.mean,
        100.0 * report.std,
        a.out.display()
    ))
}

#[derive(serde::Serialize)]
struct Comparison<'a> {
    version: u64,
    a: String,
    b: String,
    alpha: f64,
    #[serde(flatten)]
    outcome: &'a WilcoxonOutcome,
}

fn compare(pa: &Path, pb: &Path, alpha: f64, out: &Path) -> Result<String> {
    let ra = load(pa, EvalReport::from_json)?;
    let rb = load(pb, EvalReport::from_json)?;
    let outcome = compare_reports(&ra, &rb, alpha)?;
    let doc = Comparison { version: SCHEMA_VERSION, a: pa.display().to_string(), b: pb.display().to_string(), alpha, outcome: &outcome };
    write_text(out, &opf_forge::artifact::to_json(&doc))?;
    Ok(match &outcome {
        WilcoxonOutcome::Decision(r) => format!(
            "compare: W={} (n={}, {}), p={:.6}: {} at alpha {alpha} -> {}",
            r.statistic,
            r.n,
            if r.exact { "exact" } else { "normal approximation" },
            r.p_value,
            if r.reject { "significant difference" } else { "no significant difference" },
            out.display()
        ),
        WilcoxonOutcome::NoDecision => format!("compare: all paired accuracies equal, no decision -> {}", out.display()),
    })
}

fn bench_cmd(a: BenchArgs) -> Result<String> {
    let points = match (&a.descriptors, a.synthetic) {
        (Some(p), _) => read_descriptors(p)?.vectors(),
        (None, Some(n)) => synthetic_descriptors(n, a.seed)?,
        (None, None) => bail!("bench needs --descriptors or --synthetic"),
    };
    ensure!(points.len() >= 2, "bench needs at least 2 descriptors");
    let schedule = match &a.config {
        Some(p) => match load_config(Some(p))?.dictionary {
            DictionaryConfig::Dopf { schedule } | DictionaryConfig::Hopf { schedule } => schedule,
            _ => bail!("config {} must use a layered (dopf or hopf) dictionary for bench", p.display()),
        },
        None => LayerSchedule::four_layer(),
    };
    let flat_limit = match (a.time_limit_s, a.flat_limit_factor) {
        (Some(s), _) => FlatLimit::Seconds(s),
        (None, Some(f)) => FlatLimit::DopfFactor(f),
        (None, None) => FlatLimit::None,
    };
    let cfg = BenchConfig { schedule, flat_k_max: a.flat_k_max, flat_limit, kmeans_max_iter: 300, seed: a.seed };
    let report = bench_dictionaries(&points, &cfg)?;
    write_text(&a.out, &opf_forge::artifact::to_json(&report))?;
    Ok(format!("bench: {} -> {}", report.summary(), a.out.display()))
}
