//! Wall-clock comparison of dictionary learners on one descriptor set.

use std::time::{Duration, Instant};

use anyhow::Result;
use opf_forge::cluster::{sweep_k, SweepOptions};
use opf_forge::dictionary::{dict_dopf, train_deep_forest};
use opf_forge::{extract_corpus, generate_synthetic_cohort, kmeans_cluster, ClusterError, LayerSchedule, Signal64, SynthParams};
use serde::{Deserialize, Serialize};

/// How long flat OPF may run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlatLimit {
    None,
    Seconds(f64),
    /// A multiple of the measured dOPF time.
    DopfFactor(f64),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub schedule: LayerSchedule,
    pub flat_k_max: usize,
    pub flat_limit: FlatLimit,
    pub kmeans_max_iter: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub learner: String,
    pub seconds: f64,
    /// Words learned, absent when the learner was stopped at its limit.
    pub words: Option<usize>,
    pub completed: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: u64,
    pub n: usize,
    pub dim: usize,
    pub timings: Vec<Timing>,
}

impl BenchReport {
    pub fn get(&self, learner: &str) -> Option<&Timing> {
        self.timings.iter().find(|t| t.learner == learner)
    }

    pub fn summary(&self) -> String {
        let cells: Vec<String> = self
            .timings
            .iter()
            .map(|t| match t.words {
                Some(w) => format!("{} {:.3}s ({w} words)", t.learner, t.seconds),
                None => format!("{} >{:.3}s (stopped)", t.learner, t.seconds),
            })
            .collect();
        format!("{} descriptors (dim {}): {}", self.n, self.dim, cells.join(", "))
    }
}

/// Times dOPF (all layers), k-means with k = |dOPF dictionary|, and flat best-k
/// OPF, in that order, on the same input.
pub fn bench_dictionaries(points: &[Vec<f64>], cfg: &BenchConfig) -> Result<BenchReport> {
    let n = points.len();
    let mut timings = Vec::new();

    let start = Instant::now();
    let df = train_deep_forest(points, &cfg.schedule)?;
    let words = dict_dopf(&df).len();
    let dopf = start.elapsed();
    let sizes: Vec<String> = df.layer_sizes().iter().map(usize::to_string).collect();
    timings.push(Timing {
        learner: "dOPF".into(),
        seconds: dopf.as_secs_f64(),
        words: Some(words),
        completed: true,
        note: format!("layers {}", sizes.join("-")),
    });

    let start = Instant::now();
    let km = kmeans_cluster(points, words, cfg.seed, cfg.kmeans_max_iter)?;
    timings.push(Timing {
        learner: "k-means".into(),
        seconds: start.elapsed().as_secs_f64(),
        words: Some(km.centroids.len()),
        completed: true,
        note: format!("{} iterations", km.iterations_run),
    });

    let k_max = cfg.flat_k_max.min(n - 1);
    let limit = match cfg.flat_limit {
        FlatLimit::None => None,
        FlatLimit::Seconds(s) => Some(Duration::from_secs_f64(s)),
        FlatLimit::DopfFactor(f) => Some(dopf.mul_f64(f)),
    };
    let start = Instant::now();
    let outcome = sweep_k(points, k_max, SweepOptions { deadline: limit.map(|l| start + l) });
    let seconds = start.elapsed().as_secs_f64();
    timings.push(match outcome {
        Ok(sweep) => Timing {
            learner: "OPF".into(),
            seconds,
            words: Some(sweep.forest.cluster_count()),
            completed: true,
            note: format!("k_max {k_max}, best k {}", sweep.forest.k_used),
        },
        Err(ClusterError::DeadlineExceeded { completed }) => Timing {
            learner: "OPF".into(),
            seconds,
            words: None,
            completed: false,
            note: format!("k_max {k_max}, stopped after {completed} of {k_max} k values"),
        },
        Err(e) => return Err(e.into()),
    });

    Ok(BenchReport { version: opf_forge::SCHEMA_VERSION, n, dim: points.first().map_or(0, Vec::len), timings })
}

/// The first `n` descriptors of a seeded separable cohort large enough to supply them.
pub fn synthetic_descriptors(n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut p = SynthParams::separable(1, seed);
    let probe: Vec<Signal64> = generate_synthetic_cohort(&p)?;
    let per_signal = extract_corpus(&probe[..1], 150.0, 100.0)?[0].len();
    p.n_subjects_per_class = n.div_ceil(2 * per_signal).max(1);
    let signals: Vec<Signal64> = generate_synthetic_cohort(&p)?;
    Ok(extract_corpus(&signals, 150.0, 100.0)?
        .into_iter()
        .flatten()
        .take(n)
        .map(|d| d.values)
        .collect())
}
