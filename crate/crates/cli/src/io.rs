//! File formats of the staged pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use opf_forge::artifact::{self, SCHEMA_VERSION};
use opf_forge::dictionary::Histogram;
use opf_forge::{parse_signal_file, Descriptor64, Label, Signal64, SynthParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Loads a versioned artifact, naming the file in any error.
pub fn load<D, E, F>(path: &Path, parse: F) -> Result<D>
where
    E: std::error::Error + Send + Sync + 'static,
    F: FnOnce(&str) -> Result<D, E>,
{
    let text = read_text(path)?;
    parse(&text).with_context(|| format!("invalid artifact {}", path.display()))
}

pub fn load_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    load(path, artifact::from_json::<D>)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub subject_id: String,
    pub label: Label,
}

/// Index of a synthesized cohort directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u64,
    pub params: SynthParams,
    pub signals: Vec<ManifestEntry>,
}

/// Reads every `*.csv` in `dir`, in file-name order.
pub fn read_signal_dir(dir: &Path) -> Result<Vec<Signal64>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no signal CSV files in {}", dir.display());
    }
    files
        .iter()
        .map(|f| {
            let bytes = fs::read(f).with_context(|| format!("cannot read {}", f.display()))?;
            parse_signal_file(&bytes).with_context(|| format!("invalid signal file {}", f.display()))
        })
        .collect()
}

/// Descriptor rows with the label of their source signal.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorTable {
    pub dim: usize,
    pub rows: Vec<(Label, Descriptor64)>,
}

impl DescriptorTable {
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|(_, d)| d.values.clone()).collect()
    }

    /// Rows grouped by source signal, in order of first appearance.
    pub fn by_signal(&self) -> Vec<(Label, Vec<Descriptor64>)> {
        let mut groups: Vec<(Label, Vec<Descriptor64>)> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for (label, d) in &self.rows {
            let slot = *index.entry(d.source_signal.clone()).or_insert_with(|| {
                groups.push((*label, Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(d.clone());
        }
        groups
    }
}

/// `dim=<D>` line, then `subject,label,window_index,v0,…,v(D−1)` per row.
pub fn write_descriptors(path: &Path, table: &DescriptorTable) -> Result<()> {
    let mut out = format!("dim={}\n", table.dim);
    for (label, d) in &table.rows {
        if d.source_signal.contains(',') {
            bail!("subject id {:?} contains a comma", d.source_signal);
        }
        out.push_str(&format!("{},{},{}", d.source_signal, label, d.window_index));
        for v in &d.values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_descriptors(path: &Path) -> Result<DescriptorTable> {
    let text = read_text(path)?;
    let at = |line: usize| format!("{}:{}", path.display(), line);
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().with_context(|| format!("{}: empty descriptor file", at(1)))?;
    let dim: usize = first
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .with_context(|| format!("{}: expected header `dim=<D>`, found {first:?}", at(1)))?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 3 {
            bail!("{}: expected {} fields (subject, label, window, {} values), found {}", at(i + 1), dim + 3, dim, fields.len());
        }
        let label: Label = fields[1].parse().map_err(|e| anyhow::anyhow!("{}: field `label`: {e}", at(i + 1)))?;
        let window_index = fields[2].parse().with_context(|| format!("{}: field `window_index`", at(i + 1)))?;
        let values = fields[3..]
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let x: f64 = v.parse().with_context(|| format!("{}: field `v{j}` is not a number: {v:?}", at(i + 1)))?;
                if !x.is_finite() {
                    bail!("{}: field `v{j}` is not finite", at(i + 1));
                }
                Ok(x)
            })
            .collect::<Result<_>>()?;
        rows.push((label, Descriptor64 { values, source_signal: fields[0].to_string(), window_index }));
    }
    if rows.is_empty() {
        bail!("{}: no descriptor rows", path.display());
    }
    Ok(DescriptorTable { dim, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSet {
    pub version: u64,
    pub dictionary_size: usize,
    pub histograms: Vec<Histogram>,
}

impl HistogramSet {
    pub fn new(dictionary_size: usize, histograms: Vec<Histogram>) -> Self {
        Self { version: SCHEMA_VERSION, dictionary_size, histograms }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let set: Self = load_json(path)?;
        if let Some(h) = set.histograms.iter().find(|h| h.counts.len() != set.dictionary_size) {
            bail!(
                "invalid artifact {}: field `histograms.counts` of {} has length {}, expected dictionary_size {}",
                path.display(),
                h.subject_id,
                h.counts.len(),
                set.dictionary_size
            );
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub label: Label,
    pub values: Vec<f64>,
}

/// Real-valued per-signal features (e.g. RBM-compressed histograms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub version: u64,
    pub dim: usize,
    pub samples: Vec<FeatureRow>,
}

impl FeatureSet {
    pub fn new(dim: usize, samples: Vec<FeatureRow>) -> Self {
        Self { version: SCHEMA_VERSION, dim, samples }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let set: Self = load_json(path)?;
        if let Some(r) = set.samples.iter().find(|r| r.values.len() != set.dim) {
            bail!(
                "invalid artifact {}: field `samples.values` of {} has length {}, expected dim {}",
                path.display(),
                r.subject_id,
                r.values.len(),
                set.dim
            );
        }
        Ok(set)
    }

    pub fn from_histograms(set: &HistogramSet) -> Self {
        let samples = set
            .histograms
            .iter()
            .map(|h| FeatureRow {
                subject_id: h.subject_id.clone(),
                label: h.label,
                values: h.counts.iter().map(|&c| c as f64).collect(),
            })
            .collect();
        Self::new(set.dictionary_size, samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subject_id: String,
    pub label: Label,
    pub predicted: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub version: u64,
    /// Present when every sample carries a known label.
    pub balanced_accuracy: Option<f64>,
    pub predictions: Vec<Prediction>,
}
