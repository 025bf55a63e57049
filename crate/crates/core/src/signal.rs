//! Multi-channel pen signals: CSV ingest, synthetic cohorts, and sliding-window
//! Haar descriptors.
//!
//! A signal carries six synchronized channels. Descriptors are built by cutting
//! every channel with the same window (same start and end sample), running a
//! single-level orthonormal Haar transform on each cut, and concatenating the
//! per-channel `(approx ‖ detail)` blocks.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{mix_seed, Scalar};

pub const N_CHANNELS: usize = 6;

/// Channel names in file order.
pub const CHANNEL_NAMES: [&str; N_CHANNELS] = ["grip", "pressure", "tilt", "acc_x", "acc_y", "acc_z"];

pub const CSV_HEADER: &str = "t_ms,grip,pressure,tilt,acc_x,acc_y,acc_z";

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("line {line}: missing metadata line `# rate_hz=<real> subject=<id> label=<HC|PD|NA>`")]
    MissingMetadata { line: usize },
    #[error("line {line}: invalid metadata: {reason}")]
    BadMetadata { line: usize, reason: String },
    #[error("line {line}: missing header `{CSV_HEADER}`")]
    MissingHeader { line: usize },
    #[error("line {line}: expected 7 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}, column {column}: non-numeric cell {cell:?}")]
    NonNumeric { line: usize, column: usize, cell: String },
    #[error("empty signal: no data rows")]
    Empty,
    #[error("input is not valid UTF-8")]
    Utf8,
    #[error("channel {channel} has length {found}, expected {expected}")]
    ChannelLength { channel: usize, found: usize, expected: usize },
    #[error("sample rate must be positive and finite, got {0}")]
    SampleRate(f64),
    #[error("Haar transform needs an even, non-zero length, got {0}")]
    HaarLength(usize),
    #[error("window of {window_ms} ms at {rate_hz} Hz spans {samples} samples; at least 2 required")]
    WindowTooShort { window_ms: f64, rate_hz: f64, samples: usize },
    #[error("stride of {stride_ms} ms at {rate_hz} Hz is shorter than one sample")]
    StrideTooShort { stride_ms: f64, rate_hz: f64 },
    #[error("signal of {len} samples is shorter than one window of {window} samples")]
    TooShort { len: usize, window: usize },
    #[error("invalid synthesis parameters: {0}")]
    Params(String),
}

/// Subject class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "PD")]
    Pd,
    #[serde(rename = "NA")]
    Unlabeled,
}

impl Label {
    /// Class index used by the classifiers (HC = 0, PD = 1).
    pub fn class_index(self) -> Option<usize> {
        match self {
            Label::Hc => Some(0),
            Label::Pd => Some(1),
            Label::Unlabeled => None,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Hc),
            1 => Some(Label::Pd),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Hc => "HC",
            Label::Pd => "PD",
            Label::Unlabeled => "NA",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "HC" => Ok(Label::Hc),
            "PD" => Ok(Label::Pd),
            "NA" => Ok(Label::Unlabeled),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Six equal-length channels recorded at one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSignal<T> {
    channels: [Vec<T>; N_CHANNELS],
    sample_rate_hz: T,
    pub subject_id: String,
    pub label: Label,
}

impl<T: Scalar> MultiChannelSignal<T> {
    pub fn new(
        channels: [Vec<T>; N_CHANNELS],
        sample_rate_hz: T,
        subject_id: impl Into<String>,
        label: Label,
    ) -> Result<Self, SignalError> {
        if !(sample_rate_hz > T::zero() && sample_rate_hz.is_finite()) {
            return Err(SignalError::SampleRate(sample_rate_hz.as_f64()));
        }
        let expected = channels[0].len();
        if expected == 0 {
            return Err(SignalError::Empty);
        }
        for (channel, c) in channels.iter().enumerate() {
            if c.len() != expected {
                return Err(SignalError::ChannelLength { channel, found: c.len(), expected });
            }
        }
        Ok(Self { channels, sample_rate_hz, subject_id: subject_id.into(), label })
    }

    pub fn channels(&self) -> &[Vec<T>; N_CHANNELS] {
        &self.channels
    }

    pub fn sample_rate_hz(&self) -> T {
        self.sample_rate_hz
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn parse_metadata(line_no: usize, line: &str) -> Result<(f64, String, Label), SignalError> {
    let bad = |reason: String| SignalError::BadMetadata { line: line_no, reason };
    let body = line.strip_prefix('#').ok_or(SignalError::MissingMetadata { line: line_no })?;
    let (mut rate, mut subject, mut label) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| bad(format!("token {token:?} is not key=value")))?;
        match key {
            "rate_hz" => {
                let r: f64 = value.parse().map_err(|_| bad(format!("rate_hz {value:?} is not a number")))?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(bad(format!("rate_hz must be positive, got {value}")));
                }
                rate = Some(r);
            }
            "subject" => subject = Some(value.to_string()),
            "label" => label = Some(value.parse::<Label>().map_err(bad)?),
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    Ok((
        rate.ok_or_else(|| bad("rate_hz missing".into()))?,
        subject.ok_or_else(|| bad("subject missing".into()))?,
        label.ok_or_else(|| bad("label missing".into()))?,
    ))
}

fn parse_cell<T: Scalar>(line: usize, column: usize, cell: &str) -> Result<T, SignalError> {
    let cell = cell.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => T::from_f64(v)
            .filter(|x| x.is_finite())
            .ok_or_else(|| SignalError::NonNumeric { line, column, cell: cell.to_string() }),
        _ => Err(SignalError::NonNumeric { line, column, cell: cell.to_string() }),
    }
}

/// Parses the signal CSV layout: one `# rate_hz=.. subject=.. label=..` line,
/// the fixed header, then one row of seven numeric cells per sample. Errors
/// carry 1-based line numbers. The `t_ms` column is validated but not used;
/// samples are taken as uniformly spaced at the declared rate.
pub fn parse_signal_file<T: Scalar>(bytes: &[u8]) -> Result<MultiChannelSignal<T>, SignalError> {
    let text = std::str::from_utf8(bytes).map_err(|_| SignalError::Utf8)?;
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (meta_no, meta) = lines.next().ok_or(SignalError::MissingMetadata { line: 1 })?;
    if !meta.trim_start().starts_with('#') {
        return Err(SignalError::MissingMetadata { line: meta_no });
    }
    let (rate, subject, label) = parse_metadata(meta_no, meta.trim())?;

    let (header_no, header) = lines.next().ok_or(SignalError::MissingHeader { line: meta_no + 1 })?;
    if header.trim() != CSV_HEADER {
        return Err(SignalError::MissingHeader { line: header_no });
    }

    let mut channels: [Vec<T>; N_CHANNELS] = Default::default();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != N_CHANNELS + 1 {
            return Err(SignalError::FieldCount { line, found: fields.len() });
        }
        parse_cell::<T>(line, 1, fields[0])?;
        for (c, cell) in fields[1..].iter().enumerate() {
            channels[c].push(parse_cell(line, c + 2, cell)?);
        }
    }
    if channels[0].is_empty() {
        return Err(SignalError::Empty);
    }
    MultiChannelSignal::new(channels, T::lit(rate), subject, label)
}

/// Serializes a signal in the layout accepted by [`parse_signal_file`].
pub fn write_signal_csv<T: Scalar>(signal: &MultiChannelSignal<T>) -> String {
    use std::fmt::Write;
    let rate = signal.sample_rate_hz.as_f64();
    let mut out = String::with_capacity(signal.len() * 64);
    let _ = writeln!(out, "# rate_hz={} subject={} label={}", rate, signal.subject_id, signal.label);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..signal.len() {
        let _ = write!(out, "{}", i as f64 * 1000.0 / rate);
        for c in &signal.channels {
            let _ = write!(out, ",{}", c[i]);
        }
        out.push('\n');
    }
    out
}

/// Parameters for the synthetic HC/PD cohort generator.
///
/// Every subject gets a slow drawing trajectory (0.4 to 0.8 Hz) on each channel
/// with its own offset, amplitude (0.1 to 0.2), and phase. PD subjects
/// additionally carry a sinusoidal tremor with frequency drawn from
/// `tremor_freq_hz`, one phase per subject lagged by π/6 per channel, and a
/// per-channel amplitude of `tremor_amplitude × U(0.8, 1.2)`. All channels
/// receive i.i.d. Gaussian noise of `noise_std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_subjects_per_class: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub tremor_freq_hz: (f64, f64),
    pub tremor_amplitude: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthParams {
    /// Tremor amplitude of the "separable" preset.
    pub const SEPARABLE_TREMOR_AMPLITUDE: f64 = 1.5;
    /// Noise level of the "separable" preset.
    pub const SEPARABLE_NOISE_STD: f64 = 0.05;

    /// Preset where PD and HC are clearly separable by the descriptor pipeline:
    /// 10 s at 100 Hz, 4 to 6 Hz tremor of amplitude 1.5 over noise of 0.05.
    pub fn separable(n_subjects_per_class: usize, seed: u64) -> Self {
        Self {
            n_subjects_per_class,
            duration_s: 10.0,
            sample_rate_hz: 100.0,
            tremor_freq_hz: (4.0, 6.0),
            tremor_amplitude: Self::SEPARABLE_TREMOR_AMPLITUDE,
            noise_std: Self::SEPARABLE_NOISE_STD,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let fail = |m: &str| Err(SignalError::Params(m.to_string()));
        if self.n_subjects_per_class < 1 {
            return fail("n_subjects_per_class must be at least 1");
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return fail("sample_rate_hz must be positive");
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return fail("duration_s must be positive");
        }
        if (self.duration_s * self.sample_rate_hz).round() < 1.0 {
            return fail("duration_s × sample_rate_hz must give at least one sample");
        }
        let (lo, hi) = self.tremor_freq_hz;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return fail("tremor_freq_hz must be a non-empty positive range");
        }
        if !(self.tremor_amplitude >= 0.0 && self.tremor_amplitude.is_finite()) {
            return fail("tremor_amplitude must be non-negative");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail("noise_std must be non-negative");
        }
        Ok(())
    }
}

impl Default for SynthParams {
    fn default() -> Self {
        Self::separable(10, 0)
    }
}

/// Generates `2 · n_subjects_per_class` signals: HC subjects first
/// (`hc_000`, `hc_001`, ...), then PD subjects. Each subject draws from its own
/// seeded stream, so the cohort is a pure function of `p`.
pub fn generate_synthetic_cohort<T: Scalar>(p: &SynthParams) -> Result<Vec<MultiChannelSignal<T>>, SignalError> {
    p.validate()?;
    let n = p.n_subjects_per_class;
    (0..2 * n)
        .map(|i| {
            let (label, id) = if i < n {
                (Label::Hc, format!("hc_{i:03}"))
            } else {
                (Label::Pd, format!("pd_{:03}", i - n))
            };
            synth_subject(p, i as u64, label, id)
        })
        .collect()
}

fn synth_subject<T: Scalar>(
    p: &SynthParams,
    index: u64,
    label: Label,
    subject_id: String,
) -> Result<MultiChannelSignal<T>, SignalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(p.seed, index));
    let len = (p.duration_s * p.sample_rate_hz).round() as usize;
    let noise = Normal::new(0.0, p.noise_std).map_err(|e| SignalError::Params(e.to_string()))?;

    let draw_freq = rng.random_range(0.4..0.8);
    let (tlo, thi) = p.tremor_freq_hz;
    let tremor_freq = if thi > tlo { rng.random_range(tlo..thi) } else { tlo };
    let tremor_phase = rng.random_range(0.0..2.0 * PI);

    let mut channels: [Vec<T>; N_CHANNELS] = Default::default();
    for (c, channel) in channels.iter_mut().enumerate() {
        let offset = rng.random_range(0.5..1.5);
        let amplitude = rng.random_range(0.1..0.2);
        let phase = rng.random_range(0.0..2.0 * PI);
        let tremor_gain = p.tremor_amplitude * rng.random_range(0.8..1.2);
        let tremor_phase = tremor_phase + c as f64 * PI / 6.0;
        *channel = (0..len)
            .map(|i| {
                let t = i as f64 / p.sample_rate_hz;
                let mut x = offset + amplitude * (2.0 * PI * draw_freq * t + phase).sin();
                if label == Label::Pd {
                    x += tremor_gain * (2.0 * PI * tremor_freq * t + tremor_phase).sin();
                }
                x += noise.sample(&mut rng);
                T::lit(x)
            })
            .collect();
    }
    MultiChannelSignal::new(channels, T::lit(p.sample_rate_hz), subject_id, label)
}

/// Single-level orthonormal Haar transform of an even-length window.
pub fn haar_dwt1<T: Scalar>(window: &[T]) -> Result<(Vec<T>, Vec<T>), SignalError> {
    if window.is_empty() || !window.len().is_multiple_of(2) {
        return Err(SignalError::HaarLength(window.len()));
    }
    let s = T::lit(FRAC_1_SQRT_2);
    Ok(window
        .chunks_exact(2)
        .map(|p| ((p[0] + p[1]) * s, (p[0] - p[1]) * s))
        .unzip())
}

/// Inverse of [`haar_dwt1`].
pub fn haar_idwt1<T: Scalar>(approx: &[T], detail: &[T]) -> Result<Vec<T>, SignalError> {
    if approx.is_empty() || approx.len() != detail.len() {
        return Err(SignalError::HaarLength(approx.len() + detail.len()));
    }
    let s = T::lit(FRAC_1_SQRT_2);
    Ok(approx
        .iter()
        .zip(detail)
        .flat_map(|(&a, &d)| [(a + d) * s, (a - d) * s])
        .collect())
}

/// One local feature vector cut from a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor<T> {
    pub values: Vec<T>,
    pub source_signal: String,
    pub window_index: usize,
}

/// Window and stride in samples for a given rate: `floor(ms · rate / 1000)`.
pub fn window_geometry(window_ms: f64, stride_ms: f64, rate_hz: f64) -> Result<(usize, usize), SignalError> {
    let window = (window_ms * rate_hz / 1000.0).floor();
    let stride = (stride_ms * rate_hz / 1000.0).floor();
    if !(window >= 2.0) || !window.is_finite() {
        return Err(SignalError::WindowTooShort {
            window_ms,
            rate_hz,
            samples: if window.is_finite() && window > 0.0 { window as usize } else { 0 },
        });
    }
    if !(stride >= 1.0) || !stride.is_finite() {
        return Err(SignalError::StrideTooShort { stride_ms, rate_hz });
    }
    Ok((window as usize, stride as usize))
}

/// Number of windows of `window` samples at `stride` over `len` samples.
pub fn window_count(len: usize, window: usize, stride: usize) -> usize {
    if len < window || stride == 0 {
        0
    } else {
        (len - window) / stride + 1
    }
}

/// Sliding-window descriptors: every channel is cut at the same sample range,
/// an odd window drops its last sample, and each cut contributes
/// `approx ‖ detail` to the descriptor. Dimension is `6 × (window rounded down to even)`.
pub fn extract_descriptors<T: Scalar>(
    s: &MultiChannelSignal<T>,
    window_ms: f64,
    stride_ms: f64,
) -> Result<Vec<Descriptor<T>>, SignalError> {
    if !(window_ms > 0.0) {
        return Err(SignalError::WindowTooShort { window_ms, rate_hz: s.sample_rate_hz.as_f64(), samples: 0 });
    }
    if !(stride_ms > 0.0) {
        return Err(SignalError::StrideTooShort { stride_ms, rate_hz: s.sample_rate_hz.as_f64() });
    }
    let (window, stride) = window_geometry(window_ms, stride_ms, s.sample_rate_hz.as_f64())?;
    let len = s.len();
    if len < window {
        return Err(SignalError::TooShort { len, window });
    }
    let used = window - window % 2;
    let count = window_count(len, window, stride);
    let mut out = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * stride;
        let mut values = Vec::with_capacity(N_CHANNELS * used);
        for channel in &s.channels {
            let (approx, detail) = haar_dwt1(&channel[start..start + used])?;
            values.extend(approx);
            values.extend(detail);
        }
        out.push(Descriptor { values, source_signal: s.subject_id.clone(), window_index: w });
    }
    Ok(out)
}

/// Descriptors for a whole corpus, one list per signal, in input order.
pub fn extract_corpus<T: Scalar>(
    signals: &[MultiChannelSignal<T>],
    window_ms: f64,
    stride_ms: f64,
) -> Result<Vec<Vec<Descriptor<T>>>, SignalError> {
    signals
        .par_iter()
        .map(|s| extract_descriptors(s, window_ms, stride_ms))
        .collect()
}
