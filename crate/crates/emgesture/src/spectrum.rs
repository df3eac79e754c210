//! Frequency-domain engine.
//!
//! Provides the O(N^2) direct DFT (the numeric oracle), a radix-2 FFT and
//! inverse, per-bin frequencies, and the averaged short-window power
//! spectrum: each segment is split into non-overlapping sub-windows, each
//! sub-window is transformed, and the squared magnitudes are averaged into
//! one stable per-frequency power vector. That vector is the gesture
//! feature consumed by the rest of the pipeline.

use std::f64::consts::TAU;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal_io::Segment;

/// Complex transform output together with the geometry needed to interpret
/// its bins.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub n: usize,
}

impl Spectrum {
    /// Frequency in Hz of bin `k`.
    pub fn bin_frequency(&self, k: usize) -> Result<f64> {
        bin_frequency(k, self.sample_rate_hz, self.n)
    }

    /// Sum of |X[k]|^2 over all bins.
    pub fn total_power(&self) -> f64 {
        self.bins.iter().map(|b| b.norm_sqr()).sum()
    }
}

/// Frequency of bin `k` for an `n`-point transform at sample rate `fs`:
/// `f_k = k * fs / n`.
pub fn bin_frequency(k: usize, fs: f64, n: usize) -> Result<f64> {
    if k >= n {
        return Err(Error::BinOutOfRange { k, n });
    }
    Ok(k as f64 * fs / n as f64)
}

/// Direct evaluation of `X[k] = sum_n x[n] * e^{-j 2 pi k n / N}`.
///
/// O(N^2); exists as the independent oracle the FFT is checked against.
/// Works for any length. Twiddles come from a precomputed table indexed by
/// `k*n mod N`, and the sum runs in two interleaved accumulators so the
/// oracle stays usable at N = 4096.
pub fn dft_direct(x: &[Complex64], sample_rate_hz: f64) -> Result<Spectrum> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len();
    let table: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, -TAU * m as f64 / n as f64))
        .collect();
    let mut bins = Vec::with_capacity(n);
    for k in 0..n {
        let step = (2 * k) % n;
        let mut idx_even = 0usize;
        let mut idx_odd = k % n;
        let mut acc_even = Complex64::new(0.0, 0.0);
        let mut acc_odd = Complex64::new(0.0, 0.0);
        let mut m = 0;
        while m + 1 < n {
            acc_even += x[m] * table[idx_even];
            acc_odd += x[m + 1] * table[idx_odd];
            idx_even += step;
            if idx_even >= n {
                idx_even -= n;
            }
            idx_odd += step;
            if idx_odd >= n {
                idx_odd -= n;
            }
            m += 2;
        }
        if m < n {
            acc_even += x[m] * table[idx_even];
        }
        bins.push(acc_even + acc_odd);
    }
    Ok(Spectrum {
        bins,
        sample_rate_hz,
        n,
    })
}

/// Radix-2 decimation-in-time FFT. Input length must be a power of two;
/// callers pad or truncate beforehand.
pub fn fft(x: &[Complex64], sample_rate_hz: f64) -> Result<Spectrum> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !x.len().is_power_of_two() {
        return Err(Error::NonPowerOfTwo(x.len()));
    }
    let mut bins = x.to_vec();
    fft_in_place(&mut bins, false);
    Ok(Spectrum {
        n: bins.len(),
        bins,
        sample_rate_hz,
    })
}

/// Inverse transform `x[n] = (1/N) sum_k X[k] * e^{j 2 pi k n / N}`.
pub fn ifft(spectrum: &Spectrum) -> Result<Vec<Complex64>> {
    if spectrum.bins.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !spectrum.bins.len().is_power_of_two() {
        return Err(Error::NonPowerOfTwo(spectrum.bins.len()));
    }
    let mut out = spectrum.bins.clone();
    fft_in_place(&mut out, true);
    Ok(out)
}

/// In-place iterative radix-2 Cooley-Tukey. `a.len()` must be a power of two.
pub(crate) fn fft_in_place(a: &mut [Complex64], inverse: bool) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }

    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, sign * TAU * k as f64 / n as f64))
        .collect();

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let u = a[start + k];
                let v = a[start + k + half] * w;
                a[start + k] = u + v;
                a[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }

    if inverse {
        let scale = 1.0 / n as f64;
        for v in a.iter_mut() {
            *v *= scale;
        }
    }
}

/// Forward/inverse transform for arbitrary lengths: radix-2 when the length
/// is a power of two, direct O(N^2) evaluation otherwise. Used internally
/// where the length is data-dependent (mode decomposition of mirrored
/// signals).
pub(crate) fn transform_any(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    if n.is_power_of_two() {
        let mut out = x.to_vec();
        fft_in_place(&mut out, inverse);
        return out;
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let table: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, sign * TAU * m as f64 / n as f64))
        .collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = 0usize;
        for &xm in x {
            acc += xm * table[idx];
            idx += k;
            if idx >= n {
                idx -= n;
            }
        }
        out.push(acc);
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
    out
}

/// Taper applied to each sub-window before the transform. The pipeline
/// default is rectangular; Hann is available behind a flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    #[default]
    Rectangular,
    Hann,
}

impl WindowKind {
    fn coefficient(self, i: usize, n: usize) -> f64 {
        match self {
            WindowKind::Rectangular => 1.0,
            WindowKind::Hann => {
                if n <= 1 {
                    1.0
                } else {
                    0.5 * (1.0 - (TAU * i as f64 / n as f64).cos())
                }
            }
        }
    }
}

/// Which kind of signal a power spectrum was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumSource {
    Gesture,
    Noise,
    Denoised,
}

impl SpectrumSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumSource::Gesture => "gesture",
            SpectrumSource::Noise => "noise",
            SpectrumSource::Denoised => "denoised",
        }
    }

    pub fn parse(s: &str) -> Option<SpectrumSource> {
        match s {
            "gesture" => Some(SpectrumSource::Gesture),
            "noise" => Some(SpectrumSource::Noise),
            "denoised" => Some(SpectrumSource::Denoised),
            _ => None,
        }
    }
}

/// Per-frequency mean of |X[k]|^2 over the sub-windows of one segment.
#[derive(Debug, Clone)]
pub struct AveragePowerSpectrum {
    pub power: Vec<f64>,
    pub bin_width_hz: f64,
    pub n_subwindows: usize,
    pub source: SpectrumSource,
}

impl AveragePowerSpectrum {
    pub fn with_source(mut self, source: SpectrumSource) -> Self {
        self.source = source;
        self
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Compute the averaged short-window power spectrum of a segment.
///
/// The segment is split into `M = floor(len / sub_len)` non-overlapping
/// sub-windows; `power[k] = (1/M) * sum_m |FFT(window_m)[k]|^2`. Sub-windows
/// whose sample count is not a power of two are zero-padded up to the next
/// one (uniformly for every signal through the pipeline), so `power.len()`
/// is the padded transform length and `bin_width_hz = fs / power.len()`.
pub fn average_power_spectrum(
    seg: &Segment,
    subwindow_len_s: f64,
    window: WindowKind,
) -> Result<AveragePowerSpectrum> {
    let fs = seg.sample_rate_hz;
    let win_samples = (subwindow_len_s * fs + 1e-9).floor() as usize;
    if win_samples < 2 {
        return Err(Error::InvalidParam {
            name: "subwindow_len_s",
            reason: format!("{subwindow_len_s} s spans fewer than 2 samples at {fs} Hz"),
        });
    }
    if win_samples > seg.samples.len() {
        return Err(Error::SubwindowTooLong {
            requested_s: subwindow_len_s,
            available_s: seg.duration_s(),
        });
    }
    let padded = win_samples.next_power_of_two();
    let m = seg.samples.len() / win_samples;

    let mut acc = vec![0.0f64; padded];
    let mut buf = vec![Complex64::new(0.0, 0.0); padded];
    for w in 0..m {
        let chunk = &seg.samples[w * win_samples..(w + 1) * win_samples];
        for (i, &s) in chunk.iter().enumerate() {
            buf[i] = s * window.coefficient(i, win_samples);
        }
        for slot in buf.iter_mut().skip(win_samples) {
            *slot = Complex64::new(0.0, 0.0);
        }
        fft_in_place(&mut buf, false);
        // fixed accumulation order keeps the result bit-stable
        for (a, b) in acc.iter_mut().zip(buf.iter()) {
            *a += b.norm_sqr();
        }
    }
    let inv_m = 1.0 / m as f64;
    for a in acc.iter_mut() {
        *a *= inv_m;
    }
    Ok(AveragePowerSpectrum {
        power: acc,
        bin_width_hz: fs / padded as f64,
        n_subwindows: m,
        source: SpectrumSource::Gesture,
    })
}

/// One labeled feature: the averaged power spectrum of one segment.
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub label: String,
    pub aps: AveragePowerSpectrum,
}

pub const APS_CSV_HEADER: &str =
    "# emgesture aps csv v1: label,source,n_subwindows,bin_width_hz,power[0..n)";

/// Write labeled spectra as CSV, one row per sample:
/// `label,source,n_subwindows,bin_width_hz,p0,p1,...`.
pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{APS_CSV_HEADER}")?;
    for row in rows {
        write!(
            out,
            "{},{},{},{}",
            row.label,
            row.aps.source.as_str(),
            row.aps.n_subwindows,
            row.aps.bin_width_hz
        )?;
        for p in &row.aps.power {
            write!(out, ",{p}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Read back a feature CSV written by [`write_features_csv`].
pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRecord {
            what: "feature csv",
            line: lineno,
            reason,
        };
        let mut fields = line.split(',');
        let label = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| malformed("missing label".into()))?
            .to_string();
        let source = fields
            .next()
            .and_then(SpectrumSource::parse)
            .ok_or_else(|| malformed("bad source".into()))?;
        let n_subwindows: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad n_subwindows".into()))?;
        let bin_width_hz: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad bin_width_hz".into()))?;
        let power: Vec<f64> = fields
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(format!("bad power value: {e}")))?;
        if power.is_empty() {
            return Err(malformed("row has no power values".into()));
        }
        rows.push(FeatureRow {
            label,
            aps: AveragePowerSpectrum {
                power,
                bin_width_hz,
                n_subwindows,
                source,
            },
        });
    }
    Ok(rows)
}
