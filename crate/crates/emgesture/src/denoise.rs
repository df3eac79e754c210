//! Ambient-noise removal from averaged power spectra.
//!
//! Both the gesture spectrum and an independently recorded noise spectrum
//! are decomposed with the same mode-decomposition parameters, the modes are
//! paired by nearest center frequency, and spectral subtraction is applied
//! at the mode level before recombining. Subtracting structured noise mode
//! by mode removes hum and broadband interference with fewer artifacts than
//! subtracting the full noisy spectrum bin by bin; the plain whole-spectrum
//! subtraction is retained as an explicit ablation path.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectrum::{AveragePowerSpectrum, SpectrumSource};
use crate::vmd::{self, ModeSet, VmdConfig};

/// Modes paired by nearest center frequency when the separation exceeds
/// this bound are left unmatched (cycles/sample).
pub const DEFAULT_PAIRING_THRESHOLD: f64 = 0.05;

/// The averaged ambient-noise spectrum together with its decomposition.
///
/// The mode set is always produced from `aps` with exactly `vmd_config`;
/// the constructor is the only way to build one.
#[derive(Debug, Clone)]
pub struct NoiseProfile {
    pub aps: AveragePowerSpectrum,
    pub mode_set: ModeSet,
    pub vmd_config: VmdConfig,
}

impl NoiseProfile {
    /// Decompose a noise spectrum into a reusable profile.
    pub fn from_aps(aps: AveragePowerSpectrum, cfg: &VmdConfig) -> Result<NoiseProfile> {
        Self::from_aps_traced(aps, cfg).map(|(profile, _)| profile)
    }

    /// Like [`NoiseProfile::from_aps`], also returning the per-iteration
    /// convergence trace of the decomposition.
    pub fn from_aps_traced(
        aps: AveragePowerSpectrum,
        cfg: &VmdConfig,
    ) -> Result<(NoiseProfile, Vec<vmd::IterationSnapshot>)> {
        let (mode_set, trace) = vmd::decompose_traced(&aps.power, cfg)?;
        Ok((
            NoiseProfile {
                aps,
                mode_set,
                vmd_config: cfg.clone(),
            },
            trace,
        ))
    }
}

/// Per-bin mean of several spectra; the "stable noise profile" built from
/// the segments of a noise recording.
pub fn mean_aps(rows: &[AveragePowerSpectrum]) -> Result<AveragePowerSpectrum> {
    let first = rows.first().ok_or(Error::EmptyInput)?;
    let len = first.len();
    let mut power = vec![0.0f64; len];
    for row in rows {
        if row.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: row.len(),
            });
        }
        for (acc, p) in power.iter_mut().zip(&row.power) {
            *acc += p;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    for p in power.iter_mut() {
        *p *= inv;
    }
    Ok(AveragePowerSpectrum {
        power,
        bin_width_hz: first.bin_width_hz,
        n_subwindows: first.n_subwindows,
        source: SpectrumSource::Noise,
    })
}

/// Result of matching gesture modes against noise modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModePairing {
    /// `(gesture_mode_index, noise_mode_index, |delta omega|)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_gesture_modes: Vec<usize>,
}

/// Pair modes greedily by ascending center-frequency distance.
///
/// Each noise mode is used at most once; a candidate pair further apart
/// than `threshold` cycles/sample is dropped, leaving the gesture mode
/// unmatched. Both mode sets must come from decompositions with the same
/// parameters (equal K, alpha, tol).
pub fn pair_modes(gesture: &ModeSet, noise: &ModeSet, threshold: f64) -> Result<ModePairing> {
    if !gesture.config.compatible_with(&noise.config) {
        return Err(Error::VmdConfigMismatch(format!(
            "gesture (K={}, alpha={}, tol={}) vs noise (K={}, alpha={}, tol={})",
            gesture.config.k_modes,
            gesture.config.alpha,
            gesture.config.tol,
            noise.config.k_modes,
            noise.config.alpha,
            noise.config.tol,
        )));
    }

    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (g, &gw) in gesture.center_freqs.iter().enumerate() {
        for (n, &nw) in noise.center_freqs.iter().enumerate() {
            candidates.push((g, n, (gw - nw).abs()));
        }
    }
    // ascending distance, index order breaking ties for determinism
    candidates.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut gesture_used = vec![false; gesture.center_freqs.len()];
    let mut noise_used = vec![false; noise.center_freqs.len()];
    let mut pairs = Vec::new();
    for (g, n, d) in candidates {
        if d > threshold {
            break;
        }
        if !gesture_used[g] && !noise_used[n] {
            gesture_used[g] = true;
            noise_used[n] = true;
            pairs.push((g, n, d));
        }
    }
    pairs.sort_by_key(|&(g, _, _)| g);
    let unmatched_gesture_modes = gesture_used
        .iter()
        .enumerate()
        .filter(|(_, used)| !**used)
        .map(|(g, _)| g)
        .collect();
    Ok(ModePairing {
        pairs,
        unmatched_gesture_modes,
    })
}

/// `out[k] = max(a[k] - b[k], 0)`; the floor keeps power non-negative.
pub fn spectral_subtract(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).max(0.0)).collect())
}

/// Remove the noise profile from a gesture spectrum mode by mode.
///
/// The gesture spectrum is decomposed with `cfg` (which must match the
/// profile's parameters), the corresponding noise mode is subtracted from
/// each paired gesture mode, unmatched gesture modes pass through, and the
/// recombined sum is floored at zero so the output is a valid power
/// spectrum tagged `denoised`.
///
/// The floor is applied once, after recombination: individual modes of a
/// non-negative spectrum legitimately oscillate below zero and cancel in
/// the sum, so rectifying them one by one would corrupt the result. With
/// a zero noise profile the output is therefore exactly the floored mode
/// reconstruction of the input, and denoising a spectrum against a profile
/// built from that same spectrum yields exactly zero.
pub fn denoise_aps(
    gesture_aps: &AveragePowerSpectrum,
    profile: &NoiseProfile,
    cfg: &VmdConfig,
    pairing_threshold: f64,
) -> Result<AveragePowerSpectrum> {
    denoise_aps_with_status(gesture_aps, profile, cfg, pairing_threshold).map(|(aps, _)| aps)
}

/// [`denoise_aps`] plus whether the gesture decomposition converged within
/// its iteration budget (non-convergence degrades quality but is not fatal).
pub fn denoise_aps_with_status(
    gesture_aps: &AveragePowerSpectrum,
    profile: &NoiseProfile,
    cfg: &VmdConfig,
    pairing_threshold: f64,
) -> Result<(AveragePowerSpectrum, bool)> {
    if gesture_aps.len() != profile.aps.len() {
        return Err(Error::LengthMismatch {
            left: gesture_aps.len(),
            right: profile.aps.len(),
        });
    }
    let rel_width = (gesture_aps.bin_width_hz - profile.aps.bin_width_hz).abs()
        / profile.aps.bin_width_hz.max(f64::MIN_POSITIVE);
    if rel_width > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "bin width mismatch: gesture {} Hz vs profile {} Hz",
            gesture_aps.bin_width_hz, profile.aps.bin_width_hz
        )));
    }
    if !cfg.compatible_with(&profile.vmd_config) {
        return Err(Error::VmdConfigMismatch(
            "denoise config differs from the profile's".into(),
        ));
    }

    let gesture_ms = vmd::decompose(&gesture_aps.power, cfg)?;
    let pairing = pair_modes(&gesture_ms, &profile.mode_set, pairing_threshold)?;

    let mut out = vec![0.0f64; gesture_aps.len()];
    for &(g, n, _) in &pairing.pairs {
        let noise_mode = &profile.mode_set.modes[n];
        for ((acc, v), w) in out.iter_mut().zip(&gesture_ms.modes[g]).zip(noise_mode) {
            *acc += v - w;
        }
    }
    for &g in &pairing.unmatched_gesture_modes {
        for (acc, v) in out.iter_mut().zip(&gesture_ms.modes[g]) {
            *acc += v;
        }
    }
    for v in out.iter_mut() {
        *v = v.max(0.0);
    }

    Ok((
        AveragePowerSpectrum {
            power: out,
            bin_width_hz: gesture_aps.bin_width_hz,
            n_subwindows: gesture_aps.n_subwindows,
            source: SpectrumSource::Denoised,
        },
        gesture_ms.converged,
    ))
}

/// The ablation path: plain bin-by-bin subtraction of the averaged noise
/// spectrum, no decomposition.
pub fn denoise_whole_spectrum(
    gesture_aps: &AveragePowerSpectrum,
    noise_aps: &AveragePowerSpectrum,
) -> Result<AveragePowerSpectrum> {
    let power = spectral_subtract(&gesture_aps.power, &noise_aps.power)?;
    Ok(AveragePowerSpectrum {
        power,
        bin_width_hz: gesture_aps.bin_width_hz,
        n_subwindows: gesture_aps.n_subwindows,
        source: SpectrumSource::Denoised,
    })
}

/// Manifest tying together the three retained spectrum versions (original,
/// noise, denoised) for one denoising run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DenoiseBundle {
    pub original_csv: PathBuf,
    pub noise_csv: PathBuf,
    pub denoised_csv: PathBuf,
    /// None when the whole-spectrum ablation path was used.
    pub vmd: Option<VmdConfig>,
    pub pairing_threshold: f64,
    /// Center frequencies of the noise-profile modes (empty for the
    /// whole-spectrum path).
    pub noise_mode_centers: Vec<f64>,
    /// How many noise rows were averaged into the profile.
    pub n_noise_rows: usize,
}

impl DenoiseBundle {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<DenoiseBundle> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
