//! Physics-inspired synthetic charger-signal generator.
//!
//! A charging pad radiates across several narrow frequency bands; a hand
//! between pad and antenna attenuates each band by a gesture-dependent
//! factor, field strength decays exponentially with distance on the skin
//! depth scale, and the environment contributes broadband noise plus
//! structured interference (hum-like spurs) that persists when the charger
//! is off. Everything here is a pure function of (config, seed), so every
//! downstream stage is testable without hardware.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::signal_io::{IQRecording, Segment, SignalOrigin};
use crate::spectrum::{average_power_spectrum, AveragePowerSpectrum, WindowKind};

/// Permeability of free space (H/m).
pub const VACUUM_PERMEABILITY: f64 = 4.0e-7 * PI;

/// Peak-over-median threshold for calling a modulation line detected.
pub const DETECTION_THRESHOLD_DB: f64 = 10.0;

/// Minimum attenuation-factor difference, in at least two bands, required
/// between any two gesture profiles.
pub const PROFILE_SEPARATION: f64 = 0.15;

/// One emission band: a carrier of the given amplitude whose phase walks
/// randomly so its spectrum spreads over roughly `bandwidth_hz`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CarrierBand {
    pub center_hz: f64,
    pub amplitude: f64,
    pub bandwidth_hz: f64,
}

/// The synthetic world: emission bands, ambient interference, noise, and
/// receiver geometry.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub sample_rate_hz: f64,
    /// Bands emitted by the charger; attenuated by gestures and distance.
    pub carrier_bands: Vec<CarrierBand>,
    /// Interference present regardless of charger state (hum-like spurs);
    /// neither gesture- nor distance-attenuated.
    #[serde(default)]
    pub ambient_bands: Vec<CarrierBand>,
    /// Per-component standard deviation of the complex Gaussian noise.
    pub noise_std: f64,
    /// Slow level drift of the Gaussian noise floor: each wander interval
    /// redraws the level factor as `1 + N(0, this)`.
    #[serde(default)]
    pub noise_wander_std: f64,
    /// Slow level drift of the ambient interference bands, redrawn per
    /// wander interval and per band.
    #[serde(default)]
    pub ambient_wander_std: f64,
    /// Slow drift of the charger's output level, shared by all carrier
    /// bands (the power-regulation loop holds the level only approximately).
    /// Scales every carrier jointly, so band ratios survive while absolute
    /// powers wobble.
    #[serde(default)]
    pub carrier_level_wander_std: f64,
    /// Update cadence of all slow wander processes (seconds).
    #[serde(default = "default_wander_interval")]
    pub wander_interval_s: f64,
    /// Antenna distance used for the exponential decay of every carrier.
    pub distance_m: f64,
    /// Conductivity of the skin-depth medium model.
    pub conductivity_s_per_m: f64,
    pub seed: u64,
}

fn default_wander_interval() -> f64 {
    0.1
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidConfig("sample_rate_hz must be positive".into()));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        for band in self.carrier_bands.iter().chain(&self.ambient_bands) {
            if band.center_hz >= nyquist {
                return Err(Error::InvalidConfig(format!(
                    "band at {} Hz violates the Nyquist bound {} Hz",
                    band.center_hz, nyquist
                )));
            }
            if band.amplitude < 0.0 || band.bandwidth_hz < 0.0 {
                return Err(Error::InvalidConfig(
                    "band amplitudes and bandwidths must be non-negative".into(),
                ));
            }
        }
        if self.noise_std < 0.0
            || self.noise_wander_std < 0.0
            || self.ambient_wander_std < 0.0
            || self.carrier_level_wander_std < 0.0
        {
            return Err(Error::InvalidConfig("noise parameters must be non-negative".into()));
        }
        if !(self.wander_interval_s > 0.0) {
            return Err(Error::InvalidConfig("wander_interval_s must be positive".into()));
        }
        if self.distance_m < 0.0 {
            return Err(Error::InvalidConfig("distance_m must be non-negative".into()));
        }
        if !(self.conductivity_s_per_m > 0.0) {
            return Err(Error::InvalidConfig("conductivity_s_per_m must be positive".into()));
        }
        Ok(())
    }
}

/// Per-gesture band attenuation factors plus a small per-segment wobble.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GestureProfile {
    pub name: String,
    /// Multiplicative factor in [0, 1] per carrier band.
    pub band_attenuation: Vec<f64>,
    /// Standard deviation of the slow amplitude wobble that keeps repeated
    /// segments from being identical.
    pub jitter_std: f64,
}

/// Validate a profile set: matching band counts, factors in range, the
/// no-gesture baseline unattenuated, and every pair of profiles separable
/// (differing by at least [`PROFILE_SEPARATION`] in two or more bands).
pub fn validate_profiles(profiles: &[GestureProfile], n_bands: usize) -> Result<()> {
    if profiles.is_empty() {
        return Err(Error::InvalidConfig("no gesture profiles given".into()));
    }
    for p in profiles {
        if p.band_attenuation.len() != n_bands {
            return Err(Error::InvalidConfig(format!(
                "profile {:?} has {} attenuation factors for {} bands",
                p.name,
                p.band_attenuation.len(),
                n_bands
            )));
        }
        if p.band_attenuation.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig(format!(
                "profile {:?}: attenuation factors must lie in [0, 1]",
                p.name
            )));
        }
        if p.jitter_std < 0.0 {
            return Err(Error::InvalidConfig(format!("profile {:?}: negative jitter", p.name)));
        }
        if p.name == "no-gesture" && p.band_attenuation.iter().any(|&a| a != 1.0) {
            return Err(Error::InvalidConfig(
                "the no-gesture baseline must leave every band unattenuated".into(),
            ));
        }
    }
    for (i, a) in profiles.iter().enumerate() {
        for b in profiles.iter().skip(i + 1) {
            let distinct = a
                .band_attenuation
                .iter()
                .zip(&b.band_attenuation)
                .filter(|(x, y)| (*x - *y).abs() >= PROFILE_SEPARATION)
                .count();
            if distinct < 2 {
                return Err(Error::InvalidConfig(format!(
                    "profiles {:?} and {:?} differ in only {distinct} band(s) by >= {PROFILE_SEPARATION}; classes would not be separable",
                    a.name, b.name
                )));
            }
        }
    }
    Ok(())
}

/// CPU load-modulation pattern imprinted on the charger field through its
/// power-regulation feedback loop.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModulationSpec {
    pub f_mod_hz: f64,
    /// Fraction of each period spent at full amplitude.
    pub duty: f64,
    /// Amplitude drops to `1 - depth` in the idle phase.
    pub depth: f64,
}

/// Skin depth `delta = sqrt(2 / (mu0 * sigma * omega))`, `omega = 2 pi f`
/// (good-conductor approximation): the depth at which current density falls
/// to 1/e.
pub fn skin_depth(sigma_s_per_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(sigma_s_per_m > 0.0) {
        return Err(Error::InvalidParam {
            name: "sigma_s_per_m",
            reason: format!("must be positive, got {sigma_s_per_m}"),
        });
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::InvalidParam {
            name: "frequency_hz",
            reason: format!("must be positive, got {frequency_hz}"),
        });
    }
    let omega = TAU * frequency_hz;
    Ok((2.0 / (VACUUM_PERMEABILITY * sigma_s_per_m * omega)).sqrt())
}

/// Exponential field decay with distance: `amplitude * e^(-d / delta)`.
pub fn distance_attenuation(amplitude: f64, distance_m: f64, delta_m: f64) -> f64 {
    amplitude * (-distance_m / delta_m).exp()
}

// One Gaussian at a time via Box-Muller, caching the second draw so the
// stream consumes uniforms predictably.
struct GaussGen {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussGen {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = self.rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

// Slow piecewise-constant level factor, redrawn every wander interval.
struct Wander {
    std: f64,
    value: f64,
}

impl Wander {
    fn new(std: f64) -> Self {
        Self { std, value: 1.0 }
    }

    fn redraw(&mut self, gauss: &mut GaussGen) {
        // the draw happens regardless so RNG consumption is uniform
        let g = gauss.next();
        self.value = (1.0 + self.std * g).max(0.0);
    }
}

fn generate(
    cfg: &SynthConfig,
    carrier_attenuation: &[f64],
    jitter_std: f64,
    modulation: Option<&ModulationSpec>,
    duration_s: f64,
) -> Result<IQRecording> {
    cfg.validate()?;
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParam {
            name: "duration_s",
            reason: format!("must be positive, got {duration_s}"),
        });
    }
    if carrier_attenuation.len() != cfg.carrier_bands.len() {
        return Err(Error::InvalidConfig(format!(
            "{} attenuation factors for {} carrier bands",
            carrier_attenuation.len(),
            cfg.carrier_bands.len()
        )));
    }
    if let Some(m) = modulation {
        if m.f_mod_hz >= cfg.sample_rate_hz / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "modulation at {} Hz violates the Nyquist bound",
                m.f_mod_hz
            )));
        }
        if !(m.duty > 0.0 && m.duty < 1.0) || !(m.depth >= 0.0 && m.depth <= 1.0) {
            return Err(Error::InvalidConfig(
                "modulation duty must be in (0,1) and depth in [0,1]".into(),
            ));
        }
    }

    let fs = cfg.sample_rate_hz;
    let n = (duration_s * fs + 1e-9).floor() as usize;
    if n == 0 {
        return Err(Error::InvalidParam {
            name: "duration_s",
            reason: "shorter than one sample".into(),
        });
    }

    let mut gauss = GaussGen::new(cfg.seed);

    // effective carrier amplitudes: gesture factor x exponential decay
    struct Tone {
        amp: f64,
        phase: f64,
        step: f64,
        phase_noise_std: f64,
    }
    let make_tone = |band: &CarrierBand, amp: f64, rng: &mut GaussGen| Tone {
        amp,
        phase: TAU * (rng.rng.gen::<f64>()),
        step: TAU * band.center_hz / fs,
        phase_noise_std: (TAU * band.bandwidth_hz / fs).sqrt(),
    };

    let mut carriers: Vec<Tone> = Vec::with_capacity(cfg.carrier_bands.len());
    for (band, &atten) in cfg.carrier_bands.iter().zip(carrier_attenuation) {
        let delta = skin_depth(cfg.conductivity_s_per_m, band.center_hz.max(1e-6))?;
        let amp = band.amplitude * atten * distance_attenuation(1.0, cfg.distance_m, delta);
        carriers.push(make_tone(band, amp, &mut gauss));
    }
    let mut ambients: Vec<Tone> = cfg
        .ambient_bands
        .iter()
        .map(|band| make_tone(band, band.amplitude, &mut gauss))
        .collect();

    let mut carrier_jitter: Vec<Wander> = carriers.iter().map(|_| Wander::new(jitter_std)).collect();
    let mut carrier_level = Wander::new(cfg.carrier_level_wander_std);
    let mut ambient_wander: Vec<Wander> =
        ambients.iter().map(|_| Wander::new(cfg.ambient_wander_std)).collect();
    let mut noise_wander = Wander::new(cfg.noise_wander_std);

    let wander_samples = ((cfg.wander_interval_s * fs).round() as usize).max(1);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        if i % wander_samples == 0 {
            for w in carrier_jitter.iter_mut() {
                w.redraw(&mut gauss);
            }
            carrier_level.redraw(&mut gauss);
            for w in ambient_wander.iter_mut() {
                w.redraw(&mut gauss);
            }
            noise_wander.redraw(&mut gauss);
        }
        let envelope = match modulation {
            None => 1.0,
            Some(m) => {
                let cycle = (i as f64 / fs * m.f_mod_hz).fract();
                if cycle < m.duty {
                    1.0
                } else {
                    1.0 - m.depth
                }
            }
        };

        let mut re = 0.0f64;
        for (tone, jitter) in carriers.iter_mut().zip(&carrier_jitter) {
            re += tone.amp * jitter.value * carrier_level.value * envelope * tone.phase.cos();
            tone.phase += tone.step + tone.phase_noise_std * gauss.next();
        }
        for (tone, wander) in ambients.iter_mut().zip(&ambient_wander) {
            re += tone.amp * wander.value * tone.phase.cos();
            tone.phase += tone.step + tone.phase_noise_std * gauss.next();
        }
        let sigma = cfg.noise_std * noise_wander.value;
        re += sigma * gauss.next();
        let im = sigma * gauss.next();
        samples.push(Complex64::new(re, im));
    }

    IQRecording::new(samples, fs, SignalOrigin::Synthetic)
}

/// Synthesize a gesture-perturbed charger recording.
pub fn synth_recording(
    cfg: &SynthConfig,
    profile: &GestureProfile,
    duration_s: f64,
) -> Result<IQRecording> {
    if profile
        .band_attenuation
        .iter()
        .any(|a| !(0.0..=1.0).contains(a))
    {
        return Err(Error::InvalidConfig(format!(
            "profile {:?}: attenuation factors must lie in [0, 1]",
            profile.name
        )));
    }
    generate(
        cfg,
        &profile.band_attenuation,
        profile.jitter_std,
        None,
        duration_s,
    )
}

/// Synthesize the charger-off condition: carriers silenced, ambient
/// interference and noise unchanged.
pub fn synth_noise(cfg: &SynthConfig, duration_s: f64) -> Result<IQRecording> {
    let silenced = vec![0.0; cfg.carrier_bands.len()];
    generate(cfg, &silenced, 0.0, None, duration_s)
}

/// Synthesize a recording whose carrier amplitudes follow a duty-cycled
/// square wave between 1 and `1 - depth` at `f_mod_hz`.
pub fn synth_modulated(
    cfg: &SynthConfig,
    modulation: &ModulationSpec,
    duration_s: f64,
) -> Result<IQRecording> {
    let unattenuated = vec![1.0; cfg.carrier_bands.len()];
    generate(cfg, &unattenuated, 0.0, Some(modulation), duration_s)
}

/// Magnitude-detect a recording and reduce the envelope to an averaged
/// power spectrum; the input to [`detect_modulation`].
pub fn envelope_aps(rec: &IQRecording, subwindow_len_s: f64) -> Result<AveragePowerSpectrum> {
    let envelope: Vec<Complex64> = rec
        .samples()
        .iter()
        .map(|s| Complex64::new(s.norm(), 0.0))
        .collect();
    let segment = Segment {
        samples: envelope,
        sample_rate_hz: rec.sample_rate_hz(),
        index: 0,
        source_label: None,
    };
    average_power_spectrum(&segment, subwindow_len_s, WindowKind::Rectangular)
}

/// Outcome of a modulation-line search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModulationDetection {
    pub detected: bool,
    /// Peak over the median of the surrounding band, in dB.
    pub prominence_db: f64,
    pub f_peak_hz: f64,
}

/// Search an envelope spectrum for a line near `f_expected_hz`.
///
/// The peak is the strongest bin within `f_expected +/- tol`; its
/// prominence is measured against the median of the surrounding
/// `+/- 10*tol` band (the peak's `+/- tol` neighborhood excluded), and the
/// line counts as detected at [`DETECTION_THRESHOLD_DB`] or more.
pub fn detect_modulation(
    aps: &AveragePowerSpectrum,
    f_expected_hz: f64,
    tol_hz: f64,
) -> Result<ModulationDetection> {
    if !(tol_hz > 0.0) {
        return Err(Error::InvalidParam {
            name: "tol_hz",
            reason: format!("must be positive, got {tol_hz}"),
        });
    }
    let bw = aps.bin_width_hz;
    let half = aps.len() / 2; // positive-frequency half of the envelope spectrum
    let f_max = half as f64 * bw;
    if f_expected_hz <= 0.0 || f_expected_hz + tol_hz > f_max {
        return Err(Error::InvalidParam {
            name: "f_expected_hz",
            reason: format!("{f_expected_hz} +/- {tol_hz} Hz outside the spectrum range (0, {f_max}]"),
        });
    }

    let bin_of = |f: f64| -> usize { (f / bw).round() as usize };
    let lo = bin_of(f_expected_hz - tol_hz).max(1);
    let hi = bin_of(f_expected_hz + tol_hz).min(half);
    let (peak_bin, peak_power) = (lo..=hi)
        .map(|k| (k, aps.power[k]))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();

    let surround_lo = bin_of(f_expected_hz - 10.0 * tol_hz).max(1);
    let surround_hi = bin_of(f_expected_hz + 10.0 * tol_hz).min(half);
    let excluded_lo = peak_bin.saturating_sub(bin_of(tol_hz).max(1));
    let excluded_hi = peak_bin + bin_of(tol_hz).max(1);
    let mut surround: Vec<f64> = (surround_lo..=surround_hi)
        .filter(|k| *k < excluded_lo || *k > excluded_hi)
        .map(|k| aps.power[k])
        .collect();
    if surround.is_empty() {
        return Err(Error::InvalidParam {
            name: "tol_hz",
            reason: "surrounding band is empty; tolerance too wide for this spectrum".into(),
        });
    }
    surround.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = surround[surround.len() / 2].max(f64::MIN_POSITIVE);

    let prominence_db = 10.0 * (peak_power.max(f64::MIN_POSITIVE) / median).log10();
    Ok(ModulationDetection {
        detected: prominence_db >= DETECTION_THRESHOLD_DB,
        prominence_db,
        f_peak_hz: peak_bin as f64 * bw,
    })
}
