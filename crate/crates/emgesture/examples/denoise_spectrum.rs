//! Mode-wise spectral subtraction: strip the ambient noise profile from a
//! gesture spectrum and watch the band contrast improve.
//!
//! ```bash
//! cargo run --example denoise_spectrum
//! ```

use emgesture::config::PipelineConfig;
use emgesture::denoise::{denoise_aps, mean_aps, pair_modes, NoiseProfile};
use emgesture::spectrum::{average_power_spectrum, SpectrumSource};
use emgesture::synth::{synth_noise, synth_recording};
use emgesture::vmd;

fn main() -> emgesture::Result<()> {
    let cfg = PipelineConfig::reference();
    let g = &cfg.geometry;

    // one gesture segment and a noise profile from the charger-off condition
    let rec = synth_recording(&cfg.synth, &cfg.profiles[8], 3.0)?; // fist
    let seg = rec.segment(g.segment_len_s)?.remove(2);
    let gesture_aps = average_power_spectrum(&seg, g.subwindow_len_s, cfg.window)?;

    let noise_rec = synth_noise(&cfg.synth, 3.0)?;
    let noise_spectra: Vec<_> = noise_rec
        .segment(g.segment_len_s)?
        .iter()
        .map(|s| {
            average_power_spectrum(s, g.subwindow_len_s, cfg.window)
                .map(|aps| aps.with_source(SpectrumSource::Noise))
        })
        .collect::<emgesture::Result<_>>()?;
    let profile_aps = mean_aps(&noise_spectra)?;
    let profile = NoiseProfile::from_aps(profile_aps, &cfg.vmd)?;
    println!(
        "noise profile: {} modes at centers {:?}",
        profile.mode_set.k(),
        profile
            .mode_set
            .center_freqs
            .iter()
            .map(|w| (w * 1e3).round() / 1e3)
            .collect::<Vec<_>>()
    );

    let gesture_ms = vmd::decompose(&gesture_aps.power, &cfg.vmd)?;
    let pairing = pair_modes(&gesture_ms, &profile.mode_set, cfg.pairing_threshold)?;
    println!(
        "pairing: {} matched, {} unmatched gesture modes",
        pairing.pairs.len(),
        pairing.unmatched_gesture_modes.len()
    );

    let denoised = denoise_aps(&gesture_aps, &profile, &cfg.vmd, cfg.pairing_threshold)?;

    // contrast = mean in-band power / mean out-of-band power, band 1 at 8 kHz
    let contrast = |power: &[f64]| {
        let band = 60..101usize;
        let inb: f64 = power[band.clone()].iter().sum::<f64>() / band.len() as f64;
        let out: f64 = power
            .iter()
            .enumerate()
            .filter(|(k, _)| !band.contains(k) && *k > 0)
            .map(|(_, v)| v)
            .sum::<f64>()
            / (power.len() - band.len() - 1) as f64;
        inb / out.max(1e-12)
    };
    println!(
        "band-1 contrast: raw {:.2}, denoised {:.2}",
        contrast(&gesture_aps.power),
        contrast(&denoised.power)
    );
    println!(
        "total power: raw {:.3e}, denoised {:.3e}",
        gesture_aps.total_power(),
        denoised.total_power()
    );
    Ok(())
}
