//! IQ wav ingestion: synthesize a short charger recording, store it in the
//! 2-channel wav layout, reload it, then trim and segment.
//!
//! ```bash
//! cargo run --example iq_wav_roundtrip
//! ```

use emgesture::config::PipelineConfig;
use emgesture::signal_io::{load_iq_wav, write_iq_wav, ChannelOrder};
use emgesture::synth::synth_recording;

fn main() -> emgesture::Result<()> {
    let cfg = PipelineConfig::reference();
    let profile = &cfg.profiles[5]; // hand-spreading
    let rec = synth_recording(&cfg.synth, profile, 3.0)?;
    println!(
        "synthesized {:.1} s at {} Hz ({} complex samples)",
        rec.duration_s(),
        rec.sample_rate_hz(),
        rec.samples().len()
    );

    let dir = std::env::temp_dir().join("emgesture-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("hand-spreading_0.wav");
    write_iq_wav(&path, &rec)?;
    println!("wrote {}", path.display());

    let loaded = load_iq_wav(&path, ChannelOrder::IThenQ)?;
    let max_err = rec
        .samples()
        .iter()
        .zip(loaded.samples())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max)
        .max(
            // float32 quantization bound for these amplitudes
            0.0,
        );
    println!("reload max error: {max_err:.3e} (float32 quantization)");

    let trimmed = loaded.trim(0.5, 2.5)?;
    let segments = trimmed.segment(cfg.geometry.segment_len_s)?;
    println!(
        "trimmed to {:.1} s -> {} segments of {} samples",
        trimmed.duration_s(),
        segments.len(),
        segments[0].samples.len()
    );
    Ok(())
}
