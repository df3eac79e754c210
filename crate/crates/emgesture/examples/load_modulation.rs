//! Active load modulation: duty-cycle the charger's carriers at 7 kHz (the
//! power-regulation feedback imprint of an oscillating CPU load) and detect
//! the line in the envelope spectrum.
//!
//! ```bash
//! cargo run --example load_modulation
//! ```

use emgesture::config::PipelineConfig;
use emgesture::synth::{
    detect_modulation, envelope_aps, synth_modulated, synth_recording, ModulationSpec,
};

fn main() -> emgesture::Result<()> {
    let cfg = PipelineConfig::reference();
    let spec = ModulationSpec {
        f_mod_hz: 7_000.0,
        duty: 0.5,
        depth: 0.5,
    };

    let modulated = synth_modulated(&cfg.synth, &spec, 2.0)?;
    let aps = envelope_aps(&modulated, cfg.geometry.subwindow_len_s)?;
    let hit = detect_modulation(&aps, spec.f_mod_hz, 300.0)?;
    println!(
        "modulated run: detected={} peak at {:.0} Hz, prominence {:.1} dB",
        hit.detected, hit.f_peak_hz, hit.prominence_db
    );

    let control = synth_recording(&cfg.synth, &cfg.profiles[0], 2.0)?;
    let aps = envelope_aps(&control, cfg.geometry.subwindow_len_s)?;
    let miss = detect_modulation(&aps, spec.f_mod_hz, 300.0)?;
    println!(
        "unmodulated control: detected={} (prominence {:.1} dB)",
        miss.detected, miss.prominence_db
    );
    Ok(())
}
