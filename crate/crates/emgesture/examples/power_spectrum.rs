//! Frequency-domain basics: the FFT against its direct-DFT oracle,
//! Parseval's identity, and the averaged short-window power spectrum of a
//! two-tone segment.
//!
//! ```bash
//! cargo run --example power_spectrum
//! ```

use std::f64::consts::TAU;

use emgesture::signal_io::Segment;
use emgesture::spectrum::{average_power_spectrum, dft_direct, fft, WindowKind};
use num_complex::Complex64;

fn main() -> emgesture::Result<()> {
    // FFT vs the O(N^2) definition
    let n = 1024;
    let x: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new((t * 0.37).sin(), (t * 0.11).cos() * 0.5)
        })
        .collect();
    let fast = fft(&x, 1.0)?;
    let direct = dft_direct(&x, 1.0)?;
    let max_err = fast
        .bins
        .iter()
        .zip(&direct.bins)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    println!("fft vs direct DFT (N={n}): max bin error {max_err:.3e}");

    let time_energy: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let freq_energy = fast.total_power() / n as f64;
    println!(
        "Parseval: time {time_energy:.6}, freq/N {freq_energy:.6}, rel err {:.3e}",
        ((time_energy - freq_energy) / time_energy).abs()
    );

    // averaged power spectrum of a 0.5 s two-tone segment
    let fs = 102_400.0;
    let samples: Vec<Complex64> = (0..51_200)
        .map(|i| {
            let t = i as f64 / fs;
            Complex64::new(
                (TAU * 8_000.0 * t).cos() + 0.5 * (TAU * 30_000.0 * t).cos(),
                0.0,
            )
        })
        .collect();
    let segment = Segment {
        samples,
        sample_rate_hz: fs,
        index: 0,
        source_label: None,
    };
    let aps = average_power_spectrum(&segment, 0.01, WindowKind::Rectangular)?;
    println!(
        "APS: {} bins of {} Hz, averaged over {} sub-windows",
        aps.len(),
        aps.bin_width_hz,
        aps.n_subwindows
    );
    let mut top: Vec<(usize, f64)> = aps.power.iter().cloned().enumerate().collect();
    top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("strongest bins:");
    for (k, p) in top.iter().take(4) {
        println!("  {:>7.0} Hz: {p:.1}", *k as f64 * aps.bin_width_hz);
    }
    Ok(())
}
