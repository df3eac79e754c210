//! Skin depth and exponential field decay: the physics behind the
//! synthetic distance model.
//!
//! ```bash
//! cargo run --example skin_depth_decay
//! ```

use emgesture::synth::{distance_attenuation, skin_depth};

fn main() -> emgesture::Result<()> {
    println!("skin depth by medium and frequency:");
    for (name, sigma) in [
        ("copper  (5.8e7 S/m)", 5.8e7),
        ("seawater (5.0 S/m)  ", 5.0),
    ] {
        for f in [1e3, 1e4, 1e5, 1e6] {
            let delta = skin_depth(sigma, f)?;
            println!("  {name} @ {f:>9.0} Hz: delta = {delta:.4e} m");
        }
    }

    let sigma = 5.0;
    let f = 20_000.0;
    let delta = skin_depth(sigma, f)?;
    println!("\ndecay at {f} Hz through a {sigma} S/m medium (delta = {delta:.3} m):");
    for i in 0..4 {
        let d = i as f64 * delta;
        let a = distance_attenuation(1.0, d, delta);
        println!("  d = {d:>6.3} m ({i} delta): amplitude x {a:.4}");
    }
    println!("each skin depth multiplies the amplitude by 1/e = {:.4}", (-1.0f64).exp());
    Ok(())
}
