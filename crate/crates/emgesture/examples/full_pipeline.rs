//! The whole chain through the CLI command layer (what `emgesture run-all`
//! does): synthesize wavs, extract features, denoise, train, and report --
//! on a shortened geometry so it runs in well under a minute.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use emgesture::cli::commands::{cmd_run_all, RunContext, TrainOptions, REPORT_JSON};
use emgesture::cli::manifest::PipelineManifest;
use emgesture::config::PipelineConfig;
use emgesture::ml::EvalReport;

fn main() -> emgesture::Result<()> {
    let mut cfg = PipelineConfig::reference();
    // 8 s per class -> trim to 6 s -> 12 segments per class
    cfg.geometry.duration_s = 8.0;
    cfg.geometry.trim_start_s = 1.0;
    cfg.geometry.trim_end_s = 7.0;

    let out_dir = std::env::temp_dir().join("emgesture-full-pipeline");
    let _ = std::fs::remove_dir_all(&out_dir);
    let ctx = RunContext::new(cfg, out_dir.clone());

    let manifest_path = cmd_run_all(&ctx, &TrainOptions::default())?;
    let manifest = PipelineManifest::read(&manifest_path)?;
    println!("\nstages completed:");
    for stage in &manifest.stages {
        println!("  {}: {} output file(s)", stage.name, stage.outputs.len());
    }

    let report = EvalReport::read_json(&out_dir.join(REPORT_JSON))?;
    println!(
        "\nheld-out accuracy: {:.3} over {} samples",
        report.accuracy, report.n_test
    );
    println!("outputs in {}", out_dir.display());
    Ok(())
}
