//! The velocity-averaging contrast: H^{1/4} norms of the momentum average
//! stay bounded across an ħ-sweep for the scaling-compliant mixed family and
//! blow up for the pure wave-packet family.
//!
//! ```bash
//! cargo run --release --example averaging_contrast
//! ```

use wigkit::config::ExperimentConfig;
use wigkit::runner;

fn main() -> wigkit::Result<()> {
    let src = runner::load_config_source("mixed_vs_pure_averaging")?;
    let cfg = ExperimentConfig::parse(&src)?;
    let out = std::env::temp_dir().join("wigkit_averaging_contrast");
    println!("running the bundled averaging contrast (a few minutes at most)...\n");
    let summary = runner::run(&cfg, &src, &out, None)?;
    for check in &summary.checks {
        println!(
            "{:28} {}  value {:+.4e}  ({})",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.value,
            check.threshold
        );
    }
    println!("\nper-leg table: {}", out.join("averaging.csv").display());
    let table = std::fs::read_to_string(out.join("averaging.csv"))?;
    println!("{table}");
    Ok(())
}
