//! Runs preset scenarios and writes their JSON and CSV reports.
//!
//! cargo run --example scenarios [OUT_DIR]

use rowdefect::experiment::{run, scenario_manifest, ExperimentConfig};

fn main() -> rowdefect::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("rowdefect-scenarios"));
    for info in scenario_manifest() {
        if matches!(info.name, "shift" | "creation" | "dshift") {
            continue;
        }
        let mut config = ExperimentConfig::new(info.name);
        config.out = Some(out.clone());
        let outcome = run(&config)?;
        let status = if outcome.report.passed { "pass" } else { "FAIL" };
        println!("{:<24} {status}  {}", info.name, info.summary);
    }
    println!("reports in {}", out.display());

    let mut shift = ExperimentConfig::new("shift");
    shift.m = Some(6);
    print!("{}", run(&shift)?.report.to_csv()?);
    Ok(())
}
