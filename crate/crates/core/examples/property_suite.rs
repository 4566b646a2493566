//! The randomized invariant battery, once with the default tolerances and
//! once with a tolerance too tight to pass.
//!
//! cargo run --example property_suite [SEED] [COUNT]

use rowdefect::experiment::{property_suite, PropertySummary};
use rowdefect::TolerancePolicy;

fn print(s: &PropertySummary) {
    for c in &s.checks {
        println!(
            "  {:<18} evaluated {:>3} skipped {:>3} worst {:>9.2e} <= {:.0e}  failures {}",
            c.name,
            c.evaluated,
            c.skipped,
            c.worst,
            c.threshold,
            c.failures.len()
        );
    }
    println!("  all passed: {}", s.all_passed);
}

fn main() -> rowdefect::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);

    println!("seed {seed}, {count} tuples");
    print(&property_suite(seed, count, TolerancePolicy::default())?);

    println!("identity tolerance 1e-16:");
    let tight = property_suite(seed, count, TolerancePolicy::new(1e-8, 1e-16)?)?;
    print(&tight);
    if let Some(f) = tight.checks.iter().flat_map(|c| &c.failures).next() {
        println!("  reproduce with random_case({seed}, {}) (case seed {})", f.index, f.seed);
    }
    Ok(())
}
