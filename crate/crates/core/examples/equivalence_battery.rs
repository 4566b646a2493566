//! For pure tuples with a one-dimensional defect space: maximality, absence
//! of an annihilator and injectivity of the Poisson kernel on particle
//! spaces are checked side by side on a zoo.
//!
//! cargo run --example equivalence_battery

use rowdefect::experiment::{battery_zoo, BATTERY_PURITY_STEPS};
use rowdefect::fock::theorem39_battery;

fn main() -> rowdefect::Result<()> {
    println!("{:<38} {:>7} {:>13} {:>14} {:>6}", "tuple", "maximal", "no annihilator", "kernel trivial", "agree");
    for case in battery_zoo()? {
        let r = theorem39_battery(&case.tuple, case.horizon, BATTERY_PURITY_STEPS, case.compression.as_ref())?;
        if let Some(reason) = r.skipped {
            println!("{:<38} skipped: {reason}", case.label);
            continue;
        }
        println!(
            "{:<38} {:>7} {:>13} {:>14} {:>6}",
            case.label, r.maximal, r.no_annihilator, r.kernel_trivial, r.agree
        );
    }
    Ok(())
}
