//! Seeded random contractive tuples.
//!
//! cargo run --example random_tuples

use rowdefect::maximality::Mode;
use rowdefect::random::{random_contractive_tuple, random_low_defect_tuple, random_zoo};
use rowdefect::defect_sequence;

fn main() -> rowdefect::Result<()> {
    let a = random_contractive_tuple(2, 3, true, 5)?;
    let b = random_contractive_tuple(2, 3, true, 5)?;
    println!("same seed, same tuple: {}", serde_json::to_string(&a)? == serde_json::to_string(&b)?);
    println!("row norm {:.6}", a.row_norm());
    let c = &(a.matrix(1) * a.matrix(2)) - &(a.matrix(2) * a.matrix(1));
    println!("commutator norm {:.1e}", c.frobenius_norm());

    let low = random_low_defect_tuple(3, 6, 1, 5)?;
    println!("low-defect tuple: {:?}", defect_sequence(&low, 4).deltas);

    for case in random_zoo(2024, 6) {
        println!(
            "case {} (seed {}, {:?}): d={} m={} {} {:?}",
            case.index,
            case.seed,
            case.kind,
            case.tuple.arity(),
            case.tuple.dim(),
            Mode::of(&case.tuple),
            defect_sequence(&case.tuple, 4).deltas
        );
    }
    println!("{}", serde_json::to_string_pretty(&random_contractive_tuple(1, 2, false, 1)?)?);
    Ok(())
}
