//! Maximality verdicts: fastest possible growth of the defect indices,
//! capped by the dimension. Non-maximal tuples come with a witness, a
//! vanishing combination `Σ c T_f ξ`.
//!
//! cargo run --example maximality

use rowdefect::drury_arveson::dshift;
use rowdefect::fock::creation_tuple;
use rowdefect::maximality::is_maximal;
use rowdefect::zoo::{jordan_pair, nilpotent_shift};
use rowdefect::OperatorTuple;

fn report(name: &str, t: &OperatorTuple, horizon: usize) -> rowdefect::Result<()> {
    let v = is_maximal(t, horizon)?;
    println!("{name} ({}):", v.mode);
    println!("  deltas   {:?}", v.deltas);
    println!("  expected {:?}", v.expected);
    if v.is_maximal {
        println!("  maximal");
        if let Some(n) = v.uncapped_departure_index {
            // growth stops only because the space is full
            println!("  (below the uncapped count from n = {n})");
        }
    } else {
        println!("  not maximal, departs at n = {:?}", v.departure_index);
        for term in &v.witness {
            println!("    {} · T_{} ξ_{}", term.coefficient(), term.label, term.basis);
        }
        println!("  witness residual {:.1e}", v.witness_residual.unwrap_or(f64::NAN));
    }
    Ok(())
}

fn main() -> rowdefect::Result<()> {
    report("shift on C^5", &nilpotent_shift(5), 6)?;
    report("creation pair, depth 4", &creation_tuple(2, 4).as_noncommuting(), 6)?;
    report("d-shift d=2 N=4", &dshift(2, 4), 6)?;
    report("d-shift d=3 N=3", &dshift(3, 3), 5)?;
    // J ξ twice: T_1 ξ = T_2 ξ
    report("Jordan pair", &jordan_pair(), 2)?;
    report("Jordan pair as a non-commuting tuple", &jordan_pair().as_noncommuting(), 2)?;
    Ok(())
}
