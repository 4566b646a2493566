//! Defect indices of a few tuples, and the identities that tie the defect
//! spaces together.
//!
//! cargo run --example defect_sequence

use rowdefect::fock::creation_tuple;
use rowdefect::random::random_contractive_tuple;
use rowdefect::tuple::{containment_residual, defect_space, defect_space_by_join, purity_report, sum_formula_residual};
use rowdefect::zoo::nilpotent_shift;
use rowdefect::defect_sequence;

fn main() -> rowdefect::Result<()> {
    for m in [3, 5, 8] {
        let t = nilpotent_shift(m);
        println!("shift on C^{m}: {:?}", defect_sequence(&t, m + 2).deltas);
    }

    let t = creation_tuple(2, 3).as_noncommuting();
    let p = defect_sequence(&t, 5);
    println!("creation pair, depth 3: {:?} (stabilized at {:?})", p.deltas, p.stabilized_at);

    // a strict contraction has D_1 = whole space
    let r = random_contractive_tuple(2, 4, false, 7)?;
    println!("random strict contraction on C^4: {:?}", defect_sequence(&r, 3).deltas);

    let purity = purity_report(&t, 6);
    println!("creation pair ‖Ψ^n(I)‖: {:?}", purity.norms);

    for n in 1..=3 {
        let joined = defect_space_by_join(&t, n).distance(&defect_space(&t, n));
        println!(
            "n={n}: sum formula {:.1e}, join distance {:.1e}, D_n ⊂ D_(n+1) residual {:.1e}",
            sum_formula_residual(&t, n),
            joined,
            containment_residual(&t, n)
        );
    }
    Ok(())
}
