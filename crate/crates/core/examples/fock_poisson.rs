//! Truncated Fock space, the Poisson kernel of a tuple and its identities.
//!
//! cargo run --example fock_poisson

use rowdefect::experiment::poisson_residuals;
use rowdefect::fock::{creation_tuple, poisson_kernel, FockTruncation};
use rowdefect::random::random_low_defect_tuple;

fn main() -> rowdefect::Result<()> {
    let fock = FockTruncation::new(2, 3);
    let words: Vec<String> = fock.words[..7].iter().map(|w| w.to_string()).collect();
    println!("Fock space d=2 depth 3: dim {}, first words {}", fock.dim(), words.join(" "));

    let s = creation_tuple(2, 3);
    println!("creation pair row norm {}", s.row_norm());

    let t = random_low_defect_tuple(2, 5, 2, 11)?;
    for depth in 0..=3 {
        let k = poisson_kernel(&t, depth)?;
        let r = poisson_residuals(&t, depth)?;
        println!(
            "depth {depth}: K is {}x{}, gram {:.1e}, adjoint columns {:.1e}, intertwining {:.1e}",
            k.matrix.nrows(),
            k.matrix.ncols(),
            r.gram,
            r.adjoint,
            r.intertwining
        );
    }
    Ok(())
}
