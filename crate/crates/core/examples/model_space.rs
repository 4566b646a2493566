//! The compressed shift on H_θ = H² ⊖ θH² for a finite Blaschke product.
//!
//! cargo run --example model_space

use rowdefect::drury_arveson::{blaschke_model, quotient_theta_maximality, InnerFunction};
use rowdefect::C64;

fn main() -> rowdefect::Result<()> {
    let zeros = [C64::new(0.2, 0.5), C64::new(-0.6, 0.0), C64::new(0.1, -0.3)];
    let theta = InnerFunction::blaschke(&zeros)?;
    let model = blaschke_model(&theta, 12)?;
    println!("dim H_θ = {}, working depth {}, tail bound {:.1e}", model.dim, model.working_depth, model.tail_bound);
    println!("P z^i by projection vs from Taylor coefficients: {:.1e}", model.v_residual(6)?);
    for n in 1..=3 {
        println!("D_{n} vs span v_0..v_{}: {:.1e}", n - 1, model.defect_span_residual(n)?);
    }
    let q = quotient_theta_maximality(&theta, 12, 4)?;
    println!("deltas {:?}, maximal {}", q.deltas, q.maximal);
    println!("minimal polynomial {}", q.minimal_polynomial);
    println!("Π (z - a_j)        {}", q.numerator);

    for m in 1..=6 {
        let q = quotient_theta_maximality(&InnerFunction::Monomial { m }, 2 * m, m + 1)?;
        println!("θ = z^{m}: dim {}, minimal polynomial {}", q.dim, q.minimal_polynomial);
    }
    Ok(())
}
