//! Drury-Arveson space: monomial weights, the truncated d-shift and
//! submodules generated by polynomials.
//!
//! cargo run --example drury_arveson

use rowdefect::drury_arveson::{
    check_weights, da_weight, first_defect_polynomials, submodule_from_generators, submodule_from_inner,
    submodule_maximality_experiment, InnerFunction, Polynomial,
};
use rowdefect::{MultiIndex, C64};

fn main() -> rowdefect::Result<()> {
    check_weights(2)?;
    check_weights(3)?;
    for e in [[1u32, 0], [1, 1], [2, 1], [2, 2]] {
        println!("‖z^{e:?}‖² = {}", da_weight(&MultiIndex::new(e.to_vec())));
    }

    let s = submodule_from_generators(&[Polynomial::variable(2, 1), Polynomial::variable(2, 2)], 2, 8)?;
    println!("submodule (z1, z2) at degree 8: dim {}, certified depth {}", s.dim, s.certified_defect_depth);
    for p in first_defect_polynomials(&s) {
        println!("  first defect space contains {p}");
    }
    let v = submodule_maximality_experiment(&s, 5)?;
    println!("  deltas {:?}, commuting-maximal {:?}", v.deltas, v.expected);
    println!("  maximal: {}, witness residual {:.1e}", v.is_maximal, v.witness_residual.unwrap_or(f64::NAN));

    let thetas = [
        ("z^2", InnerFunction::Monomial { m: 2 }),
        ("b(0.3)b(-0.4)", InnerFunction::blaschke(&[C64::new(0.3, 0.0), C64::new(-0.4, 0.0)])?),
    ];
    for (name, theta) in &thetas {
        let s = submodule_from_inner(theta, 20)?;
        let v = submodule_maximality_experiment(&s, s.certified_defect_depth)?;
        println!("θH² for θ = {name}: deltas {:?}, maximal {}", v.deltas, v.is_maximal);
    }
    Ok(())
}
