//! Lowest-degree polynomials vanishing on the first defect space, and the
//! minimal polynomial of a single contraction.
//!
//! cargo run --example annihilator

use rowdefect::drury_arveson::{blaschke_model, InnerFunction};
use rowdefect::maximality::{find_annihilator, minimal_polynomial, Annihilation, Mode};
use rowdefect::zoo::{jordan_pair, nilpotent_shift};
use rowdefect::C64;

fn show(name: &str, a: &Annihilation) {
    match a {
        Annihilation::Found(r) => {
            println!("{name}: degree {} annihilator, residual {:.1e}", r.degree, r.residual);
            for t in &r.terms {
                println!("    {} · {} ξ_{}", t.coefficient(), t.label, t.basis);
            }
        }
        Annihilation::NoneUpTo { max_degree, .. } => println!("{name}: none up to degree {max_degree}"),
    }
}

fn main() -> rowdefect::Result<()> {
    show("shift on C^4", &find_annihilator(&nilpotent_shift(4), 4, Mode::Commuting)?);
    show("Jordan pair, commuting", &find_annihilator(&jordan_pair(), 2, Mode::Commuting)?);
    show("Jordan pair, words", &find_annihilator(&jordan_pair(), 2, Mode::NonCommuting)?);

    let theta = InnerFunction::blaschke(&[C64::new(0.5, 0.0), C64::new(-0.2, 0.4)])?;
    let model = blaschke_model(&theta, 12)?;
    let p = minimal_polynomial(&model.tuple()?)?;
    println!("model space of a degree-2 Blaschke product: minimal polynomial {p}");
    let zeros: Vec<String> = theta.zeros().iter().map(|z| z.to_string()).collect();
    println!("zeros of θ: {}", zeros.join(", "));
    Ok(())
}
