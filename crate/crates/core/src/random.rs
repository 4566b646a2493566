//! Seeded random contractive tuples. Every generator is a pure function of
//! its seed (ChaCha8), so reports built from them are reproducible.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ComplexMatrix, TolerancePolicy, C64};
use crate::tuple::{validate_tuple, OperatorTuple};

/// Strict-contraction margin: random rows are scaled to norm `1 - MARGIN`.
pub const MARGIN: f64 = 1e-3;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in `[-1, 1]`.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
}

/// `G G*` for a random square `G`.
pub fn random_psd(m: usize, seed: u64) -> ComplexMatrix {
    let g = random_matrix(&mut rng_from_seed(seed), m, m);
    &g * &g.adjoint()
}

/// Unitary factor of the QR decomposition of a random matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n).into_inner();
    ComplexMatrix::wrap(g.qr().q())
}

fn check_shape(d: usize, m: usize) -> Result<()> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("need d >= 1 and m >= 1, got d={d}, m={m}")));
    }
    Ok(())
}

/// Random strict row contraction. Commuting tuples are quadratic
/// polynomials in one random matrix, so they commute up to round-off.
pub fn random_contractive_tuple(d: usize, m: usize, commuting: bool, seed: u64) -> Result<OperatorTuple> {
    check_shape(d, m)?;
    let mut rng = rng_from_seed(seed);
    let raw: Vec<ComplexMatrix> = if commuting {
        let a = random_matrix(&mut rng, m, m);
        let a = a.scale(C64::new(1.0 / a.op_norm().max(f64::MIN_POSITIVE), 0.0));
        let a2 = &a * &a;
        let id = ComplexMatrix::identity(m);
        (0..d)
            .map(|_| {
                let mut c = || C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
                let (c0, c1, c2) = (c(), c(), c());
                &(&id.scale(c0) + &a.scale(c1)) + &a2.scale(c2)
            })
            .collect()
    } else {
        (0..d).map(|_| random_matrix(&mut rng, m, m)).collect()
    };
    let mut sum = ComplexMatrix::zeros(m, m);
    for g in &raw {
        sum = &sum + &(g * &g.adjoint());
    }
    let norm = sum.op_norm();
    let s = if norm > 0.0 { (1.0 - MARGIN) / norm.sqrt() } else { 1.0 };
    let mats = raw.iter().map(|g| g.scale(C64::new(s, 0.0))).collect();
    validate_tuple(mats, commuting, TolerancePolicy::default())
}

/// Random non-commuting row contraction whose first defect index is exactly
/// `delta`: the row `[T_1 ... T_d]` is `A^{1/2} W` with `W` a random
/// co-isometry and `I - A` a random positive matrix of rank `delta`.
pub fn random_low_defect_tuple(d: usize, m: usize, delta: usize, seed: u64) -> Result<OperatorTuple> {
    check_shape(d, m)?;
    if delta == 0 || delta > m {
        return Err(Error::InvalidArgument(format!("need 1 <= delta <= m, got delta={delta}, m={m}")));
    }
    let mut rng = rng_from_seed(seed);
    let u = random_unitary(&mut rng, m).into_inner();
    let roots: Vec<C64> = (0..m)
        .map(|i| {
            let eig: f64 = if i < m - delta { 1.0 } else { rng.random_range(0.2..0.8) };
            C64::new(eig.sqrt(), 0.0)
        })
        .collect();
    let a_half = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots)) * u.adjoint();
    let w = random_unitary(&mut rng, d * m).into_inner();
    let row = a_half * w.rows(0, m);
    let mats = (0..d)
        .map(|i| ComplexMatrix::wrap(row.columns(i * m, m).into_owned()))
        .collect();
    validate_tuple(mats, d == 1, TolerancePolicy::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomKind {
    Contractive,
    Commuting,
    LowDefect,
}

/// One member of a seeded random zoo, with the depth used for Fock-side checks.
#[derive(Clone, Debug, Serialize)]
pub struct RandomCase {
    pub index: usize,
    pub seed: u64,
    pub kind: RandomKind,
    pub depth: usize,
    pub tuple: OperatorTuple,
}

/// Case `index` of the zoo with base seed `seed`; reproducible on its own.
pub fn random_case(seed: u64, index: usize) -> RandomCase {
    let case_seed = seed.wrapping_add(index as u64);
    let mut rng = rng_from_seed(case_seed);
    let kind = [RandomKind::Contractive, RandomKind::Commuting, RandomKind::LowDefect][index % 3];
    let d = rng.random_range(1..=3);
    let m = rng.random_range(1..=8);
    let depth = rng.random_range(0..=4);
    let inner_seed: u64 = rng.random();
    let tuple = match kind {
        RandomKind::Contractive => random_contractive_tuple(d, m, false, inner_seed),
        RandomKind::Commuting => random_contractive_tuple(d, m, true, inner_seed),
        RandomKind::LowDefect => {
            let delta = rng.random_range(1..=m.min(2));
            random_low_defect_tuple(d, m, delta, inner_seed)
        }
    }
    .expect("random tuples are valid by construction");
    RandomCase {
        index,
        seed: case_seed,
        kind,
        depth,
        tuple,
    }
}

/// `count` random tuples with `d <= 3`, `m <= 8`, depth `<= 4`, cycling
/// through plain, commuting and low-defect constructions.
pub fn random_zoo(seed: u64, count: usize) -> Vec<RandomCase> {
    (0..count).map(|i| random_case(seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuple::defect_space;

    #[test]
    fn deterministic_per_seed() {
        let a = serde_json::to_string(&random_contractive_tuple(2, 4, false, 7).unwrap()).unwrap();
        let b = serde_json::to_string(&random_contractive_tuple(2, 4, false, 7).unwrap()).unwrap();
        let c = serde_json::to_string(&random_contractive_tuple(2, 4, false, 8).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn strictly_contractive() {
        for seed in 0..20 {
            let t = random_contractive_tuple(3, 5, false, seed).unwrap();
            assert!((t.row_norm() - (1.0 - MARGIN).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_mode_commutes() {
        for seed in 0..20 {
            let t = random_contractive_tuple(3, 6, true, seed).unwrap();
            for i in 1..=3 {
                for j in 1..=3 {
                    let c = &(t.matrix(i) * t.matrix(j)) - &(t.matrix(j) * t.matrix(i));
                    assert!(c.frobenius_norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn low_defect_has_requested_index() {
        for seed in 0..20 {
            for delta in 1..=3 {
                let t = random_low_defect_tuple(2, 5, delta, seed).unwrap();
                assert_eq!(defect_space(&t, 1).dim(), delta);
            }
        }
        assert!(random_low_defect_tuple(2, 3, 4, 0).is_err());
        assert!(random_contractive_tuple(0, 3, false, 0).is_err());
    }

    #[test]
    fn zoo_cases_reproduce_individually() {
        let zoo = random_zoo(42, 9);
        let again = random_case(42, 5);
        assert_eq!(
            serde_json::to_string(&zoo[5]).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
        assert!(zoo.iter().all(|c| c.tuple.arity() <= 3 && c.tuple.dim() <= 8 && c.depth <= 4));
    }
}
