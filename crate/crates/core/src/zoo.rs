//! Small named tuples used by examples, scenarios and tests.

use crate::drury_arveson::{blaschke_model, dshift, InnerFunction};
use crate::error::{Error, Result};
use crate::fock::creation_tuple;
use crate::numeric::{ComplexMatrix, TolerancePolicy, C64, ONE};
use crate::random::{random_contractive_tuple, random_low_defect_tuple};
use crate::tuple::{validate_tuple, OperatorTuple};

/// Nilpotent shift on `C^m`: `e_i ↦ e_{i+1}`, `e_m ↦ 0`.
pub fn nilpotent_shift(m: usize) -> OperatorTuple {
    let s = ComplexMatrix::from_fn(m, m, |i, j| if i == j + 1 { ONE } else { C64::new(0.0, 0.0) });
    validate_tuple(vec![s], true, TolerancePolicy::default()).expect("shift is a contraction")
}

pub fn zero_tuple(d: usize, m: usize) -> OperatorTuple {
    validate_tuple(vec![ComplexMatrix::zeros(m, m); d], true, TolerancePolicy::default())
        .expect("zero tuple is a contraction")
}

/// Tuple of `1x1` scalars.
pub fn scalar_tuple(values: &[f64], commuting: bool) -> Result<OperatorTuple> {
    let mats = values
        .iter()
        .map(|&v| ComplexMatrix::from_real_rows(&[&[v]]))
        .collect();
    validate_tuple(mats, commuting, TolerancePolicy::default())
}

/// `(J, J) / √2` with `J` the 2x2 nilpotent Jordan cell.
pub fn jordan_pair() -> OperatorTuple {
    let h = 0.5f64.sqrt();
    let j = ComplexMatrix::from_real_rows(&[&[0.0, h], &[0.0, 0.0]]);
    validate_tuple(vec![j.clone(), j], true, TolerancePolicy::default()).expect("contraction")
}

/// Single contraction from a real matrix.
pub fn single(rows: &[&[f64]]) -> Result<OperatorTuple> {
    validate_tuple(vec![ComplexMatrix::from_real_rows(rows)], true, TolerancePolicy::default())
}

/// Builds a tuple from a short description:
///
/// | description | tuple |
/// |---|---|
/// | `shift:M` | nilpotent shift on `C^M` |
/// | `zero:D:M` | `D` zero matrices on `C^M` |
/// | `jordan` | [`jordan_pair`] |
/// | `creation:D:N` | creation tuple on the Fock space truncated at depth `N` |
/// | `dshift:D:N` | `d`-shift truncated at total degree `N` |
/// | `theta-power:M` | compressed shift on the model space of `z^M` |
/// | `random:D:M[:commuting]` | [`random_contractive_tuple`](crate::random::random_contractive_tuple) |
/// | `low-defect:D:M:K` | [`random_low_defect_tuple`](crate::random::random_low_defect_tuple) |
///
/// `seed` is used by the random descriptions only.
pub fn parse_tuple(text: &str, seed: u64) -> Result<OperatorTuple> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let bad = || Error::InvalidArgument(format!("cannot parse tuple description `{text}`"));
    let num = |i: usize| -> Result<usize> {
        let v: usize = parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if v == 0 {
            return Err(Error::InvalidArgument(format!("`{text}`: sizes must be positive")));
        }
        Ok(v)
    };
    let arity = |n: usize| if parts.len() == n { Ok(()) } else { Err(bad()) };
    match parts[0] {
        "shift" => arity(2).and_then(|_| Ok(nilpotent_shift(num(1)?))),
        "zero" => arity(3).and_then(|_| Ok(zero_tuple(num(1)?, num(2)?))),
        "jordan" => arity(1).map(|_| jordan_pair()),
        "creation" => {
            arity(3)?;
            let depth: usize = parts[2].parse().map_err(|_| bad())?;
            Ok(creation_tuple(num(1)?, depth))
        }
        "dshift" => {
            arity(3)?;
            let n: usize = parts[2].parse().map_err(|_| bad())?;
            Ok(dshift(num(1)?, n))
        }
        "theta-power" => {
            arity(2)?;
            let m = num(1)?;
            blaschke_model(&InnerFunction::Monomial { m }, 2 * m)?.tuple()
        }
        "random" => {
            let commuting = match parts.get(3) {
                None => false,
                Some(&"commuting") if parts.len() == 4 => true,
                _ => return Err(bad()),
            };
            random_contractive_tuple(num(1)?, num(2)?, commuting, seed)
        }
        "low-defect" => arity(4).and_then(|_| random_low_defect_tuple(num(1)?, num(2)?, num(3)?, seed)),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_descriptions() {
        assert_eq!(parse_tuple("shift:4", 0).unwrap(), nilpotent_shift(4));
        assert_eq!(parse_tuple("creation:2:3", 0).unwrap().dim(), 15);
        assert_eq!(parse_tuple("dshift:3:2", 0).unwrap().dim(), 10);
        assert_eq!(parse_tuple("theta-power:3", 0).unwrap().dim(), 3);
        assert!(parse_tuple("random:2:3:commuting", 5).unwrap().is_commuting());
        assert_eq!(parse_tuple("random:2:3", 5).unwrap(), parse_tuple("random:2:3", 5).unwrap());
        assert_eq!(parse_tuple("jordan", 0).unwrap(), jordan_pair());
        for bad in ["", "shift", "shift:0", "shift:x", "zero:2", "random:2:3:sideways", "jordan:1", "nope:1"] {
            assert!(parse_tuple(bad, 0).is_err(), "{bad}");
        }
    }
}
