//! Maximality verdicts, annihilating polynomials on the first defect
//! space, and minimal polynomials of single contractions.
//!
//! A tuple is maximal when its defect indices grow as fast as the word
//! (or monomial) count allows. With `D_1 = span{ξ_i}`, `Δ^n` is the rank of
//! the family `{T_f ξ_i : |f| <= n-1}`, so every shortfall comes with a
//! linear dependency in that family, which is reported as the witness.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{null_space, singular_extremes, ComplexMatrix, TolerancePolicy, C64};
use crate::tuple::{defect_sequence, defect_space, purity_report, word_family, OperatorTuple};
use crate::words::{apply_monomial, enumerate_multiindices, enumerate_words, max_count, MultiIndex, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Commuting,
    NonCommuting,
}

impl Mode {
    pub fn of(t: &OperatorTuple) -> Self {
        if t.is_commuting() {
            Mode::Commuting
        } else {
            Mode::NonCommuting
        }
    }

    pub fn is_commuting(self) -> bool {
        matches!(self, Mode::Commuting)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Commuting => "commuting",
            Mode::NonCommuting => "non-commuting",
        })
    }
}

/// Index of a family column: a word or a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Word(Word),
    Alpha(MultiIndex),
}

impl Label {
    pub fn degree(&self) -> usize {
        match self {
            Label::Word(w) => w.len(),
            Label::Alpha(a) => a.degree(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Word(w) => w.fmt(f),
            Label::Alpha(a) => a.fmt(f),
        }
    }
}

/// One coefficient of a dependency `Σ c · T_label ξ_basis = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessTerm {
    #[serde(flatten)]
    pub label: Label,
    /// Index of the first-defect-space basis vector.
    pub basis: usize,
    pub coef: [f64; 2],
}

impl WitnessTerm {
    pub fn coefficient(&self) -> C64 {
        C64::new(self.coef[0], self.coef[1])
    }
}

/// The family `{T_label ξ_i}` as matrix columns, label-major.
pub struct Family {
    pub columns: ComplexMatrix,
    pub labels: Vec<(Label, usize)>,
}

/// Word family (non-commuting) or monomial family (commuting) on the columns of `seed`.
pub fn build_family(t: &OperatorTuple, seed: &ComplexMatrix, max_degree: usize, mode: Mode) -> Family {
    let k = seed.ncols();
    match mode {
        Mode::NonCommuting => {
            let blocks = word_family(t, seed, max_degree);
            let words = enumerate_words(t.arity(), max_degree);
            let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
            let columns = ComplexMatrix::hstack(&refs).expect("equal rows");
            let labels = words
                .into_iter()
                .flat_map(|w| (0..k).map(move |i| (Label::Word(w.clone()), i)))
                .collect();
            Family { columns, labels }
        }
        Mode::Commuting => {
            let alphas = enumerate_multiindices(t.arity(), max_degree);
            let blocks: Vec<ComplexMatrix> = alphas.iter().map(|a| &apply_monomial(t, a) * seed).collect();
            let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
            let columns = ComplexMatrix::hstack(&refs).expect("equal rows");
            let labels = alphas
                .into_iter()
                .flat_map(|a| (0..k).map(move |i| (Label::Alpha(a.clone()), i)))
                .collect();
            Family { columns, labels }
        }
    }
}

/// Canonical null vector of the family, normalized to unit norm with the
/// first nonzero coefficient real positive. `None` if the family has full
/// column rank.
///
/// The vector is the kernel projection of the first coordinate direction
/// that is not orthogonal to the kernel, so it does not depend on which
/// orthonormal kernel basis the SVD returned.
pub fn dependency(family: &Family, tol: &TolerancePolicy) -> Option<(Vec<WitnessTerm>, f64)> {
    let kernel = null_space(&family.columns, tol);
    if kernel.dim() == 0 {
        return None;
    }
    let n = kernel.basis().as_inner();
    let pivot = (0..n.nrows()).find(|&j| n.row(j).norm() > 1e-8)?;
    let proj = n * n.row(pivot).adjoint();
    let norm = proj.norm();
    let mut v: DVector<C64> = proj / C64::new(norm, 0.0);
    if let Some(first) = v.iter().find(|c| c.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        v *= phase;
    }
    let residual = (family.columns.as_inner() * &v).norm();
    let terms = family
        .labels
        .iter()
        .zip(v.iter())
        .filter(|(_, c)| c.norm() > 1e-12)
        .map(|((label, basis), c)| WitnessTerm {
            label: label.clone(),
            basis: *basis,
            coef: [c.re, c.im],
        })
        .collect();
    Some((terms, residual))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalityVerdict {
    pub is_maximal: bool,
    pub mode: Mode,
    pub horizon: usize,
    /// First `n` with `Δ^n` below the expected value (finite-dimensional cap applied).
    pub departure_index: Option<usize>,
    /// Same comparison against the uncapped maximal count.
    pub uncapped_departure_index: Option<usize>,
    pub deltas: Vec<usize>,
    pub expected: Vec<usize>,
    pub witness: Vec<WitnessTerm>,
    pub witness_residual: Option<f64>,
}

/// Expected maximal profile `min(max_count, cap)` for `n = 1..=horizon`.
pub fn expected_profile(d: usize, delta: usize, mode: Mode, cap: Option<usize>, horizon: usize) -> Vec<usize> {
    (1..=horizon)
        .map(|n| {
            let full = max_count(d, n, delta, mode.is_commuting());
            cap.map_or(full, |c| full.min(c))
        })
        .collect()
}

/// Verdict from an already computed profile; `family_at` builds the family
/// whose dependency witnesses a shortfall at step `n` (degree `n - 1`).
pub fn verdict_from_profile(
    deltas: &[usize],
    d: usize,
    mode: Mode,
    cap: Option<usize>,
    tol: &TolerancePolicy,
    family_at: impl Fn(usize) -> Family,
) -> Result<MaximalityVerdict> {
    let delta = deltas.first().copied().unwrap_or(0);
    if delta == 0 {
        return Err(Error::NoDefect);
    }
    let horizon = deltas.len();
    let expected = expected_profile(d, delta, mode, cap, horizon);
    let uncapped = expected_profile(d, delta, mode, None, horizon);
    let departure_index = deltas.iter().zip(&expected).position(|(a, e)| a < e).map(|i| i + 1);
    let uncapped_departure_index = deltas.iter().zip(&uncapped).position(|(a, e)| a < e).map(|i| i + 1);
    // an uncapped shortfall still has a dependency worth reporting
    let (witness, witness_residual) = match departure_index.or(uncapped_departure_index) {
        Some(n) => match dependency(&family_at(n - 1), tol) {
            Some((terms, res)) => (terms, Some(res)),
            None => (Vec::new(), None),
        },
        None => (Vec::new(), None),
    };
    Ok(MaximalityVerdict {
        is_maximal: departure_index.is_none(),
        mode,
        horizon,
        departure_index,
        uncapped_departure_index,
        deltas: deltas.to_vec(),
        expected,
        witness,
        witness_residual,
    })
}

/// Maximality over `n = 1..=horizon` with the finite-dimensional cap `dim H`.
pub fn is_maximal(t: &OperatorTuple, horizon: usize) -> Result<MaximalityVerdict> {
    let profile = defect_sequence(t, horizon);
    let mode = Mode::of(t);
    let d1 = profile.spaces.first().cloned().unwrap_or_else(|| defect_space(t, 1));
    verdict_from_profile(&profile.deltas, t.arity(), mode, Some(t.dim()), t.tolerance(), |deg| {
        build_family(t, d1.basis(), deg, mode)
    })
}

/// Rank certificate of the family at one degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankCertificate {
    pub degree: usize,
    pub columns: usize,
    pub rank: usize,
    /// `σ_min / σ_max` of the family.
    pub sigma_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnihilatorResult {
    pub degree: usize,
    pub mode: Mode,
    pub terms: Vec<WitnessTerm>,
    /// `‖Σ c T_f ξ_i‖` for the normalized coefficients.
    pub residual: f64,
    /// Full-rank certificates for every lower degree.
    pub certificates: Vec<RankCertificate>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Annihilation {
    Found(AnnihilatorResult),
    NoneUpTo {
        max_degree: usize,
        certificates: Vec<RankCertificate>,
    },
}

impl Annihilation {
    pub fn degree(&self) -> Option<usize> {
        match self {
            Annihilation::Found(r) => Some(r.degree),
            Annihilation::NoneUpTo { .. } => None,
        }
    }
}

/// Lowest degree `k` at which `{T_f ξ_i : f ∈ F_{k]}}` (or monomials of
/// degree `<= k`) becomes linearly dependent.
pub fn find_annihilator(t: &OperatorTuple, max_degree: usize, mode: Mode) -> Result<Annihilation> {
    let d1 = defect_space(t, 1);
    if d1.dim() == 0 {
        return Err(Error::NoDefect);
    }
    annihilator_on(t, d1.basis(), max_degree, mode)
}

/// [`find_annihilator`] with an explicit basis of the first defect space.
pub fn annihilator_on(t: &OperatorTuple, seed: &ComplexMatrix, max_degree: usize, mode: Mode) -> Result<Annihilation> {
    let tol = t.tolerance();
    let mut certificates = Vec::new();
    for k in 0..=max_degree {
        let family = build_family(t, seed, k, mode);
        if let Some((terms, residual)) = dependency(&family, tol) {
            return Ok(Annihilation::Found(AnnihilatorResult {
                degree: k,
                mode,
                terms,
                residual,
                certificates,
            }));
        }
        let (smin, smax) = singular_extremes(&family.columns);
        certificates.push(RankCertificate {
            degree: k,
            columns: family.labels.len(),
            rank: family.labels.len(),
            sigma_ratio: if smax > 0.0 { smin / smax } else { 0.0 },
        });
    }
    Ok(Annihilation::NoneUpTo {
        max_degree,
        certificates,
    })
}

/// Departure index against annihilator degree for a tuple with `Δ_T = 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepartureReport {
    pub horizon: usize,
    /// First `n <= horizon` with `Δ^n` below the uncapped maximal count.
    pub departure_index: Option<usize>,
    /// Lowest annihilator degree `<= horizon - 1`.
    pub annihilator_degree: Option<usize>,
    /// `departure = degree + 1`, or both absent.
    pub consistent: bool,
}

pub fn departure_consistency(t: &OperatorTuple, horizon: usize) -> Result<DepartureReport> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let profile = defect_sequence(t, horizon);
    if profile.first() != 1 {
        return Err(Error::InvalidArgument(format!(
            "departure analysis needs Δ_T = 1, found {}",
            profile.first()
        )));
    }
    let mode = Mode::of(t);
    let uncapped = expected_profile(t.arity(), 1, mode, None, horizon);
    let departure_index = profile.deltas.iter().zip(&uncapped).position(|(a, e)| a < e).map(|i| i + 1);
    let annihilator_degree = find_annihilator(t, horizon - 1, mode)?.degree();
    let consistent = match (departure_index, annihilator_degree) {
        (None, None) => true,
        (Some(n), Some(k)) => n == k + 1,
        _ => false,
    };
    Ok(DepartureReport {
        horizon,
        departure_index,
        annihilator_degree,
        consistent,
    })
}

/// Monic polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariatePolynomial {
    pub coefficients: Vec<[f64; 2]>,
}

impl UnivariatePolynomial {
    pub fn from_complex(coefs: &[C64]) -> Self {
        Self {
            coefficients: coefs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn coef(&self, k: usize) -> C64 {
        let [re, im] = self.coefficients[k];
        C64::new(re, im)
    }

    pub fn eval_matrix(&self, a: &ComplexMatrix) -> ComplexMatrix {
        // Horner
        let n = a.nrows();
        let mut acc = ComplexMatrix::zeros(n, n);
        for k in (0..self.coefficients.len()).rev() {
            acc = &(&acc * a) + &ComplexMatrix::identity(n).scale(self.coef(k));
        }
        acc
    }
}

impl fmt::Display for UnivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for k in (0..self.coefficients.len()).rev() {
            let c = self.coef(k);
            if c.norm() < 1e-12 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let coef = if c.im.abs() < 1e-12 {
                format!("{}", c.re)
            } else {
                format!("({}{:+}i)", c.re, c.im)
            };
            match k {
                0 => write!(f, "{coef}")?,
                1 => write!(f, "{coef}·z")?,
                _ => write!(f, "{coef}·z^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Minimal polynomial of a single operator via linear dependence of
/// `vec(I), vec(A), vec(A²), ...`.
pub fn minimal_polynomial(t: &OperatorTuple) -> Result<UnivariatePolynomial> {
    if t.arity() != 1 {
        return Err(Error::InvalidArgument(format!(
            "minimal polynomial needs a single operator, got arity {}",
            t.arity()
        )));
    }
    let a = t.matrix(1);
    let m = t.dim();
    let tol = t.tolerance();
    let mut powers: Vec<DVector<C64>> = Vec::new();
    let mut scales: Vec<f64> = Vec::new();
    let mut p = ComplexMatrix::identity(m);
    for k in 0..=m {
        let v = DVector::from_column_slice(p.as_inner().as_slice());
        let s = v.norm();
        let scale = if s > tol.rank_floor { s } else { 1.0 };
        powers.push(v / C64::new(scale, 0.0));
        scales.push(scale);
        let cols = ComplexMatrix::from_columns(m * m, &powers);
        let kernel = null_space(&cols, tol);
        if kernel.dim() > 0 {
            let v: DVector<C64> = kernel.basis().column(0).into_owned();
            let lead = v[k] / C64::new(scales[k], 0.0);
            let coefs: Vec<C64> = (0..=k).map(|j| v[j] / C64::new(scales[j], 0.0) / lead).collect();
            return Ok(UnivariatePolynomial::from_complex(&coefs));
        }
        p = &p * a;
    }
    unreachable!("Cayley-Hamilton bounds the degree by the dimension")
}

/// Minimal-polynomial degree next to the annihilator degree on `D_1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimalPolynomialCheck {
    pub dim: usize,
    pub first_defect: usize,
    pub pure_at_tolerance: bool,
    pub minimal_polynomial: UnivariatePolynomial,
    pub annihilator_degree: Option<usize>,
    /// annihilator degree on `D_1` is at most the minimal-polynomial degree
    pub bounded_by_minimal: bool,
    /// pure with `Δ = 1` forces both degrees to equal `dim H`
    pub pure_cyclic_matches_dim: Option<bool>,
}

pub fn minimal_polynomial_crosscheck(t: &OperatorTuple, purity_steps: usize) -> Result<MinimalPolynomialCheck> {
    let minimal = minimal_polynomial(t)?;
    let d1 = defect_space(t, 1);
    let annihilator_degree = if d1.dim() == 0 {
        None
    } else {
        find_annihilator(t, t.dim(), Mode::Commuting)?.degree()
    };
    let pure = purity_report(t, purity_steps).pure_at_tolerance;
    let bounded = annihilator_degree.is_none_or(|k| k <= minimal.degree());
    let pure_cyclic = (pure && d1.dim() == 1)
        .then(|| minimal.degree() == t.dim() && annihilator_degree == Some(t.dim()));
    Ok(MinimalPolynomialCheck {
        dim: t.dim(),
        first_defect: d1.dim(),
        pure_at_tolerance: pure,
        minimal_polynomial: minimal,
        annihilator_degree,
        bounded_by_minimal: bounded,
        pure_cyclic_matches_dim: pure_cyclic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::creation_tuple;
    use crate::zoo::{jordan_pair, nilpotent_shift, scalar_tuple, single, zero_tuple};

    #[test]
    fn shift_is_maximal() {
        let v = is_maximal(&nilpotent_shift(5), 7).unwrap();
        assert!(v.is_maximal);
        assert_eq!(v.deltas, vec![1, 2, 3, 4, 5, 5, 5]);
        assert_eq!(v.expected, vec![1, 2, 3, 4, 5, 5, 5]);
        assert_eq!(v.uncapped_departure_index, Some(6));
    }

    #[test]
    fn creation_pair_is_maximal() {
        let v = is_maximal(&creation_tuple(2, 3), 5).unwrap();
        assert!(v.is_maximal);
        assert_eq!(v.expected, vec![1, 3, 7, 15, 15]);
    }

    #[test]
    fn jordan_pair_departs_only_uncapped() {
        // D_1 = span{e_2} and T_1 e_2 = T_2 e_2, so Δ^2 = 2: below the
        // commuting count 3 but equal to the cap dim H = 2
        let t = jordan_pair();
        let v = is_maximal(&t, 3).unwrap();
        assert_eq!(v.deltas, vec![1, 2, 2]);
        assert_eq!(v.expected, vec![1, 2, 2]);
        assert!(v.is_maximal);
        assert_eq!(v.uncapped_departure_index, Some(2));
        assert!(v.witness_residual.unwrap() < 1e-12);
        let nc = is_maximal(&t.as_noncommuting(), 3).unwrap();
        assert_eq!(nc.uncapped_departure_index, Some(2));
    }

    #[test]
    fn jordan_pair_witness() {
        let t = jordan_pair().as_noncommuting();
        let fam = build_family(&t, defect_space(&t, 1).basis(), 1, Mode::NonCommuting);
        let (terms, res) = dependency(&fam, t.tolerance()).unwrap();
        assert!(res < 1e-12);
        assert_eq!(terms.len(), 2);
        let c1 = terms[0].coefficient();
        let c2 = terms[1].coefficient();
        assert!((c1 + c2).norm() < 1e-12);
        assert!(c1.im == 0.0 && c1.re > 0.0);
    }

    #[test]
    fn zero_tuple_has_no_defect_verdict_error() {
        let h = 0.5f64.sqrt();
        let t = scalar_tuple(&[h, h], false).unwrap();
        assert!(matches!(is_maximal(&t, 3), Err(Error::NoDefect)));
        assert!(matches!(find_annihilator(&t, 3, Mode::NonCommuting), Err(Error::NoDefect)));
    }

    #[test]
    fn annihilator_examples() {
        let z = zero_tuple(2, 1).as_noncommuting();
        let Annihilation::Found(r) = find_annihilator(&z, 3, Mode::NonCommuting).unwrap() else {
            panic!("zero tuple must be annihilated")
        };
        assert_eq!(r.degree, 1);
        assert_eq!(r.terms.len(), 1);
        assert_eq!(r.terms[0].label, Label::Word(Word::new(vec![1])));

        let s = nilpotent_shift(3);
        let Annihilation::Found(r) = find_annihilator(&s, 5, Mode::Commuting).unwrap() else {
            panic!()
        };
        assert_eq!(r.degree, 3);
        assert!(r.residual < 1e-10);
        assert_eq!(r.certificates.len(), 3);
        assert_eq!(r.terms.len(), 1);
        assert_eq!(r.terms[0].label, Label::Alpha(MultiIndex::new(vec![3])));

        for depth in 1..=3 {
            let c = creation_tuple(2, depth);
            assert_eq!(find_annihilator(&c, depth + 2, Mode::NonCommuting).unwrap().degree(), Some(depth + 1));
        }
    }

    #[test]
    fn annihilator_none_when_horizon_short() {
        let s = nilpotent_shift(5);
        match find_annihilator(&s, 3, Mode::Commuting).unwrap() {
            Annihilation::NoneUpTo { max_degree, certificates } => {
                assert_eq!(max_degree, 3);
                assert_eq!(certificates.len(), 4);
                assert!(certificates.iter().all(|c| c.sigma_ratio > 1e-8));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn departure_examples() {
        let r = departure_consistency(&nilpotent_shift(3), 5).unwrap();
        assert_eq!((r.departure_index, r.annihilator_degree), (Some(4), Some(3)));
        assert!(r.consistent);
        let r = departure_consistency(&creation_tuple(2, 2), 5).unwrap();
        assert_eq!((r.departure_index, r.annihilator_degree), (Some(4), Some(3)));
        assert!(r.consistent);
        let r = departure_consistency(&nilpotent_shift(6), 4).unwrap();
        assert_eq!((r.departure_index, r.annihilator_degree), (None, None));
        assert!(r.consistent);
        assert!(departure_consistency(&zero_tuple(1, 2), 3).is_err());
    }

    #[test]
    fn minimal_polynomial_examples() {
        for m in 1..=6 {
            let p = minimal_polynomial(&nilpotent_shift(m)).unwrap();
            assert_eq!(p.degree(), m);
            for k in 0..m {
                assert!(p.coef(k).norm() < 1e-10);
            }
        }
        let id = single(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]).unwrap();
        let p = minimal_polynomial(&id).unwrap();
        assert_eq!(p.degree(), 1);
        assert!((p.coef(0) + 1.0).norm() < 1e-12);
        let dg = single(&[&[0.0, 0.0], &[0.0, 0.5]]).unwrap();
        let p = minimal_polynomial(&dg).unwrap();
        assert_eq!(p.degree(), 2);
        // z(z - 1/2) = z^2 - z/2
        assert!(p.coef(0).norm() < 1e-12);
        assert!((p.coef(1) + 0.5).norm() < 1e-12);
        assert!(p.eval_matrix(dg.matrix(1)).max_abs() < 1e-12);
        assert!(minimal_polynomial(&zero_tuple(2, 2)).is_err());
    }

    #[test]
    fn crosscheck_shift() {
        let c = minimal_polynomial_crosscheck(&nilpotent_shift(4), 10).unwrap();
        assert!(c.bounded_by_minimal);
        assert_eq!(c.pure_cyclic_matches_dim, Some(true));
    }

    #[test]
    fn verdict_json_shape() {
        let v = is_maximal(&jordan_pair().as_noncommuting(), 2).unwrap();
        let s = serde_json::to_value(&v).unwrap();
        assert!(s.get("is_maximal").is_some());
        assert_eq!(s["mode"], "non-commuting");
        assert!(s["witness"].is_array());
    }
}
