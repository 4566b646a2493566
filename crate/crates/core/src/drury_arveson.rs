//! Truncated Drury-Arveson space, polynomial submodules and one-variable
//! model spaces `H² ⊖ θH²`.
//!
//! Polynomials of total degree `<= N` are stored in the orthonormal basis
//! `z^α / ‖z^α‖`, so coordinates carry the space's own inner product.
//! Multiplication operators never lower degree, hence `P_N M P_N^⊥ = 0` and
//! the compression of `M X M*` to degrees `<= N` only needs the compression
//! of `X`. Submodule defect operators are computed through that identity
//! starting from the compressed projection `P_N P_S P_N`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maximality::{
    build_family, find_annihilator, is_maximal, minimal_polynomial, verdict_from_profile, MaximalityVerdict, Mode,
    UnivariatePolynomial,
};
use crate::numeric::{column_space, gram_schmidt, null_space, psd_sqrt, ComplexMatrix, Subspace, TolerancePolicy, C64, ONE, ZERO};
use crate::tuple::{cp_map, defect_space, validate_tuple, DefectProfile, OperatorTuple};
use crate::words::{enumerate_multiindices, MultiIndex};

/// Largest working depth used for model spaces.
const MAX_MODEL_DEPTH: usize = 1 << 14;

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `‖z^α‖² = α! / |α|!`.
pub fn da_weight(alpha: &MultiIndex) -> f64 {
    // 1 / multinomial(|α|; α), as a product of binomials to stay in range
    let mut remaining = alpha.degree();
    let mut w = 1.0;
    for &e in alpha.exponents() {
        w /= binomial_f64(remaining, e as usize);
        remaining -= e as usize;
    }
    w
}

/// Coefficients `c_α` in `Σ_k ⟨z, λ⟩^k = Σ_α c_α z^α λ̄^α` up to total
/// degree `n`, by repeated multiplication with `Σ_i z_i λ̄_i`.
pub fn kernel_expansion(d: usize, n: usize) -> BTreeMap<MultiIndex, f64> {
    let mut out = BTreeMap::new();
    let mut level = BTreeMap::from([(MultiIndex::zero(d), 1.0)]);
    for k in 0..=n {
        let mut next = BTreeMap::new();
        for (alpha, &c) in &level {
            out.insert(alpha.clone(), c);
            if k < n {
                for i in 1..=d {
                    *next.entry(alpha.bump(i)).or_insert(0.0) += c;
                }
            }
        }
        level = next;
    }
    out
}

/// Largest entry of `G - diag(w_α)` where `G` is the Gram matrix of the
/// monomials of degree `<= n` read off the kernel expansion.
pub fn weight_gate_residual(d: usize, n: usize) -> f64 {
    let coefs = kernel_expansion(d, n);
    let basis = enumerate_multiindices(d, n);
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            // the kernel pairs z^α only with λ̄^α, so off-diagonal entries vanish
            let gram = if i == j { 1.0 / coefs[a] } else { 0.0 };
            let expected = if i == j { da_weight(b) } else { 0.0 };
            worst = worst.max((gram - expected).abs());
        }
    }
    worst
}

/// Refuses to proceed unless the weights match the kernel expansion to degree 4.
pub fn check_weights(d: usize) -> Result<()> {
    let residual = weight_gate_residual(d, 4);
    if residual > 1e-12 {
        return Err(Error::WeightGate { residual });
    }
    Ok(())
}

/// Polynomials of total degree `<= degree` in `d` variables.
#[derive(Clone, Debug, Serialize)]
pub struct DATruncation {
    pub d: usize,
    pub degree: usize,
    pub basis: Vec<MultiIndex>,
    pub weights: Vec<f64>,
    #[serde(skip)]
    index: HashMap<MultiIndex, usize>,
}

impl DATruncation {
    pub fn new(d: usize, degree: usize) -> Self {
        let basis = enumerate_multiindices(d, degree);
        let weights = basis.iter().map(da_weight).collect();
        let index = basis.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Self {
            d,
            degree,
            basis,
            weights,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Number of basis monomials of degree `<= k`; they come first.
    pub fn count_up_to(&self, k: usize) -> usize {
        self.basis.iter().take_while(|a| a.degree() <= k).count()
    }

    /// Orthonormal coordinates `c_α ‖z^α‖` of `p`.
    pub fn coordinates(&self, p: &Polynomial) -> Result<DVector<C64>> {
        p.validate()?;
        if p.d != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: p.d,
            });
        }
        let mut v = DVector::zeros(self.dim());
        for (alpha, c) in p.combined() {
            let i = self.index_of(&alpha).ok_or_else(|| {
                Error::InvalidArgument(format!("term {alpha} exceeds truncation degree {}", self.degree))
            })?;
            v[i] += c * self.weights[i].sqrt();
        }
        Ok(v)
    }

    /// Inverse of [`coordinates`](Self::coordinates), dropping entries below `1e-12`.
    pub fn polynomial(&self, v: &DVector<C64>) -> Polynomial {
        let terms = self
            .basis
            .iter()
            .zip(v.iter())
            .zip(&self.weights)
            .filter(|((_, c), _)| c.norm() > 1e-12)
            .map(|((a, c), w)| {
                let c = c / w.sqrt();
                Term {
                    alpha: a.clone(),
                    coef: [c.re, c.im],
                }
            })
            .collect();
        Polynomial { d: self.d, terms }
    }

    /// `M_{z^β}` compressed to the truncation.
    pub fn monomial_multiplier(&self, beta: &MultiIndex) -> ComplexMatrix {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (j, alpha) in self.basis.iter().enumerate() {
            if let Some(i) = self.index_of(&alpha.add(beta)) {
                m[(i, j)] = C64::new((self.weights[i] / self.weights[j]).sqrt(), 0.0);
            }
        }
        ComplexMatrix::wrap(m)
    }

    /// `M_p` compressed to the truncation.
    pub fn multiplier(&self, p: &Polynomial) -> Result<ComplexMatrix> {
        p.validate()?;
        let n = self.dim();
        let mut acc = ComplexMatrix::zeros(n, n);
        for (beta, c) in p.combined() {
            acc = &acc + &self.monomial_multiplier(&beta).scale(c);
        }
        Ok(acc)
    }
}

/// The `d`-shift `(M_{z_1}, ..., M_{z_d})` compressed to degrees `<= n`.
pub fn dshift(d: usize, n: usize) -> OperatorTuple {
    dshift_on(&DATruncation::new(d, n))
}

fn dshift_on(space: &DATruncation) -> OperatorTuple {
    let mats = (1..=space.d)
        .map(|i| space.monomial_multiplier(&MultiIndex::zero(space.d).bump(i)))
        .collect();
    validate_tuple(mats, true, TolerancePolicy::default()).expect("the d-shift is a commuting row contraction")
}

/// Frobenius norm of `Σ M_i M_i* - (I - |1⟩⟨1|)` on degrees `<= n - 1`.
pub fn interior_identity_residual(d: usize, n: usize) -> f64 {
    let space = DATruncation::new(d, n);
    let t = dshift_on(&space);
    let sum = cp_map(&t, &ComplexMatrix::identity(space.dim())).expect("square");
    let k = space.count_up_to(n.saturating_sub(1));
    let mut target = DMatrix::identity(k, k);
    target[(0, 0)] = ZERO;
    (sum.view((0, 0), (k, k)) - target).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: MultiIndex,
    pub coef: [f64; 2],
}

/// Polynomial in `d` commuting variables as a list of terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub d: usize,
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(d: usize, terms: Vec<(MultiIndex, C64)>) -> Result<Self> {
        let p = Self {
            d,
            terms: terms
                .into_iter()
                .map(|(alpha, c)| Term {
                    alpha,
                    coef: [c.re, c.im],
                })
                .collect(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn monomial(alpha: MultiIndex) -> Self {
        Self {
            d: alpha.arity(),
            terms: vec![Term {
                alpha,
                coef: [1.0, 0.0],
            }],
        }
    }

    /// The coordinate function `z_i` (1-based).
    pub fn variable(d: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::zero(d).bump(i))
    }

    /// `Σ c_k z^k` in one variable, ascending coefficients.
    pub fn univariate(coefs: &[C64]) -> Self {
        Self {
            d: 1,
            terms: coefs
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(k, c)| Term {
                    alpha: MultiIndex::new(vec![k as u32]),
                    coef: [c.re, c.im],
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.alpha.arity() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: t.alpha.arity(),
                });
            }
            if !(t.coef[0].is_finite() && t.coef[1].is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }

    /// Terms with equal exponents merged and zero coefficients dropped.
    pub fn combined(&self) -> BTreeMap<MultiIndex, C64> {
        let mut out: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for t in &self.terms {
            *out.entry(t.alpha.clone()).or_insert(ZERO) += C64::new(t.coef[0], t.coef[1]);
        }
        out.retain(|_, c| c.norm() > 0.0);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.combined().is_empty()
    }

    pub fn degree(&self) -> usize {
        self.combined().keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let c = self.combined();
        let mut degrees = c.keys().map(MultiIndex::degree);
        match degrees.next() {
            None => true,
            Some(k) => degrees.all(|j| j == k),
        }
    }

    /// `z^β p`.
    pub fn shifted(&self, beta: &MultiIndex) -> Self {
        Self {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    alpha: t.alpha.add(beta),
                    coef: t.coef,
                })
                .collect(),
        }
    }

    /// Ascending coefficients of a one-variable polynomial.
    pub fn univariate_coefficients(&self) -> Result<Vec<C64>> {
        if self.d != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.d,
            });
        }
        let mut out = vec![ZERO; self.degree() + 1];
        for (alpha, c) in self.combined() {
            out[alpha.degree()] += c;
        }
        Ok(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.combined();
        if c.is_empty() {
            return write!(f, "0");
        }
        for (k, (alpha, coef)) in c.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if (coef - ONE).norm() > 1e-14 {
                if coef.im == 0.0 {
                    write!(f, "{}·", coef.re)?;
                } else {
                    write!(f, "({}{:+}i)·", coef.re, coef.im)?;
                }
            }
            write!(f, "{alpha}")?;
        }
        Ok(())
    }
}

/// One-variable inner function: `z^m` or a finite Blaschke product
/// `Π (z - a) / (1 - ā z)` given by its zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InnerFunction {
    Monomial { m: usize },
    Blaschke { zeros: Vec<[f64; 2]> },
}

impl InnerFunction {
    pub fn blaschke(zeros: &[C64]) -> Result<Self> {
        let theta = Self::Blaschke {
            zeros: zeros.iter().map(|a| [a.re, a.im]).collect(),
        };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        for a in self.zeros() {
            if !(a.re.is_finite() && a.im.is_finite()) || a.norm() >= 1.0 {
                return Err(Error::ZeroOutsideDisc { re: a.re, im: a.im });
            }
        }
        Ok(())
    }

    pub fn zeros(&self) -> Vec<C64> {
        match self {
            Self::Monomial { m } => vec![ZERO; *m],
            Self::Blaschke { zeros } => zeros.iter().map(|z| C64::new(z[0], z[1])).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Self::Monomial { m } => *m,
            Self::Blaschke { zeros } => zeros.len(),
        }
    }

    /// All zeros at the origin, so `θ` is the polynomial `z^m`.
    pub fn is_polynomial(&self) -> bool {
        self.zeros().iter().all(|a| a.norm() == 0.0)
    }

    /// Monic `Π (z - a_j)`, ascending.
    pub fn numerator(&self) -> Vec<C64> {
        self.zeros().iter().fold(vec![ONE], |acc, a| poly_mul(&acc, &[-a, ONE]))
    }

    /// Taylor coefficients `θ_0, ..., θ_n` at the origin.
    pub fn taylor(&self, n: usize) -> Vec<C64> {
        if let Self::Monomial { m } = self {
            let mut out = vec![ZERO; n + 1];
            if *m <= n {
                out[*m] = ONE;
            }
            return out;
        }
        let den = self
            .zeros()
            .iter()
            .fold(vec![ONE], |acc, a| poly_mul(&acc, &[ONE, -a.conj()]));
        series_divide(&self.numerator(), &den, n)
    }
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// First `n + 1` coefficients of the power series `num / den` (`den[0] != 0`).
pub fn series_divide(num: &[C64], den: &[C64], n: usize) -> Vec<C64> {
    let mut q = vec![ZERO; n + 1];
    for k in 0..=n {
        let mut acc = num.get(k).copied().unwrap_or(ZERO);
        for j in 1..=k.min(den.len().saturating_sub(1)) {
            acc -= den[j] * q[k - j];
        }
        q[k] = acc / den[0];
    }
    q
}

/// Roots of `Σ c_k z^k` (ascending). Exact zero roots are split off first;
/// the rest come from the eigenvalues of the companion matrix.
pub fn polynomial_roots(coefs: &[C64]) -> Vec<C64> {
    let top = match coefs.iter().rposition(|c| c.norm() > 0.0) {
        Some(k) => k,
        None => return Vec::new(),
    };
    let low = coefs.iter().position(|c| c.norm() > 0.0).unwrap_or(0);
    let mut roots = vec![ZERO; low];
    let core = &coefs[low..=top];
    let n = core.len() - 1;
    if n == 0 {
        return roots;
    }
    let lead = core[n];
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -core[i] / lead
        } else if i == j + 1 {
            ONE
        } else {
            ZERO
        }
    });
    let schur = Schur::new(companion);
    let (_, t) = schur.unpack();
    roots.extend((0..n).map(|i| t[(i, i)]));
    roots
}

/// Zeros inside the open disc shared by every polynomial, with multiplicity.
fn common_disc_zeros(polys: &[Vec<C64>]) -> Vec<C64> {
    const MATCH: f64 = 1e-6;
    let mut pools: Vec<Vec<C64>> = polys.iter().map(|p| polynomial_roots(p)).collect();
    let first = pools.remove(0);
    let mut out = Vec::new();
    for a in first.into_iter().filter(|a| a.norm() < 1.0 - 1e-9) {
        let mut hits = Vec::with_capacity(pools.len());
        for pool in &pools {
            match pool.iter().position(|b| (a - b).norm() < MATCH) {
                Some(k) => hits.push(k),
                None => break,
            }
        }
        if hits.len() == pools.len() {
            for (pool, k) in pools.iter_mut().zip(hits) {
                pool.remove(k);
            }
            out.push(a);
        }
    }
    out
}

/// `L L*` with `L` the lower-triangular Toeplitz matrix of `θ`: the
/// compression of the projection onto `θH²` to degrees `<= n`.
fn toeplitz_projection(theta: &InnerFunction, n: usize) -> ComplexMatrix {
    let c = theta.taylor(n);
    let l = DMatrix::from_fn(n + 1, n + 1, |r, col| if r >= col { c[r - col] } else { ZERO });
    ComplexMatrix::wrap(&l * l.adjoint())
}

/// Truncated submodule `S_N = span{z^β p_i : |β| + deg p_i <= N}`.
#[derive(Clone, Debug, Serialize)]
pub struct SubmoduleBasis {
    pub d: usize,
    pub truncation: usize,
    pub generators: Vec<Polynomial>,
    pub generator_degree: usize,
    /// All generators homogeneous: `S_N = P_N S` and every compression is exact.
    pub graded: bool,
    /// Inner factor of the closed submodule for non-graded one-variable data.
    pub inner: Option<InnerFunction>,
    pub dim: usize,
    pub certified_defect_depth: usize,
    #[serde(skip)]
    pub basis: Subspace,
    #[serde(skip)]
    space: DATruncation,
    #[serde(skip)]
    shift: OperatorTuple,
    /// `P_N P_S P_N`
    #[serde(skip)]
    compressed_projection: ComplexMatrix,
    #[serde(skip)]
    tol: TolerancePolicy,
}

impl SubmoduleBasis {
    pub fn space(&self) -> &DATruncation {
        &self.space
    }

    /// The truncated `d`-shift on the ambient truncation.
    pub fn shift(&self) -> &OperatorTuple {
        &self.shift
    }

    pub fn compressed_projection(&self) -> &ComplexMatrix {
        &self.compressed_projection
    }

    pub fn tolerance(&self) -> &TolerancePolicy {
        &self.tol
    }

    /// The same submodule at another truncation degree.
    pub fn retruncated(&self, n: usize) -> Result<Self> {
        match (&self.inner, self.graded) {
            (Some(theta), _) if self.generators.len() == 1 && self.generators[0] == inner_generator(theta) => {
                submodule_from_inner_with_tolerance(theta, n, self.tol)
            }
            _ => submodule_with_tolerance(&self.generators, self.d, n, self.tol),
        }
    }
}

fn inner_generator(theta: &InnerFunction) -> Polynomial {
    match theta {
        InnerFunction::Monomial { m } => Polynomial::monomial(MultiIndex::new(vec![*m as u32])),
        InnerFunction::Blaschke { .. } => Polynomial::univariate(&theta.numerator()),
    }
}

fn spanning_vectors(space: &DATruncation, gens: &[&Polynomial]) -> Result<Vec<DVector<C64>>> {
    let n = space.degree;
    let mut out = Vec::new();
    for k in 0..=n {
        for p in gens {
            let g = p.degree();
            if g > k {
                continue;
            }
            for beta in crate::words::multiindices_of_degree(space.d, k - g) {
                out.push(space.coordinates(&p.shifted(&beta))?);
            }
        }
    }
    Ok(out)
}

fn assemble(
    d: usize,
    n: usize,
    generators: Vec<Polynomial>,
    graded: bool,
    inner: Option<InnerFunction>,
    tol: TolerancePolicy,
) -> Result<SubmoduleBasis> {
    let space = DATruncation::new(d, n);
    let nonzero: Vec<&Polynomial> = generators.iter().filter(|p| !p.is_zero()).collect();
    let g = nonzero.iter().map(|p| p.degree()).max().unwrap_or(0);
    let vectors = spanning_vectors(&space, &nonzero)?;
    let basis = gram_schmidt(&vectors, space.dim(), &tol);
    let compressed_projection = match &inner {
        Some(theta) => toeplitz_projection(theta, n),
        None => basis.projection(),
    };
    let shift = dshift_on(&space).with_tolerance(tol)?;
    Ok(SubmoduleBasis {
        d,
        truncation: n,
        generator_degree: g,
        graded,
        inner,
        dim: basis.dim(),
        certified_defect_depth: n.saturating_sub(1).saturating_sub(g),
        basis,
        space,
        shift,
        compressed_projection,
        tol,
        generators,
    })
}

pub fn submodule_from_generators(polys: &[Polynomial], d: usize, n: usize) -> Result<SubmoduleBasis> {
    submodule_with_tolerance(polys, d, n, TolerancePolicy::default())
}

/// Submodule generated by polynomials. Homogeneous generators work in any
/// arity; otherwise only `d = 1`, where the closed submodule is `θH²` for
/// the Blaschke product of the common zeros in the disc.
pub fn submodule_with_tolerance(
    polys: &[Polynomial],
    d: usize,
    n: usize,
    tol: TolerancePolicy,
) -> Result<SubmoduleBasis> {
    tol.validate()?;
    if d == 0 {
        return Err(Error::InvalidArgument("arity must be at least 1".into()));
    }
    check_weights(d)?;
    for p in polys {
        p.validate()?;
        if p.d != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.d });
        }
    }
    let nonzero: Vec<&Polynomial> = polys.iter().filter(|p| !p.is_zero()).collect();
    if nonzero.is_empty() {
        return Err(Error::InvalidArgument("all generators are zero".into()));
    }
    if let Some(p) = nonzero.iter().find(|p| p.degree() > n) {
        return Err(Error::InvalidArgument(format!(
            "generator of degree {} exceeds truncation degree {n}",
            p.degree()
        )));
    }
    let graded = nonzero.iter().all(|p| p.is_homogeneous());
    let inner = if graded {
        None
    } else if d == 1 {
        let coefs = nonzero
            .iter()
            .map(|p| p.univariate_coefficients())
            .collect::<Result<Vec<_>>>()?;
        Some(InnerFunction::blaschke(&common_disc_zeros(&coefs))?)
    } else {
        return Err(Error::InvalidArgument(
            "non-homogeneous generators are supported only for d = 1".into(),
        ));
    };
    assemble(d, n, polys.to_vec(), graded, inner, tol)
}

/// `θH²` truncated at degree `n`.
pub fn submodule_from_inner(theta: &InnerFunction, n: usize) -> Result<SubmoduleBasis> {
    submodule_from_inner_with_tolerance(theta, n, TolerancePolicy::default())
}

pub fn submodule_from_inner_with_tolerance(
    theta: &InnerFunction,
    n: usize,
    tol: TolerancePolicy,
) -> Result<SubmoduleBasis> {
    tol.validate()?;
    theta.validate()?;
    if theta.degree() > n {
        return Err(Error::InvalidArgument(format!(
            "inner function of degree {} exceeds truncation degree {n}",
            theta.degree()
        )));
    }
    let graded = theta.is_polynomial();
    let inner = (!graded).then(|| theta.clone());
    assemble(1, n, vec![inner_generator(theta)], graded, inner, tol)
}

/// `R_S` compressed to `S_N`; agrees with the true restriction on elements
/// of degree `<= N - 1`.
pub fn restricted_tuple(s: &SubmoduleBasis) -> Result<OperatorTuple> {
    let q = s.basis.basis();
    let qa = q.adjoint();
    let mats = s.shift.matrices().iter().map(|m| &(&qa * m) * q).collect();
    validate_tuple(mats, true, s.tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct SubmoduleDefect {
    pub profile: DefectProfile,
    /// `certified[n - 1]` tells whether `Δ^n` is certified.
    pub certified: Vec<bool>,
    pub certified_defect_depth: usize,
    /// Compression of `D²_{R_S} = P_S - Σ M_i P_S M_i*`.
    #[serde(skip)]
    pub defect_square: ComplexMatrix,
    /// First defect space with a basis taken from the columns of `D²` in order.
    #[serde(skip)]
    pub first_defect_space: Subspace,
}

/// Column-order Gram-Schmidt basis of the range, so that degenerate
/// spectra still give a reproducible basis.
fn canonical_range(x: &ComplexMatrix, tol: &TolerancePolicy) -> Subspace {
    let svd_range = column_space(x, tol);
    let columns: Vec<DVector<C64>> = x.column_iter().map(|c| c.into_owned()).collect();
    let gs = gram_schmidt(&columns, x.nrows(), tol);
    if gs.dim() == svd_range.dim() {
        gs
    } else {
        svd_range
    }
}

/// `P_N (P_S - Σ_{|α|=n} ... ) P_N` for `n = 1..=steps`, via `Ψ` of the truncated shift.
fn defect_matrices(s: &SubmoduleBasis, steps: usize) -> Vec<ComplexMatrix> {
    let p = &s.compressed_projection;
    let mut x = p.clone();
    (0..steps)
        .map(|_| {
            x = cp_map(&s.shift, &x).expect("square");
            p - &x
        })
        .collect()
}

pub fn submodule_defect(s: &SubmoduleBasis, horizon: usize) -> SubmoduleDefect {
    let mats = defect_matrices(s, horizon.max(1));
    let spaces = mats[..horizon].iter().map(|x| column_space(x, &s.tol)).collect();
    SubmoduleDefect {
        profile: DefectProfile::from_spaces(spaces),
        certified: (1..=horizon).map(|n| n <= s.certified_defect_depth).collect(),
        certified_defect_depth: s.certified_defect_depth,
        first_defect_space: canonical_range(&mats[0], &s.tol),
        defect_square: mats.into_iter().next().expect("at least one step"),
    }
}

/// First defect space as polynomials.
pub fn first_defect_polynomials(s: &SubmoduleBasis) -> Vec<Polynomial> {
    let d1 = submodule_defect(s, 1).first_defect_space;
    d1.basis()
        .column_iter()
        .map(|c| s.space.polynomial(&c.into_owned()))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DefectStability {
    pub at_n: usize,
    pub at_n_plus_2: usize,
    pub stable: bool,
}

/// `Δ¹` at truncation `N` and `N + 2`; a change means `Δ¹` is growing with
/// the truncation and is likely infinite.
pub fn first_defect_stability(s: &SubmoduleBasis) -> Result<DefectStability> {
    let at_n = submodule_defect(s, 1).profile.first();
    let at_n_plus_2 = submodule_defect(&s.retruncated(s.truncation + 2)?, 1).profile.first();
    Ok(DefectStability {
        at_n,
        at_n_plus_2,
        stable: at_n == at_n_plus_2,
    })
}

/// Commuting maximality verdict for `R_S` inside the certified window.
pub fn submodule_maximality_experiment(s: &SubmoduleBasis, horizon: usize) -> Result<MaximalityVerdict> {
    if horizon > s.certified_defect_depth {
        return Err(Error::BeyondCertifiedDepth {
            horizon,
            certified: s.certified_defect_depth,
        });
    }
    let stability = first_defect_stability(s)?;
    if !stability.stable {
        return Err(Error::UnstableDefect {
            at_n: stability.at_n,
            at_n_plus_2: stability.at_n_plus_2,
        });
    }
    let defect = submodule_defect(s, horizon);
    let seed = defect.first_defect_space.basis().clone();
    verdict_from_profile(&defect.profile.deltas, s.d, Mode::Commuting, None, &s.tol, |k| {
        build_family(&s.shift, &seed, k, Mode::Commuting)
    })
}

/// Dimension of the kernel of `p ⊗ ξ ↦ p D ξ` over monomials of degree `<= n`
/// and a basis of the first defect space.
pub fn submodule_poisson_test(s: &SubmoduleBasis, n: usize) -> Result<usize> {
    if n > s.certified_defect_depth {
        return Err(Error::BeyondCertifiedDepth {
            horizon: n,
            certified: s.certified_defect_depth,
        });
    }
    let defect = submodule_defect(s, 1);
    let xi = defect.first_defect_space.basis();
    if xi.ncols() == 0 {
        return Err(Error::NoDefect);
    }
    let root = psd_sqrt(&defect.defect_square, &s.tol)?;
    let seed = &root * xi;
    let family = build_family(&s.shift, &seed, n, Mode::Commuting);
    Ok(null_space(&family.columns, &s.tol).dim())
}

/// Residuals of `P_S = Σ M_φ M_φ*` and `D² = Σ |φ⟩⟨φ|` on degrees `<= N - max deg φ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankOneReport {
    pub interior_degree: usize,
    pub projection_residual: f64,
    pub defect_residual: f64,
}

pub fn rank_one_decomposition_check(s: &SubmoduleBasis, phis: &[Polynomial]) -> Result<RankOneReport> {
    let n = s.space.dim();
    let top = phis.iter().map(Polynomial::degree).max().unwrap_or(0);
    let interior_degree = s.truncation.saturating_sub(top);
    let k = s.space.count_up_to(interior_degree);
    let mut sum_mult = ComplexMatrix::zeros(n, n);
    let mut sum_rank_one = ComplexMatrix::zeros(n, n);
    for phi in phis {
        let m = s.space.multiplier(phi)?;
        sum_mult = &sum_mult + &(&m * &m.adjoint());
        let v = ComplexMatrix::column_vector(s.space.coordinates(phi)?);
        sum_rank_one = &sum_rank_one + &(&v * &v.adjoint());
    }
    let d2 = submodule_defect(s, 1).defect_square;
    let block = |a: &ComplexMatrix, b: &ComplexMatrix| (a.view((0, 0), (k, k)) - b.view((0, 0), (k, k))).norm();
    Ok(RankOneReport {
        interior_degree,
        projection_residual: block(&s.compressed_projection, &sum_mult),
        defect_residual: block(&d2, &sum_rank_one),
    })
}

/// `H_θ = H² ⊖ θH²` with the compressed shift `R = P_{H_θ} M_z |_{H_θ}`.
///
/// Elements are power series truncated at `working_depth`, chosen so that
/// the neglected tail is below `tail_bound`.
#[derive(Clone, Debug, Serialize)]
pub struct ModelSpaceTheta {
    pub theta: InnerFunction,
    pub truncation: usize,
    pub working_depth: usize,
    pub dim: usize,
    pub tail_bound: f64,
    pub compression: ComplexMatrix,
    /// Orthonormal basis of `H_θ` in Taylor coordinates.
    #[serde(skip)]
    basis: ComplexMatrix,
    #[serde(skip)]
    taylor: Vec<C64>,
    #[serde(skip)]
    tol: TolerancePolicy,
}

fn group_zeros(zeros: &[C64]) -> Vec<(C64, usize)> {
    let mut groups: Vec<(C64, usize)> = Vec::new();
    for &a in zeros {
        match groups.iter_mut().find(|(b, _)| (a - *b).norm() < 1e-12) {
            Some(g) => g.1 += 1,
            None => groups.push((a, 1)),
        }
    }
    groups
}

/// `H_θ` is spanned by `z^j / (1 - ā z)^{j+1}` for each zero `a` and `j`
/// below its multiplicity.
pub fn blaschke_model(theta: &InnerFunction, n: usize) -> Result<ModelSpaceTheta> {
    theta.validate()?;
    let deg = theta.degree();
    if deg == 0 {
        return Err(Error::InvalidArgument("θ must be non-constant".into()));
    }
    if n < 2 * deg {
        return Err(Error::InvalidArgument(format!(
            "truncation {n} is below twice the degree {deg}"
        )));
    }
    let tol = TolerancePolicy::default();
    let groups = group_zeros(&theta.zeros());
    let rho = groups.iter().map(|(a, _)| a.norm()).fold(0.0, f64::max);
    let max_mult = groups.iter().map(|g| g.1).max().unwrap_or(1);
    let depth = if rho == 0.0 {
        n
    } else {
        let need = (1e-18f64.ln() / rho.ln()).ceil() as usize + 4 * deg;
        n.max(need).min(MAX_MODEL_DEPTH)
    };
    let mut vectors = Vec::with_capacity(deg);
    for (a, mult) in &groups {
        let ab = a.conj();
        for j in 0..*mult {
            let mut v = DVector::zeros(depth + 1);
            let mut power = ONE;
            for k in 0..=depth - j {
                v[j + k] = power * binomial_f64(k + j, j);
                power *= ab;
            }
            vectors.push(v);
        }
    }
    let q = gram_schmidt(&vectors, depth + 1, &tol);
    if q.dim() != deg {
        return Err(Error::InvalidArgument(
            "kernel functions at the zeros are numerically dependent".into(),
        ));
    }
    let qm = q.basis().as_inner().clone();
    // M_z* lowers degree, so it acts on H_θ by shifting coefficients
    let mut lowered = DMatrix::zeros(depth + 1, deg);
    lowered.rows_mut(0, depth).copy_from(&qm.rows(1, depth));
    let r_adj = qm.adjoint() * lowered;
    let tail_bound = if rho == 0.0 {
        0.0
    } else {
        rho.powi(depth as i32 + 1) * ((depth + 1) as f64).powi(max_mult as i32)
    };
    Ok(ModelSpaceTheta {
        theta: theta.clone(),
        truncation: n,
        working_depth: depth,
        dim: deg,
        tail_bound,
        compression: ComplexMatrix::wrap(r_adj.adjoint()),
        basis: ComplexMatrix::wrap(qm),
        taylor: theta.taylor(depth),
        tol,
    })
}

impl ModelSpaceTheta {
    pub fn tuple(&self) -> Result<OperatorTuple> {
        validate_tuple(vec![self.compression.clone()], true, self.tol)
    }

    /// Orthonormal basis of `H_θ` in Taylor coordinates up to `working_depth`.
    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i > self.truncation {
            return Err(Error::InvalidArgument(format!(
                "index {i} exceeds truncation {}",
                self.truncation
            )));
        }
        Ok(())
    }

    /// `P_{H_θ} z^i` by orthogonal projection, first `truncation + 1` coefficients.
    pub fn v_direct(&self, i: usize) -> Result<DVector<C64>> {
        self.check_index(i)?;
        let q = self.basis.as_inner();
        let full = q * q.row(i).adjoint();
        Ok(full.rows(0, self.truncation + 1).into_owned())
    }

    fn v_formula_len(&self, i: usize, len: usize) -> DVector<C64> {
        // z^i - (Σ_{k<=i} conj(θ_k) z^{i-k}) θ
        let th = &self.taylor;
        let mut v = DVector::zeros(len);
        if i < len {
            v[i] = ONE;
        }
        for k in 0..len {
            let mut acc = ZERO;
            for j in 0..=i.min(k) {
                acc += th[i - j].conj() * th[k - j];
            }
            v[k] -= acc;
        }
        v
    }

    /// `P_{H_θ} z^i` from the Taylor coefficients of `θ`, first `truncation + 1` coefficients.
    pub fn v_formula(&self, i: usize) -> Result<DVector<C64>> {
        self.check_index(i)?;
        Ok(self.v_formula_len(i, self.truncation + 1))
    }

    /// Largest gap between the two computations of `v_i` for `i <= i_max`.
    pub fn v_residual(&self, i_max: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..=i_max {
            worst = worst.max((self.v_direct(i)? - self.v_formula(i)?).norm());
        }
        Ok(worst)
    }

    /// Projection distance between `D_n(R)` and `span{v_0, ..., v_{n-1}}`.
    pub fn defect_span_residual(&self, n: usize) -> Result<f64> {
        let t = self.tuple()?;
        let dn = defect_space(&t, n);
        let q = self.basis.as_inner();
        let lifted = ComplexMatrix::wrap(q * dn.basis().as_inner());
        let from_defect = column_space(&lifted, &self.tol);
        let vs: Vec<DVector<C64>> = (0..n)
            .map(|i| self.v_formula_len(i, self.working_depth + 1))
            .collect();
        let from_formula = gram_schmidt(&vs, self.working_depth + 1, &self.tol);
        Ok(from_defect.distance(&from_formula))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub theta: InnerFunction,
    pub polynomial_theta: bool,
    pub dim: usize,
    pub deltas: Vec<usize>,
    pub maximal: bool,
    pub minimal_polynomial: UnivariatePolynomial,
    pub annihilator_degree: Option<usize>,
    /// Monic `Π (z - a_j)`.
    pub numerator: UnivariatePolynomial,
    /// Largest coefficient gap between the minimal polynomial and the numerator, when degrees agree.
    pub alignment_residual: Option<f64>,
}

/// Maximality, minimal polynomial and annihilator of the model operator on `H_θ`.
pub fn quotient_theta_maximality(theta: &InnerFunction, n: usize, horizon: usize) -> Result<QuotientReport> {
    let model = blaschke_model(theta, n)?;
    let t = model.tuple()?;
    let verdict = is_maximal(&t, horizon)?;
    let minimal = minimal_polynomial(&t)?;
    let annihilator_degree = find_annihilator(&t, t.dim(), Mode::Commuting)?.degree();
    let numerator = UnivariatePolynomial::from_complex(&theta.numerator());
    let alignment_residual = (minimal.degree() == numerator.degree()).then(|| {
        (0..=numerator.degree())
            .map(|k| (minimal.coef(k) - numerator.coef(k)).norm())
            .fold(0.0, f64::max)
    });
    Ok(QuotientReport {
        theta: theta.clone(),
        polynomial_theta: theta.is_polynomial(),
        dim: model.dim,
        deltas: verdict.deltas.clone(),
        maximal: verdict.is_maximal,
        minimal_polynomial: minimal,
        annihilator_degree,
        numerator,
        alignment_residual,
    })
}
