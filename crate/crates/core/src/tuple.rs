//! Contractive tuples, the completely positive map `Ψ_T(X) = Σ T_i X T_i*`,
//! and defect operators, spaces and sequences.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    column_space, psd_sqrt, subspace_join, ComplexMatrix, Subspace, TolerancePolicy, C64,
};
use crate::words::{apply_word, words_of_length};

/// A row contraction `T = (T_1, ..., T_d)` on `C^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TupleJson", into = "TupleJson")]
pub struct OperatorTuple {
    matrices: Vec<ComplexMatrix>,
    commuting: bool,
    row_norm: f64,
    tol: TolerancePolicy,
}

/// `{ "dim": m, "arity": d, "commuting": bool, "matrices": [...] }`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TupleJson {
    pub dim: usize,
    pub arity: usize,
    pub commuting: bool,
    pub matrices: Vec<ComplexMatrix>,
}

impl TryFrom<TupleJson> for OperatorTuple {
    type Error = Error;

    fn try_from(json: TupleJson) -> Result<Self> {
        if json.matrices.len() != json.arity {
            return Err(Error::DimensionMismatch {
                expected: json.arity,
                found: json.matrices.len(),
            });
        }
        if let Some(m) = json.matrices.iter().find(|m| m.nrows() != json.dim) {
            return Err(Error::DimensionMismatch {
                expected: json.dim,
                found: m.nrows(),
            });
        }
        validate_tuple(json.matrices, json.commuting, TolerancePolicy::default())
    }
}

impl From<OperatorTuple> for TupleJson {
    fn from(t: OperatorTuple) -> Self {
        TupleJson {
            dim: t.dim(),
            arity: t.arity(),
            commuting: t.commuting,
            matrices: t.matrices,
        }
    }
}

/// Checks the row-contraction and (optional) commutation conditions.
pub fn validate_tuple(
    matrices: Vec<ComplexMatrix>,
    commuting: bool,
    tol: TolerancePolicy,
) -> Result<OperatorTuple> {
    tol.validate()?;
    let first = matrices
        .first()
        .ok_or_else(|| Error::InvalidArgument("a tuple needs at least one matrix".into()))?;
    let m = first.nrows();
    for a in &matrices {
        if a.nrows() != m || a.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: if a.nrows() != m { a.nrows() } else { a.ncols() },
            });
        }
    }
    let mut sum = ComplexMatrix::zeros(m, m);
    for a in &matrices {
        sum = &sum + &(a * &a.adjoint());
    }
    let row_norm = sum.op_norm();
    if row_norm > 1.0 + tol.identity_atol {
        return Err(Error::NotRowContraction { row_norm });
    }
    if commuting {
        for i in 0..matrices.len() {
            for j in i + 1..matrices.len() {
                let c = &(&matrices[i] * &matrices[j]) - &(&matrices[j] * &matrices[i]);
                let norm = c.frobenius_norm();
                if norm > tol.identity_atol {
                    return Err(Error::CommutatorViolation {
                        i: i + 1,
                        j: j + 1,
                        norm,
                    });
                }
            }
        }
    }
    Ok(OperatorTuple {
        matrices,
        commuting,
        row_norm,
        tol,
    })
}

impl OperatorTuple {
    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn arity(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_commuting(&self) -> bool {
        self.commuting
    }

    /// `‖Σ T_i T_i*‖` recorded at validation.
    pub fn row_norm(&self) -> f64 {
        self.row_norm
    }

    pub fn tolerance(&self) -> &TolerancePolicy {
        &self.tol
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    /// `T_i` for a 1-based letter `i`.
    pub fn matrix(&self, letter: usize) -> &ComplexMatrix {
        &self.matrices[letter - 1]
    }

    /// Same matrices under a different tolerance policy.
    pub fn with_tolerance(&self, tol: TolerancePolicy) -> Result<Self> {
        validate_tuple(self.matrices.clone(), self.commuting, tol)
    }

    /// Same matrices with the commuting flag dropped.
    pub fn as_noncommuting(&self) -> Self {
        Self {
            commuting: false,
            ..self.clone()
        }
    }
}

/// `Ψ_T(X) = Σ_i T_i X T_i*`.
pub fn cp_map(t: &OperatorTuple, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = t.dim();
    if x.nrows() != m || x.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x.nrows(),
        });
    }
    let mut acc = ComplexMatrix::zeros(m, m);
    for a in &t.matrices {
        acc = &acc + &(&(a * x) * &a.adjoint());
    }
    Ok(acc)
}

fn psi(t: &OperatorTuple, x: &ComplexMatrix) -> ComplexMatrix {
    cp_map(t, x).expect("square input of tuple dimension")
}

/// `Ψ_T^n(I)`.
pub fn cp_iterate(t: &OperatorTuple, n: usize) -> ComplexMatrix {
    let mut x = ComplexMatrix::identity(t.dim());
    for _ in 0..n {
        x = psi(t, &x);
    }
    x
}

/// `D_T² = I - Ψ_T(I)`.
pub fn defect_square(t: &OperatorTuple) -> ComplexMatrix {
    &ComplexMatrix::identity(t.dim()) - &psi(t, &ComplexMatrix::identity(t.dim()))
}

/// `D_T = (I - Ψ_T(I))^{1/2}`.
pub fn defect_operator(t: &OperatorTuple) -> Result<ComplexMatrix> {
    psd_sqrt(&defect_square(t), &t.tol)
}

/// `n`-th defect space: the range of `I - Ψ_T^n(I)`.
pub fn defect_space(t: &OperatorTuple, n: usize) -> Subspace {
    let x = &ComplexMatrix::identity(t.dim()) - &cp_iterate(t, n);
    column_space(&x, &t.tol)
}

/// Columns `T_f ξ` for all words `|f| <= max_len` (canonical order) and each column `ξ` of `seed`.
pub(crate) fn word_family(t: &OperatorTuple, seed: &ComplexMatrix, max_len: usize) -> Vec<ComplexMatrix> {
    let mut levels = vec![seed.clone()];
    let mut current = vec![seed.clone()];
    for _ in 0..max_len {
        // level k+1 lists i·f with i outer, matching lexicographic order
        let mut next = Vec::with_capacity(current.len() * t.arity());
        for i in 1..=t.arity() {
            for block in &current {
                next.push(t.matrix(i) * block);
            }
        }
        levels.extend(next.iter().cloned());
        current = next;
    }
    levels
}

/// `D_1 ∨ T(D_1^d) ∨ ... ∨ T^{n-1}(D_1^{d^{n-1}})`.
pub fn defect_space_by_join(t: &OperatorTuple, n: usize) -> Subspace {
    assert!(n >= 1, "defect spaces start at n = 1");
    let d1 = defect_space(t, 1);
    if d1.dim() == 0 {
        return d1;
    }
    let family = word_family(t, d1.basis(), n - 1);
    let refs: Vec<&ComplexMatrix> = family.iter().collect();
    let stacked = ComplexMatrix::hstack(&refs).expect("equal row counts");
    column_space(&stacked, &t.tol)
}

/// `D_n ∨ T^n(D_{m-n}^{d^n})`, which equals `D_m` for `1 <= n < m`.
pub fn defect_space_split(t: &OperatorTuple, n: usize, m: usize) -> Result<Subspace> {
    if !(1 <= n && n < m) {
        return Err(Error::InvalidArgument(format!("need 1 <= n < m, got n={n}, m={m}")));
    }
    let dn = defect_space(t, n);
    let inner = defect_space(t, m - n);
    let mut blocks = Vec::new();
    for f in words_of_length(t.arity(), n) {
        blocks.push(&apply_word(t, &f) * inner.basis());
    }
    let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
    let image = column_space(&ComplexMatrix::hstack(&refs)?, &t.tol);
    subspace_join(&dn, &image, &t.tol)
}

/// Largest residual of `T_i ξ` against `D_{n+1}`, over an orthonormal basis `ξ` of `D_n`.
pub fn containment_residual(t: &OperatorTuple, n: usize) -> f64 {
    let dn = defect_space(t, n);
    let next = defect_space(t, n + 1);
    let mut worst: f64 = 0.0;
    for j in 0..dn.dim() {
        let xi: DVector<C64> = dn.basis().column(j).into_owned();
        for a in t.matrices() {
            worst = worst.max(next.residual(&(a.as_inner() * &xi)));
        }
    }
    worst
}

/// Frobenius norm of `(I - Ψ^n(I)) - Σ_{i<n} Ψ^i(I - Ψ(I))`.
pub fn sum_formula_residual(t: &OperatorTuple, n: usize) -> f64 {
    assert!(n >= 1, "the telescoping identity starts at n = 1");
    let lhs = &ComplexMatrix::identity(t.dim()) - &cp_iterate(t, n);
    let mut term = defect_square(t);
    let mut rhs = term.clone();
    for _ in 1..n {
        term = psi(t, &term);
        rhs = &rhs + &term;
    }
    (&lhs - &rhs).frobenius_norm()
}

/// The computed sequence `Δ^1, ..., Δ^{n_max}` with its spaces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectProfile {
    pub deltas: Vec<usize>,
    #[serde(skip)]
    pub spaces: Vec<Subspace>,
    /// First `n` with `Δ^n = Δ^{n+1}` (1-based), if seen within the horizon.
    pub stabilized_at: Option<usize>,
}

impl DefectProfile {
    pub fn from_spaces(spaces: Vec<Subspace>) -> Self {
        let deltas: Vec<usize> = spaces.iter().map(Subspace::dim).collect();
        let stabilized_at = deltas.windows(2).position(|w| w[0] == w[1]).map(|i| i + 1);
        Self {
            deltas,
            spaces,
            stabilized_at,
        }
    }

    /// `Δ^n` (1-based).
    pub fn delta(&self, n: usize) -> usize {
        self.deltas[n - 1]
    }

    pub fn first(&self) -> usize {
        self.deltas.first().copied().unwrap_or(0)
    }

    pub fn horizon(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_monotone(&self) -> bool {
        self.deltas.windows(2).all(|w| w[0] <= w[1])
    }

    /// Once two consecutive values agree, all later values agree.
    pub fn stabilization_is_permanent(&self) -> bool {
        match self.stabilized_at {
            None => true,
            Some(n) => self.deltas[n - 1..].iter().all(|&v| v == self.deltas[n - 1]),
        }
    }
}

/// `Δ_T^n` for `n = 1..=n_max`, from ranks of `I - Ψ^n(I)`.
pub fn defect_sequence(t: &OperatorTuple, n_max: usize) -> DefectProfile {
    let id = ComplexMatrix::identity(t.dim());
    let mut power = id.clone();
    let mut spaces = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        power = psi(t, &power);
        spaces.push(column_space(&(&id - &power), &t.tol));
    }
    DefectProfile::from_spaces(spaces)
}

/// Norm trace `‖Ψ_T^n(I)‖` used as finite-horizon evidence of purity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PurityReport {
    pub norms: Vec<f64>,
    pub pure_at_tolerance: bool,
}

pub fn purity_report(t: &OperatorTuple, n_max: usize) -> PurityReport {
    let mut x = ComplexMatrix::identity(t.dim());
    let mut norms = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        x = psi(t, &x);
        norms.push(x.op_norm());
    }
    let pure_at_tolerance = norms.last().is_some_and(|&v| v < t.tol.identity_atol);
    PurityReport {
        norms,
        pure_at_tolerance,
    }
}
