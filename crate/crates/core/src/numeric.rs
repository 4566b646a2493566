//! Dense complex linear algebra with explicit rank tolerances.
//!
//! Every dimension count in this crate is a numerical rank, so all rank
//! decisions go through a single [`TolerancePolicy`]. Every decomposition
//! reduces to Householder QR and the Hermitian eigensolver from `nalgebra`;
//! singular values come from the Hermitian dilation `[[0, R], [R*, 0]]` of
//! the triangular factor. The complex SVD in `nalgebra` is not used because
//! it loses accuracy on rank-deficient Hermitian input.

use std::fmt;
use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerances shared by every rank and identity decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Singular values at or below `rank_rtol * sigma_max` count as zero.
    pub rank_rtol: f64,
    /// Absolute tolerance for exact-identity checks (Hermitian, commuting,
    /// row-contraction, clamping of negative eigenvalues).
    pub identity_atol: f64,
    /// Absolute singular-value floor. Keeps round-off matrices such as
    /// `I - Psi(I)` of a row coisometry at rank zero.
    #[serde(default = "default_rank_floor")]
    pub rank_floor: f64,
}

fn default_rank_floor() -> f64 {
    1e-13
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_rtol: 1e-8,
            identity_atol: 1e-10,
            rank_floor: default_rank_floor(),
        }
    }
}

impl TolerancePolicy {
    pub fn new(rank_rtol: f64, identity_atol: f64) -> Result<Self> {
        let tol = Self {
            rank_rtol,
            identity_atol,
            ..Self::default()
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.rank_rtol) {
            return Err(Error::InvalidTolerance {
                name: "rank_rtol",
                value: self.rank_rtol,
            });
        }
        if !in_unit(self.identity_atol) {
            return Err(Error::InvalidTolerance {
                name: "identity_atol",
                value: self.identity_atol,
            });
        }
        if !(self.rank_floor >= 0.0 && self.rank_floor < 1.0) {
            return Err(Error::InvalidTolerance {
                name: "rank_floor",
                value: self.rank_floor,
            });
        }
        Ok(())
    }

    /// Singular values strictly above this are counted in the rank.
    pub fn rank_cutoff(&self, sigma_max: f64) -> f64 {
        (self.rank_rtol * sigma_max).max(self.rank_floor)
    }
}

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix(DMatrix<C64>);

/// Repo-wide matrix encoding: row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(json: MatrixJson) -> Result<Self> {
        let entries = json.data.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        ComplexMatrix::from_row_major(json.rows, json.cols, entries)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson { rows, cols, data }
    }
}

impl Deref for ComplexMatrix {
    type Target = DMatrix<C64>;

    fn deref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{:?}", self.0)
    }
}

impl ComplexMatrix {
    /// Wraps the result of an internal computation on finite data.
    pub(crate) fn wrap(inner: DMatrix<C64>) -> Self {
        Self(inner)
    }

    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(Self(inner))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                len: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Builds a matrix from real rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self(DMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn from_columns(rows: usize, columns: &[DVector<C64>]) -> Self {
        let mut m = DMatrix::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            m.set_column(j, col);
        }
        Self(m)
    }

    pub fn column_vector(v: DVector<C64>) -> Self {
        let n = v.len();
        Self(DMatrix::from_column_slice(n, 1, v.as_slice()))
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        singular_values(&self.0).iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    /// Largest entry of `|A - A*|`.
    pub fn hermitian_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hstack(blocks: &[&ComplexMatrix]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.nrows());
        let cols = blocks.iter().map(|b| b.ncols()).sum();
        let mut m = DMatrix::zeros(rows, cols);
        let mut offset = 0;
        for b in blocks {
            if b.nrows() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    found: b.nrows(),
                });
            }
            m.view_mut((0, offset), (rows, b.ncols())).copy_from(&b.0);
            offset += b.ncols();
        }
        Ok(Self(m))
    }

    pub fn vstack(blocks: &[&ComplexMatrix]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.ncols());
        let rows = blocks.iter().map(|b| b.nrows()).sum();
        let mut m = DMatrix::zeros(rows, cols);
        let mut offset = 0;
        for b in blocks {
            if b.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: b.ncols(),
                });
            }
            m.view_mut((offset, 0), (b.nrows(), cols)).copy_from(&b.0);
            offset += b.nrows();
        }
        Ok(Self(m))
    }

    /// Columns `start..start + count` as a new matrix.
    pub fn columns_range(&self, start: usize, count: usize) -> Self {
        Self(self.0.columns(start, count).into_owned())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Leading singular triplets of a matrix, in descending order.
struct Singular {
    values: Vec<f64>,
    /// Left singular vectors, one column per entry of `values`.
    left: DMatrix<C64>,
}

/// Singular values (all `min(m, n)` of them) and left singular vectors of `a`.
///
/// `a` is first reduced to a square triangular factor by QR, then the
/// dilation of that factor is diagonalized; its eigenvalues are `±σ`.
fn singular(a: &DMatrix<C64>) -> Singular {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Singular {
            values: Vec::new(),
            left: DMatrix::zeros(m, 0),
        };
    }
    // a = q b with q having orthonormal columns and b square k x k
    let (q, b) = if m > n {
        let qr = a.clone().qr();
        (Some(qr.q()), qr.r())
    } else if n > m {
        // a* = q r, so a = r* q*; the column space lives in C^m already
        (None, a.adjoint().qr().r().adjoint())
    } else {
        (None, a.clone())
    };
    let mut h = DMatrix::zeros(2 * k, 2 * k);
    h.view_mut((0, k), (k, k)).copy_from(&b);
    h.view_mut((k, 0), (k, k)).copy_from(&b.adjoint());
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..2 * k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let scale = C64::new(std::f64::consts::SQRT_2, 0.0);
    let top = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])] * scale);
    let left = match q {
        Some(q) => q * top,
        None => top,
    };
    Singular { values, left }
}

fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    singular(a).values
}

/// Orthonormalizes the columns of a well-conditioned matrix.
fn orthonormalize(a: DMatrix<C64>) -> DMatrix<C64> {
    if a.ncols() == 0 {
        return a;
    }
    let cols = a.ncols();
    let q = a.qr().q();
    q.columns(0, cols).into_owned()
}

/// Linear subspace of `C^n` stored by an orthonormal basis (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    ambient_dim: usize,
    basis: ComplexMatrix,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: ComplexMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: ComplexMatrix::identity(ambient_dim),
        }
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: ComplexMatrix, tol: &TolerancePolicy) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.adjoint().as_inner() * basis.as_inner();
        let err = (&gram - DMatrix::<C64>::identity(k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > tol.identity_atol.max(1e-9) {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal (error {err:.3e})"
            )));
        }
        Ok(Self {
            ambient_dim: basis.nrows(),
            basis,
        })
    }

    /// Coordinate subspace spanned by the listed standard basis vectors.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut b = DMatrix::zeros(ambient_dim, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            b[(i, j)] = ONE;
        }
        Self {
            ambient_dim,
            basis: ComplexMatrix(b),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn projection(&self) -> ComplexMatrix {
        orthogonal_projection(self)
    }

    /// Frobenius distance between the two orthogonal projections.
    pub fn distance(&self, other: &Subspace) -> f64 {
        (&self.projection() - &other.projection()).frobenius_norm()
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &DVector<C64>) -> f64 {
        let b = self.basis.as_inner();
        (v - b * (b.adjoint() * v)).norm()
    }
}

/// Square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues in `[-identity_atol, 0)` are clamped to zero.
pub fn psd_sqrt(a: &ComplexMatrix, tol: &TolerancePolicy) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let asym = a.hermitian_defect();
    if asym > tol.identity_atol {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let sym = (a.as_inner() + a.as_inner().adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut roots = Vec::with_capacity(n);
    for &lambda in eig.eigenvalues.iter() {
        if lambda < -tol.identity_atol {
            return Err(Error::NotPsd { eigenvalue: lambda });
        }
        roots.push(C64::new(lambda.max(0.0).sqrt(), 0.0));
    }
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&DVector::from_vec(roots));
    let b = v * d * v.adjoint();
    // exact Hermitian symmetry for downstream checks
    let b = (&b + b.adjoint()) * C64::new(0.5, 0.0);
    ComplexMatrix::new(b)
}

/// Numerical rank under the policy cutoff.
pub fn rank(a: &ComplexMatrix, tol: &TolerancePolicy) -> usize {
    column_space(a, tol).dim()
}

/// Orthonormal basis of the column span of `a`.
pub fn column_space(a: &ComplexMatrix, tol: &TolerancePolicy) -> Subspace {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return Subspace::zero(rows);
    }
    let sv = singular(a.as_inner());
    let cutoff = tol.rank_cutoff(sv.values[0]);
    let r = sv.values.iter().take_while(|&&s| s > cutoff).count();
    Subspace {
        ambient_dim: rows,
        basis: ComplexMatrix(orthonormalize(sv.left.columns(0, r).into_owned())),
    }
}

/// Orthonormal basis of `{x : ||A x|| <= cutoff ||x||}`; dimension `cols - rank`.
pub fn null_space(a: &ComplexMatrix, tol: &TolerancePolicy) -> Subspace {
    let cols = a.ncols();
    if cols == 0 {
        return Subspace::zero(0);
    }
    let rows = column_space(&ComplexMatrix(a.as_inner().adjoint()), tol);
    orthogonal_complement_of(&rows)
}

/// Orthonormal basis of the orthogonal complement of `u`.
fn orthogonal_complement_of(u: &Subspace) -> Subspace {
    let n = u.ambient_dim;
    let b = u.basis.as_inner();
    // I - B B* has eigenvalues exactly 0 and 1
    let p = DMatrix::identity(n, n) - b * b.adjoint();
    let eig = SymmetricEigen::new(p);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let basis = DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    Subspace {
        ambient_dim: n,
        basis: ComplexMatrix(orthonormalize(basis)),
    }
}

/// Smallest and largest singular value of `a` (both 0 for empty input).
pub fn singular_extremes(a: &ComplexMatrix) -> (f64, f64) {
    if a.is_empty() {
        return (0.0, 0.0);
    }
    let s = singular_values(a.as_inner());
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = if a.ncols() > a.nrows() {
        0.0
    } else {
        s.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    (min, max)
}

fn check_ambient(u: &Subspace, v: &Subspace) -> Result<()> {
    if u.ambient_dim != v.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: u.ambient_dim,
            found: v.ambient_dim,
        });
    }
    Ok(())
}

/// `U ∨ V`: the span of both subspaces.
pub fn subspace_join(u: &Subspace, v: &Subspace, tol: &TolerancePolicy) -> Result<Subspace> {
    check_ambient(u, v)?;
    let stacked = ComplexMatrix::hstack(&[&u.basis, &v.basis])?;
    Ok(column_space(&stacked, tol))
}

/// `U ∩ V` as the null space of the stacked complementary projections.
pub fn subspace_intersect(u: &Subspace, v: &Subspace, tol: &TolerancePolicy) -> Result<Subspace> {
    check_ambient(u, v)?;
    let n = u.ambient_dim;
    let id = ComplexMatrix::identity(n);
    let cu = &id - &u.projection();
    let cv = &id - &v.projection();
    let stacked = ComplexMatrix::vstack(&[&cu, &cv])?;
    if n == 0 {
        return Ok(Subspace::zero(0));
    }
    Ok(null_space(&stacked, tol))
}

pub fn orthogonal_projection(u: &Subspace) -> ComplexMatrix {
    let b = u.basis.as_inner();
    ComplexMatrix(b * b.adjoint())
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// A vector is dropped when its residual falls to `rank_rtol` times its
/// original norm (or below the absolute floor).
pub fn gram_schmidt(vectors: &[DVector<C64>], ambient_dim: usize, tol: &TolerancePolicy) -> Subspace {
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for v in vectors {
        let original = v.norm();
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        let r = w.norm();
        if r > tol.rank_cutoff(original) && r > 0.0 {
            basis.push(w / C64::new(r, 0.0));
        }
    }
    Subspace {
        ambient_dim,
        basis: ComplexMatrix::from_columns(ambient_dim, &basis),
    }
}
