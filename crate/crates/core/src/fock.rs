//! Truncated full Fock space, compressed creation operators and the
//! Poisson kernel `K(T): H → F²_d ⊗ D_1`.
//!
//! Basis vectors `e_f` are indexed by words in canonical order, vacuum
//! first. The Poisson kernel is laid out word-major: the block row for word
//! `f` holds the `D_1` coordinates of `D_T T_f* h`.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maximality::{annihilator_on, Mode};
use crate::numeric::{column_space, null_space, rank, ComplexMatrix, Subspace, TolerancePolicy, C64, ONE};
use crate::tuple::{cp_iterate, defect_operator, defect_sequence, defect_space, purity_report, validate_tuple, OperatorTuple};
use crate::words::{apply_word, enumerate_words, max_count, Word};

/// Words of length `<= depth` over `d` letters, with index lookup.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FockTruncation {
    pub d: usize,
    pub depth: usize,
    pub words: Vec<Word>,
    #[serde(skip)]
    index: HashMap<Word, usize>,
}

impl FockTruncation {
    pub fn new(d: usize, depth: usize) -> Self {
        let words = enumerate_words(d, depth);
        let index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Self { d, depth, words, index }
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn index_of(&self, f: &Word) -> Option<usize> {
        self.index.get(f).copied()
    }

    /// Number of words of length `<= n`, i.e. `dim Γ_{n]}`.
    pub fn particle_dim(&self, n: usize) -> usize {
        max_count(self.d, n + 1, 1, false)
    }
}

/// Creation operators `e_f ↦ e_{i·f}` compressed to words of length `<= depth`.
pub fn creation_tuple(d: usize, depth: usize) -> OperatorTuple {
    let fock = FockTruncation::new(d, depth);
    let n = fock.dim();
    let mut mats = Vec::with_capacity(d);
    for i in 1..=d {
        let mut m = ComplexMatrix::zeros(n, n).into_inner();
        for (col, f) in fock.words.iter().enumerate() {
            if f.len() < depth {
                let row = fock.index_of(&f.prepend(i)).expect("word within depth");
                m[(row, col)] = ONE;
            }
        }
        mats.push(ComplexMatrix::new(m).expect("finite"));
    }
    validate_tuple(mats, d == 1, TolerancePolicy::default()).expect("creation tuple is a row contraction")
}

/// `Γ_{n]}`: coordinate span of words of length `<= n`.
pub fn particle_space(fock: &FockTruncation, n: usize) -> Result<Subspace> {
    if n > fock.depth {
        return Err(Error::InvalidArgument(format!(
            "particle space {n} exceeds truncation depth {}",
            fock.depth
        )));
    }
    let idx: Vec<usize> = (0..fock.particle_dim(n)).collect();
    Ok(Subspace::coordinate(fock.dim(), &idx))
}

/// A compression `(P_Q S_i|_Q)` together with the co-invariant subspace.
#[derive(Clone, Debug)]
pub struct CoinvariantCompression {
    pub d: usize,
    pub depth: usize,
    pub q: Subspace,
    pub tuple: OperatorTuple,
    pub coinvariance_residual: f64,
}

/// Compresses the depth-`depth` creation tuple to `Q`, after checking `S_i* Q ⊆ Q`.
pub fn compress_to_coinvariant(d: usize, depth: usize, q: &Subspace) -> Result<CoinvariantCompression> {
    let creation = creation_tuple(d, depth);
    let n = creation.dim();
    if q.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q.ambient_dim(),
        });
    }
    let tol = *creation.tolerance();
    let complement = &ComplexMatrix::identity(n) - &q.projection();
    let mut residual: f64 = 0.0;
    for s in creation.matrices() {
        let leak = &(&complement * &s.adjoint()) * q.basis();
        residual = residual.max(leak.frobenius_norm());
    }
    if residual > tol.identity_atol {
        return Err(Error::NotCoinvariant { residual });
    }
    let basis = q.basis();
    let mats = creation
        .matrices()
        .iter()
        .map(|s| &(&basis.adjoint() * s) * basis)
        .collect();
    let tuple = validate_tuple(mats, d == 1, tol)?;
    Ok(CoinvariantCompression {
        d,
        depth,
        q: q.clone(),
        tuple,
        coinvariance_residual: residual,
    })
}

/// Block index entry of the Poisson kernel: row `row` holds coordinate
/// `defect_index` of the `word` block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockIndex {
    pub word: Word,
    pub defect_index: usize,
    pub row: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonKernelMatrix {
    pub depth: usize,
    pub matrix: ComplexMatrix,
    pub blocks: Vec<BlockIndex>,
    #[serde(skip)]
    pub d1: Option<Subspace>,
    #[serde(skip)]
    pub defect: Option<ComplexMatrix>,
}

impl PoissonKernelMatrix {
    fn d1(&self) -> &Subspace {
        self.d1.as_ref().expect("computed kernel carries its defect space")
    }

    /// Orthonormal basis `ξ_j` of `D_1` labelling the block rows.
    pub fn defect_basis(&self) -> &Subspace {
        self.d1()
    }

    pub fn defect_dim(&self) -> usize {
        self.d1().dim()
    }

    /// `‖K*K - (I - Ψ^{N+1}(I))‖_F`.
    pub fn gram_residual(&self, t: &OperatorTuple) -> f64 {
        let k = &self.matrix;
        let gram = &k.adjoint() * k;
        let target = &ComplexMatrix::identity(t.dim()) - &cp_iterate(t, self.depth + 1);
        (&gram - &target).frobenius_norm()
    }

    /// Largest `‖K T_i* - (S_i* ⊗ I) K‖_F` with the top particle layer of the left side removed.
    pub fn intertwining_residual(&self, t: &OperatorTuple) -> f64 {
        let fock = FockTruncation::new(t.arity(), self.depth);
        let k = self.defect_dim();
        if self.depth == 0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 1..=t.arity() {
            let lhs = &self.matrix * &t.matrix(i).adjoint();
            // (S_i* ⊗ I) K: block row f is block row i·f of K
            let mut diff = 0.0;
            for (fi, f) in fock.words.iter().enumerate().take(fock.particle_dim(self.depth - 1)) {
                let src = fock.index_of(&f.prepend(i)).expect("within depth");
                for j in 0..k {
                    let a = lhs.row(fi * k + j);
                    let b = self.matrix.row(src * k + j);
                    diff += (a - b).norm_squared();
                }
            }
            worst = worst.max(diff.sqrt());
        }
        worst
    }

    /// `K*(e_f ⊗ ξ_j)`, read off the kernel matrix.
    pub fn adjoint_column(&self, fock: &FockTruncation, f: &Word, j: usize) -> Option<DVector<C64>> {
        let idx = fock.index_of(f)?;
        let k = self.defect_dim();
        Some(self.matrix.row(idx * k + j).adjoint())
    }
}

/// Poisson kernel truncated to words of length `<= depth`.
pub fn poisson_kernel(t: &OperatorTuple, depth: usize) -> Result<PoissonKernelMatrix> {
    let d1 = defect_space(t, 1);
    if d1.dim() == 0 {
        return Err(Error::NoDefect);
    }
    let dt = defect_operator(t)?;
    let base = &d1.basis().adjoint() * &dt; // Ξ* D_T
    let mut blocks = vec![base.clone()];
    let mut level = vec![base];
    for _ in 0..depth {
        // block(i·f) = block(f) T_i*
        let mut next = Vec::with_capacity(level.len() * t.arity());
        for i in 1..=t.arity() {
            let adj = t.matrix(i).adjoint();
            for b in &level {
                next.push(b * &adj);
            }
        }
        blocks.extend(next.iter().cloned());
        level = next;
    }
    let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
    let matrix = ComplexMatrix::vstack(&refs)?;
    let k = d1.dim();
    let index = enumerate_words(t.arity(), depth)
        .into_iter()
        .enumerate()
        .flat_map(|(wi, w)| {
            (0..k).map(move |j| BlockIndex {
                word: w.clone(),
                defect_index: j,
                row: wi * k + j,
            })
        })
        .collect();
    Ok(PoissonKernelMatrix {
        depth,
        matrix,
        blocks: index,
        d1: Some(d1),
        defect: Some(dt),
    })
}

/// `T_f D_T ξ`, the image of `e_f ⊗ ξ` under `K(T)*`.
pub fn poisson_adjoint_apply(t: &OperatorTuple, f: &Word, xi: &DVector<C64>) -> Result<DVector<C64>> {
    if xi.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: xi.len(),
        });
    }
    let dt = defect_operator(t)?;
    Ok(apply_word(t, f).as_inner() * (dt.as_inner() * xi))
}

/// `dim[(Γ_{n]} ⊗ D_1) ∩ ker K(T)*]` computed from the depth-`depth` kernel.
pub fn kernel_intersection_dim(t: &OperatorTuple, n: usize, depth: usize) -> Result<usize> {
    if n > depth {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds depth {depth}")));
    }
    let k = poisson_kernel(t, depth)?;
    Ok(kernel_dim_from(&k, t.arity(), n, t.tolerance()))
}

fn kernel_dim_from(k: &PoissonKernelMatrix, d: usize, n: usize, tol: &TolerancePolicy) -> usize {
    let rows = max_count(d, n + 1, 1, false) * k.defect_dim();
    let restricted = ComplexMatrix::new(k.matrix.rows(0, rows).adjoint()).expect("finite");
    null_space(&restricted, tol).dim()
}

/// Outcome of the four-way maximality equivalence for pure tuples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatteryReport {
    pub horizon: usize,
    pub first_defect: usize,
    pub pure_at_tolerance: bool,
    /// Set when a hypothesis fails; the conditions are then not evaluated.
    pub skipped: Option<String>,
    pub deltas: Vec<usize>,
    /// `Δ^{k+1} = (1 + d + ... + d^k) Δ` for all `k <= horizon`.
    pub maximal: bool,
    /// No dependency among `{T_f ξ_i : |f| <= horizon}`.
    pub no_annihilator: bool,
    /// `dim[(Γ_{k]} ⊗ D_1) ∩ ker K*]` for `k = 0..=horizon`.
    pub kernel_dims: Vec<usize>,
    pub kernel_trivial: bool,
    /// `dim ran P_Q|_{Γ_{k]}}` when the tuple came from a co-invariant compression.
    pub coinvariant_ranks: Option<Vec<usize>>,
    pub coinvariant_full: Option<bool>,
    pub agree: bool,
}

/// Evaluates maximality, annihilator absence, Poisson-kernel injectivity
/// on `Γ_{k]} ⊗ D_1`, and (for compressions) the rank of `P_Q` on particle
/// spaces, for all `k <= horizon`. For `Δ_T = k > 1` the counts are the
/// ampliated ones.
pub fn theorem39_battery(
    t: &OperatorTuple,
    horizon: usize,
    purity_steps: usize,
    compression: Option<&CoinvariantCompression>,
) -> Result<BatteryReport> {
    let tol = *t.tolerance();
    let d = t.arity();
    let purity = purity_report(t, purity_steps);
    let d1 = defect_space(t, 1);
    let mut report = BatteryReport {
        horizon,
        first_defect: d1.dim(),
        pure_at_tolerance: purity.pure_at_tolerance,
        skipped: None,
        deltas: Vec::new(),
        maximal: false,
        no_annihilator: false,
        kernel_dims: Vec::new(),
        kernel_trivial: false,
        coinvariant_ranks: None,
        coinvariant_full: None,
        agree: false,
    };
    if d1.dim() == 0 {
        report.skipped = Some("first defect index is 0".into());
        return Ok(report);
    }
    if !purity.pure_at_tolerance {
        let last = purity.norms.last().copied().unwrap_or(1.0);
        report.skipped = Some(format!("not pure at tolerance after {purity_steps} steps (‖Ψ^n(I)‖ = {last:.3e})"));
        return Ok(report);
    }
    let delta = d1.dim();

    let profile = defect_sequence(t, horizon + 1);
    report.maximal = (0..=horizon).all(|k| profile.deltas[k] == max_count(d, k + 1, delta, false));
    report.deltas = profile.deltas;

    report.no_annihilator = annihilator_on(&t.as_noncommuting(), d1.basis(), horizon, Mode::NonCommuting)?
        .degree()
        .is_none();

    let kernel = poisson_kernel(t, horizon)?;
    report.kernel_dims = (0..=horizon).map(|k| kernel_dim_from(&kernel, d, k, &tol)).collect();
    report.kernel_trivial = report.kernel_dims.iter().all(|&v| v == 0);

    let mut verdicts = vec![report.maximal, report.no_annihilator, report.kernel_trivial];
    if let Some(c) = compression {
        if horizon > c.depth {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} exceeds compression depth {}",
                c.depth
            )));
        }
        let fock = FockTruncation::new(c.d, c.depth);
        let ranks: Vec<usize> = (0..=horizon)
            .map(|k| {
                let cols = fock.particle_dim(k);
                let restricted = c.q.basis().adjoint().columns_range(0, cols);
                rank(&restricted, &tol)
            })
            .collect();
        let full = ranks.iter().enumerate().all(|(k, &r)| r == fock.particle_dim(k) * delta);
        report.coinvariant_ranks = Some(ranks);
        report.coinvariant_full = Some(full);
        verdicts.push(full);
    }
    report.agree = verdicts.iter().all(|&v| v == verdicts[0]);
    Ok(report)
}

/// `Q = (invariant subspace generated by the given vectors)^⊥` inside the depth-`depth` Fock truncation.
///
/// The invariant subspace is the span of `S_g v` over all words `g`.
pub fn coinvariant_complement(d: usize, depth: usize, generators: &[DVector<C64>]) -> Result<Subspace> {
    let creation = creation_tuple(d, depth);
    let n = creation.dim();
    let tol = *creation.tolerance();
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for g in generators {
        if g.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.len(),
            });
        }
        for w in enumerate_words(d, depth) {
            let v = apply_word(&creation, &w).as_inner() * g;
            if v.norm() > 0.0 {
                cols.push(v);
            }
        }
    }
    let invariant = column_space(&ComplexMatrix::from_columns(n, &cols), &tol);
    let complement = &ComplexMatrix::identity(n) - &invariant.projection();
    Ok(column_space(&complement, &tol))
}
