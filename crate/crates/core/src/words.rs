//! Free words over `{1, ..., d}` and commuting multi-indices.
//!
//! Both enumerations use one canonical order (length or degree first, then
//! lexicographic) that every basis in the crate is indexed by.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numeric::ComplexMatrix;
use crate::tuple::OperatorTuple;

/// A word `f = f(1) f(2) ... f(k)` with letters in `1..=d`; may be empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(letters: Vec<usize>) -> Self {
        Self(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `i · f`, the word a creation operator produces from `f`.
    pub fn prepend(&self, letter: usize) -> Self {
        let mut letters = Vec::with_capacity(self.0.len() + 1);
        letters.push(letter);
        letters.extend_from_slice(&self.0);
        Self(letters)
    }

    pub fn concat(&self, other: &Word) -> Self {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Self(letters)
    }

    /// Drops the first letter if it equals `letter` (adjoint creation action).
    pub fn strip_prefix(&self, letter: usize) -> Option<Self> {
        match self.0.split_first() {
            Some((&first, rest)) if first == letter => Some(Self(rest.to_vec())),
            _ => None,
        }
    }

    /// Letter multiset as an exponent vector.
    pub fn abelianize(&self, d: usize) -> MultiIndex {
        let mut exps = vec![0u32; d];
        for &l in &self.0 {
            exps[l - 1] += 1;
        }
        MultiIndex(exps)
    }

    pub fn max_letter(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for l in &self.0 {
            write!(f, "z{l}")?;
        }
        Ok(())
    }
}

/// Exponent vector `α = (α_1, ..., α_d)` of the monomial `z^α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `α + e_i` for a 1-based coordinate `i`.
    pub fn bump(&self, i: usize) -> Self {
        let mut e = self.0.clone();
        e[i - 1] += 1;
        Self(e)
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `α - β` when `β ≤ α` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<Self> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    /// The sorted word `1^{α_1} 2^{α_2} ...`.
    pub fn to_word(&self) -> Word {
        let mut letters = Vec::with_capacity(self.degree());
        for (i, &e) in self.0.iter().enumerate() {
            letters.extend(std::iter::repeat_n(i + 1, e as usize));
        }
        Word(letters)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        for (i, &e) in self.0.iter().enumerate() {
            match e {
                0 => {}
                1 => write!(f, "z{}", i + 1)?,
                _ => write!(f, "z{}^{}", i + 1, e)?,
            }
        }
        Ok(())
    }
}

/// Words of exactly length `k`, lexicographic.
pub fn words_of_length(d: usize, k: usize) -> Vec<Word> {
    let mut level = vec![Word::empty()];
    for _ in 0..k {
        level = (1..=d)
            .flat_map(|i| level.iter().map(move |w| w.prepend(i)))
            .collect();
    }
    level
}

/// All words of length `<= n`, length first then lexicographic.
pub fn enumerate_words(d: usize, n: usize) -> Vec<Word> {
    (0..=n).flat_map(|k| words_of_length(d, k)).collect()
}

/// Multi-indices of degree exactly `k`, ordered as their sorted words.
pub fn multiindices_of_degree(d: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut letters = Vec::with_capacity(k);
    fn rec(d: usize, k: usize, start: usize, letters: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if letters.len() == k {
            out.push(Word(letters.clone()).abelianize(d));
            return;
        }
        for l in start..=d {
            letters.push(l);
            rec(d, k, l, letters, out);
            letters.pop();
        }
    }
    rec(d, k, 1, &mut letters, &mut out);
    out
}

/// All `α` with `|α| <= n`, degree first then lexicographic on sorted words.
pub fn enumerate_multiindices(d: usize, n: usize) -> Vec<MultiIndex> {
    (0..=n).flat_map(|k| multiindices_of_degree(d, k)).collect()
}

/// `C(n, k)`, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Largest possible `Δ^n` for a tuple of arity `d` with first defect index `delta`.
///
/// Non-commuting: `(1 + d + ... + d^{n-1}) Δ`.
/// Commuting: `(Σ_{k<n} C(k+d-1, d-1)) Δ`.
pub fn max_count(d: usize, n: usize, delta: usize, commuting: bool) -> usize {
    let base = if commuting {
        (0..n).fold(0usize, |acc, k| acc.saturating_add(binomial(k + d - 1, d - 1)))
    } else {
        let mut total = 0usize;
        let mut power = 1usize;
        for _ in 0..n {
            total = total.saturating_add(power);
            power = power.saturating_mul(d);
        }
        total
    };
    base.saturating_mul(delta)
}

/// `T_f = T_{f(1)} T_{f(2)} ... T_{f(k)}`, with `T_ε = I`.
pub fn apply_word(t: &OperatorTuple, f: &Word) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(t.dim());
    for &l in f.letters() {
        acc = &acc * t.matrix(l);
    }
    acc
}

/// `T_1^{α_1} ... T_d^{α_d}`.
pub fn apply_monomial(t: &OperatorTuple, alpha: &MultiIndex) -> ComplexMatrix {
    apply_word(t, &alpha.to_word())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[usize]) -> Word {
        Word::new(letters.to_vec())
    }

    #[test]
    fn word_enumeration_examples() {
        assert_eq!(enumerate_words(2, 1), vec![w(&[]), w(&[1]), w(&[2])]);
        assert_eq!(enumerate_words(2, 3).len(), 15);
        assert_eq!(
            enumerate_words(1, 4),
            vec![w(&[]), w(&[1]), w(&[1, 1]), w(&[1, 1, 1]), w(&[1, 1, 1, 1])]
        );
        let level2 = words_of_length(2, 2);
        assert_eq!(level2, vec![w(&[1, 1]), w(&[1, 2]), w(&[2, 1]), w(&[2, 2])]);
    }

    #[test]
    fn multiindex_enumeration_examples() {
        let got: Vec<Vec<u32>> = enumerate_multiindices(2, 2).iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_multiindices(1, 3).len(), 4);
        assert_eq!(enumerate_multiindices(3, 2).len(), 10);
    }

    #[test]
    fn max_count_examples() {
        assert_eq!(max_count(2, 3, 1, false), 7);
        assert_eq!(max_count(2, 3, 1, true), 6);
        assert_eq!(max_count(1, 5, 1, false), 5);
        assert_eq!(max_count(1, 5, 1, true), 5);
        assert_eq!(max_count(3, 2, 2, false), 8);
        // saturates instead of overflowing
        assert_eq!(max_count(10, 80, 1, false), usize::MAX);
    }

    #[test]
    fn enumeration_counts_match_max_count() {
        for d in 1..=4 {
            for n in 0..=6 {
                assert_eq!(enumerate_words(d, n).len(), max_count(d, n + 1, 1, false));
                assert_eq!(enumerate_multiindices(d, n).len(), max_count(d, n + 1, 1, true));
            }
        }
    }

    #[test]
    fn word_helpers() {
        let f = w(&[2, 1, 2]);
        assert_eq!(f.abelianize(3).exponents(), &[1, 2, 0]);
        assert_eq!(f.strip_prefix(2), Some(w(&[1, 2])));
        assert_eq!(f.strip_prefix(1), None);
        assert_eq!(f.to_string(), "z2z1z2");
        assert_eq!(Word::empty().to_string(), "ε");
        assert_eq!(MultiIndex::new(vec![2, 0, 1]).to_string(), "z1^2z3");
        assert_eq!(MultiIndex::new(vec![2, 0, 1]).to_word(), w(&[1, 1, 3]));
        assert_eq!(serde_json::to_string(&w(&[1, 2, 1])).unwrap(), "[1,2,1]");
        assert_eq!(serde_json::to_string(&MultiIndex::new(vec![2, 0, 1])).unwrap(), "[2,0,1]");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(10, 0), 1);
    }
}
