//! Sparse categorical distributions over dense indices.

use rand::Rng;
use thiserror::Error;

use crate::tolerances;

/// Why a raw entry list does not form a probability distribution.
#[derive(Debug, Error)]
pub enum DistError {
    #[error("negative probability {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum} (must be 1 within {tol})")]
    BadSum { sum: f64, tol: f64 },
    #[error("distribution has empty support")]
    EmptySupport,
}

/// A sparse probability distribution over `usize` indices.
///
/// Entries are sorted by index, strictly positive, and sum to 1. Construction
/// keeps raw sums within [`tolerances::ROW_SUM`] of 1 verbatim, renormalizes
/// sums off by at most [`tolerances::ROW_RENORMALIZE`], and rejects larger
/// deviations, so every value of this type satisfies the row-sum invariant up
/// to floating-point rounding and construction is a fixed point on its own
/// output.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDist {
    entries: Vec<(usize, f64)>,
}

impl SparseDist {
    /// Builds a distribution from `(index, probability)` pairs. Duplicate
    /// indices are merged by summing, zero entries are dropped, and the result
    /// is renormalized to sum to exactly 1 when within tolerance.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self, DistError> {
        for &(index, value) in &entries {
            if value < 0.0 || !value.is_finite() {
                return Err(DistError::NegativeEntry { index, value });
            }
        }
        entries.sort_unstable_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, p) in entries {
            match merged.last_mut() {
                Some((j, q)) if *j == i => *q += p,
                _ => merged.push((i, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        let sum: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > tolerances::ROW_RENORMALIZE {
            return Err(DistError::BadSum {
                sum,
                tol: tolerances::ROW_RENORMALIZE,
            });
        }
        if merged.is_empty() {
            return Err(DistError::EmptySupport);
        }
        // Entries already summing to 1 within the strict row tolerance are
        // kept verbatim: renormalizing is not idempotent in floating point,
        // and leaving near-exact rows untouched makes construction a fixed
        // point, so serialized distributions reload byte-identically.
        if (sum - 1.0).abs() > tolerances::ROW_SUM {
            for (_, p) in &mut merged {
                *p /= sum;
            }
        }
        Ok(Self { entries: merged })
    }

    /// The distribution placing all mass on `index`.
    pub fn dirac(index: usize) -> Self {
        Self {
            entries: vec![(index, 1.0)],
        }
    }

    /// The uniform distribution over a non-empty set of indices.
    pub fn uniform(support: &[usize]) -> Result<Self, DistError> {
        if support.is_empty() {
            return Err(DistError::EmptySupport);
        }
        let p = 1.0 / support.len() as f64;
        Self::new(support.iter().map(|&i| (i, p)).collect())
    }

    /// Sorted `(index, probability)` pairs with strictly positive mass.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Probability mass at `index` (0 outside the support).
    pub fn prob(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Indices carrying positive mass, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    /// Largest index in the support.
    pub fn max_index(&self) -> usize {
        self.entries.last().expect("non-empty by construction").0
    }

    /// Expected value of `f` under the distribution.
    pub fn expect(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.entries.iter().map(|&(i, p)| p * f(i)).sum()
    }

    /// Total-variation distance: half the L1 distance over the union of
    /// supports. Lies in [0, 1].
    pub fn total_variation(&self, other: &SparseDist) -> f64 {
        let mut acc = 0.0;
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(i, p)), Some(&&(j, q))) => {
                    if i < j {
                        acc += p;
                        a.next();
                    } else if j < i {
                        acc += q;
                        b.next();
                    } else {
                        acc += (p - q).abs();
                        a.next();
                        b.next();
                    }
                }
                (Some(&&(_, p)), None) => {
                    acc += p;
                    a.next();
                }
                (None, Some(&&(_, q))) => {
                    acc += q;
                    b.next();
                }
                (None, None) => break,
            }
        }
        0.5 * acc
    }

    /// True when the two distributions agree pointwise within `tol` over the
    /// union of their supports.
    pub fn approx_eq(&self, other: &SparseDist, tol: f64) -> bool {
        let mut union: Vec<usize> = self.support().chain(other.support()).collect();
        union.sort_unstable();
        union.dedup();
        union
            .into_iter()
            .all(|i| (self.prob(i) - other.prob(i)).abs() <= tol)
    }

    /// Pushes the distribution through an index map, merging collisions.
    pub fn map_indices(&self, mut f: impl FnMut(usize) -> usize) -> SparseDist {
        let mut entries: Vec<(usize, f64)> =
            self.entries.iter().map(|&(i, p)| (f(i), p)).collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, p) in entries {
            match merged.last_mut() {
                Some((j, q)) if *j == i => *q += p,
                _ => merged.push((i, p)),
            }
        }
        SparseDist { entries: merged }
    }

    /// Samples an index; reproducible given the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(i, p) in &self.entries {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Guard against cumulative rounding: fall back to the last entry.
        self.entries.last().expect("non-empty by construction").0
    }
}
