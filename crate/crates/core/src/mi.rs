//! Histogram discretization, discrete entropy, and mutual information.
//!
//! All entropies are computed in nats from exact empirical counts and then
//! converted once into the run's entropy base. Two bases exist:
//!
//! * `Natural` — natural log. This is the base that reproduces the
//!   closed-form scenario values (e.g. a uniform two-factor row scores
//!   1 − ln 2 ≈ 0.307).
//! * `BaseK(k)` — log base k with k the run's factor count, the convention
//!   used by DCI-style scores where a maximally entangled row scores 0.
//!
//! The base is a single run-global choice; nothing in this crate mixes
//! bases within one computation.

use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::data::{validate_pair, DataError, FactorTable, Mat, RepresentationMatrix};

/// Joint tables switch from a dense count array to an ordered map above
/// this many cells. Every in-scope dataset fits the dense path; the map is
/// the fallback for huge alphabets. Both paths produce identical counts and
/// iterate in a fixed order, so results are bit-identical either way.
const DENSE_JOINT_LIMIT: usize = 1 << 20;

#[derive(Debug, Error, PartialEq)]
pub enum MiError {
    #[error("length mismatch: x has {x} entries, y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("empty input")]
    Empty,
}

/// Logarithm base for every entropy-derived quantity of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyBase {
    /// Natural logarithm (nats).
    Natural,
    /// Log base k, with k the number of factors. `BaseK(k)` for k < 2 is
    /// degenerate (log 1 = 0); such runs have zero row entropy anyway and
    /// the conversion maps everything to 0.
    BaseK(u32),
}

impl EntropyBase {
    /// Converts a value measured in nats into this base's units.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            EntropyBase::Natural => nats,
            EntropyBase::BaseK(k) if k >= 2 => nats / (k as f64).ln(),
            EntropyBase::BaseK(_) => 0.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EntropyBase::Natural => "natural",
            EntropyBase::BaseK(_) => "base-k",
        }
    }
}

/// Equal-width histogram discretization over [min, max].
///
/// Value x maps to floor(bins * (x - min) / (max - min)), clamped to
/// bins - 1 so that x = max lands in the top bin. A constant column maps
/// entirely to bin 0. The mapping is invariant to positive affine rescaling
/// of the column.
pub fn discretize(column: &[f64], bins: u32) -> Vec<u32> {
    assert!(bins >= 1, "bins must be positive");
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in column {
        min = min.min(x);
        max = max.max(x);
    }
    if !(max > min) {
        return vec![0; column.len()];
    }
    let width = max - min;
    column
        .iter()
        .map(|&x| {
            let b = (bins as f64 * (x - min) / width).floor() as i64;
            b.clamp(0, bins as i64 - 1) as u32
        })
        .collect()
}

fn entropy_nats_from_counts<'a>(counts: impl Iterator<Item = &'a u64>, total: u64) -> f64 {
    let n = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    // Exact counts cannot make entropy negative; only fp cancellation can.
    h.max(0.0)
}

fn entropy_nats(labels: &[u32]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let max = *labels.iter().max().expect("non-empty") as usize;
    if max < DENSE_JOINT_LIMIT {
        let mut counts = vec![0u64; max + 1];
        for &l in labels {
            counts[l as usize] += 1;
        }
        entropy_nats_from_counts(counts.iter(), labels.len() as u64)
    } else {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for &l in labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        entropy_nats_from_counts(counts.values(), labels.len() as u64)
    }
}

/// Empirical entropy −Σ p ln p of the label frequencies, with 0·log 0 = 0,
/// converted into `base` units.
pub fn discrete_entropy(labels: &[u32], base: EntropyBase) -> f64 {
    base.from_nats(entropy_nats(labels))
}

fn joint_entropy_nats(x: &[u32], y: &[u32]) -> f64 {
    // Canonical orientation so that summation order (and hence the exact fp
    // result) is identical under argument swap: smaller alphabet becomes the
    // major axis, ties broken lexicographically.
    let mx = *x.iter().max().expect("non-empty") as usize + 1;
    let my = *y.iter().max().expect("non-empty") as usize + 1;
    if mx > my || (mx == my && x > y) {
        return joint_entropy_oriented(y, x, my, mx);
    }
    joint_entropy_oriented(x, y, mx, my)
}

fn joint_entropy_oriented(x: &[u32], y: &[u32], mx: usize, my: usize) -> f64 {
    let n = x.len() as u64;
    if mx.saturating_mul(my) <= DENSE_JOINT_LIMIT {
        let mut counts = vec![0u64; mx * my];
        for (&a, &b) in x.iter().zip(y) {
            counts[a as usize * my + b as usize] += 1;
        }
        entropy_nats_from_counts(counts.iter(), n)
    } else {
        let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for (&a, &b) in x.iter().zip(y) {
            *counts.entry((a, b)).or_insert(0) += 1;
        }
        entropy_nats_from_counts(counts.values(), n)
    }
}

/// |I| below this is floating-point residue of the three-entropy sum (the
/// terms cancel exactly in counts but not in fp); snapping it to zero makes
/// exactly independent columns yield exactly zero MI. Real empirical MI at
/// in-scope sample sizes sits many orders above this.
const MI_FP_SNAP: f64 = 1e-12;

fn mi_nats_with_marginals(x: &[u32], y: &[u32], hx: f64, hy: f64) -> f64 {
    let i = hx + hy - joint_entropy_nats(x, y);
    if i < MI_FP_SNAP {
        0.0
    } else {
        i
    }
}

/// Mutual information I(x; y) = H(x) + H(y) − H(x, y) from the exact
/// empirical joint contingency table, in `base` units.
pub fn mutual_information(x: &[u32], y: &[u32], base: EntropyBase) -> Result<f64, MiError> {
    if x.len() != y.len() {
        return Err(MiError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.is_empty() {
        return Err(MiError::Empty);
    }
    let nats = mi_nats_with_marginals(x, y, entropy_nats(x), entropy_nats(y));
    Ok(base.from_nats(nats))
}

/// D×K matrix of mutual information between representation dimensions and
/// factors, in the units of its entropy base tag.
#[derive(Debug, Clone, PartialEq)]
pub struct MiMatrix {
    values: Mat,
    base: EntropyBase,
}

impl MiMatrix {
    pub fn n_dims(&self) -> usize {
        self.values.rows()
    }

    pub fn n_factors(&self) -> usize {
        self.values.cols()
    }

    pub fn base(&self) -> EntropyBase {
        self.base
    }

    #[inline]
    pub fn at(&self, dim: usize, factor: usize) -> f64 {
        self.values.at(dim, factor)
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    /// MI matrix restricted to the given dimensions (rows), in order.
    pub fn restrict(&self, dims: &[usize]) -> MiMatrix {
        let values = Mat::from_fn(dims.len(), self.n_factors(), |i, j| self.at(dims[i], j));
        MiMatrix {
            values,
            base: self.base,
        }
    }

    #[cfg(test)]
    pub(crate) fn from_mat(values: Mat, base: EntropyBase) -> MiMatrix {
        MiMatrix { values, base }
    }
}

/// Computes entry (i, j) = I(discretize(c_i, bins), v_j) for every
/// representation dimension i and factor j. Factor columns are used raw
/// (they are already discrete).
///
/// Cells are independent pure functions of the two columns involved, so the
/// dimension loop runs in parallel; results are written by index and are
/// bit-identical for any worker count.
pub fn mi_matrix(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    bins: u32,
    base: EntropyBase,
) -> Result<MiMatrix, DataError> {
    validate_pair(factors, reps)?;
    let d = reps.n_dims();
    let k = factors.n_factors();
    let factor_cols: Vec<Vec<u32>> = (0..k).map(|j| factors.column(j)).collect();
    let factor_entropy: Vec<f64> = factor_cols.iter().map(|c| entropy_nats(c)).collect();

    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let disc = discretize(&reps.column(i), bins);
            let h_dim = entropy_nats(&disc);
            (0..k)
                .map(|j| {
                    let nats = mi_nats_with_marginals(&disc, &factor_cols[j], h_dim, factor_entropy[j]);
                    base.from_nats(nats)
                })
                .collect()
        })
        .collect();

    let mut values = Mat::zeros(d, k);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            values.set(i, j, v);
        }
    }
    Ok(MiMatrix { values, base })
}
