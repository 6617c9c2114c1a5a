//! The MED and Top-k MED disentanglement scores, plus the co-occurrence and
//! manipulation/PCA probes.
//!
//! Pipeline, starting from the D×K mutual-information matrix I:
//!
//! 1. column-normalize into the importance matrix
//!    `R[i][j] = I[i][j] / Σ_d I[d][j]` (columns with zero MI stay zero);
//! 2. row-normalize R into per-dimension distributions P over factors;
//! 3. score each dimension `S_i = 1 − H(P_i·)` in the run's entropy base;
//! 4. weight by `ρ_i = Σ_j R[i][j] / Σ_ij R[i][j]` and sum:
//!    `MED = Σ_i ρ_i S_i`.
//!
//! Top-k MED first groups dimensions by their argmax factor, keeps the k
//! best-scoring dimensions per factor, and reruns the whole pipeline on the
//! selected sub-vector — the column normalization in step 1 depends on the
//! dimension set, so slicing R would be wrong.
//!
//! On the entropy base: with the natural base and K ≥ 3 factors, a fully
//! entangled row can score below zero (1 − ln K < 0); scores are reported
//! raw here and clamped to [0,1] only when packaged into a `MetricReport`.
//! The base-k variant keeps every per-dimension score in [0,1].

mod probe;

pub use probe::{manipulation_variance, pca_reduce, PcaReduction, VarianceMode};

use thiserror::Error;

use crate::data::{DataError, FactorTable, Mat, RepresentationMatrix};
use crate::mi::{mi_matrix, EntropyBase, MiMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum MedError {
    #[error("top-k selection is empty (mutual information matrix is all zero)")]
    EmptySelection,
    #[error("factor table is not a complete Cartesian grid: {0}")]
    NotAGrid(String),
    #[error("target dimension {target} exceeds min(N, D) = {limit}")]
    TargetTooLarge { target: usize, limit: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Column-normalized importance matrix with its derived quantities:
/// row distributions P, per-dimension scores S, and dimension weights ρ.
#[derive(Debug, Clone)]
pub struct ImportanceMatrix {
    r: Mat,
    row_dist: Mat,
    scores: Vec<f64>,
    rho: Vec<f64>,
    row_entropy: Vec<f64>,
    informative: Vec<bool>,
    base: EntropyBase,
}

impl ImportanceMatrix {
    pub fn n_dims(&self) -> usize {
        self.r.rows()
    }

    pub fn n_factors(&self) -> usize {
        self.r.cols()
    }

    /// R: columns sum to 1 or are identically zero.
    pub fn r(&self) -> &Mat {
        &self.r
    }

    /// P: rows sum to 1 or are identically zero.
    pub fn row_dist(&self) -> &Mat {
        &self.row_dist
    }

    /// S_i = 1 − H(P_i·); zero-mass rows score 0.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// ρ: nonnegative, sums to 1 unless the matrix is all zero.
    pub fn weights(&self) -> &[f64] {
        &self.rho
    }

    pub fn base(&self) -> EntropyBase {
        self.base
    }

    /// MED = Σ ρ_i S_i. Computed as 1 − Σ ρ_i H(P_i·), which is equal because
    /// Σ ρ_i = 1, and stays exactly 1.0 when every informative row is one-hot.
    pub fn med(&self) -> f64 {
        if self.rho.iter().all(|&w| w == 0.0) {
            return 0.0;
        }
        let weighted_entropy: f64 = self
            .rho
            .iter()
            .zip(&self.row_entropy)
            .map(|(&w, &h)| w * h)
            .sum();
        1.0 - weighted_entropy
    }
}

/// Builds R, P, S, ρ from a mutual-information matrix. Columns whose MI sum
/// is zero (uninformative factors) are left all-zero rather than smeared
/// uniform, so they contribute nothing downstream.
pub fn importance_matrix(mi: &MiMatrix) -> ImportanceMatrix {
    let (d, k) = (mi.n_dims(), mi.n_factors());
    let base = mi.base();

    let mut col_sum = vec![0.0f64; k];
    for j in 0..k {
        for i in 0..d {
            col_sum[j] += mi.at(i, j);
        }
    }
    let r = Mat::from_fn(d, k, |i, j| {
        if col_sum[j] > 0.0 {
            mi.at(i, j) / col_sum[j]
        } else {
            0.0
        }
    });

    let row_sum: Vec<f64> = (0..d).map(|i| r.row(i).iter().sum()).collect();
    let grand_total: f64 = row_sum.iter().sum();

    let row_dist = Mat::from_fn(d, k, |i, j| {
        if row_sum[i] > 0.0 {
            r.at(i, j) / row_sum[i]
        } else {
            0.0
        }
    });

    let mut row_entropy = vec![0.0f64; d];
    let mut scores = vec![0.0f64; d];
    let mut informative = vec![false; d];
    for i in 0..d {
        if row_sum[i] > 0.0 {
            let mut h = 0.0;
            for j in 0..k {
                let p = row_dist.at(i, j);
                if p > 0.0 {
                    h -= p * p.ln();
                }
            }
            let h = base.from_nats(h.max(0.0));
            row_entropy[i] = h;
            scores[i] = 1.0 - h;
            informative[i] = true;
        }
    }

    let rho: Vec<f64> = row_sum
        .iter()
        .map(|&s| if grand_total > 0.0 { s / grand_total } else { 0.0 })
        .collect();

    ImportanceMatrix {
        r,
        row_dist,
        scores,
        rho,
        row_entropy,
        informative,
        base,
    }
}

/// Per-dimension disentanglement scores S (same values as
/// `ImportanceMatrix::scores`, exposed as the standalone operation).
pub fn dimension_scores(importance: &ImportanceMatrix) -> &[f64] {
    importance.scores()
}

/// Full pipeline: MI matrix → importance matrix → weighted score.
pub fn med_score(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    bins: u32,
    base: EntropyBase,
) -> Result<f64, MedError> {
    let mi = mi_matrix(reps, factors, bins, base)?;
    Ok(importance_matrix(&mi).med())
}

/// Result of the per-factor top-k dimension selection.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKSelection {
    k: usize,
    groups: Vec<Vec<usize>>,
    picked: Vec<usize>,
}

impl TopKSelection {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Group j holds the informative dimensions whose argmax importance is
    /// factor j (argmax ties resolved to the lowest factor index).
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Sorted union of the per-factor picks.
    pub fn picked(&self) -> &[usize] {
        &self.picked
    }
}

/// Per factor j, keeps the up-to-k members of its argmax group with the
/// highest scores S (score ties resolved to the lower dimension index).
/// Uninformative dimensions (zero importance rows) belong to no group.
pub fn topk_select(importance: &ImportanceMatrix, k: usize) -> TopKSelection {
    assert!(k >= 1, "k must be >= 1");
    let (d, n_factors) = (importance.n_dims(), importance.n_factors());
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_factors];
    for i in 0..d {
        if !importance.informative[i] {
            continue;
        }
        let row = importance.r.row(i);
        let mut best = 0usize;
        for j in 1..n_factors {
            if row[j] > row[best] {
                best = j;
            }
        }
        groups[best].push(i);
    }

    let scores = importance.scores();
    let mut picked = Vec::new();
    for group in &groups {
        let mut ranked: Vec<usize> = group.clone();
        // Descending score, ascending dimension index on ties.
        ranked.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        picked.extend(ranked.into_iter().take(k));
    }
    picked.sort_unstable();
    TopKSelection { k, groups, picked }
}

/// Top-k MED evaluation: the selection plus the score of the selected
/// sub-vector under the recomputed pipeline.
#[derive(Debug, Clone)]
pub struct TopKEvaluation {
    pub selection: TopKSelection,
    pub score: f64,
}

/// Selects per-factor top-k dimensions, restricts the representation to
/// them, and reruns MI → importance → MED on the sub-vector.
pub fn topk_evaluation(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    k: usize,
    bins: u32,
    base: EntropyBase,
) -> Result<TopKEvaluation, MedError> {
    let mi = mi_matrix(reps, factors, bins, base)?;
    let importance = importance_matrix(&mi);
    let selection = topk_select(&importance, k);
    if selection.picked().is_empty() {
        return Err(MedError::EmptySelection);
    }
    let sub = reps.select_dims(selection.picked())?;
    let score = med_score(&sub, factors, bins, base)?;
    Ok(TopKEvaluation { selection, score })
}

/// Top-k MED score alone.
pub fn topk_med(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    k: usize,
    bins: u32,
    base: EntropyBase,
) -> Result<f64, MedError> {
    Ok(topk_evaluation(reps, factors, k, bins, base)?.score)
}

/// Normalized co-occurrence of two factors' MI profiles over the (already
/// restricted) dimension set: the cosine between MI columns. Factors whose
/// restricted column has zero norm get an all-zero row and column.
pub fn cooccurrence(mi: &MiMatrix) -> Mat {
    let (d, k) = (mi.n_dims(), mi.n_factors());
    let norms: Vec<f64> = (0..k)
        .map(|j| (0..d).map(|i| mi.at(i, j) * mi.at(i, j)).sum::<f64>().sqrt())
        .collect();
    Mat::from_fn(k, k, |j1, j2| {
        if norms[j1] > 0.0 && norms[j2] > 0.0 {
            if j1 == j2 {
                return 1.0; // cosine with itself, free of fp residue
            }
            let dot: f64 = (0..d).map(|i| mi.at(i, j1) * mi.at(i, j2)).sum();
            dot / (norms[j1] * norms[j2])
        } else {
            0.0
        }
    })
}
