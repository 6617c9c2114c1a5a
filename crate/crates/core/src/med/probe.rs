//! Diagnostic probes: per-dimension variance under factor manipulation, and
//! PCA reduction for compacting high-dimensional representations.

use nalgebra::{DMatrix, SymmetricEigen};

use super::MedError;
use crate::data::{validate_pair, FactorTable, Mat, RepresentationMatrix};

/// How manipulation profiles aggregate over the assignments of the
/// non-swept factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    /// Mean profile over every assignment of the other factors.
    AverageAssignments,
    /// Profile for one assignment, indexed in row-major order over the
    /// other factors (later factors vary fastest).
    SingleAssignment(usize),
}

/// Sweeps factor `factor` over all its values while the other factors stay
/// fixed, and returns the per-dimension variance profile of the
/// representation. Dimensions that respond to the swept factor show large
/// variance; constant or unrelated dimensions show none.
///
/// Requires the factor table to be a complete Cartesian grid (every
/// combination present with equal multiplicity), which is what makes
/// "sweep one factor, hold the rest" well defined. Variances are population
/// variances over the rows of each assignment group.
pub fn manipulation_variance(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    factor: usize,
    mode: VarianceMode,
) -> Result<Vec<f64>, MedError> {
    validate_pair(factors, reps)?;
    if factor >= factors.n_factors() {
        return Err(MedError::Data(crate::data::DataError::IndexOutOfRange {
            what: "factor",
            index: factor,
            limit: factors.n_factors(),
        }));
    }
    let cards = factors.cardinalities();
    let cells: usize = cards.iter().try_fold(1usize, |acc, &c| {
        acc.checked_mul(c as usize)
    })
    .ok_or_else(|| MedError::NotAGrid("combination count overflows".into()))?;
    if factors.n_rows() % cells != 0 {
        return Err(MedError::NotAGrid(format!(
            "{} rows cannot cover {} combinations evenly",
            factors.n_rows(),
            cells
        )));
    }
    let replication = factors.n_rows() / cells;
    let counts = factors.combination_counts();
    if counts.len() != cells || counts.values().any(|&c| c != replication) {
        return Err(MedError::NotAGrid(format!(
            "expected every one of {cells} combinations exactly {replication} time(s)"
        )));
    }

    // Assignment index over the non-swept factors, row-major, later factors
    // fastest — matching the grid enumeration order used elsewhere.
    let others: Vec<usize> = (0..factors.n_factors()).filter(|&j| j != factor).collect();
    let n_assignments: usize = others.iter().map(|&j| cards[j] as usize).product();
    let assignment_of = |row: usize| -> usize {
        let mut idx = 0usize;
        for &j in &others {
            idx = idx * cards[j] as usize + factors.value(row, j) as usize;
        }
        idx
    };

    let d = reps.n_dims();
    let group_size = factors.n_rows() / n_assignments;
    let mut sums = vec![vec![0.0f64; d]; n_assignments];
    let mut sq_sums = vec![vec![0.0f64; d]; n_assignments];
    for row in 0..factors.n_rows() {
        let a = assignment_of(row);
        let r = reps.row(row);
        for dim in 0..d {
            sums[a][dim] += r[dim];
            sq_sums[a][dim] += r[dim] * r[dim];
        }
    }
    let profile_of = |a: usize| -> Vec<f64> {
        let n = group_size as f64;
        (0..d)
            .map(|dim| {
                let mean = sums[a][dim] / n;
                (sq_sums[a][dim] / n - mean * mean).max(0.0)
            })
            .collect()
    };

    match mode {
        VarianceMode::SingleAssignment(a) => {
            if a >= n_assignments {
                return Err(MedError::Data(crate::data::DataError::IndexOutOfRange {
                    what: "assignment",
                    index: a,
                    limit: n_assignments,
                }));
            }
            Ok(profile_of(a))
        }
        VarianceMode::AverageAssignments => {
            let mut avg = vec![0.0f64; d];
            for a in 0..n_assignments {
                for (dim, v) in profile_of(a).into_iter().enumerate() {
                    avg[dim] += v;
                }
            }
            for v in &mut avg {
                *v /= n_assignments as f64;
            }
            Ok(avg)
        }
    }
}

/// Outcome of a PCA reduction.
#[derive(Debug, Clone)]
pub struct PcaReduction {
    /// Centered data projected onto the kept components (N×target_dim).
    pub reduced: RepresentationMatrix,
    /// Component loadings, one column per component (D×target_dim).
    pub components: Mat,
    /// Covariance eigenvalues of the kept components, descending.
    pub eigenvalues: Vec<f64>,
    /// Number of trailing components that were zero-padded because
    /// target_dim exceeded the numerical rank of the covariance.
    pub padded: usize,
}

/// Projects centered data onto the top `target_dim` eigenvectors of the
/// (population) covariance matrix, via a full symmetric eigendecomposition.
///
/// Deterministic conventions: components are ordered by descending
/// eigenvalue (original index breaks ties) and each component is flipped so
/// that its largest-magnitude loading is positive. If `target_dim` exceeds
/// the numerical rank, the missing components are zero vectors and
/// `padded` reports how many; callers that care should warn.
pub fn pca_reduce(
    reps: &RepresentationMatrix,
    target_dim: usize,
) -> Result<PcaReduction, MedError> {
    let (n, d) = (reps.n_rows(), reps.n_dims());
    let limit = n.min(d);
    if target_dim == 0 || target_dim > limit {
        return Err(MedError::TargetTooLarge {
            target: target_dim,
            limit,
        });
    }

    let mut means = vec![0.0f64; d];
    for row in 0..n {
        for (dim, &v) in reps.row(row).iter().enumerate() {
            means[dim] += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |r, c| reps.at(r, c) - means[c]);
    let cov = (centered.transpose() * &centered) / n as f64;

    let eigen = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("eigenvalues are finite")
            .then(a.cmp(&b))
    });

    let lambda_max = eigen.eigenvalues[order[0]].max(0.0);
    let tol = lambda_max * 1e-12;
    let rank = order
        .iter()
        .take_while(|&&i| eigen.eigenvalues[i] > tol && eigen.eigenvalues[i] > 0.0)
        .count();
    let kept = target_dim.min(rank);
    let padded = target_dim - kept;

    let mut components = Mat::zeros(d, target_dim);
    let mut eigenvalues = vec![0.0f64; target_dim];
    for c in 0..kept {
        let col = eigen.eigenvectors.column(order[c]);
        // Sign convention: largest-magnitude loading positive, lowest index
        // winning ties.
        let mut pivot = 0usize;
        for i in 1..d {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let flip = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            components.set(i, c, col[i] * flip);
        }
        eigenvalues[c] = eigen.eigenvalues[order[c]];
    }

    let mut values = Vec::with_capacity(n * target_dim);
    for row in 0..n {
        for c in 0..target_dim {
            let mut acc = 0.0;
            for dim in 0..d {
                acc += centered[(row, dim)] * components.at(dim, c);
            }
            values.push(acc);
        }
    }
    Ok(PcaReduction {
        reduced: RepresentationMatrix::new(target_dim, values)?,
        components,
        eigenvalues,
        padded,
    })
}
