//! The five reference disentanglement metrics (BetaVAE, FactorVAE, MIG,
//! SAP, DCI Disentanglement) and the downstream logistic probe.
//!
//! Protocol constants follow the standard evaluation setup: batches of 64,
//! 10000 training and 5000 evaluation draws, prune threshold 0.06, 20
//! histogram bins for anything MI-based. Every randomized routine pulls its
//! randomness from a stream derived from (run seed, metric tag, draw index),
//! so scores are bit-reproducible for a given seed and independent of
//! evaluation order and thread count.

pub mod lasso;
pub mod logreg;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::{validate_pair, DataError, FactorTable, Mat, RepresentationMatrix};
use crate::mi::{mi_matrix, EntropyBase};
use crate::rng::Rng;
use lasso::{lasso_coordinate_descent, LassoConfig};
use logreg::{LogRegConfig, LogisticModel, Standardizer};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("factor {factor} has fewer than two observed values in the training split")]
    DegenerateFactor { factor: usize },
    #[error("factor {factor} value {value} has {count} samples; at least {needed} required")]
    InsufficientSamples {
        factor: usize,
        value: u32,
        count: usize,
        needed: usize,
    },
    #[error("all dimensions fall below the prune threshold")]
    AllDimensionsPruned,
    #[error("importance estimator failed to converge within {budget} sweeps (factor {factor}, class {class})")]
    EstimatorFailure {
        factor: usize,
        class: u32,
        budget: usize,
    },
    #[error("dataset too small to split: {rows} rows")]
    TooFewRows { rows: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Evaluation protocol constants plus the run seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub batch_size: usize,
    pub num_train: usize,
    pub num_eval: usize,
    pub prune_threshold: f64,
    pub seed: u64,
}

impl ProtocolParams {
    pub fn new(seed: u64) -> Self {
        ProtocolParams {
            batch_size: 64,
            num_train: 10_000,
            num_eval: 5_000,
            prune_threshold: 0.06,
            seed,
        }
    }
}

/// Mutual Information Gap: for each factor with positive entropy, the gap
/// between the two highest MI dimensions, normalized by the factor entropy;
/// averaged over those factors. Zero-entropy factors are skipped.
pub fn mig(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    bins: u32,
    base: EntropyBase,
) -> Result<f64, BaselineError> {
    let mi = mi_matrix(reps, factors, bins, base)?;
    let d = mi.n_dims();
    let mut total = 0.0;
    let mut counted = 0usize;
    for j in 0..factors.n_factors() {
        let h = crate::mi::discrete_entropy(&factors.column(j), base);
        if h <= 0.0 {
            continue;
        }
        let (mut top, mut second) = (0.0f64, 0.0f64);
        for i in 0..d {
            let v = mi.at(i, j);
            if v > top {
                second = top;
                top = v;
            } else if v > second {
                second = v;
            }
        }
        // With a single dimension there is no runner-up; the gap is the top
        // MI itself.
        let gap = if d >= 2 { top - second } else { top };
        total += gap / h;
        counted += 1;
    }
    if counted == 0 {
        return Ok(0.0);
    }
    Ok(total / counted as f64)
}

/// Separated Attribute Predictability with a decision-stump scorer: entry
/// (i, j) of the score matrix is the one-vs-rest-averaged balanced accuracy
/// of the best single-threshold classifier predicting factor j from
/// dimension i (threshold fitted on the train split, scored on the eval
/// split); SAP is the mean over factors of the top-two score gap.
pub fn sap(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    params: &ProtocolParams,
) -> Result<f64, BaselineError> {
    validate_pair(factors, reps)?;
    let n = factors.n_rows();
    let train_rows = sample_rows(params.seed, "sap.train", params.num_train, n);
    let eval_rows = sample_rows(params.seed, "sap.eval", params.num_eval, n);

    let k = factors.n_factors();
    let d = reps.n_dims();

    // Observed train values per factor; each factor needs at least two.
    let mut train_values: Vec<Vec<u32>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut seen = vec![false; factors.cardinalities()[j] as usize];
        for &r in &train_rows {
            seen[factors.value(r, j) as usize] = true;
        }
        let observed: Vec<u32> = (0..seen.len() as u32).filter(|&v| seen[v as usize]).collect();
        if observed.len() < 2 {
            return Err(BaselineError::DegenerateFactor { factor: j });
        }
        train_values.push(observed);
    }

    let scores: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let train_x: Vec<f64> = train_rows.iter().map(|&r| reps.at(r, i)).collect();
            let eval_x: Vec<f64> = eval_rows.iter().map(|&r| reps.at(r, i)).collect();
            let mut order: Vec<usize> = (0..train_x.len()).collect();
            order.sort_by(|&a, &b| train_x[a].partial_cmp(&train_x[b]).expect("finite"));
            (0..k)
                .map(|j| {
                    let train_y: Vec<u32> = train_rows.iter().map(|&r| factors.value(r, j)).collect();
                    let eval_y: Vec<u32> = eval_rows.iter().map(|&r| factors.value(r, j)).collect();
                    let mut acc = 0.0;
                    let mut classes = 0usize;
                    for &value in &train_values[j] {
                        let stump = fit_stump(&train_x, &order, &train_y, value);
                        acc += stump.balanced_accuracy(&eval_x, &eval_y, value);
                        classes += 1;
                    }
                    acc / classes as f64
                })
                .collect()
        })
        .collect();

    let mut total_gap = 0.0;
    for j in 0..k {
        let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for row in scores.iter() {
            let v = row[j];
            if v > top {
                second = top;
                top = v;
            } else if v > second {
                second = v;
            }
        }
        let gap = if d >= 2 { top - second } else { top };
        total_gap += gap;
    }
    Ok((total_gap / k as f64).max(0.0))
}

#[derive(Debug, Clone, Copy)]
struct Stump {
    threshold: f64,
    /// true: predict positive when x <= threshold; false: when x > threshold.
    le_is_positive: bool,
}

impl Stump {
    fn predicts_positive(&self, x: f64) -> bool {
        (x <= self.threshold) == self.le_is_positive
    }

    /// (TPR + TNR) / 2; an empty side contributes the chance recall 0.5.
    fn balanced_accuracy(&self, xs: &[f64], ys: &[u32], positive: u32) -> f64 {
        let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
        for (&x, &y) in xs.iter().zip(ys) {
            let predicted = self.predicts_positive(x);
            if y == positive {
                pos += 1;
                if predicted {
                    tp += 1;
                }
            } else {
                neg += 1;
                if !predicted {
                    tn += 1;
                }
            }
        }
        let tpr = if pos > 0 { tp as f64 / pos as f64 } else { 0.5 };
        let tnr = if neg > 0 { tn as f64 / neg as f64 } else { 0.5 };
        (tpr + tnr) / 2.0
    }
}

/// Best-threshold stump on the train split by balanced accuracy. `order`
/// sorts the train values ascending. Scanning every boundary between
/// distinct values covers all distinct stumps; the all-positive /
/// all-negative stump (balanced accuracy exactly 0.5) is the starting best.
fn fit_stump(xs: &[f64], order: &[usize], ys: &[u32], positive: u32) -> Stump {
    let pos_total = ys.iter().filter(|&&y| y == positive).count();
    let neg_total = ys.len() - pos_total;
    let mut best = Stump {
        threshold: f64::INFINITY,
        le_is_positive: true,
    };
    let mut best_acc = 0.5;
    if pos_total == 0 || neg_total == 0 {
        return best;
    }
    let (mut pos_le, mut neg_le) = (0usize, 0usize);
    for (rank, &idx) in order.iter().enumerate() {
        if ys[idx] == positive {
            pos_le += 1;
        } else {
            neg_le += 1;
        }
        // Only boundaries between distinct values are real thresholds.
        if rank + 1 < order.len() && xs[order[rank + 1]] == xs[idx] {
            continue;
        }
        if rank + 1 == order.len() {
            break; // same as the trivial all-positive stump
        }
        let threshold = 0.5 * (xs[idx] + xs[order[rank + 1]]);
        let tpr_le = pos_le as f64 / pos_total as f64;
        let tnr_le = (neg_total - neg_le) as f64 / neg_total as f64;
        let acc_le = (tpr_le + tnr_le) / 2.0;
        if acc_le > best_acc {
            best_acc = acc_le;
            best = Stump {
                threshold,
                le_is_positive: true,
            };
        }
        let acc_gt = 1.0 - acc_le;
        if acc_gt > best_acc {
            best_acc = acc_gt;
            best = Stump {
                threshold,
                le_is_positive: false,
            };
        }
    }
    best
}

/// How DCI obtains its importance matrix.
#[derive(Debug, Clone)]
pub enum DciEstimator {
    /// One-vs-rest lasso per (factor, class) on standardized dimensions;
    /// importance is the mean |coefficient| over classes.
    Lasso { lambda: f64 },
    /// Importances supplied directly (|∂c_i/∂v_j| from a scenario
    /// definition or any external source). Must be D×K and nonnegative.
    AnalyticDerivative(Mat),
}

impl DciEstimator {
    pub fn lasso_default() -> Self {
        DciEstimator::Lasso { lambda: 0.01 }
    }
}

/// Entropy-weighted disentanglement over a raw (not column-normalized)
/// importance matrix: D = Σ_i ρ_i (1 − H(P_i·)), with ρ from row masses and
/// P the row-normalized importances. All-zero importances score 0.
pub fn dci_from_importance(importance: &Mat, base: EntropyBase) -> f64 {
    let (d, k) = (importance.rows(), importance.cols());
    let row_sum: Vec<f64> = (0..d).map(|i| importance.row(i).iter().sum()).collect();
    let total: f64 = row_sum.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut weighted_entropy = 0.0;
    for i in 0..d {
        if row_sum[i] <= 0.0 {
            continue;
        }
        let mut h = 0.0;
        for j in 0..k {
            let p = importance.at(i, j) / row_sum[i];
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        weighted_entropy += row_sum[i] / total * base.from_nats(h.max(0.0));
    }
    1.0 - weighted_entropy
}

/// DCI Disentanglement with a pluggable importance estimator.
pub fn dci_disentanglement(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    estimator: &DciEstimator,
    base: EntropyBase,
) -> Result<f64, BaselineError> {
    validate_pair(factors, reps)?;
    let importance = match estimator {
        DciEstimator::AnalyticDerivative(matrix) => {
            if matrix.rows() != reps.n_dims() || matrix.cols() != factors.n_factors() {
                return Err(BaselineError::Data(DataError::ShapeMismatch(format!(
                    "importance matrix is {}x{}, expected {}x{}",
                    matrix.rows(),
                    matrix.cols(),
                    reps.n_dims(),
                    factors.n_factors()
                ))));
            }
            matrix.clone()
        }
        DciEstimator::Lasso { lambda } => lasso_importance(reps, factors, *lambda)?,
    };
    Ok(dci_from_importance(&importance, base))
}

fn lasso_importance(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    lambda: f64,
) -> Result<Mat, BaselineError> {
    let (n, d, k) = (reps.n_rows(), reps.n_dims(), factors.n_factors());
    let std = Standardizer::fit(reps.as_mat().data(), d);
    let x = std.transform(reps.as_mat().data());
    let cfg = LassoConfig {
        lambda,
        ..LassoConfig::default()
    };

    let columns: Vec<Result<Vec<f64>, BaselineError>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let card = factors.cardinalities()[j];
            let mut sums = vec![0.0f64; d];
            let mut classes = 0usize;
            for value in 0..card {
                let y: Vec<f64> = (0..n)
                    .map(|r| (factors.value(r, j) == value) as u32 as f64)
                    .collect();
                if y.iter().all(|&v| v == 0.0) {
                    continue; // value absent from the data
                }
                let fit = lasso_coordinate_descent(&x, d, &y, cfg).map_err(|budget| {
                    BaselineError::EstimatorFailure {
                        factor: j,
                        class: value,
                        budget,
                    }
                })?;
                for (s, c) in sums.iter_mut().zip(&fit.coefficients) {
                    *s += c.abs();
                }
                classes += 1;
            }
            if classes > 0 {
                for s in &mut sums {
                    *s /= classes as f64;
                }
            }
            Ok(sums)
        })
        .collect();

    let mut importance = Mat::zeros(d, k);
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (i, &v) in col.iter().enumerate() {
            importance.set(i, j, v);
        }
    }
    Ok(importance)
}

fn sample_rows(seed: u64, tag: &str, count: usize, n: usize) -> Vec<usize> {
    let mut rng = Rng::stream(seed, tag, 0);
    (0..count).map(|_| rng.below(n)).collect()
}

/// Rows grouped per (factor, value); errors unless every value of every
/// factor has at least `needed` rows.
fn value_groups(
    factors: &FactorTable,
    needed: usize,
) -> Result<Vec<Vec<Vec<usize>>>, BaselineError> {
    let mut groups = Vec::with_capacity(factors.n_factors());
    for j in 0..factors.n_factors() {
        let by_value = factors.rows_by_value(j);
        for (v, rows) in by_value.iter().enumerate() {
            if rows.len() < needed {
                return Err(BaselineError::InsufficientSamples {
                    factor: j,
                    value: v as u32,
                    count: rows.len(),
                    needed,
                });
            }
        }
        groups.push(by_value);
    }
    Ok(groups)
}

/// BetaVAE score. One draw: fix a uniformly chosen factor to a uniformly
/// chosen value, sample two batches of representations from the matching
/// rows (with replacement, other factors free), and form the feature
/// mean_batch |z1 − z2|; the label is the fixed factor. A multinomial
/// logistic classifier is trained on `num_train` draws and scored on
/// `num_eval` fresh draws.
pub fn betavae_score(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    params: &ProtocolParams,
) -> Result<f64, BaselineError> {
    validate_pair(factors, reps)?;
    let groups = value_groups(factors, 2)?;
    let (d, k) = (reps.n_dims(), factors.n_factors());
    let total = params.num_train + params.num_eval;

    let draws: Vec<(Vec<f64>, u32)> = (0..total)
        .into_par_iter()
        .map(|draw| {
            let mut rng = Rng::stream(params.seed, "betavae", draw as u64);
            let factor = rng.below(k);
            let value = rng.below(factors.cardinalities()[factor] as usize);
            let rows = &groups[factor][value];
            let batch1: Vec<usize> = (0..params.batch_size).map(|_| rows[rng.below(rows.len())]).collect();
            let batch2: Vec<usize> = (0..params.batch_size).map(|_| rows[rng.below(rows.len())]).collect();
            let mut feature = vec![0.0f64; d];
            for (&r1, &r2) in batch1.iter().zip(&batch2) {
                let (a, b) = (reps.row(r1), reps.row(r2));
                for (f, (&x, &y)) in feature.iter_mut().zip(a.iter().zip(b)) {
                    *f += (x - y).abs();
                }
            }
            for f in &mut feature {
                *f /= params.batch_size as f64;
            }
            (feature, factor as u32)
        })
        .collect();

    let mut train_x = Vec::with_capacity(params.num_train * d);
    let mut train_y = Vec::with_capacity(params.num_train);
    let mut eval_x = Vec::with_capacity(params.num_eval * d);
    let mut eval_y = Vec::with_capacity(params.num_eval);
    for (i, (feature, label)) in draws.into_iter().enumerate() {
        if i < params.num_train {
            train_x.extend(feature);
            train_y.push(label);
        } else {
            eval_x.extend(feature);
            eval_y.push(label);
        }
    }

    let std = Standardizer::fit(&train_x, d);
    let train_x = std.transform(&train_x);
    let eval_x = std.transform(&eval_x);
    let model = LogisticModel::fit(&train_x, d, &train_y, k, LogRegConfig::default());
    Ok(model.accuracy(&eval_x, &eval_y))
}

/// Active dimensions under the FactorVAE prune rule: a dimension survives
/// when the population variance of its std-normalized values is at least
/// the threshold. Dimensions with zero spread normalize to zero and are
/// always pruned.
pub fn factorvae_active_dims(reps: &RepresentationMatrix, threshold: f64) -> (Vec<bool>, Vec<f64>) {
    let (n, d) = (reps.n_rows(), reps.n_dims());
    let mut mean = vec![0.0f64; d];
    for row in 0..n {
        for (m, &v) in mean.iter_mut().zip(reps.row(row)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0f64; d];
    for row in 0..n {
        for (j, &v) in reps.row(row).iter().enumerate() {
            let diff = v - mean[j];
            var[j] += diff * diff;
        }
    }
    for v in &mut var {
        *v /= n as f64;
    }
    let active = var
        .iter()
        .map(|&v| {
            // Var(x / std(x)) is exactly Var(x)/Var(x); zero-spread
            // dimensions are defined to normalize to zero.
            let normalized_var = if v > 0.0 { 1.0 } else { 0.0 };
            normalized_var >= threshold
        })
        .collect();
    (active, var)
}

/// FactorVAE score: majority-vote classifier from the argmin-variance
/// active dimension of a fixed-factor batch to the fixed factor.
pub fn factorvae_score(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    params: &ProtocolParams,
) -> Result<f64, BaselineError> {
    validate_pair(factors, reps)?;
    let groups = value_groups(factors, 2)?;
    let (d, k) = (reps.n_dims(), factors.n_factors());
    let (active, global_var) = factorvae_active_dims(reps, params.prune_threshold);
    if active.iter().all(|&a| !a) {
        return Err(BaselineError::AllDimensionsPruned);
    }
    let total = params.num_train + params.num_eval;

    let votes: Vec<(usize, u32)> = (0..total)
        .into_par_iter()
        .map(|draw| {
            let mut rng = Rng::stream(params.seed, "factorvae", draw as u64);
            let factor = rng.below(k);
            let value = rng.below(factors.cardinalities()[factor] as usize);
            let rows = &groups[factor][value];
            let batch: Vec<usize> = (0..params.batch_size).map(|_| rows[rng.below(rows.len())]).collect();

            let mut best_dim = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            for dim in 0..d {
                if !active[dim] {
                    continue;
                }
                let mut sum = 0.0;
                let mut sq = 0.0;
                for &r in &batch {
                    let v = reps.at(r, dim);
                    sum += v;
                    sq += v * v;
                }
                let n = params.batch_size as f64;
                let mean = sum / n;
                let var = (sq / n - mean * mean).max(0.0);
                let ratio = var / global_var[dim];
                if ratio < best_ratio {
                    best_ratio = ratio;
                    best_dim = dim;
                }
            }
            (best_dim, factor as u32)
        })
        .collect();

    // Majority table from the training votes; unvisited dims predict
    // factor 0, argmax ties go to the lowest factor index.
    let mut counts = vec![vec![0u64; k]; d];
    for &(dim, factor) in votes.iter().take(params.num_train) {
        counts[dim][factor as usize] += 1;
    }
    let classifier: Vec<u32> = counts
        .iter()
        .map(|per_factor| {
            let mut best = 0usize;
            for (f, &c) in per_factor.iter().enumerate() {
                if c > per_factor[best] {
                    best = f;
                }
            }
            best as u32
        })
        .collect();

    let eval = &votes[params.num_train..];
    let correct = eval
        .iter()
        .filter(|&&(dim, factor)| classifier[dim] == factor)
        .count();
    Ok(correct as f64 / eval.len() as f64)
}

/// Mean multinomial-logistic eval accuracy over factors, trained on the
/// full representation with a seeded 80/20 row split.
pub fn downstream_logistic(
    reps: &RepresentationMatrix,
    factors: &FactorTable,
    params: &ProtocolParams,
) -> Result<f64, BaselineError> {
    validate_pair(factors, reps)?;
    let n = factors.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Rng::stream(params.seed, "downstream", 0);
    rng.shuffle(&mut order);
    let n_train = (n * 4) / 5;
    if n_train == 0 || n_train == n {
        return Err(BaselineError::TooFewRows { rows: n });
    }
    let (train_rows, eval_rows) = order.split_at(n_train);

    let d = reps.n_dims();
    let mut train_x = Vec::with_capacity(train_rows.len() * d);
    for &r in train_rows {
        train_x.extend_from_slice(reps.row(r));
    }
    let mut eval_x = Vec::with_capacity(eval_rows.len() * d);
    for &r in eval_rows {
        eval_x.extend_from_slice(reps.row(r));
    }
    let std = Standardizer::fit(&train_x, d);
    let train_x = std.transform(&train_x);
    let eval_x = std.transform(&eval_x);

    let mut total = 0.0;
    for j in 0..factors.n_factors() {
        let train_y: Vec<u32> = train_rows.iter().map(|&r| factors.value(r, j)).collect();
        let eval_y: Vec<u32> = eval_rows.iter().map(|&r| factors.value(r, j)).collect();
        let mut seen = vec![false; factors.cardinalities()[j] as usize];
        for &y in &train_y {
            seen[y as usize] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(BaselineError::DegenerateFactor { factor: j });
        }
        let model = LogisticModel::fit(
            &train_x,
            d,
            &train_y,
            factors.cardinalities()[j] as usize,
            LogRegConfig::default(),
        );
        total += model.accuracy(&eval_x, &eval_y);
    }
    Ok(total / factors.n_factors() as f64)
}
