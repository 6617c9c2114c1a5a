//! Adversarial two-factor scenarios with closed-form oracles.
//!
//! Each scenario draws two independent uniform binary factors v0, v1 and
//! builds the latent code by a fixed linear rule:
//!
//! * `duplicated`    — c_i = v_{i mod 2}; every dimension is a perfect copy
//!   of one factor. MED = 1 for any D while gap-based metrics collapse to 0.
//! * `copy-average`  — c_0 = v0, c_1 = v1, c_i = (v0+v1)/2 for i ≥ 2.
//!   MED = 1 − (D−2)/D · ln 2.
//! * `weighted-mix`  — c_0 = v0/3 + 2v1/3, c_1 = v1/3 + 2v0/3, rest the
//!   average. Every dimension is entangled; MED = 1 − ln 2 for any D ≥ 2.
//!
//! Generation enumerates the four factor combinations exhaustively (times a
//! replication count), so the empirical contingency tables are exact and
//! the metric values meet the closed forms to floating-point accuracy — the
//! oracle comparisons are equality tests, not statistical ones.
//!
//! The simplified sparsity-2 DCI model scores an importance matrix that
//! keeps rows 0 and 1 one-hot and gives weight 1/2 to one random extra
//! dimension per factor (d_0, d_1 drawn uniformly from [2, D)). Two curves
//! are emitted side by side and never merged:
//!
//! * `dci-formula` — the expectation of Σρ·S computed from the model, whose
//!   equal-dims case evaluates to 1 − ln2/3;
//! * `dci-paper`   — the closed form 1 − ln2/(D−2), which presumes an
//!   equal-dims case value of 1 − ln2.

use thiserror::Error;

use crate::baselines::dci_from_importance;
use crate::data::{DataError, FactorTable, Mat, RepresentationMatrix};
use crate::med::{med_score, MedError};
use crate::mi::EntropyBase;
use crate::rng::Rng;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("closed forms hold for the natural entropy base only")]
    UnsupportedBase,
    #[error("invalid scenario: {0}")]
    BadSpec(String),
    #[error("metric {metric} does not apply to scenario {kind}")]
    InvalidMetric { metric: String, kind: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Med(#[from] MedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Duplicated,
    CopyAverage,
    WeightedMix,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::Duplicated => "duplicated",
            ScenarioKind::CopyAverage => "copy-average",
            ScenarioKind::WeightedMix => "weighted-mix",
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        match text {
            "duplicated" => Ok(ScenarioKind::Duplicated),
            "copy-average" => Ok(ScenarioKind::CopyAverage),
            "weighted-mix" => Ok(ScenarioKind::WeightedMix),
            other => Err(ScenarioError::BadSpec(format!(
                "unknown scenario kind '{other}' (duplicated, copy-average, weighted-mix)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub dims: usize,
    pub replication: usize,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, dims: usize, replication: usize) -> Result<Self, ScenarioError> {
        let min_dims = match kind {
            ScenarioKind::CopyAverage => 3,
            _ => 2,
        };
        if dims < min_dims {
            return Err(ScenarioError::BadSpec(format!(
                "{} needs D >= {min_dims}, got {dims}",
                kind.label()
            )));
        }
        if replication == 0 {
            return Err(ScenarioError::BadSpec("replication must be >= 1".into()));
        }
        Ok(ScenarioSpec {
            kind,
            dims,
            replication,
        })
    }

    fn code(&self, v0: f64, v1: f64, dim: usize) -> f64 {
        match self.kind {
            ScenarioKind::Duplicated => {
                if dim % 2 == 0 {
                    v0
                } else {
                    v1
                }
            }
            ScenarioKind::CopyAverage => match dim {
                0 => v0,
                1 => v1,
                _ => (v0 + v1) / 2.0,
            },
            ScenarioKind::WeightedMix => match dim {
                0 => v0 / 3.0 + 2.0 * v1 / 3.0,
                1 => v1 / 3.0 + 2.0 * v0 / 3.0,
                _ => (v0 + v1) / 2.0,
            },
        }
    }
}

/// Exhaustive enumeration of the four factor combinations, each repeated
/// `replication` times, with representations computed exactly per formula.
pub fn generate(spec: &ScenarioSpec) -> (FactorTable, RepresentationMatrix) {
    let mut factor_values = Vec::with_capacity(4 * spec.replication * 2);
    let mut rep_values = Vec::with_capacity(4 * spec.replication * spec.dims);
    for v0 in 0..2u32 {
        for v1 in 0..2u32 {
            for _ in 0..spec.replication {
                factor_values.push(v0);
                factor_values.push(v1);
                for dim in 0..spec.dims {
                    rep_values.push(spec.code(v0 as f64, v1 as f64, dim));
                }
            }
        }
    }
    let factors = FactorTable::new(
        vec!["f0".into(), "f1".into()],
        vec![2, 2],
        factor_values,
    )
    .expect("scenario table is valid by construction");
    let reps = RepresentationMatrix::new(spec.dims, rep_values)
        .expect("scenario code is finite by construction");
    (factors, reps)
}

/// Closed-form MED for a scenario (natural base only).
pub fn analytic_med(spec: &ScenarioSpec, base: EntropyBase) -> Result<f64, ScenarioError> {
    if base != EntropyBase::Natural {
        return Err(ScenarioError::UnsupportedBase);
    }
    let d = spec.dims as f64;
    Ok(match spec.kind {
        ScenarioKind::Duplicated => 1.0,
        ScenarioKind::CopyAverage => 1.0 - (d - 2.0) / d * LN_2,
        ScenarioKind::WeightedMix => 1.0 - LN_2,
    })
}

/// |∂c_i/∂v_j| for the scenario's code, the analytic-derivative importance
/// source for DCI.
pub fn derivative_importance(spec: &ScenarioSpec) -> Mat {
    Mat::from_fn(spec.dims, 2, |dim, j| match spec.kind {
        ScenarioKind::Duplicated => {
            if dim % 2 == j {
                1.0
            } else {
                0.0
            }
        }
        ScenarioKind::CopyAverage => match dim {
            0 | 1 => {
                if dim == j {
                    1.0
                } else {
                    0.0
                }
            }
            _ => 0.5,
        },
        ScenarioKind::WeightedMix => match dim {
            0 => {
                if j == 0 {
                    1.0 / 3.0
                } else {
                    2.0 / 3.0
                }
            }
            1 => {
                if j == 0 {
                    2.0 / 3.0
                } else {
                    1.0 / 3.0
                }
            }
            _ => 0.5,
        },
    })
}

/// One draw of the simplified sparsity-2 DCI model on the copy-average
/// code: rows 0 and 1 keep importance 1 on their factor, dimension `d0`
/// gets 1/2 on factor 0 and `d1` gets 1/2 on factor 1, everything else 0.
/// Scored by the same Σρ(1−H) rule as every other DCI computation here.
pub fn simplified_dci_case(dims: usize, d0: usize, d1: usize, base: EntropyBase) -> f64 {
    assert!(dims >= 3 && (2..dims).contains(&d0) && (2..dims).contains(&d1));
    let mut importance = Mat::zeros(dims, 2);
    importance.set(0, 0, 1.0);
    importance.set(1, 1, 1.0);
    importance.set(d0, 0, importance.at(d0, 0) + 0.5);
    importance.set(d1, 1, importance.at(d1, 1) + 0.5);
    dci_from_importance(&importance, base)
}

/// How the simplified-DCI distribution is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DciMode {
    /// Exact average over all (d_0, d_1) pairs.
    Enumerate,
    /// Monte Carlo over `trials` independent draws.
    Sample { seed: u64, trials: usize },
}

/// Distribution summary of the simplified DCI score: the mean and the
/// distinct case values with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedDci {
    pub mean: f64,
    pub cases: Vec<(f64, u64)>,
}

/// Simplified sparsity-2 DCI on the copy-average scenario.
///
/// The case value depends only on whether d_0 = d_1, so enumerate mode
/// collapses the (D−2)² pairs into the two case classes; a test checks the
/// collapse against the literal pairwise loop.
pub fn simplified_dci(dims: usize, mode: DciMode, base: EntropyBase) -> Result<SimplifiedDci, ScenarioError> {
    if dims < 3 {
        return Err(ScenarioError::BadSpec(format!(
            "simplified DCI needs D >= 3, got {dims}"
        )));
    }
    let choices = (dims - 2) as u64;
    match mode {
        DciMode::Enumerate => {
            let equal_value = simplified_dci_case(dims, 2, 2, base);
            let mut cases = vec![(equal_value, choices)];
            let mut total = equal_value * choices as f64;
            if dims >= 4 {
                let distinct_value = simplified_dci_case(dims, 2, 3, base);
                let distinct_count = choices * (choices - 1);
                cases.push((distinct_value, distinct_count));
                total += distinct_value * distinct_count as f64;
            }
            Ok(SimplifiedDci {
                mean: total / (choices * choices) as f64,
                cases,
            })
        }
        DciMode::Sample { seed, trials } => {
            if trials == 0 {
                return Err(ScenarioError::BadSpec("trials must be >= 1".into()));
            }
            let mut sum = 0.0;
            let mut case_map: Vec<(f64, u64)> = Vec::new();
            for trial in 0..trials {
                let mut rng = Rng::stream(seed, "scenarios.simplified-dci", trial as u64);
                let d0 = 2 + rng.below(dims - 2);
                let d1 = 2 + rng.below(dims - 2);
                let value = simplified_dci_case(dims, d0, d1, base);
                sum += value;
                match case_map.iter_mut().find(|(v, _)| v.to_bits() == value.to_bits()) {
                    Some((_, count)) => *count += 1,
                    None => case_map.push((value, 1)),
                }
            }
            case_map.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            Ok(SimplifiedDci {
                mean: sum / trials as f64,
                cases: case_map,
            })
        }
    }
}

/// The paper-stated expectation curve 1 − ln2/(D−2) (natural base), which
/// assumes the equal-dims case value 1 − ln2.
pub fn paper_dci_expectation(dims: usize) -> Result<f64, ScenarioError> {
    if dims < 3 {
        return Err(ScenarioError::BadSpec(format!(
            "the expectation curve needs D >= 3, got {dims}"
        )));
    }
    Ok(1.0 - LN_2 / (dims as f64 - 2.0))
}

/// Metrics a sweep can tabulate per (kind, D) point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    /// MED computed through the full pipeline on generated data.
    Med,
    /// The closed-form MED value.
    MedAnalytic,
    /// Enumerate-mode mean of the simplified DCI model (Σρ·S case values).
    DciFormula,
    /// The paper-stated expectation 1 − ln2/(D−2).
    DciPaper,
}

impl SweepMetric {
    pub fn label(self) -> &'static str {
        match self {
            SweepMetric::Med => "med",
            SweepMetric::MedAnalytic => "med-analytic",
            SweepMetric::DciFormula => "dci-formula",
            SweepMetric::DciPaper => "dci-paper",
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        match text {
            "med" => Ok(SweepMetric::Med),
            "med-analytic" => Ok(SweepMetric::MedAnalytic),
            "dci-formula" => Ok(SweepMetric::DciFormula),
            "dci-paper" => Ok(SweepMetric::DciPaper),
            other => Err(ScenarioError::BadSpec(format!(
                "unknown sweep metric '{other}' (med, med-analytic, dci-formula, dci-paper)"
            ))),
        }
    }
}

/// One sweep table row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: ScenarioKind,
    pub dims: usize,
    pub metric: &'static str,
    pub value: f64,
}

/// Tabulates metric values across latent dimensions for one scenario kind.
/// The DCI curves apply to the copy-average scenario only.
pub fn sweep(
    kind: ScenarioKind,
    dims_list: &[usize],
    metrics: &[SweepMetric],
    replication: usize,
    bins: u32,
    base: EntropyBase,
) -> Result<Vec<SweepRow>, ScenarioError> {
    let mut rows = Vec::with_capacity(dims_list.len() * metrics.len());
    for &dims in dims_list {
        let spec = ScenarioSpec::new(kind, dims, replication)?;
        for &metric in metrics {
            let value = match metric {
                SweepMetric::Med => {
                    let (factors, reps) = generate(&spec);
                    med_score(&reps, &factors, bins, base)?
                }
                SweepMetric::MedAnalytic => analytic_med(&spec, base)?,
                SweepMetric::DciFormula | SweepMetric::DciPaper => {
                    if kind != ScenarioKind::CopyAverage {
                        return Err(ScenarioError::InvalidMetric {
                            metric: metric.label().to_string(),
                            kind: kind.label().to_string(),
                        });
                    }
                    match metric {
                        SweepMetric::DciFormula => {
                            simplified_dci(dims, DciMode::Enumerate, base)?.mean
                        }
                        _ => paper_dci_expectation(dims)?,
                    }
                }
            };
            rows.push(SweepRow {
                kind,
                dims,
                metric: metric.label(),
                value,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{mig, sap, ProtocolParams};

    fn spec(kind: ScenarioKind, dims: usize) -> ScenarioSpec {
        ScenarioSpec::new(kind, dims, 1).unwrap()
    }

    #[test]
    fn generate_duplicated_rows() {
        let (factors, reps) = generate(&spec(ScenarioKind::Duplicated, 4));
        assert_eq!(factors.n_rows(), 4);
        for row in 0..4 {
            let (v0, v1) = (factors.value(row, 0) as f64, factors.value(row, 1) as f64);
            assert_eq!(reps.row(row), &[v0, v1, v0, v1]);
        }
    }

    #[test]
    fn generate_copy_average_third_column() {
        let (_, reps) = generate(&spec(ScenarioKind::CopyAverage, 3));
        for row in 0..4 {
            let v = reps.at(row, 2);
            assert!(v == 0.0 || v == 0.5 || v == 1.0, "got {v}");
        }
    }

    #[test]
    fn generate_weighted_mix_columns() {
        let (factors, reps) = generate(&spec(ScenarioKind::WeightedMix, 2));
        for row in 0..4 {
            let (v0, v1) = (factors.value(row, 0) as f64, factors.value(row, 1) as f64);
            assert_eq!(reps.at(row, 0), v0 / 3.0 + 2.0 * v1 / 3.0);
            assert_eq!(reps.at(row, 1), v1 / 3.0 + 2.0 * v0 / 3.0);
        }
    }

    #[test]
    fn generate_respects_replication() {
        let s = ScenarioSpec::new(ScenarioKind::Duplicated, 2, 5).unwrap();
        let (factors, reps) = generate(&s);
        assert_eq!(factors.n_rows(), 20);
        assert_eq!(reps.n_rows(), 20);
    }

    #[test]
    fn spec_validation() {
        assert!(ScenarioSpec::new(ScenarioKind::CopyAverage, 2, 1).is_err());
        assert!(ScenarioSpec::new(ScenarioKind::Duplicated, 1, 1).is_err());
        assert!(ScenarioSpec::new(ScenarioKind::Duplicated, 2, 0).is_err());
    }

    #[test]
    fn analytic_values() {
        assert_eq!(
            analytic_med(&spec(ScenarioKind::Duplicated, 500), EntropyBase::Natural).unwrap(),
            1.0
        );
        let v = analytic_med(&spec(ScenarioKind::CopyAverage, 1000), EntropyBase::Natural).unwrap();
        assert!((v - 0.30823911380117464).abs() < 1e-15);
        let v = analytic_med(&spec(ScenarioKind::WeightedMix, 7), EntropyBase::Natural).unwrap();
        assert!((v - 0.3068528194400547).abs() < 1e-15);
        assert_eq!(
            analytic_med(&spec(ScenarioKind::Duplicated, 4), EntropyBase::BaseK(2)).unwrap_err(),
            ScenarioError::UnsupportedBase
        );
    }

    // Exact enumeration makes the pipeline meet the closed form to fp
    // accuracy for every kind and a range of D.
    #[test]
    fn generated_med_matches_analytic() {
        let cases = [
            (ScenarioKind::Duplicated, vec![2usize, 3, 4, 10, 100]),
            (ScenarioKind::CopyAverage, vec![3, 4, 10, 100]),
            (ScenarioKind::WeightedMix, vec![2, 3, 10, 100]),
        ];
        for (kind, dims_list) in cases {
            for dims in dims_list {
                let s = spec(kind, dims);
                let (factors, reps) = generate(&s);
                let med = med_score(&reps, &factors, 20, EntropyBase::Natural).unwrap();
                let oracle = analytic_med(&s, EntropyBase::Natural).unwrap();
                assert!(
                    (med - oracle).abs() < 1e-9,
                    "{} D={dims}: med={med} oracle={oracle}",
                    kind.label()
                );
            }
        }
    }

    #[test]
    fn duplicated_fools_gap_metrics_simultaneously() {
        let s = ScenarioSpec::new(ScenarioKind::Duplicated, 6, 8).unwrap();
        let (factors, reps) = generate(&s);
        let med = med_score(&reps, &factors, 20, EntropyBase::Natural).unwrap();
        let mig_score = mig(&reps, &factors, 20, EntropyBase::Natural).unwrap();
        let mut params = ProtocolParams::new(0);
        params.num_train = 1000;
        params.num_eval = 500;
        let sap_score = sap(&reps, &factors, &params).unwrap();
        assert_eq!(med, 1.0);
        assert_eq!(mig_score, 0.0);
        assert!(sap_score.abs() < 1e-12);
    }

    #[test]
    fn simplified_dci_distinct_dims_is_exactly_one() {
        for dims in [4usize, 10, 100] {
            for (d0, d1) in [(2, 3), (3, 2), (2, dims - 1)] {
                assert_eq!(simplified_dci_case(dims, d0, d1, EntropyBase::Natural), 1.0);
            }
        }
    }

    #[test]
    fn simplified_dci_equal_dims_formula_value() {
        // The defining formula gives 1 - ln2/3 for the equal-dims case
        // (the paper states 1 - ln2 here; both curves are emitted).
        for dims in [3usize, 10, 1000] {
            let v = simplified_dci_case(dims, 2, 2, EntropyBase::Natural);
            assert!((v - (1.0 - LN_2 / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn simplified_dci_enumerate_collapse_matches_pairwise_loop() {
        for dims in [3usize, 5, 8] {
            let collapsed = simplified_dci(dims, DciMode::Enumerate, EntropyBase::Natural).unwrap();
            let mut total = 0.0;
            let mut count = 0u64;
            for d0 in 2..dims {
                for d1 in 2..dims {
                    total += simplified_dci_case(dims, d0, d1, EntropyBase::Natural);
                    count += 1;
                }
            }
            let brute_mean = total / count as f64;
            assert!((collapsed.mean - brute_mean).abs() < 1e-12, "D={dims}");
            let case_total: u64 = collapsed.cases.iter().map(|&(_, c)| c).sum();
            assert_eq!(case_total, count);
        }
    }

    #[test]
    fn simplified_dci_enumerate_is_seedless_and_sample_converges() {
        let enumerate = simplified_dci(10, DciMode::Enumerate, EntropyBase::Natural).unwrap();
        // 3 sigma of the sample mean from the exact case distribution.
        let p = 1.0 / 8.0;
        let (v_eq, v_neq) = (1.0 - LN_2 / 3.0, 1.0);
        let mean = p * v_eq + (1.0 - p) * v_neq;
        let var = p * (v_eq - mean).powi(2) + (1.0 - p) * (v_neq - mean).powi(2);
        let trials = 10_000;
        let tolerance = 3.0 * (var / trials as f64).sqrt();
        let sampled = simplified_dci(
            10,
            DciMode::Sample { seed: 0, trials },
            EntropyBase::Natural,
        )
        .unwrap();
        assert!(
            (sampled.mean - enumerate.mean).abs() < tolerance,
            "sampled {} vs enumerated {} (tol {tolerance})",
            sampled.mean,
            enumerate.mean
        );
    }

    #[test]
    fn paper_curve_values() {
        let v = paper_dci_expectation(1000).unwrap();
        assert!((v - 0.999305463746934).abs() < 1e-12);
        let v = paper_dci_expectation(3).unwrap();
        assert!((v - (1.0 - LN_2)).abs() < 1e-15);
    }

    #[test]
    fn sweep_reproduces_divergence() {
        let dims = [3usize, 10, 100, 1000];
        let rows = sweep(
            ScenarioKind::CopyAverage,
            &dims,
            &[SweepMetric::Med, SweepMetric::DciFormula, SweepMetric::DciPaper],
            1,
            20,
            EntropyBase::Natural,
        )
        .unwrap();
        assert_eq!(rows.len(), 12);
        let series = |metric: &str| -> Vec<f64> {
            rows.iter()
                .filter(|r| r.metric == metric)
                .map(|r| r.value)
                .collect()
        };
        let med = series("med");
        let formula = series("dci-formula");
        let paper = series("dci-paper");
        for w in med.windows(2) {
            assert!(w[1] < w[0], "MED should decrease: {med:?}");
        }
        for curve in [&formula, &paper] {
            for w in curve.windows(2) {
                assert!(w[1] > w[0], "DCI curves should increase");
            }
            assert!(curve.last().unwrap() > &0.99);
        }
    }

    #[test]
    fn sweep_single_point_and_kind_checks() {
        let rows = sweep(
            ScenarioKind::WeightedMix,
            &[5],
            &[SweepMetric::Med],
            1,
            20,
            EntropyBase::Natural,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert!(matches!(
            sweep(
                ScenarioKind::Duplicated,
                &[5],
                &[SweepMetric::DciFormula],
                1,
                20,
                EntropyBase::Natural,
            ),
            Err(ScenarioError::InvalidMetric { .. })
        ));
    }

    #[test]
    fn derivative_importance_shapes() {
        let m = derivative_importance(&spec(ScenarioKind::CopyAverage, 5));
        assert_eq!((m.rows(), m.cols()), (5, 2));
        assert_eq!(m.at(0, 0), 1.0);
        assert_eq!(m.at(0, 1), 0.0);
        assert_eq!(m.at(4, 0), 0.5);
        let m = derivative_importance(&spec(ScenarioKind::WeightedMix, 3));
        assert!((m.at(0, 1) - 2.0 / 3.0).abs() < 1e-15);
    }
}
