//! Shared data model: factor tables, representation matrices, metric reports.
//!
//! A dataset is a pair of row-aligned tables: a `FactorTable` holding the
//! N×K integer ground-truth factor assignments, and a `RepresentationMatrix`
//! holding the N×D real-valued latent codes produced by some encoder. All
//! metrics consume a validated pair. Types are immutable after construction
//! and safe to share across threads; every operation on them is a pure
//! function.

use std::collections::BTreeMap;

use thiserror::Error;

/// Errors raised by the data model and pair validation.
#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("row count mismatch: factor table has {factors} rows, representation has {reps}")]
    RowMismatch { factors: usize, reps: usize },
    #[error("factor value out of range at row {row}, factor {factor}: {value} >= cardinality {cardinality}")]
    FactorOutOfRange {
        row: usize,
        factor: usize,
        value: u32,
        cardinality: u32,
    },
    #[error("non-finite representation value at row {row}, dimension {dim}")]
    NonFiniteValue { row: usize, dim: usize },
    #[error("index out of range: {what} {index} (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Dense row-major f64 matrix. Minimal by design; metric code needs
/// row/column access and nothing fancier.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, DataError> {
        if data.len() != rows * cols {
            return Err(DataError::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn col(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.at(r, col)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// N×K table of ground-truth factor assignments.
///
/// Every entry in column `j` is a nonnegative integer strictly below
/// `cardinalities[j]`. Factor values are stored as integers; continuous
/// factors must be discretized by the caller before construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorTable {
    values: Vec<u32>, // row-major N×K
    names: Vec<String>,
    cardinalities: Vec<u32>,
    n_rows: usize,
}

impl FactorTable {
    /// `values` is row-major with `names.len()` columns.
    pub fn new(
        names: Vec<String>,
        cardinalities: Vec<u32>,
        values: Vec<u32>,
    ) -> Result<Self, DataError> {
        let k = names.len();
        if k == 0 {
            return Err(DataError::ShapeMismatch("factor table needs K >= 1".into()));
        }
        if cardinalities.len() != k {
            return Err(DataError::ShapeMismatch(format!(
                "{} names but {} cardinalities",
                k,
                cardinalities.len()
            )));
        }
        if cardinalities.iter().any(|&c| c == 0) {
            return Err(DataError::ShapeMismatch(
                "cardinalities must be positive".into(),
            ));
        }
        if values.is_empty() || values.len() % k != 0 {
            return Err(DataError::ShapeMismatch(format!(
                "value count {} is not a positive multiple of K={}",
                values.len(),
                k
            )));
        }
        let n_rows = values.len() / k;
        for (idx, &v) in values.iter().enumerate() {
            let (row, factor) = (idx / k, idx % k);
            if v >= cardinalities[factor] {
                return Err(DataError::FactorOutOfRange {
                    row,
                    factor,
                    value: v,
                    cardinality: cardinalities[factor],
                });
            }
        }
        Ok(FactorTable {
            values,
            names,
            cardinalities,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_factors(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cardinalities(&self) -> &[u32] {
        &self.cardinalities
    }

    #[inline]
    pub fn value(&self, row: usize, factor: usize) -> u32 {
        self.values[row * self.names.len() + factor]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        let k = self.names.len();
        &self.values[row * k..(row + 1) * k]
    }

    pub fn column(&self, factor: usize) -> Vec<u32> {
        (0..self.n_rows).map(|r| self.value(r, factor)).collect()
    }

    /// Row indices grouped by value for one factor, ascending within each
    /// group. Index `v` of the result holds the rows where the factor is `v`.
    pub fn rows_by_value(&self, factor: usize) -> Vec<Vec<usize>> {
        let card = self.cardinalities[factor] as usize;
        let mut groups = vec![Vec::new(); card];
        for row in 0..self.n_rows {
            groups[self.value(row, factor) as usize].push(row);
        }
        groups
    }

    /// Multiplicity of each complete factor combination, keyed by the row's
    /// factor vector. Used by grid checks.
    pub fn combination_counts(&self) -> BTreeMap<Vec<u32>, usize> {
        let mut counts = BTreeMap::new();
        for row in 0..self.n_rows {
            *counts.entry(self.row(row).to_vec()).or_insert(0) += 1;
        }
        counts
    }
}

/// N×D matrix of latent codes, row-aligned with a `FactorTable`.
/// All entries are finite; construction rejects NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    mat: Mat,
}

impl RepresentationMatrix {
    /// `values` is row-major with `n_dims` columns.
    pub fn new(n_dims: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if n_dims == 0 {
            return Err(DataError::ShapeMismatch(
                "representation needs D >= 1".into(),
            ));
        }
        if values.is_empty() || values.len() % n_dims != 0 {
            return Err(DataError::ShapeMismatch(format!(
                "value count {} is not a positive multiple of D={}",
                values.len(),
                n_dims
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue {
                    row: idx / n_dims,
                    dim: idx % n_dims,
                });
            }
        }
        let rows = values.len() / n_dims;
        Ok(RepresentationMatrix {
            mat: Mat::from_vec(rows, n_dims, values).expect("length checked"),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn n_dims(&self) -> usize {
        self.mat.cols()
    }

    #[inline]
    pub fn at(&self, row: usize, dim: usize) -> f64 {
        self.mat.at(row, dim)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        self.mat.row(row)
    }

    pub fn column(&self, dim: usize) -> Vec<f64> {
        self.mat.col(dim)
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    /// New matrix keeping only the listed dimensions, in the given order.
    pub fn select_dims(&self, dims: &[usize]) -> Result<RepresentationMatrix, DataError> {
        for &d in dims {
            if d >= self.n_dims() {
                return Err(DataError::IndexOutOfRange {
                    what: "dimension",
                    index: d,
                    limit: self.n_dims(),
                });
            }
        }
        if dims.is_empty() {
            return Err(DataError::ShapeMismatch(
                "dimension selection must be non-empty".into(),
            ));
        }
        let mut values = Vec::with_capacity(self.n_rows() * dims.len());
        for row in 0..self.n_rows() {
            for &d in dims {
                values.push(self.at(row, d));
            }
        }
        RepresentationMatrix::new(dims.len(), values)
    }
}

/// A factor table and representation matrix whose invariants have been
/// checked together. Borrowed views only; validation never copies.
#[derive(Debug, Clone, Copy)]
pub struct ValidatedPair<'a> {
    pub factors: &'a FactorTable,
    pub reps: &'a RepresentationMatrix,
}

/// Checks that the pair is row-aligned. Per-type invariants (value ranges,
/// finiteness) already hold by construction, so this is the only cross-type
/// check. Idempotent: validating an already validated pair is a no-op.
pub fn validate_pair<'a>(
    factors: &'a FactorTable,
    reps: &'a RepresentationMatrix,
) -> Result<ValidatedPair<'a>, DataError> {
    if factors.n_rows() != reps.n_rows() {
        return Err(DataError::RowMismatch {
            factors: factors.n_rows(),
            reps: reps.n_rows(),
        });
    }
    Ok(ValidatedPair { factors, reps })
}

/// Row indices (ascending) where factor `j` takes the value `v`.
pub fn indices_with_factor_fixed(
    factors: &FactorTable,
    j: usize,
    v: u32,
) -> Result<Vec<usize>, DataError> {
    if j >= factors.n_factors() {
        return Err(DataError::IndexOutOfRange {
            what: "factor",
            index: j,
            limit: factors.n_factors(),
        });
    }
    if v >= factors.cardinalities()[j] {
        return Err(DataError::IndexOutOfRange {
            what: "factor value",
            index: v as usize,
            limit: factors.cardinalities()[j] as usize,
        });
    }
    Ok((0..factors.n_rows())
        .filter(|&row| factors.value(row, j) == v)
        .collect())
}

/// One metric's outcome over a set of seeds.
///
/// Scores are held in [0,1] (clamped on construction); scaling to the 0-100
/// display convention happens only when formatting. Mean and standard
/// deviation are the arithmetic mean and population std of the stored
/// scores, recomputed here rather than trusted from the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    name: String,
    scores: Vec<f64>,
    mean: f64,
    std: f64,
    parameters: BTreeMap<String, String>,
}

impl MetricReport {
    pub fn new(
        name: impl Into<String>,
        scores: Vec<f64>,
        parameters: BTreeMap<String, String>,
    ) -> Self {
        let scores: Vec<f64> = scores.iter().map(|s| s.clamp(0.0, 1.0)).collect();
        let (mean, std) = mean_and_population_std(&scores);
        MetricReport {
            name: name.into(),
            scores,
            mean,
            std,
            parameters,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn parameters(&self) -> &BTreeMap<String, String> {
        &self.parameters
    }

    /// "mean (std)" on the 0-100 scale with one decimal, e.g. "31.3 (0.4)".
    pub fn display(&self) -> String {
        format!("{:.1} ({:.1})", self.mean * 100.0, self.std * 100.0)
    }
}

pub(crate) fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_2x2(values: Vec<u32>) -> FactorTable {
        FactorTable::new(
            vec!["f0".into(), "f1".into()],
            vec![2, 2],
            values,
        )
        .unwrap()
    }

    #[test]
    fn validate_pair_accepts_matching_rows() {
        let factors = table_2x2(vec![0, 0, 0, 1, 1, 0, 1, 1]);
        let reps = RepresentationMatrix::new(3, vec![0.0; 12]).unwrap();
        assert!(validate_pair(&factors, &reps).is_ok());
    }

    #[test]
    fn validate_pair_rejects_row_mismatch() {
        let factors = table_2x2(vec![0, 0, 0, 1, 1, 0, 1, 1]);
        let reps = RepresentationMatrix::new(3, vec![0.0; 15]).unwrap();
        assert_eq!(
            validate_pair(&factors, &reps).unwrap_err(),
            DataError::RowMismatch { factors: 4, reps: 5 }
        );
    }

    #[test]
    fn factor_out_of_range_at_boundary() {
        let err = FactorTable::new(
            vec!["f".into()],
            vec![3],
            vec![0, 3],
        )
        .unwrap_err();
        assert_eq!(
            err,
            DataError::FactorOutOfRange {
                row: 1,
                factor: 0,
                value: 3,
                cardinality: 3
            }
        );
    }

    #[test]
    fn representation_rejects_non_finite() {
        let err = RepresentationMatrix::new(2, vec![0.0, f64::NAN]).unwrap_err();
        assert_eq!(err, DataError::NonFiniteValue { row: 0, dim: 1 });
        let err = RepresentationMatrix::new(1, vec![f64::INFINITY]).unwrap_err();
        assert_eq!(err, DataError::NonFiniteValue { row: 0, dim: 0 });
    }

    #[test]
    fn indices_with_factor_fixed_filters() {
        let factors = table_2x2(vec![0, 0, 1, 0, 0, 1, 1, 1]);
        // column 0 = [0,1,0,1]
        assert_eq!(indices_with_factor_fixed(&factors, 0, 0).unwrap(), vec![0, 2]);
        assert_eq!(indices_with_factor_fixed(&factors, 0, 1).unwrap(), vec![1, 3]);
    }

    #[test]
    fn indices_with_factor_fixed_empty_when_value_absent() {
        let factors = FactorTable::new(vec!["f".into()], vec![4], vec![0, 0, 1]).unwrap();
        assert_eq!(indices_with_factor_fixed(&factors, 0, 3).unwrap(), Vec::<usize>::new());
    }

    // Full 2x2 grid: fixing either factor to any value selects N/cardinality
    // rows, and the value groups partition [0, N).
    #[test]
    fn indices_partition_full_grid() {
        let factors = table_2x2(vec![0, 0, 0, 1, 1, 0, 1, 1]);
        for j in 0..2 {
            let mut seen = Vec::new();
            for v in 0..2u32 {
                let idx = indices_with_factor_fixed(&factors, j, v).unwrap();
                assert_eq!(idx.len(), factors.n_rows() / 2);
                seen.extend(idx);
            }
            seen.sort_unstable();
            assert_eq!(seen, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn index_errors() {
        let factors = table_2x2(vec![0, 0]);
        assert!(matches!(
            indices_with_factor_fixed(&factors, 2, 0),
            Err(DataError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            indices_with_factor_fixed(&factors, 0, 7),
            Err(DataError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn report_recomputes_mean_and_std_and_clamps() {
        let report = MetricReport::new("med", vec![0.3, 0.35, 1.2, -0.1], BTreeMap::new());
        assert_eq!(report.scores(), &[0.3, 0.35, 1.0, 0.0]);
        let (mean, std) = mean_and_population_std(report.scores());
        assert_eq!(report.mean(), mean);
        assert_eq!(report.std(), std);
    }

    #[test]
    fn report_display_uses_percent_scale() {
        let report = MetricReport::new("med", vec![0.313, 0.313, 0.313], BTreeMap::new());
        assert_eq!(report.display(), "31.3 (0.0)");
        let report = MetricReport::new("med", vec![0.309, 0.313, 0.317], BTreeMap::new());
        assert!(report.display().starts_with("31.3 ("));
    }

    #[test]
    fn select_dims_reorders_columns() {
        let reps = RepresentationMatrix::new(3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let sub = reps.select_dims(&[2, 0]).unwrap();
        assert_eq!(sub.row(0), &[3.0, 1.0]);
        assert_eq!(sub.row(1), &[6.0, 4.0]);
        assert!(reps.select_dims(&[]).is_err());
        assert!(reps.select_dims(&[3]).is_err());
    }
}
