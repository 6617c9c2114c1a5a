//! Synthetic factor grids and parametric encoders.
//!
//! `factor_grid` enumerates or samples a factor table from a dataset spec;
//! `encode` turns a factor table into a representation matrix through a
//! parametric encoder. Together they generate every input the property
//! tests and the random-encoder pathology experiments need, without
//! rendering a single image: representations are functions of the factors.

use thiserror::Error;

use crate::data::{DataError, FactorTable, Mat, RepresentationMatrix};
use crate::io::DatasetSpec;
use crate::rng::Rng;

/// Full grids above this many rows are refused; sample instead.
pub const MAX_FULL_GRID: usize = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("full grid would have {cells} rows (limit {MAX_FULL_GRID}); use sampling")]
    GridTooLarge { cells: usize },
    #[error("encoder shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cannot parse encoder spec: {0}")]
    Parse(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Grid construction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// The full Cartesian product in row-major factor order (later factors
    /// vary fastest).
    Full,
    /// `n` rows sampled uniformly and independently per factor.
    Sample { n: usize, seed: u64 },
}

/// Builds a factor table from a dataset spec.
pub fn factor_grid(spec: &DatasetSpec, mode: GridMode) -> Result<FactorTable, SynthError> {
    let cards = spec.cardinalities();
    let k = cards.len();
    match mode {
        GridMode::Full => {
            let cells = cards.iter().try_fold(1usize, |acc, &c| {
                let next = acc.checked_mul(c as usize)?;
                (next <= MAX_FULL_GRID).then_some(next)
            });
            let Some(cells) = cells else {
                // Saturate for the error message; the exact count may overflow.
                let approx = cards
                    .iter()
                    .fold(1usize, |acc, &c| acc.saturating_mul(c as usize));
                return Err(SynthError::GridTooLarge { cells: approx });
            };
            let mut values = Vec::with_capacity(cells * k);
            for row in 0..cells {
                let mut rem = row;
                let mut rev = vec![0u32; k];
                for j in (0..k).rev() {
                    rev[j] = (rem % cards[j] as usize) as u32;
                    rem /= cards[j] as usize;
                }
                values.extend(rev);
            }
            Ok(FactorTable::new(
                spec.factor_names().to_vec(),
                cards.to_vec(),
                values,
            )?)
        }
        GridMode::Sample { n, seed } => {
            let mut rng = Rng::stream(seed, "synthgen.sample", 0);
            let mut values = Vec::with_capacity(n * k);
            for _ in 0..n {
                for &card in cards {
                    values.push(rng.below(card as usize) as u32);
                }
            }
            Ok(FactorTable::new(
                spec.factor_names().to_vec(),
                cards.to_vec(),
                values,
            )?)
        }
    }
}

/// Optional elementwise nonlinearity after a random projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    None,
    Tanh,
}

/// The base map from factors to representation columns.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseEncoder {
    /// One column per factor, raw integer values.
    Identity,
    /// The identity columns repeated m times: c_i = v_{i mod K}.
    Duplicate(usize),
    /// factors · matrixᵀ for a D×K mixing matrix.
    LinearMix(Mat),
    /// One-hot expanded factors times a seeded Gaussian matrix. The one-hot
    /// expansion keeps every factor value representable without imposing
    /// ordinal structure on the projection.
    RandomProjection {
        dims: usize,
        seed: u64,
        nonlinearity: Nonlinearity,
    },
}

/// Columns appended after the base encoder.
#[derive(Debug, Clone, PartialEq)]
pub enum Augment {
    /// Seeded standard-normal noise columns, independent of the factors.
    AppendNoise { count: usize, seed: u64 },
    /// All-zero constant columns.
    AppendConstant { count: usize },
}

/// A base encoder plus appended columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSpec {
    pub base: BaseEncoder,
    pub augments: Vec<Augment>,
}

impl EncoderSpec {
    pub fn identity() -> Self {
        EncoderSpec {
            base: BaseEncoder::Identity,
            augments: Vec::new(),
        }
    }

    pub fn duplicate(m: usize) -> Self {
        EncoderSpec {
            base: BaseEncoder::Duplicate(m),
            augments: Vec::new(),
        }
    }

    pub fn linear_mix(matrix: Mat) -> Self {
        EncoderSpec {
            base: BaseEncoder::LinearMix(matrix),
            augments: Vec::new(),
        }
    }

    pub fn random_projection(dims: usize, seed: u64, nonlinearity: Nonlinearity) -> Self {
        EncoderSpec {
            base: BaseEncoder::RandomProjection {
                dims,
                seed,
                nonlinearity,
            },
            augments: Vec::new(),
        }
    }

    pub fn with_append_noise(mut self, count: usize, seed: u64) -> Self {
        self.augments.push(Augment::AppendNoise { count, seed });
        self
    }

    pub fn with_append_constant(mut self, count: usize) -> Self {
        self.augments.push(Augment::AppendConstant { count });
        self
    }

    /// Parses a '+'-chained encoder string, e.g.
    /// `identity`, `duplicate:2`, `random-projection:1000:tanh`,
    /// `identity+append-constant:3+append-noise:5`.
    /// Stage seeds default to `default_seed` and can be overridden with a
    /// trailing `seed=N` part.
    pub fn parse(text: &str, default_seed: u64) -> Result<Self, SynthError> {
        let mut stages = text.split('+');
        let base_text = stages
            .next()
            .ok_or_else(|| SynthError::Parse("empty encoder".into()))?;
        let mut spec = parse_base(base_text, default_seed)?;
        for stage in stages {
            let (name, args) = split_stage(stage);
            match name {
                "append-noise" => {
                    let (count, seed) = parse_count_and_seed(&args, default_seed, stage)?;
                    spec = spec.with_append_noise(count, seed);
                }
                "append-constant" => {
                    let (count, _) = parse_count_and_seed(&args, default_seed, stage)?;
                    spec = spec.with_append_constant(count);
                }
                other => {
                    return Err(SynthError::Parse(format!(
                        "'{other}' is not an append stage (use append-noise / append-constant)"
                    )))
                }
            }
        }
        Ok(spec)
    }
}

fn split_stage(stage: &str) -> (&str, Vec<&str>) {
    let mut parts = stage.split(':');
    let name = parts.next().unwrap_or("");
    (name, parts.collect())
}

fn parse_count_and_seed(
    args: &[&str],
    default_seed: u64,
    stage: &str,
) -> Result<(usize, u64), SynthError> {
    let mut count = None;
    let mut seed = default_seed;
    for arg in args {
        if let Some(s) = arg.strip_prefix("seed=") {
            seed = s
                .parse()
                .map_err(|_| SynthError::Parse(format!("bad seed in '{stage}'")))?;
        } else {
            count = Some(
                arg.parse()
                    .map_err(|_| SynthError::Parse(format!("bad count in '{stage}'")))?,
            );
        }
    }
    let count = count.ok_or_else(|| SynthError::Parse(format!("'{stage}' needs a count")))?;
    Ok((count, seed))
}

fn parse_base(text: &str, default_seed: u64) -> Result<EncoderSpec, SynthError> {
    let (name, args) = split_stage(text);
    match name {
        "identity" => Ok(EncoderSpec::identity()),
        "duplicate" => {
            let m: usize = args
                .first()
                .ok_or_else(|| SynthError::Parse("duplicate needs a count, e.g. duplicate:2".into()))?
                .parse()
                .map_err(|_| SynthError::Parse(format!("bad duplicate count in '{text}'")))?;
            Ok(EncoderSpec::duplicate(m))
        }
        "random-projection" => {
            let dims: usize = args
                .first()
                .ok_or_else(|| {
                    SynthError::Parse("random-projection needs a dimension, e.g. random-projection:1000".into())
                })?
                .parse()
                .map_err(|_| SynthError::Parse(format!("bad dimension in '{text}'")))?;
            let mut nonlinearity = Nonlinearity::None;
            let mut seed = default_seed;
            for arg in &args[1..] {
                match *arg {
                    "tanh" => nonlinearity = Nonlinearity::Tanh,
                    "none" => nonlinearity = Nonlinearity::None,
                    other => {
                        if let Some(s) = other.strip_prefix("seed=") {
                            seed = s
                                .parse()
                                .map_err(|_| SynthError::Parse(format!("bad seed in '{text}'")))?;
                        } else {
                            return Err(SynthError::Parse(format!(
                                "unknown random-projection option '{other}'"
                            )));
                        }
                    }
                }
            }
            Ok(EncoderSpec::random_projection(dims, seed, nonlinearity))
        }
        other => Err(SynthError::Parse(format!(
            "unknown encoder '{other}' (identity, duplicate:M, random-projection:D[:tanh][:seed=N])"
        ))),
    }
}

/// Applies the encoder to a factor table.
pub fn encode(factors: &FactorTable, spec: &EncoderSpec) -> Result<RepresentationMatrix, SynthError> {
    let n = factors.n_rows();
    let k = factors.n_factors();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    match &spec.base {
        BaseEncoder::Identity => {
            for j in 0..k {
                columns.push((0..n).map(|r| factors.value(r, j) as f64).collect());
            }
        }
        BaseEncoder::Duplicate(m) => {
            if *m == 0 {
                return Err(SynthError::ShapeMismatch("duplicate count must be >= 1".into()));
            }
            for i in 0..k * m {
                let j = i % k;
                columns.push((0..n).map(|r| factors.value(r, j) as f64).collect());
            }
        }
        BaseEncoder::LinearMix(matrix) => {
            if matrix.cols() != k {
                return Err(SynthError::ShapeMismatch(format!(
                    "mixing matrix has {} columns but the table has {} factors",
                    matrix.cols(),
                    k
                )));
            }
            for i in 0..matrix.rows() {
                let w = matrix.row(i);
                columns.push(
                    (0..n)
                        .map(|r| {
                            (0..k).map(|j| w[j] * factors.value(r, j) as f64).sum::<f64>()
                        })
                        .collect(),
                );
            }
        }
        BaseEncoder::RandomProjection {
            dims,
            seed,
            nonlinearity,
        } => {
            if *dims == 0 {
                return Err(SynthError::ShapeMismatch("projection needs D >= 1".into()));
            }
            let cards = factors.cardinalities();
            let mut offsets = vec![0usize; k];
            let mut onehot_len = 0usize;
            for j in 0..k {
                offsets[j] = onehot_len;
                onehot_len += cards[j] as usize;
            }
            // Gaussian matrix in row-major (one-hot feature, projection dim)
            // order from one derived stream.
            let mut rng = Rng::stream(*seed, "synthgen.random-projection", 0);
            let gauss: Vec<f64> = (0..onehot_len * dims).map(|_| rng.gaussian()).collect();
            let mut cols: Vec<Vec<f64>> = vec![vec![0.0; n]; *dims];
            for row in 0..n {
                for j in 0..k {
                    let f = offsets[j] + factors.value(row, j) as usize;
                    let g_row = &gauss[f * dims..(f + 1) * dims];
                    for (d, col) in cols.iter_mut().enumerate() {
                        col[row] += g_row[d];
                    }
                }
            }
            if *nonlinearity == Nonlinearity::Tanh {
                for col in &mut cols {
                    for v in col.iter_mut() {
                        *v = v.tanh();
                    }
                }
            }
            columns.extend(cols);
        }
    }

    for augment in &spec.augments {
        match augment {
            Augment::AppendNoise { count, seed } => {
                for c in 0..*count {
                    let mut rng = Rng::stream(*seed, "synthgen.append-noise", c as u64);
                    columns.push((0..n).map(|_| rng.gaussian()).collect());
                }
            }
            Augment::AppendConstant { count } => {
                for _ in 0..*count {
                    columns.push(vec![0.0; n]);
                }
            }
        }
    }

    let d = columns.len();
    if d == 0 {
        return Err(SynthError::ShapeMismatch("encoder produced no columns".into()));
    }
    let mut values = Vec::with_capacity(n * d);
    for row in 0..n {
        for col in &columns {
            values.push(col[row]);
        }
    }
    Ok(RepresentationMatrix::new(d, values)?)
}
