//! Lasso linear regression by cyclic coordinate descent.
//!
//! Minimizes (1/2n)·‖y − Xw − b‖² + λ‖w‖₁ over standardized features. With
//! zero-mean columns the intercept decouples and is exactly mean(y); the
//! coordinates then cycle with the usual soft-threshold update until the
//! largest coefficient change in a sweep falls below `tol` or the sweep
//! budget runs out.

#[derive(Debug, Clone, Copy)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda: 0.01,
            max_sweeps: 1000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub sweeps: usize,
}

/// `x` is n×d row-major standardized features. Returns Err(sweeps) when the
/// budget is exhausted without meeting `tol`.
pub fn lasso_coordinate_descent(
    x: &[f64],
    d: usize,
    y: &[f64],
    cfg: LassoConfig,
) -> Result<LassoFit, usize> {
    let n = y.len();
    assert_eq!(x.len(), n * d);
    let nf = n as f64;
    let intercept = y.iter().sum::<f64>() / nf;

    // Per-coordinate curvature (1/n)·Σ x_ij²; zero for dead columns.
    let mut z = vec![0.0f64; d];
    for row in x.chunks_exact(d) {
        for (j, &v) in row.iter().enumerate() {
            z[j] += v * v;
        }
    }
    for v in &mut z {
        *v /= nf;
    }

    let mut w = vec![0.0f64; d];
    let mut residual: Vec<f64> = y.iter().map(|&v| v - intercept).collect();

    for sweep in 1..=cfg.max_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..d {
            if z[j] == 0.0 {
                continue;
            }
            // rho_j = (1/n)·x_j · (residual + x_j w_j)
            let mut rho = 0.0;
            for (row, r) in x.chunks_exact(d).zip(&residual) {
                rho += row[j] * r;
            }
            rho = rho / nf + z[j] * w[j];
            let new_w = soft_threshold(rho, cfg.lambda) / z[j];
            let delta = new_w - w[j];
            if delta != 0.0 {
                for (row, r) in x.chunks_exact(d).zip(residual.iter_mut()) {
                    *r -= delta * row[j];
                }
                w[j] = new_w;
            }
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < cfg.tol {
            return Ok(LassoFit {
                coefficients: w,
                intercept,
                sweeps: sweep,
            });
        }
    }
    Err(cfg.max_sweeps)
}

fn soft_threshold(value: f64, lambda: f64) -> f64 {
    if value > lambda {
        value - lambda
    } else if value < -lambda {
        value + lambda
    } else {
        0.0
    }
}
