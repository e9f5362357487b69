//! Soft-margin RBF SVM trained by SMO with maximal-violating-pair
//! working-set selection. Serves as the comparison baseline over
//! flattened gait cycles.

use ndarray::Array2;

use crate::signal::Label;

#[derive(Debug, thiserror::Error)]
pub enum SvmError {
    #[error("training data contains a single class only")]
    DegenerateDataset,
    #[error("SMO did not converge within {max_iter} iterations")]
    ConvergenceFailure { max_iter: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    /// RBF width; `None` picks 1 / (n_features * pooled variance).
    pub gamma: Option<f64>,
    /// KKT violation tolerance for the stopping rule.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SvmModel {
    /// Support vectors, one per row.
    pub support_vectors: Array2<f64>,
    /// alpha_i * y_i for each support vector.
    pub coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
}

/// exp(-gamma * ||u - v||^2)
pub fn rbf_kernel(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

/// Default gamma: 1 / (n_features * pooled variance of all entries).
pub fn default_gamma(data: &Array2<f64>) -> f64 {
    let n = data.len() as f64;
    let mean = data.sum() / n;
    let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    1.0 / (data.ncols() as f64 * var.max(1e-12))
}

fn label_sign(label: Label) -> f64 {
    match label {
        Label::Anomalous => 1.0,
        Label::Normal => -1.0,
    }
}

/// Train on flattened cycles by SMO. Deterministic: the working set is
/// always the maximal KKT-violating pair, ties broken toward the lowest
/// index.
pub fn train_svm(
    data: &Array2<f64>,
    labels: &[Label],
    config: &SvmConfig,
) -> Result<SvmModel, SvmError> {
    let n = data.nrows();
    assert_eq!(n, labels.len());
    if config.c <= 0.0 {
        return Err(SvmError::InvalidParameter("C must be positive".into()));
    }
    let has_pos = labels.iter().any(|l| *l == Label::Anomalous);
    let has_neg = labels.iter().any(|l| *l == Label::Normal);
    if !has_pos || !has_neg {
        return Err(SvmError::DegenerateDataset);
    }
    let gamma = match config.gamma {
        Some(g) if g > 0.0 => g,
        Some(_) => {
            return Err(SvmError::InvalidParameter("gamma must be positive".into()));
        }
        None => default_gamma(data),
    };

    let y: Vec<f64> = labels.iter().map(|&l| label_sign(l)).collect();
    let rows: Vec<&[f64]> = (0..n).map(|i| data.row(i).to_slice().unwrap()).collect();
    // full kernel matrix; dataset sizes here stay modest
    let mut k = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf_kernel(rows[i], rows[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];

    let c = config.c;
    let mut alpha = vec![0.0f64; n];
    // gradient of the dual objective 0.5 a'Qa - e'a
    let mut grad = vec![-1.0f64; n];
    let tau = 1e-12;

    let mut iterations = 0usize;
    loop {
        // maximal violating pair
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let mut i_sel = usize::MAX;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && v > g_max {
                g_max = v;
                i_sel = t;
            }
            if in_low && v < g_min {
                g_min = v;
                j_sel = t;
            }
        }
        if g_max - g_min <= config.tol {
            break;
        }
        if iterations >= config.max_iter {
            return Err(SvmError::ConvergenceFailure {
                max_iter: config.max_iter,
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let old_ai = alpha[i];
        let old_aj = alpha[j];

        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(tau);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(tau);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_ai = alpha[i] - old_ai;
        let d_aj = alpha[j] - old_aj;
        for t in 0..n {
            grad[t] += q(t, i) * d_ai + q(t, j) * d_aj;
        }
    }

    // bias from the free support vectors; fall back to the violation
    // midpoint when every alpha sits on a box boundary
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += -y[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up {
                g_max = g_max.max(v);
            }
            if in_low {
                g_min = g_min.min(v);
            }
        }
        (g_max + g_min) / 2.0
    };

    let sv_idx: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let mut support = Array2::zeros((sv_idx.len(), data.ncols()));
    let mut coeffs = Vec::with_capacity(sv_idx.len());
    for (r, &t) in sv_idx.iter().enumerate() {
        support.row_mut(r).assign(&data.row(t));
        coeffs.push(alpha[t] * y[t]);
    }

    Ok(SvmModel {
        support_vectors: support,
        coeffs,
        bias,
        gamma,
        c,
    })
}

/// Decision value f(x) = sum_i alpha_i y_i k(x_i, x) + b.
pub fn decision_value(model: &SvmModel, x: &[f64]) -> f64 {
    let mut f = model.bias;
    for (row, coeff) in model.support_vectors.rows().into_iter().zip(&model.coeffs) {
        f += coeff * rbf_kernel(row.to_slice().unwrap(), x, model.gamma);
    }
    f
}

/// Predicted label: nonnegative decision values map to anomalous.
pub fn predict_svm(model: &SvmModel, x: &[f64]) -> (Label, f64) {
    let f = decision_value(model, x);
    let label = if f >= 0.0 {
        Label::Anomalous
    } else {
        Label::Normal
    };
    (label, f)
}

/// Dual feasibility: 0 <= alpha <= C and |sum alpha_i y_i| below `tol`.
pub fn dual_feasible(model: &SvmModel, tol: f64) -> bool {
    let coeff_sum: f64 = model.coeffs.iter().sum();
    model
        .coeffs
        .iter()
        .all(|&ay| ay.abs() <= model.c + 1e-12 && ay.abs() > 0.0)
        && coeff_sum.abs() < tol
}
