//! Inherently interpretable reference models over the same features:
//! ordinary least squares and LASSO via cyclic coordinate descent.
//!
//! The LASSO objective is `0.5 * sum((y - b - Xw)^2) + lambda * sum(|w|)`
//! with an unpenalized intercept (handled exactly by centering), so on a
//! zero-mean orthonormal design the solution is plain soft thresholding of
//! `X^T y` and `lambda = 0` reduces to least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TskanError};

/// A fitted linear predictor `y = intercept + w . x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub feature_names: Vec<String>,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.weights.len() {
            return Err(TskanError::DimensionMismatch {
                expected: self.weights.len(),
                actual: row.len(),
            });
        }
        Ok(self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>())
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|row| self.predict_row(row)).collect()
    }
}

fn check_design(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(TskanError::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    if x.len() != y.len() {
        return Err(TskanError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(TskanError::DegenerateDesign("no feature columns".to_string()));
    }
    for row in x {
        if row.len() != d {
            return Err(TskanError::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(TskanError::DegenerateDesign("non-finite feature".to_string()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(TskanError::DegenerateDesign("non-finite target".to_string()));
    }
    Ok(d)
}

fn column_means(x: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut means = vec![0.0; d];
    for row in x {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = x.len() as f64;
    means.iter_mut().for_each(|m| *m /= n);
    means
}

/// Solve `A z = b` for symmetric positive definite `A` via Cholesky.
fn solve_spd(a: &mut [Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let d = b.len();
    // Factorize in place: A = L L^T.
    for j in 0..d {
        for k in 0..j {
            let ljk = a[j][k];
            for i in j..d {
                a[i][j] -= a[i][k] * ljk;
            }
        }
        let pivot = a[j][j];
        if pivot <= 0.0 || !pivot.is_finite() {
            return Err(TskanError::DegenerateDesign(format!(
                "normal equations not positive definite at column {j}"
            )));
        }
        let root = pivot.sqrt();
        for i in j..d {
            a[i][j] /= root;
        }
    }
    // Forward then back substitution.
    let mut z = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            z[i] -= a[i][k] * z[k];
        }
        z[i] /= a[i][i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            z[i] -= a[k][i] * z[k];
        }
        z[i] /= a[i][i];
    }
    Ok(z)
}

/// Ridge jitter added to the normal equations for conditioning.
const RIDGE_JITTER: f64 = 1e-10;

/// Least squares through the normal equations on centered data.
pub fn fit_linear_regression(
    x: &[Vec<f64>],
    y: &[f64],
    feature_names: &[String],
) -> Result<LinearModel> {
    let d = check_design(x, y)?;
    if feature_names.len() != d {
        return Err(TskanError::DimensionMismatch {
            expected: d,
            actual: feature_names.len(),
        });
    }
    let x_means = column_means(x, d);
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;

    let mut gram = vec![vec![0.0; d]; d];
    let mut moment = vec![0.0; d];
    let mut centered = vec![0.0; d];
    let mut total_variance = 0.0;
    for (row, &target) in x.iter().zip(y) {
        for j in 0..d {
            centered[j] = row[j] - x_means[j];
            total_variance += centered[j] * centered[j];
        }
        let yc = target - y_mean;
        for j in 0..d {
            moment[j] += centered[j] * yc;
            for k in 0..=j {
                gram[j][k] += centered[j] * centered[k];
            }
        }
    }
    if total_variance == 0.0 {
        return Err(TskanError::DegenerateDesign(
            "all feature columns are constant".to_string(),
        ));
    }
    for j in 0..d {
        for k in 0..j {
            gram[k][j] = gram[j][k];
        }
        gram[j][j] += RIDGE_JITTER;
    }
    let weights = solve_spd(&mut gram, &moment)?;
    let intercept = y_mean
        - weights
            .iter()
            .zip(&x_means)
            .map(|(w, m)| w * m)
            .sum::<f64>();
    Ok(LinearModel {
        weights,
        intercept,
        feature_names: feature_names.to_vec(),
    })
}

pub(crate) fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Outcome of a LASSO fit: the model plus convergence bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub model: LinearModel,
    /// Full coordinate sweeps performed.
    pub sweeps: usize,
    pub converged: bool,
}

/// `0.5 * sum((y - b - Xw)^2) + lambda * sum(|w|)` for a candidate model.
pub fn lasso_objective(x: &[Vec<f64>], y: &[f64], model: &LinearModel, lambda: f64) -> f64 {
    let mut residual = 0.0;
    for (row, &target) in x.iter().zip(y) {
        let r = target - model.predict_row(row).expect("dimension checked by caller");
        residual += r * r;
    }
    0.5 * residual + lambda * model.weights.iter().map(|w| w.abs()).sum::<f64>()
}

/// Cyclic coordinate descent with soft thresholding.
///
/// Stops when the largest coefficient change in a sweep drops below `tol`;
/// a fit that exhausts `max_iter` sweeps is still returned, flagged
/// unconverged.
pub fn fit_lasso(
    x: &[Vec<f64>],
    y: &[f64],
    feature_names: &[String],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    let d = check_design(x, y)?;
    if feature_names.len() != d {
        return Err(TskanError::DimensionMismatch {
            expected: d,
            actual: feature_names.len(),
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(TskanError::InvalidConfig(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if max_iter == 0 {
        return Err(TskanError::InvalidConfig("max_iter must be >= 1".to_string()));
    }

    let n = x.len();
    let x_means = column_means(x, d);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    // Column-major centered copy keeps the inner loops contiguous.
    let mut columns = vec![vec![0.0; n]; d];
    for (i, row) in x.iter().enumerate() {
        for j in 0..d {
            columns[j][i] = row[j] - x_means[j];
        }
    }
    let norms_sq: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();

    let mut weights = vec![0.0; d];
    let mut residual: Vec<f64> = y.iter().map(|&v| v - y_mean).collect();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_iter {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..d {
            if norms_sq[j] == 0.0 {
                continue; // constant column: coefficient stays zero
            }
            let column = &columns[j];
            let mut rho = norms_sq[j] * weights[j];
            for (r, c) in residual.iter().zip(column) {
                rho += r * c;
            }
            let updated = soft_threshold(rho, lambda) / norms_sq[j];
            let delta = updated - weights[j];
            if delta != 0.0 {
                for (r, c) in residual.iter_mut().zip(column) {
                    *r -= delta * c;
                }
                weights[j] = updated;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change < tol {
            converged = true;
            break;
        }
    }

    let intercept = y_mean
        - weights
            .iter()
            .zip(&x_means)
            .map(|(w, m)| w * m)
            .sum::<f64>();
    Ok(LassoFit {
        model: LinearModel {
            weights,
            intercept,
            feature_names: feature_names.to_vec(),
        },
        sweeps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn exact_line_is_recovered() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let model = fit_linear_regression(&x, &y, &names(1)).unwrap();
        assert!((model.weights[0] - 2.0).abs() < 1e-8);
        assert!((model.intercept - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_target_gives_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let x: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y = vec![4.5; 30];
        let model = fit_linear_regression(&x, &y, &names(3)).unwrap();
        for w in &model.weights {
            assert!(w.abs() < 1e-8);
        }
        assert!((model.intercept - 4.5).abs() < 1e-8);
    }

    #[test]
    fn normal_equations_optimality_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 0.3 - 1.2 * r[0] + 0.7 * r[2] + rng.gen_range(-0.1..0.1))
            .collect();
        let model = fit_linear_regression(&x, &y, &names(4)).unwrap();
        let predictions = model.predict(&x).unwrap();
        // X^T (y - y_hat) should vanish at the optimum (including intercept).
        for j in 0..4 {
            let g: f64 = x
                .iter()
                .zip(y.iter().zip(&predictions))
                .map(|(row, (&target, &p))| row[j] * (target - p))
                .sum();
            assert!(g.abs() < 1e-6, "gradient {g} at column {j}");
        }
        let g0: f64 = y.iter().zip(&predictions).map(|(&t, &p)| t - p).sum();
        assert!(g0.abs() < 1e-6);
    }

    #[test]
    fn all_constant_design_is_degenerate() {
        let x = vec![vec![2.0, 5.0]; 8];
        let y = vec![1.0; 8];
        let err = fit_linear_regression(&x, &y, &names(2)).unwrap_err();
        assert!(matches!(err, TskanError::DegenerateDesign(_)), "{err:?}");
    }

    #[test]
    fn ols_predictions_invariant_to_affine_reparameterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 1.0 + r[0] - 2.0 * r[1] + 0.5 * r[2]).collect();
        let base = fit_linear_regression(&x, &y, &names(3)).unwrap();

        let transformed: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![3.0 * r[0] - 1.0, r[1], r[2]])
            .collect();
        let refit = fit_linear_regression(&transformed, &y, &names(3)).unwrap();
        let p_base = base.predict(&x).unwrap();
        let p_refit = refit.predict(&transformed).unwrap();
        for (a, b) in p_base.iter().zip(&p_refit) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn lasso_with_zero_lambda_matches_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 0.5 + 2.0 * r[0] - r[1] + rng.gen_range(-0.05..0.05))
            .collect();
        let ols = fit_linear_regression(&x, &y, &names(3)).unwrap();
        let lasso = fit_lasso(&x, &y, &names(3), 0.0, 1e-12, 100_000).unwrap();
        assert!(lasso.converged);
        for (a, b) in ols.weights.iter().zip(&lasso.model.weights) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!((ols.intercept - lasso.model.intercept).abs() < 1e-6);
    }

    /// Zero-mean orthonormal columns built from a 4x4 Hadamard matrix.
    fn orthonormal_design() -> Vec<Vec<f64>> {
        let h = [
            [1.0, 1.0, 1.0],
            [-1.0, 1.0, -1.0],
            [1.0, -1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        h.iter().map(|row| row.iter().map(|v| v / 2.0).collect()).collect()
    }

    #[test]
    fn lasso_orthonormal_design_soft_thresholds() {
        let x = orthonormal_design();
        let y = vec![1.0, -0.5, 0.25, 2.0];
        let lambda = 0.3;
        let fit = fit_lasso(&x, &y, &names(3), lambda, 1e-12, 10_000).unwrap();
        for j in 0..3 {
            let xty: f64 = x.iter().zip(&y).map(|(r, &t)| r[j] * t).sum();
            let expected = soft_threshold(xty, lambda);
            assert!(
                (fit.model.weights[j] - expected).abs() < 1e-8,
                "w{j}: {} vs {expected}",
                fit.model.weights[j]
            );
        }
    }

    #[test]
    fn lasso_full_shrinkage_for_large_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let x: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] - r[2]).collect();
        let xty_max = (0..3)
            .map(|j| x.iter().zip(&y).map(|(r, &t)| r[j] * t).sum::<f64>().abs())
            .fold(0.0f64, f64::max);
        let fit = fit_lasso(&x, &y, &names(3), xty_max * 1.01, 1e-12, 1000).unwrap();
        assert!(fit.model.weights.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn lasso_objective_non_increasing_over_sweeps() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let x: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[1] - r[3] + rng.gen_range(-0.2..0.2)).collect();
        let lambda = 0.4;
        // Deterministic start from zero: k sweeps is a prefix of k+1 sweeps.
        let mut last = f64::INFINITY;
        for k in 1..=8 {
            let fit = fit_lasso(&x, &y, &names(5), lambda, 0.0, k).unwrap();
            let objective = lasso_objective(&x, &y, &fit.model, lambda);
            assert!(objective <= last + 1e-10, "sweep {k}: {objective} > {last}");
            last = objective;
        }
    }

    #[test]
    fn lasso_matches_projected_gradient_oracle() {
        // Independent ISTA oracle on small instances; compares objectives.
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for _ in 0..5 {
            let n = 20;
            let d = 3;
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let y: Vec<f64> = x
                .iter()
                .map(|r| 1.5 * r[0] - 0.8 * r[2] + rng.gen_range(-0.1..0.1))
                .collect();
            let lambda = 0.25;
            let fit = fit_lasso(&x, &y, &names(d), lambda, 1e-12, 100_000).unwrap();
            let cd_objective = lasso_objective(&x, &y, &fit.model, lambda);

            let oracle = ista_oracle(&x, &y, lambda, 200_000);
            let oracle_objective = lasso_objective(&x, &y, &oracle, lambda);
            assert!(
                cd_objective <= oracle_objective + 1e-4,
                "{cd_objective} vs {oracle_objective}"
            );
            assert!(
                (cd_objective - oracle_objective).abs() < 1e-4,
                "{cd_objective} vs {oracle_objective}"
            );
        }
    }

    /// Proximal gradient (ISTA) on the centered problem; shares nothing
    /// with the coordinate-descent path.
    fn ista_oracle(x: &[Vec<f64>], y: &[f64], lambda: f64, iterations: usize) -> LinearModel {
        let n = x.len();
        let d = x[0].len();
        let x_means = column_means(x, d);
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let xc: Vec<Vec<f64>> = x
            .iter()
            .map(|r| r.iter().zip(&x_means).map(|(v, m)| v - m).collect())
            .collect();
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        // Lipschitz bound: Frobenius norm of X^T X dominates its spectrum.
        let mut frob = 0.0;
        for a in 0..d {
            for b in 0..d {
                let g: f64 = xc.iter().map(|r| r[a] * r[b]).sum();
                frob += g * g;
            }
        }
        let step = 1.0 / frob.sqrt().max(1e-12);
        let mut w = vec![0.0; d];
        for _ in 0..iterations {
            let mut grad = vec![0.0; d];
            for (row, &target) in xc.iter().zip(&yc) {
                let r: f64 = row.iter().zip(&w).map(|(v, wi)| v * wi).sum::<f64>() - target;
                for j in 0..d {
                    grad[j] += row[j] * r;
                }
            }
            for j in 0..d {
                w[j] = soft_threshold(w[j] - step * grad[j], step * lambda);
            }
        }
        let intercept = y_mean - w.iter().zip(&x_means).map(|(wi, m)| wi * m).sum::<f64>();
        LinearModel {
            weights: w,
            intercept,
            feature_names: names(d),
        }
    }

    #[test]
    fn unconverged_fit_is_flagged_but_returned() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let x: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] + r[1] + r[2] + r[3]).collect();
        let fit = fit_lasso(&x, &y, &names(4), 0.01, 1e-15, 2).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.sweeps, 2);
        assert_eq!(fit.model.weights.len(), 4);
    }
}
