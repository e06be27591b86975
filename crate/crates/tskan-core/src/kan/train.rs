//! Full-batch training of the one-layer model.
//!
//! The loss is `MSE + smoothness_weight * sum(second differences of spline
//! coefficients)^2 + sparsity_weight * sum_q mean_n |psi_q|`, minimized by
//! full-batch Adam with early stopping on validation RMSE. All parameter
//! gradients are analytic, reusing the same basis weights as the forward
//! pass. Per-sample terms may be computed in parallel; reductions always
//! run in sample order, so results do not depend on thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::activation::{grid_from_values, ActivationTerms, SplineActivation};
use super::model::KanModel;
use crate::error::{Result, TskanError};
use crate::par;
use crate::stats::mean;

/// Hyperparameters for [`train`] and [`init_model`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Penalty on squared second differences of spline coefficients.
    pub smoothness_weight: f64,
    /// Penalty on the mean absolute activation output.
    pub sparsity_weight: f64,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    /// Number of spline grid intervals per activation.
    pub grid_size: usize,
    pub degree: usize,
    /// Grid ranges cover this quantile span of the training data.
    pub grid_range_quantiles: (f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 2000,
            learning_rate: 1e-2,
            smoothness_weight: 1e-3,
            sparsity_weight: 1e-3,
            seed: 0,
            early_stop_patience: 200,
            grid_size: 8,
            degree: 3,
            grid_range_quantiles: (0.01, 0.99),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(TskanError::InvalidConfig("epochs must be >= 1".to_string()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(TskanError::InvalidConfig(
                "learning rate must be finite and nonnegative".to_string(),
            ));
        }
        if self.smoothness_weight < 0.0 || self.sparsity_weight < 0.0 {
            return Err(TskanError::InvalidConfig(
                "regularization weights must be nonnegative".to_string(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch losses plus the index of the best validation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_rmse: Vec<f64>,
    pub best_epoch: usize,
}

/// Gradient of the loss for one activation's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationGradient {
    pub coefficients: Vec<f64>,
    pub base_weight: f64,
}

/// Gradient of the loss, mirroring the model's parameter structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub activations: Vec<ActivationGradient>,
    pub bias: f64,
}

struct SampleTerms {
    prediction: f64,
    acts: Vec<ActivationTerms>,
}

fn sample_terms(model: &KanModel, row: &[f64]) -> SampleTerms {
    let mut prediction = model.output_bias();
    let acts: Vec<ActivationTerms> = model
        .activations()
        .iter()
        .zip(row)
        .map(|(activation, &x)| {
            let terms = activation.terms(x);
            prediction += terms.value;
            terms
        })
        .collect();
    SampleTerms { prediction, acts }
}

fn batch_terms(model: &KanModel, rows: &[Vec<f64>]) -> Vec<SampleTerms> {
    par::map_indexed(rows.len(), |i| sample_terms(model, &rows[i]))
}

fn batch_terms_seq(model: &KanModel, rows: &[Vec<f64>]) -> Vec<SampleTerms> {
    par::map_indexed_seq(rows.len(), |i| sample_terms(model, &rows[i]))
}

fn check_batch(model: &KanModel, rows: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if rows.is_empty() {
        return Err(TskanError::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    if rows.len() != targets.len() {
        return Err(TskanError::DimensionMismatch {
            expected: rows.len(),
            actual: targets.len(),
        });
    }
    for row in rows {
        if row.len() != model.num_inputs() {
            return Err(TskanError::DimensionMismatch {
                expected: model.num_inputs(),
                actual: row.len(),
            });
        }
    }
    Ok(())
}

fn subgradient_sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn smoothness_penalty(model: &KanModel) -> f64 {
    let mut total = 0.0;
    for activation in model.activations() {
        let c = activation.coefficients();
        for i in 1..c.len().saturating_sub(1) {
            let second = c[i + 1] - 2.0 * c[i] + c[i - 1];
            total += second * second;
        }
    }
    total
}

fn loss_from_terms(
    model: &KanModel,
    terms: &[SampleTerms],
    targets: &[f64],
    cfg: &TrainConfig,
) -> f64 {
    let n = terms.len() as f64;
    let mut mse = 0.0;
    for (term, &y) in terms.iter().zip(targets) {
        let r = term.prediction - y;
        mse += r * r;
    }
    mse /= n;

    let mut sparsity = 0.0;
    if cfg.sparsity_weight > 0.0 {
        for q in 0..model.num_inputs() {
            let mut acc = 0.0;
            for term in terms {
                acc += term.acts[q].value.abs();
            }
            sparsity += acc / n;
        }
    }

    mse + cfg.smoothness_weight * smoothness_penalty(model) + cfg.sparsity_weight * sparsity
}

fn gradients_from_terms(
    model: &KanModel,
    terms: &[SampleTerms],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Gradients {
    let n = terms.len() as f64;
    let mut grads = Gradients {
        activations: model
            .activations()
            .iter()
            .map(|a| ActivationGradient {
                coefficients: vec![0.0; a.coefficients().len()],
                base_weight: 0.0,
            })
            .collect(),
        bias: 0.0,
    };

    for (term, &y) in terms.iter().zip(targets) {
        let residual_scale = 2.0 * (term.prediction - y) / n;
        grads.bias += residual_scale;
        for (q, act) in term.acts.iter().enumerate() {
            let sparsity_scale = cfg.sparsity_weight * subgradient_sign(act.value) / n;
            let scale = residual_scale + sparsity_scale;
            let coeff = &mut grads.activations[q].coefficients;
            for (i, w) in act.basis.iter() {
                coeff[i] += scale * w;
            }
            grads.activations[q].base_weight += scale * act.sigma;
        }
    }

    if cfg.smoothness_weight > 0.0 {
        for (q, activation) in model.activations().iter().enumerate() {
            let c = activation.coefficients();
            if c.len() < 3 {
                continue;
            }
            let second = |i: usize| c[i + 1] - 2.0 * c[i] + c[i - 1];
            let grad = &mut grads.activations[q].coefficients;
            let last = c.len() - 2;
            for i in 0..c.len() {
                let mut g = 0.0;
                // d(second(j))/dc_i is +1 at j=i-1 and j=i+1, -2 at j=i.
                if i >= 2 {
                    g += second(i - 1);
                }
                if (1..=last).contains(&i) {
                    g -= 2.0 * second(i);
                }
                if i + 1 <= last {
                    g += second(i + 1);
                }
                grad[i] += 2.0 * cfg.smoothness_weight * g;
            }
        }
    }

    grads
}

/// Composite training loss over a batch.
pub fn loss(
    model: &KanModel,
    rows: &[Vec<f64>],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<f64> {
    check_batch(model, rows, targets)?;
    let terms = batch_terms(model, rows);
    Ok(loss_from_terms(model, &terms, targets, cfg))
}

/// Analytic gradients of [`loss`] with respect to every parameter.
pub fn gradients(
    model: &KanModel,
    rows: &[Vec<f64>],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<Gradients> {
    check_batch(model, rows, targets)?;
    let terms = batch_terms(model, rows);
    Ok(gradients_from_terms(model, &terms, targets, cfg))
}

/// Single-threaded twin of [`gradients`]; returns bit-identical values.
pub fn gradients_sequential(
    model: &KanModel,
    rows: &[Vec<f64>],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<Gradients> {
    check_batch(model, rows, targets)?;
    let terms = batch_terms_seq(model, rows);
    Ok(gradients_from_terms(model, &terms, targets, cfg))
}

/// Fresh model over the given features: grids from training-data quantiles
/// with a 10% margin, small uniform random coefficients, unit base weight,
/// bias at the target mean.
pub fn init_model(
    feature_names: &[String],
    rows: &[Vec<f64>],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<KanModel> {
    if rows.is_empty() {
        return Err(TskanError::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    for row in rows {
        if row.len() != feature_names.len() {
            return Err(TskanError::DimensionMismatch {
                expected: feature_names.len(),
                actual: row.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut column = vec![0.0; rows.len()];
    let mut activations = Vec::with_capacity(feature_names.len());
    for (j, name) in feature_names.iter().enumerate() {
        for (i, row) in rows.iter().enumerate() {
            column[i] = row[j];
        }
        let (grid, curve_range) =
            grid_from_values(&column, cfg.grid_size, cfg.grid_range_quantiles, 0.1)?;
        let coefficients = (0..cfg.grid_size + cfg.degree)
            .map(|_| rng.gen_range(-0.01..0.01))
            .collect();
        activations.push(SplineActivation::new(
            name.clone(),
            grid,
            cfg.degree,
            coefficients,
            1.0,
            curve_range,
        )?);
    }
    KanModel::new(activations, mean(targets))
}

struct Adam {
    first: Vec<f64>,
    second: Vec<f64>,
    step_count: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

impl Adam {
    fn new(parameter_count: usize) -> Self {
        Adam {
            first: vec![0.0; parameter_count],
            second: vec![0.0; parameter_count],
            step_count: 0,
        }
    }

    fn step(&mut self, model: &mut KanModel, grads: &Gradients, learning_rate: f64) {
        self.step_count += 1;
        let bias_correction1 = 1.0 - ADAM_BETA1.powi(self.step_count as i32);
        let bias_correction2 = 1.0 - ADAM_BETA2.powi(self.step_count as i32);
        let mut k = 0;
        let mut update = |param: &mut f64, grad: f64, state: (&mut [f64], &mut [f64])| {
            let (first, second) = state;
            first[k] = ADAM_BETA1 * first[k] + (1.0 - ADAM_BETA1) * grad;
            second[k] = ADAM_BETA2 * second[k] + (1.0 - ADAM_BETA2) * grad * grad;
            let m_hat = first[k] / bias_correction1;
            let v_hat = second[k] / bias_correction2;
            *param -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            k += 1;
        };
        for (q, activation) in model.activations_mut().iter_mut().enumerate() {
            let grad = &grads.activations[q];
            for (c, &g) in activation
                .coefficients_mut()
                .iter_mut()
                .zip(&grad.coefficients)
            {
                update(c, g, (&mut self.first, &mut self.second));
            }
            update(
                activation.base_weight_mut(),
                grad.base_weight,
                (&mut self.first, &mut self.second),
            );
        }
        update(
            model.output_bias_mut(),
            grads.bias,
            (&mut self.first, &mut self.second),
        );
    }
}

fn rmse_of(model: &KanModel, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    let mut acc = 0.0;
    let predictions = par::map_indexed(rows.len(), |i| model.forward_unchecked(&rows[i]));
    for (p, &y) in predictions.iter().zip(targets) {
        let r = p - y;
        acc += r * r;
    }
    (acc / rows.len() as f64).sqrt()
}

/// Full-batch Adam with early stopping on validation RMSE.
///
/// Returns the parameters from the best validation epoch and the loss
/// history. Deterministic for a fixed starting model and data.
pub fn train(
    model: KanModel,
    train_rows: &[Vec<f64>],
    train_targets: &[f64],
    val_rows: &[Vec<f64>],
    val_targets: &[f64],
    cfg: &TrainConfig,
) -> Result<(KanModel, TrainHistory)> {
    cfg.validate()?;
    check_batch(&model, train_rows, train_targets)?;
    check_batch(&model, val_rows, val_targets)?;

    let mut model = model;
    let mut adam = Adam::new(model.parameter_count());
    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(cfg.epochs),
        val_rmse: Vec::with_capacity(cfg.epochs),
        best_epoch: 0,
    };
    let mut best_model = model.clone();
    let mut best_rmse = f64::INFINITY;

    for epoch in 0..cfg.epochs {
        let terms = batch_terms(&model, train_rows);
        let train_loss = loss_from_terms(&model, &terms, train_targets, cfg);
        if !train_loss.is_finite() {
            return Err(TskanError::Diverged { epoch });
        }
        let grads = gradients_from_terms(&model, &terms, train_targets, cfg);
        adam.step(&mut model, &grads, cfg.learning_rate);

        let val_rmse = rmse_of(&model, val_rows, val_targets);
        if !val_rmse.is_finite() {
            return Err(TskanError::Diverged { epoch });
        }
        history.train_loss.push(train_loss);
        history.val_rmse.push(val_rmse);
        if val_rmse < best_rmse {
            best_rmse = val_rmse;
            best_model = model.clone();
            history.best_epoch = epoch;
        } else if cfg.early_stop_patience > 0 && epoch - history.best_epoch >= cfg.early_stop_patience
        {
            break;
        }
    }

    Ok((best_model, history))
}
