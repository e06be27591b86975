//! The two-stage procedure: train a wide model on every frequency feature,
//! rank inputs by importance, keep the top k, and retrain a compact model
//! from fresh initialization on just those.
//!
//! Scaling is fit on the training split only; importance is computed on the
//! training split; RMSE is always reported on unscaled targets.

use serde::{Deserialize, Serialize};

use crate::artifact::{FeatureSchema, ModelArtifact, ModelBundle};
use crate::data::{fit_robust_scaler, split_dataset, Dataset, ScalerParams, SplitSpec};
use crate::error::{Result, TskanError};
use crate::kan::{init_model, train, ImportanceReport, KanModel, TrainConfig};
use crate::spectral::build_feature_matrix;

/// Hyperparameters of the full pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Frequency cutoff F: components 0..=F are retained per variable.
    pub cutoff: usize,
    /// Number of features kept after the importance ranking.
    pub k: usize,
    pub stage1: TrainConfig,
    pub stage2: TrainConfig,
    pub split: SplitSpec,
}

impl PipelineConfig {
    /// The paper-style configuration: F=1, top-k 10, defaults elsewhere.
    pub fn with_defaults(cutoff: usize, k: usize) -> Self {
        PipelineConfig {
            cutoff,
            k,
            stage1: TrainConfig::default(),
            stage2: TrainConfig {
                seed: 1,
                ..TrainConfig::default()
            },
            split: SplitSpec::default(),
        }
    }

    fn validate(&self, feature_count: usize) -> Result<()> {
        if self.k == 0 || self.k > feature_count {
            return Err(TskanError::InvalidConfig(format!(
                "k must be in 1..={feature_count}, got {}",
                self.k
            )));
        }
        self.stage1.validate()?;
        self.stage2.validate()
    }
}

/// Train/validation/test RMSE of the final model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_rmse: f64,
    pub val_rmse: f64,
    pub test_rmse: f64,
}

/// Everything produced by [`run_full_pipeline`]; serializes to the report
/// JSON consumed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub selected_features: Vec<String>,
    pub stage1_importance: ImportanceReport,
    pub model: ModelBundle,
    pub metrics: Metrics,
    pub config: PipelineConfig,
}

struct Prepared {
    feature_names: Vec<String>,
    scaler: ScalerParams,
    train: SplitPart,
    val: SplitPart,
    test: SplitPart,
    schema: FeatureSchema,
}

struct SplitPart {
    scaled: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

fn prepare(ds: &Dataset, cfg: &PipelineConfig) -> Result<Prepared> {
    ds.check_uniform_length()?;
    let (train_ds, val_ds, test_ds) = split_dataset(ds, &cfg.split)?;
    let (train_x, feature_names) = build_feature_matrix(&train_ds, cfg.cutoff)?;
    cfg.validate(feature_names.len())?;
    let (val_x, _) = build_feature_matrix(&val_ds, cfg.cutoff)?;
    let (test_x, _) = build_feature_matrix(&test_ds, cfg.cutoff)?;
    let scaler = fit_robust_scaler(&train_x, &feature_names)?;
    let part = |x: Vec<Vec<f64>>, ds: &Dataset| -> Result<SplitPart> {
        Ok(SplitPart {
            scaled: scaler.apply(&x)?,
            targets: ds.labels(),
        })
    };
    Ok(Prepared {
        train: part(train_x, &train_ds)?,
        val: part(val_x, &val_ds)?,
        test: part(test_x, &test_ds)?,
        feature_names,
        scaler,
        schema: FeatureSchema {
            cutoff: cfg.cutoff,
            variables: ds.variable_names.clone(),
            target_length: ds.target_length,
        },
    })
}

fn fit_stage(
    names: &[String],
    train: &SplitPart,
    val: &SplitPart,
    cfg: &TrainConfig,
) -> Result<KanModel> {
    let model = init_model(names, &train.scaled, &train.targets, cfg)?;
    let (trained, _) = train(
        model,
        &train.scaled,
        &train.targets,
        &val.scaled,
        &val.targets,
        cfg,
    )?;
    Ok(trained)
}

/// Stage 1: train over all `V * (2F + 1)` features and rank them.
pub fn run_stage1(ds: &Dataset, cfg: &PipelineConfig) -> Result<(KanModel, ImportanceReport)> {
    let prepared = prepare(ds, cfg)?;
    let model = fit_stage(&prepared.feature_names, &prepared.train, &prepared.val, &cfg.stage1)?;
    let importance = model.importance_scores(&prepared.train.scaled)?;
    Ok((model, importance))
}

/// First `k` feature names by importance rank.
pub fn select_top_k(report: &ImportanceReport, k: usize) -> Result<Vec<String>> {
    if k > report.len() {
        return Err(TskanError::KOutOfRange {
            k,
            available: report.len(),
        });
    }
    Ok(report.entries[..k].iter().map(|e| e.feature.clone()).collect())
}

/// Root mean squared error between predictions and targets.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(TskanError::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    if predictions.len() != targets.len() {
        return Err(TskanError::DimensionMismatch {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok((total / predictions.len() as f64).sqrt())
}

/// RMSE of a saved model artifact over a raw dataset's labels.
pub fn evaluate_rmse(artifact: &ModelArtifact, ds: &Dataset) -> Result<f64> {
    let predictions = artifact.predict_dataset(ds)?;
    rmse(&predictions, &ds.labels())
}

fn select_columns(rows: &[Vec<f64>], indices: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| indices.iter().map(|&j| row[j]).collect())
        .collect()
}

/// Stage 1 + top-k selection + stage-2 retraining and evaluation.
pub fn run_full_pipeline(ds: &Dataset, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let prepared = prepare(ds, cfg)?;
    let stage1_model = fit_stage(
        &prepared.feature_names,
        &prepared.train,
        &prepared.val,
        &cfg.stage1,
    )?;
    let stage1_importance = stage1_model.importance_scores(&prepared.train.scaled)?;
    let selected_features = select_top_k(&stage1_importance, cfg.k)?;

    let indices: Vec<usize> = selected_features
        .iter()
        .map(|name| {
            prepared
                .feature_names
                .iter()
                .position(|n| n == name)
                .expect("selected features come from the ranked set")
        })
        .collect();
    let narrow = |part: &SplitPart| SplitPart {
        scaled: select_columns(&part.scaled, &indices),
        targets: part.targets.clone(),
    };
    let train_part = narrow(&prepared.train);
    let val_part = narrow(&prepared.val);
    let test_part = narrow(&prepared.test);

    let final_model = fit_stage(&selected_features, &train_part, &val_part, &cfg.stage2)?;

    let part_rmse = |part: &SplitPart| -> Result<f64> {
        rmse(&final_model.batch_forward(&part.scaled)?, &part.targets)
    };
    let metrics = Metrics {
        train_rmse: part_rmse(&train_part)?,
        val_rmse: part_rmse(&val_part)?,
        test_rmse: part_rmse(&test_part)?,
    };

    Ok(PipelineResult {
        model: ModelBundle {
            model: final_model,
            scaler: prepared.scaler.subset(&selected_features)?,
            schema: prepared.schema,
        },
        selected_features,
        stage1_importance,
        metrics,
        config: cfg.clone(),
    })
}
