//! Saved-model envelopes: a trained predictor together with the scaler and
//! the feature schema needed to score raw dataset CSVs.
//!
//! Serialized form (KAN):
//! `{"type":"kan","inputs":[{"name","grid","degree","coefficients",
//! "base_weight","curve_range"}],"bias":...,"scaler":{...},
//! "feature_schema":{"F":...,"variables":[...],"T":...}}`.
//! Linear models share the envelope with `"type":"linear"` and
//! `weights`/`intercept` instead of `inputs`/`bias`. A missing `type` tag
//! is read as `kan`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::LinearModel;
use crate::data::{Dataset, ScalerParams};
use crate::error::{Result, TskanError};
use crate::kan::activation::ActivationData;
use crate::kan::{KanModel, SplineActivation};
use crate::par;
use crate::spectral::{build_feature_vector, feature_names};

/// How raw series map to model inputs: frequency cutoff, variable order,
/// and the common series length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(rename = "F")]
    pub cutoff: usize,
    pub variables: Vec<String>,
    #[serde(rename = "T")]
    pub target_length: usize,
}

impl FeatureSchema {
    fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.variable_names != self.variables {
            return Err(TskanError::SchemaMismatch(format!(
                "model expects variables [{}], dataset has [{}]",
                self.variables.join(", "),
                ds.variable_names.join(", ")
            )));
        }
        ds.check_uniform_length()?;
        if ds.target_length != self.target_length {
            return Err(TskanError::SchemaMismatch(format!(
                "model expects series of length {}, dataset has {}",
                self.target_length, ds.target_length
            )));
        }
        Ok(())
    }
}

/// A trained KAN with everything needed to score raw data.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: KanModel,
    pub scaler: ScalerParams,
    pub schema: FeatureSchema,
}

/// A fitted linear baseline in the same envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBundle {
    pub model: LinearModel,
    pub scaler: ScalerParams,
    pub schema: FeatureSchema,
}

/// Any loadable model artifact.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelArtifact {
    Kan(ModelBundle),
    Linear(LinearBundle),
}

#[derive(Serialize, Deserialize)]
struct KanRepr {
    #[serde(rename = "type", default = "kan_tag")]
    tag: String,
    inputs: Vec<ActivationData>,
    bias: f64,
    scaler: ScalerParams,
    feature_schema: FeatureSchema,
}

fn kan_tag() -> String {
    "kan".to_string()
}

#[derive(Serialize, Deserialize)]
struct LinearRepr {
    #[serde(rename = "type")]
    tag: String,
    weights: Vec<f64>,
    intercept: f64,
    feature_names: Vec<String>,
    scaler: ScalerParams,
    feature_schema: FeatureSchema,
}

impl ModelBundle {
    fn to_repr(&self) -> KanRepr {
        KanRepr {
            tag: kan_tag(),
            inputs: self
                .model
                .activations()
                .iter()
                .map(SplineActivation::to_data)
                .collect(),
            bias: self.model.output_bias(),
            scaler: self.scaler.clone(),
            feature_schema: self.schema.clone(),
        }
    }

    fn from_repr(repr: KanRepr) -> Result<Self> {
        let activations = repr
            .inputs
            .into_iter()
            .map(SplineActivation::from_data)
            .collect::<Result<Vec<_>>>()?;
        let model = KanModel::new(activations, repr.bias)?;
        if repr.scaler.feature_names != model.input_names() {
            return Err(TskanError::SchemaMismatch(
                "scaler features do not match model inputs".to_string(),
            ));
        }
        Ok(ModelBundle {
            model,
            scaler: repr.scaler,
            schema: repr.feature_schema,
        })
    }

    /// Scale the named columns of a full feature row into model inputs.
    pub fn select_and_scale(&self, full_names: &[String], row: &[f64]) -> Result<Vec<f64>> {
        let mut selected = Vec::with_capacity(self.model.num_inputs());
        for name in &self.scaler.feature_names {
            let j = full_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| TskanError::UnknownFeature(name.clone()))?;
            selected.push(row[j]);
        }
        self.scaler.apply_row(&selected)
    }

    /// Predict every sample of a raw dataset.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.schema.check_dataset(ds)?;
        let full_names = feature_names(&self.schema.variables, self.schema.cutoff);
        par::map_indexed(ds.len(), |i| {
            let fv = build_feature_vector(&ds.samples[i], &ds.variable_names, self.schema.cutoff)?;
            let inputs = self.select_and_scale(&full_names, &fv.values)?;
            self.model.forward(&inputs)
        })
        .into_iter()
        .collect()
    }
}

impl LinearBundle {
    fn to_repr(&self) -> LinearRepr {
        LinearRepr {
            tag: "linear".to_string(),
            weights: self.model.weights.clone(),
            intercept: self.model.intercept,
            feature_names: self.model.feature_names.clone(),
            scaler: self.scaler.clone(),
            feature_schema: self.schema.clone(),
        }
    }

    fn from_repr(repr: LinearRepr) -> Result<Self> {
        if repr.weights.len() != repr.feature_names.len() {
            return Err(TskanError::DimensionMismatch {
                expected: repr.feature_names.len(),
                actual: repr.weights.len(),
            });
        }
        if repr.scaler.feature_names != repr.feature_names {
            return Err(TskanError::SchemaMismatch(
                "scaler features do not match model inputs".to_string(),
            ));
        }
        Ok(LinearBundle {
            model: LinearModel {
                weights: repr.weights,
                intercept: repr.intercept,
                feature_names: repr.feature_names,
            },
            scaler: repr.scaler,
            schema: repr.feature_schema,
        })
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.schema.check_dataset(ds)?;
        let full_names = feature_names(&self.schema.variables, self.schema.cutoff);
        par::map_indexed(ds.len(), |i| {
            let fv = build_feature_vector(&ds.samples[i], &ds.variable_names, self.schema.cutoff)?;
            let mut selected = Vec::with_capacity(self.model.weights.len());
            for name in &self.scaler.feature_names {
                let j = full_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| TskanError::UnknownFeature(name.clone()))?;
                selected.push(fv.values[j]);
            }
            self.model.predict_row(&self.scaler.apply_row(&selected)?)
        })
        .into_iter()
        .collect()
    }
}

impl Serialize for ModelBundle {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModelBundle {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = KanRepr::deserialize(deserializer)?;
        ModelBundle::from_repr(repr).map_err(serde::de::Error::custom)
    }
}

impl Serialize for LinearBundle {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LinearBundle {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = LinearRepr::deserialize(deserializer)?;
        LinearBundle::from_repr(repr).map_err(serde::de::Error::custom)
    }
}

impl ModelArtifact {
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self {
            ModelArtifact::Kan(bundle) => bundle.predict_dataset(ds),
            ModelArtifact::Linear(bundle) => bundle.predict_dataset(ds),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelArtifact::Kan(_) => "kan",
            ModelArtifact::Linear(_) => "linear",
        }
    }
}

/// Serialize any artifact to pretty JSON.
pub fn model_to_json(artifact: &ModelArtifact) -> Result<String> {
    let value = match artifact {
        ModelArtifact::Kan(bundle) => serde_json::to_string_pretty(bundle),
        ModelArtifact::Linear(bundle) => serde_json::to_string_pretty(bundle),
    };
    value.map_err(|e| TskanError::ModelFormat {
        path: "<memory>".to_string(),
        message: e.to_string(),
    })
}

/// Parse a model JSON, dispatching on the `type` tag (default `kan`).
pub fn model_from_json(text: &str, origin: &str) -> Result<ModelArtifact> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| TskanError::ModelFormat {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
    let tag = value
        .get("type")
        .and_then(|t| t.as_str())
        .unwrap_or("kan")
        .to_string();
    let wrap = |e: serde_json::Error| TskanError::ModelFormat {
        path: origin.to_string(),
        message: e.to_string(),
    };
    match tag.as_str() {
        "kan" => Ok(ModelArtifact::Kan(serde_json::from_value(value).map_err(wrap)?)),
        "linear" => Ok(ModelArtifact::Linear(
            serde_json::from_value(value).map_err(wrap)?,
        )),
        other => Err(TskanError::ModelFormat {
            path: origin.to_string(),
            message: format!("unknown model type '{other}'"),
        }),
    }
}

pub fn write_model(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    let json = model_to_json(artifact)?;
    std::fs::write(path, json).map_err(|e| TskanError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_model(path: &Path) -> Result<ModelArtifact> {
    let text = std::fs::read_to_string(path).map_err(|e| TskanError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    model_from_json(&text, &path.display().to_string())
}
