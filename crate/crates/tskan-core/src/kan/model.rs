//! The one-layer model: prediction is the bias plus the sum of one
//! activation per input feature. The outer map of the underlying
//! representation is fixed to identity in this configuration.

use serde::{Deserialize, Serialize};

use super::activation::SplineActivation;
use crate::error::{Result, TskanError};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct KanModel {
    activations: Vec<SplineActivation>,
    output_bias: f64,
}

impl KanModel {
    pub fn new(activations: Vec<SplineActivation>, output_bias: f64) -> Result<Self> {
        if !output_bias.is_finite() {
            return Err(TskanError::InvalidActivation(
                "bias must be finite".to_string(),
            ));
        }
        Ok(KanModel {
            activations,
            output_bias,
        })
    }

    pub fn activations(&self) -> &[SplineActivation] {
        &self.activations
    }

    pub fn output_bias(&self) -> f64 {
        self.output_bias
    }

    pub fn input_names(&self) -> Vec<String> {
        self.activations
            .iter()
            .map(|a| a.input_name().to_string())
            .collect()
    }

    pub fn num_inputs(&self) -> usize {
        self.activations.len()
    }

    pub(crate) fn activations_mut(&mut self) -> &mut [SplineActivation] {
        &mut self.activations
    }

    pub(crate) fn output_bias_mut(&mut self) -> &mut f64 {
        &mut self.output_bias
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.activations.len() {
            return Err(TskanError::DimensionMismatch {
                expected: self.activations.len(),
                actual: width,
            });
        }
        Ok(())
    }

    /// `y = bias + sum_q psi_q(u_q)`.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        self.check_width(features.len())?;
        Ok(self.forward_unchecked(features))
    }

    pub(crate) fn forward_unchecked(&self, features: &[f64]) -> f64 {
        let mut total = self.output_bias;
        for (activation, &x) in self.activations.iter().zip(features) {
            total += activation.eval(x);
        }
        total
    }

    /// Predictions for a row-major feature matrix.
    pub fn batch_forward(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        for row in rows {
            self.check_width(row.len())?;
        }
        Ok(par::map_indexed(rows.len(), |i| {
            self.forward_unchecked(&rows[i])
        }))
    }

    /// Exact trainable-parameter count, bias included.
    pub fn parameter_count(&self) -> usize {
        self.activations
            .iter()
            .map(SplineActivation::parameter_count)
            .sum::<usize>()
            + 1
    }

    /// Per-activation parameters only; the headline figure excludes the
    /// scalar output bias.
    pub fn headline_parameter_count(&self) -> usize {
        self.parameter_count() - 1
    }

    /// Mean absolute activation output per input, normalized to sum 1.
    ///
    /// Ranks descend by score; ties break on feature name so the ordering
    /// is total.
    pub fn importance_scores(&self, rows: &[Vec<f64>]) -> Result<ImportanceReport> {
        if rows.is_empty() {
            return Err(TskanError::InsufficientData {
                required: 1,
                actual: 0,
            });
        }
        for row in rows {
            self.check_width(row.len())?;
        }
        let per_sample = par::map_indexed(rows.len(), |i| {
            self.activations
                .iter()
                .zip(&rows[i])
                .map(|(activation, &x)| activation.eval(x).abs())
                .collect::<Vec<f64>>()
        });
        let mut totals = vec![0.0; self.activations.len()];
        for sample in &per_sample {
            for (total, value) in totals.iter_mut().zip(sample) {
                *total += value;
            }
        }
        let n = rows.len() as f64;
        totals.iter_mut().for_each(|t| *t /= n);
        let sum: f64 = totals.iter().sum();
        if sum > 0.0 {
            totals.iter_mut().for_each(|t| *t /= sum);
        }
        let mut entries: Vec<ImportanceEntry> = self
            .activations
            .iter()
            .zip(totals)
            .map(|(activation, alpha)| ImportanceEntry {
                feature: activation.input_name().to_string(),
                alpha,
                rank: 0,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.alpha
                .total_cmp(&a.alpha)
                .then_with(|| a.feature.cmp(&b.feature))
        });
        for (i, entry) in entries.iter_mut().enumerate() {
            entry.rank = i + 1;
        }
        Ok(ImportanceReport { entries })
    }
}

/// One input's importance score and 1-based rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub alpha: f64,
    pub rank: usize,
}

/// All inputs ranked by importance (rank 1 first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn alpha_of(&self, feature: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.feature == feature)
            .map(|e| e.alpha)
    }

    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.feature == feature)
            .map(|e| e.rank)
    }
}
