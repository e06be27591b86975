//! Deterministic synthetic datasets with effects planted directly in
//! frequency space.
//!
//! Each variable's series is built from a drawn DC level, an f=1 amplitude,
//! and an f=1 phase, so the unnormalized DFT recovers those components
//! exactly. Labels are sums of planted univariate functions of the drawn
//! components plus Gaussian noise, which makes end-to-end recovery checks
//! possible without any licensed dataset: the informative features, their
//! shapes, and their exact value ranges are all known.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeSeriesSample};
use crate::error::{Result, TskanError};
use crate::spectral::{FeatureKind, FeatureName};

/// Univariate effect applied to a latent `u` drawn uniformly from [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectShape {
    Linear,
    Quadratic,
    Sine,
    Threshold,
}

impl EffectShape {
    pub fn apply(&self, u: f64) -> f64 {
        match self {
            EffectShape::Linear => u,
            EffectShape::Quadratic => u * u,
            EffectShape::Sine => (std::f64::consts::PI * u).sin(),
            EffectShape::Threshold => {
                if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One informative feature: `magnitude * shape(u)` is added to the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    /// Feature name under the grammar, e.g. `M_stalling(0)`; only f=0 and
    /// f=1 components can be planted.
    pub feature: String,
    pub shape: EffectShape,
    pub magnitude: f64,
}

/// Generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub variables: Vec<String>,
    pub n_steps: usize,
    /// Standard deviation of the Gaussian noise added to the label.
    pub noise_std: f64,
    pub effects: Vec<PlantedEffect>,
    pub seed: u64,
}

/// A planted effect plus the affine map from feature value back to `u`:
/// `u = (feature - feature_center) / feature_halfspan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectTruth {
    pub feature: String,
    pub shape: EffectShape,
    pub magnitude: f64,
    pub feature_center: f64,
    pub feature_halfspan: f64,
}

/// What the generator actually planted, for recovery checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub effects: Vec<EffectTruth>,
    pub seed: u64,
    pub noise_std: f64,
    pub variables: Vec<String>,
    pub n_steps: usize,
    pub label_min: f64,
    pub label_max: f64,
}

// Component draw ranges. The per-step DC level is 1.5 +/- 0.75, the f=1
// amplitude 0.8 +/- 0.5 (always positive so phases stay identifiable), and
// the phase 0 +/- 2.8 (safely inside the principal branch).
const DC_CENTER: f64 = 1.5;
const DC_HALFSPAN: f64 = 0.75;
const AMP_CENTER: f64 = 0.8;
const AMP_HALFSPAN: f64 = 0.5;
const PHASE_HALFSPAN: f64 = 2.8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Component {
    Dc,
    Magnitude1,
    Phase1,
}

fn component_of(parsed: &FeatureName) -> Result<Component> {
    match (parsed.kind, parsed.frequency) {
        (FeatureKind::Magnitude, 0) => Ok(Component::Dc),
        (FeatureKind::Magnitude, 1) => Ok(Component::Magnitude1),
        (FeatureKind::Phase, 1) => Ok(Component::Phase1),
        _ => Err(TskanError::BadFeatureName {
            name: parsed.to_string(),
            reason: "generator can only plant f=0 or f=1 components".to_string(),
        }),
    }
}

/// Feature-space center and halfspan of a component for series length T.
fn feature_span(component: Component, n_steps: usize) -> (f64, f64) {
    let t = n_steps as f64;
    match component {
        Component::Dc => (DC_CENTER * t, DC_HALFSPAN * t),
        Component::Magnitude1 => (AMP_CENTER * t / 2.0, AMP_HALFSPAN * t / 2.0),
        Component::Phase1 => (0.0, PHASE_HALFSPAN),
    }
}

struct ResolvedEffect {
    variable_index: usize,
    component: Component,
    shape: EffectShape,
    magnitude: f64,
}

fn resolve_effects(spec: &SynthSpec) -> Result<Vec<ResolvedEffect>> {
    let mut seen = std::collections::BTreeSet::new();
    spec.effects
        .iter()
        .map(|effect| {
            if !seen.insert(effect.feature.as_str()) {
                return Err(TskanError::InvalidConfig(format!(
                    "duplicate planted effect on '{}'",
                    effect.feature
                )));
            }
            if !effect.magnitude.is_finite() {
                return Err(TskanError::InvalidConfig(format!(
                    "magnitude for '{}' must be finite",
                    effect.feature
                )));
            }
            let parsed = FeatureName::parse(&effect.feature)?;
            let variable_index = spec
                .variables
                .iter()
                .position(|v| *v == parsed.variable)
                .ok_or_else(|| TskanError::UnknownFeature(effect.feature.clone()))?;
            Ok(ResolvedEffect {
                variable_index,
                component: component_of(&parsed)?,
                shape: effect.shape,
                magnitude: effect.magnitude,
            })
        })
        .collect()
}

fn validate_spec(spec: &SynthSpec) -> Result<()> {
    if spec.n_samples == 0 {
        return Err(TskanError::InvalidConfig("need at least 1 sample".to_string()));
    }
    if spec.n_steps < 3 {
        return Err(TskanError::InvalidConfig(
            "need at least 3 time steps for distinct f=0 and f=1 components".to_string(),
        ));
    }
    if spec.variables.is_empty() {
        return Err(TskanError::InvalidConfig("need at least 1 variable".to_string()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for v in &spec.variables {
        if !seen.insert(v.as_str()) {
            return Err(TskanError::InvalidConfig(format!("duplicate variable '{v}'")));
        }
    }
    if !spec.noise_std.is_finite() || spec.noise_std < 0.0 {
        return Err(TskanError::InvalidConfig(
            "noise_std must be finite and nonnegative".to_string(),
        ));
    }
    Ok(())
}

/// Standard normal via Box-Muller; always consumes exactly two draws.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let r1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let r2: f64 = rng.gen();
    (-2.0 * r1.ln()).sqrt() * (2.0 * std::f64::consts::PI * r2).cos()
}

/// Generate a dataset whose labels follow the planted effects exactly
/// (up to the label noise).
pub fn generate(spec: &SynthSpec) -> Result<(Dataset, GroundTruth)> {
    validate_spec(spec)?;
    let effects = resolve_effects(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t = spec.n_steps;
    let v = spec.variables.len();
    let two_pi_over_t = 2.0 * std::f64::consts::PI / t as f64;

    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut label_min = f64::INFINITY;
    let mut label_max = f64::NEG_INFINITY;
    // Latents per variable: (u_dc, u_amplitude, u_phase).
    let mut latents = vec![(0.0, 0.0, 0.0); v];

    for n in 0..spec.n_samples {
        let mut values = Vec::with_capacity(v);
        for latent in latents.iter_mut().take(v) {
            *latent = (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
        }
        for &(u_dc, u_amp, u_phase) in &latents {
            let level = DC_CENTER + DC_HALFSPAN * u_dc;
            let amplitude = AMP_CENTER + AMP_HALFSPAN * u_amp;
            let phase = PHASE_HALFSPAN * u_phase;
            let series: Vec<f64> = (0..t)
                .map(|step| level + amplitude * (two_pi_over_t * step as f64 + phase).cos())
                .collect();
            values.push(series);
        }
        let noise = standard_normal(&mut rng) * spec.noise_std;
        let mut label = noise;
        for effect in &effects {
            let (u_dc, u_amp, u_phase) = latents[effect.variable_index];
            let u = match effect.component {
                Component::Dc => u_dc,
                Component::Magnitude1 => u_amp,
                Component::Phase1 => u_phase,
            };
            label += effect.magnitude * effect.shape.apply(u);
        }
        label_min = label_min.min(label);
        label_max = label_max.max(label);
        samples.push(TimeSeriesSample {
            sample_id: format!("s{n:05}"),
            values,
            label,
        });
    }

    let truth = GroundTruth {
        effects: spec
            .effects
            .iter()
            .zip(&effects)
            .map(|(effect, resolved)| {
                let (center, halfspan) = feature_span(resolved.component, t);
                EffectTruth {
                    feature: effect.feature.clone(),
                    shape: effect.shape,
                    magnitude: effect.magnitude,
                    feature_center: center,
                    feature_halfspan: halfspan,
                }
            })
            .collect(),
        seed: spec.seed,
        noise_std: spec.noise_std,
        variables: spec.variables.clone(),
        n_steps: t,
        label_min,
        label_max,
    };

    Ok((
        Dataset {
            samples,
            variable_names: spec.variables.clone(),
            target_length: t,
        },
        truth,
    ))
}
