//! Frequency-domain features: per-variable DFT, then a flat named vector of
//! DC, magnitude, and phase components.
//!
//! The transform is the unnormalized forward DFT
//! `X(f) = sum_t x(t) * exp(-j*2*pi*f*t/T)`, so the DC entry is the plain
//! sum of the series. Per variable the retained layout is
//! `[M(0), M(1), phi(1), ..., M(F), phi(F)]`; `phi(0)` is excluded because
//! it only duplicates the sign of the DC term.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeSeriesSample};
use crate::error::{Result, TskanError};
use crate::par;

/// Magnitude below which a phase is reported as 0 instead of atan2 noise.
pub const PHASE_EPSILON: f64 = 1e-12;

/// DFT coefficients of one variable's series, `f = 0..T-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Unnormalized forward DFT of a real series.
pub fn dft(series: &[f64]) -> Result<Spectrum> {
    let t_len = series.len();
    if t_len == 0 {
        return Err(TskanError::EmptySeries);
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(TskanError::NonFiniteValue {
            sample_id: "series".to_string(),
            variable: "input".to_string(),
        });
    }
    // One table of the T roots of unity; (f*t) mod T keeps angles small.
    let step = -2.0 * std::f64::consts::PI / t_len as f64;
    let twiddle: Vec<Complex64> = (0..t_len)
        .map(|m| Complex64::new((step * m as f64).cos(), (step * m as f64).sin()))
        .collect();
    let coefficients = (0..t_len)
        .map(|f| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &x) in series.iter().enumerate() {
                acc += twiddle[(f * t) % t_len] * x;
            }
            acc
        })
        .collect();
    Ok(Spectrum { coefficients })
}

/// DC plus per-frequency magnitude and phase, `f = 1..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComponents {
    /// Signed X(0): the plain sum of the series.
    pub dc: f64,
    pub magnitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

/// Extract DC, magnitudes, and phases up to `cutoff` from a spectrum.
///
/// Phases lie in (-pi, pi] and are 0 whenever the magnitude is below
/// [`PHASE_EPSILON`].
pub fn extract_components(spectrum: &Spectrum, cutoff: usize) -> Result<SpectralComponents> {
    let t_len = spectrum.len();
    if t_len == 0 {
        return Err(TskanError::EmptySeries);
    }
    let max = t_len / 2;
    if cutoff > max {
        return Err(TskanError::FrequencyCutoff {
            cutoff,
            length: t_len,
            max,
        });
    }
    let dc = spectrum.coefficients[0];
    if dc.im.abs() >= 1e-9 {
        return Err(TskanError::NonRealDc { imag: dc.im });
    }
    let mut magnitudes = Vec::with_capacity(cutoff);
    let mut phases = Vec::with_capacity(cutoff);
    for f in 1..=cutoff {
        let c = spectrum.coefficients[f];
        let magnitude = c.norm();
        magnitudes.push(magnitude);
        phases.push(if magnitude < PHASE_EPSILON {
            0.0
        } else {
            let phi = c.im.atan2(c.re);
            // atan2 can return exactly -pi; fold it onto +pi.
            if phi == -std::f64::consts::PI {
                std::f64::consts::PI
            } else {
                phi
            }
        });
    }
    Ok(SpectralComponents {
        dc: dc.re,
        magnitudes,
        phases,
    })
}

/// Which component of a variable's spectrum a feature refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Magnitude,
    Phase,
}

/// Parsed form of the feature-name grammar `M_<var>(<f>)` / `phi_<var>(<f>)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureName {
    pub kind: FeatureKind,
    pub variable: String,
    pub frequency: usize,
}

impl FeatureName {
    pub fn magnitude(variable: &str, frequency: usize) -> Self {
        FeatureName {
            kind: FeatureKind::Magnitude,
            variable: variable.to_string(),
            frequency,
        }
    }

    pub fn phase(variable: &str, frequency: usize) -> Self {
        FeatureName {
            kind: FeatureKind::Phase,
            variable: variable.to_string(),
            frequency,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let bad = |reason: &str| TskanError::BadFeatureName {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        if !name.is_ascii() {
            return Err(bad("must be ASCII"));
        }
        let (kind, rest) = if let Some(rest) = name.strip_prefix("M_") {
            (FeatureKind::Magnitude, rest)
        } else if let Some(rest) = name.strip_prefix("phi_") {
            (FeatureKind::Phase, rest)
        } else {
            return Err(bad("expected prefix 'M_' or 'phi_'"));
        };
        let open = rest.rfind('(').ok_or_else(|| bad("missing '('"))?;
        let variable = &rest[..open];
        if variable.is_empty() {
            return Err(bad("empty variable name"));
        }
        let tail = &rest[open + 1..];
        let close = tail.find(')').ok_or_else(|| bad("missing ')'"))?;
        if close + 1 != tail.len() {
            return Err(bad("trailing characters after ')'"));
        }
        let frequency: usize = tail[..close]
            .parse()
            .map_err(|_| bad("frequency must be a nonnegative integer"))?;
        Ok(FeatureName {
            kind,
            variable: variable.to_string(),
            frequency,
        })
    }
}

impl std::fmt::Display for FeatureName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            FeatureKind::Magnitude => write!(f, "M_{}({})", self.variable, self.frequency),
            FeatureKind::Phase => write!(f, "phi_{}({})", self.variable, self.frequency),
        }
    }
}

/// Feature names for the given variables at cutoff `F`, in vector order.
pub fn feature_names(variables: &[String], cutoff: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(variables.len() * (2 * cutoff + 1));
    for variable in variables {
        names.push(FeatureName::magnitude(variable, 0).to_string());
        for f in 1..=cutoff {
            names.push(FeatureName::magnitude(variable, f).to_string());
            names.push(FeatureName::phase(variable, f).to_string());
        }
    }
    names
}

/// A sample's flattened frequency features with their names.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyFeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    pub cutoff: usize,
}

/// DFT every variable of a sample and flatten components up to `cutoff`.
pub fn build_feature_vector(
    sample: &TimeSeriesSample,
    variables: &[String],
    cutoff: usize,
) -> Result<FrequencyFeatureVector> {
    if variables.len() != sample.num_variables() {
        return Err(TskanError::DimensionMismatch {
            expected: variables.len(),
            actual: sample.num_variables(),
        });
    }
    let mut values = Vec::with_capacity(variables.len() * (2 * cutoff + 1));
    for series in &sample.values {
        let spectrum = dft(series)?;
        let components = extract_components(&spectrum, cutoff)?;
        values.push(components.dc);
        for f in 0..cutoff {
            values.push(components.magnitudes[f]);
            values.push(components.phases[f]);
        }
    }
    Ok(FrequencyFeatureVector {
        values,
        names: feature_names(variables, cutoff),
        cutoff,
    })
}

/// Feature matrix (row per sample) for a whole dataset, plus column names.
pub fn build_feature_matrix(ds: &Dataset, cutoff: usize) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    ds.check_uniform_length()?;
    if ds.is_empty() {
        return Err(TskanError::EmptyDataset);
    }
    let rows = par::map_indexed(ds.len(), |i| {
        build_feature_vector(&ds.samples[i], &ds.variable_names, cutoff).map(|fv| fv.values)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((rows, feature_names(&ds.variable_names, cutoff)))
}

/// Column indices of the `M_<var>(0)` features (the per-variable sums).
pub fn dc_only_columns(names: &[String]) -> Vec<usize> {
    names
        .iter()
        .enumerate()
        .filter(|(_, name)| {
            FeatureName::parse(name)
                .map(|f| f.kind == FeatureKind::Magnitude && f.frequency == 0)
                .unwrap_or(false)
        })
        .map(|(i, _)| i)
        .collect()
}
