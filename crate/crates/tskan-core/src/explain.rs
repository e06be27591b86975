//! Interpretability exports: per-feature activation curves in original
//! units, an importance table, and self-contained SVG plots.
//!
//! Curves are sampled in scaled input space and mapped back through the
//! scaler for the x axis; y values are raw activation contributions in MOS
//! units. DC features additionally divide the x axis by the series length
//! so a per-chunk average (e.g. 24 fps) is shown instead of the raw sum.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{FeatureSchema, ModelBundle};
use crate::data::ScalerParams;
use crate::error::{Result, TskanError};
use crate::kan::KanModel;
use crate::pipeline::PipelineResult;
use crate::spectral::{FeatureKind, FeatureName};

/// Sampled univariate activation: x in original display units, y in MOS
/// contribution units.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCurve {
    pub feature_name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Divisor applied to the x axis for display (series length for DC
    /// features, 1 otherwise).
    pub display_scale: f64,
}

/// Which scaled-space span a curve covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangePolicy {
    /// Quantile span of the training data recorded at fit time.
    Data,
    /// The activation's full grid span.
    Grid,
}

/// Sample one activation at `n_points` equally spaced scaled inputs.
pub fn sample_activation_curve(
    model: &KanModel,
    scaler: &ScalerParams,
    schema: &FeatureSchema,
    feature: &str,
    n_points: usize,
    policy: RangePolicy,
) -> Result<ActivationCurve> {
    if n_points < 2 {
        return Err(TskanError::InvalidConfig(
            "curves need at least 2 points".to_string(),
        ));
    }
    let activation = model
        .activations()
        .iter()
        .find(|a| a.input_name() == feature)
        .ok_or_else(|| TskanError::UnknownFeature(feature.to_string()))?;
    let column = scaler
        .feature_names
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| TskanError::UnknownFeature(feature.to_string()))?;

    let (lo, hi) = match policy {
        RangePolicy::Data => activation.curve_range(),
        RangePolicy::Grid => activation.grid_range(),
    };
    let display_scale = match FeatureName::parse(feature) {
        Ok(parsed) if parsed.kind == FeatureKind::Magnitude && parsed.frequency == 0 => {
            schema.target_length as f64
        }
        _ => 1.0,
    };

    let step = (hi - lo) / (n_points - 1) as f64;
    let mut xs = Vec::with_capacity(n_points);
    let mut ys = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let scaled = if i + 1 == n_points { hi } else { lo + step * i as f64 };
        xs.push(scaler.invert_value(column, scaled) / display_scale);
        ys.push(activation.eval(scaled));
    }
    Ok(ActivationCurve {
        feature_name: feature.to_string(),
        xs,
        ys,
        display_scale,
    })
}

/// Options for [`export_explanation_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExportOptions {
    pub n_points: usize,
    pub range_policy: RangePolicy,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            n_points: 201,
            range_policy: RangePolicy::Data,
        }
    }
}

fn significant9(v: f64) -> String {
    format!("{v:.8e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| TskanError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn curve_csv(curve: &ActivationCurve) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in curve.xs.iter().zip(&curve.ys) {
        out.push_str(&significant9(*x));
        out.push(',');
        out.push_str(&significant9(*y));
        out.push('\n');
    }
    out
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct PlotFrame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl PlotFrame {
    fn from_series<'a>(series: impl Iterator<Item = (&'a [f64], &'a [f64])>) -> PlotFrame {
        let mut frame = PlotFrame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for (xs, ys) in series {
            for &x in xs {
                frame.x_min = frame.x_min.min(x);
                frame.x_max = frame.x_max.max(x);
            }
            for &y in ys {
                frame.y_min = frame.y_min.min(y);
                frame.y_max = frame.y_max.max(y);
            }
        }
        if frame.x_max - frame.x_min < 1e-12 {
            frame.x_min -= 0.5;
            frame.x_max += 0.5;
        }
        if frame.y_max - frame.y_min < 1e-12 {
            frame.y_min -= 0.5;
            frame.y_max += 0.5;
        }
        frame
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min)
            * (SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        SVG_HEIGHT - MARGIN_BOTTOM
            - (y - self.y_min) / (self.y_max - self.y_min)
                * (SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ",
            "viewBox=\"0 0 640 480\">\n",
            "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n",
            "<text x=\"320\" y=\"24\" text-anchor=\"middle\" ",
            "font-family=\"monospace\" font-size=\"16\">{}</text>\n"
        ),
        xml_escape(title)
    )
}

fn svg_axes(frame: &PlotFrame) -> String {
    let x0 = MARGIN_LEFT;
    let x1 = SVG_WIDTH - MARGIN_RIGHT;
    let y0 = SVG_HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let mut out = format!(
        "<path d=\"M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n"
    );
    let label = |x: f64, y: f64, anchor: &str, text: String| {
        format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" \
             font-family=\"monospace\" font-size=\"12\">{text}</text>\n"
        )
    };
    out.push_str(&label(x0, y0 + 18.0, "middle", format!("{:.4}", frame.x_min)));
    out.push_str(&label(x1, y0 + 18.0, "middle", format!("{:.4}", frame.x_max)));
    out.push_str(&label(x0 - 6.0, y0, "end", format!("{:.4}", frame.y_min)));
    out.push_str(&label(x0 - 6.0, y1 + 4.0, "end", format!("{:.4}", frame.y_max)));
    out
}

fn svg_polyline(frame: &PlotFrame, xs: &[f64], ys: &[f64], stroke: &str, opacity: f64) -> String {
    let mut d = String::new();
    for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
        let command = if i == 0 { 'M' } else { 'L' };
        d.push_str(&format!("{command}{:.2} {:.2} ", frame.px(*x), frame.py(*y)));
    }
    format!(
        "<path d=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\" \
         stroke-opacity=\"{opacity:.3}\"/>\n",
        d.trim_end()
    )
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn curve_svg(curve: &ActivationCurve) -> String {
    let frame = PlotFrame::from_series(std::iter::once((curve.xs.as_slice(), curve.ys.as_slice())));
    let mut out = svg_open(&curve.feature_name);
    out.push_str(&svg_axes(&frame));
    out.push_str(&svg_polyline(&frame, &curve.xs, &curve.ys, "#1f5fa8", 1.0));
    out.push_str("</svg>\n");
    out
}

fn importance_summary_svg(curves: &[(ActivationCurve, f64)]) -> String {
    let mut out = svg_open("sum of activations (opacity = importance)");
    if curves.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let frame = PlotFrame::from_series(
        curves
            .iter()
            .map(|(c, _)| (c.xs.as_slice(), c.ys.as_slice())),
    );
    out.push_str(&svg_axes(&frame));
    let alpha_max = curves
        .iter()
        .map(|(_, a)| *a)
        .fold(f64::MIN_POSITIVE, f64::max);
    for (curve, alpha) in curves {
        let opacity = (alpha / alpha_max).clamp(0.15, 1.0);
        out.push_str(&svg_polyline(&frame, &curve.xs, &curve.ys, "#1f5fa8", opacity));
        // Tag each line with its feature at the right edge.
        let y_last = frame.py(*curve.ys.last().expect("curves have points"));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{y_last:.2}\" font-family=\"monospace\" \
             font-size=\"10\" fill-opacity=\"{opacity:.3}\">{}</text>\n",
            SVG_WIDTH - MARGIN_RIGHT - 140.0,
            xml_escape(&curve.feature_name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Write curve CSVs and SVGs, the importance table, and a summary plot.
///
/// Returns the manifest of relative paths, which is also written to
/// `manifest.json` in the output directory.
pub fn export_explanation_report(
    result: &PipelineResult,
    out_dir: &Path,
    options: &ExportOptions,
) -> Result<Vec<String>> {
    std::fs::create_dir_all(out_dir).map_err(|e| TskanError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let bundle: &ModelBundle = &result.model;
    let mut manifest = Vec::new();
    let mut summary_curves = Vec::new();

    for feature in &result.selected_features {
        let curve = sample_activation_curve(
            &bundle.model,
            &bundle.scaler,
            &bundle.schema,
            feature,
            options.n_points,
            options.range_policy,
        )?;
        let csv_name = format!("curve_{feature}.csv");
        write_file(&out_dir.join(&csv_name), &curve_csv(&curve))?;
        manifest.push(csv_name);
        let svg_name = format!("curve_{feature}.svg");
        write_file(&out_dir.join(&svg_name), &curve_svg(&curve))?;
        manifest.push(svg_name);
        let alpha = result.stage1_importance.alpha_of(feature).unwrap_or(0.0);
        summary_curves.push((curve, alpha));
    }

    let mut importance = String::from("name,alpha,rank\n");
    for entry in &result.stage1_importance.entries {
        importance.push_str(&format!(
            "{},{},{}\n",
            entry.feature,
            significant9(entry.alpha),
            entry.rank
        ));
    }
    write_file(&out_dir.join("importance.csv"), &importance)?;
    manifest.push("importance.csv".to_string());

    write_file(
        &out_dir.join("importance.svg"),
        &importance_summary_svg(&summary_curves),
    )?;
    manifest.push("importance.svg".to_string());

    let manifest_json = serde_json::to_string_pretty(&manifest).map_err(|e| {
        TskanError::ModelFormat {
            path: out_dir.display().to_string(),
            message: e.to_string(),
        }
    })?;
    write_file(&out_dir.join("manifest.json"), &manifest_json)?;

    Ok(manifest)
}

/// One reference cosine `cos(2*pi*t/T + phase)` sampled at integer steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub phase: f64,
    pub values: Vec<f64>,
}

/// Reference waves showing what a phase feature means: where in the window
/// the f=1 pattern peaks.
pub fn phase_illustration(series_length: usize, phases: &[f64]) -> Result<Vec<PhaseCurve>> {
    if series_length < 4 {
        return Err(TskanError::InvalidConfig(format!(
            "phase illustration needs at least 4 steps, got {series_length}"
        )));
    }
    Ok(phases
        .iter()
        .map(|&phase| PhaseCurve {
            phase,
            values: (0..series_length)
                .map(|t| {
                    (2.0 * std::f64::consts::PI * t as f64 / series_length as f64 + phase).cos()
                })
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kan::{uniform_grid, SplineActivation};

    fn toy_setup() -> (KanModel, ScalerParams, FeatureSchema) {
        let activation = SplineActivation::new(
            "M_stalling(0)",
            uniform_grid(-1.2, 1.2, 8),
            3,
            (0..11).map(|i| (i as f64 - 5.0) / 10.0).collect(),
            0.5,
            (-1.0, 1.0),
        )
        .unwrap();
        let model = KanModel::new(vec![activation], 0.0).unwrap();
        let scaler = ScalerParams {
            center: vec![32.0],
            scale: vec![16.0],
            feature_names: vec!["M_stalling(0)".to_string()],
        };
        let schema = FeatureSchema {
            cutoff: 1,
            variables: vec!["stalling".to_string()],
            target_length: 16,
        };
        (model, scaler, schema)
    }

    #[test]
    fn curve_matches_eval_and_round_trips_x() {
        let (model, scaler, schema) = toy_setup();
        let curve = sample_activation_curve(
            &model,
            &scaler,
            &schema,
            "M_stalling(0)",
            101,
            RangePolicy::Data,
        )
        .unwrap();
        assert_eq!(curve.display_scale, 16.0);
        assert_eq!(curve.xs.len(), 101);
        let activation = &model.activations()[0];
        let (lo, hi) = activation.curve_range();
        for (i, (&x, &y)) in curve.xs.iter().zip(&curve.ys).enumerate() {
            let scaled = lo + (hi - lo) * i as f64 / 100.0;
            assert!((y - activation.eval(scaled)).abs() < 1e-10);
            // x-axis round trip: redo scale and display transforms.
            let back = scaler.apply_value(0, x * curve.display_scale);
            assert!((back - scaled).abs() < 1e-9, "{back} vs {scaled}");
        }
        assert!(curve.xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_policy_spans_the_knots() {
        let (model, scaler, schema) = toy_setup();
        let curve = sample_activation_curve(
            &model,
            &scaler,
            &schema,
            "M_stalling(0)",
            11,
            RangePolicy::Grid,
        )
        .unwrap();
        // grid range [-1.2, 1.2] inverts to [32 - 1.2*16, 32 + 1.2*16] / 16.
        assert!((curve.xs[0] - (32.0 - 1.2 * 16.0) / 16.0).abs() < 1e-12);
        assert!((curve.xs[10] - (32.0 + 1.2 * 16.0) / 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_activation_curve_is_flat() {
        let activation = SplineActivation::new(
            "phi_qp(1)",
            uniform_grid(-1.0, 1.0, 4),
            2,
            vec![0.0; 6],
            0.0,
            (-1.0, 1.0),
        )
        .unwrap();
        let model = KanModel::new(vec![activation], 0.0).unwrap();
        let scaler = ScalerParams {
            center: vec![0.0],
            scale: vec![1.0],
            feature_names: vec!["phi_qp(1)".to_string()],
        };
        let schema = FeatureSchema {
            cutoff: 1,
            variables: vec!["qp".to_string()],
            target_length: 16,
        };
        let curve =
            sample_activation_curve(&model, &scaler, &schema, "phi_qp(1)", 21, RangePolicy::Data)
                .unwrap();
        assert!(curve.ys.iter().all(|&y| y == 0.0));
        assert_eq!(curve.display_scale, 1.0);
    }

    #[test]
    fn unknown_feature_is_an_error() {
        let (model, scaler, schema) = toy_setup();
        let err = sample_activation_curve(&model, &scaler, &schema, "nope", 10, RangePolicy::Data)
            .unwrap_err();
        assert!(matches!(err, TskanError::UnknownFeature(_)), "{err:?}");
    }

    #[test]
    fn csv_rendering_is_locale_independent() {
        let curve = ActivationCurve {
            feature_name: "f".to_string(),
            xs: vec![0.5, 1.0],
            ys: vec![-0.25, 0.125],
            display_scale: 1.0,
        };
        let csv = curve_csv(&curve);
        assert_eq!(csv, "x,y\n5.00000000e-1,-2.50000000e-1\n1.00000000e0,1.25000000e-1\n");
    }

    #[test]
    fn phase_zero_peaks_at_start() {
        let curves = phase_illustration(16, &[0.0]).unwrap();
        let values = &curves[0].values;
        let (argmax, _) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(argmax, 0);
    }

    #[test]
    fn phase_minus_half_pi_peaks_at_quarter() {
        let curves = phase_illustration(16, &[-std::f64::consts::FRAC_PI_2]).unwrap();
        let values = &curves[0].values;
        let (argmax, _) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(argmax, 4);
    }

    #[test]
    fn phase_about_half_pi_peaks_late() {
        // 1.57 rad: the high values sit at the end of the window.
        let curves = phase_illustration(16, &[1.57]).unwrap();
        let values = &curves[0].values;
        let (argmax, _) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(argmax, 12);
        assert!(argmax >= 8, "peak should fall in the second half");
    }

    #[test]
    fn phase_illustration_needs_four_steps() {
        assert!(phase_illustration(3, &[0.0]).is_err());
    }
}
