//! Multivariate time-series datasets with MOS labels.
//!
//! Datasets are read from a long-format CSV
//! (`sample_id,chunk_index,<var1>,...,<varV>,mos`, chunk_index 0-based, MOS
//! repeated identically across a sample's rows). Loading groups rows by
//! `sample_id`, orders chunks by `chunk_index`, and sorts samples by id so
//! the result is independent of row order in the file.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TskanError};
use crate::stats::quantile_sorted;

/// One session: a V x T matrix of raw feature series plus a scalar label.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    pub sample_id: String,
    /// Row per variable, column per time step (video chunk).
    pub values: Vec<Vec<f64>>,
    /// MOS score, already z-scored.
    pub label: f64,
}

impl TimeSeriesSample {
    pub fn num_variables(&self) -> usize {
        self.values.len()
    }

    pub fn num_steps(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// An ordered collection of samples sharing one variable schema.
///
/// `target_length` is the declared common number of time steps. The loader
/// sets it to the longest observed sample; [`enforce_length`] makes it
/// binding.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<TimeSeriesSample>,
    pub variable_names: Vec<String>,
    pub target_length: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Errors unless every sample has exactly `target_length` steps.
    pub fn check_uniform_length(&self) -> Result<()> {
        for sample in &self.samples {
            if sample.num_steps() != self.target_length {
                return Err(TskanError::MixedLengths {
                    expected: self.target_length,
                    sample_id: sample.sample_id.clone(),
                    actual: sample.num_steps(),
                });
            }
        }
        Ok(())
    }
}

/// Options for [`load_dataset`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Expected variable columns, in output order. `None` takes the columns
    /// between `chunk_index` and `mos` as found in the header.
    pub schema: Option<Vec<String>>,
    /// Declared inclusive label range; z-scored MOS spans [-2.5, 2.5].
    pub label_range: (f64, f64),
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            schema: None,
            label_range: (-2.5, 2.5),
        }
    }
}

struct RowGroup {
    /// (chunk_index, per-variable values, label)
    rows: Vec<(usize, Vec<f64>, f64)>,
}

/// Load a long-format dataset CSV.
pub fn load_dataset(path: &Path, options: &LoadOptions) -> Result<Dataset> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(&display, e))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(&display, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < 4 || headers[0] != "sample_id" || headers[1] != "chunk_index" {
        return Err(TskanError::CsvFormat {
            path: display,
            message: format!(
                "header must be 'sample_id,chunk_index,<variables...>,mos', got '{}'",
                headers.join(",")
            ),
        });
    }
    let mos_column = headers.len() - 1;
    if headers[mos_column] != "mos" {
        return Err(TskanError::MissingColumn {
            column: "mos".to_string(),
            available: headers.join(","),
        });
    }
    let file_variables = &headers[2..mos_column];

    // Map output variable order onto file column positions.
    let variable_names: Vec<String> = match &options.schema {
        Some(schema) => schema.clone(),
        None => file_variables.to_vec(),
    };
    {
        let mut seen = std::collections::BTreeSet::new();
        for name in &variable_names {
            if !seen.insert(name.as_str()) {
                return Err(TskanError::CsvFormat {
                    path: display.clone(),
                    message: format!("duplicate variable column '{name}'"),
                });
            }
        }
    }
    let mut column_of = Vec::with_capacity(variable_names.len());
    for name in &variable_names {
        match file_variables.iter().position(|v| v == name) {
            Some(pos) => column_of.push(2 + pos),
            None => {
                return Err(TskanError::MissingColumn {
                    column: name.clone(),
                    available: headers.join(","),
                })
            }
        }
    }

    let parse_cell = |row: usize, column: usize, raw: &str| -> Result<f64> {
        raw.trim()
            .parse::<f64>()
            .map_err(|_| TskanError::NonNumericCell {
                path: display.clone(),
                row,
                column: headers[column].clone(),
                value: raw.to_string(),
            })
    };

    let mut groups: BTreeMap<String, RowGroup> = BTreeMap::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 2; // 1-based, after the header line
        let record = record.map_err(|e| csv_error(&display, e))?;
        if record.len() != headers.len() {
            return Err(TskanError::CsvFormat {
                path: display.clone(),
                message: format!(
                    "row {row}: expected {} fields, got {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        let sample_id = record.get(0).unwrap_or("").to_string();
        if sample_id.is_empty() {
            return Err(TskanError::CsvFormat {
                path: display.clone(),
                message: format!("row {row}: empty sample_id"),
            });
        }
        let chunk_raw = record.get(1).unwrap_or("");
        let chunk_index: usize =
            chunk_raw
                .trim()
                .parse()
                .map_err(|_| TskanError::NonNumericCell {
                    path: display.clone(),
                    row,
                    column: "chunk_index".to_string(),
                    value: chunk_raw.to_string(),
                })?;
        let mut values = Vec::with_capacity(column_of.len());
        for (&col, name) in column_of.iter().zip(&variable_names) {
            let v = parse_cell(row, col, record.get(col).unwrap_or(""))?;
            if !v.is_finite() {
                return Err(TskanError::NonFiniteValue {
                    sample_id: sample_id.clone(),
                    variable: name.clone(),
                });
            }
            values.push(v);
        }
        let label = parse_cell(row, mos_column, record.get(mos_column).unwrap_or(""))?;
        groups
            .entry(sample_id)
            .or_insert_with(|| RowGroup { rows: Vec::new() })
            .rows
            .push((chunk_index, values, label));
    }

    if groups.is_empty() {
        return Err(TskanError::EmptyDataset);
    }

    let (lo, hi) = options.label_range;
    let mut samples = Vec::with_capacity(groups.len());
    let mut max_len = 0usize;
    for (sample_id, mut group) in groups {
        group.rows.sort_by_key(|(chunk, _, _)| *chunk);
        let steps = group.rows.len();
        for (offset, (chunk, _, _)) in group.rows.iter().enumerate() {
            if *chunk != offset {
                // Either a duplicate index or a gap in the 0..T-1 cover.
                if offset > 0 && *chunk == group.rows[offset - 1].0 {
                    return Err(TskanError::DuplicateChunk {
                        sample_id: sample_id.clone(),
                        chunk_index: *chunk,
                    });
                }
                return Err(TskanError::ChunkGap {
                    sample_id: sample_id.clone(),
                    expected: steps,
                });
            }
        }
        let label = group.rows[0].2;
        for (_, _, other) in &group.rows {
            if *other != label {
                return Err(TskanError::InconsistentLabel {
                    sample_id: sample_id.clone(),
                    first: label,
                    other: *other,
                });
            }
        }
        if !label.is_finite() || label < lo || label > hi {
            return Err(TskanError::LabelOutOfRange {
                sample_id,
                label,
                lo,
                hi,
            });
        }
        let mut values = vec![vec![0.0; steps]; variable_names.len()];
        for (t, (_, row, _)) in group.rows.iter().enumerate() {
            for (v, &x) in row.iter().enumerate() {
                values[v][t] = x;
            }
        }
        max_len = max_len.max(steps);
        samples.push(TimeSeriesSample {
            sample_id,
            values,
            label,
        });
    }

    Ok(Dataset {
        samples,
        variable_names,
        target_length: max_len,
    })
}

fn csv_error(path: &str, e: csv::Error) -> TskanError {
    if let csv::ErrorKind::Io(io) = e.into_kind() {
        TskanError::Io {
            path: path.to_string(),
            source: io,
        }
    } else {
        TskanError::CsvFormat {
            path: path.to_string(),
            message: "malformed CSV".to_string(),
        }
    }
}

/// Write a dataset back out in the long CSV format used by [`load_dataset`].
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("sample_id,chunk_index,");
    out.push_str(&ds.variable_names.join(","));
    out.push_str(",mos\n");
    for sample in &ds.samples {
        for t in 0..sample.num_steps() {
            out.push_str(&sample.sample_id);
            out.push(',');
            out.push_str(&t.to_string());
            for row in &sample.values {
                out.push(',');
                out.push_str(&format!("{}", row[t]));
            }
            out.push(',');
            out.push_str(&format!("{}", sample.label));
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| TskanError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// What to do with samples longer than the target length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthPolicy {
    /// Remove longer samples; shorter ones are still an error.
    Drop,
    /// Any deviation from the target length is an error.
    Error,
}

/// Fix the dataset to a common length of exactly `max_len` steps.
///
/// Returns the enforced dataset and the number of samples dropped.
pub fn enforce_length(
    ds: Dataset,
    max_len: usize,
    policy: LengthPolicy,
) -> Result<(Dataset, usize)> {
    if max_len == 0 {
        return Err(TskanError::InvalidConfig(
            "maximum length must be at least 1".to_string(),
        ));
    }
    let mut kept = Vec::with_capacity(ds.samples.len());
    let mut dropped = 0usize;
    for sample in ds.samples {
        let steps = sample.num_steps();
        if steps < max_len {
            return Err(TskanError::SampleTooShort {
                sample_id: sample.sample_id,
                length: steps,
                required: max_len,
            });
        }
        if steps > max_len {
            match policy {
                LengthPolicy::Drop => {
                    dropped += 1;
                    continue;
                }
                LengthPolicy::Error => {
                    return Err(TskanError::SampleTooLong {
                        sample_id: sample.sample_id,
                        length: steps,
                        maximum: max_len,
                    });
                }
            }
        }
        kept.push(sample);
    }
    if kept.is_empty() {
        return Err(TskanError::EmptyDataset);
    }
    Ok((
        Dataset {
            samples: kept,
            variable_names: ds.variable_names,
            target_length: max_len,
        },
        dropped,
    ))
}

/// Train/validation/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction: train,
            val_fraction: val,
            test_fraction: test,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let fractions = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(TskanError::InvalidSplit(
                "fractions must be positive".to_string(),
            ));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(TskanError::InvalidSplit(format!(
                "fractions sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        // 70% training, 15% validation, 15% test.
        SplitSpec::new(0.7, 0.15, 0.15, 0)
    }
}

/// Deterministically shuffle and partition a dataset.
///
/// Validation and test sizes are `round(N * fraction)`, clamped to at least
/// one sample each; the remainder goes to train.
pub fn split_dataset(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    let n = ds.len();
    if n < 3 {
        return Err(TskanError::InsufficientData {
            required: 3,
            actual: n,
        });
    }
    let n_val = ((n as f64 * spec.val_fraction).round() as usize).max(1);
    let n_test = ((n as f64 * spec.test_fraction).round() as usize).max(1);
    let n_train = n.saturating_sub(n_val + n_test);
    if n_train == 0 {
        return Err(TskanError::EmptySplitPart {
            train: n_train,
            val: n_val,
            test: n_test,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let subset = |indices: &[usize]| Dataset {
        samples: indices.iter().map(|&i| ds.samples[i].clone()).collect(),
        variable_names: ds.variable_names.clone(),
        target_length: ds.target_length,
    };
    Ok((
        subset(&order[..n_train]),
        subset(&order[n_train..n_train + n_val]),
        subset(&order[n_train + n_val..]),
    ))
}

/// Per-feature median and interquartile range, the robust scaler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub feature_names: Vec<String>,
}

/// IQR below this is treated as zero spread and replaced by a scale of 1.
const SCALE_FLOOR: f64 = 1e-12;

/// Fit median/IQR statistics per column of a row-major feature matrix.
pub fn fit_robust_scaler(features: &[Vec<f64>], feature_names: &[String]) -> Result<ScalerParams> {
    let n = features.len();
    if n < 2 {
        return Err(TskanError::InsufficientData {
            required: 2,
            actual: n,
        });
    }
    let d = features[0].len();
    if feature_names.len() != d {
        return Err(TskanError::DimensionMismatch {
            expected: d,
            actual: feature_names.len(),
        });
    }
    let mut center = Vec::with_capacity(d);
    let mut scale = Vec::with_capacity(d);
    let mut column = vec![0.0; n];
    for j in 0..d {
        for (i, row) in features.iter().enumerate() {
            if row.len() != d {
                return Err(TskanError::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            if !row[j].is_finite() {
                return Err(TskanError::NonFiniteValue {
                    sample_id: format!("row {i}"),
                    variable: feature_names[j].clone(),
                });
            }
            column[i] = row[j];
        }
        column.sort_by(f64::total_cmp);
        center.push(quantile_sorted(&column, 0.5));
        let iqr = quantile_sorted(&column, 0.75) - quantile_sorted(&column, 0.25);
        scale.push(if iqr < SCALE_FLOOR { 1.0 } else { iqr });
    }
    Ok(ScalerParams {
        center,
        scale,
        feature_names: feature_names.to_vec(),
    })
}

impl ScalerParams {
    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.len() {
            return Err(TskanError::DimensionMismatch {
                expected: self.len(),
                actual: width,
            });
        }
        Ok(())
    }

    /// `(x - center) / scale`, column-wise.
    pub fn apply(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        features.iter().map(|row| self.apply_row(row)).collect()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_width(row.len())?;
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &x)| (x - self.center[j]) / self.scale[j])
            .collect())
    }

    /// Exact inverse of [`ScalerParams::apply`].
    pub fn invert(&self, scaled: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        scaled.iter().map(|row| self.invert_row(row)).collect()
    }

    pub fn invert_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_width(row.len())?;
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &z)| z * self.scale[j] + self.center[j])
            .collect())
    }

    pub fn invert_value(&self, column: usize, z: f64) -> f64 {
        z * self.scale[column] + self.center[column]
    }

    pub fn apply_value(&self, column: usize, x: f64) -> f64 {
        (x - self.center[column]) / self.scale[column]
    }

    /// Restrict the scaler to the named features, in the given order.
    pub fn subset(&self, names: &[String]) -> Result<ScalerParams> {
        let mut center = Vec::with_capacity(names.len());
        let mut scale = Vec::with_capacity(names.len());
        for name in names {
            let j = self
                .feature_names
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| TskanError::UnknownFeature(name.clone()))?;
            center.push(self.center[j]);
            scale.push(self.scale[j]);
        }
        Ok(ScalerParams {
            center,
            scale,
            feature_names: names.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::io::Write;

    fn sample(id: &str, rows: Vec<Vec<f64>>, label: f64) -> TimeSeriesSample {
        TimeSeriesSample {
            sample_id: id.to_string(),
            values: rows,
            label,
        }
    }

    fn toy_dataset(lengths: &[usize]) -> Dataset {
        let samples = lengths
            .iter()
            .enumerate()
            .map(|(i, &t)| sample(&format!("s{i:03}"), vec![vec![1.0; t], vec![2.0; t]], 0.5))
            .collect();
        Dataset {
            samples,
            variable_names: vec!["a".into(), "b".into()],
            target_length: *lengths.iter().max().unwrap(),
        }
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_samples_six_vars_five_chunks() {
        let mut body = String::from("sample_id,chunk_index,stalling,bitrate,chunksize,qp,framerate,videowidth,mos\n");
        for s in 0..2 {
            for t in 0..5 {
                body.push_str(&format!(
                    "v{s},{t},{},{},{},{},{},{},{}\n",
                    t as f64,
                    1000.0 + t as f64,
                    4.0,
                    30.0,
                    24.0,
                    1920.0,
                    0.5 - s as f64
                ));
            }
        }
        let f = write_csv(&body);
        let ds = load_dataset(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.variable_names.len(), 6);
        assert_eq!(ds.target_length, 5);
        assert_eq!(ds.samples[0].num_variables(), 6);
        assert_eq!(ds.samples[0].num_steps(), 5);
        // chunk t value of 'stalling' lands in row 0
        assert_eq!(ds.samples[0].values[0], vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let f = write_csv("sample_id,chunk_index,bitrate,mos\na,0,abc,1.0\n");
        let err = load_dataset(f.path(), &LoadOptions::default()).unwrap_err();
        match err {
            TskanError::NonNumericCell { row, column, value, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "bitrate");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_chunk_index_rejected() {
        let f = write_csv("sample_id,chunk_index,x,mos\na,0,1,1\na,0,2,1\n");
        let err = load_dataset(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, TskanError::DuplicateChunk { .. }), "{err:?}");
    }

    #[test]
    fn chunk_gap_rejected() {
        let f = write_csv("sample_id,chunk_index,x,mos\na,0,1,1\na,2,2,1\n");
        let err = load_dataset(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, TskanError::ChunkGap { .. }), "{err:?}");
    }

    #[test]
    fn inconsistent_mos_rejected() {
        let f = write_csv("sample_id,chunk_index,x,mos\na,0,1,1\na,1,2,1.5\n");
        let err = load_dataset(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, TskanError::InconsistentLabel { .. }), "{err:?}");
    }

    #[test]
    fn schema_reorders_columns_and_flags_missing() {
        let f = write_csv("sample_id,chunk_index,b,a,mos\ns,0,2,1,0\n");
        let opts = LoadOptions {
            schema: Some(vec!["a".into(), "b".into()]),
            ..LoadOptions::default()
        };
        let ds = load_dataset(f.path(), &opts).unwrap();
        assert_eq!(ds.variable_names, vec!["a", "b"]);
        assert_eq!(ds.samples[0].values, vec![vec![1.0], vec![2.0]]);

        let opts = LoadOptions {
            schema: Some(vec!["a".into(), "missing".into()]),
            ..LoadOptions::default()
        };
        let err = load_dataset(f.path(), &opts).unwrap_err();
        assert!(matches!(err, TskanError::MissingColumn { .. }), "{err:?}");
    }

    #[test]
    fn row_permutation_within_sample_is_irrelevant() {
        let a = write_csv("sample_id,chunk_index,x,mos\ns,0,1,0\ns,1,2,0\ns,2,3,0\n");
        let b = write_csv("sample_id,chunk_index,x,mos\ns,2,3,0\ns,0,1,0\ns,1,2,0\n");
        let da = load_dataset(a.path(), &LoadOptions::default()).unwrap();
        let db = load_dataset(b.path(), &LoadOptions::default()).unwrap();
        assert_eq!(da, db);
    }

    #[test]
    fn label_range_enforced() {
        let f = write_csv("sample_id,chunk_index,x,mos\ns,0,1,3.2\n");
        let err = load_dataset(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, TskanError::LabelOutOfRange { .. }), "{err:?}");
    }

    #[test]
    fn csv_round_trip() {
        let ds = toy_dataset(&[3, 3]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        write_dataset_csv(&ds, &path).unwrap();
        let loaded = load_dataset(&path, &LoadOptions::default()).unwrap();
        assert_eq!(loaded, ds);
    }

    #[test]
    fn enforce_length_drops_longer_and_reports() {
        let ds = toy_dataset(&[16, 16, 17]);
        let (out, dropped) = enforce_length(ds, 16, LengthPolicy::Drop).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(dropped, 1);
        assert_eq!(out.target_length, 16);
    }

    #[test]
    fn enforce_length_is_identity_when_uniform() {
        let ds = toy_dataset(&[16, 16]);
        let (out, dropped) = enforce_length(ds.clone(), 16, LengthPolicy::Drop).unwrap();
        assert_eq!(out, ds);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn enforce_length_rejects_short_samples() {
        let ds = toy_dataset(&[15, 16]);
        let err = enforce_length(ds, 16, LengthPolicy::Drop).unwrap_err();
        match err {
            TskanError::SampleTooShort { sample_id, length, required } => {
                assert_eq!(sample_id, "s000");
                assert_eq!((length, required), (15, 16));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn enforce_length_error_policy() {
        let ds = toy_dataset(&[16, 17]);
        let err = enforce_length(ds, 16, LengthPolicy::Error).unwrap_err();
        assert!(matches!(err, TskanError::SampleTooLong { .. }), "{err:?}");
    }

    #[test]
    fn enforce_length_idempotent() {
        let ds = toy_dataset(&[16, 16, 17, 18]);
        let (once, _) = enforce_length(ds, 16, LengthPolicy::Drop).unwrap();
        let (twice, dropped) = enforce_length(once.clone(), 16, LengthPolicy::Drop).unwrap();
        assert_eq!(once, twice);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn split_sizes_match_fractions() {
        let ds = toy_dataset(&vec![8; 100]);
        let spec = SplitSpec::new(0.7, 0.15, 0.15, 7);
        let (train, val, test) = split_dataset(&ds, &spec).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (70, 15, 15));
    }

    #[test]
    fn split_three_samples_yields_one_each() {
        let ds = toy_dataset(&vec![8; 3]);
        let spec = SplitSpec::new(0.7, 0.15, 0.15, 1);
        let (train, val, test) = split_dataset(&ds, &spec).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (1, 1, 1));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let ds = toy_dataset(&vec![4; 37]);
        let spec = SplitSpec::new(0.7, 0.15, 0.15, 42);
        let (t1, v1, s1) = split_dataset(&ds, &spec).unwrap();
        let (t2, v2, s2) = split_dataset(&ds, &spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);
        assert_eq!(s1, s2);

        let mut ids: Vec<&str> = t1
            .samples
            .iter()
            .chain(&v1.samples)
            .chain(&s1.samples)
            .map(|s| s.sample_id.as_str())
            .collect();
        ids.sort_unstable();
        let mut expected: Vec<&str> = ds.samples.iter().map(|s| s.sample_id.as_str()).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = toy_dataset(&vec![4; 10]);
        let err = split_dataset(&ds, &SplitSpec::new(0.5, 0.2, 0.2, 0)).unwrap_err();
        assert!(matches!(err, TskanError::InvalidSplit(_)), "{err:?}");
    }

    #[test]
    fn robust_scaler_reference_values() {
        let rows: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0, 5.0].iter().map(|&x| vec![x]).collect();
        let params = fit_robust_scaler(&rows, &["f".to_string()]).unwrap();
        assert_eq!(params.center, vec![3.0]);
        assert_eq!(params.scale, vec![2.0]);

        let scaled = params.apply(&rows).unwrap();
        let flat: Vec<f64> = scaled.iter().map(|r| r[0]).collect();
        assert_eq!(flat, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn robust_scaler_floors_constant_columns() {
        let rows: Vec<Vec<f64>> = vec![vec![4.0], vec![4.0], vec![4.0]];
        let params = fit_robust_scaler(&rows, &["f".to_string()]).unwrap();
        assert_eq!(params.center, vec![4.0]);
        assert_eq!(params.scale, vec![1.0]);
    }

    #[test]
    fn robust_scaler_two_point_column() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0], vec![10.0]];
        let params = fit_robust_scaler(&rows, &["f".to_string()]).unwrap();
        assert_eq!(params.center, vec![5.0]);
        assert_eq!(params.scale, vec![5.0]);
    }

    #[test]
    fn scaler_round_trip_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let names: Vec<String> = (0..4).map(|j| format!("f{j}")).collect();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.gen_range(-100.0..100.0)).collect())
            .collect();
        let params = fit_robust_scaler(&rows, &names).unwrap();
        let back = params.invert(&params.apply(&rows).unwrap()).unwrap();
        for (a, b) in rows.iter().flatten().zip(back.iter().flatten()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn identity_scaler_is_identity() {
        let params = ScalerParams {
            center: vec![0.0],
            scale: vec![1.0],
            feature_names: vec!["f".into()],
        };
        assert_eq!(params.apply_row(&[3.25]).unwrap(), vec![3.25]);
    }

    #[test]
    fn scaler_dimension_mismatch() {
        let params = ScalerParams {
            center: vec![0.0],
            scale: vec![1.0],
            feature_names: vec!["f".into()],
        };
        assert!(params.apply_row(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn scaler_json_shape() {
        let params = ScalerParams {
            center: vec![1.0],
            scale: vec![2.0],
            feature_names: vec!["f".into()],
        };
        let json = serde_json::to_string(&params).unwrap();
        assert_eq!(json, r#"{"center":[1.0],"scale":[2.0],"feature_names":["f"]}"#);
    }
}
