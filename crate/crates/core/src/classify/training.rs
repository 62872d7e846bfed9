//! Training-set CSV: the twelve feature columns followed by `label`.

use std::fmt::Write as _;

use super::{FeatureVector, TrainingSet, FEATURE_COUNT, FEATURE_NAMES};
use crate::format::{check_header, csv_reader, parse_f64, FormatError};

pub const TRAINING_HEADER: &str =
    "max_x,min_x,max_y,min_y,max_z,min_z,final_x,final_y,final_z,amp_max,amp_min,amp_mean,label";

/// Reads labeled feature rows. Unlabeled rows (empty label) are rejected.
pub fn read_training_set(text: &str) -> Result<TrainingSet, FormatError> {
    let rows = read_feature_rows(text)?;
    TrainingSet::new(rows).map_err(|e| FormatError::Invalid(e.to_string()))
}

/// Reads feature rows; an empty label field yields an unlabeled vector.
pub fn read_feature_rows(text: &str) -> Result<Vec<FeatureVector>, FormatError> {
    let mut reader = csv_reader(text);
    let expected: Vec<&str> = TRAINING_HEADER.split(',').collect();
    check_header(&mut reader, &expected)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        if record.len() != FEATURE_COUNT + 1 {
            return Err(FormatError::parse(line, format!("expected {} fields", FEATURE_COUNT + 1)));
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (f, v) in values.iter_mut().enumerate() {
            *v = parse_f64(&record[f], line, FEATURE_NAMES[f])?;
        }
        let label = &record[FEATURE_COUNT];
        rows.push(FeatureVector::new(values, (!label.is_empty()).then(|| label.to_string())));
    }
    Ok(rows)
}

pub fn write_training_set<'a>(rows: impl IntoIterator<Item = &'a FeatureVector>) -> String {
    let mut out = format!("{TRAINING_HEADER}\n");
    for row in rows {
        for v in row.values() {
            write!(out, "{v},").unwrap();
        }
        writeln!(out, "{}", row.label.as_deref().unwrap_or("")).unwrap();
    }
    out
}
