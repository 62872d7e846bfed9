//! Confusion matrices, accuracy arithmetic and leave-one-out evaluation.
//!
//! Matrices are oriented with rows = predicted class and columns = expected
//! class. The report format states this in its header line.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::classify::{Classifier, ClassifyError, TrainingSet};
use crate::exec::{self, Execution};
use crate::format::FormatError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("label {0:?} is not one of the matrix labels")]
    UnknownLabel(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("no test gestures of class {0:?}")]
    EmptyColumn(String),
    #[error("class {class:?} has {rows} row(s); leave-one-out needs at least 2")]
    InsufficientRows { class: String, rows: usize },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

pub const REPORT_HEADER: &str = "# rows=predicted cols=expected";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self { labels, counts: vec![vec![0; n]; n] }
    }

    /// Builds a matrix from `counts[predicted][expected]`.
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, FormatError> {
        let n = labels.len();
        if counts.len() != n || counts.iter().any(|row| row.len() != n) {
            return Err(FormatError::Invalid(format!("confusion matrix must be {n}x{n}")));
        }
        Ok(Self { labels, counts })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    fn index_of(&self, label: &str) -> Result<usize, EvaluationError> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| EvaluationError::UnknownLabel(label.to_string()))
    }

    pub fn count(&self, predicted: &str, expected: &str) -> Result<u64, EvaluationError> {
        Ok(self.counts[self.index_of(predicted)?][self.index_of(expected)?])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn column_total(&self, expected: &str) -> Result<u64, EvaluationError> {
        let j = self.index_of(expected)?;
        Ok(self.counts.iter().map(|row| row[j]).sum())
    }

    /// Adds another tally over the same labels.
    pub fn merge(mut self, other: &ConfusionMatrix) -> Self {
        assert_eq!(self.labels, other.labels, "merging matrices over different labels");
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
        self
    }
}

/// Tallies `(expected, predicted)` pairs.
pub fn build_confusion<E, P>(pairs: &[(E, P)], labels: &[String]) -> Result<ConfusionMatrix, EvaluationError>
where
    E: AsRef<str>,
    P: AsRef<str>,
{
    let mut m = ConfusionMatrix::zeros(labels.to_vec());
    for (expected, predicted) in pairs {
        let j = m.index_of(expected.as_ref())?;
        let i = m.index_of(predicted.as_ref())?;
        m.counts[i][j] += 1;
    }
    Ok(m)
}

/// Percentage of gestures on the diagonal.
pub fn overall_accuracy(m: &ConfusionMatrix) -> Result<f64, EvaluationError> {
    match m.total() {
        0 => Err(EvaluationError::EmptyMatrix),
        total => Ok(100.0 * m.diagonal() as f64 / total as f64),
    }
}

/// Recognition rate of one expected class.
pub fn per_class_rate(m: &ConfusionMatrix, label: &str) -> Result<f64, EvaluationError> {
    let j = m.index_of(label)?;
    match m.column_total(label)? {
        0 => Err(EvaluationError::EmptyColumn(label.to_string())),
        total => Ok(100.0 * m.counts[j][j] as f64 / total as f64),
    }
}

/// Classifies every row against the corpus without it.
pub fn leave_one_out(
    corpus: &TrainingSet,
    classifier: &dyn Classifier,
    exec: Execution,
) -> Result<ConfusionMatrix, EvaluationError> {
    for class in corpus.classes() {
        let rows = corpus.count(class);
        if rows < 2 {
            return Err(EvaluationError::InsufficientRows { class: class.clone(), rows });
        }
    }
    let predictions = exec::map_range(exec, corpus.len(), |i| {
        let query = &corpus.rows()[i];
        let ranking = classifier.rank(query, &corpus.without_row(i))?;
        let expected = query.label.clone().ok_or(ClassifyError::UnlabeledRow(i))?;
        let predicted = ranking.top_label().map(str::to_string).ok_or(ClassifyError::EmptyTrainingSet)?;
        Ok::<_, EvaluationError>((expected, predicted))
    });
    let pairs: Vec<(String, String)> = predictions.into_iter().collect::<Result<_, _>>()?;
    build_confusion(&pairs, corpus.classes())
}

/// Trains on one set and tallies predictions for every row of another.
pub fn train_test(
    train: &TrainingSet,
    test: &TrainingSet,
    classifier: &dyn Classifier,
    exec: Execution,
) -> Result<ConfusionMatrix, EvaluationError> {
    let mut labels = train.classes().to_vec();
    for c in test.classes() {
        if !labels.contains(c) {
            labels.push(c.clone());
        }
    }
    let predictions = exec::map_range(exec, test.len(), |i| {
        let query = &test.rows()[i];
        let ranking = classifier.rank(query, train)?;
        let expected = query.label.clone().ok_or(ClassifyError::UnlabeledRow(i))?;
        let predicted = ranking.top_label().map(str::to_string).ok_or(ClassifyError::EmptyTrainingSet)?;
        Ok::<_, EvaluationError>((expected, predicted))
    });
    let pairs: Vec<(String, String)> = predictions.into_iter().collect::<Result<_, _>>()?;
    build_confusion(&pairs, &labels)
}

/// Renders the CSV report. The accuracy line is omitted for an empty matrix.
pub fn write_report(m: &ConfusionMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "{REPORT_HEADER}").unwrap();
    writeln!(out, "label,{}", m.labels.join(",")).unwrap();
    for (label, row) in m.labels.iter().zip(&m.counts) {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(out, "{label},{}", cells.join(",")).unwrap();
    }
    if let Ok(acc) = overall_accuracy(m) {
        writeln!(out, "accuracy,{acc:.2}").unwrap();
    }
    out
}

/// Parses a report written by [`write_report`]; the accuracy line is
/// recomputed rather than trusted.
pub fn read_report(text: &str) -> Result<ConfusionMatrix, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == REPORT_HEADER => {}
        _ => return Err(FormatError::Header { expected: REPORT_HEADER.to_string() }),
    }
    let (line, label_row) = lines.next().ok_or_else(|| FormatError::Invalid("missing label row".into()))?;
    let mut cells = label_row.split(',').map(str::trim);
    if cells.next() != Some("label") {
        return Err(FormatError::parse(line, "label row must start with `label`"));
    }
    let labels: Vec<String> = cells.map(str::to_string).collect();
    let mut seen = HashMap::new();
    let mut counts = vec![Vec::new(); labels.len()];
    for (line, text) in lines {
        let mut cells = text.split(',').map(str::trim);
        let head = cells.next().unwrap_or_default();
        if head == "accuracy" {
            continue;
        }
        let i = labels
            .iter()
            .position(|l| l == head)
            .ok_or_else(|| FormatError::parse(line, format!("unknown row label {head:?}")))?;
        if seen.insert(i, line).is_some() {
            return Err(FormatError::parse(line, format!("duplicate row {head:?}")));
        }
        counts[i] = cells
            .map(|c| c.parse::<u64>().map_err(|e| FormatError::parse(line, format!("{c:?}: {e}"))))
            .collect::<Result<_, _>>()?;
    }
    ConfusionMatrix::from_counts(labels, counts)
}
