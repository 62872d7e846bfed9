//! Feature-based recognition: twelve per-gesture statistics classified by a
//! Gaussian-weighted kNN or a Gaussian naive Bayes, reported as a top-3
//! ranking.

mod bayes;
mod features;
mod knn;
mod training;

pub use bayes::bayes_classify;
pub use features::{extract_features, feature_statistics, FeatureConfig};
pub use knn::knn_classify;
pub use training::{read_feature_rows, read_training_set, write_training_set, TRAINING_HEADER};

use std::fmt;

use thiserror::Error;

use crate::signal::SignalError;

/// Number of neighbours used with the pooled corpus.
pub const POOLED_K: usize = 50;
pub const RANKING_DEPTH: usize = 3;
pub const FEATURE_COUNT: usize = 12;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "max_x", "min_x", "max_y", "min_y", "max_z", "min_z", "final_x", "final_y", "final_z", "amp_max", "amp_min",
    "amp_mean",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("trace of {len} samples is shorter than the smoothing window {window}")]
    TraceTooShort { len: usize, window: usize },
    #[error("training row {0} has no label")]
    UnlabeledRow(usize),
    #[error("class `{0}` has no training rows")]
    EmptyClass(String),
    #[error("row label `{0}` is not a declared class")]
    UndeclaredClass(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// The twelve gesture features, with an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: [f64; FEATURE_COUNT],
    pub label: Option<String>,
}

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_COUNT], label: Option<String>) -> Self {
        Self { values, label }
    }

    pub fn labeled(values: [f64; FEATURE_COUNT], label: impl Into<String>) -> Self {
        Self::new(values, Some(label.into()))
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn max(&self, axis: usize) -> f64 {
        self.values[2 * axis]
    }

    pub fn min(&self, axis: usize) -> f64 {
        self.values[2 * axis + 1]
    }

    pub fn final_value(&self, axis: usize) -> f64 {
        self.values[6 + axis]
    }

    pub fn amp_max(&self) -> f64 {
        self.values[9]
    }

    pub fn amp_min(&self) -> f64 {
        self.values[10]
    }

    pub fn amp_mean(&self) -> f64 {
        self.values[11]
    }
}

/// Labeled feature rows over a declared class universe.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    rows: Vec<FeatureVector>,
    classes: Vec<String>,
}

impl TrainingSet {
    /// Classes are declared in order of first appearance.
    pub fn new(rows: Vec<FeatureVector>) -> Result<Self, ClassifyError> {
        let mut classes: Vec<String> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let label = row.label.as_ref().ok_or(ClassifyError::UnlabeledRow(i))?;
            if !classes.contains(label) {
                classes.push(label.clone());
            }
        }
        Ok(Self { rows, classes })
    }

    pub fn with_classes(rows: Vec<FeatureVector>, classes: Vec<String>) -> Result<Self, ClassifyError> {
        for (i, row) in rows.iter().enumerate() {
            let label = row.label.as_ref().ok_or(ClassifyError::UnlabeledRow(i))?;
            if !classes.contains(label) {
                return Err(ClassifyError::UndeclaredClass(label.clone()));
            }
        }
        for class in &classes {
            if !rows.iter().any(|r| r.label.as_ref() == Some(class)) {
                return Err(ClassifyError::EmptyClass(class.clone()));
            }
        }
        Ok(Self { rows, classes })
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub(crate) fn label_of(&self, row: usize) -> &str {
        self.rows[row].label.as_deref().expect("training rows are labeled")
    }

    pub(crate) fn class_index(&self, label: &str) -> usize {
        self.classes.iter().position(|c| c == label).expect("row label is declared")
    }

    /// Appends the rows of `other`, extending the class universe.
    pub fn merged(&self, other: &TrainingSet) -> TrainingSet {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        let mut classes = self.classes.clone();
        for c in &other.classes {
            if !classes.contains(c) {
                classes.push(c.clone());
            }
        }
        TrainingSet { rows, classes }
    }

    /// The same set with one row removed; the class universe shrinks only if
    /// that row was the last of its class.
    pub fn without_row(&self, index: usize) -> TrainingSet {
        let mut rows = self.rows.clone();
        let removed = rows.remove(index);
        let mut classes = self.classes.clone();
        if let Some(label) = removed.label {
            if !rows.iter().any(|r| r.label.as_ref() == Some(&label)) {
                classes.retain(|c| *c != label);
            }
        }
        TrainingSet { rows, classes }
    }

    pub fn count(&self, class: &str) -> usize {
        self.rows.iter().filter(|r| r.label.as_deref() == Some(class)).count()
    }
}

/// Top classes with confidences, most likely first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    entries: Vec<(String, f64)>,
}

impl Ranking {
    /// Keeps the top three of per-class scores; equal scores keep the order
    /// of `scores`.
    pub fn from_scores(scores: Vec<(String, f64)>) -> Self {
        let mut scores = scores;
        scores.sort_by(|a, b| b.1.total_cmp(&a.1));
        scores.truncate(RANKING_DEPTH);
        Self { entries: scores }
    }

    /// A ranking given explicitly, most likely first.
    pub fn from_entries(entries: Vec<(String, f64)>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn top(&self) -> Option<&(String, f64)> {
        self.entries.first()
    }

    pub fn top_label(&self) -> Option<&str> {
        self.top().map(|(l, _)| l.as_str())
    }

    pub fn top_confidence(&self) -> f64 {
        self.top().map_or(0.0, |(_, c)| *c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Ranking {
    /// `label,confidence` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, conf) in &self.entries {
            writeln!(f, "{label},{conf}")?;
        }
        Ok(())
    }
}

/// Picks the classifier by which training data is available: the pooled
/// corpus (with any user rows appended) goes to kNN with k = 50, user data
/// alone goes to naive Bayes.
pub fn classify_policy(
    query: &FeatureVector,
    user: Option<&TrainingSet>,
    pooled: Option<&TrainingSet>,
) -> Result<Ranking, ClassifyError> {
    match (pooled, user) {
        (Some(pooled), Some(user)) => knn_classify(query, &pooled.merged(user), POOLED_K),
        (Some(pooled), None) => knn_classify(query, pooled, POOLED_K),
        (None, Some(user)) => bayes_classify(query, user),
        (None, None) => Err(ClassifyError::EmptyTrainingSet),
    }
}

/// Anything that ranks a query against a training set.
pub trait Classifier: Sync {
    fn rank(&self, query: &FeatureVector, training: &TrainingSet) -> Result<Ranking, ClassifyError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Knn {
    pub k: usize,
}

impl Classifier for Knn {
    fn rank(&self, query: &FeatureVector, training: &TrainingSet) -> Result<Ranking, ClassifyError> {
        knn_classify(query, training, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveBayes;

impl Classifier for NaiveBayes {
    fn rank(&self, query: &FeatureVector, training: &TrainingSet) -> Result<Ranking, ClassifyError> {
        bayes_classify(query, training)
    }
}

/// The classification policy with the training set in a fixed role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// The set is the pooled multi-user corpus.
    Pooled,
    /// The set holds only the current user's examples.
    UserOnly,
}

impl Classifier for Policy {
    fn rank(&self, query: &FeatureVector, training: &TrainingSet) -> Result<Ranking, ClassifyError> {
        match self {
            Policy::Pooled => classify_policy(query, None, Some(training)),
            Policy::UserOnly => classify_policy(query, Some(training), None),
        }
    }
}
