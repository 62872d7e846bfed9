use super::{ClassifyError, FeatureVector, Ranking, TrainingSet, FEATURE_COUNT};

/// Relative floor on class variances, as a fraction of the pooled variance.
const RELATIVE_VARIANCE_FLOOR: f64 = 1e-6;
const ABSOLUTE_VARIANCE_FLOOR: f64 = 1e-12;

/// Class-conditional Gaussian model for samples of any dimension.
#[derive(Debug, Clone)]
pub(crate) struct GaussianNb {
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl GaussianNb {
    /// `class_of[i]` indexes into `0..classes`; every class needs a row.
    pub(crate) fn fit(rows: &[&[f64]], class_of: &[usize], classes: usize) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut counts = vec![0usize; classes];
        let mut means = vec![vec![0.0; dim]; classes];
        for (row, &c) in rows.iter().zip(class_of) {
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        for (m, &count) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|x| *x /= count as f64);
        }
        let mut variances = vec![vec![0.0; dim]; classes];
        for (row, &c) in rows.iter().zip(class_of) {
            for f in 0..dim {
                let d = row[f] - means[c][f];
                variances[c][f] += d * d;
            }
        }
        let floors: Vec<f64> = (0..dim)
            .map(|f| {
                let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
                let pooled = rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
                (RELATIVE_VARIANCE_FLOOR * pooled).max(ABSOLUTE_VARIANCE_FLOOR)
            })
            .collect();
        for (c, var) in variances.iter_mut().enumerate() {
            for (f, v) in var.iter_mut().enumerate() {
                *v = (*v / counts[c] as f64).max(floors[f]);
            }
        }
        let log_priors = counts.iter().map(|&c| (c as f64 / n).ln()).collect();
        Self { log_priors, means, variances }
    }

    /// Posterior probability of each class.
    pub(crate) fn posteriors(&self, x: &[f64]) -> Vec<f64> {
        let log_post: Vec<f64> = (0..self.log_priors.len())
            .map(|c| {
                let ll: f64 = x
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.variances[c])
                    .map(|((x, m), v)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
                    .sum();
                self.log_priors[c] + ll
            })
            .collect();
        let top = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = log_post.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }
}

/// Naive Bayes with relative-frequency priors and per-class Gaussian
/// likelihoods for each feature.
pub fn bayes_classify(query: &FeatureVector, ts: &TrainingSet) -> Result<Ranking, ClassifyError> {
    if ts.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    let rows: Vec<&[f64]> = ts.rows().iter().map(|r| &r.values()[..]).collect();
    let class_of: Vec<usize> = (0..ts.len()).map(|i| ts.class_index(ts.label_of(i))).collect();
    let model = GaussianNb::fit(&rows, &class_of, ts.classes().len());
    let posts = model.posteriors(&query.values()[..FEATURE_COUNT]);
    Ok(Ranking::from_scores(ts.classes().iter().cloned().zip(posts).collect()))
}
