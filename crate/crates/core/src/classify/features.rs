use crate::signal::{self, amplitude, SmoothingKind, SmoothingSpec, Trace};

use super::{ClassifyError, FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub baseline_ms: f64,
    pub smoothing: SmoothingSpec,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            baseline_ms: signal::DEFAULT_BASELINE_MS,
            smoothing: SmoothingSpec::rounded(SmoothingKind::Hanning, signal::DEFAULT_SMOOTHING_WINDOW),
        }
    }
}

/// Centers and Hanning-smooths the gesture, then takes per-axis max, min
/// and final value plus max, min and mean of the amplitude.
///
/// The final value is the last smoothed sample, so after centering it is
/// the change of the gravity reading caused by the final rotation.
pub fn extract_features(trace: &Trace, cfg: &FeatureConfig) -> Result<FeatureVector, ClassifyError> {
    trace.require_calibrated()?;
    if trace.len() < cfg.smoothing.window() {
        return Err(ClassifyError::TraceTooShort { len: trace.len(), window: cfg.smoothing.window() });
    }
    let centered = signal::center_baseline(trace, cfg.baseline_ms)?;
    let smoothed = signal::smooth(&centered, &cfg.smoothing)?;
    Ok(feature_statistics(&smoothed))
}

/// The twelve statistics of an already pre-processed trace.
pub fn feature_statistics(trace: &Trace) -> FeatureVector {
    let samples = trace.samples();
    let last = samples[samples.len() - 1];
    let mut values = [0.0; FEATURE_COUNT];
    for axis in 0..3 {
        let (lo, hi) = samples
            .iter()
            .map(|s| s.axis(axis))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        values[2 * axis] = hi;
        values[2 * axis + 1] = lo;
        values[6 + axis] = last.axis(axis);
    }
    let amps: Vec<f64> = samples.iter().map(amplitude).collect();
    values[9] = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values[10] = amps.iter().cloned().fold(f64::INFINITY, f64::min);
    values[11] = amps.iter().sum::<f64>() / amps.len() as f64;
    FeatureVector::new(values, None)
}
