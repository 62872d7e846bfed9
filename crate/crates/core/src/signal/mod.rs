//! Trace representation and the pre-processing shared by every pipeline:
//! calibration from raw counts, baseline centering, smoothing and amplitude.

mod io;

pub use io::{read_calibration, read_trace, write_calibration, write_trace};

use thiserror::Error;

use crate::vec3::Vec3;

/// Standard gravity used throughout, in m/s².
pub const GRAVITY: f64 = 9.81;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1000.0;
pub const DEFAULT_BASELINE_MS: f64 = 100.0;
/// 50 samples rounded up to the next odd count.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 51;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("timestamp at index {index} is negative or not strictly increasing")]
    NonMonotonicTime { index: usize },
    #[error("sample interval {delta_ms} ms at index {index} is outside ±50% of the nominal period")]
    IrregularSampling { index: usize, delta_ms: f64 },
    #[error("sample rate must be positive and finite")]
    InvalidSampleRate,
    #[error("trace is already calibrated")]
    AlreadyCalibrated,
    #[error("trace is not calibrated")]
    NotCalibrated,
    #[error("calibration gain for axis {axis} is zero or not finite")]
    InvalidCalibration { axis: char },
    #[error("+1g and -1g readings coincide on axis {axis}")]
    DegenerateReadings { axis: char },
    #[error("trace spans {span_ms} ms but {needed_ms} ms are required")]
    TraceTooShort { needed_ms: f64, span_ms: f64 },
    #[error("smoothing window must be odd and at least 1, got {0}")]
    InvalidWindow(usize),
    #[error("smoothing window {window} exceeds 2·len−1 for a trace of {len} samples")]
    WindowTooLarge { window: usize, len: usize },
}

const AXES: [char; 3] = ['x', 'y', 'z'];

/// One timestamped 3-axis reading. Raw counts before calibration, m/s² after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t_ms: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl Sample {
    pub const fn new(t_ms: f64, ax: f64, ay: f64, az: f64) -> Self {
        Self { t_ms, ax, ay, az }
    }

    pub fn accel(&self) -> Vec3 {
        Vec3::new(self.ax, self.ay, self.az)
    }

    pub fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.ax,
            1 => self.ay,
            2 => self.az,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    fn with_accel(&self, a: Vec3) -> Sample {
        Sample::new(self.t_ms, a.x, a.y, a.z)
    }
}

/// Euclidean norm of the three axes.
pub fn amplitude(sample: &Sample) -> f64 {
    sample.accel().norm()
}

/// Ordered, non-empty series of samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<Sample>,
    sample_rate_hz: f64,
    calibrated: bool,
}

impl Trace {
    pub fn new(samples: Vec<Sample>, sample_rate_hz: f64, calibrated: bool) -> Result<Self, SignalError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalError::InvalidSampleRate);
        }
        if samples.is_empty() {
            return Err(SignalError::EmptyTrace);
        }
        let period = 1000.0 / sample_rate_hz;
        if !(samples[0].t_ms >= 0.0) {
            return Err(SignalError::NonMonotonicTime { index: 0 });
        }
        for (i, w) in samples.windows(2).enumerate() {
            let delta = w[1].t_ms - w[0].t_ms;
            if !(delta > 0.0) {
                return Err(SignalError::NonMonotonicTime { index: i + 1 });
            }
            if (delta - period).abs() > 0.5 * period + 1e-9 {
                return Err(SignalError::IrregularSampling { index: i + 1, delta_ms: delta });
            }
        }
        Ok(Self { samples, sample_rate_hz, calibrated })
    }

    /// Builds a uniformly sampled trace starting at t = 0.
    pub fn from_accels(accels: &[Vec3], sample_rate_hz: f64, calibrated: bool) -> Result<Self, SignalError> {
        let period = 1000.0 / sample_rate_hz;
        let samples = accels.iter().enumerate().map(|(i, a)| Sample::new(i as f64 * period, a.x, a.y, a.z)).collect();
        Self::new(samples, sample_rate_hz, calibrated)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn period_ms(&self) -> f64 {
        1000.0 / self.sample_rate_hz
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    /// Duration covered by the trace, counting one period for the last sample.
    pub fn span_ms(&self) -> f64 {
        let first = self.samples[0].t_ms;
        let last = self.samples[self.samples.len() - 1].t_ms;
        last - first + self.period_ms()
    }

    pub fn axis_values(&self, axis: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.axis(axis)).collect()
    }

    pub fn accels(&self) -> Vec<Vec3> {
        self.samples.iter().map(Sample::accel).collect()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.samples.iter().map(amplitude).collect()
    }

    pub(crate) fn require_calibrated(&self) -> Result<(), SignalError> {
        if self.calibrated {
            Ok(())
        } else {
            Err(SignalError::NotCalibrated)
        }
    }

    /// Contiguous sub-trace `[start, end)`; timestamps are kept as they are.
    pub fn slice(&self, start: usize, end: usize) -> Result<Trace, SignalError> {
        let end = end.min(self.samples.len());
        if start >= end {
            return Err(SignalError::EmptyTrace);
        }
        Ok(Trace { samples: self.samples[start..end].to_vec(), ..self.clone() })
    }

    /// The samples falling in the final `tail_ms` of the trace.
    pub fn tail(&self, tail_ms: f64) -> Result<Trace, SignalError> {
        if self.span_ms() + 1e-9 < tail_ms {
            return Err(SignalError::TraceTooShort { needed_ms: tail_ms, span_ms: self.span_ms() });
        }
        let cutoff = self.samples[self.samples.len() - 1].t_ms + self.period_ms() - tail_ms;
        let start = self.samples.partition_point(|s| s.t_ms < cutoff - 1e-9);
        self.slice(start, self.samples.len())
    }

    fn map_accels(&self, f: impl Fn(Vec3) -> Vec3) -> Vec<Sample> {
        self.samples.iter().map(|s| s.with_accel(f(s.accel()))).collect()
    }

    fn with_axis_series(&self, series: [Vec<f64>; 3]) -> Trace {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| Sample::new(s.t_ms, series[0][i], series[1][i], series[2][i]))
            .collect();
        Trace { samples, ..self.clone() }
    }
}

/// Per-axis affine map from counts to m/s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub offset: [f64; 3],
    pub gain: [f64; 3],
}

impl Calibration {
    pub fn new(offset: [f64; 3], gain: [f64; 3]) -> Result<Self, SignalError> {
        let cal = Self { offset, gain };
        cal.validate()?;
        Ok(cal)
    }

    pub fn identity() -> Self {
        Self { offset: [0.0; 3], gain: [1.0; 3] }
    }

    fn validate(&self) -> Result<(), SignalError> {
        for (axis, (&g, &o)) in self.gain.iter().zip(&self.offset).enumerate() {
            if g == 0.0 || !g.is_finite() || !o.is_finite() {
                return Err(SignalError::InvalidCalibration { axis: AXES[axis] });
            }
        }
        Ok(())
    }

    pub fn apply(&self, raw: Vec3) -> Vec3 {
        Vec3::new(
            (raw.x - self.offset[0]) * self.gain[0],
            (raw.y - self.offset[1]) * self.gain[1],
            (raw.z - self.offset[2]) * self.gain[2],
        )
    }

    /// Inverse map back to counts.
    pub fn invert(&self, calibrated: Vec3) -> Vec3 {
        Vec3::new(
            calibrated.x / self.gain[0] + self.offset[0],
            calibrated.y / self.gain[1] + self.offset[1],
            calibrated.z / self.gain[2] + self.offset[2],
        )
    }
}

/// Two-point calibration from per-axis readings taken with the axis pointing
/// up (+1g) and down (−1g).
pub fn derive_calibration(plus_g: [f64; 3], minus_g: [f64; 3]) -> Result<Calibration, SignalError> {
    let mut offset = [0.0; 3];
    let mut gain = [0.0; 3];
    for axis in 0..3 {
        let span = plus_g[axis] - minus_g[axis];
        if span == 0.0 {
            return Err(SignalError::DegenerateReadings { axis: AXES[axis] });
        }
        offset[axis] = 0.5 * (plus_g[axis] + minus_g[axis]);
        gain[axis] = 2.0 * GRAVITY / span;
    }
    Calibration::new(offset, gain)
}

pub fn calibrate(trace: &Trace, cal: &Calibration) -> Result<Trace, SignalError> {
    if trace.calibrated {
        return Err(SignalError::AlreadyCalibrated);
    }
    cal.validate()?;
    Ok(Trace { samples: trace.map_accels(|a| cal.apply(a)), calibrated: true, ..trace.clone() })
}

/// Subtracts the per-axis mean of the first `baseline_ms` from every sample.
pub fn center_baseline(trace: &Trace, baseline_ms: f64) -> Result<Trace, SignalError> {
    let span = trace.span_ms();
    if span + 1e-9 < baseline_ms {
        return Err(SignalError::TraceTooShort { needed_ms: baseline_ms, span_ms: span });
    }
    let t0 = trace.samples[0].t_ms;
    let window: Vec<Vec3> =
        trace.samples.iter().take_while(|s| s.t_ms - t0 < baseline_ms - 1e-9).map(Sample::accel).collect();
    // a zero-length baseline still anchors on the first sample
    let mean = if window.is_empty() {
        trace.samples[0].accel()
    } else {
        window.iter().fold(Vec3::ZERO, |acc, &a| acc + a) * (1.0 / window.len() as f64)
    };
    Ok(Trace { samples: trace.map_accels(|a| a - mean), ..trace.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingKind {
    MovingAverage,
    Hanning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingSpec {
    kind: SmoothingKind,
    window: usize,
}

impl SmoothingSpec {
    pub fn new(kind: SmoothingKind, window: usize) -> Result<Self, SignalError> {
        if window == 0 || window.is_multiple_of(2) {
            return Err(SignalError::InvalidWindow(window));
        }
        Ok(Self { kind, window })
    }

    /// Rounds an even request up to the next odd window.
    pub fn rounded(kind: SmoothingKind, window: usize) -> Self {
        let window = window.max(1) | 1;
        Self { kind, window }
    }

    pub fn moving_average(window: usize) -> Result<Self, SignalError> {
        Self::new(SmoothingKind::MovingAverage, window)
    }

    pub fn hanning(window: usize) -> Result<Self, SignalError> {
        Self::new(SmoothingKind::Hanning, window)
    }

    pub fn kind(&self) -> SmoothingKind {
        self.kind
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Normalized kernel weights, summing to one.
    pub fn weights(&self) -> Vec<f64> {
        let w = self.window;
        let raw: Vec<f64> = match self.kind {
            SmoothingKind::MovingAverage => vec![1.0; w],
            SmoothingKind::Hanning if w == 1 => vec![1.0],
            SmoothingKind::Hanning => {
                (0..w).map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / (w - 1) as f64).cos()).collect()
            }
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }
}

/// Smooths one series by convolution with mirror-extended boundaries.
///
/// Out-of-range indices reflect about the boundary sample: `x[-k] = x[k]`
/// and `x[n-1+k] = x[n-1-k]`.
pub fn smooth_series(values: &[f64], spec: &SmoothingSpec) -> Result<Vec<f64>, SignalError> {
    let n = values.len();
    if n == 0 {
        return Err(SignalError::EmptyTrace);
    }
    if spec.window > 2 * n - 1 {
        return Err(SignalError::WindowTooLarge { window: spec.window, len: n });
    }
    let weights = spec.weights();
    let half = (spec.window / 2) as isize;
    let last = n as isize - 1;
    let reflect = |i: isize| -> usize {
        let j = if i < 0 {
            -i
        } else if i > last {
            2 * last - i
        } else {
            i
        };
        j as usize
    };
    Ok((0..n as isize)
        .map(|i| weights.iter().enumerate().map(|(k, w)| w * values[reflect(i + k as isize - half)]).sum())
        .collect())
}

pub fn smooth(trace: &Trace, spec: &SmoothingSpec) -> Result<Trace, SignalError> {
    let series = [
        smooth_series(&trace.axis_values(0), spec)?,
        smooth_series(&trace.axis_values(1), spec)?,
        smooth_series(&trace.axis_values(2), spec)?,
    ];
    Ok(trace.with_axis_series(series))
}
