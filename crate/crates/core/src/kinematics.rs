//! Rotation from static gravity and translation by double integration.

use thiserror::Error;

use crate::signal::{self, amplitude, SignalError, SmoothingKind, SmoothingSpec, Trace, GRAVITY};
use crate::vec3::Vec3;

/// Amplitude bound below which a sample is treated as gravity only.
pub const STATIC_AMPLITUDE_LIMIT: f64 = 10.0;
/// Largest accepted deviation of the averaged tail amplitude from 1g.
pub const TAIL_GRAVITY_TOLERANCE: f64 = 2.0;
pub const DEFAULT_TAIL_MS: f64 = 50.0;
pub const DEFAULT_ZERO_VELOCITY: f64 = 0.02;
pub const DEFAULT_NOISE_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("tail is not static: averaged amplitude {amplitude:.3} m/s² is more than 2 m/s² from 1g")]
    DynamicTail { amplitude: f64 },
    #[error("no sample exceeds the noise threshold")]
    NoGesture,
}

/// Per-axis tilt of the device relative to gravity, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngles {
    pub x_deg: f64,
    pub y_deg: f64,
    pub z_deg: f64,
}

impl RotationAngles {
    /// Angles from a gravity reading, via a clamped arcsin per axis.
    pub fn from_gravity(g: Vec3) -> Self {
        let angle = |v: f64| (v / GRAVITY).clamp(-1.0, 1.0).asin().to_degrees();
        Self { x_deg: angle(g.x), y_deg: angle(g.y), z_deg: angle(g.z) }
    }

    /// Tilt of the y axis out of the horizontal plane.
    pub fn pitch(&self) -> f64 {
        self.y_deg
    }

    /// Tilt of the x axis out of the horizontal plane.
    pub fn roll(&self) -> f64 {
        self.x_deg
    }

    /// True when gravity reads negative on the z axis (screen facing down).
    pub fn inverted(&self) -> bool {
        self.z_deg < 0.0
    }
}

/// Every sample's amplitude stays below 10 m/s².
///
/// A [`Trace`] always has at least one sample, so the emptiness precondition
/// holds by construction.
pub fn is_static(segment: &Trace) -> bool {
    segment.samples().iter().all(|s| amplitude(s) < STATIC_AMPLITUDE_LIMIT)
}

/// Orientation from the mean of the last `tail_ms` of a calibrated trace.
pub fn final_rotation(trace: &Trace, tail_ms: f64) -> Result<RotationAngles, KinematicsError> {
    trace.require_calibrated()?;
    let tail = trace.tail(tail_ms)?;
    let mean = mean_accel(&tail.accels());
    let amp = mean.norm();
    if (amp - GRAVITY).abs() > TAIL_GRAVITY_TOLERANCE {
        return Err(KinematicsError::DynamicTail { amplitude: amp });
    }
    Ok(RotationAngles::from_gravity(mean))
}

pub(crate) fn mean_accel(accels: &[Vec3]) -> Vec3 {
    accels.iter().fold(Vec3::ZERO, |acc, &a| acc + a) * (1.0 / accels.len() as f64)
}

/// Velocity and position along a segment, aligned with its timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPath {
    pub t_ms: Vec<f64>,
    pub velocity: Vec<Vec3>,
    pub position: Vec<Vec3>,
}

impl MotionPath {
    pub fn final_position(&self) -> Vec3 {
        *self.position.last().expect("motion path is never empty")
    }
}

/// Trapezoidal double integration starting from rest at the origin.
///
/// Velocities with magnitude below `zero_velocity_threshold` (per axis) are
/// zeroed before the second integration; the first integral itself is kept
/// intact.
pub fn integrate(segment: &Trace, zero_velocity_threshold: f64) -> MotionPath {
    let samples = segment.samples();
    let n = samples.len();
    let mut velocity = Vec::with_capacity(n);
    let mut position = Vec::with_capacity(n);
    velocity.push(Vec3::ZERO);
    position.push(Vec3::ZERO);
    let snap = |v: Vec3| {
        let s = |c: f64| if c.abs() < zero_velocity_threshold { 0.0 } else { c };
        Vec3::new(s(v.x), s(v.y), s(v.z))
    };
    let mut prev_snapped = Vec3::ZERO;
    for i in 1..n {
        let dt = (samples[i].t_ms - samples[i - 1].t_ms) / 1000.0;
        let v = velocity[i - 1] + (samples[i - 1].accel() + samples[i].accel()) * (0.5 * dt);
        let snapped = snap(v);
        let p = position[i - 1] + (prev_snapped + snapped) * (0.5 * dt);
        velocity.push(v);
        position.push(p);
        prev_snapped = snapped;
    }
    MotionPath { t_ms: samples.iter().map(|s| s.t_ms).collect(), velocity, position }
}

/// Inclusive sample range holding a gesture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GestureBounds {
    pub start: usize,
    pub end: usize,
}

/// Brackets the gesture around the extrema of the dominant axis.
///
/// The dominant axis is the one with the largest peak-to-peak range. From
/// the earlier extremum the start walks back to the last sample under the
/// noise threshold, and from the later extremum the end walks forward to the
/// first one under it. Each bound then keeps moving outward while the
/// magnitude still decreases, so a slow onset that stays under the
/// threshold is not cut off.
pub fn detect_bounds(segment: &Trace, noise_threshold: f64) -> Result<GestureBounds, KinematicsError> {
    let axes: Vec<Vec<f64>> = (0..3).map(|a| segment.axis_values(a)).collect();
    let n = segment.len();
    let active = axes.iter().flatten().any(|v| v.abs() > noise_threshold);
    if !active || n < 2 {
        return Err(KinematicsError::NoGesture);
    }
    let range = |v: &Vec<f64>| {
        let (lo, hi) = extrema(v);
        v[hi] - v[lo]
    };
    let mut dominant = 0;
    for a in 1..3 {
        if range(&axes[a]) > range(&axes[dominant]) {
            dominant = a;
        }
    }
    let v = &axes[dominant];
    let (i_min, i_max) = extrema(v);
    let earlier = i_min.min(i_max);
    let later = i_min.max(i_max);

    let mut start = (0..earlier).rev().find(|&j| v[j].abs() < noise_threshold).unwrap_or(0);
    while start > 0 && v[start - 1].abs() < v[start].abs() {
        start -= 1;
    }
    let mut end = (later + 1..n).find(|&j| v[j].abs() < noise_threshold).unwrap_or(n - 1);
    while end + 1 < n && v[end + 1].abs() < v[end].abs() {
        end += 1;
    }
    if start == end {
        // a single extreme sample at one edge
        if end + 1 < n {
            end += 1;
        } else {
            start -= 1;
        }
    }
    Ok(GestureBounds { start, end })
}

/// Indices of the first minimum and first maximum.
fn extrema(v: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[lo] {
            lo = i;
        }
        if x > v[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

/// Parameters of the position-based movement analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementConfig {
    pub baseline_ms: f64,
    pub smoothing: SmoothingSpec,
    pub noise_threshold: f64,
    pub zero_velocity: f64,
}

impl Default for MovementConfig {
    fn default() -> Self {
        Self {
            baseline_ms: signal::DEFAULT_BASELINE_MS,
            smoothing: SmoothingSpec::rounded(SmoothingKind::MovingAverage, signal::DEFAULT_SMOOTHING_WINDOW),
            noise_threshold: DEFAULT_NOISE_THRESHOLD,
            zero_velocity: DEFAULT_ZERO_VELOCITY,
        }
    }
}

/// Result of running the movement analysis on one gesture.
#[derive(Debug, Clone, PartialEq)]
pub struct Movement {
    pub bounds: GestureBounds,
    pub path: MotionPath,
}

impl Movement {
    pub fn displacement(&self) -> Vec3 {
        self.path.final_position()
    }
}

/// center → smooth → bound → integrate.
pub fn analyze_movement(trace: &Trace, cfg: &MovementConfig) -> Result<Movement, KinematicsError> {
    trace.require_calibrated()?;
    let centered = signal::center_baseline(trace, cfg.baseline_ms)?;
    let smoothed = signal::smooth(&centered, &cfg.smoothing)?;
    let bounds = detect_bounds(&smoothed, cfg.noise_threshold)?;
    let segment = smoothed.slice(bounds.start, bounds.end + 1)?;
    Ok(Movement { bounds, path: integrate(&segment, cfg.zero_velocity) })
}

pub fn gesture_displacement(trace: &Trace) -> Result<Vec3, KinematicsError> {
    analyze_movement(trace, &MovementConfig::default()).map(|m| m.displacement())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn trace(accels: &[Vec3]) -> Trace {
        Trace::from_accels(accels, 1000.0, true).unwrap()
    }

    #[test]
    fn static_examples() {
        assert!(is_static(&trace(&[Vec3::new(0.0, 0.0, 9.81); 10])));
        assert!(!is_static(&trace(&[Vec3::new(0.0, 0.0, 9.81), Vec3::new(5.0, 5.0, 9.0)])));
        assert!(Trace::from_accels(&[], 1000.0, true).is_err());
    }

    #[test]
    fn rotation_examples() {
        let at = |ax: f64| {
            let az = (GRAVITY * GRAVITY - ax * ax).max(0.0).sqrt();
            final_rotation(&trace(&[Vec3::new(ax, 0.0, az); 100]), DEFAULT_TAIL_MS).unwrap()
        };
        assert_abs_diff_eq!(at(0.0).x_deg, 0.0);
        assert_abs_diff_eq!(at(9.81).x_deg, 90.0, epsilon = 1e-9);
        assert_abs_diff_eq!(at(4.905).x_deg, 30.0, epsilon = 1e-9);
    }

    #[test]
    fn rotation_rejects_dynamic_tail() {
        let t = trace(&[Vec3::new(0.0, 0.0, 15.0); 100]);
        assert!(matches!(final_rotation(&t, 50.0), Err(KinematicsError::DynamicTail { .. })));
        let raw = Trace::from_accels(&[Vec3::new(0.0, 0.0, 9.81); 100], 1000.0, false).unwrap();
        assert!(matches!(final_rotation(&raw, 50.0), Err(KinematicsError::Signal(SignalError::NotCalibrated))));
    }

    #[test]
    fn rotation_clamps_noisy_gravity() {
        // amplitude 10.5 passes the gate, x reading exceeds g
        let r = final_rotation(&trace(&[Vec3::new(10.5, 0.0, 0.0); 60]), 50.0).unwrap();
        assert_eq!(r.x_deg, 90.0);
        let r = final_rotation(&trace(&[Vec3::new(0.0, -10.5, 0.0); 60]), 50.0).unwrap();
        assert_eq!(r.y_deg, -90.0);
    }

    #[test]
    fn integrate_zero() {
        let p = integrate(&trace(&[Vec3::ZERO; 100]), 0.02);
        assert!(p.velocity.iter().chain(&p.position).all(|v| *v == Vec3::ZERO));
    }

    #[test]
    fn integrate_constant_acceleration() {
        let p = integrate(&trace(&[Vec3::new(1.0, 0.0, 0.0); 1001]), 0.0);
        assert_abs_diff_eq!(p.velocity[1000].x, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.final_position().x, 0.5, epsilon = 1e-3);
        assert_eq!(p.velocity.len(), 1001);
        assert_eq!(p.velocity[0], Vec3::ZERO);
        assert_eq!(p.position[0], Vec3::ZERO);
    }

    #[test]
    fn zero_velocity_snapping_only_affects_position() {
        let p = integrate(&trace(&[Vec3::new(0.01, 0.0, 0.0); 1001]), 0.02);
        // velocity reaches 0.01 m/s but stays below the snap threshold
        assert_abs_diff_eq!(p.velocity[1000].x, 0.01, epsilon = 1e-9);
        assert_eq!(p.final_position().x, 0.0);
    }

    fn pulse(n: usize, from: usize, to: usize, peak: f64) -> Vec<Vec3> {
        (0..n)
            .map(|i| {
                if i < from || i > to {
                    Vec3::ZERO
                } else {
                    let tau = (i - from) as f64 / (to - from) as f64;
                    Vec3::new(0.0, peak * (2.0 * std::f64::consts::PI * tau).sin(), 0.0)
                }
            })
            .collect()
    }

    #[test]
    fn bounds_no_gesture() {
        let quiet: Vec<Vec3> = (0..500).map(|i| Vec3::new(0.39 * (i as f64).sin(), 0.1, -0.2)).collect();
        assert_eq!(detect_bounds(&trace(&quiet), 0.4), Err(KinematicsError::NoGesture));
    }

    #[test]
    fn bounds_bracket_clean_pulse() {
        let b = detect_bounds(&trace(&pulse(1000, 200, 700, 3.0)), 0.4).unwrap();
        assert!(b.start.abs_diff(200) <= 10, "{b:?}");
        assert!(b.end.abs_diff(700) <= 10, "{b:?}");
    }

    #[test]
    fn bounds_clamp_at_start() {
        let b = detect_bounds(&trace(&pulse(600, 0, 400, 3.0)), 0.4).unwrap();
        assert_eq!(b.start, 0);
        // peak at the very first sample
        let mut edge = vec![Vec3::ZERO; 50];
        edge[0] = Vec3::new(2.0, 0.0, 0.0);
        let b = detect_bounds(&trace(&edge), 0.4).unwrap();
        assert_eq!(b.start, 0);
        assert!(b.end > 0);
    }

    #[test]
    fn displacement_of_stationary_trace() {
        let t = trace(&[Vec3::new(0.0, 0.0, 9.81); 1000]);
        assert_eq!(gesture_displacement(&t), Err(KinematicsError::NoGesture));
    }

    proptest! {
        #[test]
        fn integration_is_linear(a in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 2..300),
                                 b_scale in -3.0f64..3.0) {
            let av: Vec<Vec3> = a.iter().map(|&x| Vec3::from_array(x)).collect();
            let bv: Vec<Vec3> = av.iter().enumerate().map(|(i, v)| Vec3::new(v.y, (i as f64 * 0.1).cos(), v.x) * b_scale).collect();
            let sum: Vec<Vec3> = av.iter().zip(&bv).map(|(x, y)| *x + *y).collect();
            let pa = integrate(&trace(&av), 0.0);
            let pb = integrate(&trace(&bv), 0.0);
            let ps = integrate(&trace(&sum), 0.0);
            let neg: Vec<Vec3> = av.iter().map(|v| -*v).collect();
            let pn = integrate(&trace(&neg), 0.0);
            for i in 0..av.len() {
                prop_assert!((ps.position[i] - pa.position[i] - pb.position[i]).norm() <= 1e-6);
            }
            prop_assert_eq!(pn.final_position(), -pa.final_position());
        }

        #[test]
        fn bounds_contain_extrema(v in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 2..200)) {
            let accels: Vec<Vec3> = v.iter().map(|&x| Vec3::from_array(x)).collect();
            let t = trace(&accels);
            if let Ok(b) = detect_bounds(&t, 0.4) {
                prop_assert!(b.start < b.end && b.end < accels.len());
                // the dominant axis extrema lie inside
                let ranges: Vec<f64> = (0..3).map(|a| {
                    let s = t.axis_values(a);
                    let (lo, hi) = extrema(&s);
                    s[hi] - s[lo]
                }).collect();
                let mut dom = 0;
                for a in 1..3 { if ranges[a] > ranges[dom] { dom = a; } }
                let (lo, hi) = extrema(&t.axis_values(dom));
                prop_assert!(b.start <= lo.min(hi) && hi.max(lo) <= b.end);
            }
        }

        #[test]
        fn rotation_is_bounded(g in prop::array::uniform3(-11.5f64..11.5)) {
            let gv = Vec3::from_array(g);
            let r = RotationAngles::from_gravity(gv);
            for a in [r.x_deg, r.y_deg, r.z_deg] {
                prop_assert!((-90.0..=90.0).contains(&a));
            }
        }

        #[test]
        fn static_gravity_tail_has_no_dynamic_error(pitch in -90.0f64..90.0, roll in -180.0f64..180.0,
                                                    noise in prop::collection::vec(-0.05f64..0.05, 60)) {
            let (p, r) = (pitch.to_radians(), roll.to_radians());
            let g = Vec3::new(r.sin() * p.cos(), p.sin(), r.cos() * p.cos()) * GRAVITY;
            let accels: Vec<Vec3> = noise.iter().map(|n| g + Vec3::new(*n, -*n, *n)).collect();
            let t = trace(&accels);
            prop_assume!(is_static(&t));
            prop_assert!(final_rotation(&t, DEFAULT_TAIL_MS).is_ok());
        }
    }
}
