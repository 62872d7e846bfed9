//! Preliminary detectors: tilts, coarse motion state and falls.

use std::fmt;

use thiserror::Error;

use crate::kinematics::{self, mean_accel, STATIC_AMPLITUDE_LIMIT, TAIL_GRAVITY_TOLERANCE};
use crate::signal::{self, amplitude, SignalError, SmoothingKind, SmoothingSpec, Trace, GRAVITY};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("window spans {span_ms} ms but {needed_ms} ms are required")]
    WindowTooShort { needed_ms: f64, span_ms: f64 },
    #[error("no static segment after the acceleration spike")]
    NoStaticTail,
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TiltDirection {
    Up,
    Down,
    Left,
    Right,
}

impl fmt::Display for TiltDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiltDirection::Up => "up",
            TiltDirection::Down => "down",
            TiltDirection::Left => "left",
            TiltDirection::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltEvent {
    pub direction: TiltDirection,
    /// Largest angle magnitude reached, degrees.
    pub peak_deg: f64,
    pub start_ms: f64,
    pub end_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltConfig {
    pub baseline_ms: f64,
    pub smoothing: SmoothingSpec,
    /// A candidate must exceed this angle.
    pub threshold_deg: f64,
    /// A candidate's interval extends outward until the angle drops below this.
    pub rest_deg: f64,
    /// Candidates closer than this are treated as overlapping.
    pub merge_gap_ms: f64,
}

impl Default for TiltConfig {
    fn default() -> Self {
        Self {
            baseline_ms: signal::DEFAULT_BASELINE_MS,
            smoothing: SmoothingSpec::rounded(SmoothingKind::Hanning, signal::DEFAULT_SMOOTHING_WINDOW),
            threshold_deg: 25.0,
            rest_deg: 5.0,
            merge_gap_ms: 100.0,
        }
    }
}

fn angle_deg(centered: f64) -> f64 {
    (centered / GRAVITY).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Up/down and left/right angle channels. Up/down merges the y and z angles
/// by keeping whichever has the larger magnitude at each sample.
pub fn tilt_channels(trace: &Trace, cfg: &TiltConfig) -> Result<(Vec<f64>, Vec<f64>), SignalError> {
    trace.require_calibrated()?;
    let centered = signal::center_baseline(trace, cfg.baseline_ms)?;
    let window = cfg.smoothing.window().min(2 * trace.len() - 1);
    let spec = SmoothingSpec::new(cfg.smoothing.kind(), window)?;
    let smoothed = signal::smooth(&centered, &spec)?;
    let mut vertical = Vec::with_capacity(trace.len());
    let mut lateral = Vec::with_capacity(trace.len());
    for s in smoothed.samples() {
        let (y, z) = (angle_deg(s.ay), angle_deg(s.az));
        vertical.push(if z.abs() > y.abs() { z } else { y });
        lateral.push(angle_deg(s.ax));
    }
    Ok((vertical, lateral))
}

fn candidates(
    channel: &[f64],
    t_ms: &[f64],
    cfg: &TiltConfig,
    positive: TiltDirection,
    negative: TiltDirection,
    out: &mut Vec<TiltEvent>,
) {
    let n = channel.len();
    let mut i = 0;
    while i < n {
        if channel[i].abs() <= cfg.threshold_deg {
            i += 1;
            continue;
        }
        let sign = channel[i].signum();
        let mut end = i;
        while end + 1 < n && channel[end + 1] * sign > cfg.threshold_deg {
            end += 1;
        }
        let peak = channel[i..=end].iter().map(|a| a.abs()).fold(0.0, f64::max);
        let mut start = i;
        while start > 0 && channel[start - 1] * sign >= cfg.rest_deg {
            start -= 1;
        }
        let mut stop = end;
        while stop + 1 < n && channel[stop + 1] * sign >= cfg.rest_deg {
            stop += 1;
        }
        let direction = if sign > 0.0 { positive } else { negative };
        let (start_ms, mut end_ms) = (t_ms[start], t_ms[stop]);
        if end_ms <= start_ms {
            end_ms = start_ms + (t_ms.get(1).copied().unwrap_or(1.0) - t_ms[0]).max(f64::EPSILON);
        }
        out.push(TiltEvent { direction, peak_deg: peak, start_ms, end_ms });
        i = end + 1;
    }
}

/// Detects tilts: threshold the angle channels, then among candidates whose
/// intervals overlap keep only the one with the largest peak.
pub fn detect_tilts(trace: &Trace, cfg: &TiltConfig) -> Result<Vec<TiltEvent>, SignalError> {
    let (vertical, lateral) = tilt_channels(trace, cfg)?;
    let t_ms: Vec<f64> = trace.samples().iter().map(|s| s.t_ms).collect();
    let mut found = Vec::new();
    candidates(&vertical, &t_ms, cfg, TiltDirection::Up, TiltDirection::Down, &mut found);
    candidates(&lateral, &t_ms, cfg, TiltDirection::Right, TiltDirection::Left, &mut found);

    found.sort_by(|a, b| b.peak_deg.total_cmp(&a.peak_deg).then(a.start_ms.total_cmp(&b.start_ms)));
    let mut kept: Vec<TiltEvent> = Vec::new();
    for c in found {
        let clashes =
            kept.iter().any(|k| c.start_ms <= k.end_ms + cfg.merge_gap_ms && k.start_ms <= c.end_ms + cfg.merge_gap_ms);
        if !clashes {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.start_ms.total_cmp(&b.start_ms));
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionState {
    Stopped,
    Picked,
    Holding,
    Walking,
    Running,
}

impl fmt::Display for MotionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotionState::Stopped => "stopped",
            MotionState::Picked => "picked",
            MotionState::Holding => "holding",
            MotionState::Walking => "walking",
            MotionState::Running => "running",
        })
    }
}

/// Amplitude deviation thresholds in m/s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionConfig {
    pub hold_threshold: f64,
    pub walk_threshold: f64,
    pub run_threshold: f64,
    pub window_ms: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self { hold_threshold: 0.3, walk_threshold: 1.5, run_threshold: 4.0, window_ms: 1000.0 }
    }
}

/// Population standard deviation of the amplitude.
pub fn amplitude_deviation(trace: &Trace) -> f64 {
    let amps = trace.amplitudes();
    let n = amps.len() as f64;
    let mean = amps.iter().sum::<f64>() / n;
    (amps.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn duration_ms(trace: &Trace) -> f64 {
    trace.len() as f64 * trace.period_ms()
}

/// State of one window on its own; never [`MotionState::Picked`].
pub fn classify_motion(window: &Trace, cfg: &MotionConfig) -> Result<MotionState, DetectorError> {
    window.require_calibrated()?;
    let duration = duration_ms(window);
    if duration + 0.5 * window.period_ms() < cfg.window_ms {
        return Err(DetectorError::WindowTooShort { needed_ms: cfg.window_ms, span_ms: duration });
    }
    let d = amplitude_deviation(window);
    Ok(if d < cfg.hold_threshold {
        MotionState::Stopped
    } else if d < cfg.walk_threshold {
        MotionState::Holding
    } else if d < cfg.run_threshold {
        MotionState::Walking
    } else {
        MotionState::Running
    })
}

/// Folds per-window states into reported states: a stopped window followed
/// by a holding one reports `Picked`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MotionTracker {
    previous: Option<MotionState>,
}

impl MotionTracker {
    pub fn push(&mut self, state: MotionState) -> MotionState {
        let reported = match (self.previous, state) {
            (Some(MotionState::Stopped), MotionState::Holding) => MotionState::Picked,
            _ => state,
        };
        self.previous = Some(state);
        reported
    }
}

/// Classifies consecutive non-overlapping windows; a trailing partial
/// window is ignored.
pub fn motion_states(trace: &Trace, cfg: &MotionConfig) -> Result<Vec<MotionState>, DetectorError> {
    let per_window = ((cfg.window_ms / trace.period_ms()).round() as usize).max(1);
    if trace.len() < per_window {
        return Err(DetectorError::WindowTooShort { needed_ms: cfg.window_ms, span_ms: duration_ms(trace) });
    }
    let mut tracker = MotionTracker::default();
    (0..trace.len() / per_window)
        .map(|w| {
            let window = trace.slice(w * per_window, (w + 1) * per_window)?;
            Ok(tracker.push(classify_motion(&window, cfg)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallConfig {
    /// Amplitude spike threshold, m/s².
    pub spike: f64,
    /// Orientation change that counts as a fall, degrees.
    pub angle_deg: f64,
    /// Reference window at the start of the trace.
    pub baseline_ms: f64,
    /// Length of the resting windows searched after the spike.
    pub tail_ms: f64,
}

impl Default for FallConfig {
    fn default() -> Self {
        Self {
            spike: 3.0 * GRAVITY,
            angle_deg: 60.0,
            baseline_ms: signal::DEFAULT_BASELINE_MS,
            tail_ms: kinematics::DEFAULT_TAIL_MS,
        }
    }
}

fn resting(window: &Trace) -> bool {
    let mean = mean_accel(&window.accels());
    kinematics::is_static(window) && (mean.norm() - GRAVITY).abs() <= TAIL_GRAVITY_TOLERANCE
}

/// A spike above `cfg.spike` followed by a rest pose that differs from the
/// starting pose by more than `cfg.angle_deg`.
///
/// The starting pose is the mean over the baseline window (cut short at the
/// spike). The final pose is the last resting window after the spike.
pub fn detect_fall(trace: &Trace, cfg: &FallConfig) -> Result<bool, DetectorError> {
    trace.require_calibrated()?;
    let samples = trace.samples();
    let Some(spike) = samples.iter().position(|s| amplitude(s) > cfg.spike) else {
        return Ok(false);
    };
    let t0 = samples[0].t_ms;
    let pre_end = samples[..spike].partition_point(|s| s.t_ms - t0 < cfg.baseline_ms);
    let before = if pre_end == 0 { samples[0].accel() } else { mean_accel(&trace.slice(0, pre_end)?.accels()) };

    let width = ((cfg.tail_ms / trace.period_ms()).round() as usize).max(1);
    let after = spike + 1;
    let rest = (after..=trace.len().saturating_sub(width))
        .rev()
        .map(|start| trace.slice(start, start + width))
        .find(|w| w.as_ref().is_ok_and(resting))
        .ok_or(DetectorError::NoStaticTail)??;
    let after_pose = mean_accel(&rest.accels());
    debug_assert!(after_pose.norm() < STATIC_AMPLITUDE_LIMIT);
    Ok(before.angle_deg(after_pose) > cfg.angle_deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_rotation, Keyframe, Orientation};
    use crate::vec3::Vec3;
    use proptest::prelude::*;

    fn rotation(keys: &[Keyframe], total_ms: f64) -> Trace {
        generate_rotation(keys, total_ms, 0.0, 1, 1000.0).unwrap()
    }

    #[test]
    fn static_trace_has_no_tilt() {
        let t = rotation(&[Keyframe::new(0.0, 0.0, 0.0)], 1500.0);
        assert!(detect_tilts(&t, &TiltConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn up_tilt_and_return() {
        let keys = [
            Keyframe::new(300.0, 0.0, 0.0),
            Keyframe::new(700.0, 40.0, 0.0),
            Keyframe::new(900.0, 40.0, 0.0),
            Keyframe::new(1300.0, 0.0, 0.0),
        ];
        let events = detect_tilts(&rotation(&keys, 1800.0), &TiltConfig::default()).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].direction, TiltDirection::Up);
        assert!((events[0].peak_deg - 40.0).abs() < 1.0, "{events:?}");
        assert!(events[0].start_ms < 700.0 && events[0].end_ms > 900.0);
    }

    #[test]
    fn lateral_tilts() {
        let keys = [
            Keyframe::new(300.0, 0.0, 0.0),
            Keyframe::new(700.0, 0.0, -35.0),
            Keyframe::new(1100.0, 0.0, 0.0),
            Keyframe::new(2000.0, 0.0, 0.0),
            Keyframe::new(2400.0, 0.0, 35.0),
            Keyframe::new(2800.0, 0.0, 0.0),
        ];
        let events = detect_tilts(&rotation(&keys, 3300.0), &TiltConfig::default()).unwrap();
        let dirs: Vec<_> = events.iter().map(|e| e.direction).collect();
        assert_eq!(dirs, [TiltDirection::Left, TiltDirection::Right]);
    }

    #[test]
    fn overlapping_tilts_keep_the_larger() {
        let keys = [
            Keyframe::new(300.0, 0.0, 0.0),
            Keyframe::new(700.0, 40.0, 0.0),
            Keyframe::new(800.0, 40.0, 0.0),
            Keyframe::new(1300.0, -30.0, 0.0),
            Keyframe::new(1400.0, -30.0, 0.0),
            Keyframe::new(1800.0, 0.0, 0.0),
        ];
        let events = detect_tilts(&rotation(&keys, 2300.0), &TiltConfig::default()).unwrap();
        assert_eq!(events.len(), 1, "{events:?}");
        assert_eq!(events[0].direction, TiltDirection::Up);
    }

    fn jitter_window(scale: f64, n: usize) -> Trace {
        let accels: Vec<Vec3> = (0..n)
            .map(|i| {
                let u = ((i as f64 * 12.9898).sin() * 43758.5453).rem_euclid(1.0);
                Vec3::new(0.0, 0.0, GRAVITY + scale * (2.0 * u - 1.0))
            })
            .collect();
        Trace::from_accels(&accels, 1000.0, true).unwrap()
    }

    #[test]
    fn motion_states_by_deviation() {
        let cfg = MotionConfig::default();
        assert_eq!(classify_motion(&jitter_window(0.0, 1000), &cfg).unwrap(), MotionState::Stopped);
        // uniform noise on [-s, s] has deviation s / sqrt(3)
        let holding = jitter_window(1.5, 1000);
        let d = amplitude_deviation(&holding);
        assert!(d > 0.3 && d < 1.5, "{d}");
        assert_eq!(classify_motion(&holding, &cfg).unwrap(), MotionState::Holding);

        // 2 Hz sinusoid of amplitude A has deviation A / sqrt(2)
        let accels: Vec<Vec3> = (0..1000)
            .map(|i| Vec3::new(0.0, 0.0, GRAVITY + 7.0 * (2.0 * std::f64::consts::PI * 2.0 * i as f64 / 1000.0).sin()))
            .collect();
        let running = Trace::from_accels(&accels, 1000.0, true).unwrap();
        assert!((amplitude_deviation(&running) - 7.0 / 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(classify_motion(&running, &cfg).unwrap(), MotionState::Running);

        assert!(matches!(classify_motion(&jitter_window(0.0, 500), &cfg), Err(DetectorError::WindowTooShort { .. })));
    }

    #[test]
    fn picked_on_stopped_to_holding() {
        let mut accels = jitter_window(0.0, 1000).accels();
        accels.extend(jitter_window(1.5, 2000).accels());
        let t = Trace::from_accels(&accels, 1000.0, true).unwrap();
        let states = motion_states(&t, &MotionConfig::default()).unwrap();
        assert_eq!(states, [MotionState::Stopped, MotionState::Picked, MotionState::Holding]);
    }

    fn fall_trace(end: Orientation, spike: f64) -> Trace {
        let mut accels = vec![Orientation::LEVEL.gravity_reading(); 300];
        accels.extend(vec![Vec3::new(0.0, 0.0, 0.5); 200]);
        accels.extend(vec![Vec3::new(spike, 0.0, 0.0); 20]);
        accels.extend(vec![end.gravity_reading(); 500]);
        Trace::from_accels(&accels, 1000.0, true).unwrap()
    }

    #[test]
    fn fall_detection() {
        let cfg = FallConfig::default();
        let quiet = fall_trace(Orientation::LEVEL, 0.0);
        assert!(!detect_fall(&quiet, &cfg).unwrap());
        assert!(!detect_fall(&fall_trace(Orientation::LEVEL, 40.0), &cfg).unwrap());
        assert!(detect_fall(&fall_trace(Orientation::new(90.0, 0.0), 40.0), &cfg).unwrap());
        assert!(!detect_fall(&fall_trace(Orientation::new(30.0, 0.0), 40.0), &cfg).unwrap());

        let mut accels = vec![Orientation::LEVEL.gravity_reading(); 300];
        accels.extend(vec![Vec3::new(40.0, 0.0, 0.0); 20]);
        accels.extend(vec![Vec3::new(15.0, 0.0, 0.0); 300]);
        let t = Trace::from_accels(&accels, 1000.0, true).unwrap();
        assert_eq!(detect_fall(&t, &cfg), Err(DetectorError::NoStaticTail));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn tilt_intervals_do_not_overlap(
            poses in prop::collection::vec((-80.0f64..80.0, -80.0f64..80.0), 1..6),
            noise in 0.0f64..0.3,
            seed in any::<u64>(),
        ) {
            let mut keys = vec![Keyframe::new(200.0, 0.0, 0.0)];
            for (i, (p, r)) in poses.iter().enumerate() {
                keys.push(Keyframe::new(500.0 + 400.0 * i as f64, *p, *r));
            }
            let total = 800.0 + 400.0 * poses.len() as f64;
            let t = generate_rotation(&keys, total, noise, seed, 1000.0).unwrap();
            let cfg = TiltConfig::default();
            let events = detect_tilts(&t, &cfg).unwrap();
            for e in &events {
                prop_assert!(e.peak_deg > cfg.threshold_deg);
                prop_assert!(e.start_ms < e.end_ms);
            }
            for w in events.windows(2) {
                prop_assert!(w[0].end_ms < w[1].start_ms);
            }
        }

        #[test]
        fn motion_state_monotone_in_jitter(a in 0.0f64..9.0, b in 0.0f64..9.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let cfg = MotionConfig::default();
            let s_lo = classify_motion(&jitter_window(lo, 1000), &cfg).unwrap();
            let s_hi = classify_motion(&jitter_window(hi, 1000), &cfg).unwrap();
            prop_assert!(s_hi >= s_lo);
        }

        #[test]
        fn fall_implies_spike(spike in 0.0f64..60.0, pitch in -180.0f64..180.0) {
            let t = fall_trace(Orientation::new(pitch, 0.0), spike);
            let cfg = FallConfig::default();
            if let Ok(true) = detect_fall(&t, &cfg) {
                prop_assert!(t.amplitudes().iter().any(|&a| a > cfg.spike));
            }
        }
    }
}
