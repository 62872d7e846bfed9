//! Ground-truth synthetic gestures.
//!
//! Position follows a minimum-jerk profile from rest to rest, the device
//! orientation blends between two poses with the same quintic, and the
//! accelerometer reading is the specific force (motion plus the reaction to
//! gravity) expressed in the rotating device frame, plus Gaussian noise.
//!
//! Frames: the world frame coincides with the device frame at the start
//! pose, with gravity read as +1g on z. Pitch tilts the y axis toward the
//! vertical and roll tilts the x axis, so a static device reads
//! `g·(sin roll·cos pitch, sin pitch, cos roll·cos pitch)`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::signal::{Trace, GRAVITY};
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid gesture spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Orientation {
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl Orientation {
    pub const LEVEL: Orientation = Orientation { pitch_deg: 0.0, roll_deg: 0.0 };

    pub const fn new(pitch_deg: f64, roll_deg: f64) -> Self {
        Self { pitch_deg, roll_deg }
    }

    fn lerp(self, other: Orientation, s: f64) -> Orientation {
        Orientation::new(
            self.pitch_deg + (other.pitch_deg - self.pitch_deg) * s,
            self.roll_deg + (other.roll_deg - self.roll_deg) * s,
        )
    }

    /// Expresses a world-frame vector in the device frame.
    pub fn world_to_device(self, w: Vec3) -> Vec3 {
        let (sp, cp) = self.pitch_deg.to_radians().sin_cos();
        let (sr, cr) = self.roll_deg.to_radians().sin_cos();
        let u = Vec3::new(w.x, cp * w.y + sp * w.z, -sp * w.y + cp * w.z);
        Vec3::new(cr * u.x + sr * u.z, u.y, -sr * u.x + cr * u.z)
    }

    /// Static accelerometer reading in this pose.
    pub fn gravity_reading(self) -> Vec3 {
        self.world_to_device(Vec3::new(0.0, 0.0, GRAVITY))
    }
}

/// Minimum-jerk blend `10τ³ − 15τ⁴ + 6τ⁵`.
pub fn min_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Second derivative of [`min_jerk`] with respect to τ.
pub fn min_jerk_accel(tau: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) {
        return 0.0;
    }
    tau * (60.0 + tau * (-180.0 + 120.0 * tau))
}

/// One point-to-point gesture starting from rest at the chest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureSpec {
    pub displacement: Vec3,
    pub duration_ms: f64,
    pub start: Orientation,
    pub end: Orientation,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Rest before the movement starts.
    pub lead_ms: f64,
    /// Rest after the movement ends.
    pub tail_ms: f64,
}

impl GestureSpec {
    pub fn new(displacement: Vec3, duration_ms: f64) -> Self {
        Self {
            displacement,
            duration_ms,
            start: Orientation::LEVEL,
            end: Orientation::LEVEL,
            noise_sigma: 0.0,
            seed: 0,
            lead_ms: 300.0,
            tail_ms: 300.0,
        }
    }

    pub fn with_end(mut self, end: Orientation) -> Self {
        self.end = end;
        self
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    pub fn with_padding(mut self, lead_ms: f64, tail_ms: f64) -> Self {
        self.lead_ms = lead_ms;
        self.tail_ms = tail_ms;
        self
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if !(self.duration_ms.is_finite() && self.duration_ms > 0.0) {
            return bad("duration must be positive");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise sigma must be non-negative");
        }
        if !(self.lead_ms >= 0.0 && self.tail_ms >= 0.0 && self.lead_ms.is_finite() && self.tail_ms.is_finite()) {
            return bad("padding must be non-negative");
        }
        let angles = [self.start.pitch_deg, self.start.roll_deg, self.end.pitch_deg, self.end.roll_deg];
        if !self.displacement.is_finite() || angles.iter().any(|a| !a.is_finite()) {
            return bad("displacement and orientations must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub displacement: Vec3,
    pub end: Orientation,
    pub onset_index: usize,
    pub offset_index: usize,
    pub onset_ms: f64,
    pub offset_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGesture {
    pub trace: Trace,
    pub truth: GroundTruth,
}

pub fn generate(spec: &GestureSpec, sample_rate_hz: f64) -> Result<SyntheticGesture, SynthError> {
    spec.validate()?;
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(SynthError::InvalidSpec("sample rate must be positive".into()));
    }
    let period = 1000.0 / sample_rate_hz;
    let n = ((spec.lead_ms + spec.duration_ms + spec.tail_ms) / period).round() as usize;
    let n = n.max(1);
    let t_s = spec.duration_ms / 1000.0;
    let accel_scale = 1.0 / (t_s * t_s);
    let noise = Noise::new(spec.noise_sigma, spec.seed);
    let mut noise = noise;
    let accels: Vec<Vec3> = (0..n)
        .map(|i| {
            let t = i as f64 * period;
            let tau = (t - spec.lead_ms) / spec.duration_ms;
            let motion = spec.displacement * (min_jerk_accel(tau) * accel_scale);
            let pose = spec.start.lerp(spec.end, min_jerk(tau));
            pose.world_to_device(motion + Vec3::new(0.0, 0.0, GRAVITY)) + noise.draw()
        })
        .collect();
    let trace =
        Trace::from_accels(&accels, sample_rate_hz, true).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let onset_index = ((spec.lead_ms / period).round() as usize).min(n - 1);
    let offset_index = (((spec.lead_ms + spec.duration_ms) / period).round() as usize).min(n - 1);
    Ok(SyntheticGesture {
        trace,
        truth: GroundTruth {
            displacement: spec.displacement,
            end: spec.end,
            onset_index,
            offset_index,
            onset_ms: spec.lead_ms,
            offset_ms: spec.lead_ms + spec.duration_ms,
        },
    })
}

struct Noise {
    rng: ChaCha8Rng,
    dist: Option<Normal<f64>>,
}

impl Noise {
    fn new(sigma: f64, seed: u64) -> Self {
        let dist = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma validated"));
        Self { rng: ChaCha8Rng::seed_from_u64(seed), dist }
    }

    fn draw(&mut self) -> Vec3 {
        match &self.dist {
            Some(d) => Vec3::new(d.sample(&mut self.rng), d.sample(&mut self.rng), d.sample(&mut self.rng)),
            None => Vec3::ZERO,
        }
    }
}

/// A pose the device reaches at `t_ms`, used by [`generate_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub t_ms: f64,
    pub pose: Orientation,
}

impl Keyframe {
    pub const fn new(t_ms: f64, pitch_deg: f64, roll_deg: f64) -> Self {
        Self { t_ms, pose: Orientation::new(pitch_deg, roll_deg) }
    }
}

/// Pure rotation without translation: the pose holds the first keyframe,
/// blends between consecutive keyframes with the min-jerk profile, and
/// holds the last one until `total_ms`.
pub fn generate_rotation(
    keyframes: &[Keyframe],
    total_ms: f64,
    noise_sigma: f64,
    seed: u64,
    sample_rate_hz: f64,
) -> Result<Trace, SynthError> {
    if keyframes.is_empty() {
        return Err(SynthError::InvalidSpec("at least one keyframe is required".into()));
    }
    if keyframes.windows(2).any(|w| !(w[1].t_ms > w[0].t_ms)) {
        return Err(SynthError::InvalidSpec("keyframe times must increase".into()));
    }
    if !(noise_sigma >= 0.0 && total_ms > 0.0) {
        return Err(SynthError::InvalidSpec("noise and duration must be non-negative".into()));
    }
    let period = 1000.0 / sample_rate_hz;
    let n = ((total_ms / period).round() as usize).max(1);
    let mut noise = Noise::new(noise_sigma, seed);
    let pose_at = |t: f64| {
        if t <= keyframes[0].t_ms {
            return keyframes[0].pose;
        }
        for w in keyframes.windows(2) {
            if t <= w[1].t_ms {
                let tau = (t - w[0].t_ms) / (w[1].t_ms - w[0].t_ms);
                return w[0].pose.lerp(w[1].pose, min_jerk(tau));
            }
        }
        keyframes[keyframes.len() - 1].pose
    };
    let accels: Vec<Vec3> = (0..n).map(|i| pose_at(i as f64 * period).gravity_reading() + noise.draw()).collect();
    Trace::from_accels(&accels, sample_rate_hz, true).map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

/// Spread applied to each corpus sample around its class prototype.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    /// Standard deviation per displacement axis, metres.
    pub displacement_m: f64,
    /// Standard deviation per end-orientation angle, degrees.
    pub orientation_deg: f64,
}

impl Jitter {
    pub const NONE: Jitter = Jitter { displacement_m: 0.0, orientation_deg: 0.0 };

    /// Displacement jitter with the default 3° orientation spread.
    pub fn displacement(meters: f64) -> Self {
        Self { displacement_m: meters, orientation_deg: DEFAULT_ORIENTATION_JITTER_DEG }
    }
}

pub const DEFAULT_ORIENTATION_JITTER_DEG: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGesture {
    pub label: String,
    pub spec: GestureSpec,
    pub gesture: SyntheticGesture,
}

/// `n_per_class` jittered variants of every prototype, class by class.
///
/// Sample `j` of a class draws its jitter from a ChaCha stream keyed by the
/// corpus seed and its global index, and uses `prototype.seed + j` as its
/// noise seed, so the output does not depend on scheduling.
pub fn corpus(
    classes: &[(String, GestureSpec)],
    n_per_class: usize,
    jitter: Jitter,
    seed: u64,
    sample_rate_hz: f64,
    exec: Execution,
) -> Result<Vec<LabeledGesture>, SynthError> {
    if n_per_class == 0 {
        return Err(SynthError::InvalidSpec("n_per_class must be at least 1".into()));
    }
    if !(jitter.displacement_m >= 0.0 && jitter.orientation_deg >= 0.0) {
        return Err(SynthError::InvalidSpec("jitter must be non-negative".into()));
    }
    let total = classes.len() * n_per_class;
    exec::map_range(exec, total, |index| {
        let (label, proto) = &classes[index / n_per_class];
        let j = index % n_per_class;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut gauss = |sigma: f64| if sigma > 0.0 { sigma * standard_normal(&mut rng) } else { 0.0 };
        let mut spec = *proto;
        spec.displacement = proto.displacement
            + Vec3::new(gauss(jitter.displacement_m), gauss(jitter.displacement_m), gauss(jitter.displacement_m));
        spec.end = Orientation::new(
            proto.end.pitch_deg + gauss(jitter.orientation_deg),
            proto.end.roll_deg + gauss(jitter.orientation_deg),
        );
        spec.seed = proto.seed.wrapping_add(j as u64);
        let gesture = generate(&spec, sample_rate_hz)?;
        Ok(LabeledGesture { label: label.clone(), spec, gesture })
    })
    .into_iter()
    .collect()
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    rand_distr::StandardNormal.sample(rng)
}

/// The twelve body-part gestures of the final prototype, as synthetic
/// prototypes. Coordinates: x to the user's right, y forward, z up.
pub const BODY_PARTS: [(&str, [f64; 3], f64, [f64; 2]); 12] = [
    ("Mouth", [0.00, 0.12, 0.30], 700.0, [20.0, 0.0]),
    ("Chest", [0.00, 0.20, 0.00], 500.0, [0.0, 0.0]),
    ("Elbow", [-0.25, 0.00, -0.20], 800.0, [0.0, -30.0]),
    ("Navel", [0.00, 0.08, -0.28], 700.0, [-25.0, 0.0]),
    ("Neck", [0.00, 0.05, 0.22], 700.0, [-60.0, 0.0]),
    ("Head", [0.00, -0.05, 0.50], 900.0, [0.0, 35.0]),
    ("Back", [0.30, -0.25, -0.10], 900.0, [0.0, 60.0]),
    ("Ear", [0.20, 0.00, 0.35], 800.0, [0.0, 80.0]),
    ("Hip", [0.25, 0.00, -0.30], 800.0, [-30.0, 30.0]),
    ("Leg", [0.15, 0.10, -0.55], 1000.0, [-70.0, 0.0]),
    ("Wrist", [-0.30, 0.25, -0.05], 700.0, [60.0, 0.0]),
    ("Eye", [0.05, 0.10, 0.38], 750.0, [75.0, 0.0]),
];

/// Five well-spread classes used for the reduced gesture set.
pub const FIVE_CLASS_SUBSET: [&str; 5] = ["Mouth", "Navel", "Neck", "Ear", "Wrist"];

pub const DEFAULT_CORPUS_NOISE: f64 = 0.05;

/// Body-part prototypes with noise, each with its own noise seed.
pub fn body_part_prototypes(seed: u64) -> Vec<(String, GestureSpec)> {
    BODY_PARTS
        .iter()
        .enumerate()
        .map(|(i, (label, d, t, end))| {
            let spec = GestureSpec::new(Vec3::from_array(*d), *t)
                .with_end(Orientation::new(end[0], end[1]))
                .with_noise(DEFAULT_CORPUS_NOISE, seed.wrapping_mul(1000).wrapping_add(i as u64 * 100));
            (label.to_string(), spec)
        })
        .collect()
}

pub fn subset(prototypes: &[(String, GestureSpec)], labels: &[&str]) -> Vec<(String, GestureSpec)> {
    prototypes.iter().filter(|(l, _)| labels.contains(&l.as_str())).cloned().collect()
}

pub const TRUTH_HEADER: &str = "file,label,dx,dy,dz,pitch_end,roll_end,onset_ms,offset_ms";

/// Sidecar ground-truth CSV for a written corpus.
pub fn truth_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a LabeledGesture)>) -> String {
    let mut out = format!("{TRUTH_HEADER}\n");
    for (file, g) in rows {
        let t = &g.gesture.truth;
        writeln!(
            out,
            "{file},{},{},{},{},{},{},{},{}",
            g.label,
            t.displacement.x,
            t.displacement.y,
            t.displacement.z,
            t.end.pitch_deg,
            t.end.roll_deg,
            t.onset_ms,
            t.offset_ms
        )
        .unwrap();
    }
    out
}

/// `(file, label)` pairs from a ground-truth CSV.
pub fn read_truth_labels(text: &str) -> Result<Vec<(String, String)>, crate::FormatError> {
    let mut reader = crate::format::csv_reader(text);
    let expected: Vec<&str> = TRUTH_HEADER.split(',').collect();
    crate::format::check_header(&mut reader, &expected)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::amplitude;
    use approx::assert_abs_diff_eq;

    #[test]
    fn still_gesture_is_gravity_only() {
        let g = generate(&GestureSpec::new(Vec3::ZERO, 500.0), 1000.0).unwrap();
        assert!(g.trace.samples().iter().all(|s| s.accel() == Vec3::new(0.0, 0.0, GRAVITY)));
        assert!(g.trace.samples().iter().all(|s| (amplitude(s) - GRAVITY).abs() <= 1e-9));
    }

    #[test]
    fn peak_acceleration_matches_analytic_maximum() {
        // s'' peaks at τ = (3 − √3)/6 with value 10/√3
        let tau = (3.0 - 3f64.sqrt()) / 6.0;
        assert_abs_diff_eq!(min_jerk_accel(tau), 10.0 / 3f64.sqrt(), epsilon = 1e-12);
        let g = generate(&GestureSpec::new(Vec3::new(0.0, 0.5, 0.0), 1000.0), 1000.0).unwrap();
        let peak = g.trace.samples().iter().map(|s| s.ay.abs()).fold(0.0, f64::max);
        assert_abs_diff_eq!(peak, 2.887, epsilon = 1e-3);
    }

    #[test]
    fn boundaries_are_at_rest() {
        let spec = GestureSpec::new(Vec3::new(0.3, -0.2, 0.1), 600.0).with_end(Orientation::new(40.0, -20.0));
        let g = generate(&spec, 1000.0).unwrap();
        let s = g.trace.samples();
        assert_eq!(s.len(), 1200);
        assert_eq!(g.truth.onset_index, 300);
        assert_eq!(g.truth.offset_index, 900);
        assert_eq!(g.truth.displacement, spec.displacement);
        // dynamic part vanishes at onset and offset: only gravity remains
        assert_abs_diff_eq!((s[300].accel() - Orientation::LEVEL.gravity_reading()).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((s[900].accel() - spec.end.gravity_reading()).norm(), 0.0, epsilon = 1e-9);
        // min-jerk velocity at both ends is zero
        assert_eq!(min_jerk(0.0), 0.0);
        assert_eq!(min_jerk(1.0), 1.0);
    }

    #[test]
    fn gravity_reading_convention() {
        let g = Orientation::new(30.0, 0.0).gravity_reading();
        assert_abs_diff_eq!(g.y, GRAVITY * 0.5, epsilon = 1e-12);
        let g = Orientation::new(0.0, 90.0).gravity_reading();
        assert_abs_diff_eq!(g.x, GRAVITY, epsilon = 1e-12);
        let g = Orientation::new(0.0, 180.0).gravity_reading();
        assert_abs_diff_eq!(g.z, -GRAVITY, epsilon = 1e-12);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&GestureSpec::new(Vec3::ZERO, 0.0), 1000.0).is_err());
        assert!(generate(&GestureSpec::new(Vec3::ZERO, 100.0).with_noise(-1.0, 0), 1000.0).is_err());
        assert!(generate_rotation(&[], 100.0, 0.0, 0, 1000.0).is_err());
    }

    #[test]
    fn corpus_single_unjittered_sample_equals_prototype() {
        let protos = body_part_prototypes(3);
        let c = corpus(&protos, 1, Jitter::NONE, 99, 1000.0, Execution::Parallel).unwrap();
        assert_eq!(c.len(), 12);
        for (item, (label, proto)) in c.iter().zip(&protos) {
            assert_eq!(&item.label, label);
            assert_eq!(item.spec, *proto);
            assert_eq!(item.gesture, generate(proto, 1000.0).unwrap());
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let protos = subset(&body_part_prototypes(5), &FIVE_CLASS_SUBSET);
        let a = corpus(&protos, 3, Jitter::displacement(0.03), 11, 1000.0, Execution::Parallel).unwrap();
        let b = corpus(&protos, 3, Jitter::displacement(0.03), 11, 1000.0, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let files: Vec<String> = (0..a.len()).map(|i| format!("g{i}.csv")).collect();
        let ta = truth_csv(files.iter().map(String::as_str).zip(&a));
        let tb = truth_csv(files.iter().map(String::as_str).zip(&b));
        assert_eq!(ta, tb);
        let labels = read_truth_labels(&ta).unwrap();
        assert_eq!(labels.len(), 15);
        assert_eq!(labels[0], ("g0.csv".to_string(), "Mouth".to_string()));
        // different corpus seed moves the jitter
        let c = corpus(&protos, 3, Jitter::displacement(0.03), 12, 1000.0, Execution::Sequential).unwrap();
        assert_ne!(a[0].spec.displacement, c[0].spec.displacement);
    }

    #[test]
    fn rotation_path_holds_keyframes() {
        let t = generate_rotation(
            &[Keyframe::new(100.0, 0.0, 0.0), Keyframe::new(400.0, 40.0, 0.0)],
            600.0,
            0.0,
            0,
            1000.0,
        )
        .unwrap();
        assert_eq!(t.len(), 600);
        assert_eq!(t.samples()[0].accel(), Orientation::LEVEL.gravity_reading());
        assert_abs_diff_eq!(t.samples()[599].ay, GRAVITY * 40f64.to_radians().sin(), epsilon = 1e-12);
    }
}
