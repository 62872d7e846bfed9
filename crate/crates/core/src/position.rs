//! Position-based recognition: a gesture is the integrated endpoint of the
//! movement plus the rotation class of its final pose, matched against
//! templates of the same class.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::format::{check_header, comment_value, csv_reader, parse_f64, FormatError};
use crate::kinematics::{self, KinematicsError, MovementConfig, RotationAngles};
use crate::signal::Trace;
use crate::vec3::Vec3;

/// Largest endpoint distance from the chest accepted in a template.
pub const MAX_REACH_M: f64 = 1.5;
pub const MAX_USER_HEIGHT_M: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PositionError {
    #[error("height {0} m is outside (0, 2.5]")]
    InvalidHeight(f64),
    #[error("rotation class {0} is outside 1..=6")]
    InvalidRotationClass(u8),
    #[error("template `{0}` has a non-finite endpoint or one beyond arm's reach")]
    InvalidTemplate(String),
    #[error("duplicate template label `{0}`")]
    DuplicateLabel(String),
    #[error("training sample with an empty label")]
    EmptyLabel,
    #[error("no training samples")]
    NoTrainingSamples,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// One of six 90° sectors of the final orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RotationClass(u8);

impl RotationClass {
    pub const MINIMAL: RotationClass = RotationClass(1);

    pub fn new(id: u8) -> Result<Self, PositionError> {
        if (1..=6).contains(&id) {
            Ok(Self(id))
        } else {
            Err(PositionError::InvalidRotationClass(id))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = RotationClass> {
        (1..=6).map(RotationClass)
    }
}

impl fmt::Display for RotationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Quantizes a final orientation into its rotation class.
///
/// | class | condition                                   |
/// |-------|---------------------------------------------|
/// | 1     | `|pitch| ≤ 45` and `|roll| ≤ 45`, upright   |
/// | 2     | pitch > 45, pitch dominates                 |
/// | 3     | pitch < −45, pitch dominates                |
/// | 4     | roll > 45                                   |
/// | 5     | roll < −45                                  |
/// | 6     | `|pitch| ≤ 45` and `|roll| ≤ 45`, inverted  |
///
/// When both tilts exceed 45° the larger one decides; equal magnitudes go to
/// pitch, the lower id.
pub fn rotation_class_of(angles: &RotationAngles) -> RotationClass {
    let (pitch, roll) = (angles.pitch(), angles.roll());
    let id = if pitch.abs() <= 45.0 && roll.abs() <= 45.0 {
        if angles.inverted() {
            6
        } else {
            1
        }
    } else if pitch.abs() >= roll.abs() {
        if pitch > 0.0 {
            2
        } else {
            3
        }
    } else if roll > 0.0 {
        4
    } else {
        5
    };
    RotationClass(id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureTemplate {
    pub label: String,
    pub endpoint: Vec3,
    pub rotation_class: RotationClass,
}

impl GestureTemplate {
    pub fn new(label: impl Into<String>, endpoint: Vec3, rotation_class: RotationClass) -> Result<Self, PositionError> {
        let label = label.into();
        if !endpoint.is_finite() || endpoint.norm() > MAX_REACH_M {
            return Err(PositionError::InvalidTemplate(label));
        }
        Ok(Self { label, endpoint, rotation_class })
    }
}

/// Default templates recorded on a model of known height.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    model_height: f64,
    templates: Vec<GestureTemplate>,
}

const BODY_MODEL_HEADER: [&str; 5] = ["label", "x", "y", "z", "rotation_class"];
const DEFAULT_BODY_MODEL: &str = include_str!("../data/body_model.csv");

impl BodyModel {
    pub fn new(model_height: f64, templates: Vec<GestureTemplate>) -> Result<Self, PositionError> {
        if !(model_height > 0.0 && model_height.is_finite()) {
            return Err(PositionError::InvalidHeight(model_height));
        }
        let mut seen = HashSet::new();
        for t in &templates {
            if !seen.insert(t.label.as_str()) {
                return Err(PositionError::DuplicateLabel(t.label.clone()));
            }
        }
        Ok(Self { model_height, templates })
    }

    /// The ten shipped templates, measured at 1.80 m.
    pub fn default_model() -> Self {
        read_body_model(DEFAULT_BODY_MODEL).expect("shipped body model parses")
    }

    pub fn model_height(&self) -> f64 {
        self.model_height
    }

    pub fn templates(&self) -> &[GestureTemplate] {
        &self.templates
    }

    pub fn template(&self, label: &str) -> Option<&GestureTemplate> {
        self.templates.iter().find(|t| t.label == label)
    }
}

/// Rescales every endpoint by `user_height / model_height` (eight-head rule:
/// body proportions scale with stature).
pub fn scale_templates(model: &BodyModel, user_height: f64) -> Result<BodyModel, PositionError> {
    if !(user_height > 0.0 && user_height <= MAX_USER_HEIGHT_M) {
        return Err(PositionError::InvalidHeight(user_height));
    }
    let factor = user_height / model.model_height;
    let templates =
        model.templates.iter().map(|t| GestureTemplate { endpoint: t.endpoint * factor, ..t.clone() }).collect();
    Ok(BodyModel { model_height: user_height, templates })
}

/// Nearest point among candidates of the query's class; first wins ties.
fn nearest_in_class<'a>(
    endpoint: Vec3,
    rclass: RotationClass,
    candidates: impl Iterator<Item = (&'a str, Vec3, RotationClass)>,
) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for (label, point, class) in candidates {
        if class != rclass {
            continue;
        }
        let d = endpoint.distance(point);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((label, d));
        }
    }
    best.map(|(label, _)| label)
}

/// `None` means the gesture is not recognized: no template shares its class.
pub fn classify_default(endpoint: Vec3, rclass: RotationClass, model: &BodyModel) -> Option<&str> {
    nearest_in_class(endpoint, rclass, model.templates.iter().map(|t| (t.label.as_str(), t.endpoint, t.rotation_class)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonalGesture {
    pub centroid: Vec3,
    pub rotation_class: RotationClass,
    pub training_count: usize,
}

/// Per-label centroids learned from one user's examples, in label order.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalGestureSet {
    gestures: BTreeMap<String, PersonalGesture>,
}

impl PersonalGestureSet {
    pub fn get(&self, label: &str) -> Option<&PersonalGesture> {
        self.gestures.get(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PersonalGesture)> {
        self.gestures.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.gestures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gestures.is_empty()
    }
}

/// Centroid of the endpoints and modal rotation class per label (ties go to
/// the lowest class id).
pub fn train_personal(samples: &[(String, Vec3, RotationClass)]) -> Result<PersonalGestureSet, PositionError> {
    if samples.is_empty() {
        return Err(PositionError::NoTrainingSamples);
    }
    let mut grouped: BTreeMap<String, (Vec3, [usize; 6], usize)> = BTreeMap::new();
    for (label, endpoint, class) in samples {
        if label.trim().is_empty() {
            return Err(PositionError::EmptyLabel);
        }
        let entry = grouped.entry(label.clone()).or_insert((Vec3::ZERO, [0; 6], 0));
        entry.0 += *endpoint;
        entry.1[(class.id() - 1) as usize] += 1;
        entry.2 += 1;
    }
    let gestures = grouped
        .into_iter()
        .map(|(label, (sum, votes, count))| {
            let mut modal = 0;
            for (i, &v) in votes.iter().enumerate() {
                if v > votes[modal] {
                    modal = i;
                }
            }
            let gesture = PersonalGesture {
                centroid: sum * (1.0 / count as f64),
                rotation_class: RotationClass(modal as u8 + 1),
                training_count: count,
            };
            (label, gesture)
        })
        .collect();
    Ok(PersonalGestureSet { gestures })
}

pub fn classify_personal(endpoint: Vec3, rclass: RotationClass, set: &PersonalGestureSet) -> Option<&str> {
    nearest_in_class(endpoint, rclass, set.gestures.iter().map(|(l, g)| (l.as_str(), g.centroid, g.rotation_class)))
}

/// What the position pipeline measures on one gesture trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionObservation {
    pub endpoint: Vec3,
    pub angles: RotationAngles,
    pub rotation_class: RotationClass,
}

/// Integrated endpoint plus final rotation class of a calibrated trace.
pub fn observe(trace: &Trace, cfg: &MovementConfig, tail_ms: f64) -> Result<PositionObservation, PositionError> {
    let movement = kinematics::analyze_movement(trace, cfg)?;
    let angles = kinematics::final_rotation(trace, tail_ms)?;
    Ok(PositionObservation { endpoint: movement.displacement(), angles, rotation_class: rotation_class_of(&angles) })
}

pub fn read_body_model(text: &str) -> Result<BodyModel, FormatError> {
    let height = comment_value(text, "model_height")
        .ok_or_else(|| FormatError::Invalid("missing `# model_height=` line".into()))?;
    let height = parse_f64(height, 1, "model_height")?;
    let mut reader = csv_reader(text);
    check_header(&mut reader, &BODY_MODEL_HEADER)?;
    let mut templates = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        let endpoint = Vec3::new(
            parse_f64(&record[1], line, "x")?,
            parse_f64(&record[2], line, "y")?,
            parse_f64(&record[3], line, "z")?,
        );
        let class: u8 =
            record[4].parse().map_err(|_| FormatError::parse(line, format!("bad rotation class `{}`", &record[4])))?;
        let class = RotationClass::new(class).map_err(|e| FormatError::parse(line, e.to_string()))?;
        let t =
            GestureTemplate::new(&record[0], endpoint, class).map_err(|e| FormatError::parse(line, e.to_string()))?;
        templates.push(t);
    }
    BodyModel::new(height, templates).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn write_body_model(model: &BodyModel) -> String {
    let mut out = format!("# model_height={}\n{}\n", model.model_height, BODY_MODEL_HEADER.join(","));
    for t in &model.templates {
        writeln!(out, "{},{},{},{},{}", t.label, t.endpoint.x, t.endpoint.y, t.endpoint.z, t.rotation_class).unwrap();
    }
    out
}
