//! Accelerometer gesture recognition for body-referenced shortcuts.
//!
//! The pipeline runs from raw traces ([`signal`]) through motion analysis
//! ([`kinematics`]) to two recognizers: a position-based one that matches the
//! device's end point against body templates ([`position`]) and a
//! feature-based one with kNN and naive Bayes ([`classify`]). [`shortcut`]
//! turns rankings into application suggestions and runs the confirm window.
//! [`synth`] generates ground-truth gestures for testing and evaluation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod detectors;
pub mod evaluation;
pub mod exec;
pub mod format;
pub mod kinematics;
pub mod position;
pub mod shortcut;
pub mod signal;
pub mod synth;
pub mod vec3;

pub use exec::Execution;
pub use format::FormatError;
pub use vec3::Vec3;
